use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cardforge::corpus::DocKind;
use cardforge::learn::{FeatureSpec, ModelKind, TrainedModel};
use cardforge::metadata::{CapabilityLevel, Platform};
use cardforge::report::strip_preamble;
use cardforge::synth;
use cardforge_cli::{cmd_card, cmd_evaluate, cmd_train, parse_feature_sets, CardConfig, ImageProvenance, RunConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cardforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("CARDFORGE_STOPWORDS").output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cards").join(name)
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut r = csv::ReaderBuilder::new().from_reader(strip_preamble(&text).as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

#[test]
fn trained_model_reloads_with_identical_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(&tmp.path().join("c"), 16, 5).unwrap();
    let out = tmp.path().join("out");
    let mut config = RunConfig::new(&manifest, &out);
    config.classifiers = vec![ModelKind::LogisticRegression];
    let written = cmd_train(&config).unwrap();
    assert!(written.iter().any(|p| p.ends_with("model.json")));
    let text = fs::read_to_string(out.join("model.json")).unwrap();
    let model = TrainedModel::from_json(&text).unwrap();
    assert_eq!(model.kind, ModelKind::LogisticRegression);
    assert_eq!(model.to_json().unwrap(), text.trim_end());
    let again = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
    for x in [[1e3, 20.0, 20.0, 5.0, 400.0, 1.0, 30.0], [9e4, 200.0, 150.0, 50.0, 30000.0, 1.33, 900.0]] {
        assert_eq!(model.predict_proba(&x).unwrap(), again.predict_proba(&x).unwrap());
    }
}

#[test]
fn train_rejects_scholarly_sets_on_news_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(&tmp.path().join("c"), 6, 5).unwrap();
    let mut config = RunConfig::new(&manifest, tmp.path().join("out"));
    config.feature_sets = parse_feature_sets("base+figure_position").unwrap();
    let err = cmd_train(&config).unwrap_err().to_string();
    assert!(err.contains("no eligible documents"), "{err}");
}

#[test]
fn evaluate_writes_grid_and_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_scholarly_corpus(&tmp.path().join("c"), 20, 0.8, 9).unwrap();
    let out = tmp.path().join("out");
    let mut config = RunConfig::new(&manifest, &out);
    config.classifiers = vec![ModelKind::GaussianNb, ModelKind::DecisionTree];
    config.feature_sets = parse_feature_sets("base,base+figure_position,base+section").unwrap();
    config.folds = 4;
    cmd_evaluate(&config).unwrap();

    let grid = csv_rows(&out.join("grid.csv"));
    assert_eq!(grid.len(), 2 * 3);
    assert_eq!(grid.iter().filter(|r| r[4] == "true").count(), 1);
    let curves = csv_rows(&out.join("curves.csv"));
    let approaches: std::collections::BTreeSet<&str> = curves.iter().map(|r| r[0].as_str()).collect();
    assert!(approaches.contains("random") && approaches.contains("last_figure"));
    // 2 baselines + 6 cells, 21 thresholds each
    assert_eq!(curves.len(), 8 * 21);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("curves.json")).unwrap()).unwrap();
    assert_eq!(json["header"]["tool"], "cardforge");
    assert_eq!(json["header"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn threshold_one_gives_perfect_scores() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(&tmp.path().join("c"), 10, 2).unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "evaluate",
        "--corpus",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--thresholds",
        "1.0",
        "--folds",
        "3",
        "--format",
        "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.join("curves.json").exists());
    for r in csv_rows(&out.join("curves.csv")) {
        assert_eq!((r[1].as_str(), r[2].as_str(), r[3].as_str()), ("1", "1", "1"), "{r:?}");
    }
}

#[test]
fn news_corpus_skips_scholarly_approaches() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(&tmp.path().join("c"), 10, 2).unwrap();
    let out = tmp.path().join("out");
    let o = run(&[
        "evaluate",
        "--corpus",
        manifest.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--feature-sets",
        "base,base+figure_position",
        "--folds",
        "3",
        "--trials",
        "20",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("skipping last_figure"), "{err}");
    assert!(err.contains("skipping feature set base+figure_position"), "{err}");
    let grid = csv_rows(&out.join("grid.csv"));
    assert_eq!(grid.len(), 1);
    let curves = csv_rows(&out.join("curves.csv"));
    let random: Vec<_> = curves.iter().filter(|r| r[0] == "random").collect();
    assert_eq!(random.len(), 21);
}

#[test]
fn census_of_empty_corpus_names_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = tmp.path().join("manifest.jsonl");
    fs::write(&manifest, "").unwrap();
    let o = run(&["census", "--corpus", manifest.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("lists no documents") && err.contains("manifest.jsonl"), "{err}");
}

#[test]
fn census_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(&tmp.path().join("c"), 8, 2).unwrap();
    let out = tmp.path().join("out");
    let o = run(&["census", "--corpus", manifest.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["census.json", "census_categories.csv", "census_capability.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn missing_stopword_file_from_env_is_an_error() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_scholarly_corpus(&tmp.path().join("c"), 4, 0.8, 2).unwrap();
    let o = bin()
        .args(["features", "--corpus", manifest.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()])
        .env("CARDFORGE_STOPWORDS", tmp.path().join("absent.txt"))
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(stderr(&o).contains("absent.txt"), "{}", stderr(&o));
}

#[test]
fn card_uses_metadata_image() {
    let cards = cmd_card(&CardConfig {
        html_path: fixture("01_full_ogp.html"),
        base_url: "https://news.example.org/harbor".into(),
        model_path: None,
        images_path: None,
        doc_kind: DocKind::News,
    })
    .unwrap();
    assert_eq!(cards.len(), 2);
    for c in &cards {
        assert_eq!(c.image_provenance, ImageProvenance::Metadata);
        assert_eq!(c.image.as_deref(), Some("https://news.example.org/img/harbor.jpg"));
        assert_eq!(c.domain.as_deref(), Some("news.example.org"));
        assert_eq!(c.capability, CapabilityLevel::Full);
        assert!(c.reason.is_none());
    }
}

#[test]
fn card_predicts_missing_image_with_model() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(&tmp.path().join("c"), 16, 5).unwrap();
    let mut config = RunConfig::new(&manifest, tmp.path().join("out"));
    config.feature_sets = vec![FeatureSpec::base()];
    cmd_train(&config).unwrap();

    let page = tmp.path().join("page");
    fs::create_dir_all(&page).unwrap();
    fs::write(page.join("big.png"), synth::encode_png(&synth::pattern_image(1, 220, 140))).unwrap();
    fs::write(page.join("small.png"), synth::encode_png(&synth::pattern_image(2, 30, 30))).unwrap();
    fs::write(
        page.join("index.html"),
        "<html><head><title>Plain page</title></head><body><img src=\"small.png\"><img src=\"big.png\"></body></html>",
    )
    .unwrap();
    let cards = cmd_card(&CardConfig {
        html_path: page.join("index.html"),
        base_url: "https://plain.test/post/".into(),
        model_path: Some(tmp.path().join("out/model.json")),
        images_path: None,
        doc_kind: DocKind::News,
    })
    .unwrap();
    for c in &cards {
        assert_eq!(c.image_provenance, ImageProvenance::Predicted);
        assert_eq!(c.image.as_deref(), Some("https://plain.test/post/big.png"));
        let p = c.probability.unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    let fb = cards.iter().find(|c| c.platform == Platform::Facebook).unwrap();
    assert_eq!(fb.title.as_deref(), Some("Plain page"));
}

#[test]
fn card_without_candidates_explains_itself() {
    let o = run(&["card", fixture("06_html_title_only.html").to_str().unwrap(), "--base-url", "https://council.test/"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("\"no_candidates\""), "{text}");
    assert!(text.contains("\"image\":null"), "{text}");
}
