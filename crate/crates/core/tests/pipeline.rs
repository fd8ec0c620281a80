use cardforge::corpus::{load_corpus, DocKind, DocumentRecord, EligibilityReason, ImagePayload};
use cardforge::learn::Label;
use cardforge::metadata::{census, CapabilityLevel, FieldCategory, Platform};
use cardforge::pipeline::prepare_corpus;
use cardforge::scholarly::Stopwords;
use cardforge::synth;

fn png(seed: u64) -> Vec<u8> {
    synth::encode_png(&synth::pattern_image(seed, 40, 30))
}

#[test]
fn news_corpus_on_disk_prepares_fully() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(tmp.path(), 12, 7).unwrap();
    let docs = load_corpus(&manifest).unwrap();
    assert_eq!(docs.len(), 12);
    let prep = prepare_corpus(&docs, &Stopwords::bundled());
    assert_eq!(prep.documents.len(), 12);
    for d in &prep.documents {
        assert_eq!(d.doc_kind, DocKind::News);
        let positives: Vec<_> = d.candidates.iter().filter(|c| c.label == Label::PresentInMetadata).collect();
        assert_eq!(positives.len(), 1, "{}", d.doc_id);
        assert_eq!(positives[0].url, d.judgment.ground_truth_url);
        assert_eq!(positives[0].phash, d.judgment.ground_truth_hash);
        assert!(positives[0].base.pixel_size > d.candidates.iter().filter(|c| c.label == Label::Other).map(|c| c.base.pixel_size).max().unwrap());
    }
    assert!(prep.reduction().iter().all(|r| r.removed == 0 && r.running_total == 12));
}

#[test]
fn scholarly_corpus_on_disk_carries_figure_features() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_scholarly_corpus(tmp.path(), 6, 1.0, 3).unwrap();
    let docs = load_corpus(&manifest).unwrap();
    let prep = prepare_corpus(&docs, &Stopwords::bundled());
    assert_eq!(prep.documents.len(), 6, "{:?}", prep.verdicts);
    for d in &prep.documents {
        let last = d.candidates.last().unwrap();
        assert_eq!(last.label, Label::PresentInMetadata);
        let s = last.scholarly.expect("scholarly features");
        assert_eq!(s.figure_position_scaled, 1.0);
        for c in &d.candidates {
            assert!(c.scholarly.is_some());
        }
    }
}

#[test]
fn census_of_uniform_2016_ogp_corpus() {
    let docs: Vec<DocumentRecord> = (0..10)
        .map(|i| {
            let html = format!(
                "<html><head><title>T{i}</title><meta property=\"og:title\" content=\"Title {i}\">\
                 <meta property=\"og:description\" content=\"D\"><meta property=\"og:image\" content=\"/a.png\"></head></html>"
            );
            let mut d = DocumentRecord::new(format!("d{i}"), "https://n.test/", DocKind::News, html);
            d.capture_datetime = Some("2016-05-01T00:00:00Z".parse().unwrap());
            d
        })
        .collect();
    let report = census(&docs);
    assert_eq!(report.total_docs, 10);
    assert_eq!(report.by_year.len(), 1);
    let y = report.bucket("2016").unwrap();
    assert_eq!(y.doc_count, 10);
    assert_eq!(y.fraction(FieldCategory::Ogp), 1.0);
    assert_eq!(y.fraction(FieldCategory::TwitterCard), 0.0);
    assert_eq!(y.capable(Platform::Facebook, CapabilityLevel::Full), 10);
    assert_eq!(y.capable(Platform::Twitter, CapabilityLevel::TitleOnly), 0);
    assert_eq!(report.overall, cardforge::metadata::CensusBucket { year: "all".into(), ..y.clone() });
}

#[test]
fn census_of_news_corpus_splits_years() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = synth::write_news_corpus(tmp.path(), 12, 7).unwrap();
    let report = census(&load_corpus(&manifest).unwrap());
    let years: Vec<&str> = report.by_year.iter().map(|b| b.year.as_str()).collect();
    assert_eq!(years, ["2016", "2017", "2018", "2019"]);
    // documents 0, 3, 6, 9 lack twitter:card
    assert_eq!(report.overall.capable(Platform::Twitter, CapabilityLevel::Full), 8);
    assert_eq!(report.overall.capable(Platform::Facebook, CapabilityLevel::Full), 12);
    assert!(report.categories_csv().starts_with("year,category,fraction,doc_count\n"));
}

#[test]
fn reduction_ledger_counts_each_rule_once() {
    let base = "https://n.test/story";
    let img = |d: &mut DocumentRecord, name: &str, payload: ImagePayload| d.insert_image(&format!("https://n.test/{name}"), payload);
    let mut docs = Vec::new();
    // parse failure
    docs.push(DocumentRecord::new("empty", base, DocKind::News, "  "));
    // no metadata image
    docs.push(DocumentRecord::new("nometa", base, DocKind::News, "<html><body><img src=\"/a.png\"><img src=\"/b.png\"></body></html>"));
    // undecodable candidate
    let mut d = DocumentRecord::new(
        "corrupt",
        base,
        DocKind::News,
        "<html><head><meta property=\"og:image\" content=\"/a.png\"></head><body><img src=\"/a.png\"><img src=\"/b.png\"></body></html>",
    );
    img(&mut d, "a.png", ImagePayload::Present(png(1)));
    img(&mut d, "b.png", ImagePayload::Present(b"not an image".to_vec()));
    docs.push(d);
    // no body image
    let mut d = DocumentRecord::new("nobody", base, DocKind::News, "<html><head><meta property=\"og:image\" content=\"/a.png\"></head></html>");
    img(&mut d, "a.png", ImagePayload::Present(png(1)));
    docs.push(d);
    // single body image
    let mut d = DocumentRecord::new(
        "single",
        base,
        DocKind::News,
        "<html><head><meta property=\"og:image\" content=\"/a.png\"></head><body><img src=\"/a.png\"></body></html>",
    );
    img(&mut d, "a.png", ImagePayload::Present(png(1)));
    docs.push(d);
    // eligible
    let mut d = DocumentRecord::new(
        "good",
        base,
        DocKind::News,
        "<html><head><meta property=\"og:image\" content=\"/a.png\"></head><body><img src=\"/a.png\"><img src=\"/b.png\"></body></html>",
    );
    img(&mut d, "a.png", ImagePayload::Present(png(1)));
    img(&mut d, "b.png", ImagePayload::Present(png(2)));
    docs.push(d);

    let prep = prepare_corpus(&docs, &Stopwords::bundled());
    let reasons: Vec<EligibilityReason> = prep.verdicts.iter().map(|(_, v)| v.reason).collect();
    use EligibilityReason::*;
    assert_eq!(reasons, [ParseFailure, NoMetadataImage, ImageProcessingFailure, NoBodyImage, SingleBodyImage, Ok]);
    let ledger: Vec<(EligibilityReason, usize, usize)> = prep.reduction().iter().map(|r| (r.reason, r.removed, r.running_total)).collect();
    assert_eq!(
        ledger,
        [
            (ParseFailure, 1, 5),
            (NoMetadataImage, 1, 4),
            (ImageProcessingFailure, 1, 3),
            (NoBodyImage, 1, 2),
            (SingleBodyImage, 1, 1),
            (GroundTruthUnmatched, 0, 1),
        ]
    );
    assert_eq!(prep.documents.len(), 1);
    assert_eq!(prep.documents[0].doc_id, "good");
}
