//! Subcommand implementations behind the `cardforge` binary. Each command
//! takes a plain configuration struct and writes its reports under an
//! output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use cardforge::corpus::{load_corpus, normalize_url, DocKind, DocumentRecord, ImagePayload};
use cardforge::eval::{self, EvalCurve};
use cardforge::learn::{self, named_vector, FeatureSpec, Hyperparams, ModelKind, TrainedModel};
use cardforge::metadata::{self, card_capability, resolve_card, CapabilityLevel, Platform};
use cardforge::pipeline::{body_candidates, prepare_corpus, PreparedDocument};
use cardforge::report::{self, ReportHeader};
use cardforge::scholarly::Stopwords;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Which report encodings to write. `None` means both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats(pub Option<ReportFormat>);

impl Formats {
    pub fn json(self) -> bool {
        self.0 != Some(ReportFormat::Csv)
    }

    pub fn csv(self) -> bool {
        self.0 != Some(ReportFormat::Json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_root: PathBuf,
    pub seed: u64,
    pub classifiers: Vec<ModelKind>,
    pub feature_sets: Vec<FeatureSpec>,
    pub thresholds: Vec<f64>,
    pub trials: usize,
    pub folds: usize,
    /// Not part of the config hash: where reports land does not change them.
    #[serde(skip)]
    pub output_dir: PathBuf,
    pub formats: Formats,
    pub hyperparams: Hyperparams,
    /// Model file written by `train`; defaults to `model.json` in the
    /// output directory.
    pub model_path: Option<PathBuf>,
    pub stopwords_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(corpus_root: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            corpus_root: corpus_root.into(),
            seed: 0,
            classifiers: vec![ModelKind::RandomForest],
            feature_sets: vec![FeatureSpec::base()],
            thresholds: eval::default_thresholds(),
            trials: 20,
            folds: 10,
            output_dir: output_dir.into(),
            formats: Formats(None),
            hyperparams: Hyperparams::default(),
            model_path: None,
            stopwords_path: None,
        }
    }

    fn header(&self) -> Result<ReportHeader> {
        Ok(ReportHeader::new(self, self.seed)?)
    }

    fn stopwords(&self) -> Result<Stopwords> {
        match &self.stopwords_path {
            Some(p) => Stopwords::from_file(p).with_context(|| format!("reading stopwords {}", p.display())),
            None => Ok(Stopwords::bundled()),
        }
    }

    fn model_file(&self) -> PathBuf {
        self.model_path.clone().unwrap_or_else(|| self.output_dir.join("model.json"))
    }
}

/// Splits a comma-separated list, ignoring commas inside parentheses.
pub fn split_list(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur).trim().to_string());
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur.trim().to_string());
    out.retain(|s| !s.is_empty());
    out
}

pub fn parse_classifiers(s: &str) -> Result<Vec<ModelKind>> {
    if s.trim() == "all" {
        return Ok(ModelKind::ALL.to_vec());
    }
    split_list(s).iter().map(|k| Ok(k.parse::<ModelKind>()?)).collect()
}

pub fn parse_feature_sets(s: &str) -> Result<Vec<FeatureSpec>> {
    split_list(s).iter().map(|k| Ok(k.parse::<FeatureSpec>()?)).collect()
}

pub fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    if s.trim() == "default" {
        return Ok(eval::default_thresholds());
    }
    let t = split_list(s)
        .iter()
        .map(|v| v.parse::<f64>().with_context(|| format!("bad threshold {v:?}")))
        .collect::<Result<Vec<_>>>()?;
    eval::validate_thresholds(&t)?;
    Ok(t)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn load(config: &RunConfig) -> Result<Vec<DocumentRecord>> {
    let docs = load_corpus(&config.corpus_root)?;
    if docs.is_empty() {
        bail!("corpus manifest {} lists no documents", config.corpus_root.display());
    }
    Ok(docs)
}

/// Metadata census: category fractions per year and card capability tables.
pub fn cmd_census(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let docs = load(config)?;
    let census = metadata::census(&docs);
    let header = config.header()?;
    let mut written = Vec::new();
    if config.formats.json() {
        written.push(write(&config.output_dir, "census.json", &report::to_json(&header, &census)?)?);
    }
    if config.formats.csv() {
        let preamble = |body: String| header.csv_preamble() + &body;
        written.push(write(&config.output_dir, "census_categories.csv", &preamble(census.categories_csv()))?);
        written.push(write(&config.output_dir, "census_capability.csv", &preamble(census.capability_csv()))?);
    }
    Ok(written)
}

#[derive(Serialize)]
struct FeatureReport<'a> {
    reduction: Vec<cardforge::pipeline::ReductionRow>,
    documents: &'a [PreparedDocument],
}

/// Candidate feature dump plus the eligibility reduction ledger.
pub fn cmd_features(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let docs = load(config)?;
    let prep = prepare_corpus(&docs, &config.stopwords()?);
    let header = config.header()?;
    let mut written = Vec::new();
    if config.formats.csv() {
        written.push(write(&config.output_dir, "features.csv", &report::features_csv(&header, &prep.documents)?)?);
        let mut red = header.csv_preamble() + "reason,removed,remaining\n";
        for r in prep.reduction() {
            red.push_str(&format!("{},{},{}\n", r.reason.as_str(), r.removed, r.running_total));
        }
        written.push(write(&config.output_dir, "reduction.csv", &red)?);
    }
    if config.formats.json() {
        let body = FeatureReport {
            reduction: prep.reduction(),
            documents: &prep.documents,
        };
        written.push(write(&config.output_dir, "features.json", &report::to_json(&header, body)?)?);
    }
    Ok(written)
}

fn usable(docs: Vec<PreparedDocument>, spec: &FeatureSpec) -> Vec<PreparedDocument> {
    if spec.needs_scholarly() {
        docs.into_iter().filter(|d| d.doc_kind == DocKind::Scholarly).collect()
    } else {
        docs
    }
}

#[derive(Serialize)]
struct TrainManifest {
    model_file: String,
    kind: ModelKind,
    feature_set: FeatureSpec,
    feature_schema: Vec<String>,
    documents: usize,
    examples: usize,
    positives: usize,
    hyperparams: Hyperparams,
}

/// Trains the first requested classifier on the first requested feature
/// set over every eligible document.
pub fn cmd_train(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let kind = *config.classifiers.first().ok_or_else(|| anyhow!("no classifier requested"))?;
    let spec = config.feature_sets.first().ok_or_else(|| anyhow!("no feature set requested"))?;
    let docs = load(config)?;
    let prep = prepare_corpus(&docs, &config.stopwords()?);
    let prepared = usable(prep.documents, spec);
    if prepared.is_empty() {
        bail!("no eligible documents for feature set {spec}");
    }
    let examples = learn::examples_from_documents(&prepared, spec)?;
    let model = learn::fit(kind, &spec.schema(), &examples, &config.hyperparams, config.seed)?;
    let model_path = config.model_file();
    let mut written = Vec::new();
    let dir = model_path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = model_path.file_name().ok_or_else(|| anyhow!("model path has no file name"))?.to_string_lossy();
    written.push(write(dir, &name, &model.to_json()?)?);
    let manifest = TrainManifest {
        model_file: name.to_string(),
        kind,
        feature_set: spec.clone(),
        feature_schema: model.feature_schema.clone(),
        documents: prepared.len(),
        examples: examples.len(),
        positives: examples.iter().filter(|e| e.label.is_positive()).count(),
        hyperparams: config.hyperparams,
    };
    written.push(write(&config.output_dir, "train_manifest.json", &report::to_json(&config.header()?, manifest)?)?);
    Ok(written)
}

/// Baselines plus every classifier × feature-set cell under shared
/// document folds. Scholarly-only approaches are skipped with a warning
/// when the corpus has no eligible scholarly documents.
pub fn cmd_evaluate(config: &RunConfig) -> Result<Vec<PathBuf>> {
    let docs = load(config)?;
    let prep = prepare_corpus(&docs, &config.stopwords()?);
    if prep.documents.is_empty() {
        bail!("no eligible documents in {}", config.corpus_root.display());
    }
    let all = prep.documents;
    let t = &config.thresholds;
    let mut curves: Vec<EvalCurve> = vec![eval::random_baseline(&all, config.trials.max(1), config.seed, t)?];
    let scholarly: Vec<PreparedDocument> = all.iter().filter(|d| d.doc_kind == DocKind::Scholarly).cloned().collect();
    if scholarly.is_empty() {
        eprintln!("warning: skipping last_figure baseline: no scholarly documents");
    } else {
        curves.push(eval::last_figure_baseline(&scholarly, t)?);
    }

    let mut specs: Vec<FeatureSpec> = Vec::new();
    for spec in &config.feature_sets {
        if spec.needs_scholarly() && scholarly.is_empty() {
            eprintln!("warning: skipping feature set {spec}: no scholarly documents");
        } else {
            specs.push(spec.clone());
        }
    }
    // specs needing scholarly features run on the scholarly subset, so the
    // grid is built per document population
    let mut grid_cells = Vec::new();
    let mut grid_folds = None;
    for population in [false, true] {
        let group: Vec<FeatureSpec> = specs.iter().filter(|s| s.needs_scholarly() == population).cloned().collect();
        if group.is_empty() || config.classifiers.is_empty() {
            continue;
        }
        let docs = if population { &scholarly } else { &all };
        let k = config.folds.min(docs.len());
        let grid = eval::run_grid(docs, &config.classifiers, &group, &config.hyperparams, k, config.seed, t)?;
        curves.extend(grid.curves);
        grid_cells.extend(grid.cells);
        grid_folds.get_or_insert(grid.folds);
    }
    let header = config.header()?;
    let mut written = Vec::new();
    if config.formats.csv() {
        written.push(write(&config.output_dir, "curves.csv", &report::curves_csv(&header, &curves)?)?);
    }
    if config.formats.json() {
        written.push(write(&config.output_dir, "curves.json", &report::curves_json(&header, &curves)?)?);
    }
    if let Some(folds) = grid_folds {
        // order cells as requested and mark one best cell overall
        let mut cells: Vec<eval::GridCell> = Vec::new();
        for kind in &config.classifiers {
            for spec in &specs {
                if let Some(c) = grid_cells.iter().find(|c| c.kind == *kind && &c.features == spec) {
                    let mut c = c.clone();
                    c.best = false;
                    cells.push(c);
                }
            }
        }
        let best = (0..cells.len()).fold(None::<usize>, |b, i| match b {
            Some(b) if (cells[i].p_at_1, cells[i].mrr) <= (cells[b].p_at_1, cells[b].mrr) => Some(b),
            _ => Some(i),
        });
        if let Some(b) = best {
            cells[b].best = true;
        }
        let grid = eval::GridResult {
            folds,
            cells,
            curves: Vec::new(),
        };
        if config.formats.csv() {
            written.push(write(&config.output_dir, "grid.csv", &report::grid_csv(&header, &grid)?)?);
            written.push(write(&config.output_dir, "grid_table.csv", &report::grid_table_csv(&header, &grid)?)?);
        }
        if config.formats.json() {
            #[derive(Serialize)]
            struct GridBody<'a> {
                threshold: f64,
                cells: &'a [eval::GridCell],
            }
            let body = GridBody {
                threshold: t[0],
                cells: &grid.cells,
            };
            written.push(write(&config.output_dir, "grid.json", &report::to_json(&header, body)?)?);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImageProvenance {
    Metadata,
    Predicted,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardOutput {
    pub platform: Platform,
    pub title: Option<String>,
    pub description: Option<String>,
    pub image: Option<String>,
    pub domain: Option<String>,
    pub image_provenance: ImageProvenance,
    pub capability: CapabilityLevel,
    /// Why `image` is null: `no_candidates` or `no_model`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CardConfig {
    pub html_path: PathBuf,
    pub base_url: String,
    pub model_path: Option<PathBuf>,
    /// JSON object mapping image URLs to file paths relative to the HTML
    /// file's directory.
    pub images_path: Option<PathBuf>,
    pub doc_kind: DocKind,
}

fn local_images(config: &CardConfig, html_dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut map = BTreeMap::new();
    if let Some(p) = &config.images_path {
        let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let raw: BTreeMap<String, String> = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        for (url, path) in raw {
            map.insert(normalize_url(&url, &config.base_url)?, html_dir.join(path));
        }
    }
    Ok(map)
}

/// Resolves an image URL to a file beside the HTML: the URL's path relative
/// to the base URL's directory, else its last path segment.
fn beside(url: &str, base: &str, html_dir: &Path) -> Option<PathBuf> {
    let u = url::Url::parse(url).ok()?;
    let b = url::Url::parse(base).ok()?;
    if let Some(rel) = b.make_relative(&u) {
        if !rel.starts_with("../") && !rel.contains("://") {
            let path = html_dir.join(rel.split(['?', '#']).next().unwrap_or(""));
            if path.is_file() {
                return Some(path);
            }
        }
    }
    let name = u.path_segments()?.next_back()?;
    let path = html_dir.join(name);
    path.is_file().then_some(path)
}

/// Card per platform for one HTML file, predicting the image when the
/// metadata names none.
pub fn cmd_card(config: &CardConfig) -> Result<Vec<CardOutput>> {
    let html = fs::read(&config.html_path).with_context(|| format!("reading {}", config.html_path.display()))?;
    let html_dir = config.html_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let extraction = metadata::extract_meta_fields(&html);
    let model = match &config.model_path {
        Some(p) => Some(TrainedModel::from_json(
            &fs::read_to_string(p).with_context(|| format!("reading model {}", p.display()))?,
        )?),
        None => None,
    };
    let sidecar = local_images(config, &html_dir)?;
    let mut doc = DocumentRecord::new("card", config.base_url.clone(), config.doc_kind, html.clone());
    for cand in metadata::extract_candidates(&html, &config.base_url) {
        let file = sidecar.get(&cand.url).cloned().or_else(|| beside(&cand.url, &config.base_url, &html_dir));
        let payload = match file.map(fs::read) {
            Some(Ok(bytes)) => ImagePayload::Present(bytes),
            _ => ImagePayload::Missing,
        };
        doc.insert_image(&cand.url, payload);
    }
    let candidates = body_candidates(&doc, &Stopwords::bundled()).unwrap_or_default();

    // one prediction shared by both platforms
    let prediction: Result<(String, f64), &'static str> = if candidates.is_empty() {
        Err("no_candidates")
    } else if let Some(m) = &model {
        let scored = candidates
            .iter()
            .map(|c| Ok((c.url.clone(), named_vector(c, &m.feature_schema)?)))
            .collect::<Result<Vec<_>>>()?;
        let ranked = learn::rank_document(m, &scored)?;
        Ok((ranked[0].image_url.clone(), ranked[0].probability))
    } else {
        Err("no_model")
    };

    Ok(Platform::ALL
        .into_iter()
        .map(|platform| {
            let card = resolve_card(&extraction.fields, extraction.title.as_deref(), platform);
            let capability = card_capability(&card, &extraction.fields, platform).level;
            let domain = card
                .url
                .as_deref()
                .and_then(|u| normalize_url(u, &config.base_url).ok())
                .or_else(|| Some(config.base_url.clone()))
                .and_then(|u| url::Url::parse(&u).ok())
                .and_then(|u| u.host_str().map(str::to_string));
            let (image, image_provenance, reason, probability) = match (&card.image, &prediction) {
                (Some(img), _) => (
                    Some(normalize_url(img, &config.base_url).unwrap_or_else(|_| img.clone())),
                    ImageProvenance::Metadata,
                    None,
                    None,
                ),
                (None, Ok((url, p))) => (Some(url.clone()), ImageProvenance::Predicted, None, Some(*p)),
                (None, Err(r)) => (None, ImageProvenance::None, Some(r.to_string()), None),
            };
            CardOutput {
                platform,
                title: card.title,
                description: card.description,
                image,
                domain,
                image_provenance,
                capability,
                reason,
                probability,
            }
        })
        .collect())
}

/// The card document written by the `card` subcommand.
pub fn card_json(config: &CardConfig, cards: &[CardOutput]) -> Result<String> {
    #[derive(Serialize)]
    struct Body<'a> {
        cards: &'a [CardOutput],
    }
    Ok(report::to_json(&ReportHeader::new(config, 0)?, Body { cards })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_splitting_respects_parentheses() {
        assert_eq!(
            split_list("base, base-minus(aspect_ratio,negative_space),all"),
            vec!["base", "base-minus(aspect_ratio,negative_space)", "all"]
        );
        assert_eq!(parse_feature_sets("base+figure_position,base").unwrap().len(), 2);
    }

    #[test]
    fn threshold_and_classifier_parsing() {
        assert_eq!(parse_thresholds("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_thresholds("default").unwrap().len(), 21);
        assert!(parse_thresholds("0.5,0.2").is_err());
        assert_eq!(parse_classifiers("all").unwrap().len(), 6);
        assert!(parse_classifiers("svm").is_err());
    }

    #[test]
    fn formats() {
        assert!(Formats(None).json() && Formats(None).csv());
        assert!(!Formats(Some(ReportFormat::Csv)).json());
    }
}
