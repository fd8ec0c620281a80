//! Probability-emitting classifiers, document-grouped folds, per-document
//! ranking and rank correlation. Everything here is implemented in-crate.

pub mod adaboost;
mod features;
mod folds;
pub mod linear;
pub mod naive_bayes;
mod spearman;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::PreparedDocument;

pub use features::{assemble_features, named_vector, AssembledFeatures, FeatureSet, FeatureSpec};
pub use folds::{make_folds, FoldPlan};
pub use spearman::{average_ranks, spearman_rho};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    PresentInMetadata,
    Other,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::PresentInMetadata
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub doc_id: String,
    pub image_url: String,
    pub features: Vec<f64>,
    pub label: Label,
}

/// Dense training matrix. `y[i]` is true for present-in-metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<bool>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Repeats minority-class rows round-robin until both classes are the
    /// same size.
    fn balanced(&self) -> Dataset {
        let pos: Vec<usize> = (0..self.len()).filter(|&i| self.y[i]).collect();
        let neg: Vec<usize> = (0..self.len()).filter(|&i| !self.y[i]).collect();
        let (small, big) = if pos.len() < neg.len() { (pos, neg) } else { (neg, pos) };
        let mut idx: Vec<usize> = big.clone();
        idx.extend(small.iter().cycle().take(big.len()));
        Dataset {
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    RandomForest,
    DecisionTree,
    GaussianNb,
    LogisticRegression,
    Lda,
    Adaboost,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Adaboost,
        ModelKind::DecisionTree,
        ModelKind::GaussianNb,
        ModelKind::Lda,
        ModelKind::LogisticRegression,
        ModelKind::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RandomForest => "random_forest",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::Lda => "lda",
            ModelKind::Adaboost => "adaboost",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace('-', "_");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown classifier {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub forest_max_features: MaxFeatures,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub lr_iterations: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub n_stumps: usize,
    /// Oversample the minority class before fitting.
    pub balance_classes: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 100,
            forest_max_features: MaxFeatures::Sqrt,
            max_depth: None,
            min_samples_split: 2,
            lr_iterations: 1000,
            learning_rate: 0.1,
            l2: 1e-4,
            n_stumps: 50,
            balance_classes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelParams {
    RandomForest { trees: Vec<tree::Tree> },
    DecisionTree { tree: tree::Tree },
    GaussianNb(naive_bayes::GaussianNb),
    LogisticRegression(linear::Linear),
    Lda(linear::Linear),
    Adaboost(adaboost::AdaBoost),
}

/// A fitted classifier. Immutable once built; share it freely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub kind: ModelKind,
    pub feature_schema: Vec<String>,
    pub hyperparams: Hyperparams,
    pub train_seed: u64,
    pub params: ModelParams,
}

fn dataset(examples: &[LabeledExample]) -> Result<Dataset> {
    let Some(first) = examples.first() else {
        return Err(Error::Model("empty training set".into()));
    };
    let d = first.features.len();
    if d == 0 {
        return Err(Error::Model("examples have no features".into()));
    }
    for e in examples {
        if e.features.len() != d {
            return Err(Error::Model(format!(
                "example {}:{} has {} features, expected {d}",
                e.doc_id,
                e.image_url,
                e.features.len()
            )));
        }
        if e.features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Model(format!("non-finite feature in {}:{}", e.doc_id, e.image_url)));
        }
    }
    let data = Dataset {
        x: examples.iter().map(|e| e.features.clone()).collect(),
        y: examples.iter().map(|e| e.label.is_positive()).collect(),
    };
    let pos = data.y.iter().filter(|y| **y).count();
    if pos == 0 || pos == data.len() {
        return Err(Error::Model(format!(
            "training set needs both classes ({pos} positive of {})",
            data.len()
        )));
    }
    Ok(data)
}

pub fn fit(
    kind: ModelKind,
    feature_schema: &[String],
    examples: &[LabeledExample],
    hyper: &Hyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    let mut data = dataset(examples)?;
    if data.n_features() != feature_schema.len() {
        return Err(Error::Model(format!(
            "schema has {} names, examples have {} features",
            feature_schema.len(),
            data.n_features()
        )));
    }
    if hyper.balance_classes {
        data = data.balanced();
    }
    let d = data.n_features();
    let tree_params = |max_features: usize| tree::TreeParams {
        max_features,
        max_depth: hyper.max_depth,
        min_samples_split: hyper.min_samples_split,
    };
    let params = match kind {
        ModelKind::RandomForest => ModelParams::RandomForest {
            trees: tree::fit_forest(&data, hyper.n_trees.max(1), tree_params(hyper.forest_max_features.resolve(d)), seed),
        },
        ModelKind::DecisionTree => {
            let mut idx: Vec<usize> = (0..data.len()).collect();
            ModelParams::DecisionTree {
                tree: tree::fit_tree(&data, &mut idx, tree_params(d), seeded_rng(seed, 0)),
            }
        }
        ModelKind::GaussianNb => ModelParams::GaussianNb(naive_bayes::fit(&data)),
        ModelKind::LogisticRegression => ModelParams::LogisticRegression(linear::fit_logistic(
            &data,
            linear::LogisticParams {
                iterations: hyper.lr_iterations,
                learning_rate: hyper.learning_rate,
                l2: hyper.l2,
            },
        )),
        ModelKind::Lda => ModelParams::Lda(linear::fit_lda(&data)),
        ModelKind::Adaboost => ModelParams::Adaboost(adaboost::fit(&data, hyper.n_stumps.max(1))),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        kind,
        feature_schema: feature_schema.to_vec(),
        hyperparams: *hyper,
        train_seed: seed,
        params,
    })
}

impl TrainedModel {
    /// Probability of present-in-metadata.
    pub fn predict_proba(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.feature_schema.len() {
            return Err(Error::Model(format!(
                "model expects {} features ({}), got {}",
                self.feature_schema.len(),
                self.feature_schema.join(","),
                features.len()
            )));
        }
        let p = match &self.params {
            ModelParams::RandomForest { trees } => tree::forest_vote(trees, features),
            ModelParams::DecisionTree { tree } => tree.predict(features),
            ModelParams::GaussianNb(m) => m.predict(features),
            ModelParams::LogisticRegression(m) | ModelParams::Lda(m) => m.predict(features),
            ModelParams::Adaboost(m) => m.predict(features),
        };
        Ok(if p.is_nan() { 0.0 } else { p.clamp(0.0, 1.0) })
    }

    /// Like [`predict_proba`](Self::predict_proba), also checking feature names.
    pub fn predict_proba_named(&self, schema: &[String], features: &[f64]) -> Result<f64> {
        if schema != self.feature_schema.as_slice() {
            return Err(Error::Model(format!(
                "schema mismatch: model [{}], input [{}]",
                self.feature_schema.join(","),
                schema.join(",")
            )));
        }
        self.predict_proba(features)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported model format {}", m.format_version)));
        }
        Ok(m)
    }
}

/// Indices of `scores` from highest to lowest; equal scores keep input
/// order. NaN sorts last.
pub fn rank_by_scores(scores: &[f64]) -> Vec<usize> {
    let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).total_cmp(&key(scores[a])).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub image_url: String,
    pub probability: f64,
    /// Position in the input list.
    pub input_index: usize,
}

/// Ranks a document's candidates by descending probability.
pub fn rank_document(model: &TrainedModel, candidates: &[(String, Vec<f64>)]) -> Result<Vec<RankedCandidate>> {
    if candidates.is_empty() {
        return Err(Error::Model("no candidates to rank".into()));
    }
    let probs = candidates
        .iter()
        .map(|(_, f)| model.predict_proba(f))
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_by_scores(&probs)
        .into_iter()
        .map(|i| RankedCandidate {
            image_url: candidates[i].0.clone(),
            probability: probs[i],
            input_index: i,
        })
        .collect())
}

/// Training examples from every candidate of every document.
pub fn examples_from_documents<'a>(
    docs: impl IntoIterator<Item = &'a PreparedDocument>,
    spec: &FeatureSpec,
) -> Result<Vec<LabeledExample>> {
    let mut out = Vec::new();
    for doc in docs {
        let feats = assemble_features(doc, spec)?;
        for (c, row) in doc.candidates.iter().zip(feats.rows) {
            out.push(LabeledExample {
                doc_id: doc.doc_id.clone(),
                image_url: c.url.clone(),
                features: row,
                label: c.label,
            });
        }
    }
    Ok(out)
}
