//! P@1 and MRR under pHash-distance relevance, baselines, cross-validated
//! classifier approaches and the classifier × feature-set grid.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::DocKind;
use crate::error::{Error, Result};
use crate::imagefeat::{phash_distance, PerceptualHash};
use crate::learn::{
    assemble_features, examples_from_documents, fit, make_folds, rank_by_scores, seeded_rng, FeatureSpec, FoldPlan,
    Hyperparams, ModelKind,
};
use crate::par;
use crate::pipeline::PreparedDocument;

/// Ground truth for one eligible document. Alternate hashes come from
/// metadata images other than the canonical `og:image`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgment {
    pub doc_id: String,
    pub ground_truth_url: String,
    pub ground_truth_hash: PerceptualHash,
    #[serde(default)]
    pub alternate_hashes: Vec<PerceptualHash>,
}

impl RelevanceJudgment {
    /// Smallest distance from `hash` to any ground-truth hash.
    pub fn distance(&self, hash: PerceptualHash) -> f64 {
        self.alternate_hashes
            .iter()
            .map(|h| phash_distance(hash, *h))
            .fold(phash_distance(hash, self.ground_truth_hash), f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub mrr: f64,
    pub p_at_1: f64,
    pub n_docs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    pub approach_name: String,
    pub points: Vec<CurvePoint>,
}

impl EvalCurve {
    pub fn at(&self, threshold: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.threshold == threshold)
    }
}

/// 21 evenly spaced thresholds from 0 to 1.
pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

pub fn validate_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::Eval("no thresholds".into()));
    }
    if let Some(t) = thresholds.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::Eval(format!("threshold {t} outside [0, 1]")));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Eval("thresholds must be strictly ascending".into()));
    }
    Ok(())
}

pub fn is_relevant(candidate: PerceptualHash, ground_truth: PerceptualHash, threshold: f64) -> bool {
    phash_distance(candidate, ground_truth) <= threshold
}

pub fn is_relevant_to(candidate: PerceptualHash, judgment: &RelevanceJudgment, threshold: f64) -> bool {
    judgment.distance(candidate) <= threshold
}

/// 1 when the top-ranked hash is relevant, else 0.
pub fn precision_at_1(ranked: &[PerceptualHash], judgment: &RelevanceJudgment, threshold: f64) -> Result<f64> {
    let first = ranked.first().ok_or_else(|| Error::Eval("empty ranking".into()))?;
    Ok(if is_relevant_to(*first, judgment, threshold) { 1.0 } else { 0.0 })
}

pub fn reciprocal_rank(ranked: &[PerceptualHash], judgment: &RelevanceJudgment, threshold: f64) -> Result<f64> {
    ranked
        .iter()
        .position(|h| is_relevant_to(*h, judgment, threshold))
        .map(|i| 1.0 / (i + 1) as f64)
        .ok_or_else(|| {
            Error::Eval(format!(
                "no relevant candidate for {} at threshold {threshold}",
                judgment.doc_id
            ))
        })
}

/// P@1 and reciprocal rank of one ranked document at each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocScores {
    pub doc_id: String,
    pub p_at_1: Vec<f64>,
    pub rr: Vec<f64>,
}

/// Scores one document's ranking (indices into its candidates).
pub fn score_ranking(doc: &PreparedDocument, ranking: &[usize], thresholds: &[f64]) -> Result<DocScores> {
    check_permutation(doc, ranking)?;
    let dist: Vec<f64> = ranking
        .iter()
        .map(|&i| doc.judgment.distance(doc.candidates[i].phash))
        .collect();
    let mut p_at_1 = Vec::with_capacity(thresholds.len());
    let mut rr = Vec::with_capacity(thresholds.len());
    for &t in thresholds {
        let first = dist.iter().position(|d| *d <= t).ok_or_else(|| {
            Error::Eval(format!("no relevant candidate for {} at threshold {t}", doc.doc_id))
        })?;
        p_at_1.push(if first == 0 { 1.0 } else { 0.0 });
        rr.push(1.0 / (first + 1) as f64);
    }
    Ok(DocScores {
        doc_id: doc.doc_id.clone(),
        p_at_1,
        rr,
    })
}

fn check_permutation(doc: &PreparedDocument, ranking: &[usize]) -> Result<()> {
    let n = doc.candidates.len();
    let mut seen = vec![false; n];
    for &i in ranking {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::Eval(format!("ranking for {} is not a permutation", doc.doc_id)));
        }
    }
    if ranking.len() != n || n == 0 {
        return Err(Error::Eval(format!("ranking for {} is not a permutation", doc.doc_id)));
    }
    Ok(())
}

/// Averages per-document scores in document order.
pub fn aggregate(name: &str, scores: &[DocScores], thresholds: &[f64]) -> Result<EvalCurve> {
    if scores.is_empty() {
        return Err(Error::Eval("empty corpus".into()));
    }
    let n = scores.len() as f64;
    let points = thresholds
        .iter()
        .enumerate()
        .map(|(j, &threshold)| CurvePoint {
            threshold,
            mrr: scores.iter().map(|s| s.rr[j]).sum::<f64>() / n,
            p_at_1: scores.iter().map(|s| s.p_at_1[j]).sum::<f64>() / n,
            n_docs: scores.len(),
        })
        .collect();
    Ok(EvalCurve {
        approach_name: name.to_string(),
        points,
    })
}

/// Evaluates precomputed rankings, one per document.
pub fn evaluate_rankings(
    name: &str,
    docs: &[PreparedDocument],
    rankings: &[Vec<usize>],
    thresholds: &[f64],
) -> Result<EvalCurve> {
    validate_thresholds(thresholds)?;
    if docs.len() != rankings.len() {
        return Err(Error::Eval(format!("{} rankings for {} documents", rankings.len(), docs.len())));
    }
    let scores = docs
        .iter()
        .zip(rankings)
        .map(|(d, r)| score_ranking(d, r, thresholds))
        .collect::<Result<Vec<_>>>()?;
    aggregate(name, &scores, thresholds)
}

/// Evaluates a ranking function applied to every document.
pub fn evaluate_approach<F>(name: &str, docs: &[PreparedDocument], approach: F, thresholds: &[f64]) -> Result<EvalCurve>
where
    F: Fn(&PreparedDocument) -> Vec<usize> + Sync,
{
    validate_thresholds(thresholds)?;
    if docs.is_empty() {
        return Err(Error::Eval("empty corpus".into()));
    }
    let scores = par::map(docs, |d| score_ranking(d, &approach(d), thresholds))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    aggregate(name, &scores, thresholds)
}

/// Mean curve over `trials` uniformly random rankings of every document.
pub fn random_baseline(docs: &[PreparedDocument], trials: usize, seed: u64, thresholds: &[f64]) -> Result<EvalCurve> {
    validate_thresholds(thresholds)?;
    if trials == 0 {
        return Err(Error::Eval("random baseline needs at least one trial".into()));
    }
    if docs.is_empty() {
        return Err(Error::Eval("empty corpus".into()));
    }
    let dists: Vec<Vec<f64>> = docs
        .iter()
        .map(|d| d.candidates.iter().map(|c| d.judgment.distance(c.phash)).collect())
        .collect();
    let k = thresholds.len();
    // per trial: (sum of P@1, sum of RR) per threshold over documents
    let per_trial = par::map_range(trials, |trial| -> Result<(Vec<f64>, Vec<f64>)> {
        let mut rng = seeded_rng(seed, trial as u64);
        let mut p = vec![0.0; k];
        let mut r = vec![0.0; k];
        for (doc, dist) in docs.iter().zip(&dists) {
            let mut order: Vec<usize> = (0..dist.len()).collect();
            order.shuffle(&mut rng);
            for (j, &t) in thresholds.iter().enumerate() {
                let first = order.iter().position(|&i| dist[i] <= t).ok_or_else(|| {
                    Error::Eval(format!("no relevant candidate for {} at threshold {t}", doc.doc_id))
                })?;
                if first == 0 {
                    p[j] += 1.0;
                }
                r[j] += 1.0 / (first + 1) as f64;
            }
        }
        Ok((p, r))
    });
    let mut p_tot = vec![0.0; k];
    let mut r_tot = vec![0.0; k];
    for res in per_trial {
        let (p, r) = res?;
        for j in 0..k {
            p_tot[j] += p[j];
            r_tot[j] += r[j];
        }
    }
    let denom = (trials * docs.len()) as f64;
    Ok(EvalCurve {
        approach_name: "random".into(),
        points: thresholds
            .iter()
            .enumerate()
            .map(|(j, &threshold)| CurvePoint {
                threshold,
                mrr: r_tot[j] / denom,
                p_at_1: p_tot[j] / denom,
                n_docs: docs.len(),
            })
            .collect(),
    })
}

/// Ranking by descending figure position.
pub fn last_figure_ranking(doc: &PreparedDocument) -> Result<Vec<usize>> {
    if doc.doc_kind != DocKind::Scholarly {
        return Err(Error::Eval(format!("last-figure baseline needs scholarly documents; {} is news", doc.doc_id)));
    }
    let pos = doc
        .candidates
        .iter()
        .map(|c| {
            c.scholarly
                .map(|s| s.figure_position as f64)
                .ok_or_else(|| Error::Eval(format!("{} lacks figure positions", doc.doc_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_by_scores(&pos))
}

pub fn last_figure_baseline(docs: &[PreparedDocument], thresholds: &[f64]) -> Result<EvalCurve> {
    let rankings = docs.iter().map(last_figure_ranking).collect::<Result<Vec<_>>>()?;
    evaluate_rankings("last_figure", docs, &rankings, thresholds)
}

/// Document-grouped folds over a prepared corpus.
pub fn corpus_folds(docs: &[PreparedDocument], k: usize, seed: u64) -> Result<FoldPlan> {
    let ids: Vec<String> = docs.iter().map(|d| d.doc_id.clone()).collect();
    make_folds(&ids, k, seed)
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed ^ (fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Out-of-fold probabilities: each document is scored by the model trained
/// on every other fold.
pub fn cv_probabilities(
    docs: &[PreparedDocument],
    plan: &FoldPlan,
    kind: ModelKind,
    spec: &FeatureSpec,
    hyper: &Hyperparams,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let index: std::collections::HashMap<&str, usize> = docs.iter().enumerate().map(|(i, d)| (d.doc_id.as_str(), i)).collect();
    let schema = spec.schema();
    let per_fold = par::map_range(plan.k, |fold| -> Result<Vec<(usize, Vec<f64>)>> {
        let (train, test) = plan.partition(fold, docs, |d| &d.doc_id)?;
        let examples = examples_from_documents(train, spec)?;
        let model = fit(kind, &schema, &examples, hyper, fold_seed(seed, fold))?;
        test.into_iter()
            .map(|d| {
                let feats = assemble_features(d, spec)?;
                let probs = feats.rows.iter().map(|r| model.predict_proba(r)).collect::<Result<Vec<_>>>()?;
                Ok((index[d.doc_id.as_str()], probs))
            })
            .collect()
    });
    let mut probs = vec![Vec::new(); docs.len()];
    for fold in per_fold {
        for (i, p) in fold? {
            probs[i] = p;
        }
    }
    if let Some(d) = docs.iter().zip(&probs).find(|(_, p)| p.is_empty()).map(|(d, _)| d) {
        return Err(Error::Eval(format!("{} missing from fold plan", d.doc_id)));
    }
    Ok(probs)
}

/// Name of a classifier approach, e.g. `random_forest[base+figure_position]`.
pub fn approach_name(kind: ModelKind, spec: &FeatureSpec) -> String {
    format!("{kind}[{spec}]")
}

pub fn evaluate_classifier(
    docs: &[PreparedDocument],
    plan: &FoldPlan,
    kind: ModelKind,
    spec: &FeatureSpec,
    hyper: &Hyperparams,
    seed: u64,
    thresholds: &[f64],
) -> Result<EvalCurve> {
    validate_thresholds(thresholds)?;
    let probs = cv_probabilities(docs, plan, kind, spec, hyper, seed)?;
    let rankings: Vec<Vec<usize>> = probs.iter().map(|p| rank_by_scores(p)).collect();
    evaluate_rankings(&approach_name(kind, spec), docs, &rankings, thresholds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub kind: ModelKind,
    pub features: FeatureSpec,
    pub mrr: f64,
    pub p_at_1: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub folds: FoldPlan,
    pub cells: Vec<GridCell>,
    /// Full curves for every cell, in cell order.
    pub curves: Vec<EvalCurve>,
}

impl GridResult {
    pub fn best(&self) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.best)
    }

    pub fn cell(&self, kind: ModelKind, features: &FeatureSpec) -> Option<&GridCell> {
        self.cells.iter().find(|c| c.kind == kind && &c.features == features)
    }
}

/// Every classifier × feature-set cell under one shared fold plan. Cell
/// metrics are taken at the first threshold. The best cell has the highest
/// P@1, then MRR, then comes first.
pub fn run_grid(
    docs: &[PreparedDocument],
    kinds: &[ModelKind],
    specs: &[FeatureSpec],
    hyper: &Hyperparams,
    k: usize,
    seed: u64,
    thresholds: &[f64],
) -> Result<GridResult> {
    validate_thresholds(thresholds)?;
    let plan = corpus_folds(docs, k, seed)?;
    let mut cells = Vec::new();
    let mut curves = Vec::new();
    for &kind in kinds {
        for spec in specs {
            let curve = evaluate_classifier(docs, &plan, kind, spec, hyper, seed, thresholds)?;
            let p = curve.points[0];
            cells.push(GridCell {
                kind,
                features: spec.clone(),
                mrr: p.mrr,
                p_at_1: p.p_at_1,
                best: false,
            });
            curves.push(curve);
        }
    }
    let mut best: Option<usize> = None;
    for (i, c) in cells.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => (c.p_at_1, c.mrr) > (cells[b].p_at_1, cells[b].mrr),
        };
        if better {
            best = Some(i);
        }
    }
    if let Some(b) = best {
        cells[b].best = true;
    }
    Ok(GridResult {
        folds: plan,
        cells,
        curves,
    })
}
