//! Turns loaded documents into evaluation-ready candidate sets: candidates,
//! eligibility, decoded features, hashes, labels and the relevance judgment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{eligibility_with, DocKind, DocumentRecord, EligibilityReason, EligibilityVerdict};
use crate::eval::RelevanceJudgment;
use crate::imagefeat::{base_features, decode_image, phash, BaseFeatures, PerceptualHash, RasterImage};
use crate::learn::Label;
use crate::metadata::{candidates_from_document, meta_from_document, metadata_image_urls, parse_document, ImageCandidate, SourceLocation};
use crate::par;
use crate::scholarly::{article_from_document, scholarly_features, ScholarlyFeatures, Stopwords};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedCandidate {
    pub url: String,
    pub locations: Vec<SourceLocation>,
    pub base: BaseFeatures,
    pub phash: PerceptualHash,
    pub scholarly: Option<ScholarlyFeatures>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDocument {
    pub doc_id: String,
    pub doc_kind: DocKind,
    pub candidates: Vec<PreparedCandidate>,
    pub judgment: RelevanceJudgment,
}

impl PreparedDocument {
    pub fn hashes(&self) -> Vec<PerceptualHash> {
        self.candidates.iter().map(|c| c.phash).collect()
    }
}

struct Gathered {
    candidates: Vec<ImageCandidate>,
    scholarly: Option<Vec<ScholarlyFeatures>>,
    meta_urls: Vec<String>,
    decoded: BTreeMap<String, Option<RasterImage>>,
}

fn gather(doc: &DocumentRecord, stopwords: &Stopwords) -> Result<Gathered, EligibilityReason> {
    if String::from_utf8_lossy(&doc.html).trim().is_empty() {
        return Err(EligibilityReason::ParseFailure);
    }
    let html = parse_document(&doc.html);
    let meta = meta_from_document(&html);
    let meta_urls = metadata_image_urls(&meta.fields, &doc.source_url);

    let (candidates, scholarly) = match doc.doc_kind {
        DocKind::News => (candidates_from_document(&html, &meta, &doc.source_url), None),
        DocKind::Scholarly => {
            let article = article_from_document(&html, &doc.source_url).map_err(|_| EligibilityReason::ParseFailure)?;
            let feats = scholarly_features(&article, stopwords);
            let mut cands: Vec<ImageCandidate> = Vec::new();
            let mut kept = Vec::new();
            for (fig, f) in article.figures.iter().zip(feats) {
                if cands.iter().any(|c| c.url == fig.image_url) {
                    continue;
                }
                let mut locations = vec![SourceLocation::BodyImg];
                if meta_urls.contains(&fig.image_url) {
                    locations.insert(0, SourceLocation::HeadMeta);
                }
                cands.push(ImageCandidate {
                    url: fig.image_url.clone(),
                    locations,
                });
                kept.push(f);
            }
            (cands, Some(kept))
        }
    };

    let mut decoded: BTreeMap<String, Option<RasterImage>> = BTreeMap::new();
    for url in candidates.iter().map(|c| &c.url).chain(&meta_urls) {
        if !decoded.contains_key(url) {
            let raster = doc.payload(url).bytes().and_then(|b| decode_image(b).ok());
            decoded.insert(url.clone(), raster);
        }
    }
    Ok(Gathered {
        candidates,
        scholarly,
        meta_urls,
        decoded,
    })
}

fn candidate(g: &Gathered, i: usize, raster: &RasterImage) -> PreparedCandidate {
    let c = &g.candidates[i];
    PreparedCandidate {
        url: c.url.clone(),
        locations: c.locations.clone(),
        base: base_features(raster),
        phash: phash(raster),
        scholarly: g.scholarly.as_ref().map(|s| s[i]),
        label: if g.meta_urls.contains(&c.url) { Label::PresentInMetadata } else { Label::Other },
    }
}

/// Prepares one document, or reports the first eligibility rule it fails.
pub fn prepare_document(doc: &DocumentRecord, stopwords: &Stopwords) -> Result<PreparedDocument, EligibilityVerdict> {
    let g = gather(doc, stopwords).map_err(EligibilityVerdict::fail)?;
    let ground_truth = g.meta_urls.first().map(String::as_str);
    let verdict = eligibility_with(doc, &g.candidates, ground_truth, |u| g.decoded.get(u).is_some_and(Option::is_some));
    if !verdict.eligible {
        return Err(verdict);
    }
    let gt_url = ground_truth.expect("eligible documents have ground truth");
    let hash_of = |u: &str| g.decoded.get(u).and_then(|r| r.as_ref()).map(phash);
    let gt_hash = hash_of(gt_url).expect("ground truth decoded");
    let alternate_hashes = g.meta_urls[1..].iter().filter_map(|u| hash_of(u)).collect();

    let prepared: Vec<PreparedCandidate> = (0..g.candidates.len())
        .map(|i| candidate(&g, i, g.decoded[&g.candidates[i].url].as_ref().expect("candidates decoded")))
        .collect();
    if !prepared.iter().any(|c| c.url == gt_url || c.phash == gt_hash) {
        return Err(EligibilityVerdict::fail(EligibilityReason::GroundTruthUnmatched));
    }
    Ok(PreparedDocument {
        doc_id: doc.doc_id.clone(),
        doc_kind: doc.doc_kind,
        candidates: prepared,
        judgment: RelevanceJudgment {
            doc_id: doc.doc_id.clone(),
            ground_truth_url: gt_url.to_string(),
            ground_truth_hash: gt_hash,
            alternate_hashes,
        },
    })
}

/// Body-image candidates that decode, with features, for documents that
/// need a predicted image. No eligibility rules apply.
pub fn body_candidates(doc: &DocumentRecord, stopwords: &Stopwords) -> Result<Vec<PreparedCandidate>, EligibilityReason> {
    let g = gather(doc, stopwords)?;
    Ok((0..g.candidates.len())
        .filter(|&i| g.candidates[i].locations.contains(&SourceLocation::BodyImg))
        .filter_map(|i| g.decoded[&g.candidates[i].url].as_ref().map(|r| candidate(&g, i, r)))
        .collect())
}

/// One row of the corpus reduction ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub reason: EligibilityReason,
    pub removed: usize,
    pub running_total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub documents: Vec<PreparedDocument>,
    pub verdicts: Vec<(String, EligibilityVerdict)>,
}

impl Preparation {
    /// Removal counts in rule order, starting from the full corpus.
    pub fn reduction(&self) -> Vec<ReductionRow> {
        let mut remaining = self.verdicts.len();
        EligibilityReason::ALL
            .into_iter()
            .filter(|r| *r != EligibilityReason::Ok)
            .map(|reason| {
                let removed = self.verdicts.iter().filter(|(_, v)| v.reason == reason).count();
                remaining -= removed;
                ReductionRow {
                    reason,
                    removed,
                    running_total: remaining,
                }
            })
            .collect()
    }
}

/// Prepares every document, keeping eligible ones in corpus order.
pub fn prepare_corpus(docs: &[DocumentRecord], stopwords: &Stopwords) -> Preparation {
    let results = par::map(docs, |d| prepare_document(d, stopwords));
    let mut documents = Vec::new();
    let mut verdicts = Vec::new();
    for (doc, r) in docs.iter().zip(results) {
        match r {
            Ok(p) => {
                verdicts.push((doc.doc_id.clone(), EligibilityVerdict::ok()));
                documents.push(p);
            }
            Err(v) => verdicts.push((doc.doc_id.clone(), v)),
        }
    }
    Preparation { documents, verdicts }
}
