use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::{card_capability, categorize_field, extract_meta_fields, resolve_card, CapabilityLevel, FieldCategory, Platform};
use crate::corpus::DocumentRecord;
use crate::par;

pub const UNDATED_BUCKET: &str = "undated";
pub const OVERALL_BUCKET: &str = "all";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTally {
    pub category: FieldCategory,
    pub docs_with: usize,
    pub fraction: f64,
}

/// Documents able to produce at least `row` on `platform`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityRow {
    pub platform: Platform,
    pub row: CapabilityLevel,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusBucket {
    /// Capture year, `"undated"`, or `"all"` for the overall bucket.
    pub year: String,
    pub doc_count: usize,
    pub categories: Vec<CategoryTally>,
    pub capability: Vec<CapabilityRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub total_docs: usize,
    pub overall: CensusBucket,
    /// Dated buckets in ascending year order, then the undated bucket if any.
    pub by_year: Vec<CensusBucket>,
}

struct DocTally {
    categories: [bool; 6],
    levels: [CapabilityLevel; 2],
}

fn tally(doc: &DocumentRecord) -> DocTally {
    let meta = extract_meta_fields(&doc.html);
    let mut categories = [false; 6];
    for f in &meta.fields {
        let c = categorize_field(&f.key);
        categories[FieldCategory::ALL.iter().position(|x| *x == c).unwrap()] = true;
    }
    let levels = Platform::ALL.map(|p| {
        let card = resolve_card(&meta.fields, meta.title.as_deref(), p);
        card_capability(&card, &meta.fields, p).level
    });
    DocTally { categories, levels }
}

fn fraction(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

fn bucket(year: String, docs: &[&DocTally]) -> CensusBucket {
    let n = docs.len();
    let categories = FieldCategory::ALL
        .iter()
        .enumerate()
        .map(|(i, &category)| {
            let docs_with = docs.iter().filter(|d| d.categories[i]).count();
            CategoryTally {
                category,
                docs_with,
                fraction: fraction(docs_with, n),
            }
        })
        .collect();
    let mut capability = Vec::new();
    for (pi, platform) in Platform::ALL.into_iter().enumerate() {
        for row in CapabilityLevel::ROWS {
            let count = docs.iter().filter(|d| d.levels[pi].meets(row, platform)).count();
            capability.push(CapabilityRow {
                platform,
                row,
                count,
                fraction: fraction(count, n),
            });
        }
    }
    CensusBucket {
        year,
        doc_count: n,
        categories,
        capability,
    }
}

/// Tallies metadata categories and card capability per capture year and
/// overall. Documents without a capture datetime land in the `undated`
/// bucket.
pub fn census(corpus: &[DocumentRecord]) -> CensusReport {
    let tallies = par::map(corpus, tally);
    let mut years: BTreeMap<i32, Vec<&DocTally>> = BTreeMap::new();
    let mut undated = Vec::new();
    for (doc, t) in corpus.iter().zip(&tallies) {
        match doc.capture_datetime {
            Some(dt) => years.entry(dt.year()).or_default().push(t),
            None => undated.push(t),
        }
    }
    let all: Vec<&DocTally> = tallies.iter().collect();
    let mut by_year: Vec<CensusBucket> = years.into_iter().map(|(y, d)| bucket(y.to_string(), &d)).collect();
    if !undated.is_empty() {
        by_year.push(bucket(UNDATED_BUCKET.to_string(), &undated));
    }
    CensusReport {
        total_docs: corpus.len(),
        overall: bucket(OVERALL_BUCKET.to_string(), &all),
        by_year,
    }
}

impl CensusReport {
    fn buckets(&self) -> impl Iterator<Item = &CensusBucket> {
        self.by_year.iter().chain(std::iter::once(&self.overall))
    }

    /// `year,category,fraction,doc_count`, where `doc_count` is the number of
    /// documents in the bucket.
    pub fn categories_csv(&self) -> String {
        let mut out = String::from("year,category,fraction,doc_count\n");
        for b in self.buckets() {
            for c in &b.categories {
                let _ = writeln!(out, "{},{},{},{}", b.year, c.category.as_str(), c.fraction, b.doc_count);
            }
        }
        out
    }

    pub fn capability_csv(&self) -> String {
        let mut out = String::from("year,platform,row,count,fraction\n");
        for b in self.buckets() {
            for r in &b.capability {
                let _ = writeln!(out, "{},{},{},{},{}", b.year, r.platform.as_str(), r.row.as_str(), r.count, r.fraction);
            }
        }
        out
    }

    pub fn bucket(&self, year: &str) -> Option<&CensusBucket> {
        self.buckets().find(|b| b.year == year)
    }
}

impl CensusBucket {
    pub fn fraction(&self, category: FieldCategory) -> f64 {
        self.categories.iter().find(|c| c.category == category).map_or(0.0, |c| c.fraction)
    }

    pub fn capable(&self, platform: Platform, row: CapabilityLevel) -> usize {
        self.capability
            .iter()
            .find(|r| r.platform == platform && r.row == row)
            .map_or(0, |r| r.count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{parse_capture_datetime, DocKind};

    fn doc(id: &str, head: &str, date: Option<&str>) -> DocumentRecord {
        let mut d = DocumentRecord::new(id, "http://e.com/", DocKind::News, format!("<html><head>{head}</head><body></body></html>"));
        d.capture_datetime = date.map(|s| parse_capture_datetime(s).unwrap());
        d
    }

    #[test]
    fn single_og_document() {
        let r = census(&[doc("a", r#"<meta property="og:title" content="t">"#, None)]);
        assert_eq!(r.overall.fraction(FieldCategory::Ogp), 1.0);
        assert_eq!(r.overall.fraction(FieldCategory::TwitterCard), 0.0);
        assert_eq!(r.by_year.len(), 1);
        assert_eq!(r.by_year[0].year, UNDATED_BUCKET);
    }

    #[test]
    fn pre_card_era_document() {
        let r = census(&[doc("a", r#"<meta name="description" content="x"><title>T</title>"#, Some("2009-03-01T00:00:00Z"))]);
        let b = r.bucket("2009").unwrap();
        assert_eq!(b.doc_count, 1);
        assert_eq!(b.fraction(FieldCategory::Ogp), 0.0);
        assert_eq!(b.fraction(FieldCategory::HtmlStandard), 1.0);
        assert_eq!(b.capable(Platform::Facebook, CapabilityLevel::TitleOnly), 1);
        assert_eq!(b.capable(Platform::Twitter, CapabilityLevel::TitleOnly), 0);
    }

    #[test]
    fn csv_shape() {
        let r = census(&[doc("a", "", Some("2016-01-01"))]);
        let csv = r.categories_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "year,category,fraction,doc_count");
        // 2016 bucket and overall bucket, 6 categories each
        assert_eq!(lines.len(), 1 + 12);
        assert!(lines.contains(&"2016,ogp,0,1"));
    }
}
