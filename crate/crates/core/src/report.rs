//! Report serialization. Every report starts with a header naming the tool
//! version, a hash of the run configuration and the seed; CSV reports carry
//! it as leading `#` comment lines.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{EvalCurve, GridResult};
use crate::learn::ModelKind;
use crate::pipeline::PreparedDocument;

pub const TOOL_NAME: &str = "cardforge";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    /// SHA-256 of the configuration's JSON serialization.
    pub config_hash: String,
    pub seed: u64,
}

impl ReportHeader {
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Result<Self> {
        Ok(ReportHeader {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash(config)?,
            seed,
        })
    }

    /// `#` comment lines prepended to CSV reports.
    pub fn csv_preamble(&self) -> String {
        format!(
            "# tool={} version={}\n# config_hash={}\n# seed={}\n",
            self.tool, self.version, self.config_hash, self.seed
        )
    }
}

pub fn config_hash<C: Serialize>(config: &C) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn csv_body(header: &ReportHeader, columns: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = header.csv_preamble();
    out.push_str(&String::from_utf8(body).expect("CSV of UTF-8 fields"));
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("CSV write failed: {e}"))
}

pub fn curves_csv(header: &ReportHeader, curves: &[EvalCurve]) -> Result<String> {
    let rows = curves
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| {
                vec![
                    c.approach_name.clone(),
                    p.threshold.to_string(),
                    p.mrr.to_string(),
                    p.p_at_1.to_string(),
                    p.n_docs.to_string(),
                ]
            })
        })
        .collect();
    csv_body(header, &["approach", "threshold", "mrr", "p_at_1", "n_docs"], rows)
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    header: &'a ReportHeader,
    #[serde(flatten)]
    body: T,
}

/// Pretty JSON object with `header` plus the fields of `body`.
pub fn to_json<T: Serialize>(header: &ReportHeader, body: T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Wrapped { header, body })?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct CurvesBody<'a> {
    curves: &'a [EvalCurve],
}

pub fn curves_json(header: &ReportHeader, curves: &[EvalCurve]) -> Result<String> {
    to_json(header, CurvesBody { curves })
}

/// One row per grid cell.
pub fn grid_csv(header: &ReportHeader, grid: &GridResult) -> Result<String> {
    let rows = grid
        .cells
        .iter()
        .map(|c| {
            vec![
                c.kind.to_string(),
                c.features.to_string(),
                c.mrr.to_string(),
                c.p_at_1.to_string(),
                c.best.to_string(),
            ]
        })
        .collect();
    csv_body(header, &["classifier", "feature_set", "mrr", "p_at_1", "best"], rows)
}

/// Classifiers as rows, an MRR and a P@1 column per feature set.
pub fn grid_table_csv(header: &ReportHeader, grid: &GridResult) -> Result<String> {
    let mut kinds: Vec<ModelKind> = Vec::new();
    let mut specs = Vec::new();
    for c in &grid.cells {
        if !kinds.contains(&c.kind) {
            kinds.push(c.kind);
        }
        if !specs.contains(&c.features) {
            specs.push(c.features.clone());
        }
    }
    let mut columns = vec!["classifier".to_string()];
    for s in &specs {
        columns.push(format!("{s} mrr"));
        columns.push(format!("{s} p_at_1"));
    }
    let rows = kinds
        .iter()
        .map(|k| {
            let mut row = vec![k.to_string()];
            for s in &specs {
                match grid.cell(*k, s) {
                    Some(c) => {
                        row.push(c.mrr.to_string());
                        row.push(c.p_at_1.to_string());
                    }
                    None => row.extend([String::new(), String::new()]),
                }
            }
            row
        })
        .collect();
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut out = csv_body(header, &cols, rows)?;
    if let Some(b) = grid.best() {
        out.push_str(&format!("# best={}[{}]\n", b.kind, b.features));
    }
    Ok(out)
}

pub const FEATURE_DUMP_COLUMNS: [&str; 11] = [
    "doc_id",
    "image_url",
    "source_location",
    "byte_size",
    "width",
    "height",
    "negative_space",
    "pixel_size",
    "aspect_ratio",
    "color_count",
    "phash_hex",
];

/// Base features and hash of every candidate, in corpus order.
pub fn features_csv(header: &ReportHeader, docs: &[PreparedDocument]) -> Result<String> {
    let rows = docs
        .iter()
        .flat_map(|d| {
            d.candidates.iter().map(move |c| {
                let b = &c.base;
                vec![
                    d.doc_id.clone(),
                    c.url.clone(),
                    c.locations.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("+"),
                    b.byte_size.to_string(),
                    b.width.to_string(),
                    b.height.to_string(),
                    b.negative_space.to_string(),
                    b.pixel_size.to_string(),
                    b.aspect_ratio.to_string(),
                    b.color_count.to_string(),
                    c.phash.to_hex(),
                ]
            })
        })
        .collect();
    csv_body(header, &FEATURE_DUMP_COLUMNS, rows)
}

/// Strips the `#` preamble so the rest parses as plain CSV.
pub fn strip_preamble(csv_text: &str) -> &str {
    let mut rest = csv_text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    rest
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::CurvePoint;

    fn header() -> ReportHeader {
        ReportHeader::new(&serde_json::json!({"seed": 1}), 1).unwrap()
    }

    #[test]
    fn config_hash_is_stable_sha256() {
        // sha256 of the two bytes "{}"
        assert_eq!(
            config_hash(&serde_json::json!({})).unwrap(),
            "44136fa355b3678a1146ad16f7e8649e94fb4fc21fe77e8310c060f61caaff8a"
        );
    }

    #[test]
    fn curves_csv_layout() {
        let curve = EvalCurve {
            approach_name: "random".into(),
            points: vec![CurvePoint {
                threshold: 0.5,
                mrr: 0.75,
                p_at_1: 0.5,
                n_docs: 4,
            }],
        };
        let text = curves_csv(&header(), &[curve]).unwrap();
        assert!(text.starts_with("# tool=cardforge"));
        assert!(text.contains("# seed=1\n"));
        assert_eq!(strip_preamble(&text), "approach,threshold,mrr,p_at_1,n_docs\nrandom,0.5,0.75,0.5,4\n");
    }
}
