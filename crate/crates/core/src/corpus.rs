//! On-disk corpus format, document loading and eligibility filtering.
//!
//! A corpus is a directory holding a JSON Lines manifest plus the HTML and
//! image files it references. Everything is pre-fetched; nothing here talks
//! to the network.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Component, Path, PathBuf};

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};
use crate::metadata::{ImageCandidate, SourceLocation};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    News,
    Scholarly,
}

/// Stored bytes for one image URL. Corruption is only discovered at decode
/// time, so a `Present` payload may still fail to decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImagePayload {
    Present(Vec<u8>),
    Missing,
}

impl ImagePayload {
    pub fn bytes(&self) -> Option<&[u8]> {
        match self {
            ImagePayload::Present(b) => Some(b),
            ImagePayload::Missing => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub source_url: String,
    pub capture_datetime: Option<DateTime<Utc>>,
    pub html: Vec<u8>,
    /// Keyed by normalized image URL.
    pub images: BTreeMap<String, ImagePayload>,
    pub doc_kind: DocKind,
}

impl DocumentRecord {
    pub fn new(doc_id: impl Into<String>, source_url: impl Into<String>, kind: DocKind, html: impl Into<Vec<u8>>) -> Self {
        DocumentRecord {
            doc_id: doc_id.into(),
            source_url: source_url.into(),
            capture_datetime: None,
            html: html.into(),
            images: BTreeMap::new(),
            doc_kind: kind,
        }
    }

    /// Stores a payload under the normalized form of `url`.
    pub fn insert_image(&mut self, url: &str, payload: ImagePayload) {
        let key = normalize_url(url, &self.source_url).unwrap_or_else(|_| url.to_string());
        self.images.insert(key, payload);
    }

    /// Looks up a payload by an already-normalized URL.
    pub fn payload(&self, normalized_url: &str) -> &ImagePayload {
        self.images.get(normalized_url).unwrap_or(&ImagePayload::Missing)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestImage {
    pub url: String,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub doc_id: String,
    pub html_path: String,
    pub source_url: String,
    #[serde(default)]
    pub capture_datetime: Option<String>,
    pub doc_kind: DocKind,
    #[serde(default)]
    pub images: Vec<ManifestImage>,
}

#[derive(Debug, Clone)]
pub struct CorpusManifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE_NAME: &str = "manifest.jsonl";

impl CorpusManifest {
    /// Accepts either the manifest file itself or a directory containing
    /// `manifest.jsonl`.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path.push(MANIFEST_FILE_NAME);
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut entries = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Manifest {
                path: path.clone(),
                line: idx + 1,
                message,
            };
            let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            if !seen.insert(entry.doc_id.clone()) {
                return Err(bad(format!("duplicate doc_id {:?}", entry.doc_id)));
            }
            check_relative(&entry.html_path).map_err(&bad)?;
            for img in &entry.images {
                check_relative(&img.path).map_err(&bad)?;
            }
            if let Some(dt) = &entry.capture_datetime {
                parse_capture_datetime(dt).map_err(&bad)?;
            }
            entries.push(entry);
        }
        Ok(CorpusManifest { root, entries })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        fs::write(path.as_ref(), out).map_err(|e| Error::io(path.as_ref(), e))
    }
}

fn check_relative(p: &str) -> std::result::Result<(), String> {
    let path = Path::new(p);
    if p.is_empty() {
        return Err("empty path".into());
    }
    for c in path.components() {
        match c {
            Component::Normal(_) | Component::CurDir => {}
            _ => return Err(format!("path {p:?} escapes the corpus root")),
        }
    }
    Ok(())
}

/// Parses RFC 3339 timestamps, naive ISO-8601 (taken as UTC), plain dates and
/// 14-digit archive timestamps (`YYYYMMDDhhmmss`).
pub fn parse_capture_datetime(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y%m%d%H%M%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(naive.and_utc());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc());
    }
    Err(format!("unrecognized capture_datetime {s:?}"))
}

fn load_entry(root: &Path, entry: &ManifestEntry) -> DocumentRecord {
    let html = fs::read(root.join(&entry.html_path)).unwrap_or_default();
    let mut doc = DocumentRecord::new(&entry.doc_id, &entry.source_url, entry.doc_kind, html);
    doc.capture_datetime = entry
        .capture_datetime
        .as_deref()
        .map(|s| parse_capture_datetime(s).expect("validated when the manifest was read"));
    for img in &entry.images {
        let payload = match fs::read(root.join(&img.path)) {
            Ok(bytes) => ImagePayload::Present(bytes),
            Err(_) => ImagePayload::Missing,
        };
        doc.insert_image(&img.url, payload);
    }
    doc
}

/// Loads every document in the manifest. Missing image files are kept as
/// [`ImagePayload::Missing`]; a missing HTML file yields an empty document
/// that later fails eligibility with `parse_failure`.
pub fn load_corpus(manifest_path: impl AsRef<Path>) -> Result<Vec<DocumentRecord>> {
    let manifest = CorpusManifest::read(manifest_path)?;
    Ok(par::map(&manifest.entries, |e| load_entry(&manifest.root, e)))
}

/// Resolves `raw` against `base` and canonicalizes it: lowercase scheme and
/// host, no default port, no fragment.
pub fn normalize_url(raw: &str, base: &str) -> Result<String> {
    let base_url = Url::parse(base.trim()).map_err(|e| Error::Url {
        input: base.to_string(),
        reason: e.to_string(),
    })?;
    let raw_trim = raw.trim();
    if raw_trim.is_empty() {
        return Err(Error::Url {
            input: raw.to_string(),
            reason: "empty reference".into(),
        });
    }
    let mut url = base_url.join(raw_trim).map_err(|e| Error::Url {
        input: raw.to_string(),
        reason: e.to_string(),
    })?;
    url.set_fragment(None);
    Ok(url.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EligibilityReason {
    Ok,
    ParseFailure,
    NoMetadataImage,
    ImageProcessingFailure,
    NoBodyImage,
    SingleBodyImage,
    /// The metadata image matches no candidate, by URL or by identical
    /// perceptual hash.
    GroundTruthUnmatched,
}

impl EligibilityReason {
    pub const ALL: [EligibilityReason; 7] = [
        EligibilityReason::Ok,
        EligibilityReason::ParseFailure,
        EligibilityReason::NoMetadataImage,
        EligibilityReason::ImageProcessingFailure,
        EligibilityReason::NoBodyImage,
        EligibilityReason::SingleBodyImage,
        EligibilityReason::GroundTruthUnmatched,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EligibilityReason::Ok => "ok",
            EligibilityReason::ParseFailure => "parse_failure",
            EligibilityReason::NoMetadataImage => "no_metadata_image",
            EligibilityReason::ImageProcessingFailure => "image_processing_failure",
            EligibilityReason::NoBodyImage => "no_body_image",
            EligibilityReason::SingleBodyImage => "single_body_image",
            EligibilityReason::GroundTruthUnmatched => "ground_truth_unmatched",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EligibilityVerdict {
    pub eligible: bool,
    pub reason: EligibilityReason,
}

impl EligibilityVerdict {
    pub fn ok() -> Self {
        EligibilityVerdict {
            eligible: true,
            reason: EligibilityReason::Ok,
        }
    }

    pub fn fail(reason: EligibilityReason) -> Self {
        debug_assert_ne!(reason, EligibilityReason::Ok);
        EligibilityVerdict {
            eligible: false,
            reason,
        }
    }
}

/// Applies the eligibility rules in ledger order and reports the first one
/// that fails. Every candidate payload (and the ground truth payload) is
/// decoded to check it.
pub fn filter_eligible(doc: &DocumentRecord, candidates: &[ImageCandidate], ground_truth: Option<&str>) -> EligibilityVerdict {
    eligibility_with(doc, candidates, ground_truth, |url| {
        doc.payload(url)
            .bytes()
            .is_some_and(|b| crate::imagefeat::decode_image(b).is_ok())
    })
}

/// Same rules as [`filter_eligible`], with decodability supplied by the
/// caller so decoded rasters can be reused.
pub(crate) fn eligibility_with(
    doc: &DocumentRecord,
    candidates: &[ImageCandidate],
    ground_truth: Option<&str>,
    decodes: impl Fn(&str) -> bool,
) -> EligibilityVerdict {
    use EligibilityReason::*;
    if String::from_utf8_lossy(&doc.html).trim().is_empty() {
        return EligibilityVerdict::fail(ParseFailure);
    }
    let Some(gt) = ground_truth else {
        return EligibilityVerdict::fail(NoMetadataImage);
    };
    if !decodes(gt) || !candidates.iter().all(|c| decodes(&c.url)) {
        return EligibilityVerdict::fail(ImageProcessingFailure);
    }
    let body = candidates
        .iter()
        .filter(|c| c.locations.contains(&SourceLocation::BodyImg))
        .count();
    match body {
        0 => EligibilityVerdict::fail(NoBodyImage),
        1 => EligibilityVerdict::fail(SingleBodyImage),
        _ => EligibilityVerdict::ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_relative() {
        assert_eq!(
            normalize_url("img/a.png", "http://example.com/news/x.html").unwrap(),
            "http://example.com/news/img/a.png"
        );
    }

    #[test]
    fn normalize_canonical_form() {
        assert_eq!(
            normalize_url("HTTP://Example.COM:80/a#frag", "http://example.com/").unwrap(),
            "http://example.com/a"
        );
        assert_eq!(
            normalize_url("https://example.com:443/b", "http://x.org/").unwrap(),
            "https://example.com/b"
        );
    }

    #[test]
    fn normalize_scheme_relative() {
        assert_eq!(
            normalize_url("//cdn.example.com/b.jpg", "https://example.com/x").unwrap(),
            "https://cdn.example.com/b.jpg"
        );
    }

    #[test]
    fn normalize_errors() {
        assert!(normalize_url("a.png", "not a base").is_err());
        assert!(normalize_url("", "http://example.com/").is_err());
        assert!(normalize_url("http://exa mple.com/", "http://example.com/").is_err());
    }

    #[test]
    fn relative_paths_must_stay_inside_root() {
        assert!(check_relative("html/a.html").is_ok());
        assert!(check_relative("./a.png").is_ok());
        assert!(check_relative("../a.png").is_err());
        assert!(check_relative("/etc/passwd").is_err());
        assert!(check_relative("img/../../x").is_err());
    }

    #[test]
    fn capture_datetime_formats() {
        let a = parse_capture_datetime("2016-05-01T12:00:00Z").unwrap();
        let b = parse_capture_datetime("20160501120000").unwrap();
        let c = parse_capture_datetime("2016-05-01T12:00:00").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(parse_capture_datetime("yesterday").is_err());
    }

    fn cand(url: &str, locs: &[SourceLocation]) -> ImageCandidate {
        ImageCandidate {
            url: url.to_string(),
            locations: locs.to_vec(),
        }
    }

    #[test]
    fn rules_apply_in_order() {
        let doc = DocumentRecord::new("d", "http://e.com/", DocKind::News, "<html></html>");
        let all_ok = |_: &str| true;
        let body = [SourceLocation::BodyImg];
        let v = eligibility_with(&doc, &[cand("a", &body)], None, all_ok);
        assert_eq!(v.reason, EligibilityReason::NoMetadataImage);

        let v = eligibility_with(&doc, &[cand("a", &body)], Some("a"), all_ok);
        assert_eq!(v.reason, EligibilityReason::SingleBodyImage);

        let v = eligibility_with(&doc, &[cand("a", &[SourceLocation::HeadMeta])], Some("a"), all_ok);
        assert_eq!(v.reason, EligibilityReason::NoBodyImage);

        let three = [cand("a", &body), cand("b", &body), cand("c", &body)];
        let v = eligibility_with(&doc, &three, Some("a"), all_ok);
        assert_eq!(v, EligibilityVerdict::ok());

        let v = eligibility_with(&doc, &three, Some("a"), |u| u != "b");
        assert_eq!(v.reason, EligibilityReason::ImageProcessingFailure);

        let empty = DocumentRecord::new("e", "http://e.com/", DocKind::News, "  ");
        let v = eligibility_with(&empty, &three, Some("a"), all_ok);
        assert_eq!(v.reason, EligibilityReason::ParseFailure);
    }

    #[test]
    fn verdict_reason_ok_iff_eligible() {
        for r in EligibilityReason::ALL {
            let v = if r == EligibilityReason::Ok {
                EligibilityVerdict::ok()
            } else {
                EligibilityVerdict::fail(r)
            };
            assert_eq!(v.eligible, v.reason == EligibilityReason::Ok);
        }
    }
}
