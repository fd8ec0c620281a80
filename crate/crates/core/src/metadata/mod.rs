//! HTML META parsing, social card resolution, field categorization and
//! candidate image extraction.

mod card;
mod census;
mod srcset;

use std::collections::HashSet;
use std::sync::OnceLock;

use regex::bytes::Regex;
use scraper::{Html, Selector};
use serde::{Deserialize, Serialize};

use crate::corpus::normalize_url;

pub use card::{card_capability, resolve_card, CapabilityLevel, CardCapability, CardFields, Platform, TitleSource};
pub use census::{census, CapabilityRow, CategoryTally, CensusBucket, CensusReport, UNDATED_BUCKET};
pub use srcset::parse_srcset;

/// One `<meta>` key/value pair. `position` is 1-based document order among
/// the extracted fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaField {
    pub key: String,
    pub value: String,
    pub position: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaExtraction {
    pub fields: Vec<MetaField>,
    /// Text of the HTML `title` element, whitespace-collapsed; `None` when
    /// absent or empty.
    pub title: Option<String>,
}

impl MetaExtraction {
    /// First non-empty value for `key`.
    pub fn first(&self, key: &str) -> Option<&str> {
        first_value(&self.fields, key)
    }
}

pub(crate) fn first_value<'a>(fields: &'a [MetaField], key: &str) -> Option<&'a str> {
    fields
        .iter()
        .find(|f| f.key == key && !f.value.trim().is_empty())
        .map(|f| f.value.trim())
}

/// Decodes HTML bytes: BOM first, then a `charset=` declaration in the first
/// 1024 bytes, then UTF-8, and finally windows-1252 (which never fails).
pub fn decode_html(bytes: &[u8]) -> String {
    if let Some((enc, bom_len)) = encoding_rs::Encoding::for_bom(bytes) {
        return enc.decode_without_bom_handling(&bytes[bom_len..]).0.into_owned();
    }
    static CHARSET: OnceLock<Regex> = OnceLock::new();
    let re = CHARSET.get_or_init(|| Regex::new(r#"(?i)charset\s*=\s*["']?([A-Za-z0-9_.:-]+)"#).unwrap());
    let head = &bytes[..bytes.len().min(1024)];
    if let Some(label) = re.captures(head).and_then(|c| c.get(1)) {
        if let Some(enc) = encoding_rs::Encoding::for_label(label.as_bytes()) {
            let (text, _, _) = enc.decode(bytes);
            return text.into_owned();
        }
    }
    match std::str::from_utf8(bytes) {
        Ok(s) => s.to_string(),
        Err(_) => encoding_rs::WINDOWS_1252.decode(bytes).0.into_owned(),
    }
}

pub(crate) fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn selector(s: &str) -> Selector {
    Selector::parse(s).expect("static selector")
}

pub(crate) fn parse_document(html: &[u8]) -> Html {
    Html::parse_document(&decode_html(html))
}

pub(crate) fn meta_from_document(doc: &Html) -> MetaExtraction {
    let meta_sel = selector("head meta");
    let title_sel = selector("title");
    let mut fields = Vec::new();
    for el in doc.select(&meta_sel) {
        let v = el.value();
        let key = v.attr("property").or_else(|| v.attr("name")).map(|k| k.trim().to_lowercase());
        let (Some(key), Some(content)) = (key, v.attr("content")) else {
            continue;
        };
        if key.is_empty() {
            continue;
        }
        fields.push(MetaField {
            key,
            value: content.to_string(),
            position: fields.len() + 1,
        });
    }
    let title = doc
        .select(&title_sel)
        .next()
        .map(|t| collapse_ws(&t.text().collect::<String>()))
        .filter(|t| !t.is_empty());
    MetaExtraction { fields, title }
}

/// Extracts every HEAD `<meta>` element carrying both a key (`property` or
/// `name`) and `content`, plus the `title` element text.
pub fn extract_meta_fields(html: &[u8]) -> MetaExtraction {
    meta_from_document(&parse_document(html))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldCategory {
    Ogp,
    TwitterCard,
    DublinCore,
    Highwire,
    HtmlStandard,
    Other,
}

impl FieldCategory {
    pub const ALL: [FieldCategory; 6] = [
        FieldCategory::Ogp,
        FieldCategory::TwitterCard,
        FieldCategory::DublinCore,
        FieldCategory::Highwire,
        FieldCategory::HtmlStandard,
        FieldCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FieldCategory::Ogp => "ogp",
            FieldCategory::TwitterCard => "twitter_card",
            FieldCategory::DublinCore => "dublin_core",
            FieldCategory::Highwire => "highwire",
            FieldCategory::HtmlStandard => "html_standard",
            FieldCategory::Other => "other",
        }
    }
}

const HTML_STANDARD_FIELDS: &str = include_str!("../../data/html_standard_fields.txt");

fn html_standard_fields() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| {
        HTML_STANDARD_FIELDS
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect()
    })
}

pub fn categorize_field(key: &str) -> FieldCategory {
    if key.starts_with("og:") {
        FieldCategory::Ogp
    } else if key.starts_with("twitter:") {
        FieldCategory::TwitterCard
    } else if key.starts_with("dc.") || key.starts_with("dcterms.") {
        FieldCategory::DublinCore
    } else if key.starts_with("citation_") {
        FieldCategory::Highwire
    } else if html_standard_fields().contains(key) {
        FieldCategory::HtmlStandard
    } else {
        FieldCategory::Other
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceLocation {
    HeadMeta,
    BodyImg,
}

impl SourceLocation {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceLocation::HeadMeta => "head_meta",
            SourceLocation::BodyImg => "body_img",
        }
    }
}

/// A candidate striking image: a normalized URL and every place it was seen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCandidate {
    pub url: String,
    pub locations: Vec<SourceLocation>,
}

impl ImageCandidate {
    pub fn location_label(&self) -> String {
        self.locations.iter().map(|l| l.as_str()).collect::<Vec<_>>().join("+")
    }
}

/// META keys whose values name a striking image, in precedence order.
pub const IMAGE_META_KEYS: [&str; 3] = ["og:image", "twitter:image", "twitter:image:url"];

fn is_fetchable(url: &str) -> bool {
    url.starts_with("http://") || url.starts_with("https://")
}

/// Normalized metadata image URLs, canonical first: every `og:image`, then
/// `twitter:image` and its `twitter:image:url` alias. Duplicate-free.
pub fn metadata_image_urls(fields: &[MetaField], base_url: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for key in IMAGE_META_KEYS {
        for f in fields.iter().filter(|f| f.key == key) {
            if let Ok(u) = normalize_url(&f.value, base_url) {
                if is_fetchable(&u) && !out.contains(&u) {
                    out.push(u);
                }
            }
        }
    }
    out
}

pub(crate) fn candidates_from_document(doc: &Html, meta: &MetaExtraction, base_url: &str) -> Vec<ImageCandidate> {
    let mut out: Vec<ImageCandidate> = Vec::new();
    let mut push = |raw: &str, loc: SourceLocation| {
        let Ok(url) = normalize_url(raw, base_url) else {
            return;
        };
        if !is_fetchable(&url) {
            return;
        }
        match out.iter_mut().find(|c| c.url == url) {
            Some(c) => {
                if !c.locations.contains(&loc) {
                    c.locations.push(loc);
                }
            }
            None => out.push(ImageCandidate {
                url,
                locations: vec![loc],
            }),
        }
    };
    for f in &meta.fields {
        if IMAGE_META_KEYS.contains(&f.key.as_str()) {
            push(&f.value, SourceLocation::HeadMeta);
        }
    }
    for img in doc.select(&selector("img")) {
        if let Some(src) = img.value().attr("src") {
            push(src, SourceLocation::BodyImg);
        }
        if let Some(srcset) = img.value().attr("srcset") {
            for u in parse_srcset(srcset) {
                push(&u, SourceLocation::BodyImg);
            }
        }
    }
    out
}

/// Collects HEAD image META values and every IMG `src`/`srcset` URL,
/// normalized and deduplicated in first-seen order.
pub fn extract_candidates(html: &[u8], base_url: &str) -> Vec<ImageCandidate> {
    let doc = parse_document(html);
    let meta = meta_from_document(&doc);
    candidates_from_document(&doc, &meta, base_url)
}
