//! PLOS-style article parsing: figures with captions and in-text
//! references, plus the section, caption and figure-position features.
//!
//! The markup contract is described in `docs/scholarly-html.md`. In short:
//! figure blocks carry a `data-doi` attribute whose last segment is
//! `gNNN` (graphic), `tNNN` (table) or something else (equations and
//! supplements, dropped); `<h2>` headings delimit sections; in-text anchors
//! point at `#<journal>.<id>.<asset>` and their text names the figure.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use ego_tree::NodeRef;
use regex::Regex;
use scraper::{ElementRef, Html, Node, Selector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::normalize_url;
use crate::metadata::{collapse_ws, first_value, meta_from_document, parse_document};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ParseError {
    #[error("caption extraction failed for {asset_id}")]
    CaptionMissing { asset_id: String },
    #[error("figure {asset_id} has no image")]
    ImageMissing { asset_id: String },
    #[error("link text {text:?} does not match {asset_id}")]
    LinkTextMismatch { asset_id: String, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureKind {
    Graphic,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceOffset {
    /// 1-based; front matter is section 0 and never recorded.
    pub section_index: usize,
    pub char_offset: usize,
    pub word_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureRecord {
    pub figure_id: String,
    pub kind: FigureKind,
    pub image_url: String,
    pub caption_text: String,
    pub position_index: usize,
    pub reference_offsets: Vec<ReferenceOffset>,
    pub reference_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScholarlyArticle {
    pub title: String,
    /// Body text of each counted section, whitespace-collapsed. Index 0 is
    /// section 1.
    pub sections: Vec<String>,
    pub figures: Vec<FigureRecord>,
}

fn asset_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\.([a-z])(\d{3,})$").unwrap())
}

fn link_text_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\W*(fig(?:ure)?s?|tables?)\.?\s*(\d+)").unwrap())
}

fn supplemental_heading_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)supporting information|supplementary|supplemental|appendix").unwrap())
}

fn anchor_key(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
        .collect()
}

struct RawFigure {
    asset_id: String,
    key: String,
    elem_id: Option<String>,
    kind: FigureKind,
    ordinal: u32,
    image_src: String,
    caption: String,
    supplemental: bool,
}

struct RawRef {
    target: String,
    text: String,
    offset: ReferenceOffset,
}

#[derive(Default)]
struct Section {
    text: String,
    supplemental: bool,
}

impl Section {
    fn push_text(&mut self, s: &str) {
        for c in s.chars() {
            if c.is_whitespace() {
                if !self.text.is_empty() && !self.text.ends_with(' ') {
                    self.text.push(' ');
                }
            } else {
                self.text.push(c);
            }
        }
    }

    fn boundary(&mut self) {
        self.push_text(" ");
    }
}

#[derive(Default)]
struct Walker {
    // sections[0] is front matter
    sections: Vec<Section>,
    figures: Vec<RawFigure>,
    refs: Vec<RawRef>,
    errors: Vec<ParseError>,
}

const INLINE: [&str; 10] = ["a", "span", "em", "i", "b", "strong", "sup", "sub", "small", "abbr"];

fn class_has(el: &ElementRef, names: &[&str]) -> bool {
    el.value().classes().any(|c| names.contains(&c))
}

impl Walker {
    fn current(&mut self) -> &mut Section {
        self.sections.last_mut().expect("front matter section exists")
    }

    fn section_number(&self) -> usize {
        self.sections.len() - 1
    }

    fn walk(&mut self, node: NodeRef<Node>) {
        match node.value() {
            Node::Text(t) => self.current().push_text(t),
            Node::Element(_) => {
                let el = ElementRef::wrap(node).expect("element node");
                self.element(el);
            }
            _ => {}
        }
    }

    fn element(&mut self, el: ElementRef) {
        let name = el.value().name();
        if matches!(name, "script" | "style" | "noscript") {
            return;
        }
        if let Some(doi) = el.value().attr("data-doi") {
            self.figure(el, doi);
            return;
        }
        if name == "h2" {
            let heading = collapse_ws(&el.text().collect::<String>());
            let supplemental = supplemental_heading_re().is_match(&heading);
            self.sections.push(Section {
                text: String::new(),
                supplemental,
            });
            return;
        }
        if name == "a" {
            if let Some(target) = el.value().attr("href").and_then(|h| h.strip_prefix('#')) {
                let section = self.section_number();
                let sec = &self.sections[section];
                if section > 0 && !sec.supplemental {
                    let offset = ReferenceOffset {
                        section_index: section,
                        char_offset: sec.text.chars().count(),
                        word_offset: sec.text.split_whitespace().count(),
                    };
                    self.refs.push(RawRef {
                        target: target.to_string(),
                        text: collapse_ws(&el.text().collect::<String>()),
                        offset,
                    });
                }
            }
        }
        let block = !INLINE.contains(&name);
        if block {
            self.current().boundary();
        }
        for child in el.children() {
            self.walk(child);
        }
        if block {
            self.current().boundary();
        }
    }

    fn figure(&mut self, el: ElementRef, doi: &str) {
        let doi = doi.trim();
        let Some(caps) = asset_re().captures(doi) else {
            return;
        };
        let kind = match &caps[1] {
            "g" => FigureKind::Graphic,
            "t" => FigureKind::Table,
            _ => return,
        };
        let ordinal: u32 = caps[2].parse().unwrap_or(0);
        let supplemental = self.current().supplemental || class_has(&el, &["supplementary-material"]);
        let caption_sel = Selector::parse("figcaption, .figcaption, .caption").unwrap();
        let caption = el
            .select(&caption_sel)
            .next()
            .map(|c| collapse_ws(&c.text().collect::<String>()))
            .unwrap_or_default();
        let img_sel = Selector::parse("img[src]").unwrap();
        let image_src = el
            .select(&img_sel)
            .next()
            .and_then(|i| i.value().attr("src"))
            .unwrap_or_default()
            .trim()
            .to_string();
        let segments: Vec<&str> = doi.rsplit('.').take(2).collect();
        let key = anchor_key(&format!("{}.{}", segments.get(1).copied().unwrap_or(""), segments[0]));
        if !supplemental {
            if caption.is_empty() {
                self.errors.push(ParseError::CaptionMissing { asset_id: doi.to_string() });
            } else if image_src.is_empty() {
                self.errors.push(ParseError::ImageMissing { asset_id: doi.to_string() });
            }
        }
        self.figures.push(RawFigure {
            asset_id: doi.to_string(),
            key,
            elem_id: el.value().attr("id").map(str::to_string),
            kind,
            ordinal,
            image_src,
            caption,
            supplemental,
        });
    }
}

fn link_text_matches(fig: &RawFigure, text: &str) -> bool {
    let Some(c) = link_text_re().captures(text) else {
        return false;
    };
    let word = c[1].to_ascii_lowercase();
    let kind_ok = match fig.kind {
        FigureKind::Graphic => word.starts_with("fig"),
        FigureKind::Table => word.starts_with("table"),
    };
    kind_ok && c[2].parse::<u32>().ok() == Some(fig.ordinal)
}

fn body_element(doc: &Html) -> ElementRef<'_> {
    for s in [".article-content", "article", "body"] {
        if let Some(el) = doc.select(&Selector::parse(s).unwrap()).next() {
            return el;
        }
    }
    doc.root_element()
}

pub(crate) fn article_from_document(doc: &Html, base_url: &str) -> Result<ScholarlyArticle, ParseError> {
    let meta = meta_from_document(doc);
    let body = body_element(doc);
    let mut w = Walker {
        sections: vec![Section::default()],
        ..Walker::default()
    };
    for child in body.children() {
        w.walk(child);
    }
    if let Some(e) = w.errors.into_iter().next() {
        return Err(e);
    }

    // renumber counted sections, skipping front matter and supplements
    let mut renumber = HashMap::new();
    let mut sections = Vec::new();
    for (i, s) in w.sections.iter().enumerate().skip(1) {
        if !s.supplemental {
            sections.push(s.text.trim_end().to_string());
            renumber.insert(i, sections.len());
        }
    }

    let mut figures = Vec::new();
    for fig in w.figures.iter().filter(|f| !f.supplemental) {
        let mut offsets = Vec::new();
        for r in &w.refs {
            let target = anchor_key(&r.target);
            let hit = fig.elem_id.as_deref() == Some(r.target.as_str()) || target.ends_with(&fig.key);
            if !hit {
                continue;
            }
            if !link_text_matches(fig, &r.text) {
                return Err(ParseError::LinkTextMismatch {
                    asset_id: fig.asset_id.clone(),
                    text: r.text.clone(),
                });
            }
            offsets.push(ReferenceOffset {
                section_index: renumber[&r.offset.section_index],
                ..r.offset
            });
        }
        if offsets.is_empty() {
            continue;
        }
        let image_url = normalize_url(&fig.image_src, base_url).unwrap_or_else(|_| fig.image_src.clone());
        figures.push(FigureRecord {
            figure_id: fig.asset_id.clone(),
            kind: fig.kind,
            image_url,
            caption_text: fig.caption.clone(),
            position_index: figures.len() + 1,
            reference_count: offsets.len(),
            reference_offsets: offsets,
        });
    }

    let title = first_value(&meta.fields, "citation_title")
        .map(str::to_string)
        .or_else(|| {
            body.select(&Selector::parse("h1").unwrap())
                .next()
                .map(|h| collapse_ws(&h.text().collect::<String>()))
        })
        .or(meta.title.clone())
        .unwrap_or_default();

    Ok(ScholarlyArticle {
        title,
        sections,
        figures,
    })
}

/// Parses the article and returns its section texts and figures.
pub fn parse_article(html: &[u8], base_url: &str) -> Result<ScholarlyArticle, ParseError> {
    article_from_document(&parse_document(html), base_url)
}

/// Captioned, cited graphics and tables in document order. Equations,
/// supplemental figures and never-cited figures are dropped.
pub fn parse_figures(html: &[u8], base_url: &str) -> Result<Vec<FigureRecord>, ParseError> {
    parse_article(html, base_url).map(|a| a.figures)
}

// ---------------------------------------------------------------------------
// features

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionFeatures {
    pub section_index: usize,
    pub section_index_scaled: f64,
    pub char_position_in_section: usize,
    pub word_position_in_section: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("figure {0} has no references")]
pub struct UnreferencedFigure(pub String);

/// Features of the earliest reference to `fig`.
pub fn section_features(sections: &[String], fig: &FigureRecord) -> Result<SectionFeatures, UnreferencedFigure> {
    let first = fig
        .reference_offsets
        .iter()
        .min_by_key(|r| (r.section_index, r.char_offset))
        .ok_or_else(|| UnreferencedFigure(fig.figure_id.clone()))?;
    let total = sections.len().max(first.section_index).max(1);
    Ok(SectionFeatures {
        section_index: first.section_index,
        section_index_scaled: first.section_index as f64 / total as f64,
        char_position_in_section: first.char_offset,
        word_position_in_section: first.word_offset,
    })
}

/// Word filter used for caption and title analysis.
#[derive(Debug, Clone)]
pub struct Stopwords {
    words: HashSet<String>,
}

pub const STOPWORDS_ENV: &str = "CARDFORGE_STOPWORDS";
const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

impl Stopwords {
    pub fn parse(text: &str) -> Self {
        Stopwords {
            words: text
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect(),
        }
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        std::fs::read_to_string(path).map(|t| Self::parse(&t))
    }

    /// The bundled list, or the file named by `CARDFORGE_STOPWORDS`. Read
    /// once per process; an unreadable override falls back to the bundled
    /// list.
    pub fn active() -> &'static Stopwords {
        static ACTIVE: OnceLock<Stopwords> = OnceLock::new();
        ACTIVE.get_or_init(|| {
            std::env::var_os(STOPWORDS_ENV)
                .and_then(|p| Stopwords::from_file(p).ok())
                .unwrap_or_else(Stopwords::bundled)
        })
    }

    pub fn contains(&self, w: &str) -> bool {
        self.words.contains(w)
    }

    /// Lowercased alphanumeric tokens with stopwords removed.
    pub fn content_words(&self, text: &str) -> Vec<String> {
        tokenize(text).into_iter().filter(|w| !self.contains(w)).collect()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaptionFeatures {
    pub caption_tf_rank: usize,
    pub caption_tf_rank_scaled: f64,
    pub jaccard_title_caption: f64,
}

fn jaccard_distance(a: &HashSet<&str>, b: &HashSet<&str>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(b).count() as f64 / union as f64
}

/// Caption ranks by summed term frequency, with term frequencies taken over
/// `document_text` (the whole article). Ties go to the earlier caption.
pub fn caption_features_in(
    title: &str,
    captions: &[String],
    document_text: &str,
    stopwords: &Stopwords,
) -> Vec<CaptionFeatures> {
    let doc_words = stopwords.content_words(document_text);
    let mut tf: HashMap<&str, f64> = HashMap::new();
    for w in &doc_words {
        *tf.entry(w.as_str()).or_default() += 1.0;
    }
    let total = doc_words.len().max(1) as f64;
    let caption_words: Vec<Vec<String>> = captions.iter().map(|c| stopwords.content_words(c)).collect();
    let scores: Vec<f64> = caption_words
        .iter()
        .map(|ws| ws.iter().map(|w| tf.get(w.as_str()).copied().unwrap_or(0.0) / total).sum())
        .collect();
    let mut order: Vec<usize> = (0..captions.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut rank = vec![0; captions.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    let title_words = stopwords.content_words(title);
    let title_set: HashSet<&str> = title_words.iter().map(String::as_str).collect();
    let n = captions.len() as f64;
    caption_words
        .iter()
        .zip(rank)
        .map(|(ws, r)| {
            let set: HashSet<&str> = ws.iter().map(String::as_str).collect();
            CaptionFeatures {
                caption_tf_rank: r,
                caption_tf_rank_scaled: r as f64 / n,
                jaccard_title_caption: jaccard_distance(&title_set, &set),
            }
        })
        .collect()
}

/// [`caption_features_in`] with the title and captions themselves as the
/// document text.
pub fn caption_features(title: &str, captions: &[String]) -> Vec<CaptionFeatures> {
    let text = std::iter::once(title)
        .chain(captions.iter().map(String::as_str))
        .collect::<Vec<_>>()
        .join(" ");
    caption_features_in(title, captions, &text, Stopwords::active())
}

/// `(figure_position, figure_position_scaled)` per figure.
pub fn figure_position_features(figures: &[FigureRecord]) -> Vec<(usize, f64)> {
    let n = figures.len() as f64;
    (1..=figures.len()).map(|p| (p, p as f64 / n)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScholarlyFeatures {
    pub section_index: usize,
    pub section_index_scaled: f64,
    pub char_position_in_section: usize,
    pub word_position_in_section: usize,
    pub caption_tf_rank: usize,
    pub caption_tf_rank_scaled: f64,
    pub jaccard_title_caption: f64,
    pub figure_position: usize,
    pub figure_position_scaled: f64,
    pub reference_count: usize,
}

/// All per-figure features for a parsed article, in figure order.
pub fn scholarly_features(article: &ScholarlyArticle, stopwords: &Stopwords) -> Vec<ScholarlyFeatures> {
    let captions: Vec<String> = article.figures.iter().map(|f| f.caption_text.clone()).collect();
    let mut text = article.title.clone();
    for s in article.sections.iter().chain(&captions) {
        text.push(' ');
        text.push_str(s);
    }
    let caps = caption_features_in(&article.title, &captions, &text, stopwords);
    let positions = figure_position_features(&article.figures);
    article
        .figures
        .iter()
        .zip(caps)
        .zip(positions)
        .map(|((fig, cap), (pos, pos_scaled))| {
            let sec = section_features(&article.sections, fig).expect("parsed figures are referenced");
            ScholarlyFeatures {
                section_index: sec.section_index,
                section_index_scaled: sec.section_index_scaled,
                char_position_in_section: sec.char_position_in_section,
                word_position_in_section: sec.word_position_in_section,
                caption_tf_rank: cap.caption_tf_rank,
                caption_tf_rank_scaled: cap.caption_tf_rank_scaled,
                jaccard_title_caption: cap.jaccard_title_caption,
                figure_position: pos,
                figure_position_scaled: pos_scaled,
                reference_count: fig.reference_count,
            }
        })
        .collect()
}
