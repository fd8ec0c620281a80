//! Seeded synthetic corpora with known ground truth, used by tests, the
//! benchmark acceptance suite and the browser demo.
//!
//! Prepared-level generators skip HTML and image decoding and produce
//! [`PreparedDocument`]s directly. The on-disk writers produce a manifest,
//! HTML and PNG files that go through the full pipeline.

use std::fs;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageFormat, Rgba, RgbaImage};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CorpusManifest, DocKind, ManifestEntry, ManifestImage, MANIFEST_FILE_NAME};
use crate::error::{Error, Result};
use crate::eval::RelevanceJudgment;
use crate::imagefeat::{BaseFeatures, PerceptualHash};
use crate::learn::{seeded_rng, Label};
use crate::metadata::SourceLocation;
use crate::pipeline::{PreparedCandidate, PreparedDocument};
use crate::scholarly::ScholarlyFeatures;

/// Smooth multi-frequency pattern; distinct seeds give distinct hashes.
pub fn pattern_image(seed: u64, width: u32, height: u32) -> RgbaImage {
    let mut rng = seeded_rng(seed, 0x1A6E);
    let waves: Vec<(f64, f64, f64, [f64; 3])> = (0..4)
        .map(|_| {
            (
                rng.gen_range(0.5..4.0),
                rng.gen_range(0.5..4.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            )
        })
        .collect();
    RgbaImage::from_fn(width, height, |x, y| {
        let u = x as f64 / width as f64;
        let v = y as f64 / height as f64;
        let mut c = [0.5f64; 3];
        for (fx, fy, phase, amp) in &waves {
            let s = (std::f64::consts::TAU * (fx * u + fy * v) + phase).sin();
            for band in 0..3 {
                c[band] += 0.15 * amp[band] * s;
            }
        }
        let px = c.map(|b| (b.clamp(0.0, 1.0) * 255.0).round() as u8);
        Rgba([px[0], px[1], px[2], 255])
    })
}

/// Uniform per-pixel noise.
pub fn noise_image(seed: u64, width: u32, height: u32) -> RgbaImage {
    let mut rng = seeded_rng(seed, 0x4015E);
    RgbaImage::from_fn(width, height, |_, _| Rgba([rng.gen(), rng.gen(), rng.gen(), 255]))
}

pub fn encode_png(img: &RgbaImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("PNG encoding into memory");
    out.into_inner()
}

fn random_base(rng: &mut ChaCha8Rng, dims: std::ops::Range<u32>) -> BaseFeatures {
    let width = rng.gen_range(dims.clone());
    let height = rng.gen_range(dims);
    let pixel_size = width as u64 * height as u64;
    BaseFeatures {
        byte_size: (pixel_size as f64 * rng.gen_range(0.1..1.5)) as u64 + 64,
        width,
        height,
        negative_space: rng.gen_range(0..=700),
        pixel_size,
        aspect_ratio: width as f64 / height as f64,
        color_count: rng.gen_range(1..=pixel_size.min(100_000)),
    }
}

/// `n` pairwise-distinct random hashes.
fn distinct_hashes(rng: &mut ChaCha8Rng, n: usize) -> Vec<PerceptualHash> {
    let mut out: Vec<PerceptualHash> = Vec::with_capacity(n);
    while out.len() < n {
        let h = PerceptualHash(rng.gen());
        if !out.contains(&h) {
            out.push(h);
        }
    }
    out
}

fn assemble(
    doc_id: String,
    kind: DocKind,
    bases: Vec<BaseFeatures>,
    scholarly: Option<Vec<ScholarlyFeatures>>,
    positive: usize,
    rng: &mut ChaCha8Rng,
) -> PreparedDocument {
    let hashes = distinct_hashes(rng, bases.len());
    let candidates = bases
        .into_iter()
        .enumerate()
        .map(|(i, base)| PreparedCandidate {
            url: format!("https://synthetic.test/{doc_id}/{i}.png"),
            locations: if i == positive {
                vec![SourceLocation::HeadMeta, SourceLocation::BodyImg]
            } else {
                vec![SourceLocation::BodyImg]
            },
            base,
            phash: hashes[i],
            scholarly: scholarly.as_ref().map(|s| s[i]),
            label: if i == positive { Label::PresentInMetadata } else { Label::Other },
        })
        .collect();
    PreparedDocument {
        judgment: RelevanceJudgment {
            doc_id: doc_id.clone(),
            ground_truth_url: format!("https://synthetic.test/{doc_id}/{positive}.png"),
            ground_truth_hash: hashes[positive],
            alternate_hashes: Vec::new(),
        },
        doc_id,
        doc_kind: kind,
        candidates,
    }
}

/// Documents with exactly `n_candidates` candidates, one of them relevant
/// at a uniformly random position. Base features carry no label signal.
pub fn uniform_corpus(n_docs: usize, n_candidates: usize, seed: u64) -> Vec<PreparedDocument> {
    assert!(n_candidates >= 1);
    let mut rng = seeded_rng(seed, 1);
    (0..n_docs)
        .map(|d| {
            let bases = (0..n_candidates).map(|_| random_base(&mut rng, 20..1200)).collect();
            let positive = rng.gen_range(0..n_candidates);
            assemble(format!("uniform-{d:05}"), DocKind::News, bases, None, positive, &mut rng)
        })
        .collect()
}

/// News documents with 2 to 6 candidates whose positive image is drawn from
/// a pixel-size range disjoint from every other candidate's.
pub fn separable_news_corpus(n_docs: usize, seed: u64) -> Vec<PreparedDocument> {
    let mut rng = seeded_rng(seed, 2);
    (0..n_docs)
        .map(|d| {
            let n = rng.gen_range(2..=6);
            let positive = rng.gen_range(0..n);
            let bases = (0..n)
                .map(|i| {
                    if i == positive {
                        random_base(&mut rng, 600..1200)
                    } else {
                        random_base(&mut rng, 20..500)
                    }
                })
                .collect();
            assemble(format!("news-{d:05}"), DocKind::News, bases, None, positive, &mut rng)
        })
        .collect()
}

/// Scholarly documents with 3 to 8 figures. The ground truth is the last
/// figure with probability `last_figure_rate`, otherwise another figure
/// chosen uniformly. Base features are label-independent. First-reference
/// sections increase with figure position, with noise.
pub fn scholarly_corpus(n_docs: usize, last_figure_rate: f64, seed: u64) -> Vec<PreparedDocument> {
    let mut rng = seeded_rng(seed, 3);
    (0..n_docs)
        .map(|d| {
            let n = rng.gen_range(3..=8);
            let positive = if rng.gen_bool(last_figure_rate) { n - 1 } else { rng.gen_range(0..n - 1) };
            let n_sections = rng.gen_range(4..=7);
            let feats = (0..n)
                .map(|i| {
                    let position = i + 1;
                    let drift = position as f64 / n as f64 * (n_sections - 1) as f64;
                    let section = ((drift + rng.gen_range(-1.5..1.5)).round() as i64).clamp(1, n_sections as i64 - 1) as usize;
                    let rank = rng.gen_range(1..=n);
                    ScholarlyFeatures {
                        section_index: section,
                        section_index_scaled: section as f64 / (n_sections - 1) as f64,
                        char_position_in_section: rng.gen_range(0..4000),
                        word_position_in_section: rng.gen_range(0..700),
                        caption_tf_rank: rank,
                        caption_tf_rank_scaled: rank as f64 / n as f64,
                        jaccard_title_caption: rng.gen_range(0.5..1.0),
                        figure_position: position,
                        figure_position_scaled: position as f64 / n as f64,
                        reference_count: rng.gen_range(1..=4),
                    }
                })
                .collect();
            let bases = (0..n).map(|_| random_base(&mut rng, 200..1400)).collect();
            assemble(format!("article-{d:05}"), DocKind::Scholarly, bases, Some(feats), positive, &mut rng)
        })
        .collect()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `n_docs` news pages under `dir` and returns the manifest path.
///
/// Each page has 2 to 4 body images. The `og:image` one is larger than
/// the rest; capture years cycle through 2016 to 2019.
pub fn write_news_corpus(dir: &Path, n_docs: usize, seed: u64) -> Result<PathBuf> {
    let mut rng = seeded_rng(seed, 4);
    let mut entries = Vec::new();
    for d in 0..n_docs {
        let doc_id = format!("news-{d:04}");
        let source_url = format!("https://news.example.org/{}/story-{d}.html", 2016 + d % 4);
        let n = rng.gen_range(2..=4);
        let positive = rng.gen_range(0..n);
        let mut images = Vec::new();
        let mut body = String::new();
        for i in 0..n {
            let (w, h) = if i == positive {
                (rng.gen_range(160..240), rng.gen_range(100..160))
            } else {
                (rng.gen_range(24..80), rng.gen_range(24..80))
            };
            let rel = format!("img/{doc_id}-{i}.png");
            let url = format!("https://news.example.org/media/{doc_id}/{i}.png");
            write_file(&dir.join(&rel), &encode_png(&pattern_image(seed ^ (d * 16 + i) as u64, w, h)))?;
            body.push_str(&format!("<p>Paragraph {i}.</p><img src=\"/media/{doc_id}/{i}.png\" alt=\"\">\n"));
            images.push(ManifestImage { url, path: rel });
        }
        let twitter = if d % 3 == 0 {
            String::new()
        } else {
            "<meta name=\"twitter:card\" content=\"summary_large_image\">\n".to_string()
        };
        let html = format!(
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n<title>Story {d}</title>\n\
             <meta property=\"og:title\" content=\"Story {d}\">\n\
             <meta property=\"og:description\" content=\"Summary of story {d}.\">\n\
             <meta property=\"og:image\" content=\"/media/{doc_id}/{positive}.png\">\n{twitter}\
             <meta name=\"description\" content=\"Story {d}\">\n</head>\n<body>\n<h1>Story {d}</h1>\n{body}</body></html>\n"
        );
        let html_path = format!("html/{doc_id}.html");
        write_file(&dir.join(&html_path), html.as_bytes())?;
        entries.push(ManifestEntry {
            doc_id,
            html_path,
            source_url,
            capture_datetime: Some(format!("{}-06-{:02}T12:00:00Z", 2016 + d % 4, 1 + d % 28)),
            doc_kind: DocKind::News,
            images,
        });
    }
    finish(dir, entries)
}

/// Writes `n_docs` scholarly articles under `dir` and returns the manifest
/// path. The `og:image` is the last figure with probability
/// `last_figure_rate`.
pub fn write_scholarly_corpus(dir: &Path, n_docs: usize, last_figure_rate: f64, seed: u64) -> Result<PathBuf> {
    let mut rng = seeded_rng(seed, 5);
    let words = ["worm", "sediment", "vent", "depth", "sample", "species", "growth", "ocean", "site", "survey"];
    let mut entries = Vec::new();
    for d in 0..n_docs {
        let doc_id = format!("article-{d:04}");
        let journal_id = format!("pone.{:07}", d + 1);
        let doi = format!("10.1371/journal.{journal_id}");
        let source_url = format!("https://journals.example.org/plosone/article?id={doi}");
        let n = rng.gen_range(3..=5);
        let positive = if rng.gen_bool(last_figure_rate) { n - 1 } else { rng.gen_range(0..n - 1) };
        let mut figures = String::new();
        let mut images = Vec::new();
        let mut sections: Vec<String> = (0..n).map(|_| String::new()).collect();
        for i in 0..n {
            let asset = format!("g{:03}", i + 1);
            let url = format!("https://journals.example.org/plosone/figure/image?id={doi}.{asset}");
            let rel = format!("img/{doc_id}-{asset}.png");
            write_file(&dir.join(&rel), &encode_png(&pattern_image(seed ^ (d * 16 + i) as u64 ^ 0xA5A5, 64, 48)))?;
            images.push(ManifestImage { url, path: rel });
            let mut caption: Vec<&str> = words.to_vec();
            caption.shuffle(&mut rng);
            figures.push_str(&format!(
                "<div class=\"figure\" data-doi=\"{doi}.{asset}\"><img src=\"figure/image?id={doi}.{asset}\">\
                 <div class=\"figcaption\">Figure {}. {}.</div></div>\n",
                i + 1,
                caption[..4].join(" ")
            ));
            sections[i].push_str(&format!(
                "<p>Results of the {} are shown in <a href=\"#{journal_id}.{asset}\">Fig {}</a>.</p>",
                words[i % words.len()],
                i + 1
            ));
        }
        let body: String = sections
            .iter()
            .enumerate()
            .map(|(i, s)| format!("<h2>Section {}</h2>\n<p>Text {}.</p>{s}\n", i + 1, words[(i + d) % words.len()]))
            .collect();
        let html = format!(
            "<!DOCTYPE html>\n<html><head><title>Article {d}</title>\n\
             <meta name=\"citation_title\" content=\"Deep {} study {d}\">\n\
             <meta name=\"citation_doi\" content=\"{doi}\">\n\
             <meta property=\"og:title\" content=\"Article {d}\">\n\
             <meta property=\"og:image\" content=\"{}\">\n</head>\n\
             <body><div class=\"article-content\"><h1>Article {d}</h1>\n<div class=\"abstract\">Abstract.</div>\n{body}{figures}</div></body></html>\n",
            words[d % words.len()],
            images[positive].url
        );
        let html_path = format!("html/{doc_id}.html");
        write_file(&dir.join(&html_path), html.as_bytes())?;
        entries.push(ManifestEntry {
            doc_id,
            html_path,
            source_url,
            capture_datetime: Some(format!("{}-03-15", 2017 + d % 3)),
            doc_kind: DocKind::Scholarly,
            images,
        });
    }
    finish(dir, entries)
}

fn finish(dir: &Path, entries: Vec<ManifestEntry>) -> Result<PathBuf> {
    let path = dir.join(MANIFEST_FILE_NAME);
    CorpusManifest {
        root: dir.to_path_buf(),
        entries,
    }
    .write(&path)?;
    Ok(path)
}
