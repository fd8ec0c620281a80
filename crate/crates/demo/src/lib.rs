//! WebAssembly bindings for the browser demo. Each export takes plain
//! values and returns a JSON string; the `*_json` functions hold the logic
//! so it can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cardforge::eval::{self, EvalCurve};
use cardforge::imagefeat::{base_features, decode_image, phash, phash_distance, BaseFeatures};
use cardforge::metadata::{card_capability, extract_candidates, extract_meta_fields, resolve_card, CapabilityLevel, CardFields, Platform};
use cardforge::synth;

#[derive(Serialize)]
struct PlatformCard {
    card: CardFields,
    capability: CapabilityLevel,
    description_divergence: bool,
}

#[derive(Serialize)]
struct Preview {
    html_title: Option<String>,
    meta_fields: usize,
    cards: Vec<PlatformCard>,
    candidates: Vec<String>,
}

/// Cards for both platforms plus the candidate image URLs of a pasted page.
pub fn card_preview_json(html: &str, base_url: &str) -> Result<String, String> {
    let ex = extract_meta_fields(html.as_bytes());
    let cards = Platform::ALL
        .into_iter()
        .map(|p| {
            let card = resolve_card(&ex.fields, ex.title.as_deref(), p);
            let cap = card_capability(&card, &ex.fields, p);
            PlatformCard {
                card,
                capability: cap.level,
                description_divergence: cap.observed_description_divergence,
            }
        })
        .collect();
    let candidates = if base_url.trim().is_empty() {
        Vec::new()
    } else {
        extract_candidates(html.as_bytes(), base_url).into_iter().map(|c| c.url).collect()
    };
    let preview = Preview {
        html_title: ex.title,
        meta_fields: ex.fields.len(),
        cards,
        candidates,
    };
    serde_json::to_string(&preview).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ImageSummary {
    phash: String,
    features: BaseFeatures,
}

#[derive(Serialize)]
struct Comparison {
    a: ImageSummary,
    b: ImageSummary,
    distance: f64,
    hamming: u32,
}

fn summarize(bytes: &[u8], which: &str) -> Result<(ImageSummary, cardforge::imagefeat::PerceptualHash), String> {
    let img = decode_image(bytes).map_err(|e| format!("image {which}: {e}"))?;
    let h = phash(&img);
    Ok((
        ImageSummary {
            phash: h.to_hex(),
            features: base_features(&img),
        },
        h,
    ))
}

/// Base features of two encoded images and their perceptual hash distance.
pub fn compare_images_json(a: &[u8], b: &[u8]) -> Result<String, String> {
    let (sa, ha) = summarize(a, "A")?;
    let (sb, hb) = summarize(b, "B")?;
    let cmp = Comparison {
        a: sa,
        b: sb,
        distance: phash_distance(ha, hb),
        hamming: ha.hamming(hb),
    };
    serde_json::to_string(&cmp).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Curves {
    curves: Vec<EvalCurve>,
}

/// Random and last-figure baseline curves on a synthetic scholarly corpus
/// whose metadata image is the last figure at rate `last_figure_rate`.
pub fn baseline_curves_json(n_docs: usize, last_figure_rate: f64, trials: usize, seed: u64) -> Result<String, String> {
    if n_docs == 0 || trials == 0 {
        return Err("documents and trials must be positive".into());
    }
    if !(0.0..=1.0).contains(&last_figure_rate) {
        return Err(format!("rate {last_figure_rate} outside [0, 1]"));
    }
    let docs = synth::scholarly_corpus(n_docs, last_figure_rate, seed);
    let t = eval::default_thresholds();
    let curves = vec![
        eval::random_baseline(&docs, trials, seed, &t).map_err(|e| e.to_string())?,
        eval::last_figure_baseline(&docs, &t).map_err(|e| e.to_string())?,
    ];
    serde_json::to_string(&Curves { curves }).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn card_preview(html: &str, base_url: &str) -> Result<String, JsError> {
    card_preview_json(html, base_url).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn compare_images(a: &[u8], b: &[u8]) -> Result<String, JsError> {
    compare_images_json(a, b).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn baseline_curves(n_docs: u32, last_figure_rate: f64, trials: u32, seed: u32) -> Result<String, JsError> {
    baseline_curves_json(n_docs as usize, last_figure_rate, trials as usize, seed as u64).map_err(|e| JsError::new(&e))
}
