use cardforge::synth;
use cardforge_demo::{baseline_curves_json, card_preview_json, compare_images_json};
use serde_json::Value;

#[test]
fn preview_resolves_both_platforms() {
    let html = r#"<html><head><title>Page</title><meta property="og:description" content="D"></head>
        <body><img src="a.png"><img src="a.png#top"></body></html>"#;
    let v: Value = serde_json::from_str(&card_preview_json(html, "https://n.test/x/").unwrap()).unwrap();
    assert_eq!(v["cards"][0]["card"]["platform"], "twitter");
    assert_eq!(v["cards"][0]["capability"], "none");
    assert_eq!(v["cards"][1]["card"]["title"], "Page");
    assert_eq!(v["cards"][1]["card"]["title_source"], "html_title_element");
    assert_eq!(v["candidates"], serde_json::json!(["https://n.test/x/a.png"]));
}

#[test]
fn preview_without_base_lists_no_candidates() {
    let v: Value = serde_json::from_str(&card_preview_json("<img src=a.png>", "").unwrap()).unwrap();
    assert_eq!(v["candidates"].as_array().unwrap().len(), 0);
}

#[test]
fn identical_images_have_zero_distance() {
    let png = synth::encode_png(&synth::pattern_image(4, 50, 40));
    let v: Value = serde_json::from_str(&compare_images_json(&png, &png).unwrap()).unwrap();
    assert_eq!(v["distance"], 0.0);
    assert_eq!(v["a"]["features"]["width"], 50);
    assert_eq!(v["a"]["phash"], v["b"]["phash"]);
}

#[test]
fn undecodable_image_is_reported() {
    let png = synth::encode_png(&synth::pattern_image(4, 8, 8));
    let err = compare_images_json(&png, b"nope").unwrap_err();
    assert!(err.starts_with("image B"), "{err}");
}

#[test]
fn baseline_curves_track_the_rate() {
    let v: Value = serde_json::from_str(&baseline_curves_json(200, 0.7, 10, 3).unwrap()).unwrap();
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves[0]["approach_name"], "random");
    assert_eq!(curves[1]["approach_name"], "last_figure");
    let lf = curves[1]["points"][0]["p_at_1"].as_f64().unwrap();
    assert!((lf - 0.7).abs() < 0.1, "{lf}");
    assert!(baseline_curves_json(10, 1.5, 1, 0).is_err());
    assert!(baseline_curves_json(0, 0.5, 1, 0).is_err());
}
