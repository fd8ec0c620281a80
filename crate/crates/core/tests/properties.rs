use std::collections::BTreeSet;

use proptest::prelude::*;

use cardforge::corpus::{normalize_url, DocKind};
use cardforge::eval::{self, RelevanceJudgment};
use cardforge::imagefeat::{phash_distance, BaseFeatures, PerceptualHash};
use cardforge::learn::{make_folds, rank_by_scores, spearman_rho, Label};
use cardforge::metadata::{card_capability, extract_candidates, resolve_card, MetaField, Platform};
use cardforge::pipeline::{PreparedCandidate, PreparedDocument};

const KEYS: [&str; 10] = [
    "og:title",
    "og:description",
    "og:image",
    "og:url",
    "og:type",
    "twitter:card",
    "twitter:title",
    "twitter:description",
    "twitter:image",
    "twitter:image:url",
];

fn meta_field() -> impl Strategy<Value = (usize, String)> {
    (0..KEYS.len(), prop_oneof![Just(String::new()), Just("  ".to_string()), "[a-z]{1,6}"])
}

fn fields(raw: &[(usize, String)]) -> Vec<MetaField> {
    raw.iter()
        .enumerate()
        .map(|(i, (k, v))| MetaField {
            key: KEYS[*k].into(),
            value: v.clone(),
            position: i + 1,
        })
        .collect()
}

fn html_title() -> impl Strategy<Value = Option<String>> {
    prop::option::of(prop_oneof![Just(" ".to_string()), "[a-z]{1,6}"])
}

fn present(f: &[MetaField], key: &str) -> bool {
    f.iter().any(|m| m.key == key && !m.value.trim().is_empty())
}

fn doc_from_offsets(offsets: &[u64], gt: u64) -> PreparedDocument {
    PreparedDocument {
        doc_id: "d".into(),
        doc_kind: DocKind::News,
        candidates: offsets
            .iter()
            .enumerate()
            .map(|(i, o)| PreparedCandidate {
                url: format!("https://x.test/{i}"),
                locations: vec![],
                base: BaseFeatures::default(),
                phash: PerceptualHash(gt ^ o),
                scholarly: None,
                label: Label::Other,
            })
            .collect(),
        judgment: RelevanceJudgment {
            doc_id: "d".into(),
            ground_truth_url: String::new(),
            ground_truth_hash: PerceptualHash(gt),
            alternate_hashes: vec![],
        },
    }
}

proptest! {
    #[test]
    fn normalize_url_is_idempotent(path in "[a-zA-Z0-9/._-]{1,20}", frag in "[a-z]{0,4}", host in "[A-Za-z]{1,8}") {
        let base = format!("HTTP://{host}.Example.org:80/a/b.html");
        let raw = format!("{path}#{frag}");
        if let Ok(once) = normalize_url(&raw, &base) {
            prop_assert_eq!(normalize_url(&once, &base).unwrap(), once.clone());
            prop_assert!(!once.contains('#'));
        }
    }

    #[test]
    fn capability_never_drops_when_a_field_is_added(
        raw in prop::collection::vec(meta_field(), 0..8),
        extra in meta_field(),
        title in html_title(),
    ) {
        let before = fields(&raw);
        let mut grown = raw.clone();
        grown.push(extra);
        let after = fields(&grown);
        for p in Platform::ALL {
            let a = card_capability(&resolve_card(&before, title.as_deref(), p), &before, p).level;
            let b = card_capability(&resolve_card(&after, title.as_deref(), p), &after, p).level;
            prop_assert!(b >= a, "{:?}: {:?} -> {:?}", p, a, b);
        }
    }

    #[test]
    fn fallbacks_resolve_whenever_a_source_exists(raw in prop::collection::vec(meta_field(), 0..10), title in html_title()) {
        let f = fields(&raw);
        let tw = resolve_card(&f, title.as_deref(), Platform::Twitter);
        prop_assert_eq!(tw.title.is_some(), present(&f, "twitter:title") || present(&f, "og:title"));
        prop_assert_eq!(tw.description.is_some(), present(&f, "twitter:description") || present(&f, "og:description"));
        prop_assert_eq!(
            tw.image.is_some(),
            present(&f, "twitter:image") || present(&f, "twitter:image:url") || present(&f, "og:image")
        );
        prop_assert_eq!(tw.type_or_card.is_some(), present(&f, "twitter:card"));
        let fb = resolve_card(&f, title.as_deref(), Platform::Facebook);
        let html = title.as_deref().is_some_and(|t| !t.trim().is_empty());
        prop_assert_eq!(fb.title.is_some(), present(&f, "og:title") || html);
        prop_assert_eq!(fb.image.is_some(), present(&f, "og:image"));
        for v in [&tw.title, &tw.description, &tw.image, &fb.title, &fb.description, &fb.image].into_iter().flatten() {
            prop_assert_eq!(v.trim(), v.as_str());
            prop_assert!(!v.is_empty());
        }
    }

    #[test]
    fn candidates_are_unique(srcs in prop::collection::vec(prop_oneof![
        Just("a.png"), Just("/a.png"), Just("a.png#x"), Just("b.jpg"), Just("https://news.test/b.jpg"), Just(""), Just("data:x")
    ], 0..10), meta in prop::collection::vec(prop_oneof![Just("a.png"), Just("c.gif")], 0..3)) {
        let mut html = String::from("<html><head>");
        for m in &meta {
            html.push_str(&format!(r#"<meta property="og:image" content="{m}">"#));
        }
        html.push_str("</head><body>");
        for s in &srcs {
            html.push_str(&format!(r#"<img src="{s}">"#));
        }
        html.push_str("</body></html>");
        let cands = extract_candidates(html.as_bytes(), "https://news.test/story/");
        let urls: BTreeSet<&str> = cands.iter().map(|c| c.url.as_str()).collect();
        prop_assert_eq!(urls.len(), cands.len());
        for c in &cands {
            prop_assert!(!c.locations.is_empty());
            let locs: BTreeSet<_> = c.locations.iter().collect();
            prop_assert_eq!(locs.len(), c.locations.len());
            prop_assert!(c.url.starts_with("https://"));
        }
    }

    #[test]
    fn phash_distance_is_a_metric(a: u64, b: u64, c: u64) {
        let (a, b, c) = (PerceptualHash(a), PerceptualHash(b), PerceptualHash(c));
        prop_assert_eq!(phash_distance(a, a), 0.0);
        prop_assert_eq!(phash_distance(a, b), phash_distance(b, a));
        prop_assert!((0.0..=1.0).contains(&phash_distance(a, b)));
        prop_assert!(phash_distance(a, c) <= phash_distance(a, b) + phash_distance(b, c) + 1e-12);
    }

    #[test]
    fn spearman_ignores_monotone_transforms(pairs in prop::collection::vec((0u8..8, 0u8..8), 2..30)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let fx: Vec<f64> = x.iter().map(|v| (v * 0.7).exp() - 3.0).collect();
        let rho = spearman_rho(&x, &y).unwrap();
        prop_assert_eq!(rho, spearman_rho(&fx, &y).unwrap());
        if let Some(r) = rho {
            prop_assert!((-1.0..=1.0).contains(&r));
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((spearman_rho(&neg, &y).unwrap().unwrap() + r).abs() < 1e-12);
        }
    }

    #[test]
    fn ranking_is_a_permutation_led_by_the_first_maximum(scores in prop::collection::vec(prop_oneof![0.0..1.0f64, Just(0.5)], 1..20)) {
        let order = rank_by_scores(&scores);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..scores.len()).collect::<Vec<_>>());
        let max = scores.iter().cloned().fold(f64::MIN, f64::max);
        prop_assert_eq!(order[0], scores.iter().position(|s| *s == max).unwrap());
        for w in order.windows(2) {
            prop_assert!(scores[w[0]] > scores[w[1]] || (scores[w[0]] == scores[w[1]] && w[0] < w[1]));
        }
    }

    #[test]
    fn folds_partition_documents_evenly(n in 2usize..80, k in 2usize..10, seed: u64) {
        prop_assume!(k <= n);
        let ids: Vec<String> = (0..n).map(|i| format!("doc{i}")).collect();
        let plan = make_folds(&ids, k, seed).unwrap();
        prop_assert_eq!(plan.assignment.len(), n);
        let sizes = plan.sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(make_folds(&ids, k, seed).unwrap(), plan);
    }

    #[test]
    fn mrr_bounds_precision(
        offsets in prop::collection::vec(prop_oneof![Just(0u64), any::<u64>()], 1..8),
        gt: u64,
        rot in 0usize..8,
    ) {
        let mut offsets = offsets;
        offsets.push(0);
        let doc = doc_from_offsets(&offsets, gt);
        let n = offsets.len();
        let ranking: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let t = eval::default_thresholds();
        let s = eval::score_ranking(&doc, &ranking, &t).unwrap();
        for j in 0..t.len() {
            prop_assert!(s.rr[j] >= s.p_at_1[j]);
            prop_assert!(s.rr[j] > 0.0 && s.rr[j] <= 1.0);
            if j > 0 {
                prop_assert!(s.rr[j] >= s.rr[j - 1]);
            }
        }
        prop_assert_eq!(s.rr[t.len() - 1], 1.0);
    }
}
