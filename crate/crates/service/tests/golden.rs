use std::path::Path;

use sensorsift_core::corpus::{generate, GeneratorConfig};
use sensorsift_service::{Engine, SearchRequest};

/// Set `UPDATE_GOLDEN=1` to rewrite the expected files after an intended
/// change.
fn check(name: &str, request: &str) {
    let engine = Engine::with_corpus(generate(GeneratorConfig::new(1_000, 2024)).unwrap()).unwrap();
    let req: SearchRequest = serde_json::from_str(request).unwrap();
    let actual = serde_json::to_string_pretty(&engine.search(&req).unwrap()).unwrap() + "\n";
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap();
    assert_eq!(
        actual, expected,
        "{name} changed; rerun with UPDATE_GOLDEN=1 if intended"
    );
}

#[test]
fn exact_search() {
    check(
        "exact_search.json",
        r#"{"filter": "type = temperature AND accuracy >= 40",
            "priorities": {"entries": [{"key": "accuracy", "slider": 70},
                                       {"key": "response_time", "slider": 20},
                                       {"key": "reliability", "slider": 45}]},
            "n": 5}"#,
    );
}

#[test]
fn heuristic_search_with_ideal() {
    check(
        "heuristic_search.json",
        r#"{"filter": "(availability in [10, 40] OR availability in [60, 90])",
            "priorities": {"entries": [{"key": "accuracy", "slider": 3},
                                       {"key": "availability", "slider": 9}], "scale": 10},
            "ideal": {"availability": 75},
            "n": 4, "heuristic": {"enabled": true, "margin_m": 25}}"#,
    );
}
