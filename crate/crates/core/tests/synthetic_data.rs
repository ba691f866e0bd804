use std::path::Path;

use wsd_core::synthetic::{generate, SyntheticConfig};

#[test]
fn shipped_corpus_matches_generator() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let (train, test) = generate(&SyntheticConfig::default()).unwrap();
    for (corpus, name) in [(train, "train.jsonl"), (test, "test.jsonl")] {
        let mut buf = Vec::new();
        corpus.save_jsonl(&mut buf).unwrap();
        let shipped = std::fs::read(dir.join(name)).unwrap();
        assert!(buf == shipped, "{name} is stale; run `cargo run --example make_synthetic`");
    }
}
