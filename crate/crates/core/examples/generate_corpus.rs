//! Regenerates the committed synthetic corpus under `data/`.
//!
//!     cargo run --example generate_corpus [-- OUT_DIR]

use std::path::PathBuf;

use clinperturb::synthetic::{generate, SyntheticCorpus, DEFAULT_SEED};

fn main() -> std::io::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data"));
    std::fs::create_dir_all(&dir)?;
    let corpus = generate(DEFAULT_SEED);
    std::fs::write(dir.join("synthetic_test.jsonl"), SyntheticCorpus::to_jsonl(&corpus.test))?;
    std::fs::write(dir.join("synthetic_train.jsonl"), SyntheticCorpus::to_jsonl(&corpus.train))?;
    println!("{} test and {} train samples written to {}", corpus.test.len(), corpus.train.len(), dir.display());
    Ok(())
}
