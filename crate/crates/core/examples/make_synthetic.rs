//! Regenerates `data/synthetic/{train,test}.jsonl` with the default settings.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use wsd_core::synthetic::{generate, SyntheticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    std::fs::create_dir_all(&dir)?;
    let (train, test) = generate(&SyntheticConfig::default())?;
    train.save_jsonl(BufWriter::new(File::create(dir.join("train.jsonl"))?))?;
    test.save_jsonl(BufWriter::new(File::create(dir.join("test.jsonl"))?))?;
    println!("wrote {} train and {} test instances to {}", train.len(), test.len(), dir.display());
    Ok(())
}
