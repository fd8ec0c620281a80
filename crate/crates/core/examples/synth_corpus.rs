//! Writes a synthetic corpus to disk for trying the CLI.
//!
//! ```text
//! cargo run -p cardforge --example synth_corpus -- news /tmp/news 40
//! cargo run -p cardforge --example synth_corpus -- scholarly /tmp/plos 40
//! ```

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let usage = "usage: synth_corpus <news|scholarly> <dir> [docs] [seed]";
    let kind = args.next().ok_or(usage)?;
    let dir = PathBuf::from(args.next().ok_or(usage)?);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(40);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(7);
    let manifest = match kind.as_str() {
        "news" => cardforge::synth::write_news_corpus(&dir, n, seed)?,
        "scholarly" => cardforge::synth::write_scholarly_corpus(&dir, n, 0.8, seed)?,
        _ => return Err(usage.into()),
    };
    println!("{}", manifest.display());
    Ok(())
}
