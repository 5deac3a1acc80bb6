//! Generate the default synthetic dataset and save it next to its manifest.
//!
//! 19 subjects x 15 postures x 21 repetitions = 5985 frames. Subject 19 is
//! rendered with a kyphotic spine, so its backrest contact stays low even
//! in nominally upright postures.
//!
//! Run with `cargo run --release --example generate_dataset`.

use std::fs;
use std::path::PathBuf;

use liquidstate::frames::{save_frames, DatasetManifest};
use liquidstate::synthgen::{generate_dataset, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let cfg = GeneratorConfig::default();
    let (frames, _) = generate_dataset(&cfg)?;

    let out = PathBuf::from("target/example-output/generate_dataset");
    fs::create_dir_all(&out).expect("create output directory");
    save_frames(&frames, out.join("frames.csv"))?;
    let manifest = DatasetManifest::from_frames(&frames, vec!["frames.csv".into()], cfg.seed);
    manifest.save(out.join("manifest.json"))?;

    println!("frames:   {}", manifest.total_frames);
    println!("subjects: {:?}", manifest.subject_ids);
    println!("classes:");
    for (name, count) in &manifest.class_counts {
        println!("  {count:>5}  {name}");
    }
    println!("saved to {}", out.display());
    Ok(())
}
