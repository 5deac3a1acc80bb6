//! Render one noiseless heatmap per posture class as PGM.
//!
//! With sensor noise and seat shift turned off the templates show their
//! pure geometry: ischial blobs on the seat, thigh ridges, and the backrest
//! loading that separates reclined from upright classes.
//!
//! Run with `cargo run --release --example render_postures`.

use std::fs;
use std::path::PathBuf;

use liquidstate::frames::{PostureLabel, FRAME_CELLS};
use liquidstate::pgm::frame_heatmap;
use liquidstate::synthgen::{render_posture, subject_profiles, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let cfg = GeneratorConfig {
        noise_sd: 0.0,
        shift_max: 0.0,
        ..GeneratorConfig::default()
    };
    let profiles = subject_profiles(&cfg)?;
    let subject = &profiles[0];

    let out = PathBuf::from("target/example-output/render_postures");
    fs::create_dir_all(&out).expect("create output directory");

    println!("class                     peak  active cells");
    for label in PostureLabel::ALL {
        let frame = render_posture(subject, label, 0)?;
        let peak = frame.iter_cells().max().unwrap_or(0);
        let active = frame.iter_cells().filter(|&v| v > 0).count();
        println!(
            "{:<24} {peak:>5}  {active:>4}/{FRAME_CELLS}",
            label.name()
        );
        let name = label.name().replace(' ', "_");
        frame_heatmap(&frame)
            .scaled(8)?
            .save_pgm(&out.join(format!("{name}.pgm")))?;
    }
    println!("wrote {} heatmaps to {}", PostureLabel::ALL.len(), out.display());
    Ok(())
}
