//! Encode one pressure frame into its spike matrix and write both as PGM.
//!
//! The cosine code turns each cell into `n` latency channels: high pressure
//! spikes early on channel 0 and late on channel 1, so amplitude becomes
//! timing. Rows whose clipped cosine value is exactly zero stay silent.
//!
//! Run with `cargo run --release --example encode_and_render`.

use std::fs;
use std::path::PathBuf;

use liquidstate::encoder::{encode, EncodingConfig};
use liquidstate::frames::{normalize_to_phase, NormalizationMode, PostureLabel};
use liquidstate::pgm::{frame_heatmap, spike_bitmap};
use liquidstate::synthgen::{render_posture, subject_profiles, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let profiles = subject_profiles(&GeneratorConfig::default())?;
    let frame = render_posture(&profiles[0], PostureLabel::LeaningForward, 7)?;
    let cfg = EncodingConfig::new(30, 2)?;
    let spikes = encode(&normalize_to_phase(&frame, NormalizationMode::FixedRange), &cfg)?;

    println!(
        "frame: subject {}, {}",
        frame.subject_id(),
        frame.label().name()
    );
    println!(
        "encoded: {} rows x {} bins, {} spikes, {} silent rows",
        spikes.rows(),
        spikes.n_bins(),
        spikes.count_ones(),
        spikes.rows() - spikes.count_ones()
    );

    // The two channels of one cell always land half a period apart.
    for cell in [0, 95, 189] {
        let bins: Vec<_> = (0..2).map(|ch| spikes.spike_bin(cell * 2 + ch)).collect();
        println!("cell {cell:>3}: channel bins {bins:?}");
    }

    let out = PathBuf::from("target/example-output/encode_and_render");
    fs::create_dir_all(&out).expect("create output directory");
    frame_heatmap(&frame).scaled(8)?.save_pgm(&out.join("frame.pgm"))?;
    spike_bitmap(&spikes).scaled(2)?.save_pgm(&out.join("spikes.pgm"))?;
    println!("wrote frame.pgm and spikes.pgm to {}", out.display());
    Ok(())
}
