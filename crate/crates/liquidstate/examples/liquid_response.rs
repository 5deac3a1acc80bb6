//! Drive a calibrated reservoir with one encoded frame and dump the raster.
//!
//! Calibration searches for the synapse weight scale that puts the mean
//! firing rate inside the target band; the resolved scale is baked into the
//! returned topology. The raster PGM has one row per neuron (excitatory
//! first) and one column per millisecond.
//!
//! Run with `cargo run --release --example liquid_response`.

use std::fs;
use std::path::PathBuf;

use liquidstate::encoder::{encode, EncodingConfig};
use liquidstate::eval::spiking_window_ms;
use liquidstate::frames::{normalize_to_phase, NormalizationMode, PostureLabel};
use liquidstate::pgm::raster_bitmap;
use liquidstate::reservoir::{
    build_calibrated_topology, mean_rate_hz, NeuronParams, Simulator, TopologyConfig,
    CALIBRATION_BAND,
};
use liquidstate::synthgen::{render_posture, subject_profiles, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let profiles = subject_profiles(&GeneratorConfig::default())?;
    let enc = EncodingConfig::new(30, 1)?;
    let window_ms = spiking_window_ms(enc.amplitude, 9);

    // A few calibration frames spanning different postures.
    let calib: Vec<_> = [
        PostureLabel::Upright,
        PostureLabel::LeaningBack,
        PostureLabel::SittingOnLeadingEdge,
    ]
    .into_iter()
    .enumerate()
    .map(|(i, label)| {
        let frame = render_posture(&profiles[i], label, i as u64)?;
        encode(&normalize_to_phase(&frame, NormalizationMode::FixedRange), &enc)
    })
    .collect::<liquidstate::Result<_>>()?;

    let mut cfg = TopologyConfig::desk_scale();
    cfg.n_inputs = calib[0].rows();
    let params = NeuronParams::default();
    let topology = build_calibrated_topology(&cfg, &params, &calib, window_ms)?;
    println!(
        "calibrated weight scale: {:.6} (target band {:?} spikes/s)",
        topology.config.gamma_scale.expect("calibration bakes a scale"),
        CALIBRATION_BAND
    );

    let sim = Simulator::new(&topology, params)?;
    let frame = render_posture(&profiles[0], PostureLabel::Upright, 99)?;
    let spikes = encode(&normalize_to_phase(&frame, NormalizationMode::FixedRange), &enc)?;
    let (state, raster) = sim.run_with_raster(&spikes, window_ms)?;

    let active = state.counts().iter().filter(|&&c| c > 0).count();
    println!(
        "window {} ms: {} total spikes, {}/{} neurons active, mean rate {:.1} spikes/s",
        window_ms,
        state.total_spikes(),
        active,
        sim.n_neurons(),
        mean_rate_hz(std::slice::from_ref(&state))
    );

    let out = PathBuf::from("target/example-output/liquid_response");
    fs::create_dir_all(&out).expect("create output directory");
    let path = out.join("raster.pgm");
    raster_bitmap(&raster).save_pgm(&path)?;
    println!("raster written to {}", path.display());
    Ok(())
}
