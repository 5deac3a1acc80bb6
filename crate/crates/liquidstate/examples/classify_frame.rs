//! End-to-end single-frame classification through the spiking pipeline,
//! with per-frame latency measured over repeated runs.
//!
//! The whole path per frame is: cosine-encode, simulate the reservoir for
//! the spike window, read the per-neuron spike counts, apply the softmax
//! readout. On one core this stays well under 100 ms per frame.
//!
//! Run with `cargo run --release --example classify_frame`.

use std::time::Instant;

use liquidstate::eval::{build_pipeline_reservoir, FeaturePipeline, Pipeline};
use liquidstate::frames::PressureFrame;
use liquidstate::readout::train_readout;
use liquidstate::reservoir::{NeuronParams, TopologyConfig};
use liquidstate::synthgen::{generate_dataset, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let gen_cfg = GeneratorConfig {
        n_subjects: 5,
        frames_per_posture: 6,
        ..GeneratorConfig::default()
    };
    let (frames, _) = generate_dataset(&gen_cfg)?;
    // Hold the last frame out of training and classify it afterwards.
    let (probe, train_frames) = frames.split_last().expect("dataset is never empty");

    let pipeline = Pipeline::SnnLrEncodedN1;
    let params = NeuronParams::default();
    let topology = build_pipeline_reservoir(
        pipeline,
        train_frames.iter(),
        &TopologyConfig::desk_scale(),
        &params,
        30,
        9,
    )?;
    let fp = FeaturePipeline::new(pipeline, 30, 9, Some((&topology, params)))?;

    let features: Vec<Vec<f64>> = train_frames
        .iter()
        .map(|f| fp.features(f))
        .collect::<liquidstate::Result<_>>()?;
    let labels: Vec<_> = train_frames.iter().map(PressureFrame::label).collect();
    let model = train_readout(&features, &labels, fp.feature_kind(), &Default::default())?;

    let t0 = Instant::now();
    let runs = 50;
    let mut last = None;
    for _ in 0..runs {
        last = Some(model.predict(&fp.features(probe)?)?);
    }
    let per_frame_ms = t0.elapsed().as_secs_f64() * 1e3 / runs as f64;

    let (label, probs) = last.expect("at least one run");
    println!("truth:     {}", probe.label().name());
    println!("predicted: {} (p = {:.4})", label.name(), probs[label as usize]);
    println!("latency:   {per_frame_ms:.2} ms/frame over {runs} runs (500 neurons)");
    Ok(())
}
