//! Hold out whole subjects: train on subjects 1-15, test on 16-19.
//!
//! This is the harder benchmark. The raw spiking trial collapses because
//! binarized frames barely differ between postures, while the latency-coded
//! trial keeps the magnitude information and generalizes to new sitters.
//!
//! Run with `cargo run --release --example subject_split_benchmark`.

use liquidstate::eval::{render_markdown, run_experiment, ExperimentPlan, Pipeline, SplitSpec};
use liquidstate::synthgen::{generate_dataset, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let (frames, _) = generate_dataset(&GeneratorConfig::default())?;
    let plan = ExperimentPlan::new(
        SplitSpec::BySubject {
            train_subjects: (1..=15).collect(),
        },
        vec![
            Pipeline::LrRaw,
            Pipeline::SnnLrRaw,
            Pipeline::SnnLrEncodedN1,
        ],
    );
    let (report, timings) = run_experiment(&frames, &plan)?;
    print!("{}", render_markdown(&report, Some(&timings)));

    let enc = &report.trials[2].metrics;
    let raw = &report.trials[1].metrics;
    println!();
    println!(
        "encoded-over-raw spiking gap: {:.4} macro precision",
        enc.macro_precision - raw.macro_precision
    );
    Ok(())
}
