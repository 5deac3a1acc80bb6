//! Random 80/20 split: every subject appears on both sides, so this mainly
//! measures how separable the posture classes are.
//!
//! Run with `cargo run --release --example random_split_benchmark`.

use liquidstate::eval::{render_markdown, run_experiment, ExperimentPlan, Pipeline, SplitSpec};
use liquidstate::synthgen::{generate_dataset, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let (frames, _) = generate_dataset(&GeneratorConfig::default())?;
    let plan = ExperimentPlan::new(
        SplitSpec::RandomShuffle {
            test_fraction: 0.2,
            seed: 42,
        },
        vec![Pipeline::LrRaw, Pipeline::SnnLrEncodedN1],
    );
    let (report, timings) = run_experiment(&frames, &plan)?;
    print!("{}", render_markdown(&report, Some(&timings)));
    Ok(())
}
