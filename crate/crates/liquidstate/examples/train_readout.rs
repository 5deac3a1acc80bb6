//! Train the softmax readout on raw frames and watch the loss fall.
//!
//! Run with `cargo run --release --example train_readout`.

use liquidstate::frames::PressureFrame;
use liquidstate::readout::{train_readout_with_history, FeatureKind, TrainConfig};
use liquidstate::synthgen::{generate_dataset, GeneratorConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let cfg = GeneratorConfig {
        n_subjects: 6,
        frames_per_posture: 8,
        ..GeneratorConfig::default()
    };
    let (frames, _) = generate_dataset(&cfg)?;
    let features: Vec<Vec<f64>> = frames.iter().map(PressureFrame::flatten_f64).collect();
    let labels: Vec<_> = frames.iter().map(PressureFrame::label).collect();

    let train_cfg = TrainConfig::default();
    let (model, history) =
        train_readout_with_history(&features, &labels, FeatureKind::RawFrame, &train_cfg)?;

    println!("{} frames, feature dim {}", frames.len(), model.n_features());
    println!("epoch  loss");
    for (epoch, loss) in history.iter().enumerate() {
        if epoch % 30 == 0 || epoch + 1 == history.len() {
            println!("{epoch:>5}  {loss:.6}");
        }
    }

    let correct = features
        .iter()
        .zip(&labels)
        .filter(|(f, &l)| model.predict(f).map(|(p, _)| p == l).unwrap_or(false))
        .count();
    println!(
        "training accuracy: {}/{} = {:.4}",
        correct,
        frames.len(),
        correct as f64 / frames.len() as f64
    );
    Ok(())
}
