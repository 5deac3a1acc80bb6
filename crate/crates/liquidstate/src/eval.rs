//! Dataset splits, classification metrics, and the experiment runner that
//! compares the logistic-regression and reservoir pipelines side by side.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{encode, EncodedSpikes, EncodingConfig};
use crate::error::{Error, Result};
use crate::frames::{
    normalize_to_phase, NormalizationMode, PostureLabel, PressureFrame, FRAME_CELLS, NUM_CLASSES,
};
use crate::readout::{train_readout, FeatureKind, ReadoutModel, TrainConfig};
use crate::reservoir::{
    build_calibrated_topology, NeuronParams, ReservoirTopology, Simulator, TopologyConfig,
};

pub const REPORT_VERSION: &str = "experiment-report v1";

/// How many training frames feed the reservoir weight calibration.
const CALIBRATION_FRAMES: usize = 32;

/// A train/test partition of frame indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub kind: SplitKind,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    RandomShuffle { test_fraction: f64, seed: u64 },
    BySubject { train_subjects: Vec<u32> },
}

impl Split {
    pub fn n_train(&self) -> usize {
        self.train_indices.len()
    }

    pub fn n_test(&self) -> usize {
        self.test_indices.len()
    }
}

/// Partitions `frames` by a seeded shuffle. The shuffle decides membership
/// only; both index lists come back sorted.
pub fn split_random(frames: &[PressureFrame], test_fraction: f64, seed: u64) -> Result<Split> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let n = frames.len();
    // 0.2 * 5985 lands on 1197.0 only up to float error; round when the
    // product is within noise of an integer, truncate otherwise.
    let x = test_fraction * n as f64;
    let nearest = x.round();
    let n_test = if (x - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        x.floor() as usize
    };
    if n_test == 0 || n_test >= n {
        return Err(Error::InvalidInput(format!(
            "test_fraction {test_fraction} leaves {n_test} of {n} frames for testing"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut test: Vec<usize> = order[..n_test].to_vec();
    let mut train: Vec<usize> = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(Split {
        kind: SplitKind::RandomShuffle { test_fraction, seed },
        train_indices: train,
        test_indices: test,
    })
}

/// Partitions `frames` so whole subjects land on one side. Every requested
/// training subject must exist and at least one subject must remain for the
/// test side.
pub fn split_by_subject(frames: &[PressureFrame], train_subjects: &[u32]) -> Result<Split> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }
    if train_subjects.is_empty() {
        return Err(Error::InvalidInput(
            "train_subjects must name at least one subject".into(),
        ));
    }
    let train_set: BTreeSet<u32> = train_subjects.iter().copied().collect();
    let present: BTreeSet<u32> = frames.iter().map(|f| f.subject_id()).collect();
    let missing: Vec<u32> = train_set.difference(&present).copied().collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!(
            "train subjects {missing:?} do not appear in the dataset"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        if train_set.contains(&f.subject_id()) {
            train.push(i);
        } else {
            test.push(i);
        }
    }
    if test.is_empty() {
        return Err(Error::InvalidInput(
            "every subject is in the training set; the test side is empty".into(),
        ));
    }
    Ok(Split {
        kind: SplitKind::BySubject {
            train_subjects: train_set.into_iter().collect(),
        },
        train_indices: train,
        test_indices: test,
    })
}

/// Per-class precision/recall/F1 plus the truth count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: PostureLabel,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u32,
}

/// Confusion counts and summary scores for one trial.
///
/// Macro scores are unweighted means over classes that appear in the truth
/// set; a class never predicted has precision 0, and F1 is 0 whenever
/// precision and recall are both 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `confusion[truth][predicted]`, 15x15.
    pub confusion: Vec<Vec<u32>>,
    pub per_class: Vec<ClassScores>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

pub fn compute_metrics(predictions: &[PostureLabel], truths: &[PostureLabel]) -> Result<Metrics> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions against {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput(
            "metrics need at least one prediction".into(),
        ));
    }
    let mut confusion = vec![vec![0u32; NUM_CLASSES]; NUM_CLASSES];
    for (p, t) in predictions.iter().zip(truths) {
        confusion[*t as usize][*p as usize] += 1;
    }
    let mut per_class = Vec::with_capacity(NUM_CLASSES);
    let (mut sum_p, mut sum_r, mut sum_f, mut present) = (0.0, 0.0, 0.0, 0u32);
    for c in 0..NUM_CLASSES {
        let support: u32 = confusion[c].iter().sum();
        let tp = confusion[c][c];
        let predicted: u32 = (0..NUM_CLASSES).map(|t| confusion[t][c]).sum();
        let precision = if predicted > 0 {
            f64::from(tp) / f64::from(predicted)
        } else {
            0.0
        };
        let recall = if support > 0 {
            f64::from(tp) / f64::from(support)
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        if support > 0 {
            sum_p += precision;
            sum_r += recall;
            sum_f += f1;
            present += 1;
        }
        per_class.push(ClassScores {
            label: PostureLabel::from_id(c).expect("c < NUM_CLASSES"),
            precision,
            recall,
            f1,
            support,
        });
    }
    Ok(Metrics {
        confusion,
        per_class,
        macro_precision: sum_p / f64::from(present),
        macro_recall: sum_r / f64::from(present),
        macro_f1: sum_f / f64::from(present),
    })
}

/// The five comparison pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// Logistic regression on raw cell values.
    LrRaw,
    /// Logistic regression on the flattened n=1 spike encoding.
    LrEncodedN1,
    /// Reservoir fed binarized frames: any cell > 0 spikes once in bin 0.
    SnnLrRaw,
    /// Reservoir fed the n=1 spike encoding.
    SnnLrEncodedN1,
    /// Reservoir fed the n=2 spike encoding.
    SnnLrEncodedN2,
}

impl Pipeline {
    pub const ALL: [Pipeline; 5] = [
        Pipeline::LrRaw,
        Pipeline::LrEncodedN1,
        Pipeline::SnnLrRaw,
        Pipeline::SnnLrEncodedN1,
        Pipeline::SnnLrEncodedN2,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Pipeline::LrRaw => "lr_raw",
            Pipeline::LrEncodedN1 => "lr_encoded_n1",
            Pipeline::SnnLrRaw => "snn_lr_raw",
            Pipeline::SnnLrEncodedN1 => "snn_lr_encoded_n1",
            Pipeline::SnnLrEncodedN2 => "snn_lr_encoded_n2",
        }
    }

    pub fn uses_reservoir(&self) -> bool {
        matches!(
            self,
            Pipeline::SnnLrRaw | Pipeline::SnnLrEncodedN1 | Pipeline::SnnLrEncodedN2
        )
    }

    /// Spike-channel multiplicity per cell; None for non-spiking inputs.
    pub fn coding_n(&self) -> Option<u32> {
        match self {
            Pipeline::LrRaw => None,
            Pipeline::LrEncodedN1 => Some(1),
            Pipeline::SnnLrRaw => None,
            Pipeline::SnnLrEncodedN1 => Some(1),
            Pipeline::SnnLrEncodedN2 => Some(2),
        }
    }
}

impl std::str::FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Pipeline> {
        Pipeline::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPipeline(s.to_string()))
    }
}

impl std::fmt::Display for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Spike amplitude (and bin count) used when a plan does not name one.
pub const DEFAULT_ENCODER_AMPLITUDE: u32 = 30;
/// Settle time simulated after the last possible spike delivery.
pub const DEFAULT_WINDOW_TAIL_MS: u32 = 9;

fn default_amplitude() -> u32 {
    DEFAULT_ENCODER_AMPLITUDE
}

fn default_window_tail() -> u32 {
    DEFAULT_WINDOW_TAIL_MS
}

fn default_seed() -> u64 {
    42
}

/// A declarative experiment: which dataset, how to split it, and which
/// pipelines to run. Unknown keys are rejected so a typo cannot silently
/// change a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    /// Path to the dataset; the caller loads it (command-line flags win).
    #[serde(default)]
    pub dataset: Option<String>,
    pub split: SplitSpec,
    pub trials: Vec<Pipeline>,
    /// Seeds the reservoir build for every spiking trial.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Reservoir geometry; input count is overridden per trial. None means
    /// the full-scale default.
    #[serde(default)]
    pub reservoir: Option<TopologyConfig>,
    #[serde(default)]
    pub neuron_params: Option<NeuronParams>,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    /// Spike bins per encoding channel.
    #[serde(default = "default_amplitude")]
    pub encoder_amplitude: u32,
    /// Settle time simulated after the last input bin arrives.
    #[serde(default = "default_window_tail")]
    pub window_tail_ms: u32,
}

impl ExperimentPlan {
    /// A plan with every knob at its default.
    pub fn new(split: SplitSpec, trials: Vec<Pipeline>) -> Self {
        ExperimentPlan {
            dataset: None,
            split,
            trials,
            seed: default_seed(),
            reservoir: None,
            neuron_params: None,
            train: None,
            encoder_amplitude: default_amplitude(),
            window_tail_ms: default_window_tail(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitSpec {
    RandomShuffle {
        test_fraction: f64,
        seed: u64,
    },
    BySubject {
        train_subjects: Vec<u32>,
    },
}

impl SplitSpec {
    pub fn apply(&self, frames: &[PressureFrame]) -> Result<Split> {
        match self {
            SplitSpec::RandomShuffle {
                test_fraction,
                seed,
            } => split_random(frames, *test_fraction, *seed),
            SplitSpec::BySubject { train_subjects } => split_by_subject(frames, train_subjects),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub pipeline: Pipeline,
    pub feature_dim: usize,
    /// Present for spiking trials only.
    pub reservoir_neurons: Option<usize>,
    /// Weight multiplier resolved by calibration, when one ran.
    pub weight_scale: Option<f64>,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub seed: u64,
    pub split: SplitKind,
    pub n_train: usize,
    pub n_test: usize,
    pub train_seed: u64,
    pub notes: Vec<String>,
    pub trials: Vec<TrialReport>,
}

/// Wall-clock numbers live outside the report so two identical runs produce
/// byte-identical report files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub pipeline: Pipeline,
    pub calibration_ms: f64,
    pub feature_ms: f64,
    pub fit_ms: f64,
    pub predict_ms: f64,
    /// Feature extraction plus prediction per test frame.
    pub per_frame_inference_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TimingReport {
    pub trials: Vec<TrialTiming>,
}

fn encode_frame(frame: &PressureFrame, cfg: &EncodingConfig) -> Result<EncodedSpikes> {
    encode(&normalize_to_phase(frame, NormalizationMode::FixedRange), cfg)
}

/// Any cell above zero fires once in bin 0; empty cells stay silent. This is
/// the documented fallback for feeding raw frames into spiking neurons.
pub fn binarize_frame(frame: &PressureFrame) -> EncodedSpikes {
    let bins: Vec<Option<u16>> = frame
        .iter_cells()
        .map(|v| if v > 0 { Some(0) } else { None })
        .collect();
    EncodedSpikes::from_spike_bins(bins, 1).expect("one-bin geometry is always valid")
}

fn spike_input(frame: &PressureFrame, pipeline: Pipeline, amplitude: u32) -> Result<EncodedSpikes> {
    match pipeline.coding_n() {
        Some(n) => encode_frame(frame, &EncodingConfig::new(amplitude, n)?),
        None => Ok(binarize_frame(frame)),
    }
}

/// Flattens an encoding into 0/1 features, row-major over (row, bin).
fn one_hot_features(spikes: &EncodedSpikes) -> Vec<f64> {
    let n_bins = spikes.n_bins() as usize;
    let mut out = vec![0.0; spikes.rows() * n_bins];
    for (row, bin) in spikes.spike_bins().iter().enumerate() {
        if let Some(b) = bin {
            out[row * n_bins + usize::from(*b)] = 1.0;
        }
    }
    out
}

/// Input rows a pipeline delivers to a reservoir: one per encoder channel
/// for coded pipelines, one per sensor cell for binarized raw frames.
pub fn pipeline_input_rows(pipeline: Pipeline) -> usize {
    match pipeline.coding_n() {
        Some(n) => FRAME_CELLS * n as usize,
        None => FRAME_CELLS,
    }
}

/// Simulation window for spiking trials. Inputs are delivered one step after
/// their bin, so the window covers every bin plus the delivery step plus a
/// settle tail. All spiking pipelines share it so their states are comparable.
pub fn spiking_window_ms(encoder_amplitude: u32, window_tail_ms: u32) -> u32 {
    encoder_amplitude + 1 + window_tail_ms
}

/// Builds a reservoir sized for `pipeline`'s input rows, with the synapse
/// weight scale calibrated on a fixed-size sample of the given frames
/// (callers pass training frames so test data never leaks in).
/// `base.n_inputs` is overridden; every other field is taken as-is.
pub fn build_pipeline_reservoir<'a>(
    pipeline: Pipeline,
    calibration_frames: impl IntoIterator<Item = &'a PressureFrame>,
    base: &TopologyConfig,
    params: &NeuronParams,
    encoder_amplitude: u32,
    window_tail_ms: u32,
) -> Result<ReservoirTopology> {
    let mut cfg = base.clone();
    cfg.n_inputs = pipeline_input_rows(pipeline);
    let window_ms = spiking_window_ms(encoder_amplitude, window_tail_ms);
    let calib: Vec<EncodedSpikes> = calibration_frames
        .into_iter()
        .take(CALIBRATION_FRAMES)
        .map(|f| spike_input(f, pipeline, encoder_amplitude))
        .collect::<Result<_>>()?;
    build_calibrated_topology(&cfg, params, &calib, window_ms)
}

/// Maps raw frames to the feature vectors a readout consumes, for one
/// pipeline. Spiking pipelines carry a ready simulator, so a single frame
/// can be featurized without repeating topology construction; the struct is
/// immutable and safe to share across threads.
pub struct FeaturePipeline {
    pipeline: Pipeline,
    amplitude: u32,
    window_ms: u32,
    sim: Option<Simulator>,
}

impl FeaturePipeline {
    /// `reservoir` is required for spiking pipelines, whose input-row count
    /// must match the topology; non-spiking pipelines ignore it.
    pub fn new(
        pipeline: Pipeline,
        encoder_amplitude: u32,
        window_tail_ms: u32,
        reservoir: Option<(&ReservoirTopology, NeuronParams)>,
    ) -> Result<FeaturePipeline> {
        EncodingConfig::new(encoder_amplitude, 1)?;
        let sim = if pipeline.uses_reservoir() {
            let (topology, params) = reservoir.ok_or_else(|| {
                Error::InvalidInput(format!("pipeline {pipeline} needs a reservoir topology"))
            })?;
            let rows = pipeline_input_rows(pipeline);
            if topology.config.n_inputs != rows {
                return Err(Error::InvalidInput(format!(
                    "topology accepts {} input rows but pipeline {pipeline} feeds {rows}",
                    topology.config.n_inputs
                )));
            }
            Some(Simulator::new(topology, params)?)
        } else {
            None
        };
        Ok(FeaturePipeline {
            pipeline,
            amplitude: encoder_amplitude,
            window_ms: spiking_window_ms(encoder_amplitude, window_tail_ms),
            sim,
        })
    }

    pub fn pipeline(&self) -> Pipeline {
        self.pipeline
    }

    /// Feature family this pipeline produces, as recorded in saved models.
    pub fn feature_kind(&self) -> FeatureKind {
        if self.pipeline.uses_reservoir() {
            FeatureKind::LiquidState
        } else if self.pipeline.coding_n().is_some() {
            FeatureKind::EncodedFlat
        } else {
            FeatureKind::RawFrame
        }
    }

    pub fn window_ms(&self) -> u32 {
        self.window_ms
    }

    pub fn features(&self, frame: &PressureFrame) -> Result<Vec<f64>> {
        match &self.sim {
            Some(sim) => {
                let spikes = spike_input(frame, self.pipeline, self.amplitude)?;
                Ok(sim.run(&spikes, self.window_ms)?.to_features())
            }
            None => match self.pipeline.coding_n() {
                None => Ok(frame.flatten_f64()),
                Some(n) => {
                    let cfg = EncodingConfig::new(self.amplitude, n)?;
                    Ok(one_hot_features(&encode_frame(frame, &cfg)?))
                }
            },
        }
    }
}

struct TrialOutcome {
    report: TrialReport,
    timing: TrialTiming,
    #[allow(dead_code)]
    model: ReadoutModel,
}

fn run_trial(
    pipeline: Pipeline,
    frames: &[PressureFrame],
    split: &Split,
    plan: &ExperimentPlan,
) -> Result<TrialOutcome> {
    let amplitude = plan.encoder_amplitude;
    let params = plan.neuron_params.unwrap_or_default();
    let train_cfg = plan.train.clone().unwrap_or_default();
    let truths_train: Vec<PostureLabel> =
        split.train_indices.iter().map(|&i| frames[i].label()).collect();
    let truths_test: Vec<PostureLabel> =
        split.test_indices.iter().map(|&i| frames[i].label()).collect();

    let mut calibration_ms = 0.0;
    let mut weight_scale = None;
    let mut reservoir_neurons = None;

    // Spiking trials simulate every frame through a reservoir calibrated on
    // a training sample; the rest read features straight off the frame.
    let topology = if pipeline.uses_reservoir() {
        let mut topo_cfg = plan.reservoir.clone().unwrap_or_default();
        topo_cfg.seed = plan.seed;
        let t0 = Instant::now();
        let topology = build_pipeline_reservoir(
            pipeline,
            split.train_indices.iter().map(|&i| &frames[i]),
            &topo_cfg,
            &params,
            amplitude,
            plan.window_tail_ms,
        )?;
        calibration_ms = t0.elapsed().as_secs_f64() * 1e3;
        weight_scale = topology.config.gamma_scale;
        reservoir_neurons = Some(topology.n_neurons());
        Some(topology)
    } else {
        None
    };
    let fp = FeaturePipeline::new(
        pipeline,
        amplitude,
        plan.window_tail_ms,
        topology.as_ref().map(|t| (t, params)),
    )?;
    let feature_kind = fp.feature_kind();

    let extract = |indices: &[usize]| -> Result<Vec<Vec<f64>>> {
        indices.par_iter().map(|&i| fp.features(&frames[i])).collect()
    };
    let t0 = Instant::now();
    let train_feats = extract(&split.train_indices)?;
    let train_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t0 = Instant::now();
    let test_feats = extract(&split.test_indices)?;
    let test_ms = t0.elapsed().as_secs_f64() * 1e3;
    let feature_ms = train_ms + test_ms;
    let test_feature_ms = test_ms;
    let feature_dim = train_feats.first().map_or(0, Vec::len);

    let t0 = Instant::now();
    let model = train_readout(&train_feats, &truths_train, feature_kind, &train_cfg)?;
    let fit_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t0 = Instant::now();
    let predictions: Vec<PostureLabel> = test_feats
        .iter()
        .map(|f| model.predict(f).map(|(label, _)| label))
        .collect::<Result<_>>()?;
    let predict_ms = t0.elapsed().as_secs_f64() * 1e3;

    let metrics = compute_metrics(&predictions, &truths_test)?;
    Ok(TrialOutcome {
        report: TrialReport {
            pipeline,
            feature_dim,
            reservoir_neurons,
            weight_scale,
            metrics,
        },
        timing: TrialTiming {
            pipeline,
            calibration_ms,
            feature_ms,
            fit_ms,
            predict_ms,
            per_frame_inference_ms: (test_feature_ms + predict_ms) / split.n_test().max(1) as f64,
        },
        model,
    })
}

/// Runs every trial in `plan` against `frames`. The report is a pure
/// function of (frames, plan); timings are returned separately.
pub fn run_experiment(
    frames: &[PressureFrame],
    plan: &ExperimentPlan,
) -> Result<(ExperimentReport, TimingReport)> {
    if plan.trials.is_empty() {
        return Ok((
            ExperimentReport {
                version: REPORT_VERSION.to_string(),
                seed: plan.seed,
                split: match &plan.split {
                    SplitSpec::RandomShuffle {
                        test_fraction,
                        seed,
                    } => SplitKind::RandomShuffle {
                        test_fraction: *test_fraction,
                        seed: *seed,
                    },
                    SplitSpec::BySubject { train_subjects } => SplitKind::BySubject {
                        train_subjects: train_subjects.clone(),
                    },
                },
                n_train: 0,
                n_test: 0,
                train_seed: plan.train.clone().unwrap_or_default().seed,
                notes: report_notes(),
                trials: Vec::new(),
            },
            TimingReport::default(),
        ));
    }
    let split = plan.split.apply(frames)?;
    let mut trials = Vec::with_capacity(plan.trials.len());
    let mut timings = Vec::with_capacity(plan.trials.len());
    for &pipeline in &plan.trials {
        log::info!("running trial {pipeline}");
        let outcome = run_trial(pipeline, frames, &split, plan)?;
        log::info!(
            "trial {pipeline}: macro precision {:.4}, macro F1 {:.4}",
            outcome.report.metrics.macro_precision,
            outcome.report.metrics.macro_f1
        );
        trials.push(outcome.report);
        timings.push(outcome.timing);
    }
    Ok((
        ExperimentReport {
            version: REPORT_VERSION.to_string(),
            seed: plan.seed,
            split: split.kind.clone(),
            n_train: split.n_train(),
            n_test: split.n_test(),
            train_seed: plan.train.clone().unwrap_or_default().seed,
            notes: report_notes(),
            trials,
        },
        TimingReport { trials: timings },
    ))
}

fn report_notes() -> Vec<String> {
    vec![
        "macro scores are unweighted means over classes present in the test truths".to_string(),
        "snn_lr_raw binarizes frames: any cell > 0 fires once in bin 0, zeros stay silent"
            .to_string(),
    ]
}

/// Renders the report (and timings, when given) as a Markdown document.
pub fn render_markdown(report: &ExperimentReport, timings: Option<&TimingReport>) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "# Experiment report").unwrap();
    writeln!(out).unwrap();
    let split = match &report.split {
        SplitKind::RandomShuffle { test_fraction, seed } => {
            format!("random shuffle (test fraction {test_fraction}, seed {seed})")
        }
        SplitKind::BySubject { train_subjects } => {
            format!("by subject (train subjects {train_subjects:?})")
        }
    };
    writeln!(out, "- split: {split}").unwrap();
    writeln!(
        out,
        "- train/test frames: {}/{}",
        report.n_train, report.n_test
    )
    .unwrap();
    writeln!(out, "- reservoir seed: {}", report.seed).unwrap();
    writeln!(out, "- readout training seed: {}", report.train_seed).unwrap();
    for note in &report.notes {
        writeln!(out, "- note: {note}").unwrap();
    }
    writeln!(out).unwrap();
    writeln!(
        out,
        "| trial | features | neurons | macro precision | macro recall | macro F1 |"
    )
    .unwrap();
    writeln!(out, "|---|---|---|---|---|---|").unwrap();
    for t in &report.trials {
        writeln!(
            out,
            "| {} | {} | {} | {:.4} | {:.4} | {:.4} |",
            t.pipeline,
            t.feature_dim,
            t.reservoir_neurons
                .map_or_else(|| "-".to_string(), |n| n.to_string()),
            t.metrics.macro_precision,
            t.metrics.macro_recall,
            t.metrics.macro_f1,
        )
        .unwrap();
    }
    if let Some(timings) = timings {
        writeln!(out).unwrap();
        writeln!(
            out,
            "| trial | calibration ms | features ms | fit ms | predict ms | inference ms/frame |"
        )
        .unwrap();
        writeln!(out, "|---|---|---|---|---|---|").unwrap();
        for t in &timings.trials {
            writeln!(
                out,
                "| {} | {:.0} | {:.0} | {:.0} | {:.0} | {:.2} |",
                t.pipeline,
                t.calibration_ms,
                t.feature_ms,
                t.fit_ms,
                t.predict_ms,
                t.per_frame_inference_ms,
            )
            .unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{generate_dataset, GeneratorConfig};

    fn tiny_dataset() -> Vec<PressureFrame> {
        let cfg = GeneratorConfig {
            n_subjects: 4,
            frames_per_posture: 2,
            seed: 7,
            ..GeneratorConfig::default()
        };
        generate_dataset(&cfg).unwrap().0
    }

    #[test]
    fn random_split_sizes_and_membership() {
        let frames = tiny_dataset();
        let n = frames.len();
        assert_eq!(n, 4 * 2 * 15);
        let split = split_random(&frames, 0.2, 3).unwrap();
        assert_eq!(split.n_test(), 24);
        assert_eq!(split.n_train(), n - 24);
        let mut all: Vec<usize> = split
            .train_indices
            .iter()
            .chain(&split.test_indices)
            .copied()
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>(), "disjoint and covering");
    }

    #[test]
    fn random_split_is_deterministic_and_seed_sensitive() {
        let frames = tiny_dataset();
        let a = split_random(&frames, 0.25, 9).unwrap();
        let b = split_random(&frames, 0.25, 9).unwrap();
        assert_eq!(a, b);
        let c = split_random(&frames, 0.25, 10).unwrap();
        assert_ne!(a.test_indices, c.test_indices);
    }

    #[test]
    fn random_split_rejects_bad_fractions() {
        let frames = tiny_dataset();
        assert!(split_random(&frames, 0.0, 1).is_err());
        assert!(split_random(&frames, 1.0, 1).is_err());
        assert!(split_random(&frames, -0.3, 1).is_err());
        assert!(split_random(&[], 0.2, 1).is_err());
    }

    #[test]
    fn five_thousand_frames_at_a_fifth() {
        // 0.2 of 5985 must come out as exactly 1197 despite float rounding.
        let frames = vec![PressureFrame::zeroed(1, PostureLabel::Upright); 5985];
        let split = split_random(&frames, 0.2, 42).unwrap();
        assert_eq!(split.n_test(), 1197);
        assert_eq!(split.n_train(), 4788);
    }

    #[test]
    fn subject_split_partitions_by_subject() {
        let frames = tiny_dataset();
        let split = split_by_subject(&frames, &[1, 2, 3]).unwrap();
        for &i in &split.train_indices {
            assert!(frames[i].subject_id() <= 3);
        }
        for &i in &split.test_indices {
            assert_eq!(frames[i].subject_id(), 4);
        }
        assert_eq!(split.n_train() + split.n_test(), frames.len());
    }

    #[test]
    fn subject_split_rejects_missing_and_empty_test() {
        let frames = tiny_dataset();
        let err = split_by_subject(&frames, &[1, 2, 99]).unwrap_err();
        assert!(err.to_string().contains("99"), "{err}");
        assert!(split_by_subject(&frames, &[1, 2, 3, 4]).is_err());
        assert!(split_by_subject(&frames, &[]).is_err());
    }

    #[test]
    fn metrics_all_correct() {
        let truths = vec![
            PostureLabel::Upright,
            PostureLabel::LeaningBack,
            PostureLabel::SlouchingBackDown,
        ];
        let m = compute_metrics(&truths, &truths).unwrap();
        assert_eq!(m.macro_precision, 1.0);
        assert_eq!(m.macro_recall, 1.0);
        assert_eq!(m.macro_f1, 1.0);
        let total: u32 = m.confusion.iter().flatten().sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn metrics_degenerate_predictor_hand_oracle() {
        // Two balanced classes, every prediction is class 0. Class 0 gets
        // precision 1/2 and recall 1; class 1 gets 0 and 0. Macro over the
        // two classes present: precision 1/4, recall 1/2.
        let truths = vec![
            PostureLabel::Upright,
            PostureLabel::Upright,
            PostureLabel::LeaningRight,
            PostureLabel::LeaningRight,
        ];
        let preds = vec![PostureLabel::Upright; 4];
        let m = compute_metrics(&preds, &truths).unwrap();
        assert_eq!(m.macro_precision, 0.25);
        assert_eq!(m.macro_recall, 0.5);
        let f1_class0 = 2.0 * 0.5 * 1.0 / 1.5;
        assert!((m.macro_f1 - f1_class0 / 2.0).abs() < 1e-12);
        assert_eq!(m.per_class[0].support, 2);
        assert_eq!(m.per_class[1].precision, 0.0);
    }

    #[test]
    fn metrics_single_sample() {
        let m = compute_metrics(&[PostureLabel::LeaningBack], &[PostureLabel::LeaningBack])
            .unwrap();
        let back = &m.per_class[PostureLabel::LeaningBack as usize];
        assert_eq!(back.precision, 1.0);
        assert_eq!(back.recall, 1.0);
        assert_eq!(back.f1, 1.0);
    }

    #[test]
    fn metrics_reject_mismatch_and_empty() {
        assert!(compute_metrics(&[PostureLabel::Upright], &[]).is_err());
        assert!(compute_metrics(&[], &[]).is_err());
    }

    #[test]
    fn confusion_rows_sum_to_truth_counts() {
        let truths = vec![
            PostureLabel::Upright,
            PostureLabel::Upright,
            PostureLabel::LeaningLeft,
        ];
        let preds = vec![
            PostureLabel::LeaningLeft,
            PostureLabel::Upright,
            PostureLabel::LeaningLeft,
        ];
        let m = compute_metrics(&preds, &truths).unwrap();
        let row_sum: u32 = m.confusion[PostureLabel::Upright as usize].iter().sum();
        assert_eq!(row_sum, 2);
        let total: u32 = m.confusion.iter().flatten().sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn pipeline_names_round_trip() {
        for p in Pipeline::ALL {
            let parsed: Pipeline = p.name().parse().unwrap();
            assert_eq!(parsed, p);
        }
        let err = "lr_quantum".parse::<Pipeline>().unwrap_err();
        assert!(err.to_string().contains("lr_quantum"), "{err}");
    }

    #[test]
    fn plan_rejects_unknown_keys_and_pipelines() {
        let good = r#"{
            "split": {"kind": "random_shuffle", "test_fraction": 0.2, "seed": 1},
            "trials": ["lr_raw", "snn_lr_encoded_n1"]
        }"#;
        let plan: ExperimentPlan = serde_json::from_str(good).unwrap();
        assert_eq!(plan.seed, 42);
        assert_eq!(plan.encoder_amplitude, 30);
        assert_eq!(plan.trials.len(), 2);

        let typo = r#"{
            "split": {"kind": "random_shuffle", "test_fraction": 0.2, "seed": 1},
            "trials": [], "sead": 7
        }"#;
        assert!(serde_json::from_str::<ExperimentPlan>(typo).is_err());

        let bad_trial = r#"{
            "split": {"kind": "random_shuffle", "test_fraction": 0.2, "seed": 1},
            "trials": ["lr_rawr"]
        }"#;
        let err = serde_json::from_str::<ExperimentPlan>(bad_trial).unwrap_err();
        assert!(err.to_string().contains("lr_rawr"), "{err}");
    }

    #[test]
    fn empty_plan_yields_empty_report() {
        let frames = tiny_dataset();
        let plan = ExperimentPlan {
            dataset: None,
            split: SplitSpec::RandomShuffle {
                test_fraction: 0.2,
                seed: 1,
            },
            trials: vec![],
            seed: 42,
            reservoir: None,
            neuron_params: None,
            train: None,
            encoder_amplitude: 30,
            window_tail_ms: 9,
        };
        let (report, timings) = run_experiment(&frames, &plan).unwrap();
        assert!(report.trials.is_empty());
        assert!(timings.trials.is_empty());
        assert_eq!(report.version, REPORT_VERSION);
    }

    #[test]
    fn binarized_input_has_one_bin_and_matches_footprint() {
        let frames = tiny_dataset();
        let spikes = binarize_frame(&frames[0]);
        assert_eq!(spikes.rows(), FRAME_CELLS);
        assert_eq!(spikes.n_bins(), 1);
        let contact = frames[0].iter_cells().filter(|&v| v > 0).count();
        assert_eq!(spikes.count_ones(), contact);
    }

    #[test]
    fn markdown_report_lists_each_trial() {
        let report = ExperimentReport {
            version: REPORT_VERSION.to_string(),
            seed: 42,
            split: SplitKind::RandomShuffle {
                test_fraction: 0.2,
                seed: 1,
            },
            n_train: 8,
            n_test: 2,
            train_seed: 42,
            notes: report_notes(),
            trials: vec![],
        };
        let md = render_markdown(&report, None);
        assert!(md.contains("# Experiment report"));
        assert!(md.contains("macro precision"));
        assert!(md.contains("random shuffle"));
    }

    /// End-to-end smoke test on a miniature reservoir; checks report shape
    /// and run-to-run determinism, not accuracy.
    #[test]
    fn small_experiment_is_deterministic() {
        let frames = tiny_dataset();
        let mut reservoir = TopologyConfig::desk_scale();
        reservoir.n_excitatory = 96;
        reservoir.n_inhibitory = 24;
        reservoir.grid_dims = [6, 5, 4];
        reservoir.input_keep_prob = 0.05;
        let plan = ExperimentPlan {
            dataset: None,
            split: SplitSpec::BySubject {
                train_subjects: vec![1, 2, 3],
            },
            trials: vec![Pipeline::LrRaw, Pipeline::SnnLrEncodedN1],
            seed: 42,
            reservoir: Some(reservoir),
            neuron_params: None,
            train: Some(TrainConfig {
                max_epochs: 40,
                ..TrainConfig::default()
            }),
            encoder_amplitude: 30,
            window_tail_ms: 9,
        };
        let (report_a, timings_a) = run_experiment(&frames, &plan).unwrap();
        let (report_b, _) = run_experiment(&frames, &plan).unwrap();
        assert_eq!(report_a, report_b, "reports must be bit-reproducible");
        assert_eq!(report_a.trials.len(), 2);
        assert_eq!(report_a.n_train, 90);
        assert_eq!(report_a.n_test, 30);

        let lr = &report_a.trials[0];
        assert_eq!(lr.pipeline, Pipeline::LrRaw);
        assert_eq!(lr.feature_dim, FRAME_CELLS);
        assert!(lr.reservoir_neurons.is_none());

        let snn = &report_a.trials[1];
        assert_eq!(snn.pipeline, Pipeline::SnnLrEncodedN1);
        assert_eq!(snn.feature_dim, 120);
        assert_eq!(snn.reservoir_neurons, Some(120));
        assert!(snn.weight_scale.is_some());
        let total: u32 = snn.metrics.confusion.iter().flatten().sum();
        assert_eq!(total as usize, report_a.n_test);

        assert_eq!(timings_a.trials.len(), 2);
        assert!(timings_a.trials[1].per_frame_inference_ms > 0.0);

        let json_a = serde_json::to_string_pretty(&report_a).unwrap();
        let json_b = serde_json::to_string_pretty(&report_b).unwrap();
        assert_eq!(json_a, json_b);
    }
}
