//! Command-line front end: one binary, seven subcommands covering data
//! generation, encoding, reservoir construction, training, evaluation,
//! single-frame classification, and image rendering.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error. Set
//! `LIQUIDSTATE_LOG=info` (or `debug`) for progress output on stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{encode, EncodedSpikes, EncodingConfig};
use crate::error::Error;
use crate::eval::{
    binarize_frame, build_pipeline_reservoir, render_markdown, run_experiment, spiking_window_ms,
    ExperimentPlan, FeaturePipeline, Pipeline, DEFAULT_WINDOW_TAIL_MS,
};
use crate::frames::{
    load_frames, normalize_to_phase, save_frames, DatasetManifest, NormalizationMode,
    PostureLabel, PressureFrame, FRAME_CELLS,
};
use crate::pgm::{frame_heatmap, raster_bitmap, spike_bitmap};
use crate::readout::{train_readout, FeatureKind, ReadoutModel};
use crate::reservoir::{build_topology, NeuronParams, ReservoirTopology, Simulator, TopologyConfig};
use crate::synthgen::generate_dataset;

/// One configuration document covering every subcommand. All sections are
/// optional; command-line flags override file values, and a `--seed` given
/// on the command line overrides every section's own seed.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub encoder: Option<EncodingConfig>,
    pub generator: Option<crate::synthgen::GeneratorConfig>,
    pub topology: Option<TopologyConfig>,
    pub neuron_params: Option<NeuronParams>,
    pub train: Option<crate::readout::TrainConfig>,
    pub plan: Option<ExperimentPlan>,
}

impl RunConfig {
    pub fn load(path: &Path) -> crate::Result<RunConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io_context(format!("reading {}", path.display()), e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "liquidstate",
    version,
    about = "Sitting-posture recognition on pressure maps with a spiking reservoir",
    subcommand_required = true,
    arg_required_else_help = true
)]
struct Cli {
    /// Master random seed, overriding every configured seed [default: 42]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// JSON run configuration; command-line flags win on conflict
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for feature extraction [default: 1]
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic pressure-frame dataset
    Gen(GenArgs),
    /// Encode one frame into a spike matrix and write it as PGM
    Encode(EncodeArgs),
    /// Build (and optionally calibrate) a reservoir topology
    BuildReservoir(BuildReservoirArgs),
    /// Train a readout model for one pipeline
    Train(TrainArgs),
    /// Run an experiment plan and write reports
    Eval(EvalArgs),
    /// Classify a single frame with a saved model
    Classify(ClassifyArgs),
    /// Render frame heatmaps and reservoir spike rasters as PGM
    Render(RenderArgs),
}

#[derive(Args, Debug)]
struct GenArgs {
    /// Directory that will receive frames.csv and manifest.json
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Number of synthetic subjects
    #[arg(long)]
    subjects: Option<u32>,
    /// Frames per posture per subject
    #[arg(long = "per-posture", value_name = "N")]
    per_posture: Option<u32>,
    /// Per-cell sensor noise standard deviation, in ADC counts
    #[arg(long = "noise-sd", value_name = "SD")]
    noise_sd: Option<f64>,
    /// 1-based id of the subject rendered with a kyphotic spine
    #[arg(long = "kyphosis-subject", value_name = "ID")]
    kyphosis_subject: Option<u32>,
}

/// Phase normalization applied to a frame before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormArg {
    /// value / 1023 * pi
    FixedRange,
    /// min-max over the frame, then * pi
    PerFrameMinmax,
}

impl From<NormArg> for NormalizationMode {
    fn from(a: NormArg) -> NormalizationMode {
        match a {
            NormArg::FixedRange => NormalizationMode::FixedRange,
            NormArg::PerFrameMinmax => NormalizationMode::PerFrameMinmax,
        }
    }
}

#[derive(Args, Debug)]
struct EncodeArgs {
    /// Frame CSV or dataset manifest to read
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Zero-based frame index within the data
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Spike bins per channel (the encoder amplitude)
    #[arg(long)]
    amplitude: Option<u32>,
    /// Encoder channels per sensor cell
    #[arg(long = "coding-n", value_name = "N")]
    coding_n: Option<u32>,
    /// Phase normalization applied before encoding
    #[arg(long, value_enum, default_value_t = NormArg::FixedRange)]
    normalization: NormArg,
    /// Output PGM path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Integer pixel replication factor
    #[arg(long, default_value_t = 1)]
    scale: usize,
}

#[derive(Args, Debug)]
struct BuildReservoirArgs {
    /// Output topology JSON path
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Input spike rows the reservoir accepts (without calibration)
    #[arg(long, value_name = "N")]
    inputs: Option<usize>,
    /// Use the reduced 500-neuron bench geometry
    #[arg(long)]
    desk_scale: bool,
    /// Calibrate the synapse weight scale on frames from this file
    #[arg(long = "calibrate-with", value_name = "FILE")]
    calibrate_with: Option<PathBuf>,
    /// Pipeline whose spike geometry drives calibration
    #[arg(long, default_value = "snn_lr_encoded_n1")]
    pipeline: Pipeline,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training frames: CSV or dataset manifest
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Feature pipeline to train
    #[arg(long)]
    pipeline: Pipeline,
    /// Reuse this reservoir instead of building one
    #[arg(long, value_name = "FILE")]
    topology: Option<PathBuf>,
    /// Directory receiving model.json (and topology.json when built here)
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Experiment plan JSON; defaults to the config file's plan section
    #[arg(long, value_name = "FILE")]
    plan: Option<PathBuf>,
    /// Frame CSV or manifest; overrides the plan's dataset path
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Directory receiving report.json, report.md, and timings.json
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    /// Saved readout model JSON
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Frame CSV or manifest holding the frame to classify
    #[arg(long, value_name = "FILE")]
    frame: PathBuf,
    /// Zero-based frame index within the file
    #[arg(long, default_value_t = 0)]
    index: usize,
    /// Reservoir topology (required for liquid-state models)
    #[arg(long, value_name = "FILE")]
    topology: Option<PathBuf>,
    /// Feed the reservoir binarized raw frames instead of latency-coded ones
    #[arg(long)]
    raw_binarized: bool,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Frame CSV or manifest to draw from
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Output directory for PGM files
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Zero-based frame index; by default the first frame of every class
    #[arg(long)]
    index: Option<usize>,
    /// Integer pixel replication for heatmaps
    #[arg(long, default_value_t = 8)]
    scale: usize,
    /// Also render reservoir spike rasters using this topology
    #[arg(long, value_name = "FILE")]
    topology: Option<PathBuf>,
    /// Feed the reservoir binarized raw frames instead of latency-coded ones
    #[arg(long)]
    raw_binarized: bool,
}

/// Errors are split by exit code: usage mistakes (1) versus bad data (2).
enum CmdError {
    Usage(String),
    Data(Error),
}

impl From<Error> for CmdError {
    fn from(e: Error) -> CmdError {
        CmdError::Data(e)
    }
}

type CmdResult<T> = std::result::Result<T, CmdError>;

fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

/// Shared state resolved once per invocation.
struct Ctx {
    /// Seed given on the command line; `None` leaves configured seeds alone.
    seed: Option<u64>,
    config: RunConfig,
}

impl Ctx {
    fn encoder(&self) -> EncodingConfig {
        self.config.encoder.unwrap_or_default()
    }

    fn neuron_params(&self) -> NeuronParams {
        self.config.neuron_params.unwrap_or_default()
    }

    fn topology_config(&self) -> TopologyConfig {
        let mut cfg = self.config.topology.clone().unwrap_or_default();
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg
    }

    fn train_config(&self) -> crate::readout::TrainConfig {
        let mut cfg = self.config.train.unwrap_or_default();
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg
    }

    /// Settle tail for spiking windows; an eval plan in the config wins.
    fn window_tail_ms(&self) -> u32 {
        self.config
            .plan
            .as_ref()
            .map_or(DEFAULT_WINDOW_TAIL_MS, |p| p.window_tail_ms)
    }
}

/// Parses `argv` and runs the selected subcommand, returning the process
/// exit code. Never panics on user input.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let _ = env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("LIQUIDSTATE_LOG", "warn"),
    )
    .format_timestamp(None)
    .try_init();

    let threads = cli.threads.unwrap_or(1);
    if threads == 0 {
        eprintln!("usage error: --threads must be at least 1");
        return 1;
    }
    // Errors only if a global pool already exists (repeat calls in-process).
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
    {
        log::debug!("thread pool already initialized: {e}");
    }

    let config = match &cli.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        seed: cli.seed.or(config.seed),
        config,
    };

    let outcome = match cli.command {
        Command::Gen(args) => cmd_gen(&ctx, args),
        Command::Encode(args) => cmd_encode(&ctx, args),
        Command::BuildReservoir(args) => cmd_build_reservoir(&ctx, args),
        Command::Train(args) => cmd_train(&ctx, args),
        Command::Eval(args) => cmd_eval(&ctx, args),
        Command::Classify(args) => cmd_classify(&ctx, args),
        Command::Render(args) => cmd_render(&ctx, args),
    };
    match outcome {
        Ok(()) => 0,
        Err(CmdError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            1
        }
        Err(CmdError::Data(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Loads frames from a CSV, or from every file listed in a dataset manifest
/// (`.json`), resolving manifest entries relative to the manifest location.
fn frames_at(path: &Path) -> crate::Result<Vec<PressureFrame>> {
    let is_manifest = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_manifest {
        return load_frames(path);
    }
    let manifest = DatasetManifest::load(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut frames = Vec::new();
    for file in &manifest.files {
        frames.extend(load_frames(dir.join(file))?);
    }
    if frames.len() as u64 != manifest.total_frames {
        return Err(Error::InvalidInput(format!(
            "manifest {} lists {} frames but its files hold {}",
            path.display(),
            manifest.total_frames,
            frames.len()
        )));
    }
    Ok(frames)
}

fn frame_at(path: &Path, index: usize) -> crate::Result<PressureFrame> {
    let frames = frames_at(path)?;
    let n = frames.len();
    frames.into_iter().nth(index).ok_or_else(|| {
        Error::InvalidInput(format!(
            "frame index {index} out of range: {} holds {n} frames",
            path.display()
        ))
    })
}

fn create_dir(path: &Path) -> crate::Result<()> {
    fs::create_dir_all(path)
        .map_err(|e| Error::io_context(format!("creating directory {}", path.display()), e))
}

fn write_text(path: &Path, text: &str) -> crate::Result<()> {
    fs::write(path, text).map_err(|e| Error::io_context(format!("writing {}", path.display()), e))
}

fn cmd_gen(ctx: &Ctx, args: GenArgs) -> CmdResult<()> {
    let mut cfg = ctx.config.generator.clone().unwrap_or_default();
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    if let Some(v) = args.subjects {
        cfg.n_subjects = v;
    }
    if let Some(v) = args.per_posture {
        cfg.frames_per_posture = v;
    }
    if let Some(v) = args.noise_sd {
        cfg.noise_sd = v;
    }
    if let Some(v) = args.kyphosis_subject {
        cfg.kyphosis_subject = v;
    }
    let (frames, _) = generate_dataset(&cfg)?;
    create_dir(&args.out)?;
    let frames_path = args.out.join("frames.csv");
    save_frames(&frames, &frames_path)?;
    let manifest =
        DatasetManifest::from_frames(&frames, vec!["frames.csv".to_string()], cfg.seed);
    manifest.save(args.out.join("manifest.json"))?;
    println!(
        "wrote {} frames ({} subjects x {} postures x {} reps) to {}",
        frames.len(),
        cfg.n_subjects,
        PostureLabel::ALL.len(),
        cfg.frames_per_posture,
        frames_path.display()
    );
    Ok(())
}

fn cmd_encode(ctx: &Ctx, args: EncodeArgs) -> CmdResult<()> {
    let mut cfg = ctx.encoder();
    if let Some(v) = args.amplitude {
        cfg.amplitude = v;
    }
    if let Some(v) = args.coding_n {
        cfg.coding_n = v;
    }
    cfg.validate()?;
    let frame = frame_at(&args.data, args.index)?;
    let phase = normalize_to_phase(&frame, args.normalization.into());
    let spikes = encode(&phase, &cfg)?;
    spike_bitmap(&spikes).scaled(args.scale)?.save_pgm(&args.out)?;
    println!(
        "encoded frame {} (subject {}, {}): {} rows x {} bins, {} spikes -> {}",
        args.index,
        frame.subject_id(),
        frame.label().name(),
        spikes.rows(),
        spikes.n_bins(),
        spikes.count_ones(),
        args.out.display()
    );
    Ok(())
}

fn cmd_build_reservoir(ctx: &Ctx, args: BuildReservoirArgs) -> CmdResult<()> {
    let mut cfg = if args.desk_scale {
        let mut c = TopologyConfig::desk_scale();
        if let Some(s) = ctx.seed {
            c.seed = s;
        }
        c
    } else {
        ctx.topology_config()
    };
    let params = ctx.neuron_params();
    let topology = match &args.calibrate_with {
        Some(path) => {
            if args.inputs.is_some() {
                return Err(usage(
                    "--inputs conflicts with --calibrate-with; the pipeline fixes the input rows",
                ));
            }
            if !args.pipeline.uses_reservoir() {
                return Err(usage(format!(
                    "pipeline {} never feeds a reservoir; pick a spiking pipeline",
                    args.pipeline
                )));
            }
            let frames = frames_at(path)?;
            build_pipeline_reservoir(
                args.pipeline,
                frames.iter(),
                &cfg,
                &params,
                ctx.encoder().amplitude,
                ctx.window_tail_ms(),
            )?
        }
        None => {
            if let Some(n) = args.inputs {
                cfg.n_inputs = n;
            }
            build_topology(&cfg)?
        }
    };
    topology.save(&args.out)?;
    let scale_note = match topology.config.gamma_scale {
        Some(s) => format!(", weight scale {s:.6}"),
        None => String::new(),
    };
    println!(
        "built reservoir: {} neurons ({} excitatory / {} inhibitory), {} input rows, {} recurrent + {} input synapses{} -> {}",
        topology.n_neurons(),
        topology.config.n_excitatory,
        topology.config.n_inhibitory,
        topology.config.n_inputs,
        topology.synapses.len(),
        topology.input_synapses.len(),
        scale_note,
        args.out.display()
    );
    Ok(())
}

fn cmd_train(ctx: &Ctx, args: TrainArgs) -> CmdResult<()> {
    let frames = frames_at(&args.data)?;
    let params = ctx.neuron_params();
    let amplitude = ctx.encoder().amplitude;
    let tail = ctx.window_tail_ms();

    let (topology, built_here) = if args.pipeline.uses_reservoir() {
        match &args.topology {
            Some(path) => (Some(ReservoirTopology::load(path)?), false),
            None => {
                let topo = build_pipeline_reservoir(
                    args.pipeline,
                    frames.iter(),
                    &ctx.topology_config(),
                    &params,
                    amplitude,
                    tail,
                )?;
                (Some(topo), true)
            }
        }
    } else {
        if args.topology.is_some() {
            return Err(usage(format!(
                "pipeline {} reads frames directly; --topology does not apply",
                args.pipeline
            )));
        }
        (None, false)
    };

    let fp = FeaturePipeline::new(
        args.pipeline,
        amplitude,
        tail,
        topology.as_ref().map(|t| (t, params)),
    )?;
    let features: Vec<Vec<f64>> = frames
        .par_iter()
        .map(|f| fp.features(f))
        .collect::<crate::Result<_>>()?;
    let labels: Vec<PostureLabel> = frames.iter().map(PressureFrame::label).collect();
    let model = train_readout(&features, &labels, fp.feature_kind(), &ctx.train_config())?;

    create_dir(&args.out)?;
    let model_path = args.out.join("model.json");
    model.save(&model_path)?;
    let mut extra = String::new();
    if built_here {
        let topo_path = args.out.join("topology.json");
        topology
            .as_ref()
            .expect("built_here implies a topology")
            .save(&topo_path)?;
        extra = format!(" and {}", topo_path.display());
    }
    println!(
        "trained {} readout on {} frames (feature dim {}) -> {}{}",
        args.pipeline,
        frames.len(),
        model.n_features(),
        model_path.display(),
        extra
    );
    Ok(())
}

fn cmd_eval(ctx: &Ctx, args: EvalArgs) -> CmdResult<()> {
    let (mut plan, plan_dir): (ExperimentPlan, PathBuf) = match (&args.plan, &ctx.config.plan) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::io_context(format!("reading {}", path.display()), e))?;
            let plan = serde_json::from_str(&text).map_err(Error::from)?;
            let dir = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
            (plan, dir)
        }
        (None, Some(plan)) => (plan.clone(), PathBuf::from(".")),
        (None, None) => {
            return Err(usage(
                "pass --plan FILE or a --config file with a plan section",
            ))
        }
    };
    if let Some(s) = ctx.seed {
        plan.seed = s;
    }
    let data_path = match (&args.data, &plan.dataset) {
        (Some(path), _) => path.clone(),
        (None, Some(name)) => {
            let p = PathBuf::from(name);
            if p.is_absolute() {
                p
            } else {
                plan_dir.join(p)
            }
        }
        (None, None) => return Err(usage("the plan names no dataset; pass --data FILE")),
    };
    let frames = frames_at(&data_path)?;
    let (report, timings) = run_experiment(&frames, &plan)?;

    create_dir(&args.out)?;
    let report_json = args.out.join("report.json");
    let report_md = args.out.join("report.md");
    let timings_json = args.out.join("timings.json");
    write_text(
        &report_json,
        &(serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n"),
    )?;
    // The markdown file embeds no timings, so repeat runs stay byte-identical.
    write_text(&report_md, &render_markdown(&report, None))?;
    write_text(
        &timings_json,
        &(serde_json::to_string_pretty(&timings).map_err(Error::from)? + "\n"),
    )?;
    print!("{}", render_markdown(&report, Some(&timings)));
    println!(
        "wrote {}, {}, {}",
        report_json.display(),
        report_md.display(),
        timings_json.display()
    );
    Ok(())
}

/// Picks the pipeline a liquid-state model was trained for from the
/// reservoir's input geometry. 190 rows is ambiguous (binarized raw frames
/// and the 1-channel code both use one row per cell), so `raw_binarized`
/// selects the former.
fn deduce_liquid_pipeline(n_inputs: usize, raw_binarized: bool) -> crate::Result<Pipeline> {
    match (n_inputs, raw_binarized) {
        (FRAME_CELLS, true) => Ok(Pipeline::SnnLrRaw),
        (FRAME_CELLS, false) => Ok(Pipeline::SnnLrEncodedN1),
        (n, false) if n == 2 * FRAME_CELLS => Ok(Pipeline::SnnLrEncodedN2),
        (n, true) => Err(Error::InvalidInput(format!(
            "binarized raw frames feed {FRAME_CELLS} rows but the topology accepts {n}"
        ))),
        (n, false) => Err(Error::InvalidInput(format!(
            "topology accepts {n} input rows; expected {FRAME_CELLS} or {}",
            2 * FRAME_CELLS
        ))),
    }
}

fn cmd_classify(ctx: &Ctx, args: ClassifyArgs) -> CmdResult<()> {
    let model = ReadoutModel::load(&args.model)?;
    let frame = frame_at(&args.frame, args.index)?;
    let amplitude = ctx.encoder().amplitude;
    let tail = ctx.window_tail_ms();
    let params = ctx.neuron_params();

    let (pipeline, topology) = match model.feature_kind() {
        FeatureKind::RawFrame => {
            if args.raw_binarized {
                return Err(usage(
                    "--raw-binarized only applies to liquid-state models",
                ));
            }
            (Pipeline::LrRaw, None)
        }
        FeatureKind::EncodedFlat => {
            if args.raw_binarized {
                return Err(usage(
                    "--raw-binarized only applies to liquid-state models",
                ));
            }
            (Pipeline::LrEncodedN1, None)
        }
        FeatureKind::LiquidState => {
            let path = args.topology.as_ref().ok_or_else(|| {
                usage("liquid-state models need --topology FILE to rebuild their reservoir")
            })?;
            let topo = ReservoirTopology::load(path)?;
            let pipeline = deduce_liquid_pipeline(topo.config.n_inputs, args.raw_binarized)?;
            (pipeline, Some(topo))
        }
    };

    let fp = FeaturePipeline::new(
        pipeline,
        amplitude,
        tail,
        topology.as_ref().map(|t| (t, params)),
    )?;
    let (label, probs) = model.predict(&fp.features(&frame)?)?;
    println!("{}", label.name());
    let rendered: Vec<String> = probs.iter().map(|p| format!("{p:.6}")).collect();
    println!("{}", rendered.join(" "));
    Ok(())
}

fn cmd_render(ctx: &Ctx, args: RenderArgs) -> CmdResult<()> {
    let frames = frames_at(&args.data)?;
    let indices: Vec<usize> = match args.index {
        Some(i) => {
            if i >= frames.len() {
                return Err(CmdError::Data(Error::InvalidInput(format!(
                    "frame index {i} out of range: {} holds {} frames",
                    args.data.display(),
                    frames.len()
                ))));
            }
            vec![i]
        }
        // First frame of each class, in label order.
        None => PostureLabel::ALL
            .iter()
            .filter_map(|&label| frames.iter().position(|f| f.label() == label))
            .collect(),
    };

    let sim_setup = match &args.topology {
        Some(path) => {
            let topo = ReservoirTopology::load(path)?;
            let pipeline = deduce_liquid_pipeline(topo.config.n_inputs, args.raw_binarized)?;
            Some((topo, pipeline))
        }
        None => {
            if args.raw_binarized {
                return Err(usage("--raw-binarized needs --topology"));
            }
            None
        }
    };

    create_dir(&args.out)?;
    let amplitude = ctx.encoder().amplitude;
    let window_ms = spiking_window_ms(amplitude, ctx.window_tail_ms());
    let mut written = 0usize;
    for &i in &indices {
        let frame = &frames[i];
        let name = frame.label().name().replace(' ', "_");
        let heatmap_path = args.out.join(format!("heatmap_{i:05}_{name}.pgm"));
        frame_heatmap(frame).scaled(args.scale)?.save_pgm(&heatmap_path)?;
        written += 1;
        if let Some((topo, pipeline)) = &sim_setup {
            let params = ctx.neuron_params();
            let sim = Simulator::new(topo, params)?;
            let spikes: EncodedSpikes = match pipeline.coding_n() {
                Some(n) => encode(
                    &normalize_to_phase(frame, NormalizationMode::FixedRange),
                    &EncodingConfig::new(amplitude, n)?,
                )?,
                None => binarize_frame(frame),
            };
            let (_, raster) = sim.run_with_raster(&spikes, window_ms)?;
            let raster_path = args.out.join(format!("raster_{i:05}_{name}.pgm"));
            raster_bitmap(&raster).save_pgm(&raster_path)?;
            written += 1;
        }
    }
    println!(
        "wrote {written} image(s) for {} frame(s) to {}",
        indices.len(),
        args.out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_rejects_unknown_keys() {
        let err = serde_json::from_str::<RunConfig>(r#"{"seeed": 1}"#).unwrap_err();
        assert!(err.to_string().contains("seeed"));
    }

    #[test]
    fn run_config_sections_parse_and_default() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"seed": 7, "encoder": {"amplitude": 10}}"#).unwrap();
        assert_eq!(cfg.seed, Some(7));
        let enc = cfg.encoder.unwrap();
        assert_eq!(enc.amplitude, 10);
        assert_eq!(enc.coding_n, EncodingConfig::default().coding_n);
        assert!(cfg.plan.is_none());
    }

    #[test]
    fn liquid_pipeline_deduction_covers_both_geometries() {
        assert_eq!(
            deduce_liquid_pipeline(FRAME_CELLS, false).unwrap(),
            Pipeline::SnnLrEncodedN1
        );
        assert_eq!(
            deduce_liquid_pipeline(FRAME_CELLS, true).unwrap(),
            Pipeline::SnnLrRaw
        );
        assert_eq!(
            deduce_liquid_pipeline(2 * FRAME_CELLS, false).unwrap(),
            Pipeline::SnnLrEncodedN2
        );
        assert!(deduce_liquid_pipeline(2 * FRAME_CELLS, true).is_err());
        assert!(deduce_liquid_pipeline(17, false).is_err());
    }

    #[test]
    fn help_and_bad_usage_exit_codes() {
        assert_eq!(run(["liquidstate", "--help"]), 0);
        assert_eq!(run(["liquidstate", "frobnicate"]), 1);
        assert_eq!(run(["liquidstate"]), 1);
    }
}
