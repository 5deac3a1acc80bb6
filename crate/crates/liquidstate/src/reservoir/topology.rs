//! Reservoir wiring: neurons on a 3-D grid, distance-dependent recurrent
//! synapses, and a sparse input projection.
//!
//! Connection probability between two neurons at grid distance `D` is
//! `C * exp(-D^2 / lambda^2)` where `C` depends on the source/target
//! excitatory-inhibitory pairing. Weights are gamma draws scaled by a global
//! factor; inhibitory sources carry negative weights.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Schema tag written into topology files.
pub const TOPOLOGY_VERSION: &str = "reservoir-topology v1";

/// Excitatory or inhibitory role of a neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeuronKind {
    #[serde(rename = "E")]
    Excitatory,
    #[serde(rename = "I")]
    Inhibitory,
}

impl fmt::Display for NeuronKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NeuronKind::Excitatory => write!(f, "E"),
            NeuronKind::Inhibitory => write!(f, "I"),
        }
    }
}

/// Source/target pairing of a recurrent synapse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SynapseClass {
    EE,
    EI,
    IE,
    II,
}

impl SynapseClass {
    pub const ALL: [SynapseClass; 4] = [
        SynapseClass::EE,
        SynapseClass::EI,
        SynapseClass::IE,
        SynapseClass::II,
    ];

    /// Pairing for a synapse from `src` onto `dst`.
    pub fn of(src: NeuronKind, dst: NeuronKind) -> SynapseClass {
        match (src, dst) {
            (NeuronKind::Excitatory, NeuronKind::Excitatory) => SynapseClass::EE,
            (NeuronKind::Excitatory, NeuronKind::Inhibitory) => SynapseClass::EI,
            (NeuronKind::Inhibitory, NeuronKind::Excitatory) => SynapseClass::IE,
            (NeuronKind::Inhibitory, NeuronKind::Inhibitory) => SynapseClass::II,
        }
    }
}

impl fmt::Display for SynapseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SynapseClass::EE => "EE",
            SynapseClass::EI => "EI",
            SynapseClass::IE => "IE",
            SynapseClass::II => "II",
        };
        write!(f, "{s}")
    }
}

impl FromStr for SynapseClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "EE" => Ok(SynapseClass::EE),
            "EI" => Ok(SynapseClass::EI),
            "IE" => Ok(SynapseClass::IE),
            "II" => Ok(SynapseClass::II),
            other => Err(Error::InvalidInput(format!(
                "unknown synapse class {other:?}, expected EE, EI, IE or II"
            ))),
        }
    }
}

/// Base connection probabilities `C` per synapse class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConnectionProbabilities {
    pub ee: f64,
    pub ei: f64,
    pub ie: f64,
    pub ii: f64,
}

impl Default for ConnectionProbabilities {
    fn default() -> Self {
        ConnectionProbabilities {
            ee: 0.3,
            ei: 0.2,
            ie: 0.4,
            ii: 0.1,
        }
    }
}

impl ConnectionProbabilities {
    pub fn get(&self, class: SynapseClass) -> f64 {
        match class {
            SynapseClass::EE => self.ee,
            SynapseClass::EI => self.ei,
            SynapseClass::IE => self.ie,
            SynapseClass::II => self.ii,
        }
    }
}

/// Gamma shape parameters for synaptic weight draws, per synapse class and
/// for the input projection onto E/I targets. Scale is global, see
/// [`TopologyConfig::gamma_scale`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GammaShapes {
    pub ee: f64,
    pub ei: f64,
    pub ie: f64,
    pub ii: f64,
    pub input_e: f64,
    pub input_i: f64,
}

impl Default for GammaShapes {
    fn default() -> Self {
        GammaShapes {
            ee: 30.0,
            ei: 60.0,
            ie: 19.0,
            ii: 19.0,
            input_e: 18.0,
            input_i: 9.0,
        }
    }
}

impl GammaShapes {
    pub fn recurrent(&self, class: SynapseClass) -> f64 {
        match class {
            SynapseClass::EE => self.ee,
            SynapseClass::EI => self.ei,
            SynapseClass::IE => self.ie,
            SynapseClass::II => self.ii,
        }
    }

    pub fn input(&self, target: NeuronKind) -> f64 {
        match target {
            NeuronKind::Excitatory => self.input_e,
            NeuronKind::Inhibitory => self.input_i,
        }
    }
}

/// Everything needed to rebuild a reservoir deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyConfig {
    pub n_excitatory: usize,
    pub n_inhibitory: usize,
    /// Grid extents; the product must equal the neuron count.
    pub grid_dims: [usize; 3],
    pub lambda: f64,
    pub connection_c: ConnectionProbabilities,
    /// Fraction of reservoir neurons eligible as input targets.
    pub input_pool_fraction: f64,
    /// Probability that a given (input row, pool neuron) synapse is kept.
    pub input_keep_prob: f64,
    pub gamma_shapes: GammaShapes,
    /// Global multiplier on all weight draws. `None` means unit scale,
    /// typically replaced later by activity calibration.
    pub gamma_scale: Option<f64>,
    /// Number of input rows the reservoir accepts.
    pub n_inputs: usize,
    pub seed: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            n_excitatory: 1600,
            n_inhibitory: 400,
            grid_dims: [20, 10, 10],
            lambda: 1.6667,
            connection_c: ConnectionProbabilities::default(),
            input_pool_fraction: 0.30,
            input_keep_prob: 0.01,
            gamma_shapes: GammaShapes::default(),
            gamma_scale: None,
            n_inputs: 380,
            seed: 42,
        }
    }
}

impl TopologyConfig {
    /// Quarter-size reservoir for laptops and CI: 400 E + 100 I on a
    /// 10x10x5 grid, same wiring statistics otherwise.
    pub fn desk_scale() -> Self {
        TopologyConfig {
            n_excitatory: 400,
            n_inhibitory: 100,
            grid_dims: [10, 10, 5],
            ..TopologyConfig::default()
        }
    }

    pub fn n_neurons(&self) -> usize {
        self.n_excitatory + self.n_inhibitory
    }

    /// Floor of `input_pool_fraction * n_neurons`, with a guard so products
    /// that are integers in exact arithmetic (0.30 * 2000 = 600) do not fall
    /// one short from the binary representation of the fraction.
    pub fn input_pool_size(&self) -> usize {
        let x = self.input_pool_fraction * self.n_neurons() as f64;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-9 {
            nearest as usize
        } else {
            x.floor() as usize
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_neurons();
        if n == 0 {
            return Err(Error::InvalidConfig("reservoir has zero neurons".into()));
        }
        if self.n_excitatory == 0 || self.n_inhibitory == 0 {
            return Err(Error::InvalidConfig(format!(
                "both populations must be non-empty, got {} E and {} I",
                self.n_excitatory, self.n_inhibitory
            )));
        }
        let cells = self.grid_dims.iter().product::<usize>();
        if cells != n {
            return Err(Error::InvalidConfig(format!(
                "grid {:?} holds {} cells but there are {} neurons",
                self.grid_dims, cells, n
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        for (name, p) in [
            ("ee", self.connection_c.ee),
            ("ei", self.connection_c.ei),
            ("ie", self.connection_c.ie),
            ("ii", self.connection_c.ii),
            ("input_keep_prob", self.input_keep_prob),
            ("input_pool_fraction", self.input_pool_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        for (name, s) in [
            ("ee", self.gamma_shapes.ee),
            ("ei", self.gamma_shapes.ei),
            ("ie", self.gamma_shapes.ie),
            ("ii", self.gamma_shapes.ii),
            ("input_e", self.gamma_shapes.input_e),
            ("input_i", self.gamma_shapes.input_i),
        ] {
            if !(s > 0.0) {
                return Err(Error::InvalidConfig(format!(
                    "gamma shape {name} must be positive, got {s}"
                )));
            }
        }
        if let Some(scale) = self.gamma_scale {
            if !(scale > 0.0) || !scale.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "gamma_scale must be positive and finite, got {scale}"
                )));
            }
        }
        if self.n_inputs == 0 {
            return Err(Error::InvalidConfig("n_inputs must be at least 1".into()));
        }
        Ok(())
    }
}

/// Probability that a synapse of `class` connects neurons at positions `a`
/// and `b`: `C * exp(-D^2 / lambda^2)` with `D` the Euclidean grid distance.
pub fn connection_probability(
    a: [u16; 3],
    b: [u16; 3],
    class: SynapseClass,
    cfg: &TopologyConfig,
) -> f64 {
    let d2: f64 = (0..3)
        .map(|i| {
            let d = a[i] as f64 - b[i] as f64;
            d * d
        })
        .sum();
    cfg.connection_c.get(class) * (-d2 / (cfg.lambda * cfg.lambda)).exp()
}

/// Recurrent synapse. `weight` is the membrane jump in mV applied at the
/// target, already signed (negative iff the source is inhibitory).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub src: u32,
    pub dst: u32,
    pub weight: f64,
    pub delay_steps: u32,
}

/// Synapse from an input row onto a reservoir neuron. Always excitatory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputSynapse {
    pub input_row: u32,
    pub dst: u32,
    pub weight: f64,
}

/// Immutable wiring of one reservoir instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirTopology {
    pub config: TopologyConfig,
    /// Grid coordinates per neuron, indexed by neuron id.
    pub positions: Vec<[u16; 3]>,
    pub kinds: Vec<NeuronKind>,
    /// Recurrent synapses sorted by source id.
    pub synapses: Vec<Synapse>,
    /// Input synapses sorted by input row.
    pub input_synapses: Vec<InputSynapse>,
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    version: String,
    #[serde(flatten)]
    topology: ReservoirTopology,
}

impl ReservoirTopology {
    pub fn n_neurons(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, neuron: usize) -> NeuronKind {
        self.kinds[neuron]
    }

    /// Mean number of reservoir targets per input row.
    pub fn mean_input_fanout(&self) -> f64 {
        self.input_synapses.len() as f64 / self.config.n_inputs as f64
    }

    /// Checks structural invariants: counts, grid bounds, id ranges, no
    /// self-loops, unit delays, and the sign discipline (excitatory and
    /// input sources non-negative, inhibitory sources non-positive).
    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let n = self.config.n_neurons();
        if self.kinds.len() != n || self.positions.len() != n {
            return Err(Error::InvalidInput(format!(
                "topology stores {} kinds and {} positions for {} neurons",
                self.kinds.len(),
                self.positions.len(),
                n
            )));
        }
        let n_e = self
            .kinds
            .iter()
            .filter(|k| **k == NeuronKind::Excitatory)
            .count();
        if n_e != self.config.n_excitatory {
            return Err(Error::InvalidInput(format!(
                "topology has {} excitatory neurons, config says {}",
                n_e, self.config.n_excitatory
            )));
        }
        let [gx, gy, gz] = self.config.grid_dims;
        let mut seen = BTreeSet::new();
        for (i, p) in self.positions.iter().enumerate() {
            if p[0] as usize >= gx || p[1] as usize >= gy || p[2] as usize >= gz {
                return Err(Error::InvalidInput(format!(
                    "neuron {i} at {p:?} lies outside grid {:?}",
                    self.config.grid_dims
                )));
            }
            if !seen.insert(*p) {
                return Err(Error::InvalidInput(format!(
                    "grid cell {p:?} is occupied twice"
                )));
            }
        }
        for s in &self.synapses {
            if s.src as usize >= n || s.dst as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "synapse {} -> {} is out of range for {} neurons",
                    s.src, s.dst, n
                )));
            }
            if s.src == s.dst {
                return Err(Error::InvalidInput(format!(
                    "neuron {} has a self-synapse",
                    s.src
                )));
            }
            if s.delay_steps != 1 {
                return Err(Error::InvalidInput(format!(
                    "synapse {} -> {} has delay {} steps, only 1 is supported",
                    s.src, s.dst, s.delay_steps
                )));
            }
            let ok = match self.kinds[s.src as usize] {
                NeuronKind::Excitatory => s.weight >= 0.0,
                NeuronKind::Inhibitory => s.weight <= 0.0,
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "synapse {} -> {} has weight {} violating the sign of its {} source",
                    s.src,
                    s.dst,
                    s.weight,
                    self.kinds[s.src as usize]
                )));
            }
        }
        for s in &self.input_synapses {
            if s.input_row as usize >= self.config.n_inputs {
                return Err(Error::InvalidInput(format!(
                    "input synapse row {} is out of range for {} inputs",
                    s.input_row, self.config.n_inputs
                )));
            }
            if s.dst as usize >= n {
                return Err(Error::InvalidInput(format!(
                    "input synapse target {} is out of range for {} neurons",
                    s.dst, n
                )));
            }
            if s.weight < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "input synapse onto {} has negative weight {}",
                    s.dst, s.weight
                )));
            }
        }
        Ok(())
    }

    /// Returns a copy with every weight multiplied by `factor` and the
    /// configured scale updated to match.
    pub fn scaled_by(&self, factor: f64) -> Result<ReservoirTopology> {
        if !(factor > 0.0) || !factor.is_finite() {
            return Err(Error::InvalidInput(format!(
                "weight scale factor must be positive and finite, got {factor}"
            )));
        }
        let mut out = self.clone();
        for s in &mut out.synapses {
            s.weight *= factor;
        }
        for s in &mut out.input_synapses {
            s.weight *= factor;
        }
        out.config.gamma_scale = Some(self.config.gamma_scale.unwrap_or(1.0) * factor);
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = TopologyFile {
            version: TOPOLOGY_VERSION.to_string(),
            topology: self.clone(),
        };
        let json = serde_json::to_string(&file)?;
        fs::write(path, json)
            .map_err(|e| Error::io_context(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<ReservoirTopology> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::io_context(format!("reading {}", path.display()), e))?;
        let file: TopologyFile = serde_json::from_str(&text)?;
        if file.version != TOPOLOGY_VERSION {
            return Err(Error::InvalidInput(format!(
                "{}: expected {TOPOLOGY_VERSION:?}, found {:?}",
                path.display(),
                file.version
            )));
        }
        file.topology.validate()?;
        Ok(file.topology)
    }
}

/// Builds the reservoir wiring for `cfg`. The same config always yields the
/// same topology; every random choice comes from one stream seeded with
/// `cfg.seed`.
pub fn build_topology(cfg: &TopologyConfig) -> Result<ReservoirTopology> {
    cfg.validate()?;
    let n = cfg.n_neurons();
    let [gx, gy, gz] = cfg.grid_dims;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut positions = Vec::with_capacity(n);
    for x in 0..gx {
        for y in 0..gy {
            for z in 0..gz {
                positions.push([x as u16, y as u16, z as u16]);
            }
        }
    }

    let mut kinds = vec![NeuronKind::Excitatory; cfg.n_excitatory];
    kinds.extend(std::iter::repeat(NeuronKind::Inhibitory).take(cfg.n_inhibitory));
    kinds.shuffle(&mut rng);

    // exp(-D^2 / lambda^2) memoized over the integer squared distances the
    // grid can produce.
    let max_d2 = (gx - 1) * (gx - 1) + (gy - 1) * (gy - 1) + (gz - 1) * (gz - 1);
    let inv_l2 = 1.0 / (cfg.lambda * cfg.lambda);
    let decay: Vec<f64> = (0..=max_d2)
        .map(|d2| (-(d2 as f64) * inv_l2).exp())
        .collect();

    let mut synapses = Vec::new();
    for src in 0..n {
        let ps = positions[src];
        let ks = kinds[src];
        for dst in 0..n {
            if src == dst {
                continue;
            }
            let pd = positions[dst];
            let dx = ps[0] as isize - pd[0] as isize;
            let dy = ps[1] as isize - pd[1] as isize;
            let dz = ps[2] as isize - pd[2] as isize;
            let d2 = (dx * dx + dy * dy + dz * dz) as usize;
            let p = cfg.connection_c.get(SynapseClass::of(ks, kinds[dst])) * decay[d2];
            if rng.gen::<f64>() < p {
                synapses.push(Synapse {
                    src: src as u32,
                    dst: dst as u32,
                    weight: 0.0,
                    delay_steps: 1,
                });
            }
        }
    }

    let pool_size = cfg.input_pool_size();
    let mut pool: Vec<usize> = rand::seq::index::sample(&mut rng, n, pool_size).into_vec();
    pool.sort_unstable();

    let mut input_synapses = Vec::new();
    for input_row in 0..cfg.n_inputs {
        for &dst in &pool {
            if rng.gen::<f64>() < cfg.input_keep_prob {
                input_synapses.push(InputSynapse {
                    input_row: input_row as u32,
                    dst: dst as u32,
                    weight: 0.0,
                });
            }
        }
    }

    // Weights last, in wiring order: a gamma draw at unit scale times the
    // global factor, negated for inhibitory sources.
    let scale = cfg.gamma_scale.unwrap_or(1.0);
    for s in &mut synapses {
        let class = SynapseClass::of(kinds[s.src as usize], kinds[s.dst as usize]);
        let gamma = Gamma::new(cfg.gamma_shapes.recurrent(class), 1.0)
            .map_err(|e| Error::InvalidConfig(format!("gamma({class}): {e}")))?;
        let w = gamma.sample(&mut rng) * scale;
        s.weight = match kinds[s.src as usize] {
            NeuronKind::Excitatory => w,
            NeuronKind::Inhibitory => -w,
        };
    }
    for s in &mut input_synapses {
        let gamma = Gamma::new(cfg.gamma_shapes.input(kinds[s.dst as usize]), 1.0)
            .map_err(|e| Error::InvalidConfig(format!("gamma(input): {e}")))?;
        s.weight = gamma.sample(&mut rng) * scale;
    }

    let topo = ReservoirTopology {
        config: cfg.clone(),
        positions,
        kinds,
        synapses,
        input_synapses,
    };
    debug_assert!(topo.validate().is_ok());
    Ok(topo)
}
