//! Liquid state machine reservoir: wiring ([`topology`]) and dynamics
//! ([`sim`]).

mod sim;
mod topology;

pub use sim::{
    build_calibrated_topology, calibrate_weight_scale, lif_step, mean_rate_hz, LifStep,
    LiquidState, NeuronParams, Simulator, SpikeRaster, CALIBRATION_BAND,
};
pub use topology::{
    build_topology, connection_probability, ConnectionProbabilities, GammaShapes, InputSynapse,
    NeuronKind, ReservoirTopology, Synapse, SynapseClass, TopologyConfig, TOPOLOGY_VERSION,
};
