//! Sitting-posture recognition from seat-cushion and backrest pressure maps
//! with a spiking liquid state machine.
//!
//! The pipeline has three stages:
//!
//! 1. [`encoder`] turns a 19x10 pressure frame into spike times using a bank
//!    of phase-shifted cosine receptive fields (rank-order latency coding).
//! 2. [`reservoir`] drives a recurrent pool of leaky integrate-and-fire
//!    neurons with those spikes and reads back per-neuron spike counts.
//! 3. [`readout`] classifies the count vector with multinomial logistic
//!    regression into one of fifteen postures.
//!
//! [`synthgen`] produces a labeled synthetic dataset (19 subjects, 15
//! postures), and [`eval`] runs train/test experiments over several pipeline
//! variants and writes metric reports.
//!
//! Start with the runnable examples; each covers one stage end to end:
//!
//! ```bash
//! cargo run --release --example generate_dataset
//! cargo run --release --example encode_and_render
//! cargo run --release --example liquid_response
//! cargo run --release --example train_readout
//! cargo run --release --example subject_split_benchmark
//! ```
//!
//! The `liquidstate` binary exposes the same stages as subcommands (`gen`,
//! `encode`, `build-reservoir`, `train`, `eval`, `classify`, `render`).

pub mod cli;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod frames;
pub mod pgm;
pub mod readout;
pub mod reservoir;
pub mod synthgen;

pub use error::{Error, Result};
