//! Build the full 2000-neuron reservoir and inspect its wiring.
//!
//! Run with `cargo run --release --example build_reservoir`.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use liquidstate::reservoir::{build_topology, NeuronKind, TopologyConfig};

fn main() -> liquidstate::Result<()> {
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("LIQUIDSTATE_LOG", "info"),
    )
    .init();

    let cfg = TopologyConfig::default();
    let topology = build_topology(&cfg)?;
    topology.validate()?;

    println!(
        "neurons: {} ({} excitatory, {} inhibitory) on a {:?} grid",
        topology.n_neurons(),
        cfg.n_excitatory,
        cfg.n_inhibitory,
        cfg.grid_dims
    );

    let mut by_class: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &topology.synapses {
        let name = match (
            topology.kind(s.src as usize),
            topology.kind(s.dst as usize),
        ) {
            (NeuronKind::Excitatory, NeuronKind::Excitatory) => "E->E",
            (NeuronKind::Excitatory, NeuronKind::Inhibitory) => "E->I",
            (NeuronKind::Inhibitory, NeuronKind::Excitatory) => "I->E",
            (NeuronKind::Inhibitory, NeuronKind::Inhibitory) => "I->I",
        };
        *by_class.entry(name).or_insert(0) += 1;
    }
    println!("recurrent synapses: {}", topology.synapses.len());
    for (name, count) in by_class {
        println!("  {name}: {count}");
    }
    println!(
        "input rows: {} feeding {} synapses (mean fanout {:.2})",
        cfg.n_inputs,
        topology.input_synapses.len(),
        topology.mean_input_fanout()
    );

    let out = PathBuf::from("target/example-output/build_reservoir");
    fs::create_dir_all(&out).expect("create output directory");
    let path = out.join("topology.json");
    topology.save(&path)?;
    println!("saved to {}", path.display());
    Ok(())
}
