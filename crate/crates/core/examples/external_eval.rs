//! Score a whole dataset against its subclass labels without splitting by
//! superclass, with each clustering engine.

use clusterlens::cluster::Engine;
use clusterlens::protocol::eval_external;
use clusterlens::synth::{generate, SynthConfig, SynthMode};
use clusterlens::{HierarchySpec, LinkageKind, ProtocolConfig};

fn main() -> clusterlens::Result<()> {
    let ds = generate(&SynthConfig {
        spec: HierarchySpec::uniform("flat", 1, 10),
        n_per_subclass: 30,
        ..SynthConfig::entity13(SynthMode::Shuffled, 5)
    })?;
    let mut engines: Vec<Engine> = LinkageKind::ALL
        .iter()
        .map(|&linkage| Engine::Agglomerative { linkage })
        .collect();
    engines.push(Engine::kmeans(0));
    for engine in engines {
        for factor in [1, 3] {
            let cfg = ProtocolConfig {
                engine,
                overclustering_factor: factor,
                ..ProtocolConfig::default()
            };
            let r = eval_external(&ds, &cfg)?;
            let g = &r.per_superclass[0];
            println!("{engine:?} factor {factor}: k={} ami={:.3} purity={:.3}", g.k_used, g.ami, g.purity);
        }
    }
    Ok(())
}
