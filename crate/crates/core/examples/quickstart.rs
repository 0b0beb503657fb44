//! Generate a small hierarchical dataset and measure how well its subclasses
//! cluster inside each superclass.

use clusterlens::protocol::eval_within_superclasses;
use clusterlens::synth::{generate, SynthConfig, SynthMode};
use clusterlens::ProtocolConfig;

fn main() -> clusterlens::Result<()> {
    let ds = generate(&SynthConfig {
        n_per_subclass: 30,
        ..SynthConfig::entity13(SynthMode::Natural, 0)
    })?;
    let report = eval_within_superclasses(&ds, &ProtocolConfig::default())?;
    for g in &report.per_superclass {
        println!(
            "superclass {:>2}: n={} k={} ami={:.3} purity={:.3}",
            g.superclass_id.unwrap_or_default(),
            g.n_samples,
            g.k_used,
            g.ami,
            g.purity
        );
    }
    let h = report.headline();
    println!("weighted mean: ami={:.3} purity={:.3}", h.ami, h.purity);
    Ok(())
}
