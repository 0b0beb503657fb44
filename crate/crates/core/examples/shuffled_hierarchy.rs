//! Compare subclass clusterability under the natural grouping and under
//! groupings with no shared geometry.

use clusterlens::protocol::{eval_within_superclasses, relabel_dataset, shuffle_hierarchy};
use clusterlens::synth::{generate, SynthConfig, SynthMode};
use clusterlens::ProtocolConfig;

fn main() -> clusterlens::Result<()> {
    let cfg = ProtocolConfig::default();
    for seed in 0..3 {
        let natural = generate(&SynthConfig::entity13(SynthMode::Natural, seed))?;
        let shuffled = generate(&SynthConfig::entity13(SynthMode::Shuffled, seed))?;
        let a = eval_within_superclasses(&natural, &cfg)?.headline().ami;
        let b = eval_within_superclasses(&shuffled, &cfg)?.headline().ami;
        println!("seed {seed}: natural ami {a:.4}, shuffled-geometry ami {b:.4}");
    }

    // Regroup subclasses of the natural data into random superclasses.
    let natural = generate(&SynthConfig::entity13(SynthMode::Natural, 0))?;
    let spec = SynthConfig::entity13(SynthMode::Natural, 0).spec;
    let regrouped = shuffle_hierarchy(&spec, 7)?;
    println!("superclass 0 now holds subclasses {:?}", regrouped.superclasses[0].subclasses);
    let relabeled = relabel_dataset(&natural, &regrouped)?;
    let ami = eval_within_superclasses(&relabeled, &cfg)?.headline().ami;
    println!("natural data, shuffled superclasses: ami {ami:.4}");
    Ok(())
}
