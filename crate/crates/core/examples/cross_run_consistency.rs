//! Agreement between the clusterings of two runs of the same data.

use clusterlens::protocol::{cluster_within_superclasses, cross_run_consistency};
use clusterlens::synth::{generate, SynthConfig, SynthMode};
use clusterlens::ProtocolConfig;

fn main() -> clusterlens::Result<()> {
    let cfg = ProtocolConfig::default();
    // Two "runs": same labels, independent noise.
    let runs: Vec<_> = [10, 11]
        .iter()
        .map(|&seed| {
            let mut layers = Vec::new();
            for (i, noise) in [1.0, 0.5].iter().enumerate() {
                let ds = generate(&SynthConfig {
                    sigma_noise: *noise,
                    n_per_subclass: 20,
                    ..SynthConfig::entity13(SynthMode::Natural, seed + 100 * i as u64)
                })?;
                layers.push((format!("layer{i}"), cluster_within_superclasses(&ds, &cfg)?.pooled));
            }
            Ok(layers)
        })
        .collect::<clusterlens::Result<_>>()?;

    let report = cross_run_consistency(&runs[0], &runs[1], true)?;
    print!("{}", report.per_layer_csv());
    if let Some(m) = report.matrix {
        print!("{}", m.to_csv());
    }
    let same = cross_run_consistency(&runs[0], &runs[0], false)?;
    println!("a run against itself: {:?}", same.per_layer.iter().map(|l| l.ari).collect::<Vec<_>>());
    Ok(())
}
