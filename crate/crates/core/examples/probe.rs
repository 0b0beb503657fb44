//! Linear probes: fit, score, and compare against clustering on the same
//! inputs.

use clusterlens::probe::{evaluate_probe, fit_probe, ProbeOptions};
use clusterlens::protocol::eval_within_superclasses;
use clusterlens::synth::{generate, SynthConfig, SynthMode};
use clusterlens::ProtocolConfig;

fn main() -> clusterlens::Result<()> {
    let ds = generate(&SynthConfig {
        sigma_noise: 1.2,
        n_per_subclass: 40,
        ..SynthConfig::entity13(SynthMode::Natural, 8)
    })?;

    let model = fit_probe(&ds.embeddings, ds.labels.subclass(), &ProbeOptions::default())?;
    println!(
        "raw fit: {} iterations, loss {:.4} -> {:.4}, converged {}",
        model.iterations,
        model.loss_history[0],
        model.final_loss,
        model.converged
    );

    let probe = evaluate_probe(&ds, true, &ProbeOptions::default(), 0.25, 1)?;
    let clustering = eval_within_superclasses(&ds, &ProtocolConfig::default())?.headline();
    println!(
        "probe train {:.3} / holdout {:.3}; clustering ami {:.3} purity {:.3}",
        probe.train_accuracy,
        probe.holdout_accuracy.unwrap_or(f64::NAN),
        clustering.ami,
        clustering.purity
    );
    Ok(())
}
