//! Sweep a run directory layer by layer, with linear probes, and emit the CSV
//! table and an SVG chart.

use clusterlens::chart::{emit_linechart, ChartOptions};
use clusterlens::manifest::{load_run, write_manifest, LayerEntry, RunManifest};
use clusterlens::probe::{evaluate_probe, ProbeOptions};
use clusterlens::protocol::{reports_csv, sweep_chart_series, sweep_layers, LayerReport};
use clusterlens::synth::{generate, SynthConfig, SynthMode};
use clusterlens::{save_embeddings, save_labels, EmbeddingMatrix, ProtocolConfig};

fn main() -> clusterlens::Result<()> {
    let dir = std::env::temp_dir().join("clusterlens-layer-sweep");
    std::fs::create_dir_all(&dir).map_err(|e| clusterlens::Error::Io { path: dir.clone(), source: e })?;

    // Deeper "layers" shrink the noise around fixed subclass centers.
    let centers = generate(&SynthConfig {
        sigma_noise: 0.0,
        n_per_subclass: 25,
        ..SynthConfig::entity13(SynthMode::Natural, 3)
    })?;
    let jitter = generate(&SynthConfig {
        sigma_super: 1e-9,
        sigma_sub: 1e-9,
        sigma_noise: 1.0,
        n_per_subclass: 25,
        ..SynthConfig::entity13(SynthMode::Shuffled, 4)
    })?;
    let mut layers = Vec::new();
    for (i, scale) in [3.0, 2.0, 1.2, 0.5].iter().enumerate() {
        let name = format!("block{}", i + 1);
        let data = centers
            .embeddings
            .rows()
            .zip(jitter.embeddings.rows())
            .flat_map(|(c, j)| c.iter().zip(j).map(|(c, j)| c + scale * j).collect::<Vec<_>>())
            .collect();
        let emb = EmbeddingMatrix::new(centers.len(), centers.embeddings.d(), data)?;
        save_embeddings(&emb, dir.join(format!("{name}.emb")))?;
        layers.push(LayerEntry { file: format!("{name}.emb"), name });
    }
    save_labels(&centers.labels, dir.join("labels.csv"))?;
    write_manifest(
        &RunManifest {
            run_id: "demo".into(),
            layers,
            labels: "labels.csv".into(),
        },
        &dir,
    )?;

    let run = load_run(&dir)?;
    let reports = sweep_layers(&run.layers, &ProtocolConfig::default())?;
    let mut rows = Vec::new();
    for ((layer, report), (_, ds)) in reports.into_iter().zip(&run.layers) {
        let probe = evaluate_probe(ds, true, &ProbeOptions::default(), 0.2, 0)?;
        println!(
            "{layer}: ami {:.3}, purity {:.3}, probe {:.3}",
            report.headline().ami,
            report.headline().purity,
            probe.accuracy()
        );
        rows.push(LayerReport {
            layer,
            report,
            probe_acc: Some(probe.accuracy()),
        });
    }
    std::fs::write(dir.join("sweep.csv"), reports_csv(&rows)).map_err(|e| clusterlens::Error::Io {
        path: dir.join("sweep.csv"),
        source: e,
    })?;
    let chart = dir.join("sweep.svg");
    emit_linechart(
        &sweep_chart_series(&rows),
        &ChartOptions {
            title: "demo run".into(),
            ..ChartOptions::default()
        },
        &chart,
    )?;
    println!("wrote {}", chart.display());
    Ok(())
}
