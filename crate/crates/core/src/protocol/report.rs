use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::ClusterabilityReport;
use crate::chart::Series;
use crate::error::Result;

/// One row group of a layer sweep: the clustering report plus, optionally,
/// the linear probe accuracy on the same inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub layer: String,
    pub report: ClusterabilityReport,
    pub probe_acc: Option<f64>,
}

pub fn report_to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// Flat `layer,superclass_id,n,k,ami,purity` CSV, with a trailing
/// `probe_acc` column when any layer carries a probe result. External
/// evaluations leave `superclass_id` empty.
pub fn reports_csv(layers: &[LayerReport]) -> String {
    let with_probe = layers.iter().any(|l| l.probe_acc.is_some());
    let mut out = String::from("layer,superclass_id,n,k,ami,purity");
    if with_probe {
        out.push_str(",probe_acc");
    }
    out.push('\n');
    for l in layers {
        for g in &l.report.per_superclass {
            let sup = g.superclass_id.map(|s| s.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{}",
                l.layer, sup, g.n_samples, g.k_used, g.ami, g.purity
            ));
            if with_probe {
                out.push(',');
                if let Some(p) = l.probe_acc {
                    out.push_str(&p.to_string());
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Headline AMI and purity per layer (x = layer position), plus probe
/// accuracy when every layer has one.
pub fn sweep_chart_series(layers: &[LayerReport]) -> Vec<Series> {
    let xs = (0..layers.len()).map(|i| i as f64);
    let mut series = vec![
        Series::new(
            "AMI",
            xs.clone().zip(layers.iter().map(|l| l.report.headline().ami)).collect(),
        ),
        Series::new(
            "purity",
            xs.clone().zip(layers.iter().map(|l| l.report.headline().purity)).collect(),
        ),
    ];
    if !layers.is_empty() && layers.iter().all(|l| l.probe_acc.is_some()) {
        series.push(Series::new(
            "probe accuracy",
            xs.zip(layers.iter().map(|l| l.probe_acc.unwrap_or_default())).collect(),
        ));
    }
    series
}
