use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};
use crate::metrics::ari;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerAri {
    pub layer: String,
    pub ari: f64,
}

/// ARI between every layer of run A (rows) and every layer of run B (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPairMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl LayerPairMatrix {
    pub fn transpose(&self) -> LayerPairMatrix {
        LayerPairMatrix {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            values: (0..self.cols.len())
                .map(|j| self.values.iter().map(|row| row[j]).collect())
                .collect(),
        }
    }

    /// CSV with a `layer` header column followed by run-B layer names.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer");
        for c in &self.cols {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&self.values) {
            out.push_str(name);
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub per_layer: Vec<LayerAri>,
    pub matrix: Option<LayerPairMatrix>,
}

impl ConsistencyReport {
    pub fn per_layer_csv(&self) -> String {
        let mut out = String::from("layer,ari\n");
        for l in &self.per_layer {
            out.push_str(&format!("{},{}\n", l.layer, l.ari));
        }
        out
    }
}

/// Compares the clusterings of two runs layer by layer. Shared layers are
/// reported in run A's order; `pairs` also fills the full layer-pair matrix.
pub fn cross_run_consistency(
    run_a: &[(String, ClusterAssignment)],
    run_b: &[(String, ClusterAssignment)],
    pairs: bool,
) -> Result<ConsistencyReport> {
    let b_by_name: BTreeMap<&str, &ClusterAssignment> =
        run_b.iter().map(|(name, a)| (name.as_str(), a)).collect();
    let per_layer = run_a
        .iter()
        .filter_map(|(name, a)| b_by_name.get(name.as_str()).map(|b| (name, a, *b)))
        .map(|(name, a, b)| {
            Ok(LayerAri {
                layer: name.clone(),
                ari: ari(a.labels(), b.labels())?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if per_layer.is_empty() {
        return Err(Error::NoSharedLayers);
    }
    let matrix = if pairs {
        let values = run_a
            .iter()
            .map(|(_, a)| {
                run_b
                    .iter()
                    .map(|(_, b)| ari(a.labels(), b.labels()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Some(LayerPairMatrix {
            rows: run_a.iter().map(|(n, _)| n.clone()).collect(),
            cols: run_b.iter().map(|(n, _)| n.clone()).collect(),
            values,
        })
    } else {
        None
    };
    Ok(ConsistencyReport { per_layer, matrix })
}
