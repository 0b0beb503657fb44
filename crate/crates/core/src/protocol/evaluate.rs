use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterAssignment, Engine};
use crate::embedding::{l2_normalize, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::labels::LabeledDataset;
use crate::metrics;
use crate::rng;

pub const MAX_OVERCLUSTERING: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub overclustering_factor: usize,
    pub engine: Engine,
    pub normalize: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            overclustering_factor: 1,
            engine: Engine::WARD,
            normalize: true,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_OVERCLUSTERING).contains(&self.overclustering_factor) {
            return Err(Error::InvalidConfig(format!(
                "overclustering factor {} is outside 1..={MAX_OVERCLUSTERING}",
                self.overclustering_factor
            )));
        }
        Ok(())
    }

    /// `n_classes * factor`, capped at the number of samples. The flag is set
    /// when the cap applied.
    pub fn cluster_count(&self, n_classes: usize, n_samples: usize) -> (usize, bool) {
        let wanted = n_classes * self.overclustering_factor;
        if wanted > n_samples {
            (n_samples, true)
        } else {
            (wanted, false)
        }
    }
}

/// Scores of one clustering call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    /// `None` for external-dataset evaluation, which clusters everything at once.
    pub superclass_id: Option<usize>,
    pub n_samples: usize,
    pub n_classes: usize,
    pub k_used: usize,
    pub k_capped: bool,
    pub ami: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub ami: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterabilityReport {
    pub layer: String,
    pub per_superclass: Vec<GroupScore>,
    /// Sample-weighted means over groups; the headline numbers.
    pub aggregate_weighted: Aggregate,
    pub aggregate_unweighted: Aggregate,
    /// Metrics of the disjoint union of all group clusterings.
    pub pooled: Aggregate,
    pub zero_norm_rows: usize,
    pub config: ProtocolConfig,
    pub generator: String,
}

impl ClusterabilityReport {
    pub fn headline(&self) -> Aggregate {
        self.aggregate_weighted
    }
}

/// One superclass worth of clustering output.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupClustering {
    pub superclass_id: usize,
    /// Dataset row indices, ascending.
    pub members: Vec<usize>,
    pub n_classes: usize,
    pub k_used: usize,
    pub k_capped: bool,
    pub assignment: ClusterAssignment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WithinClustering {
    pub groups: Vec<GroupClustering>,
    /// Group-local cluster ids offset into one global id space.
    pub pooled: ClusterAssignment,
    pub zero_norm_rows: usize,
}

fn prepared(ds: &LabeledDataset, cfg: &ProtocolConfig) -> (EmbeddingMatrix, usize) {
    if cfg.normalize {
        let (m, summary) = l2_normalize(&ds.embeddings);
        (m, summary.zero_rows.len())
    } else {
        (ds.embeddings.clone(), 0)
    }
}

fn distinct(values: impl Iterator<Item = usize>) -> usize {
    values.collect::<BTreeSet<_>>().len()
}

/// Clusters each superclass separately into `n_subclasses * factor` groups.
pub fn cluster_within_superclasses(ds: &LabeledDataset, cfg: &ProtocolConfig) -> Result<WithinClustering> {
    cfg.validate()?;
    let (x, zero_norm_rows) = prepared(ds, cfg);
    let members = ds.labels.superclass_members();
    if let Some((&sup, m)) = members.iter().find(|(_, m)| m.len() < 2) {
        return Err(Error::SuperclassTooSmall { superclass: sup, n: m.len() });
    }
    let superclass = ds.labels.superclass();
    let subclass = ds.labels.subclass();

    let groups = members
        .into_par_iter()
        .map(|(sup, rows)| {
            if rows.iter().any(|&r| superclass[r] != sup) {
                return Err(Error::ShapeMismatch(format!("slice of superclass {sup} has foreign samples")));
            }
            let n_classes = distinct(rows.iter().map(|&r| subclass[r]));
            let (k_used, k_capped) = cfg.cluster_count(n_classes, rows.len());
            let assignment = cfg.engine.run(&x.select_rows(&rows), k_used)?;
            Ok(GroupClustering {
                superclass_id: sup,
                members: rows,
                n_classes,
                k_used,
                k_capped,
                assignment,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pooled = vec![0usize; ds.len()];
    let mut offset = 0;
    for g in &groups {
        for (&row, &c) in g.members.iter().zip(g.assignment.labels()) {
            pooled[row] = offset + c;
        }
        offset += g.assignment.k();
    }
    Ok(WithinClustering {
        groups,
        pooled: ClusterAssignment::new(pooled, offset)?,
        zero_norm_rows,
    })
}

fn aggregate(scores: &[GroupScore]) -> (Aggregate, Aggregate) {
    let total: usize = scores.iter().map(|s| s.n_samples).sum();
    let count = scores.len() as f64;
    let weighted = Aggregate {
        ami: scores.iter().map(|s| s.ami * s.n_samples as f64).sum::<f64>() / total as f64,
        purity: scores.iter().map(|s| s.purity * s.n_samples as f64).sum::<f64>() / total as f64,
    };
    let unweighted = Aggregate {
        ami: scores.iter().map(|s| s.ami).sum::<f64>() / count,
        purity: scores.iter().map(|s| s.purity).sum::<f64>() / count,
    };
    (weighted, unweighted)
}

/// Subclass recovery within each superclass, scored against subclass labels.
pub fn eval_within_superclasses(ds: &LabeledDataset, cfg: &ProtocolConfig) -> Result<ClusterabilityReport> {
    let clustering = cluster_within_superclasses(ds, cfg)?;
    let subclass = ds.labels.subclass();
    let per_superclass = clustering
        .groups
        .iter()
        .map(|g| {
            let truth: Vec<usize> = g.members.iter().map(|&r| subclass[r]).collect();
            let (ami, purity) = metrics::score(g.assignment.labels(), &truth)?;
            Ok(GroupScore {
                superclass_id: Some(g.superclass_id),
                n_samples: g.members.len(),
                n_classes: g.n_classes,
                k_used: g.k_used,
                k_capped: g.k_capped,
                ami,
                purity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (aggregate_weighted, aggregate_unweighted) = aggregate(&per_superclass);
    let (ami, purity) = metrics::score(clustering.pooled.labels(), subclass)?;
    Ok(ClusterabilityReport {
        layer: ds.embeddings.layer_name.clone(),
        per_superclass,
        aggregate_weighted,
        aggregate_unweighted,
        pooled: Aggregate { ami, purity },
        zero_norm_rows: clustering.zero_norm_rows,
        config: *cfg,
        generator: rng::GENERATOR.to_string(),
    })
}

/// Clusters the whole dataset into `n_classes * factor` groups, where the
/// subclass column holds the class.
pub fn eval_external(ds: &LabeledDataset, cfg: &ProtocolConfig) -> Result<ClusterabilityReport> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (x, zero_norm_rows) = prepared(ds, cfg);
    let classes = ds.labels.subclass();
    let n_classes = distinct(classes.iter().copied());
    let (k_used, k_capped) = cfg.cluster_count(n_classes, ds.len());
    let assignment = cfg.engine.run(&x, k_used)?;
    let (ami, purity) = metrics::score(assignment.labels(), classes)?;
    let score = GroupScore {
        superclass_id: None,
        n_samples: ds.len(),
        n_classes,
        k_used,
        k_capped,
        ami,
        purity,
    };
    let agg = Aggregate { ami, purity };
    Ok(ClusterabilityReport {
        layer: ds.embeddings.layer_name.clone(),
        per_superclass: vec![score],
        aggregate_weighted: agg,
        aggregate_unweighted: agg,
        pooled: agg,
        zero_norm_rows,
        config: *cfg,
        generator: rng::GENERATOR.to_string(),
    })
}

/// Within-superclass evaluation of every layer, in input order.
pub fn sweep_layers(
    layers: &[(String, LabeledDataset)],
    cfg: &ProtocolConfig,
) -> Result<Vec<(String, ClusterabilityReport)>> {
    if layers.is_empty() {
        return Err(Error::InvalidConfig("layer sweep needs at least one layer".into()));
    }
    layers
        .par_iter()
        .map(|(name, ds)| {
            let mut report = eval_within_superclasses(ds, cfg)?;
            report.layer = name.clone();
            Ok((name.clone(), report))
        })
        .collect()
}
