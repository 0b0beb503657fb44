//! Evaluation procedures over labeled embeddings: hierarchy shuffling,
//! within-superclass subclass recovery, external-dataset clustering, layer
//! sweeps, cross-run consistency and exemplar export.

mod consistency;
mod evaluate;
mod exemplars;
mod hierarchy;
mod report;

pub use consistency::{cross_run_consistency, ConsistencyReport, LayerAri, LayerPairMatrix};
pub use evaluate::{
    cluster_within_superclasses, eval_external, eval_within_superclasses, sweep_layers, Aggregate,
    ClusterabilityReport, GroupClustering, GroupScore, ProtocolConfig, WithinClustering,
    MAX_OVERCLUSTERING,
};
pub use exemplars::{export_exemplars, format_exemplars, Exemplar, ExemplarGroup};
pub use hierarchy::{relabel_dataset, relabel_labels, shuffle_hierarchy, HierarchySpec, Superclass};
pub use report::{report_from_json, report_to_json, reports_csv, sweep_chart_series, LayerReport};
