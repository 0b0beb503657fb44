use serde::{Deserialize, Serialize};

use crate::cluster::ClusterAssignment;
use crate::error::{Error, Result};
use crate::labels::LabelTable;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub sample_index: usize,
    pub subclass_id: usize,
    pub subclass_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarGroup {
    pub cluster_id: usize,
    pub cluster_size: usize,
    pub exemplars: Vec<Exemplar>,
}

/// The lowest `per_cluster` sample indices of every cluster, with their
/// ground-truth subclass.
pub fn export_exemplars(
    assignment: &ClusterAssignment,
    labels: &LabelTable,
    per_cluster: usize,
) -> Result<Vec<ExemplarGroup>> {
    if assignment.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: assignment.len(),
            right: labels.len(),
        });
    }
    let per_cluster = per_cluster.max(1);
    let subclass = labels.subclass();
    Ok(assignment
        .members()
        .into_iter()
        .enumerate()
        .map(|(cluster_id, members)| ExemplarGroup {
            cluster_id,
            cluster_size: members.len(),
            exemplars: members
                .iter()
                .take(per_cluster)
                .map(|&i| Exemplar {
                    sample_index: i,
                    subclass_id: subclass[i],
                    subclass_name: labels.subclass_name(subclass[i]).map(str::to_string),
                })
                .collect(),
        })
        .collect())
}

/// `cluster_id,cluster_size,sample_index,subclass_id,subclass_name` CSV.
pub fn format_exemplars(groups: &[ExemplarGroup]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cluster_id", "cluster_size", "sample_index", "subclass_id", "subclass_name"])
        .expect("in-memory write");
    for g in groups {
        for e in &g.exemplars {
            w.write_record([
                g.cluster_id.to_string(),
                g.cluster_size.to_string(),
                e.sample_index.to_string(),
                e.subclass_id.to_string(),
                e.subclass_name.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dataset() -> LabelTable {
        let mut labels = LabelTable::new(vec![0; 7], vec![3, 3, 4, 4, 4, 5, 5]).unwrap();
        labels.subclass_names.insert(4, "collie".into());
        labels
    }

    #[test]
    fn lowest_indices_per_cluster() {
        let a = ClusterAssignment::new(vec![1, 0, 1, 2, 0, 1, 1], 3).unwrap();
        let groups = export_exemplars(&a, &dataset(), 2).unwrap();
        assert_eq!(groups.len(), 3);
        let idx: Vec<Vec<usize>> = groups
            .iter()
            .map(|g| g.exemplars.iter().map(|e| e.sample_index).collect())
            .collect();
        assert_eq!(idx, vec![vec![1, 4], vec![0, 2], vec![3]]);
        assert_eq!(groups[1].cluster_size, 4);
        assert_eq!(groups[0].exemplars[1].subclass_name.as_deref(), Some("collie"));
    }

    #[test]
    fn oversized_request_lists_whole_cluster() {
        let a = ClusterAssignment::new(vec![0, 0, 0, 1, 1, 1, 1], 2).unwrap();
        let groups = export_exemplars(&a, &dataset(), 100).unwrap();
        assert_eq!(groups[0].exemplars.len(), 3);
        assert_eq!(groups[1].exemplars.len(), 4);
        let csv = format_exemplars(&groups);
        assert_eq!(csv.lines().count(), 8);
        assert!(csv.contains("1,4,3,4,collie"));
    }
}
