//! Deterministic clustering engines.
//!
//! Agglomerative clustering runs the nearest-neighbor chain algorithm over a
//! condensed dissimilarity matrix for all four supported linkages; k-means is
//! Lloyd iteration from a seeded k-means++ start.

mod dendrogram;
mod kmeans;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

pub use dendrogram::{build_dendrogram, cut, format_dendrogram, Merge, MergeTree};
pub use kmeans::{kmeans, kmeans_detailed, KMeansRun, DEFAULT_MAX_ITERS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkageKind {
    Ward,
    Average,
    Complete,
    Single,
}

impl LinkageKind {
    pub const ALL: [LinkageKind; 4] = [
        LinkageKind::Ward,
        LinkageKind::Average,
        LinkageKind::Complete,
        LinkageKind::Single,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LinkageKind::Ward => "ward",
            LinkageKind::Average => "average",
            LinkageKind::Complete => "complete",
            LinkageKind::Single => "single",
        }
    }
}

impl fmt::Display for LinkageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A clustering engine: one of the agglomerative linkages or k-means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Engine {
    Agglomerative { linkage: LinkageKind },
    Kmeans { seed: u64, max_iters: usize },
}

impl Engine {
    pub const WARD: Engine = Engine::Agglomerative {
        linkage: LinkageKind::Ward,
    };

    pub fn kmeans(seed: u64) -> Engine {
        Engine::Kmeans {
            seed,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }

    /// Clusters `x` into `k` groups.
    pub fn run(&self, x: &EmbeddingMatrix, k: usize) -> Result<ClusterAssignment> {
        match *self {
            Engine::Agglomerative { linkage } => agglomerative(x, linkage, k),
            Engine::Kmeans { seed, max_iters } => kmeans(x, k, seed, max_iters),
        }
    }
}

impl Default for Engine {
    fn default() -> Self {
        Engine::WARD
    }
}

impl FromStr for LinkageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ward" => Ok(LinkageKind::Ward),
            "average" => Ok(LinkageKind::Average),
            "complete" => Ok(LinkageKind::Complete),
            "single" => Ok(LinkageKind::Single),
            other => Err(Error::InvalidConfig(format!("unknown linkage \"{other}\""))),
        }
    }
}

/// Flat clustering: one cluster id in `0..k` per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterAssignment {
    /// Wraps raw labels, checking that every id is below `k`.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::KOutOfRange { k: bad + 1, n: k });
        }
        Ok(Self { labels, k })
    }

    /// Builds an assignment from arbitrary ids, renumbering them densely in
    /// order of first appearance.
    pub fn from_raw(raw: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|&r| {
                let next = map.len();
                *map.entry(r).or_insert(next)
            })
            .collect();
        Self { labels, k: map.len() }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn into_labels(self) -> Vec<usize> {
        self.labels
    }

    /// Sample indices per cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &c) in self.labels.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// Builds the dendrogram and cuts it at `k`.
pub fn agglomerative(x: &EmbeddingMatrix, linkage: LinkageKind, k: usize) -> Result<ClusterAssignment> {
    if x.n() == 0 {
        return Err(Error::EmptyInput);
    }
    if k == 0 || k > x.n() {
        return Err(Error::KOutOfRange { k, n: x.n() });
    }
    cut(&build_dendrogram(x, linkage)?, k)
}

/// Renders an assignment as `sample_index,cluster_id` CSV.
pub fn format_assignment(assignment: &ClusterAssignment) -> String {
    let mut out = String::from("sample_index,cluster_id\n");
    for (i, c) in assignment.labels.iter().enumerate() {
        out.push_str(&format!("{i},{c}\n"));
    }
    out
}

/// Parses `sample_index,cluster_id` CSV. Rows may be in any order but must
/// cover `0..n` exactly once.
pub fn parse_assignment(text: &str) -> Result<ClusterAssignment> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "sample_index,cluster_id" => {}
        _ => return Err(Error::MissingColumn("sample_index,cluster_id".into())),
    }
    let mut pairs = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::LabelParse {
            line: lineno as u64 + 1,
            message: format!("malformed row \"{line}\""),
        };
        let (a, b) = line.split_once(',').ok_or_else(bad)?;
        let idx: usize = a.trim().parse().map_err(|_| bad())?;
        let cid: usize = b.trim().parse().map_err(|_| bad())?;
        pairs.push((idx, cid));
    }
    let n = pairs.len();
    let mut labels = vec![usize::MAX; n];
    for (idx, cid) in pairs {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, n });
        }
        if labels[idx] != usize::MAX {
            return Err(Error::DuplicateIndex(idx));
        }
        labels[idx] = cid;
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    ClusterAssignment::new(labels, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(points.len(), 1, points.to_vec()).unwrap()
    }

    #[test]
    fn ward_three_points_k2() {
        let a = agglomerative(&line(&[0.0, 1.0, 10.0]), LinkageKind::Ward, 2).unwrap();
        assert_eq!(a.labels(), &[0, 0, 1]);
    }

    #[test]
    fn duplicate_points_single_cluster() {
        let x = line(&[2.0, 2.0, 2.0, 2.0]);
        for linkage in LinkageKind::ALL {
            let tree = build_dendrogram(&x, linkage).unwrap();
            assert!(tree.merges().iter().all(|m| m.height == 0.0));
            let a = agglomerative(&x, linkage, 1).unwrap();
            assert_eq!(a.labels(), &[0, 0, 0, 0]);
        }
    }

    #[test]
    fn k_out_of_range() {
        let x = line(&[0.0, 1.0]);
        assert!(matches!(agglomerative(&x, LinkageKind::Ward, 0), Err(Error::KOutOfRange { .. })));
        assert!(matches!(agglomerative(&x, LinkageKind::Ward, 3), Err(Error::KOutOfRange { .. })));
    }

    #[test]
    fn assignment_csv_roundtrip() {
        let a = ClusterAssignment::new(vec![1, 0, 2, 1], 3).unwrap();
        assert_eq!(parse_assignment(&format_assignment(&a)).unwrap(), a);
        assert!(parse_assignment("x\n").is_err());
    }

    #[test]
    fn from_raw_renumbers() {
        let a = ClusterAssignment::from_raw(&[7, 7, 3, 9, 3]);
        assert_eq!(a.labels(), &[0, 0, 1, 2, 1]);
        assert_eq!(a.k(), 3);
    }
}
