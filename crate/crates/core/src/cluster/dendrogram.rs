use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, LinkageKind};
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// One agglomeration step. `left < right` are node ids: leaves are `0..n`,
/// the cluster created by merge `i` is node `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Stepwise dendrogram with merges ordered by non-decreasing height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeTree {
    n: usize,
    linkage: LinkageKind,
    merges: Vec<Merge>,
}

impl MergeTree {
    pub fn n_leaves(&self) -> usize {
        self.n
    }

    pub fn linkage(&self) -> LinkageKind {
        self.linkage
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> impl Iterator<Item = f64> + '_ {
        self.merges.iter().map(|m| m.height)
    }
}

/// Upper triangle of the pairwise dissimilarity matrix, row-major.
struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    fn from_points(x: &EmbeddingMatrix, squared: bool) -> Self {
        let n = x.n();
        let mut data = vec![0.0; n * n.saturating_sub(1) / 2];
        let mut rows = Vec::with_capacity(n);
        let mut rest = data.as_mut_slice();
        for i in 0..n.saturating_sub(1) {
            let (head, tail) = rest.split_at_mut(n - 1 - i);
            rows.push((i, head));
            rest = tail;
        }
        // Each entry is computed independently, so the parallel fill is
        // bit-identical to a sequential one.
        rows.into_par_iter().for_each(|(i, row)| {
            let xi = x.row(i);
            for (off, slot) in row.iter_mut().enumerate() {
                let s = squared_euclidean(xi, x.row(i + 1 + off));
                *slot = if squared { s } else { s.sqrt() };
            }
        });
        Self { n, data }
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * self.n - a * (a + 1) / 2 + (b - a - 1)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.index(i, j);
        self.data[idx] = v;
    }
}

#[inline]
fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lance-Williams update of the dissimilarity between the union of `i` and
/// `j` and a third cluster `k`.
#[inline]
fn lance_williams(
    linkage: LinkageKind,
    d_ik: f64,
    d_jk: f64,
    d_ij: f64,
    s_i: usize,
    s_j: usize,
    s_k: usize,
) -> f64 {
    match linkage {
        LinkageKind::Single => d_ik.min(d_jk),
        LinkageKind::Complete => d_ik.max(d_jk),
        LinkageKind::Average => {
            let (si, sj) = (s_i as f64, s_j as f64);
            (si * d_ik + sj * d_jk) / (si + sj)
        }
        LinkageKind::Ward => {
            let (si, sj, sk) = (s_i as f64, s_j as f64, s_k as f64);
            let t = si + sj + sk;
            ((si + sk) * d_ik + (sj + sk) * d_jk - sk * d_ij) / t
        }
    }
}

/// Agglomerative clustering by nearest-neighbor chains.
///
/// Ward works on squared Euclidean dissimilarities and reports
/// `height = sqrt(d)`, so two singletons merge at their Euclidean distance;
/// the other linkages work on plain Euclidean distances. Ties in a
/// nearest-neighbor search go to the chain predecessor, then to the lowest id.
pub fn build_dendrogram(x: &EmbeddingMatrix, linkage: LinkageKind) -> Result<MergeTree> {
    let n = x.n();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let mut dist = Condensed::from_points(x, linkage == LinkageKind::Ward);
    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    // (kept slot, removed slot, dissimilarity); a slot is always a leaf
    // belonging to the cluster it stands for.
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n - 1);
    let mut first_active = 0;

    while raw.len() + 1 < n {
        if chain.is_empty() {
            while !active[first_active] {
                first_active += 1;
            }
            chain.push(first_active);
        }
        let (a, b, d_ab) = loop {
            let tip = chain[chain.len() - 1];
            let prev = chain.len().checked_sub(2).map(|p| chain[p]);
            let (mut best, mut best_d) = match prev {
                Some(p) => (p, dist.get(tip, p)),
                None => (usize::MAX, f64::INFINITY),
            };
            for (y, &alive) in active.iter().enumerate() {
                if y == tip || !alive {
                    continue;
                }
                let dy = dist.get(tip, y);
                if dy < best_d || (best == usize::MAX && dy == best_d) {
                    best = y;
                    best_d = dy;
                }
            }
            if Some(best) == prev {
                chain.truncate(chain.len() - 2);
                break (tip, best, best_d);
            }
            chain.push(best);
        };

        let (keep, gone) = (a.min(b), a.max(b));
        let (s_keep, s_gone) = (size[keep], size[gone]);
        for y in 0..n {
            if !active[y] || y == keep || y == gone {
                continue;
            }
            let updated = lance_williams(
                linkage,
                dist.get(keep, y),
                dist.get(gone, y),
                d_ab,
                s_keep,
                s_gone,
                size[y],
            );
            dist.set(keep, y, updated);
        }
        active[gone] = false;
        size[keep] = s_keep + s_gone;
        raw.push((keep, gone, d_ab));
    }

    // Stable: equal heights keep the order in which the chain found them.
    raw.sort_by(|p, q| p.2.total_cmp(&q.2));
    Ok(MergeTree {
        n,
        linkage,
        merges: label_merges(n, &raw, linkage),
    })
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (root, child) = (ra.min(rb), ra.max(rb));
        self.parent[child] = root;
        root
    }
}

/// Converts slot-based merges, already in height order, to node ids.
fn label_merges(n: usize, raw: &[(usize, usize, f64)], linkage: LinkageKind) -> Vec<Merge> {
    let mut uf = UnionFind::new(n);
    let mut node_of: Vec<usize> = (0..n).collect();
    let mut size_of = vec![1usize; 2 * n - 1];
    raw.iter()
        .enumerate()
        .map(|(i, &(a, b, d))| {
            let (ra, rb) = (uf.find(a), uf.find(b));
            let (na, nb) = (node_of[ra], node_of[rb]);
            let root = uf.union(ra, rb);
            let node = n + i;
            node_of[root] = node;
            size_of[node] = size_of[na] + size_of[nb];
            let height = match linkage {
                LinkageKind::Ward => d.max(0.0).sqrt(),
                _ => d,
            };
            Merge {
                left: na.min(nb),
                right: na.max(nb),
                height,
                size: size_of[node],
            }
        })
        .collect()
}

/// Flat clustering with `k` clusters: the last `k - 1` merges are undone.
/// Cluster ids are numbered by their lowest sample index.
pub fn cut(tree: &MergeTree, k: usize) -> Result<ClusterAssignment> {
    let n = tree.n;
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let mut uf = UnionFind::new(n);
    let mut leaf_of: Vec<usize> = (0..n).collect();
    leaf_of.resize(2 * n - 1, 0);
    for (i, m) in tree.merges[..n - k].iter().enumerate() {
        leaf_of[n + i] = uf.union(leaf_of[m.left], leaf_of[m.right]);
    }
    let mut id_of_root = vec![usize::MAX; n];
    let mut next = 0;
    let labels = (0..n)
        .map(|i| {
            let r = uf.find(i);
            if id_of_root[r] == usize::MAX {
                id_of_root[r] = next;
                next += 1;
            }
            id_of_root[r]
        })
        .collect();
    ClusterAssignment::new(labels, k)
}

/// Renders a tree as `merge_index,left,right,height,size` CSV.
pub fn format_dendrogram(tree: &MergeTree) -> String {
    let mut out = String::from("merge_index,left,right,height,size\n");
    for (i, m) in tree.merges.iter().enumerate() {
        out.push_str(&format!("{i},{},{},{},{}\n", m.left, m.right, m.height, m.size));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> EmbeddingMatrix {
        EmbeddingMatrix::new(points.len(), 1, points.to_vec()).unwrap()
    }

    #[test]
    fn single_point_has_no_merges() {
        let t = build_dendrogram(&line(&[4.0]), LinkageKind::Ward).unwrap();
        assert!(t.merges().is_empty());
        assert_eq!(cut(&t, 1).unwrap().labels(), &[0]);
    }

    #[test]
    fn empty_input() {
        let x = EmbeddingMatrix::new(0, 3, vec![]).unwrap();
        assert!(matches!(build_dendrogram(&x, LinkageKind::Single), Err(Error::EmptyInput)));
    }

    #[test]
    fn ward_three_points() {
        let t = build_dendrogram(&line(&[0.0, 1.0, 10.0]), LinkageKind::Ward).unwrap();
        let m = t.merges();
        assert_eq!((m[0].left, m[0].right, m[0].size), (0, 1, 2));
        assert!((m[0].height - 1.0).abs() < 1e-12);
        // sqrt(2 * (2*1/3) * 9.5^2)
        let expected = (2.0 * (2.0 / 3.0) * 9.5f64.powi(2)).sqrt();
        assert!((m[1].height - expected).abs() < 1e-12);
        assert!((m[1].height - 10.9697).abs() < 1e-4);
        assert_eq!((m[1].left, m[1].right, m[1].size), (2, 3, 3));
    }

    #[test]
    fn single_three_points() {
        let t = build_dendrogram(&line(&[0.0, 1.0, 10.0]), LinkageKind::Single).unwrap();
        let h: Vec<f64> = t.heights().collect();
        assert_eq!(h, vec![1.0, 9.0]);
    }

    #[test]
    fn cut_extremes() {
        let x = line(&[0.0, 1.0, 10.0, 11.5, 30.0]);
        let t = build_dendrogram(&x, LinkageKind::Complete).unwrap();
        assert_eq!(cut(&t, 5).unwrap().labels(), &[0, 1, 2, 3, 4]);
        assert_eq!(cut(&t, 1).unwrap().labels(), &[0; 5]);
        assert_eq!(cut(&t, 3).unwrap().labels(), &[0, 0, 1, 1, 2]);
        assert!(cut(&t, 6).is_err());
    }

    #[test]
    fn merge_sizes_and_ids() {
        let x = line(&[0.0, 0.5, 3.0, 3.2, 9.0, 9.1, 20.0]);
        for linkage in LinkageKind::ALL {
            let t = build_dendrogram(&x, linkage).unwrap();
            let n = x.n();
            assert_eq!(t.merges().len(), n - 1);
            let mut sizes = vec![1; n];
            for (i, m) in t.merges().iter().enumerate() {
                assert!(m.left < m.right && m.right < n + i);
                sizes.push(sizes[m.left] + sizes[m.right]);
                assert_eq!(m.size, sizes[n + i]);
            }
            assert_eq!(t.merges().last().unwrap().size, n);
        }
    }

    #[test]
    fn dendrogram_csv() {
        let t = build_dendrogram(&line(&[0.0, 1.0, 10.0]), LinkageKind::Single).unwrap();
        assert_eq!(
            format_dendrogram(&t),
            "merge_index,left,right,height,size\n0,0,1,1,2\n1,2,3,9,3\n"
        );
    }
}
