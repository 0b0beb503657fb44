//! Independent reference implementations shared by the integration suites.
//! Nothing here calls into the library's metric or clustering code.
#![allow(dead_code)]

use clusterlens::{rng, EmbeddingMatrix, LinkageKind};
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub fn uniform_matrix(seed: u64, n: usize, d: usize) -> EmbeddingMatrix {
    let mut r = rng::seeded(seed);
    let data = (0..n * d).map(|_| r.random::<f64>()).collect();
    EmbeddingMatrix::new(n, d, data).unwrap()
}

pub fn gaussian_matrix(seed: u64, n: usize, d: usize) -> EmbeddingMatrix {
    let mut r = rng::seeded(seed);
    let data = (0..n * d)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut r);
            z
        })
        .collect();
    EmbeddingMatrix::new(n, d, data).unwrap()
}

pub fn random_partition(r: &mut rng::Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| r.random_range(0..k)).collect()
}

/// Relabels cluster ids by order of first appearance so equal partitions
/// compare equal.
pub fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Heights and the partition after every merge, from a quadratic-per-step
/// rescan that evaluates each linkage from its definition.
pub struct NaiveTree {
    pub heights: Vec<f64>,
    /// `partitions[m]` is the canonical labeling after `m` merges.
    pub partitions: Vec<Vec<usize>>,
}

pub fn naive_agglomerative(x: &EmbeddingMatrix, linkage: LinkageKind) -> NaiveTree {
    let n = x.n();
    let dist: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| euclid(x.row(i), x.row(j))).collect()).collect();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let labels_of = |clusters: &[Vec<usize>]| {
        let mut raw = vec![0; n];
        for (c, members) in clusters.iter().enumerate() {
            for &m in members {
                raw[m] = c;
            }
        }
        canonical(&raw)
    };
    let centroid = |members: &[usize]| {
        let mut c = vec![0.0; x.d()];
        for &m in members {
            for (ci, v) in c.iter_mut().zip(x.row(m)) {
                *ci += v;
            }
        }
        c.iter_mut().for_each(|v| *v /= members.len() as f64);
        c
    };
    let dist = &dist;
    let linkage_value = |a: &[usize], b: &[usize]| -> f64 {
        match linkage {
            LinkageKind::Single => a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| dist[i][j]).fold(f64::INFINITY, f64::min),
            LinkageKind::Complete => a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j))).map(|(i, j)| dist[i][j]).fold(0.0, f64::max),
            LinkageKind::Average => {
                let s: f64 = a.iter().flat_map(|&i| b.iter().map(move |&j| dist[i][j])).sum();
                s / (a.len() * b.len()) as f64
            }
            LinkageKind::Ward => {
                let (ca, cb) = (centroid(a), centroid(b));
                let (na, nb) = (a.len() as f64, b.len() as f64);
                let sq: f64 = ca.iter().zip(&cb).map(|(p, q)| (p - q) * (p - q)).sum();
                let delta_sse = na * nb / (na + nb) * sq;
                (2.0 * delta_sse).sqrt()
            }
        }
    };
    let mut heights = Vec::new();
    let mut partitions = vec![labels_of(&clusters)];
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let v = linkage_value(&clusters[i], &clusters[j]);
                if v < best.0 {
                    best = (v, i, j);
                }
            }
        }
        let (h, i, j) = best;
        let merged = clusters.remove(j);
        clusters[i].extend(merged);
        heights.push(h);
        partitions.push(labels_of(&clusters));
    }
    NaiveTree { heights, partitions }
}

/// Edge weights of a minimum spanning tree (Prim), ascending.
pub fn mst_weights(x: &EmbeddingMatrix) -> Vec<f64> {
    let n = x.n();
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    best[0] = 0.0;
    let mut weights = Vec::new();
    for step in 0..n {
        let u = (0..n).filter(|&i| !in_tree[i]).min_by(|&a, &b| best[a].total_cmp(&best[b])).unwrap();
        in_tree[u] = true;
        if step > 0 {
            weights.push(best[u]);
        }
        for v in 0..n {
            if !in_tree[v] {
                best[v] = best[v].min(euclid(x.row(u), x.row(v)));
            }
        }
    }
    weights.sort_by(f64::total_cmp);
    weights
}

/// ARI from explicit pair classification, with a single final division.
pub fn ari_by_pairs(a: &[usize], b: &[usize]) -> f64 {
    let (mut ss, mut sd, mut ds, mut dd) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => ss += 1,
                (true, false) => sd += 1,
                (false, true) => ds += 1,
                (false, false) => dd += 1,
            }
        }
    }
    let num = 2 * (ss * dd - sd * ds);
    let den = (ss + sd) * (sd + dd) + (ss + ds) * (ds + dd);
    if den == 0 {
        return 1.0;
    }
    num as f64 / den as f64
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

fn margins(a: &[usize], b: &[usize]) -> (Vec<u64>, Vec<u64>, Vec<Vec<u64>>) {
    let ra = canonical(a);
    let rb = canonical(b);
    let r = ra.iter().max().unwrap() + 1;
    let c = rb.iter().max().unwrap() + 1;
    let mut t = vec![vec![0u64; c]; r];
    for (&i, &j) in ra.iter().zip(&rb) {
        t[i][j] += 1;
    }
    let rows = t.iter().map(|row| row.iter().sum()).collect();
    let cols = (0..c).map(|j| t.iter().map(|row| row[j]).sum()).collect();
    (rows, cols, t)
}

fn mi_of(t: &[Vec<u64>], rows: &[u64], cols: &[u64], n: f64) -> f64 {
    let mut mi = 0.0;
    for (i, row) in t.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    mi
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&s| s > 0)
        .map(|&s| {
            let p = s as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Expected MI by enumerating every table with the given margins, each
/// weighted by its hypergeometric probability.
pub fn emi_by_enumeration(rows: &[u64], cols: &[u64]) -> f64 {
    let n: u64 = rows.iter().sum();
    let nf = n as f64;
    let log_const: f64 =
        rows.iter().map(|&a| ln_factorial(a)).sum::<f64>() + cols.iter().map(|&b| ln_factorial(b)).sum::<f64>() - ln_factorial(n);
    let (r, c) = (rows.len(), cols.len());
    let mut table = vec![vec![0u64; c]; r];
    let mut row_left = rows.to_vec();
    let mut col_left = cols.to_vec();
    let mut total = 0.0;
    let mut prob_mass = 0.0;
    fn fill(
        cell: usize,
        r: usize,
        c: usize,
        table: &mut Vec<Vec<u64>>,
        row_left: &mut Vec<u64>,
        col_left: &mut Vec<u64>,
        visit: &mut dyn FnMut(&[Vec<u64>]),
    ) {
        if cell == r * c {
            if row_left.iter().all(|&v| v == 0) && col_left.iter().all(|&v| v == 0) {
                visit(table);
            }
            return;
        }
        let (i, j) = (cell / c, cell % c);
        // The last cell of a row or column is forced.
        let hi = row_left[i].min(col_left[j]);
        let lo = if j == c - 1 { row_left[i] } else if i == r - 1 { col_left[j] } else { 0 };
        if lo > hi {
            return;
        }
        for v in lo..=hi {
            table[i][j] = v;
            row_left[i] -= v;
            col_left[j] -= v;
            fill(cell + 1, r, c, table, row_left, col_left, visit);
            row_left[i] += v;
            col_left[j] += v;
        }
        table[i][j] = 0;
    }
    fill(0, r, c, &mut table, &mut row_left, &mut col_left, &mut |t| {
        let log_p = log_const - t.iter().flatten().map(|&v| ln_factorial(v)).sum::<f64>();
        let p = log_p.exp();
        prob_mass += p;
        total += p * mi_of(t, rows, cols, nf);
    });
    assert!((prob_mass - 1.0).abs() < 1e-9, "hypergeometric mass {prob_mass}");
    total
}

/// AMI with the arithmetic-mean normalizer, built on the enumeration EMI.
/// Degenerate cases follow the library's documented convention: a single
/// shared cluster scores 1, and a vanishing denominator scores 1 for
/// identical partitions and 0 otherwise.
pub fn ami_by_enumeration(a: &[usize], b: &[usize]) -> f64 {
    let (rows, cols, t) = margins(a, b);
    if rows.len() == 1 && cols.len() == 1 {
        return 1.0;
    }
    let n = a.len() as f64;
    let mi = mi_of(&t, &rows, &cols, n);
    let emi = emi_by_enumeration(&rows, &cols);
    let norm = 0.5 * (entropy(&rows, n) + entropy(&cols, n));
    let den = norm - emi;
    if den.abs() <= 1e-12 * norm.max(1.0) {
        return if canonical(a) == canonical(b) { 1.0 } else { 0.0 };
    }
    (mi - emi) / den
}

/// Purity computed from labels directly.
pub fn purity_by_counting(pred: &[usize], truth: &[usize]) -> f64 {
    let mut counts = std::collections::HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *counts.entry((p, t)).or_insert(0usize) += 1;
    }
    let mut best = std::collections::HashMap::new();
    for (&(p, _), &c) in &counts {
        let e = best.entry(p).or_insert(0usize);
        *e = (*e).max(c);
    }
    best.values().sum::<usize>() as f64 / pred.len() as f64
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let m = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (m(&ra), m(&rb));
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub const BIN: &str = env!("CARGO_BIN_EXE_clusterlens");

/// Runs the binary and returns (exit code, stdout, stderr).
pub fn run_bin<I, S>(args: I, envs: &[(&str, &str)]) -> (i32, String, String)
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = std::process::Command::new(BIN).args(args).envs(envs.iter().copied()).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

/// Writes a run directory holding `layers` and a shared label file.
pub fn write_run(dir: &std::path::Path, run_id: &str, layers: &[(String, clusterlens::LabeledDataset)]) {
    use clusterlens::manifest::{write_manifest, LayerEntry, RunManifest};
    std::fs::create_dir_all(dir).unwrap();
    let mut entries = Vec::new();
    for (name, ds) in layers {
        let file = format!("{name}.emb");
        clusterlens::save_embeddings(&ds.embeddings, dir.join(&file)).unwrap();
        entries.push(LayerEntry { name: name.clone(), file });
    }
    clusterlens::save_labels(&layers[0].1.labels, dir.join("labels.csv")).unwrap();
    write_manifest(
        &RunManifest {
            run_id: run_id.into(),
            layers: entries,
            labels: "labels.csv".into(),
        },
        dir,
    )
    .unwrap();
}

/// Three layers of increasing separation over one small synthetic label set.
pub fn layered_fixture(seed: u64) -> Vec<(String, clusterlens::LabeledDataset)> {
    use clusterlens::synth::{generate, SynthConfig, SynthMode};
    [1.5, 0.8, 0.3]
        .iter()
        .enumerate()
        .map(|(i, &noise)| {
            let mut ds = generate(&SynthConfig {
                spec: clusterlens::HierarchySpec::uniform("fixture", 3, 3),
                d: 8,
                sigma_noise: noise,
                n_per_subclass: 8,
                ..SynthConfig::entity13(SynthMode::Natural, seed)
            })
            .unwrap();
            ds.embeddings.layer_name = format!("block{i}");
            (format!("block{i}"), ds)
        })
        .collect()
}
