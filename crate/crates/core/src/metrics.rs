//! External cluster-quality metrics computed from a contingency table.
//!
//! Entropies and mutual information are in nats. AMI uses the hypergeometric
//! (fixed-margins permutation) null model and the arithmetic-mean entropy
//! normalizer. Both AMI and ARI score two identical degenerate partitions
//! (a single cluster, or all singletons) as 1.0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Co-occurrence counts: rows are clusters of the first partition, columns
/// are classes of the second. Labels are mapped to rows/columns in ascending
/// order of their raw ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    /// Builds a table from explicit counts (`rows x cols`, row-major).
    pub fn from_counts(rows: usize, cols: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != rows * cols {
            return Err(Error::LengthMismatch {
                left: counts.len(),
                right: rows * cols,
            });
        }
        let mut row_sums = vec![0; rows];
        let mut col_sums = vec![0; cols];
        for i in 0..rows {
            for j in 0..cols {
                let c = counts[i * cols + j];
                row_sums[i] += c;
                col_sums[j] += c;
            }
        }
        let total = row_sums.iter().sum();
        Ok(Self {
            rows,
            cols,
            counts,
            row_sums,
            col_sums,
            total,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.counts[i * self.cols + j]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    fn nonzero_cells(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        (0..self.rows).flat_map(move |i| {
            (0..self.cols).filter_map(move |j| {
                let c = self.get(i, j);
                (c > 0).then_some((i, j, c))
            })
        })
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.total == 0 {
            Err(Error::EmptyTable)
        } else {
            Ok(())
        }
    }

    /// True when each row and each column has exactly one nonzero cell, i.e.
    /// the two partitions are equal up to relabeling.
    fn is_matching(&self) -> bool {
        self.rows == self.cols
            && self
                .nonzero_cells()
                .all(|(i, j, c)| c == self.row_sums[i] && c == self.col_sums[j])
    }
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    for &l in labels {
        map.entry(l).or_insert(0usize);
    }
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    (labels.iter().map(|l| map[l]).collect(), map.len())
}

/// Cross-tabulates predicted clusters against true classes.
pub fn contingency(pred: &[usize], truth: &[usize]) -> Result<ContingencyTable> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    let (p, rows) = dense_ids(pred);
    let (t, cols) = dense_ids(truth);
    let mut counts = vec![0u64; rows * cols];
    for (&i, &j) in p.iter().zip(&t) {
        counts[i * cols + j] += 1;
    }
    ContingencyTable::from_counts(rows, cols, counts)
}

/// Fraction of samples that carry their cluster's majority class.
pub fn purity(table: &ContingencyTable) -> Result<f64> {
    table.require_nonempty()?;
    let hits: u64 = (0..table.rows)
        .map(|i| (0..table.cols).map(|j| table.get(i, j)).max().unwrap_or(0))
        .sum();
    Ok(hits as f64 / table.total as f64)
}

fn entropy(margins: &[u64], total: u64) -> f64 {
    let n = total as f64;
    margins
        .iter()
        .filter(|&&m| m > 0)
        .map(|&m| {
            let p = m as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Shannon entropy of the cluster (row) marginals.
pub fn row_entropy(table: &ContingencyTable) -> f64 {
    entropy(&table.row_sums, table.total)
}

/// Shannon entropy of the class (column) marginals.
pub fn col_entropy(table: &ContingencyTable) -> f64 {
    entropy(&table.col_sums, table.total)
}

pub fn mutual_information(table: &ContingencyTable) -> Result<f64> {
    table.require_nonempty()?;
    let n = table.total as f64;
    let mi: f64 = table
        .nonzero_cells()
        .map(|(i, j, c)| {
            let c = c as f64;
            let a = table.row_sums[i] as f64;
            let b = table.col_sums[j] as f64;
            (c / n) * (n * c / (a * b)).ln()
        })
        .sum();
    Ok(mi.max(0.0))
}

/// `ln(k!)` for `k` in `0..=n`.
fn log_factorials(n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Expected mutual information of two random partitions with the table's
/// margins, under the hypergeometric model. Evaluated in log space.
pub fn expected_mutual_information(table: &ContingencyTable) -> Result<f64> {
    table.require_nonempty()?;
    let total = table.total;
    let n = total as f64;
    let lf = log_factorials(total);
    let lf_n = lf[total as usize];
    let mut emi = 0.0;
    for &a in &table.row_sums {
        if a == 0 {
            continue;
        }
        for &b in &table.col_sums {
            if b == 0 {
                continue;
            }
            let lo = (a + b).saturating_sub(total).max(1);
            let hi = a.min(b);
            let log_const = lf[a as usize] + lf[b as usize] + lf[(total - a) as usize]
                + lf[(total - b) as usize]
                - lf_n;
            let ab = a as f64 * b as f64;
            for nij in lo..=hi {
                let log_p = log_const
                    - lf[nij as usize]
                    - lf[(a - nij) as usize]
                    - lf[(b - nij) as usize]
                    - lf[(total + nij - a - b) as usize];
                let x = nij as f64;
                emi += (x / n) * (n * x / ab).ln() * log_p.exp();
            }
        }
    }
    Ok(emi)
}

/// Adjusted mutual information with the arithmetic-mean normalizer.
pub fn ami(table: &ContingencyTable) -> Result<f64> {
    table.require_nonempty()?;
    if table.rows == 1 && table.cols == 1 {
        return Ok(1.0);
    }
    let mi = mutual_information(table)?;
    let emi = expected_mutual_information(table)?;
    let normalizer = 0.5 * (row_entropy(table) + col_entropy(table));
    let numerator = mi - emi;
    let denominator = normalizer - emi;
    // Identical all-singleton partitions give 0/0 up to rounding.
    let scale = normalizer.max(1.0);
    if denominator.abs() <= 1e-12 * scale {
        return Ok(if table.is_matching() { 1.0 } else { 0.0 });
    }
    Ok(numerator / denominator)
}

fn pairs(x: u64) -> i128 {
    let x = x as i128;
    x * (x - 1).max(0) / 2
}

/// Adjusted Rand index between two partitions of the same samples.
pub fn ari(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewSamples(a.len()));
    }
    ari_from_table(&contingency(a, b)?)
}

pub fn ari_from_table(table: &ContingencyTable) -> Result<f64> {
    if table.total < 2 {
        return Err(Error::TooFewSamples(table.total as usize));
    }
    // Pair counts are integers; scaling numerator and denominator by
    // 2 * C(N, 2) keeps everything exact until the final division.
    let index: i128 = table.nonzero_cells().map(|(_, _, c)| pairs(c)).sum();
    let sum_a: i128 = table.row_sums.iter().map(|&x| pairs(x)).sum();
    let sum_b: i128 = table.col_sums.iter().map(|&x| pairs(x)).sum();
    let all = pairs(table.total);
    let numerator = 2 * (index * all - sum_a * sum_b);
    let denominator = (sum_a + sum_b) * all - 2 * sum_a * sum_b;
    // The denominator only vanishes when both partitions are a single
    // cluster or both are all singletons.
    if denominator == 0 {
        return Ok(1.0);
    }
    Ok(numerator as f64 / denominator as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricName {
    Purity,
    Ami,
    Ari,
    Mi,
    Emi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: MetricName,
    pub value: f64,
}

/// Purity and AMI of `pred` scored against `truth`.
pub fn score(pred: &[usize], truth: &[usize]) -> Result<(f64, f64)> {
    let table = contingency(pred, truth)?;
    Ok((ami(&table)?, purity(&table)?))
}
