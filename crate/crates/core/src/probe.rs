//! Linear probe: multinomial logistic regression on frozen embeddings.
//!
//! The objective is mean softmax cross-entropy plus `weight_decay / 2 *
//! ||W||_F^2` (the bias is not penalized). It is minimized by full-batch
//! gradient descent with an Armijo backtracking line search, starting from
//! zero, so a fit is a deterministic function of its inputs.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::embedding::{l2_normalize, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::labels::LabeledDataset;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub weight_decay: f64,
    pub max_iters: usize,
    /// Stop once the Euclidean norm of the full gradient drops below this.
    pub tol: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            weight_decay: 1e-4,
            max_iters: 500,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    /// Sorted class ids; column `c` of the weights scores `classes[c]`.
    pub classes: Vec<usize>,
    pub d: usize,
    /// `d x C`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub iterations: usize,
    pub final_loss: f64,
    pub converged: bool,
    pub loss_history: Vec<f64>,
}

impl ProbeModel {
    /// A model whose logits are all zero.
    pub fn zeros(d: usize, classes: Vec<usize>) -> Self {
        let c = classes.len();
        Self {
            classes,
            d,
            weights: vec![0.0; d * c],
            bias: vec![0.0; c],
            iterations: 0,
            final_loss: f64::NAN,
            converged: false,
            loss_history: Vec::new(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn logits(&self, row: &[f64]) -> Vec<f64> {
        logits(row, &self.weights, &self.bias, self.classes.len())
    }

    /// Predicted class id per row; ties go to the lowest class id.
    pub fn predict(&self, x: &EmbeddingMatrix) -> Result<Vec<usize>> {
        if x.d() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "model expects d = {}, embeddings have d = {}",
                self.d,
                x.d()
            )));
        }
        Ok(x.rows().map(|row| self.classes[argmax(&self.logits(row))]).collect())
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn logits(row: &[f64], weights: &[f64], bias: &[f64], c: usize) -> Vec<f64> {
    let mut z = bias.to_vec();
    for (j, &xj) in row.iter().enumerate() {
        if xj == 0.0 {
            continue;
        }
        for (zc, w) in z.iter_mut().zip(&weights[j * c..(j + 1) * c]) {
            *zc += xj * w;
        }
    }
    z
}

/// Regularized cross-entropy over a fixed dataset, as a function of the
/// flattened parameter vector `[W (d x C, row-major), b (C)]`.
pub struct ProbeObjective<'a> {
    x: &'a EmbeddingMatrix,
    targets: Vec<usize>,
    classes: Vec<usize>,
    weight_decay: f64,
}

impl<'a> ProbeObjective<'a> {
    pub fn new(x: &'a EmbeddingMatrix, y: &[usize], weight_decay: f64) -> Result<Self> {
        if x.n() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows of embeddings but {} labels",
                x.n(),
                y.len()
            )));
        }
        let index: BTreeMap<usize, usize> = y.iter().map(|&c| (c, 0)).collect();
        let classes: Vec<usize> = index.keys().copied().collect();
        if classes.len() < 2 {
            return Err(Error::SingleClass);
        }
        if x.n() < classes.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for {} classes",
                x.n(),
                classes.len()
            )));
        }
        let pos: BTreeMap<usize, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Ok(Self {
            x,
            targets: y.iter().map(|c| pos[c]).collect(),
            classes,
            weight_decay,
        })
    }

    pub fn n_params(&self) -> usize {
        (self.x.d() + 1) * self.classes.len()
    }

    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        self.evaluate(params, false).0
    }

    pub fn loss_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        self.evaluate(params, true)
    }

    fn evaluate(&self, params: &[f64], want_grad: bool) -> (f64, Vec<f64>) {
        let (d, c, n) = (self.x.d(), self.classes.len(), self.x.n() as f64);
        let (weights, bias) = params.split_at(d * c);
        let mut grad = if want_grad { vec![0.0; params.len()] } else { Vec::new() };
        let mut loss = 0.0;
        for (row, &t) in self.x.rows().zip(&self.targets) {
            let z = logits(row, weights, bias, c);
            let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = z.iter().map(|v| (v - m).exp()).sum();
            let log_norm = m + sum_exp.ln();
            loss += log_norm - z[t];
            if want_grad {
                let (gw, gb) = grad.split_at_mut(d * c);
                for k in 0..c {
                    let resid = (z[k] - log_norm).exp() - if k == t { 1.0 } else { 0.0 };
                    gb[k] += resid;
                    if resid == 0.0 {
                        continue;
                    }
                    for (j, &xj) in row.iter().enumerate() {
                        gw[j * c + k] += resid * xj;
                    }
                }
            }
        }
        loss /= n;
        loss += 0.5 * self.weight_decay * weights.iter().map(|w| w * w).sum::<f64>();
        if want_grad {
            grad.iter_mut().for_each(|g| *g /= n);
            for (g, w) in grad[..d * c].iter_mut().zip(weights) {
                *g += self.weight_decay * w;
            }
        }
        (loss, grad)
    }
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Fits a probe from the all-zero start.
pub fn fit_probe(x: &EmbeddingMatrix, y: &[usize], opts: &ProbeOptions) -> Result<ProbeModel> {
    fit_probe_from(x, y, opts, None)
}

/// Fits a probe from `init` (flattened `[W, b]`) or from zero.
pub fn fit_probe_from(
    x: &EmbeddingMatrix,
    y: &[usize],
    opts: &ProbeOptions,
    init: Option<&[f64]>,
) -> Result<ProbeModel> {
    let objective = ProbeObjective::new(x, y, opts.weight_decay)?;
    let mut params = match init {
        Some(p) if p.len() != objective.n_params() => {
            return Err(Error::DimensionMismatch(format!(
                "initial parameters have length {}, expected {}",
                p.len(),
                objective.n_params()
            )))
        }
        Some(p) => p.to_vec(),
        None => vec![0.0; objective.n_params()],
    };

    let (mut loss, mut grad) = objective.loss_and_gradient(&params);
    let mut history = vec![loss];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut candidate = vec![0.0; params.len()];
    while iterations < opts.max_iters {
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2.sqrt() < opts.tol {
            converged = true;
            break;
        }
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            for ((c, p), g) in candidate.iter_mut().zip(&params).zip(&grad) {
                *c = p - step * g;
            }
            let trial = objective.loss(&candidate);
            if trial <= loss - ARMIJO * step * g2 {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(new_loss) = accepted else {
            // No decrease is representable at this precision.
            converged = true;
            break;
        };
        std::mem::swap(&mut params, &mut candidate);
        let (l, g) = objective.loss_and_gradient(&params);
        debug_assert!(l <= new_loss + 1e-12 * new_loss.abs().max(1.0));
        loss = l;
        grad = g;
        history.push(loss);
        iterations += 1;
        step *= 2.0;
    }
    if !converged {
        converged = grad.iter().map(|g| g * g).sum::<f64>().sqrt() < opts.tol;
    }

    let c = objective.classes().len();
    let (weights, bias) = params.split_at(x.d() * c);
    Ok(ProbeModel {
        classes: objective.classes().to_vec(),
        d: x.d(),
        weights: weights.to_vec(),
        bias: bias.to_vec(),
        iterations,
        final_loss: loss,
        converged,
        loss_history: history,
    })
}

/// Fraction of rows whose predicted class equals the label.
pub fn probe_accuracy(model: &ProbeModel, x: &EmbeddingMatrix, y: &[usize]) -> Result<f64> {
    if x.n() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows of embeddings but {} labels",
            x.n(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let pred = model.predict(x)?;
    let hits = pred.iter().zip(y).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Seeded split of `0..n` into (train, holdout) index lists, each ascending.
/// `fraction` of the samples, rounded up, are held out.
pub fn holdout_split(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidConfig(format!("holdout fraction {fraction} is outside [0, 1)")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::seeded(seed));
    let n_hold = (fraction * n as f64).ceil() as usize;
    let mut hold = order[..n_hold].to_vec();
    let mut train = order[n_hold..].to_vec();
    hold.sort_unstable();
    train.sort_unstable();
    Ok((train, hold))
}

/// Probe fit on one layer against subclass labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub layer: String,
    pub normalized: bool,
    pub options: ProbeOptions,
    pub holdout_fraction: f64,
    pub seed: u64,
    pub n_train: usize,
    pub n_holdout: usize,
    pub train_accuracy: f64,
    pub holdout_accuracy: Option<f64>,
    pub iterations: usize,
    pub final_loss: f64,
    pub converged: bool,
}

impl ProbeReport {
    /// Holdout accuracy when a holdout exists, training accuracy otherwise.
    pub fn accuracy(&self) -> f64 {
        self.holdout_accuracy.unwrap_or(self.train_accuracy)
    }
}

/// Fits a probe from a layer's embeddings to its subclass labels. Inputs are
/// unit-normalized when `normalize` is set, matching the clustering inputs.
pub fn evaluate_probe(
    ds: &LabeledDataset,
    normalize: bool,
    opts: &ProbeOptions,
    holdout_fraction: f64,
    seed: u64,
) -> Result<ProbeReport> {
    let x = if normalize {
        l2_normalize(&ds.embeddings).0
    } else {
        ds.embeddings.clone()
    };
    let y = ds.labels.subclass();
    let (train, hold) = holdout_split(ds.len(), holdout_fraction, seed)?;
    let x_train = x.select_rows(&train);
    let y_train: Vec<usize> = train.iter().map(|&i| y[i]).collect();
    let model = fit_probe(&x_train, &y_train, opts)?;
    let train_accuracy = probe_accuracy(&model, &x_train, &y_train)?;
    let holdout_accuracy = if hold.is_empty() {
        None
    } else {
        let y_hold: Vec<usize> = hold.iter().map(|&i| y[i]).collect();
        Some(probe_accuracy(&model, &x.select_rows(&hold), &y_hold)?)
    };
    Ok(ProbeReport {
        layer: ds.embeddings.layer_name.clone(),
        normalized: normalize,
        options: *opts,
        holdout_fraction,
        seed,
        n_train: train.len(),
        n_holdout: hold.len(),
        train_accuracy,
        holdout_accuracy,
        iterations: model.iterations,
        final_loss: model.final_loss,
        converged: model.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_points() -> (EmbeddingMatrix, Vec<usize>) {
        let mut data = vec![-1.0; 20];
        data.extend(vec![1.0; 20]);
        let y = (0..40).map(|i| if i < 20 { 3 } else { 8 }).collect();
        (EmbeddingMatrix::new(40, 1, data).unwrap(), y)
    }

    #[test]
    fn separable_fit_is_perfect() {
        let (x, y) = two_points();
        let model = fit_probe(&x, &y, &ProbeOptions::default()).unwrap();
        assert_eq!(model.classes, vec![3, 8]);
        assert_eq!(probe_accuracy(&model, &x, &y).unwrap(), 1.0);
        assert!(model.loss_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn single_class_rejected() {
        let x = EmbeddingMatrix::new(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(fit_probe(&x, &[1, 1, 1], &ProbeOptions::default()), Err(Error::SingleClass)));
    }

    #[test]
    fn shape_errors() {
        let (x, y) = two_points();
        assert!(matches!(fit_probe(&x, &y[..5], &ProbeOptions::default()), Err(Error::DimensionMismatch(_))));
        let model = fit_probe(&x, &y, &ProbeOptions::default()).unwrap();
        let wide = EmbeddingMatrix::new(1, 2, vec![0.0, 0.0]).unwrap();
        assert!(matches!(probe_accuracy(&model, &wide, &[3]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn bias_shift_moves_argmax_only() {
        let mut model = ProbeModel::zeros(2, vec![0, 1, 2]);
        let x = EmbeddingMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(model.predict(&x).unwrap(), vec![0, 0]);
        model.bias[2] += 0.5;
        assert_eq!(model.predict(&x).unwrap(), vec![2, 2]);
        // Adding the same constant to every logit changes nothing.
        model.bias.iter_mut().for_each(|b| *b += 10.0);
        assert_eq!(model.predict(&x).unwrap(), vec![2, 2]);
    }

    #[test]
    fn holdout_partitions_indices() {
        let (train, hold) = holdout_split(10, 0.25, 4).unwrap();
        assert_eq!(hold.len(), 3);
        let mut all: Vec<usize> = train.iter().chain(&hold).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(holdout_split(10, 0.25, 4).unwrap(), (train, hold));
        assert!(holdout_split(10, 1.0, 0).is_err());
    }
}
