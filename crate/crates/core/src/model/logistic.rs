//! Multinomial logistic regression with a bias term.
//!
//! Parameters are a row-major `classes × (features + 1)` matrix; the last
//! column of each row is that class's bias.

use nalgebra::{DMatrix, SymmetricEigen};

use super::dataset::{Batch, Dataset};
use super::softmax::softmax_in_place;
use crate::error::{Error, Result};
use crate::param::ParamVector;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticObjective {
    pub features: usize,
    pub classes: usize,
    pub lambda: f64,
}

impl LogisticObjective {
    pub fn new(features: usize, classes: usize, lambda: f64) -> Result<Self> {
        if classes < 2 {
            return Err(Error::Config("logistic regression needs ≥ 2 classes".into()));
        }
        if !(lambda >= 0.0) {
            return Err(Error::Config(format!("regularization must be ≥ 0, got {lambda}")));
        }
        Ok(LogisticObjective {
            features,
            classes,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.classes * (self.features + 1)
    }

    fn logits(&self, w: &[f64], x: &[f64], out: &mut [f64]) {
        let stride = self.features + 1;
        for (c, z) in out.iter_mut().enumerate() {
            let row = &w[c * stride..(c + 1) * stride];
            let mut acc = row[self.features];
            for (wj, xj) in row[..self.features].iter().zip(x) {
                acc += wj * xj;
            }
            *z = acc;
        }
    }

    pub fn loss(&self, w: &ParamVector, data: &Dataset, batch: &Batch) -> Result<f64> {
        let mut z = vec![0.0; self.classes];
        let mut total = 0.0;
        for &i in batch.indices() {
            self.logits(w.as_slice(), data.row(i), &mut z);
            let label = data.label(i);
            let zy = z[label];
            let lse = softmax_in_place(&mut z);
            let l = lse - zy;
            if !l.is_finite() {
                return Err(Error::NonFinite { context: "logistic loss", sample: i });
            }
            total += l;
        }
        Ok(total / batch.len() as f64 + 0.5 * self.lambda * w.norm_sq())
    }

    pub fn grad(&self, w: &ParamVector, data: &Dataset, batch: &Batch) -> Result<ParamVector> {
        let stride = self.features + 1;
        let mut g = vec![0.0; self.dim()];
        let mut z = vec![0.0; self.classes];
        for &i in batch.indices() {
            let x = data.row(i);
            self.logits(w.as_slice(), x, &mut z);
            softmax_in_place(&mut z);
            z[data.label(i)] -= 1.0;
            for (c, &err) in z.iter().enumerate() {
                if !err.is_finite() {
                    return Err(Error::NonFinite { context: "logistic gradient", sample: i });
                }
                let row = &mut g[c * stride..(c + 1) * stride];
                for (gj, xj) in row[..self.features].iter_mut().zip(x) {
                    *gj += err * xj;
                }
                row[self.features] += err;
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for (gj, wj) in g.iter_mut().zip(w.iter()) {
            *gj = *gj * scale + self.lambda * wj;
        }
        Ok(ParamVector::from_vec(g))
    }

    /// `½ λ_max(X̃ᵀX̃ / n) + λ`, with `X̃` the features augmented by a ones column.
    ///
    /// The softmax Hessian `diag(s) − ssᵀ` has spectral norm at most ½ for any
    /// number of classes (Gershgorin: row sums `2 s_c (1 − s_c) ≤ ½`).
    pub fn lipschitz(&self, data: &Dataset) -> f64 {
        let p = self.features + 1;
        let mut gram = DMatrix::<f64>::zeros(p, p);
        let mut xt = vec![1.0; p];
        for i in 0..data.len() {
            xt[..self.features].copy_from_slice(data.row(i));
            for a in 0..p {
                for b in a..p {
                    gram[(a, b)] += xt[a] * xt[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                gram[(a, b)] = gram[(b, a)];
            }
        }
        gram /= data.len() as f64;
        0.5 * SymmetricEigen::new(gram).eigenvalues.max() + self.lambda
    }

    /// Fraction of samples whose arg-max logit equals the label.
    pub fn accuracy(&self, w: &ParamVector, data: &Dataset) -> f64 {
        let mut z = vec![0.0; self.classes];
        let hits = (0..data.len())
            .filter(|&i| {
                self.logits(w.as_slice(), data.row(i), &mut z);
                argmax(&z) == data.label(i)
            })
            .count();
        hits as f64 / data.len() as f64
    }
}

pub(crate) fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (c, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = c;
        }
    }
    best
}
