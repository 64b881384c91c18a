//! One-hidden-layer tanh network with a softmax cross-entropy head.
//!
//! Layout: `W1 (hidden × inputs) | b1 (hidden) | W2 (classes × hidden) | b2 (classes)`.

use super::dataset::{Batch, Dataset};
use super::logistic::argmax;
use super::softmax::softmax_in_place;
use crate::error::{Error, Result};
use crate::param::ParamVector;

#[derive(Debug, Clone, PartialEq)]
pub struct SmallNetObjective {
    pub inputs: usize,
    pub hidden: usize,
    pub classes: usize,
    pub lambda: f64,
    /// Smoothness constant supplied by configuration; not certified.
    pub declared_lipschitz: f64,
}

struct Layout {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    end: usize,
}

impl SmallNetObjective {
    pub fn new(inputs: usize, hidden: usize, classes: usize, lambda: f64, declared_lipschitz: f64) -> Result<Self> {
        if classes < 2 || hidden == 0 {
            return Err(Error::Config("small net needs ≥ 2 classes and ≥ 1 hidden unit".into()));
        }
        if !(lambda >= 0.0) || !(declared_lipschitz > 0.0) {
            return Err(Error::Config("small net needs λ ≥ 0 and a positive declared L".into()));
        }
        Ok(SmallNetObjective {
            inputs,
            hidden,
            classes,
            lambda,
            declared_lipschitz,
        })
    }

    fn layout(&self) -> Layout {
        let w1 = 0;
        let b1 = w1 + self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.classes * self.hidden;
        Layout {
            w1,
            b1,
            w2,
            b2,
            end: b2 + self.classes,
        }
    }

    pub fn dim(&self) -> usize {
        self.layout().end
    }

    /// Fills `hidden` with tanh activations and `logits` with output scores.
    fn forward(&self, w: &[f64], x: &[f64], hidden: &mut [f64], logits: &mut [f64]) {
        let l = self.layout();
        for (h, a) in hidden.iter_mut().enumerate() {
            let row = &w[l.w1 + h * self.inputs..l.w1 + (h + 1) * self.inputs];
            let mut acc = w[l.b1 + h];
            for (wj, xj) in row.iter().zip(x) {
                acc += wj * xj;
            }
            *a = acc.tanh();
        }
        for (c, z) in logits.iter_mut().enumerate() {
            let row = &w[l.w2 + c * self.hidden..l.w2 + (c + 1) * self.hidden];
            let mut acc = w[l.b2 + c];
            for (wj, aj) in row.iter().zip(hidden.iter()) {
                acc += wj * aj;
            }
            *z = acc;
        }
    }

    pub fn loss(&self, w: &ParamVector, data: &Dataset, batch: &Batch) -> Result<f64> {
        let mut hidden = vec![0.0; self.hidden];
        let mut z = vec![0.0; self.classes];
        let mut total = 0.0;
        for &i in batch.indices() {
            self.forward(w.as_slice(), data.row(i), &mut hidden, &mut z);
            let zy = z[data.label(i)];
            let l = softmax_in_place(&mut z) - zy;
            if !l.is_finite() {
                return Err(Error::NonFinite { context: "small net loss", sample: i });
            }
            total += l;
        }
        Ok(total / batch.len() as f64 + 0.5 * self.lambda * w.norm_sq())
    }

    pub fn grad(&self, w: &ParamVector, data: &Dataset, batch: &Batch) -> Result<ParamVector> {
        let l = self.layout();
        let ws = w.as_slice();
        let mut g = vec![0.0; l.end];
        let mut hidden = vec![0.0; self.hidden];
        let mut z = vec![0.0; self.classes];
        let mut delta_hidden = vec![0.0; self.hidden];
        for &i in batch.indices() {
            let x = data.row(i);
            self.forward(ws, x, &mut hidden, &mut z);
            softmax_in_place(&mut z);
            z[data.label(i)] -= 1.0;
            delta_hidden.iter_mut().for_each(|d| *d = 0.0);
            for (c, &err) in z.iter().enumerate() {
                if !err.is_finite() {
                    return Err(Error::NonFinite { context: "small net gradient", sample: i });
                }
                let w2_row = &ws[l.w2 + c * self.hidden..l.w2 + (c + 1) * self.hidden];
                let g2_row = &mut g[l.w2 + c * self.hidden..l.w2 + (c + 1) * self.hidden];
                for h in 0..self.hidden {
                    g2_row[h] += err * hidden[h];
                    delta_hidden[h] += err * w2_row[h];
                }
                g[l.b2 + c] += err;
            }
            for h in 0..self.hidden {
                let d = delta_hidden[h] * (1.0 - hidden[h] * hidden[h]);
                let g1_row = &mut g[l.w1 + h * self.inputs..l.w1 + (h + 1) * self.inputs];
                for (gj, xj) in g1_row.iter_mut().zip(x) {
                    *gj += d * xj;
                }
                g[l.b1 + h] += d;
            }
        }
        let scale = 1.0 / batch.len() as f64;
        for (gj, wj) in g.iter_mut().zip(ws) {
            *gj = *gj * scale + self.lambda * wj;
        }
        Ok(ParamVector::from_vec(g))
    }

    pub fn accuracy(&self, w: &ParamVector, data: &Dataset) -> f64 {
        let mut hidden = vec![0.0; self.hidden];
        let mut z = vec![0.0; self.classes];
        let hits = (0..data.len())
            .filter(|&i| {
                self.forward(w.as_slice(), data.row(i), &mut hidden, &mut z);
                argmax(&z) == data.label(i)
            })
            .count();
        hits as f64 / data.len() as f64
    }
}
