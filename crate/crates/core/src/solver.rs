//! Mini-batch SGD shared by every local solver.
//!
//! One code path serves FedAvg, FedProx, FedADMM and SCAFFOLD; only the
//! correction added to the data gradient changes. Terms that are identically
//! zero (ρ = 0, frozen duals) are skipped rather than added, which keeps the
//! strategy reductions exact to the bit.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Batch, Dataset, Objective};
use crate::param::ParamVector;

/// A client's objective together with the samples it owns.
#[derive(Debug, Clone)]
pub struct LocalProblem {
    pub objective: Arc<Objective>,
    pub data: Arc<Dataset>,
    pub shard: Arc<[usize]>,
}

impl LocalProblem {
    pub fn new(objective: Arc<Objective>, data: Arc<Dataset>, shard: Vec<usize>) -> Result<Self> {
        if shard.is_empty() {
            return Err(Error::Config("client shard must not be empty".into()));
        }
        let batch = Batch::new(shard, &data)?;
        Ok(LocalProblem {
            objective,
            data,
            shard: batch.indices().into(),
        })
    }

    /// A data-free problem (quadratics) carried by [`Dataset::unit`].
    pub fn data_free(objective: Objective, unit: Arc<Dataset>) -> Self {
        LocalProblem {
            objective: Arc::new(objective),
            data: unit,
            shard: vec![0].into(),
        }
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn full_batch(&self) -> Batch {
        Batch::trusted(self.shard.to_vec())
    }

    pub fn loss(&self, w: &ParamVector) -> Result<f64> {
        self.objective.eval_loss(w, &self.data, &self.full_batch())
    }

    pub fn grad(&self, w: &ParamVector) -> Result<ParamVector> {
        self.objective.eval_grad(w, &self.data, &self.full_batch())
    }

    /// Shuffled batches of `size` over the shard; `None` means one full batch.
    pub(crate) fn make_batches<R: Rng>(&self, size: Option<usize>, rng: &mut R) -> Vec<Batch> {
        let mut order = self.shard.to_vec();
        match size {
            Some(b) if b < order.len() => {
                order.shuffle(rng);
                order.chunks(b).map(|c| Batch::trusted(c.to_vec())).collect()
            }
            _ => vec![Batch::trusted(order)],
        }
    }
}

/// What is added to `∇f_i(w, b)` in each local step.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Correction<'a> {
    /// Plain SGD on `f_i`.
    None,
    /// `+ ρ (w − θ)`
    Proximal { theta: &'a ParamVector, rho: f64 },
    /// `+ y + ρ (w − θ)`
    AugmentedLagrangian {
        theta: &'a ParamVector,
        dual: &'a ParamVector,
        rho: f64,
    },
    /// `− c_i + c`
    ControlVariate {
        local: &'a ParamVector,
        global: &'a ParamVector,
    },
}

impl Correction<'_> {
    fn apply(&self, w: &ParamVector, g: &mut ParamVector) {
        match *self {
            Correction::None => {}
            Correction::Proximal { theta, rho } => {
                if rho != 0.0 {
                    for j in 0..g.dim() {
                        g[j] += rho * (w[j] - theta[j]);
                    }
                }
            }
            Correction::AugmentedLagrangian { theta, dual, rho } => {
                for j in 0..g.dim() {
                    g[j] = g[j] + dual[j] + rho * (w[j] - theta[j]);
                }
            }
            Correction::ControlVariate { local, global } => {
                for j in 0..g.dim() {
                    g[j] = g[j] - local[j] + global[j];
                }
            }
        }
    }
}

pub(crate) struct SgdRun {
    pub w: ParamVector,
    pub steps: usize,
}

/// Runs `epochs` passes over batches created once up front.
#[allow(clippy::too_many_arguments)]
pub(crate) fn local_sgd<R: Rng>(
    problem: &LocalProblem,
    start: &ParamVector,
    correction: Correction<'_>,
    epochs: usize,
    lr: f64,
    batch_size: Option<usize>,
    client: usize,
    rng: &mut R,
) -> Result<SgdRun> {
    start.check_dim(problem.dim())?;
    let batches = problem.make_batches(batch_size, rng);
    let mut w = start.clone();
    let mut steps = 0;
    for epoch in 0..epochs {
        for batch in &batches {
            let mut g = problem
                .objective
                .eval_grad(&w, &problem.data, batch)
                .map_err(|e| match e {
                    Error::NonFinite { .. } => Error::Diverged { client, epoch },
                    other => other,
                })?;
            correction.apply(&w, &mut g);
            w.axpy(-lr, &g);
            steps += 1;
        }
        if !w.is_finite() {
            return Err(Error::Diverged { client, epoch });
        }
    }
    Ok(SgdRun { w, steps })
}
