//! FedADMM primal-dual machinery.
//!
//! Each client holds a primal/dual pair `(w_i, y_i)` and minimizes its
//! augmented Lagrangian
//!
//! ```text
//! L_i(w, y, θ) = f_i(w) + yᵀ(w − θ) + (ρ/2)‖w − θ‖²
//! ```
//!
//! then ascends the dual, `y ← y + ρ(w − θ)`. Only the change of the augmented
//! model `u_i = w_i + y_i/ρ` is sent to the server, which moves
//! `θ ← θ + (η/|S|) Σ Δ_i`.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::Batch;
use crate::param::ParamVector;
use crate::solver::{local_sgd, Correction, LocalProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub id: usize,
    pub w: ParamVector,
    pub y: ParamVector,
    /// SCAFFOLD's client control variate `c_i`; `None` for other strategies.
    pub control: Option<ParamVector>,
    pub epochs_max: usize,
    pub lr: f64,
    /// `None` is a single full batch.
    pub batch_size: Option<usize>,
}

impl ClientState {
    /// `w = θ⁰`, `y = 0`.
    pub fn new(id: usize, theta0: &ParamVector, epochs_max: usize, lr: f64, batch_size: Option<usize>) -> Result<Self> {
        if epochs_max == 0 {
            return Err(Error::Config(format!("client {id}: epochs must be ≥ 1")));
        }
        if !(lr > 0.0) {
            return Err(Error::Config(format!("client {id}: learning rate must be > 0")));
        }
        if batch_size == Some(0) {
            return Err(Error::Config(format!("client {id}: batch size must be ≥ 1")));
        }
        Ok(ClientState {
            id,
            w: theta0.clone(),
            y: ParamVector::zeros(theta0.dim()),
            control: None,
            epochs_max,
            lr,
            batch_size,
        })
    }

    /// Augmented model `w + y/ρ`.
    pub fn augmented(&self, rho: f64) -> ParamVector {
        let mut u = self.w.clone();
        u.axpy(1.0 / rho, &self.y);
        u
    }

    /// Bitwise equality of every numeric field.
    pub fn bits_eq(&self, other: &ClientState) -> bool {
        self.id == other.id
            && self.w.bits_eq(&other.w)
            && self.y.bits_eq(&other.y)
            && match (&self.control, &other.control) {
                (None, None) => true,
                (Some(a), Some(b)) => a.bits_eq(b),
                _ => false,
            }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub theta: ParamVector,
    pub eta: f64,
    pub rho: f64,
    pub round: usize,
    /// SCAFFOLD's server control variate `c`.
    pub control: Option<ParamVector>,
}

impl ServerState {
    pub fn new(theta: ParamVector, eta: f64, rho: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("server step size η must be > 0, got {eta}")));
        }
        if !(rho >= 0.0) {
            return Err(Error::InvalidHyperparameter(format!("ρ must be ≥ 0, got {rho}")));
        }
        Ok(ServerState {
            theta,
            eta,
            rho,
            round: 0,
            control: None,
        })
    }
}

/// Whether the dual variable participates in the local solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualMode {
    Active,
    /// `y ≡ 0` and the dual ascent is skipped: the FedProx local problem.
    Frozen,
}

fn check_dims(problem: &LocalProblem, vs: &[&ParamVector]) -> Result<()> {
    vs.iter().try_for_each(|v| v.check_dim(problem.dim()))
}

/// `f_i(w) + yᵀ(w − θ) + (ρ/2)‖w − θ‖²` over the client's whole shard.
pub fn aug_lagrangian(problem: &LocalProblem, w: &ParamVector, y: &ParamVector, theta: &ParamVector, rho: f64) -> Result<f64> {
    check_dims(problem, &[w, y, theta])?;
    let diff = w.sub(theta);
    Ok(problem.loss(w)? + y.dot(&diff) + 0.5 * rho * diff.norm_sq())
}

/// `∇f_i(w, batch) + y + ρ(w − θ)`
pub fn aug_lagrangian_grad_w(
    problem: &LocalProblem,
    w: &ParamVector,
    y: &ParamVector,
    theta: &ParamVector,
    rho: f64,
    batch: &Batch,
) -> Result<ParamVector> {
    check_dims(problem, &[w, y, theta])?;
    let mut g = problem.objective.eval_grad(w, &problem.data, batch)?;
    for j in 0..g.dim() {
        g[j] = g[j] + y[j] + rho * (w[j] - theta[j]);
    }
    Ok(g)
}

/// `‖∇_w L_i(w, y, θ)‖²` with the full-shard gradient.
pub fn inexactness_residual(problem: &LocalProblem, w: &ParamVector, y: &ParamVector, theta: &ParamVector, rho: f64) -> Result<f64> {
    Ok(aug_lagrangian_grad_w(problem, w, y, theta, rho, &problem.full_batch())?.norm_sq())
}

/// Inexact local solve by `epochs` epochs of mini-batch SGD warm-started at
/// `state.w`, followed by the dual ascent step.
pub fn client_update_sgd<R: Rng>(
    problem: &LocalProblem,
    state: &ClientState,
    theta: &ParamVector,
    rho: f64,
    epochs: usize,
    dual: DualMode,
    rng: &mut R,
) -> Result<ClientState> {
    check_dims(problem, &[&state.w, &state.y, theta])?;
    if epochs == 0 || epochs > state.epochs_max {
        return Err(Error::Config(format!(
            "client {}: epochs {epochs} outside [1, {}]",
            state.id, state.epochs_max
        )));
    }
    let correction = match dual {
        DualMode::Active => Correction::AugmentedLagrangian {
            theta,
            dual: &state.y,
            rho,
        },
        DualMode::Frozen => Correction::Proximal { theta, rho },
    };
    let run = local_sgd(problem, &state.w, correction, epochs, state.lr, state.batch_size, state.id, rng)?;
    let mut next = state.clone();
    next.w = run.w;
    if dual == DualMode::Active {
        ascend_dual(&mut next, theta, rho);
    }
    Ok(next)
}

fn ascend_dual(state: &mut ClientState, theta: &ParamVector, rho: f64) {
    for j in 0..state.y.dim() {
        state.y[j] += rho * (state.w[j] - theta[j]);
    }
}

/// Exact minimization of the augmented Lagrangian for quadratic objectives:
/// `w′ = (A + ρI)⁻¹(A c + ρθ − y)`, then `y′ = y + ρ(w′ − θ)`.
pub fn client_update_exact_quadratic(problem: &LocalProblem, state: &ClientState, theta: &ParamVector, rho: f64) -> Result<ClientState> {
    check_dims(problem, &[&state.w, &state.y, theta])?;
    let quad = problem
        .objective
        .as_quadratic()
        .ok_or_else(|| Error::Config("exact local solves require a quadratic objective".into()))?;
    let mut next = state.clone();
    next.w = quad.prox_minimizer(&state.y, theta, rho)?;
    ascend_dual(&mut next, theta, rho);
    Ok(next)
}

/// `Δ = (w′ + y′/ρ) − (w + y/ρ)`
pub fn update_message(before: &ClientState, after: &ClientState, rho: f64) -> Result<ParamVector> {
    if !(rho > 0.0) {
        return Err(Error::InvalidHyperparameter(format!(
            "the augmented-model message needs ρ > 0, got {rho}"
        )));
    }
    if before.id != after.id {
        return Err(Error::Config(format!("message between different clients {} and {}", before.id, after.id)));
    }
    after.w.check_dim(before.w.dim())?;
    Ok(after.augmented(rho).sub(&before.augmented(rho)))
}

/// `θ + scale · Σ Δ_i`, summing in the order given.
pub(crate) fn step_by_sum(theta: &ParamVector, deltas: &[&ParamVector], scale: f64) -> ParamVector {
    let total = ParamVector::sum(theta.dim(), deltas.iter().copied());
    let mut out = theta.clone();
    for j in 0..out.dim() {
        out[j] += scale * total[j];
    }
    out
}

/// `θ′ = θ + (η/|S|) Σ Δ_i`. An empty active set leaves θ unchanged and only
/// advances the round counter.
pub fn server_aggregate(server: &ServerState, deltas: &[ParamVector]) -> Result<ServerState> {
    let mut next = server.clone();
    next.round += 1;
    if deltas.is_empty() {
        return Ok(next);
    }
    for d in deltas {
        d.check_dim(server.theta.dim())?;
    }
    let refs: Vec<&ParamVector> = deltas.iter().collect();
    next.theta = step_by_sum(&server.theta, &refs, server.eta / deltas.len() as f64);
    Ok(next)
}

/// Terms of the stationarity measure
/// `V = ‖∇_θ L‖² + Σ_i (‖∇_{w_i} L_i‖² + ‖w_i − θ‖²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalityGap {
    pub theta_grad_sq: f64,
    pub local_grad_sq: f64,
    pub consensus_sq: f64,
}

impl OptimalityGap {
    pub fn total(&self) -> f64 {
        self.theta_grad_sq + self.local_grad_sq + self.consensus_sq
    }
}

/// Evaluates the optimality gap with `∇_θ L = ρ(mθ − Σ_i (w_i + y_i/ρ))`.
pub fn optimality_gap(problems: &[LocalProblem], states: &[ClientState], server: &ServerState) -> Result<OptimalityGap> {
    if problems.len() != states.len() {
        return Err(Error::DimensionMismatch {
            expected: problems.len(),
            got: states.len(),
        });
    }
    let rho = server.rho;
    let theta = &server.theta;
    let mut theta_grad = theta.scale(rho * states.len() as f64);
    let mut local_grad_sq = 0.0;
    let mut consensus_sq = 0.0;
    for (problem, s) in problems.iter().zip(states) {
        for j in 0..theta_grad.dim() {
            theta_grad[j] -= rho * s.w[j] + s.y[j];
        }
        local_grad_sq += inexactness_residual(problem, &s.w, &s.y, theta, rho)?;
        consensus_sq += s.w.distance_sq(theta);
    }
    Ok(OptimalityGap {
        theta_grad_sq: theta_grad.norm_sq(),
        local_grad_sq,
        consensus_sq,
    })
}

/// Convenience wrapper returning the scalar gap.
pub fn optimality_gap_v(problems: &[LocalProblem], states: &[ClientState], server: &ServerState) -> Result<f64> {
    Ok(optimality_gap(problems, states, server)?.total())
}

/// Aggregate augmented Lagrangian `Σ_i L_i(w_i, y_i, θ)`.
pub fn aggregate_lagrangian(problems: &[LocalProblem], states: &[ClientState], server: &ServerState) -> Result<f64> {
    problems
        .iter()
        .zip(states)
        .map(|(p, s)| aug_lagrangian(p, &s.w, &s.y, &server.theta, server.rho))
        .sum()
}

/// Constants of the sublinear-rate bound for FedADMM with `η = |S|/m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Constants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub eps_max: f64,
    pub p_min: f64,
    pub lipschitz: f64,
    pub rho: f64,
}

/// `ρ` must exceed `(1 + √5) L`.
pub fn rho_threshold(lipschitz: f64) -> f64 {
    (1.0 + 5f64.sqrt()) * lipschitz
}

impl Theorem1Constants {
    pub fn new(lipschitz: f64, rho: f64, p_min: f64, eps_max: f64) -> Result<Self> {
        if !(lipschitz > 0.0) {
            return Err(Error::InvalidHyperparameter(format!("L must be > 0, got {lipschitz}")));
        }
        if !(p_min > 0.0 && p_min <= 1.0) {
            return Err(Error::InvalidHyperparameter(format!("p_min must lie in (0, 1], got {p_min}")));
        }
        if !(eps_max >= 0.0) {
            return Err(Error::InvalidHyperparameter(format!("ε_max must be ≥ 0, got {eps_max}")));
        }
        let threshold = rho_threshold(lipschitz);
        if !(rho > threshold) {
            return Err(Error::InvalidHyperparameter(format!(
                "ρ = {rho} must exceed (1+√5)L = {threshold:.6} for L = {lipschitz}"
            )));
        }
        let (l, r) = (lipschitz, rho);
        let c1 = p_min * ((r - 2.0 * l) / 2.0 - 2.0 * l * l / r);
        let c2 = 3.0 * (l * l + r * r) + 2.0 * (1.0 + 2.0 * l * l / (r * r));
        let c3 = 3.0 + 16.0 / (r * r) + (c2 / c1) * (r + 16.0 * l) / (2.0 * l * r);
        Ok(Theorem1Constants {
            c1,
            c2,
            c3,
            eps_max,
            p_min,
            lipschitz,
            rho,
        })
    }

    /// `(1/(mT)) (c2/c1) (L⁰ − f* + (m/2L) ε_max) + c3 ε_max`
    pub fn bound(&self, lagrangian0: f64, f_star: f64, m: usize, rounds: usize) -> f64 {
        let (m, t) = (m as f64, rounds as f64);
        let head = lagrangian0 - f_star + m / (2.0 * self.lipschitz) * self.eps_max;
        head * self.c2 / self.c1 / (m * t) + self.c3 * self.eps_max
    }
}

pub fn theorem1_bound(constants: &Theorem1Constants, lagrangian0: f64, f_star: f64, m: usize, rounds: usize) -> f64 {
    constants.bound(lagrangian0, f_star, m, rounds)
}
