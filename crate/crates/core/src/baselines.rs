//! FedSGD, FedAvg, FedProx and SCAFFOLD behind the same interface as FedADMM.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::admm::{self, client_update_exact_quadratic, client_update_sgd, update_message, ClientState, DualMode, ServerState};
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::solver::{local_sgd, Correction, LocalProblem};

pub const BYTES_PER_FLOAT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    FedSgd,
    FedAvg,
    FedProx,
    Scaffold,
    FedAdmm,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::FedSgd,
        StrategyKind::FedAvg,
        StrategyKind::FedProx,
        StrategyKind::Scaffold,
        StrategyKind::FedAdmm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::FedSgd => "fedsgd",
            StrategyKind::FedAvg => "fedavg",
            StrategyKind::FedProx => "fedprox",
            StrategyKind::Scaffold => "scaffold",
            StrategyKind::FedAdmm => "fedadmm",
        }
    }

    /// Whether clients draw a random epoch count under system heterogeneity.
    pub fn heterogeneous_epochs(self) -> bool {
        matches!(self, StrategyKind::FedProx | StrategyKind::FedAdmm)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalSolver {
    Sgd,
    /// Closed-form local minimizer; quadratic objectives only.
    ExactQuadratic,
}

/// Where a FedADMM client starts its local solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmStart {
    /// From its stored local model `w_i`.
    Local,
    /// The client replaces its stored primal with the downloaded `θ`.
    Server,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub kind: StrategyKind,
    /// FedSGD learning rate and SCAFFOLD's global step size `η_g`.
    pub server_lr: f64,
    pub local_solver: LocalSolver,
    /// FedADMM: keep `y ≡ 0` and skip the dual ascent.
    pub freeze_dual: bool,
    pub warm_start: WarmStart,
    /// SCAFFOLD: keep `c = c_i ≡ 0`.
    pub freeze_controls: bool,
}

impl Strategy {
    pub fn new(kind: StrategyKind) -> Self {
        Strategy {
            kind,
            server_lr: if kind == StrategyKind::Scaffold { 1.0 } else { 0.1 },
            local_solver: LocalSolver::Sgd,
            freeze_dual: false,
            warm_start: WarmStart::Local,
            freeze_controls: false,
        }
    }

    pub fn validate_rho(&self, rho: f64) -> Result<()> {
        match self.kind {
            StrategyKind::FedAdmm if !(rho > 0.0) => Err(Error::InvalidHyperparameter(format!(
                "FedADMM requires ρ > 0, got {rho}"
            ))),
            StrategyKind::FedProx if !(rho >= 0.0) => Err(Error::InvalidHyperparameter(format!(
                "FedProx requires ρ ≥ 0, got {rho}"
            ))),
            _ => Ok(()),
        }
    }

    /// FedADMM with an active dual (the configuration the analysis covers).
    pub fn is_primal_dual(&self) -> bool {
        self.kind == StrategyKind::FedAdmm && !self.freeze_dual
    }
}

/// What an active client uploads.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    /// Gradient (FedSGD), model difference (FedAvg/FedProx) or augmented-model
    /// difference (FedADMM).
    Single(ParamVector),
    /// SCAFFOLD's `(Δw, Δc)`.
    Pair { model: ParamVector, control: ParamVector },
}

impl Message {
    pub fn primary(&self) -> &ParamVector {
        match self {
            Message::Single(v) => v,
            Message::Pair { model, .. } => model,
        }
    }

    pub fn floats(&self) -> usize {
        match self {
            Message::Single(v) => v.dim(),
            Message::Pair { model, control } => model.dim() + control.dim(),
        }
    }
}

/// One active client's round of local work.
pub fn local_step<R: Rng>(
    strategy: &Strategy,
    problem: &LocalProblem,
    client: &ClientState,
    server: &ServerState,
    epochs: usize,
    rng: &mut R,
) -> Result<(ClientState, Message)> {
    let theta = &server.theta;
    theta.check_dim(problem.dim())?;
    match strategy.kind {
        StrategyKind::FedSgd => {
            let g = problem.grad(theta).map_err(|e| diverged(e, client.id))?;
            Ok((client.clone(), Message::Single(g)))
        }
        StrategyKind::FedAvg | StrategyKind::FedProx => {
            let correction = if strategy.kind == StrategyKind::FedAvg {
                Correction::None
            } else {
                Correction::Proximal { theta, rho: server.rho }
            };
            let run = local_sgd(problem, theta, correction, epochs, client.lr, client.batch_size, client.id, rng)?;
            let message = run.w.sub(theta);
            let mut next = client.clone();
            next.w = run.w;
            Ok((next, Message::Single(message)))
        }
        StrategyKind::Scaffold => {
            let dim = theta.dim();
            let zero = ParamVector::zeros(dim);
            let local_c = client.control.as_ref().unwrap_or(&zero);
            let global_c = server.control.as_ref().unwrap_or(&zero);
            let correction = if strategy.freeze_controls {
                Correction::None
            } else {
                Correction::ControlVariate {
                    local: local_c,
                    global: global_c,
                }
            };
            let run = local_sgd(problem, theta, correction, epochs, client.lr, client.batch_size, client.id, rng)?;
            let mut next = client.clone();
            let delta_c = if strategy.freeze_controls {
                zero.clone()
            } else {
                // c_i′ = c_i − c + (θ − w′) / (K η_i)
                let k_eta = run.steps as f64 * client.lr;
                let mut updated = local_c.sub(global_c);
                for j in 0..dim {
                    updated[j] += (theta[j] - run.w[j]) / k_eta;
                }
                let dc = updated.sub(local_c);
                next.control = Some(updated);
                dc
            };
            let model = run.w.sub(theta);
            next.w = run.w;
            Ok((next, Message::Pair { model, control: delta_c }))
        }
        StrategyKind::FedAdmm => {
            let mut before = client.clone();
            if strategy.warm_start == WarmStart::Server {
                before.w = theta.clone();
            }
            let dual = if strategy.freeze_dual { DualMode::Frozen } else { DualMode::Active };
            let after = match strategy.local_solver {
                LocalSolver::Sgd => client_update_sgd(problem, &before, theta, server.rho, epochs, dual, rng)?,
                LocalSolver::ExactQuadratic => {
                    if strategy.freeze_dual {
                        return Err(Error::Config("exact local solves require an active dual".into()));
                    }
                    client_update_exact_quadratic(problem, &before, theta, server.rho)?
                }
            };
            let message = update_message(&before, &after, server.rho)?;
            Ok((after, Message::Single(message)))
        }
    }
}

fn diverged(e: Error, client: usize) -> Error {
    match e {
        Error::NonFinite { .. } => Error::Diverged { client, epoch: 0 },
        other => other,
    }
}

/// Server update from the active clients' messages, in ascending client order.
/// `clients` is the total population `m`.
pub fn aggregate(strategy: &Strategy, server: &ServerState, messages: &[Message], clients: usize) -> Result<ServerState> {
    if messages.is_empty() {
        let mut next = server.clone();
        next.round += 1;
        return Ok(next);
    }
    let n = messages.len() as f64;
    let primaries: Vec<&ParamVector> = messages.iter().map(Message::primary).collect();
    for p in &primaries {
        p.check_dim(server.theta.dim())?;
    }
    let mut next = server.clone();
    next.round += 1;
    match strategy.kind {
        StrategyKind::FedSgd => {
            next.theta = admm::step_by_sum(&server.theta, &primaries, -strategy.server_lr / n);
        }
        StrategyKind::FedAvg | StrategyKind::FedProx => {
            next.theta = admm::step_by_sum(&server.theta, &primaries, 1.0 / n);
        }
        StrategyKind::Scaffold => {
            next.theta = admm::step_by_sum(&server.theta, &primaries, strategy.server_lr / n);
            let controls: Vec<&ParamVector> = messages
                .iter()
                .filter_map(|m| match m {
                    Message::Pair { control, .. } => Some(control),
                    Message::Single(_) => None,
                })
                .collect();
            if controls.len() != messages.len() {
                return Err(Error::Config("SCAFFOLD aggregation needs control-variate messages".into()));
            }
            if !strategy.freeze_controls {
                let c = server.control.clone().unwrap_or_else(|| ParamVector::zeros(server.theta.dim()));
                next.control = Some(admm::step_by_sum(&c, &controls, (n / clients as f64) / n));
            }
        }
        StrategyKind::FedAdmm => {
            let deltas: Vec<ParamVector> = primaries.into_iter().cloned().collect();
            return admm::server_aggregate(server, &deltas);
        }
    }
    Ok(next)
}

/// Per-active-client `(upload, download)` bytes at 8 bytes per float.
pub fn message_bytes(kind: StrategyKind, dim: usize) -> (usize, usize) {
    let one = BYTES_PER_FLOAT * dim;
    match kind {
        StrategyKind::Scaffold => (2 * one, 2 * one),
        _ => (one, one),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::data::synth_mixture;
    use crate::model::{Dataset, LogisticObjective, Objective, QuadraticObjective};

    fn logistic_problem() -> LocalProblem {
        let data = Arc::new(synth_mixture(3, 20, 4, 2.0, 5).unwrap());
        let obj = Arc::new(Objective::Logistic(LogisticObjective::new(4, 3, 0.0).unwrap()));
        LocalProblem::new(obj, data, (0..40).collect()).unwrap()
    }

    fn setup(p: &LocalProblem, rho: f64) -> (ClientState, ServerState) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let theta: ParamVector = (0..p.dim()).map(|_| rng.random_range(-0.1..0.1)).collect::<Vec<_>>().into();
        let client = ClientState::new(3, &theta, 4, 0.1, Some(8)).unwrap();
        (client, ServerState::new(theta, 1.0, rho).unwrap())
    }

    fn run(strategy: &Strategy, p: &LocalProblem, c: &ClientState, s: &ServerState) -> (ClientState, Message) {
        local_step(strategy, p, c, s, 4, &mut ChaCha8Rng::seed_from_u64(7)).unwrap()
    }

    #[test]
    fn fedprox_without_proximal_term_is_fedavg() {
        let p = logistic_problem();
        let (c, s) = setup(&p, 0.0);
        let (a, ma) = run(&Strategy::new(StrategyKind::FedAvg), &p, &c, &s);
        let (b, mb) = run(&Strategy::new(StrategyKind::FedProx), &p, &c, &s);
        assert!(a.bits_eq(&b));
        assert!(ma.primary().bits_eq(mb.primary()));
    }

    #[test]
    fn frozen_dual_admm_is_fedprox() {
        let p = logistic_problem();
        let (c, s) = setup(&p, 0.3);
        let mut admm = Strategy::new(StrategyKind::FedAdmm);
        admm.freeze_dual = true;
        let (a, ma) = run(&admm, &p, &c, &s);
        let (b, mb) = run(&Strategy::new(StrategyKind::FedProx), &p, &c, &s);
        assert!(a.w.bits_eq(&b.w));
        assert!(ma.primary().bits_eq(mb.primary()));
        assert!(a.y.norm_sq() == 0.0);
    }

    #[test]
    fn scaffold_with_zero_controls_is_fedavg() {
        let p = logistic_problem();
        let (mut c, mut s) = setup(&p, 0.0);
        c.control = Some(ParamVector::zeros(p.dim()));
        s.control = Some(ParamVector::zeros(p.dim()));
        let (a, ma) = run(&Strategy::new(StrategyKind::Scaffold), &p, &c, &s);
        let (b, mb) = run(&Strategy::new(StrategyKind::FedAvg), &p, &c, &s);
        assert!(a.w.bits_eq(&b.w));
        assert!(ma.primary().bits_eq(mb.primary()));
        // The control message is non-trivial even though the step was not corrected.
        match ma {
            Message::Pair { control, .. } => assert!(control.norm() > 0.0),
            Message::Single(_) => panic!("SCAFFOLD must send two vectors"),
        }
    }

    #[test]
    fn fedsgd_sends_the_gradient() {
        let p = LocalProblem::data_free(
            Objective::Quadratic(QuadraticObjective::scalar(1.0, 3.0).unwrap()),
            Arc::new(Dataset::unit()),
        );
        let c = ClientState::new(0, &vec![0.0].into(), 1, 0.1, None).unwrap();
        let s = ServerState::new(vec![0.0].into(), 1.0, 0.0).unwrap();
        let (_, m) = run(&Strategy::new(StrategyKind::FedSgd), &p, &c, &s);
        assert_eq!(m, Message::Single(vec![-3.0].into()));
    }

    #[test]
    fn aggregation_examples() {
        let s = ServerState::new(vec![0.0].into(), 1.0, 0.0).unwrap();
        let sgd = Strategy::new(StrategyKind::FedSgd);
        let next = aggregate(&sgd, &s, &[Message::Single(vec![-3.0].into()), Message::Single(vec![-1.0].into())], 10).unwrap();
        assert!((next.theta[0] - 0.2).abs() < 1e-15);

        let avg = Strategy::new(StrategyKind::FedAvg);
        let still = aggregate(&avg, &s, &[Message::Single(vec![0.0].into())], 10).unwrap();
        assert_eq!(still.theta, s.theta);

        let mut sc = s.clone();
        sc.control = Some(vec![0.25].into());
        let scaffold = Strategy::new(StrategyKind::Scaffold);
        let msg = Message::Pair {
            model: vec![1.0].into(),
            control: vec![0.0].into(),
        };
        let next = aggregate(&scaffold, &sc, &[msg], 4).unwrap();
        assert_eq!(next.control, Some(vec![0.25].into()));
        assert_eq!(next.theta[0], 1.0);

        let msg = Message::Pair {
            model: vec![0.0].into(),
            control: vec![2.0].into(),
        };
        let next = aggregate(&scaffold, &sc, &[msg.clone(), msg], 4).unwrap();
        // c + (|S|/m) · mean(Δc) = 0.25 + 0.5 · 2
        assert_eq!(next.control, Some(vec![1.25].into()));
    }

    #[test]
    fn empty_active_set_only_advances_round() {
        let s = ServerState::new(vec![1.0].into(), 1.0, 0.0).unwrap();
        for kind in StrategyKind::ALL {
            let next = aggregate(&Strategy::new(kind), &s, &[], 10).unwrap();
            assert_eq!((next.theta.clone(), next.round), (s.theta.clone(), 1));
        }
    }

    #[test]
    fn byte_accounting() {
        assert_eq!(message_bytes(StrategyKind::FedAdmm, 10), (80, 80));
        assert_eq!(message_bytes(StrategyKind::Scaffold, 10).0, 160);
        assert_eq!(message_bytes(StrategyKind::FedAdmm, 1_663_370).0, 13_306_960);
        for d in [1, 7, 7840] {
            assert_eq!(message_bytes(StrategyKind::Scaffold, d).0, 2 * message_bytes(StrategyKind::FedAdmm, d).0);
        }
    }

    #[test]
    fn admm_requires_positive_rho() {
        assert!(Strategy::new(StrategyKind::FedAdmm).validate_rho(0.0).is_err());
        assert!(Strategy::new(StrategyKind::FedProx).validate_rho(0.0).is_ok());
        assert_eq!("FedADMM".parse::<StrategyKind>().unwrap(), StrategyKind::FedAdmm);
    }
}
