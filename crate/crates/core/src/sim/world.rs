//! Simulation state and the per-round loop.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;

use super::config::{DataSource, ExperimentConfig, ModelKind, SamplingScheme, ServerStep};
use super::exec::Executor;
use super::record::{CheckFlags, RoundRecord};
use super::rng::{stream, Purpose};
use crate::admm::{
    aggregate_lagrangian, inexactness_residual, optimality_gap_v, ClientState, ServerState, Theorem1Constants,
};
use crate::baselines::{aggregate, local_step, message_bytes, Strategy, WarmStart};
use crate::data::{
    load_cifar_bin, load_idx, partition_iid, partition_imbalanced, partition_shards, synth_mixture, Partition,
    PartitionScheme, QuadraticEnsemble,
};
use crate::error::{Error, Result};
use crate::model::{consensus_minimizer, Dataset, LogisticObjective, Objective, SmallNetObjective};
use crate::param::ParamVector;
use crate::solver::LocalProblem;

/// Absolute tolerance of the tracking identity.
pub const TRACKING_TOLERANCE: f64 = 1e-9;
/// Relative slack granted to each checked inequality for rounding.
pub const INEQUALITY_SLACK: f64 = 1e-9;

/// Active set for one round, in ascending id order.
///
/// `Uniform` draws `⌈C m⌉` distinct ids; `Bernoulli` includes each id
/// independently with probability `C` and may return an empty set.
pub fn sample_clients<R: Rng + ?Sized>(m: usize, participation: f64, scheme: SamplingScheme, rng: &mut R) -> Vec<usize> {
    let mut ids = match scheme {
        SamplingScheme::Uniform => {
            let k = super::config::uniform_count(m, participation);
            index::sample(rng, m, k).into_vec()
        }
        SamplingScheme::Bernoulli => (0..m).filter(|_| rng.random_bool(participation)).collect(),
    };
    ids.sort_unstable();
    ids
}

/// Uniform in `[1, e_max]` when `heterogeneous`, otherwise `e_max`.
pub fn draw_local_epochs<R: Rng + ?Sized>(e_max: usize, heterogeneous: bool, rng: &mut R) -> usize {
    if heterogeneous && e_max > 1 {
        rng.random_range(1..=e_max)
    } else {
        e_max
    }
}

fn holds(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs <= rhs + INEQUALITY_SLACK * (1.0 + scale)
}

/// Constants behind the analysis checks of a verify-mode run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    /// Largest client smoothness constant.
    pub lipschitz: f64,
    /// Whether `lipschitz` is a proven bound rather than a configured guess.
    pub certified: bool,
    /// Lower bound on `Σ_i f_i`, exact for quadratics.
    pub f_star: Option<f64>,
    /// Aggregate augmented Lagrangian at initialization.
    pub lagrangian0: f64,
    /// Largest measured local residual so far, including the initial one.
    pub eps_max: f64,
    pub p_min: f64,
}

#[derive(Debug, Clone)]
struct Verifier {
    diag: Diagnostics,
    /// Running maximum of each client's measured residual.
    eps: Vec<f64>,
    tracking: bool,
    lemma1: bool,
    lemma2: bool,
    lemma3: bool,
    theorem: Option<Theorem1Constants>,
    lagrangian: f64,
    v_sum: f64,
}

/// Everything a run mutates, plus the fixed problem data.
#[derive(Debug)]
pub struct World {
    config: ExperimentConfig,
    problems: Vec<LocalProblem>,
    eval: Option<(Arc<Objective>, Arc<Dataset>)>,
    partition: Option<Partition>,
    clients: Vec<ClientState>,
    server: ServerState,
    executor: Executor,
    bytes_up_cum: u64,
    bytes_down_cum: u64,
    verifier: Option<Verifier>,
}

fn load_data(config: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    match &config.data {
        DataSource::Synthetic { classes, per_class, dim, separation } => {
            let full = synth_mixture(*classes, *per_class, *dim, *separation, config.data_seed)?;
            full.split(config.test_fraction, &mut stream(config.data_seed, Purpose::Split, 0, 0))
        }
        DataSource::Idx { train_images, train_labels, test_images, test_labels } => {
            Ok((load_idx(train_images, train_labels)?, load_idx(test_images, test_labels)?))
        }
        DataSource::Cifar { train, test } => {
            if train.is_empty() || test.is_empty() {
                return Err(Error::Config("data.cifar_train and data.cifar_test must list at least one file".into()));
            }
            Ok((load_cifar_bin(train)?, load_cifar_bin(test)?))
        }
        DataSource::Quadratic { .. } => unreachable!("quadratic ensembles carry no samples"),
    }
}

fn partition(config: &ExperimentConfig, labels: &[usize]) -> Result<Partition> {
    let seed = stream(config.seed, Purpose::Partition, 0, 0).random::<u64>();
    match config.partition {
        PartitionScheme::Iid => partition_iid(labels.len(), config.clients, seed),
        PartitionScheme::Shards => partition_shards(labels, config.clients, config.shards_per_client, seed),
        PartitionScheme::Imbalanced => {
            partition_imbalanced(labels, config.clients, config.total_shards, config.group_size, seed)
        }
    }
}

impl World {
    pub fn new(config: &ExperimentConfig) -> Result<World> {
        config.validate()?;
        let m = config.clients;
        let unit = Arc::new(Dataset::unit());
        let (problems, eval, part, theta0, f_star) = match &config.data {
            DataSource::Quadratic { dim, curvature_min, curvature_max, center_scale, diagonal } => {
                let objectives = QuadraticEnsemble {
                    clients: m,
                    dim: *dim,
                    curvature_min: *curvature_min,
                    curvature_max: *curvature_max,
                    center_scale: *center_scale,
                    diagonal: *diagonal,
                }
                .generate(config.data_seed)?;
                let star = consensus_minimizer(&objectives.iter().collect::<Vec<_>>())?;
                let f_star = objectives.iter().map(|q| q.loss(&star)).sum::<f64>();
                let problems: Vec<LocalProblem> = objectives
                    .into_iter()
                    .map(|q| LocalProblem::data_free(Objective::Quadratic(q), unit.clone()))
                    .collect();
                (problems, None, None, ParamVector::zeros(*dim), Some(f_star))
            }
            _ => {
                let (train, test) = load_data(config)?;
                if test.dim() != train.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: train.dim(),
                        got: test.dim(),
                    });
                }
                let classes = train.classes().max(test.classes());
                let objective = Arc::new(match config.model {
                    ModelKind::Logistic => Objective::Logistic(LogisticObjective::new(train.dim(), classes, config.lambda)?),
                    ModelKind::SmallNet => Objective::SmallNet(SmallNetObjective::new(
                        train.dim(),
                        config.hidden,
                        classes,
                        config.lambda,
                        config.declared_lipschitz,
                    )?),
                });
                let part = partition(config, train.labels())?;
                let train = Arc::new(train);
                let problems = part
                    .assignments()
                    .iter()
                    .map(|shard| LocalProblem::new(objective.clone(), train.clone(), shard.clone()))
                    .collect::<Result<Vec<_>>>()?;
                let mut rng = stream(config.seed, Purpose::Init, 0, 0);
                let s = config.init_scale;
                let theta0: ParamVector = (0..objective.dim()).map(|_| s * (2.0 * rng.random::<f64>() - 1.0)).collect::<Vec<_>>().into();
                let f_star = objective.trivial_lower_bound().map(|b| b * m as f64);
                (problems, Some((objective, Arc::new(test))), Some(part), theta0, f_star)
            }
        };
        let clients = (0..m)
            .map(|i| ClientState::new(i, &theta0, config.epochs, config.client_lr, config.batch_size))
            .collect::<Result<Vec<_>>>()?;
        let server = ServerState::new(theta0, 1.0, config.rho)?;
        let mut world = World {
            config: config.clone(),
            problems,
            eval,
            partition: part,
            clients,
            server,
            executor: Executor::new(config.workers)?,
            bytes_up_cum: 0,
            bytes_down_cum: 0,
            verifier: None,
        };
        if config.verify || config.verify_theorem {
            world.verifier = Some(world.make_verifier(f_star)?);
        }
        Ok(world)
    }

    fn make_verifier(&self, f_star: Option<f64>) -> Result<Verifier> {
        let cfg = &self.config;
        let bounds = self.executor.try_map(&self.problems, |p| {
            let shard = p.data.subset(&p.shard, "shard")?;
            Ok(p.objective.lipschitz_bound(&shard))
        })?;
        let lipschitz = bounds.iter().map(|b| b.value).fold(0.0, f64::max);
        let certified = bounds.iter().all(|b| !b.heuristic) && lipschitz > 0.0;
        // e_i = ∇f_i(w_i) + y_i must be covered before a client's first update.
        let eps = self.executor.try_map(&self.clients, |c| {
            inexactness_residual(&self.problems[c.id], &c.w, &c.y, &c.w, 0.0)
        })?;
        let lagrangian0 = aggregate_lagrangian(&self.problems, &self.clients, &self.server)?;

        let s = &cfg.strategy;
        let primal_dual = s.is_primal_dual() && s.warm_start == WarmStart::Local && cfg.rho_schedule.is_empty();
        let tracking = primal_dual && cfg.eta == ServerStep::Participation && cfg.eta_schedule.is_empty();
        let lemma1 = primal_dual && certified;
        let lemma2 = lemma1 && tracking;
        let lemma3 = lemma1 && f_star.is_some() && cfg.rho >= 2.0 * lipschitz;
        let diag = Diagnostics {
            lipschitz,
            certified,
            f_star,
            lagrangian0,
            eps_max: eps.iter().copied().fold(0.0, f64::max),
            p_min: cfg.p_min(),
        };
        let theorem = if cfg.verify_theorem {
            if !(tracking && lemma1 && f_star.is_some()) {
                return Err(Error::Config(
                    "verify.theorem needs fedadmm with an active dual, local warm starts, \
                     strategy.eta = participation, no schedules, and an objective with a proven L and known lower bound"
                        .into(),
                ));
            }
            Some(Theorem1Constants::new(lipschitz, cfg.rho, diag.p_min, diag.eps_max)?)
        } else {
            None
        };
        Ok(Verifier {
            diag,
            eps,
            tracking,
            lemma1,
            lemma2,
            lemma3,
            theorem,
            lagrangian: lagrangian0,
            v_sum: 0.0,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn problems(&self) -> &[LocalProblem] {
        &self.problems
    }

    pub fn clients(&self) -> &[ClientState] {
        &self.clients
    }

    pub fn server(&self) -> &ServerState {
        &self.server
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    /// Verify-mode constants; `None` when verification is off.
    pub fn diagnostics(&self) -> Option<Diagnostics> {
        self.verifier.as_ref().map(|v| v.diag)
    }

    pub fn dim(&self) -> usize {
        self.server.theta.dim()
    }

    /// Mean of the client losses at `θ`.
    pub fn train_loss(&self) -> Result<f64> {
        let theta = &self.server.theta;
        let losses = self.executor.try_map(&self.problems, |p| p.loss(theta))?;
        Ok(losses.iter().sum::<f64>() / losses.len() as f64)
    }

    /// Held-out accuracy at `θ`; `None` for sample-free objectives.
    pub fn test_accuracy(&self) -> Option<f64> {
        self.eval.as_ref().and_then(|(obj, test)| obj.accuracy(&self.server.theta, test))
    }

    /// Executes the next round and returns its record.
    pub fn run_round(&mut self) -> Result<RoundRecord> {
        let started = Instant::now();
        let cfg = &self.config;
        let m = cfg.clients;
        let round = self.server.round + 1;
        let active = sample_clients(m, cfg.participation, cfg.sampling, &mut stream(cfg.seed, Purpose::Sampling, round as u64, 0));

        self.server.rho = cfg.rho_schedule.value_at(round).unwrap_or(cfg.rho);
        cfg.strategy.validate_rho(self.server.rho)?;
        self.server.eta = cfg.eta_schedule.value_at(round).unwrap_or(match cfg.eta {
            ServerStep::Fixed(eta) => eta,
            ServerStep::Participation => active.len().max(1) as f64 / m as f64,
        });

        let v_t = match self.verifier {
            Some(_) => Some(optimality_gap_v(&self.problems, &self.clients, &self.server)?),
            None => None,
        };

        let strategy: &Strategy = &cfg.strategy;
        let heterogeneous = cfg.heterogeneous && strategy.kind.heterogeneous_epochs();
        let (seed, problems, clients, server) = (cfg.seed, &self.problems, &self.clients, &self.server);
        let results = self.executor.try_map(&active, |&id| {
            let epochs = draw_local_epochs(cfg.epochs, heterogeneous, &mut stream(seed, Purpose::Epochs, round as u64, id as u64));
            let mut rng = stream(seed, Purpose::Batches, round as u64, id as u64);
            local_step(strategy, &problems[id], &clients[id], server, epochs, &mut rng)
        })?;
        let (updated, messages): (Vec<ClientState>, Vec<_>) = results.into_iter().unzip();
        let next_server = aggregate(strategy, &self.server, &messages, m)?;

        let mut checks = CheckFlags::default();
        let mut lemma_terms = None;
        if let Some(v) = self.verifier.as_mut() {
            let (l, rho) = (v.diag.lipschitz, self.server.rho);
            let residuals = self.executor.try_map(&updated, |after| {
                let before = &self.clients[after.id];
                inexactness_residual(&self.problems[after.id], &after.w, &before.y, &self.server.theta, rho)
            })?;
            let mut lemma1 = true;
            let mut lemma2_rhs = 0.0;
            for (after, res) in updated.iter().zip(&residuals) {
                let before = &self.clients[after.id];
                let eps = &mut v.eps[after.id];
                *eps = eps.max(*res);
                let dy = after.y.distance_sq(&before.y);
                let dw = after.w.distance_sq(&before.w);
                let rhs = 8.0 * *eps + 2.0 * l * l * dw;
                lemma1 &= holds(dy, rhs, dy.abs() + rhs.abs());
                lemma2_rhs += ((2.0 * l - rho) / 2.0 + 2.0 * l * l / rho) * dw + *eps / (2.0 * l) + 8.0 * *eps / rho;
            }
            lemma2_rhs -= m as f64 * rho / 2.0 * next_server.theta.distance_sq(&self.server.theta);
            v.diag.eps_max = v.eps.iter().copied().fold(0.0, f64::max);
            if v.lemma1 {
                checks.lemma1 = Some(active.is_empty() || lemma1);
            }
            lemma_terms = Some(lemma2_rhs);
        }

        for after in updated {
            let id = after.id;
            self.clients[id] = after;
        }
        self.server = next_server;

        let lagrangian = match self.verifier {
            Some(_) => Some(aggregate_lagrangian(&self.problems, &self.clients, &self.server)?),
            None => None,
        };
        if let (Some(v), Some(l_next), Some(lemma2_rhs), Some(v_t)) = (self.verifier.as_mut(), lagrangian, lemma_terms, v_t) {
            let rho = self.server.rho;
            if v.tracking {
                let mean = ParamVector::sum(self.server.theta.dim(), self.clients.iter().map(|c| c.augmented(rho)).collect::<Vec<_>>().iter())
                    .scale(1.0 / m as f64);
                let gap = mean.iter().zip(self.server.theta.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                checks.tracking = Some(gap <= TRACKING_TOLERANCE);
                checks.tracking_gap = Some(gap);
            }
            if v.lemma2 {
                let lhs = l_next - v.lagrangian;
                checks.lemma2 = Some(holds(lhs, lemma2_rhs, l_next.abs() + v.lagrangian.abs() + lemma2_rhs.abs()));
            }
            if v.lemma3 {
                let (l, f_star) = (v.diag.lipschitz, v.diag.f_star.unwrap_or(f64::NEG_INFINITY));
                let floor = f_star - v.eps.iter().sum::<f64>() / (2.0 * l);
                checks.lemma3 = Some(holds(floor, l_next, floor.abs() + l_next.abs()));
            }
            v.v_sum += v_t;
            if let Some(c) = v.theorem.as_mut() {
                c.eps_max = v.diag.eps_max;
                let bound = c.bound(v.diag.lagrangian0, v.diag.f_star.unwrap_or(0.0), m, round);
                let empirical = v.v_sum / (m * round) as f64;
                checks.theorem1 = Some(holds(empirical, bound, empirical.abs() + bound.abs()));
            }
            checks.eps_max = Some(v.diag.eps_max);
            v.lagrangian = l_next;
        }

        let (up, down) = message_bytes(strategy.kind, self.dim());
        let bytes_up = (up * active.len()) as u64;
        let bytes_down = (down * active.len()) as u64;
        self.bytes_up_cum += bytes_up;
        self.bytes_down_cum += bytes_down;

        let train_loss = self.train_loss()?;
        let test_acc = self.test_accuracy();
        let wall_ms = self.config.record_wall_time.then(|| started.elapsed().as_secs_f64() * 1e3);
        Ok(RoundRecord {
            round,
            skipped: active.is_empty(),
            active,
            train_loss,
            test_acc,
            v_t,
            lagrangian,
            bytes_up,
            bytes_down,
            bytes_up_cum: self.bytes_up_cum,
            bytes_down_cum: self.bytes_down_cum,
            wall_ms,
            checks,
        })
    }
}
