//! Flat `key = value` experiment configuration.
//!
//! Files hold one `key = value` pair per line; `#` starts a comment and a
//! `[section]` line prefixes the keys below it with `section.`. Every key has
//! a default, unknown keys are rejected, and [`ExperimentConfig::echo`] writes
//! the fully resolved configuration back in the same format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::baselines::{LocalSolver, Strategy, StrategyKind, WarmStart};
use crate::data::PartitionScheme;
use crate::error::{Error, Result};

/// Known keys and their defaults, in echo order. `auto` resolves per strategy.
const KEYS: &[(&str, &str)] = &[
    ("strategy", "fedadmm"),
    ("strategy.rho", "auto"),
    ("strategy.eta", "1"),
    ("strategy.server_lr", "auto"),
    ("strategy.local_solver", "sgd"),
    ("strategy.freeze_dual", "false"),
    ("strategy.warm_start", "local"),
    ("strategy.freeze_controls", "false"),
    ("client.lr", "0.1"),
    ("client.epochs", "5"),
    ("client.batch_size", "50"),
    ("client.heterogeneous", "true"),
    ("clients", "100"),
    ("participation", "0.1"),
    ("sampling.scheme", "uniform"),
    ("rounds", "100"),
    ("seed", "0"),
    ("target_accuracy", "none"),
    ("early_stop", "false"),
    ("workers", "1"),
    ("data.kind", "synthetic"),
    ("data.seed", "0"),
    ("data.classes", "10"),
    ("data.per_class", "1000"),
    ("data.dim", "50"),
    ("data.separation", "3"),
    ("data.test_fraction", "0.2"),
    ("data.train_images", ""),
    ("data.train_labels", ""),
    ("data.test_images", ""),
    ("data.test_labels", ""),
    ("data.cifar_train", ""),
    ("data.cifar_test", ""),
    ("quadratic.dim", "5"),
    ("quadratic.curvature_min", "0.1"),
    ("quadratic.curvature_max", "1"),
    ("quadratic.center_scale", "5"),
    ("quadratic.diagonal", "false"),
    ("partition.scheme", "shards"),
    ("partition.shards_per_client", "2"),
    ("partition.total_shards", "10000"),
    ("partition.group_size", "2"),
    ("model.kind", "logistic"),
    ("model.hidden", "32"),
    ("model.declared_l", "10"),
    ("model.lambda", "0"),
    ("model.init_scale", "0.01"),
    ("verify.enabled", "false"),
    ("verify.theorem", "false"),
    ("schedule.eta", ""),
    ("schedule.rho", ""),
    ("output.record_wall_time", "false"),
];

/// Server step size for FedADMM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServerStep {
    Fixed(f64),
    /// `η = |S^t| / m`, the step size the convergence analysis assumes.
    Participation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingScheme {
    /// `⌈C m⌉` distinct clients uniformly without replacement.
    Uniform,
    /// Each client independently with probability `C`.
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Synthetic {
        classes: usize,
        per_class: usize,
        dim: usize,
        separation: f64,
    },
    Quadratic {
        dim: usize,
        curvature_min: f64,
        curvature_max: f64,
        center_scale: f64,
        diagonal: bool,
    },
    Idx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
    },
    Cifar {
        train: Vec<PathBuf>,
        test: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Logistic,
    SmallNet,
}

/// Step function keyed by round: the value of the last entry whose round is
/// ≤ the current round applies.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Schedule(Vec<(usize, f64)>);

impl Schedule {
    pub fn new(mut points: Vec<(usize, f64)>) -> Self {
        points.sort_by_key(|p| p.0);
        Schedule(points)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn value_at(&self, round: usize) -> Option<f64> {
        self.0.iter().rev().find(|(r, _)| *r <= round).map(|p| p.1)
    }

    fn parse(key: &str, raw: &str) -> Result<Self> {
        if raw.trim().is_empty() {
            return Ok(Schedule::default());
        }
        let points = raw
            .split(',')
            .map(|item| {
                let (r, v) = item.split_once(':').ok_or_else(|| mismatch(key, "round:value list", raw))?;
                Ok((
                    r.trim().parse().map_err(|_| mismatch(key, "round:value list", raw))?,
                    v.trim().parse().map_err(|_| mismatch(key, "round:value list", raw))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Schedule::new(points))
    }

    fn render(&self) -> String {
        self.0.iter().map(|(r, v)| format!("{r}:{v}")).collect::<Vec<_>>().join(",")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub rho: f64,
    pub eta: ServerStep,
    pub client_lr: f64,
    pub epochs: usize,
    /// `None` is full-batch.
    pub batch_size: Option<usize>,
    pub heterogeneous: bool,
    pub clients: usize,
    pub participation: f64,
    pub sampling: SamplingScheme,
    pub rounds: usize,
    pub seed: u64,
    pub target_accuracy: Option<f64>,
    pub early_stop: bool,
    pub workers: usize,
    pub data: DataSource,
    pub data_seed: u64,
    pub test_fraction: f64,
    pub partition: PartitionScheme,
    pub shards_per_client: usize,
    pub total_shards: usize,
    pub group_size: usize,
    pub model: ModelKind,
    pub hidden: usize,
    pub declared_lipschitz: f64,
    pub lambda: f64,
    pub init_scale: f64,
    pub verify: bool,
    pub verify_theorem: bool,
    pub eta_schedule: Schedule,
    pub rho_schedule: Schedule,
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::from_pairs(std::iter::empty::<(String, String)>()).expect("defaults are valid")
    }
}

fn mismatch(key: &str, expected: &'static str, value: &str) -> Error {
    Error::TypeMismatch {
        key: key.to_string(),
        expected,
        value: value.to_string(),
    }
}

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn get(&self, key: &str) -> &str {
        self.0.get(key).map(String::as_str).unwrap_or("")
    }

    fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key);
        v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| mismatch(key, "a finite number", v))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key);
        v.parse().map_err(|_| mismatch(key, "a non-negative integer", v))
    }

    fn u64(&self, key: &str) -> Result<u64> {
        let v = self.get(key);
        v.parse().map_err(|_| mismatch(key, "a non-negative integer", v))
    }

    fn bool(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            "true" => Ok(true),
            "false" => Ok(false),
            v => Err(mismatch(key, "true or false", v)),
        }
    }

    fn path(&self, key: &str) -> PathBuf {
        PathBuf::from(self.get(key))
    }

    fn paths(&self, key: &str) -> Vec<PathBuf> {
        self.get(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
            .collect()
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Parses config text into ordered `(key, value)` pairs.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut section = String::new();
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        out.push((key, unquote(v).to_string()));
    }
    Ok(out)
}

/// Parses a `key=value` command-line override.
pub fn parse_override(text: &str) -> Result<(String, String)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{text}` is not of the form key=value")))?;
    Ok((k.trim().to_string(), unquote(v).to_string()))
}

impl ExperimentConfig {
    pub fn keys() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|k| k.0)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(parse_pairs(text)?)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[(String, String)]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut pairs = parse_pairs(&text)?;
        pairs.extend(overrides.iter().cloned());
        Self::from_pairs(pairs)
    }

    /// Defaults overlaid with `pairs` in order; later pairs win.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        let mut map: BTreeMap<String, String> = KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        for (k, v) in pairs {
            let k = k.into();
            if !map.contains_key(&k) {
                return Err(Error::UnknownKey(k));
            }
            map.insert(k, v.into());
        }
        let cfg = Self::from_raw(&Raw(map))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Returns a copy with `overrides` applied on top of this configuration.
    pub fn with_overrides<K: AsRef<str>, V: AsRef<str>>(&self, overrides: &[(K, V)]) -> Result<Self> {
        let mut pairs = self.to_pairs();
        for (k, v) in overrides {
            pairs.push((k.as_ref().to_string(), v.as_ref().to_string()));
        }
        Self::from_pairs(pairs)
    }

    fn from_raw(raw: &Raw) -> Result<Self> {
        let kind: StrategyKind = raw.get("strategy").parse().map_err(|_| mismatch("strategy", "fedsgd|fedavg|fedprox|scaffold|fedadmm", raw.get("strategy")))?;
        let mut strategy = Strategy::new(kind);
        strategy.server_lr = match raw.get("strategy.server_lr") {
            "auto" => strategy.server_lr,
            _ => raw.f64("strategy.server_lr")?,
        };
        strategy.local_solver = match raw.get("strategy.local_solver") {
            "sgd" => LocalSolver::Sgd,
            "exact" => LocalSolver::ExactQuadratic,
            v => return Err(mismatch("strategy.local_solver", "sgd or exact", v)),
        };
        strategy.freeze_dual = raw.bool("strategy.freeze_dual")?;
        strategy.warm_start = match raw.get("strategy.warm_start") {
            "local" => WarmStart::Local,
            "server" => WarmStart::Server,
            v => return Err(mismatch("strategy.warm_start", "local or server", v)),
        };
        strategy.freeze_controls = raw.bool("strategy.freeze_controls")?;

        let rho = match raw.get("strategy.rho") {
            "auto" => match kind {
                StrategyKind::FedAdmm => 0.01,
                StrategyKind::FedProx => 0.1,
                _ => 0.0,
            },
            _ => raw.f64("strategy.rho")?,
        };
        let eta = match raw.get("strategy.eta") {
            "participation" => ServerStep::Participation,
            _ => ServerStep::Fixed(raw.f64("strategy.eta").map_err(|_| mismatch("strategy.eta", "a number or `participation`", raw.get("strategy.eta")))?),
        };
        let batch_size = match raw.get("client.batch_size") {
            "full" => None,
            _ => Some(raw.usize("client.batch_size").map_err(|_| mismatch("client.batch_size", "an integer or `full`", raw.get("client.batch_size")))?),
        };
        let sampling = match raw.get("sampling.scheme") {
            "uniform" => SamplingScheme::Uniform,
            "bernoulli" => SamplingScheme::Bernoulli,
            v => return Err(mismatch("sampling.scheme", "uniform or bernoulli", v)),
        };
        let target_accuracy = match raw.get("target_accuracy") {
            "none" | "" => None,
            _ => Some(raw.f64("target_accuracy")?),
        };
        let data = match raw.get("data.kind") {
            "synthetic" => DataSource::Synthetic {
                classes: raw.usize("data.classes")?,
                per_class: raw.usize("data.per_class")?,
                dim: raw.usize("data.dim")?,
                separation: raw.f64("data.separation")?,
            },
            "quadratic" => DataSource::Quadratic {
                dim: raw.usize("quadratic.dim")?,
                curvature_min: raw.f64("quadratic.curvature_min")?,
                curvature_max: raw.f64("quadratic.curvature_max")?,
                center_scale: raw.f64("quadratic.center_scale")?,
                diagonal: raw.bool("quadratic.diagonal")?,
            },
            "idx" => DataSource::Idx {
                train_images: raw.path("data.train_images"),
                train_labels: raw.path("data.train_labels"),
                test_images: raw.path("data.test_images"),
                test_labels: raw.path("data.test_labels"),
            },
            "cifar" => DataSource::Cifar {
                train: raw.paths("data.cifar_train"),
                test: raw.paths("data.cifar_test"),
            },
            v => return Err(mismatch("data.kind", "synthetic|quadratic|idx|cifar", v)),
        };
        let partition = match raw.get("partition.scheme") {
            "iid" => PartitionScheme::Iid,
            "shards" => PartitionScheme::Shards,
            "imbalanced" => PartitionScheme::Imbalanced,
            v => return Err(mismatch("partition.scheme", "iid|shards|imbalanced", v)),
        };
        let model = match raw.get("model.kind") {
            "logistic" => ModelKind::Logistic,
            "smallnet" => ModelKind::SmallNet,
            v => return Err(mismatch("model.kind", "logistic or smallnet", v)),
        };

        Ok(ExperimentConfig {
            strategy,
            rho,
            eta,
            client_lr: raw.f64("client.lr")?,
            epochs: raw.usize("client.epochs")?,
            batch_size,
            heterogeneous: raw.bool("client.heterogeneous")?,
            clients: raw.usize("clients")?,
            participation: raw.f64("participation")?,
            sampling,
            rounds: raw.usize("rounds")?,
            seed: raw.u64("seed")?,
            target_accuracy,
            early_stop: raw.bool("early_stop")?,
            workers: raw.usize("workers")?,
            data,
            data_seed: raw.u64("data.seed")?,
            test_fraction: raw.f64("data.test_fraction")?,
            partition,
            shards_per_client: raw.usize("partition.shards_per_client")?,
            total_shards: raw.usize("partition.total_shards")?,
            group_size: raw.usize("partition.group_size")?,
            model,
            hidden: raw.usize("model.hidden")?,
            declared_lipschitz: raw.f64("model.declared_l")?,
            lambda: raw.f64("model.lambda")?,
            init_scale: raw.f64("model.init_scale")?,
            verify: raw.bool("verify.enabled")?,
            verify_theorem: raw.bool("verify.theorem")?,
            eta_schedule: Schedule::parse("schedule.eta", raw.get("schedule.eta"))?,
            rho_schedule: Schedule::parse("schedule.rho", raw.get("schedule.rho"))?,
            record_wall_time: raw.bool("output.record_wall_time")?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.participation > 0.0 && self.participation <= 1.0) {
            return fail(format!("participation C must lie in (0, 1], got {}", self.participation));
        }
        if self.rounds == 0 {
            return fail("rounds T must be ≥ 1".into());
        }
        if self.clients == 0 {
            return fail("clients m must be ≥ 1".into());
        }
        if self.epochs == 0 {
            return fail("client.epochs must be ≥ 1".into());
        }
        if !(self.client_lr > 0.0) {
            return fail(format!("client.lr must be > 0, got {}", self.client_lr));
        }
        if self.batch_size == Some(0) {
            return fail("client.batch_size must be ≥ 1 or `full`".into());
        }
        if self.workers == 0 {
            return fail("workers must be ≥ 1".into());
        }
        if let ServerStep::Fixed(eta) = self.eta {
            if !(eta > 0.0) {
                return fail(format!("strategy.eta must be > 0, got {eta}"));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail(format!("data.test_fraction must lie in (0, 1), got {}", self.test_fraction));
        }
        if let Some(t) = self.target_accuracy {
            if !(0.0..=1.0).contains(&t) {
                return fail(format!("target_accuracy must lie in [0, 1], got {t}"));
            }
        }
        if !(self.lambda >= 0.0) || !(self.init_scale >= 0.0) {
            return fail("model.lambda and model.init_scale must be ≥ 0".into());
        }
        if let DataSource::Quadratic { curvature_min, curvature_max, dim, .. } = self.data {
            if dim == 0 || !(curvature_min >= 0.0 && curvature_max >= curvature_min && curvature_max > 0.0) {
                return fail("quadratic ensemble needs dim ≥ 1 and 0 ≤ curvature_min ≤ curvature_max, curvature_max > 0".into());
            }
        }
        if self.strategy.local_solver == LocalSolver::ExactQuadratic
            && (self.strategy.kind != StrategyKind::FedAdmm || !matches!(self.data, DataSource::Quadratic { .. }))
        {
            return fail("strategy.local_solver = exact needs strategy = fedadmm and data.kind = quadratic".into());
        }
        self.strategy.validate_rho(self.rho)?;
        for (round, rho) in &self.rho_schedule.0 {
            self.strategy
                .validate_rho(*rho)
                .map_err(|e| Error::Config(format!("schedule.rho at round {round}: {e}")))?;
        }
        for (round, eta) in &self.eta_schedule.0 {
            if !(*eta > 0.0) {
                return fail(format!("schedule.eta at round {round} must be > 0"));
            }
        }
        Ok(())
    }

    /// Number of clients sampled per round under the uniform scheme.
    pub fn active_per_round(&self) -> usize {
        uniform_count(self.clients, self.participation)
    }

    /// Lower bound on any client's per-round participation probability.
    pub fn p_min(&self) -> f64 {
        match self.sampling {
            SamplingScheme::Uniform => self.active_per_round() as f64 / self.clients as f64,
            SamplingScheme::Bernoulli => self.participation,
        }
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let b = |v: bool| v.to_string();
        let mut m: BTreeMap<&str, String> = BTreeMap::new();
        m.insert("strategy", self.strategy.kind.name().into());
        m.insert("strategy.rho", self.rho.to_string());
        m.insert(
            "strategy.eta",
            match self.eta {
                ServerStep::Fixed(v) => v.to_string(),
                ServerStep::Participation => "participation".into(),
            },
        );
        m.insert("strategy.server_lr", self.strategy.server_lr.to_string());
        m.insert(
            "strategy.local_solver",
            match self.strategy.local_solver {
                LocalSolver::Sgd => "sgd",
                LocalSolver::ExactQuadratic => "exact",
            }
            .into(),
        );
        m.insert("strategy.freeze_dual", b(self.strategy.freeze_dual));
        m.insert(
            "strategy.warm_start",
            match self.strategy.warm_start {
                WarmStart::Local => "local",
                WarmStart::Server => "server",
            }
            .into(),
        );
        m.insert("strategy.freeze_controls", b(self.strategy.freeze_controls));
        m.insert("client.lr", self.client_lr.to_string());
        m.insert("client.epochs", self.epochs.to_string());
        m.insert("client.batch_size", self.batch_size.map_or("full".into(), |v| v.to_string()));
        m.insert("client.heterogeneous", b(self.heterogeneous));
        m.insert("clients", self.clients.to_string());
        m.insert("participation", self.participation.to_string());
        m.insert(
            "sampling.scheme",
            match self.sampling {
                SamplingScheme::Uniform => "uniform",
                SamplingScheme::Bernoulli => "bernoulli",
            }
            .into(),
        );
        m.insert("rounds", self.rounds.to_string());
        m.insert("seed", self.seed.to_string());
        m.insert("target_accuracy", self.target_accuracy.map_or("none".into(), |v| v.to_string()));
        m.insert("early_stop", b(self.early_stop));
        m.insert("workers", self.workers.to_string());
        m.insert("data.seed", self.data_seed.to_string());
        m.insert("data.test_fraction", self.test_fraction.to_string());
        // Unused data keys keep their defaults so the echo stays complete.
        for (k, v) in KEYS {
            if k.starts_with("data.") || k.starts_with("quadratic.") {
                m.entry(k).or_insert_with(|| v.to_string());
            }
        }
        match &self.data {
            DataSource::Synthetic { classes, per_class, dim, separation } => {
                m.insert("data.kind", "synthetic".into());
                m.insert("data.classes", classes.to_string());
                m.insert("data.per_class", per_class.to_string());
                m.insert("data.dim", dim.to_string());
                m.insert("data.separation", separation.to_string());
            }
            DataSource::Quadratic { dim, curvature_min, curvature_max, center_scale, diagonal } => {
                m.insert("data.kind", "quadratic".into());
                m.insert("quadratic.dim", dim.to_string());
                m.insert("quadratic.curvature_min", curvature_min.to_string());
                m.insert("quadratic.curvature_max", curvature_max.to_string());
                m.insert("quadratic.center_scale", center_scale.to_string());
                m.insert("quadratic.diagonal", b(*diagonal));
            }
            DataSource::Idx { train_images, train_labels, test_images, test_labels } => {
                m.insert("data.kind", "idx".into());
                m.insert("data.train_images", train_images.display().to_string());
                m.insert("data.train_labels", train_labels.display().to_string());
                m.insert("data.test_images", test_images.display().to_string());
                m.insert("data.test_labels", test_labels.display().to_string());
            }
            DataSource::Cifar { train, test } => {
                let join = |ps: &[PathBuf]| ps.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",");
                m.insert("data.kind", "cifar".into());
                m.insert("data.cifar_train", join(train));
                m.insert("data.cifar_test", join(test));
            }
        }
        m.insert(
            "partition.scheme",
            match self.partition {
                PartitionScheme::Iid => "iid",
                PartitionScheme::Shards => "shards",
                PartitionScheme::Imbalanced => "imbalanced",
            }
            .into(),
        );
        m.insert("partition.shards_per_client", self.shards_per_client.to_string());
        m.insert("partition.total_shards", self.total_shards.to_string());
        m.insert("partition.group_size", self.group_size.to_string());
        m.insert(
            "model.kind",
            match self.model {
                ModelKind::Logistic => "logistic",
                ModelKind::SmallNet => "smallnet",
            }
            .into(),
        );
        m.insert("model.hidden", self.hidden.to_string());
        m.insert("model.declared_l", self.declared_lipschitz.to_string());
        m.insert("model.lambda", self.lambda.to_string());
        m.insert("model.init_scale", self.init_scale.to_string());
        m.insert("verify.enabled", b(self.verify));
        m.insert("verify.theorem", b(self.verify_theorem));
        m.insert("schedule.eta", self.eta_schedule.render());
        m.insert("schedule.rho", self.rho_schedule.render());
        m.insert("output.record_wall_time", b(self.record_wall_time));
        KEYS.iter().map(|(k, _)| (k.to_string(), m.remove(k).unwrap_or_default())).collect()
    }

    /// Resolved configuration in the file format, one key per line.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_pairs() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// Short digest of the resolved configuration excluding the seed.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in self.to_pairs() {
            if k != "seed" && k != "workers" {
                hasher.update(k.as_bytes());
                hasher.update(b"=");
                hasher.update(v.as_bytes());
                hasher.update(b"\n");
            }
        }
        hasher.finalize().iter().take(6).map(|b| format!("{b:02x}")).collect()
    }

    /// Run directory name: `<strategy>-<config hash>-s<seed>`.
    pub fn run_name(&self) -> String {
        format!("{}-{}-s{}", self.strategy.kind, self.hash(), self.seed)
    }
}

pub(crate) fn uniform_count(clients: usize, participation: f64) -> usize {
    // Guard against products such as 0.7 · 10 = 7.000000000000001.
    (((clients as f64) * participation - 1e-9).ceil() as usize).clamp(1, clients)
}
