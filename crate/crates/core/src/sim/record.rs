//! Per-round output records.

use serde::{Deserialize, Serialize};

/// Outcome of the runtime analysis checks for one round. `None` means the
/// check does not apply to this configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckFlags {
    pub tracking: Option<bool>,
    /// `‖θ − (1/m) Σ_i (w_i + y_i/ρ)‖_∞` after the round.
    pub tracking_gap: Option<f64>,
    pub lemma1: Option<bool>,
    pub lemma2: Option<bool>,
    pub lemma3: Option<bool>,
    pub theorem1: Option<bool>,
    /// Largest measured local residual so far.
    pub eps_max: Option<f64>,
}

impl CheckFlags {
    /// No applicable check failed.
    pub fn all_hold(&self) -> bool {
        [self.tracking, self.lemma1, self.lemma2, self.lemma3, self.theorem1]
            .iter()
            .all(|f| f.unwrap_or(true))
    }
}

/// One line of `rounds.jsonl`. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based.
    pub round: usize,
    pub active: Vec<usize>,
    /// Set when the sampler drew no clients.
    pub skipped: bool,
    /// Mean over clients of the local loss at the new global model.
    pub train_loss: f64,
    pub test_acc: Option<f64>,
    /// Optimality gap at the state entering this round.
    pub v_t: Option<f64>,
    /// Aggregate augmented Lagrangian after the round.
    pub lagrangian: Option<f64>,
    pub bytes_up: u64,
    pub bytes_down: u64,
    pub bytes_up_cum: u64,
    pub bytes_down_cum: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    pub checks: CheckFlags,
}

/// Outcome of [`rounds_to_target`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundsToTarget {
    Reached(usize),
    /// Not reached within the given number of rounds; shown as `T+`.
    NotReached(usize),
}

impl RoundsToTarget {
    pub fn reached(self) -> Option<usize> {
        match self {
            RoundsToTarget::Reached(r) => Some(r),
            RoundsToTarget::NotReached(_) => None,
        }
    }
}

impl std::fmt::Display for RoundsToTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RoundsToTarget::Reached(r) => write!(f, "{r}"),
            RoundsToTarget::NotReached(t) => write!(f, "{t}+"),
        }
    }
}

/// First 1-based round whose test accuracy is at least `target`.
pub fn rounds_to_target(records: &[RoundRecord], target: f64) -> RoundsToTarget {
    records
        .iter()
        .find(|r| r.test_acc.is_some_and(|a| a >= target))
        .map(|r| RoundsToTarget::Reached(r.round))
        .unwrap_or_else(|| RoundsToTarget::NotReached(records.last().map_or(0, |r| r.round)))
}
