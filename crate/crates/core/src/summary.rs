//! Cross-run comparison tables.
//!
//! Runs are grouped by strategy. Each group reports the median
//! rounds-to-target over runs that reached the target; runs that never did
//! are listed as `T+` and left out of the median.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::baselines::StrategyKind;
use crate::error::{Error, Result};
use crate::sim::{rounds_to_target, RoundsToTarget, RunArtifact};

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRow {
    pub strategy: StrategyKind,
    /// Per-run outcome, in input order.
    pub outcomes: Vec<RoundsToTarget>,
    /// Median over reached runs; `None` when no run reached the target.
    pub median: Option<f64>,
    /// `reference median / median`.
    pub speedup: Option<f64>,
    /// `1 − median / best other-baseline median`, as a fraction.
    pub reduction: Option<f64>,
}

impl StrategyRow {
    pub fn excluded(&self) -> usize {
        self.outcomes.iter().filter(|o| o.reached().is_none()).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub target: f64,
    pub reference: StrategyKind,
    pub rows: Vec<StrategyRow>,
}

pub fn median(values: &[usize]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_unstable();
    let n = v.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(v[n / 2] as f64),
        _ => Some((v[n / 2 - 1] + v[n / 2]) as f64 / 2.0),
    }
}

/// Target accuracy shared by `runs`, for when none is given explicitly.
pub fn common_target(runs: &[RunArtifact]) -> Result<f64> {
    let mut targets = runs.iter().map(|r| r.config.target_accuracy);
    let first = targets
        .next()
        .flatten()
        .ok_or_else(|| Error::Config("no target accuracy given and the runs do not record one".into()))?;
    if targets.any(|t| t != Some(first)) {
        return Err(Error::Config("runs record different target accuracies; pass one explicitly".into()));
    }
    Ok(first)
}

/// Pure function of the run records.
pub fn summarize(runs: &[RunArtifact], target: f64, reference: StrategyKind) -> Summary {
    let mut groups: BTreeMap<StrategyKind, Vec<RoundsToTarget>> = BTreeMap::new();
    for run in runs {
        groups
            .entry(run.config.strategy.kind)
            .or_default()
            .push(rounds_to_target(&run.records, target));
    }
    let medians: BTreeMap<StrategyKind, Option<f64>> = groups
        .iter()
        .map(|(k, o)| (*k, median(&o.iter().filter_map(|r| r.reached()).collect::<Vec<_>>())))
        .collect();
    let reference_median = medians.get(&reference).copied().flatten();
    let multi = groups.len() >= 2;
    let rows = groups
        .into_iter()
        .map(|(kind, outcomes)| {
            let median = medians[&kind];
            let best_other = medians
                .iter()
                .filter(|(k, _)| **k != kind && **k != StrategyKind::FedAdmm)
                .filter_map(|(_, m)| *m)
                .fold(None, |acc: Option<f64>, m| Some(acc.map_or(m, |a| a.min(m))));
            StrategyRow {
                strategy: kind,
                outcomes,
                median,
                speedup: reference_median.zip(median).map(|(r, m)| r / m),
                reduction: if multi { best_other.zip(median).map(|(b, m)| 1.0 - m / b) } else { None },
            }
        })
        .collect();
    Summary { target, reference, rows }
}

fn fmt_median(m: Option<f64>, outcomes: &[RoundsToTarget]) -> String {
    match m {
        Some(v) if v.fract() == 0.0 => format!("{v:.0}"),
        Some(v) => format!("{v:.1}"),
        None => outcomes.first().map_or("-".into(), |o| o.to_string()),
    }
}

impl Summary {
    fn show_reduction(&self) -> bool {
        self.rows.len() >= 2
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "target accuracy {:.4}, speedup relative to {}", self.target, self.reference);
        let mut header = format!("{:<10} {:>6} {:>8} {:>9}", "strategy", "runs", "median", "speedup");
        if self.show_reduction() {
            header.push_str(&format!(" {:>10}", "reduction"));
        }
        let _ = writeln!(out, "{header}");
        let mut footnotes = Vec::new();
        for row in &self.rows {
            let mut median = fmt_median(row.median, &row.outcomes);
            if row.excluded() > 0 && row.median.is_some() {
                median.push('*');
                footnotes.push(format!(
                    "* {}: {} of {} runs did not reach the target and are excluded from the median",
                    row.strategy,
                    row.excluded(),
                    row.outcomes.len()
                ));
            }
            let speedup = row.speedup.map_or("-".into(), |s| format!("{s:.1}×"));
            let mut line = format!("{:<10} {:>6} {:>8} {:>9}", row.strategy.name(), row.outcomes.len(), median, speedup);
            if self.show_reduction() {
                line.push_str(&format!(" {:>10}", row.reduction.map_or("-".into(), |r| format!("{:.1}%", 100.0 * r))));
            }
            let _ = writeln!(out, "{}", line.trim_end());
        }
        for f in footnotes {
            let _ = writeln!(out, "{f}");
        }
        out
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("strategy,runs,reached,median_rounds,speedup,reduction_pct,rounds\n");
        for row in &self.rows {
            let rounds = row.outcomes.iter().map(ToString::to_string).collect::<Vec<_>>().join(";");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.strategy,
                row.outcomes.len(),
                row.outcomes.len() - row.excluded(),
                row.median.map_or(String::new(), |m| m.to_string()),
                row.speedup.map_or(String::new(), |s| format!("{s:.4}")),
                if self.show_reduction() { row.reduction.map_or(String::new(), |r| format!("{:.4}", 100.0 * r)) } else { String::new() },
                rounds
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::path::PathBuf;

    use super::*;
    use crate::sim::{CheckFlags, ExperimentConfig, RoundRecord};

    fn run(kind: &str, seed: u64, reach: Option<usize>, rounds: usize) -> RunArtifact {
        let config = ExperimentConfig::from_pairs([("strategy", kind.to_string()), ("seed", seed.to_string())]).unwrap();
        let records = (1..=rounds)
            .map(|t| RoundRecord {
                round: t,
                active: vec![],
                skipped: false,
                train_loss: 0.0,
                test_acc: Some(if reach.is_some_and(|r| t >= r) { 0.9 } else { 0.1 }),
                v_t: None,
                lagrangian: None,
                bytes_up: 0,
                bytes_down: 0,
                bytes_up_cum: 0,
                bytes_down_cum: 0,
                wall_ms: None,
                checks: CheckFlags::default(),
            })
            .collect();
        RunArtifact {
            dir: PathBuf::new(),
            config,
            records,
        }
    }

    #[test]
    fn speedup_against_reference() {
        let runs = vec![run("fedsgd", 0, Some(297), 300), run("fedadmm", 0, Some(10), 300)];
        let s = summarize(&runs, 0.5, StrategyKind::FedSgd);
        let admm = s.rows.iter().find(|r| r.strategy == StrategyKind::FedAdmm).unwrap();
        assert_eq!(format!("{:.1}×", admm.speedup.unwrap()), "29.7×");
        assert!(s.table().contains("29.7×"));
        assert!((admm.reduction.unwrap() - (1.0 - 10.0 / 297.0)).abs() < 1e-12);
    }

    #[test]
    fn single_run_has_no_reduction_column() {
        let s = summarize(&[run("fedavg", 0, Some(4), 10)], 0.5, StrategyKind::FedSgd);
        assert_eq!(s.rows.len(), 1);
        assert!(!s.table().contains("reduction"));
        assert_eq!(s.rows[0].speedup, None);
    }

    #[test]
    fn sentinels_are_excluded_with_footnote() {
        let runs = vec![
            run("fedavg", 0, Some(20), 100),
            run("fedavg", 1, None, 100),
            run("fedavg", 2, Some(30), 100),
            run("fedprox", 0, None, 100),
        ];
        let s = summarize(&runs, 0.5, StrategyKind::FedAvg);
        let avg = &s.rows[0];
        assert_eq!(avg.median, Some(25.0));
        assert_eq!(avg.excluded(), 1);
        let table = s.table();
        assert!(table.contains("25*"), "{table}");
        assert!(table.contains("1 of 3 runs"), "{table}");
        assert!(table.contains("100+"), "{table}");
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3, 1, 2]), Some(2.0));
        assert_eq!(median(&[4, 1, 2, 3]), Some(2.5));
    }
}
