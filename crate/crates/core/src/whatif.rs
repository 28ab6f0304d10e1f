//! Baseline-versus-scenario comparisons: re-verify the same workload under a
//! changed cluster configuration and report how the predicted failure rate moves.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{breakdown, failure_pct, predict, FailureBreakdown};
use crate::checker::{explore, verify, Budget, CheckError, GoalExpr, Strategy, Verdict, Visit};
use crate::config::{settings, ClusterConfig, ConfigError, SchedulerKind};
use crate::model::{build_cluster, FailureCause, ModelError, Phase};
use crate::trace::WorkloadTrace;

#[derive(Debug, Error)]
pub enum WhatIfError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("a sweep needs at least two values")]
    TooFewValues,
    #[error("unknown sweep dimension `{0}` (expected nodes, slots, timeout, scheduler, max_queue or queue_timeout)")]
    UnknownDimension(String),
}

/// A named set of config overrides applied on top of a base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub delta: Vec<(String, String)>,
}

impl Scenario {
    pub fn identity() -> Scenario {
        Scenario { label: "identity".into(), delta: Vec::new() }
    }

    pub fn new(label: impl Into<String>, delta: &[(&str, &str)]) -> Scenario {
        Scenario { label: label.into(), delta: delta.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect() }
    }

    /// Reads a `key = value` override document; an optional `label` line names it.
    pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
        let mut label = "scenario".to_string();
        let mut delta = Vec::new();
        let mut probe = ClusterConfig::default();
        for (k, v, line) in settings(text)? {
            if k == "label" {
                label = v;
                continue;
            }
            probe.set(&k, &v).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line, key },
                e => e,
            })?;
            delta.push((k, v));
        }
        Ok(Scenario { label, delta })
    }

    pub fn apply(&self, base: &ClusterConfig) -> Result<ClusterConfig, ConfigError> {
        let mut cfg = base.clone();
        for (k, v) in &self.delta {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One verification run and the outcome its witness predicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub config: ClusterConfig,
    pub verdict: Verdict,
    pub states_explored: u64,
    /// Absent when the leg ran out of budget.
    pub failure_pct: Option<f64>,
    pub failed: Option<u64>,
    pub breakdown: Option<FailureBreakdown>,
}

impl Leg {
    pub fn queue_wait_failures(&self) -> Option<u64> {
        self.breakdown.as_ref().map(|b| b.counts.get(&FailureCause::QueueWait).copied().unwrap_or(0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub absolute_reduction_pts: f64,
    /// `100 * absolute / baseline`; absent when the baseline is zero.
    pub reduction_rate_pct: Option<f64>,
}

impl Reduction {
    pub fn between(baseline_pct: f64, scenario_pct: f64) -> Reduction {
        let absolute_reduction_pts = baseline_pct - scenario_pct;
        Reduction {
            absolute_reduction_pts,
            reduction_rate_pct: (baseline_pct > 0.0).then(|| 100.0 * absolute_reduction_pts / baseline_pct),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub label: String,
    pub scheduler: SchedulerKind,
    pub baseline: Leg,
    pub scenario: Leg,
    /// Absent when either leg is inconclusive.
    pub reduction: Option<Reduction>,
}

pub struct WhatIf<'a> {
    pub workload: &'a WorkloadTrace,
    pub goal: &'a GoalExpr,
    pub strategy: Strategy,
    pub budget: Budget,
}

impl WhatIf<'_> {
    /// Verifies the goal under `cfg` and predicts outcomes from the witness,
    /// or from the first-successor path when the goal is unreachable.
    pub fn leg(&self, cfg: &ClusterConfig) -> Result<Leg, WhatIfError> {
        let init = build_cluster(cfg, self.workload)?;
        let r = verify(&init, self.goal, self.strategy, &self.budget)?;
        let mut leg = Leg {
            config: cfg.clone(),
            verdict: r.verdict,
            states_explored: r.states_explored,
            failure_pct: None,
            failed: None,
            breakdown: None,
        };
        if r.verdict != Verdict::Inconclusive {
            let ps = predict(&init, r.witness.as_ref())?;
            let b = breakdown(&ps);
            leg.failure_pct = Some(failure_pct(&ps));
            leg.failed = Some(b.predicted_failed);
            leg.breakdown = Some(b);
        }
        Ok(leg)
    }

    /// Runs the scenario against `base` once per scheduler (or once with the
    /// base scheduler when `schedulers` is empty).
    pub fn run(
        &self,
        base: &ClusterConfig,
        scenario: &Scenario,
        schedulers: &[SchedulerKind],
    ) -> Result<Vec<ComparisonReport>, WhatIfError> {
        let kinds = if schedulers.is_empty() { vec![base.scheduler] } else { schedulers.to_vec() };
        let mut out = Vec::with_capacity(kinds.len());
        for kind in kinds {
            let b = ClusterConfig { scheduler: kind, ..base.clone() };
            let s = scenario.apply(&b)?;
            out.push(self.compare(&scenario.label, &b, &s)?);
        }
        Ok(out)
    }

    fn compare(&self, label: &str, base: &ClusterConfig, scenario: &ClusterConfig) -> Result<ComparisonReport, WhatIfError> {
        let baseline = self.leg(base)?;
        let scenario = if scenario == base { baseline.clone() } else { self.leg(scenario)? };
        let reduction = match (baseline.failure_pct, scenario.failure_pct) {
            (Some(b), Some(s)) => Some(Reduction::between(b, s)),
            _ => None,
        };
        Ok(ComparisonReport { label: label.to_string(), scheduler: base.scheduler, baseline, scenario, reduction })
    }

    /// One report per value of `dimension`, each against `base`, in the given order.
    pub fn sweep(
        &self,
        base: &ClusterConfig,
        dimension: Dimension,
        values: &[String],
    ) -> Result<Vec<ComparisonReport>, WhatIfError> {
        if values.len() < 2 {
            return Err(WhatIfError::TooFewValues);
        }
        let mut out = Vec::with_capacity(values.len());
        for v in values {
            let scenario = Scenario {
                label: format!("{}={v}", dimension.key()),
                delta: vec![(dimension.key().to_string(), v.clone())],
            };
            let s = scenario.apply(base)?;
            out.push(self.compare(&scenario.label, base, &s)?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Nodes,
    Slots,
    Timeout,
    Scheduler,
    MaxQueue,
    QueueTimeout,
}

impl Dimension {
    pub fn key(self) -> &'static str {
        match self {
            Dimension::Nodes => "node_count",
            Dimension::Slots => "slots_per_node",
            Dimension::Timeout => "task_timeout_ms",
            Dimension::Scheduler => "scheduler",
            Dimension::MaxQueue => "max_queue",
            Dimension::QueueTimeout => "queue_timeout_ms",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for Dimension {
    type Err = WhatIfError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "nodes" | "node_count" => Dimension::Nodes,
            "slots" | "slots_per_node" => Dimension::Slots,
            "timeout" | "task_timeout_ms" => Dimension::Timeout,
            "scheduler" => Dimension::Scheduler,
            "max_queue" => Dimension::MaxQueue,
            "queue_timeout" | "queue_timeout_ms" => Dimension::QueueTimeout,
            other => return Err(WhatIfError::UnknownDimension(other.to_string())),
        })
    }
}

/// Smallest and largest failure percentage over every reachable dead end.
/// `None` when the budget ran out before the space was covered.
pub fn failure_range(
    cfg: &ClusterConfig,
    workload: &WorkloadTrace,
    strategy: Strategy,
    budget: &Budget,
) -> Result<Option<(f64, f64)>, WhatIfError> {
    let init = build_cluster(cfg, workload)?;
    let (mut lo, mut hi) = (usize::MAX, 0);
    let ex = explore(&init, strategy, budget, |s, deadend| {
        if deadend {
            let failed = s
                .originals()
                .iter()
                .filter(|t| !matches!(t.phase, Phase::FinishedWithinDeadline | Phase::FinishedAfterDeadline))
                .count();
            lo = lo.min(failed);
            hi = hi.max(failed);
        }
        Visit::Continue
    })?;
    if !ex.exhausted() || lo == usize::MAX {
        return Ok(None);
    }
    let pct = |n: usize| 100.0 * n as f64 / workload.len() as f64;
    Ok(Some((pct(lo), pct(hi))))
}
