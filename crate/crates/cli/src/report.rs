//! The JSON run report and the human-readable tables printed next to it.

use std::fmt::Write as _;

use schedcheck_core::analysis::{ConfusionMatrix, DetectedFailures, FailureBreakdown};
use schedcheck_core::checker::{Strategy, Verdict, VerificationResult};
use schedcheck_core::config::ClusterConfig;
use schedcheck_core::trace::TraceStats;
use schedcheck_core::whatif::ComparisonReport;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub config: Option<ClusterConfig>,
    pub trace: Option<TraceSummary>,
    pub strategy: Option<Strategy>,
    pub results: Vec<VerificationResult>,
    pub analysis: Option<AnalysisSection>,
    pub comparisons: Vec<ComparisonReport>,
    /// Failure percentage range over all dead ends, per compared config.
    pub exhaustive: Vec<ExhaustiveRange>,
    pub totals: Totals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub files: Vec<String>,
    pub stats: TraceStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSection {
    pub property: String,
    pub failure_pct: f64,
    pub matrix: ConfusionMatrix,
    /// Absent when the trace has no failed tasks.
    pub detected_failures: Option<DetectedFailures>,
    pub breakdown: FailureBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveRange {
    pub label: String,
    /// Absent when the budget ran out first.
    pub min_failure_pct: Option<f64>,
    pub max_failure_pct: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub states_explored: u64,
    pub transitions: u64,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn new(command: &str) -> RunReport {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: None,
            trace: None,
            strategy: None,
            results: Vec::new(),
            analysis: None,
            comparisons: Vec::new(),
            exhaustive: Vec::new(),
            totals: Totals::default(),
        }
    }

    pub fn push_result(&mut self, r: VerificationResult) {
        self.totals.states_explored += r.states_explored;
        self.totals.transitions += r.transitions;
        self.totals.wall_time_ms += r.wall_time_ms;
        self.results.push(r);
    }

    /// 1 if any property is invalid, else 2 if any verification or what-if leg
    /// ran out of budget, else 0.
    pub fn exit_code(&self) -> i32 {
        let invalid = self.results.iter().any(|r| r.verdict == Verdict::Invalid);
        let inconclusive = self.results.iter().any(|r| r.verdict == Verdict::Inconclusive)
            || self
                .comparisons
                .iter()
                .any(|c| c.baseline.verdict == Verdict::Inconclusive || c.scenario.verdict == Verdict::Inconclusive);
        if invalid {
            1
        } else if inconclusive {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<RunReport> {
        serde_json::from_str(text)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.results.is_empty() {
            let width = self.results.iter().map(|r| r.property.len()).max().unwrap_or(0).max(8);
            let _ = writeln!(out, "{:<width$}  {:>6}  {:>10}  {:>9}", "Property", "Valid?", "#States", "Time(s)");
            for r in &self.results {
                let valid = match r.verdict {
                    Verdict::Valid => "true",
                    Verdict::Invalid => "false",
                    Verdict::Inconclusive => "?",
                };
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>6}  {:>10}  {:>9.3}",
                    r.property,
                    valid,
                    r.states_explored,
                    r.wall_time_ms / 1000.0
                );
            }
            if let Some(s) = self.strategy {
                let _ = writeln!(out, "strategy: {s}");
            }
        }
        if let Some(a) = &self.analysis {
            let m = &a.matrix;
            let _ = writeln!(out, "\n{:>7}  {:>7}  {:>7}  {:>7}  {:>7}", "TP", "TN", "FP", "FN", "DF");
            let df = a.detected_failures.map_or_else(|| "-".to_string(), |d| format!("{:.2}", d.df_pct));
            let _ = writeln!(out, "{:>7.2}  {:>7.2}  {:>7.2}  {:>7.2}  {:>7}", m.tp_pct, m.tn_pct, m.fp_pct, m.fn_pct, df);
            let b = &a.breakdown;
            let _ = writeln!(
                out,
                "failed {:.2}%: timeout {:.2}  speculative {:.2}  cascade {:.2}  queuewait {:.2}  residual {:.2}  stragglers {}",
                a.failure_pct,
                b.timeout_pct,
                b.speculative_pct,
                b.cascade_pct,
                b.queuewait_pct,
                b.residual_pct,
                b.stragglers
            );
        }
        if !self.comparisons.is_empty() {
            let _ = writeln!(
                out,
                "\n{:<24}  {:<9}  {:>9}  {:>9}  {:>10}  {:>8}",
                "Scenario", "Scheduler", "Base(%)", "Scen(%)", "Red.(pts)", "Rate(%)"
            );
            let opt = |v: Option<f64>| v.map_or_else(|| "?".to_string(), |v| format!("{v:.2}"));
            for c in &self.comparisons {
                let _ = writeln!(
                    out,
                    "{:<24}  {:<9}  {:>9}  {:>9}  {:>10}  {:>8}",
                    c.label,
                    c.scheduler.name().to_ascii_lowercase(),
                    opt(c.baseline.failure_pct),
                    opt(c.scenario.failure_pct),
                    opt(c.reduction.map(|r| r.absolute_reduction_pts)),
                    opt(c.reduction.and_then(|r| r.reduction_rate_pct))
                );
            }
        }
        for e in &self.exhaustive {
            let opt = |v: Option<f64>| v.map_or_else(|| "?".to_string(), |v| format!("{v:.2}"));
            let _ = writeln!(
                out,
                "{}: failure range {}..{} %",
                e.label,
                opt(e.min_failure_pct),
                opt(e.max_failure_pct)
            );
        }
        out
    }
}
