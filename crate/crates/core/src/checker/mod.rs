//! Explicit-state verification: reachability goals over rate metrics and
//! per-task phase assertions, explored depth first with or without symmetry
//! reduction over interchangeable nodes.

pub mod canon;
pub mod goal;
pub mod rates;
pub mod search;

pub use canon::{canonicalize, CanonicalKey};
pub use goal::{
    parse_goal_expr, parse_properties, AssertionShape, Atom, Comparator, GoalExpr, Metric, NamedProperty, Operand,
    Property, TaskAssertion, TaskSelector,
};
pub use rates::{compute_rates, RateCounts, RateMetrics};
pub use search::{explore, BudgetHit, Exploration, Visit};

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{GlobalState, ModelError, Phase, Witness};

#[derive(Debug, Error)]
pub enum CheckError {
    #[error("property file line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "dfs")]
    PlainDfs,
    #[serde(rename = "dfs-sym")]
    SymmetryDfs,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::PlainDfs, Strategy::SymmetryDfs];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::PlainDfs => "dfs",
            Strategy::SymmetryDfs => "dfs-sym",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dfs" => Ok(Strategy::PlainDfs),
            "dfs-sym" => Ok(Strategy::SymmetryDfs),
            _ => Err(format!("unknown strategy `{s}` (expected dfs or dfs-sym)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_states: u64,
    pub max_time: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_states: 50_000_000, max_time: None }
    }
}

impl Budget {
    pub fn states(max_states: u64) -> Budget {
        Budget { max_states, max_time: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Invalid,
    /// A state or time budget ran out first.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub property: String,
    pub verdict: Verdict,
    pub states_explored: u64,
    pub transitions: u64,
    pub max_depth: u64,
    pub wall_time_ms: f64,
    pub strategy: Strategy,
    /// For reachability: path to the goal state. For assertions: the counterexample.
    pub witness: Option<Witness>,
    /// Rates at the end of the witness.
    pub rates: Option<RateMetrics>,
    pub inconclusive_reason: Option<String>,
}

impl VerificationResult {
    pub fn valid(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Valid => Some(true),
            Verdict::Invalid => Some(false),
            Verdict::Inconclusive => None,
        }
    }
}

/// Turns an exploration into a result. `found_means_valid` says whether a stop
/// (a found state) confirms the property (reachability) or refutes it (assertions).
fn finish(
    initial: &GlobalState,
    property: String,
    strategy: Strategy,
    ex: Exploration,
    found_means_valid: bool,
) -> Result<VerificationResult, CheckError> {
    let (verdict, witness, rates) = match &ex.stopped {
        Some(path) => {
            let (w, end) = Witness::record(initial, path)?;
            let verdict = if found_means_valid { Verdict::Valid } else { Verdict::Invalid };
            (verdict, Some(w), Some(compute_rates(&end)))
        }
        None if ex.budget_hit.is_some() => (Verdict::Inconclusive, None, None),
        None => (if found_means_valid { Verdict::Invalid } else { Verdict::Valid }, None, None),
    };
    Ok(VerificationResult {
        property,
        verdict,
        states_explored: ex.states,
        transitions: ex.transitions,
        max_depth: ex.max_depth as u64,
        wall_time_ms: ex.elapsed.as_secs_f64() * 1000.0,
        strategy,
        witness,
        rates,
        inconclusive_reason: ex.budget_hit.map(|b| match b {
            BudgetHit::States => "state budget exhausted".to_string(),
            BudgetHit::Time => "time budget exhausted".to_string(),
        }),
    })
}

/// Searches for a reachable state whose rates satisfy `goal`.
pub fn verify(
    initial: &GlobalState,
    goal: &GoalExpr,
    strategy: Strategy,
    budget: &Budget,
) -> Result<VerificationResult, CheckError> {
    let ex = explore(initial, strategy, budget, |s, _| {
        if goal.holds(&RateCounts::of(s)) {
            Visit::Stop
        } else {
            Visit::Continue
        }
    })?;
    finish(initial, format!("reaches {goal}"), strategy, ex, true)
}

fn resolve(initial: &GlobalState, selector: &TaskSelector) -> Result<Vec<u32>, CheckError> {
    match selector {
        TaskSelector::All => Ok((0..initial.workload() as u32).collect()),
        TaskSelector::Id(id) => initial
            .model()
            .task_ids
            .iter()
            .position(|t| t == id)
            .map(|i| vec![i as u32])
            .ok_or_else(|| CheckError::UnknownTask(id.clone())),
    }
}

/// Checks a per-task assertion. `EventuallyReaches` looks for a complete path on
/// which some selected task never enters the phase; `NeverReaches` looks for a
/// state where one has.
pub fn verify_assertion(
    initial: &GlobalState,
    assertion: &TaskAssertion,
    strategy: Strategy,
    budget: &Budget,
) -> Result<VerificationResult, CheckError> {
    let targets = resolve(initial, &assertion.selector)?;
    let all = |s: &GlobalState, p: Phase| targets.iter().all(|&t| s.task(t).reached(p));
    let any = |s: &GlobalState, p: Phase| targets.iter().any(|&t| s.task(t).reached(p));
    let ex = match assertion.shape {
        AssertionShape::EventuallyReaches(p) => explore(initial, strategy, budget, |s, deadend| {
            if all(s, p) {
                Visit::Prune
            } else if deadend {
                Visit::Stop
            } else {
                Visit::Continue
            }
        })?,
        AssertionShape::NeverReaches(p) => explore(initial, strategy, budget, |s, _| {
            if any(s, p) {
                Visit::Stop
            } else {
                Visit::Continue
            }
        })?,
    };
    finish(initial, assertion.to_string(), strategy, ex, false)
}

pub fn check(
    initial: &GlobalState,
    property: &Property,
    strategy: Strategy,
    budget: &Budget,
) -> Result<VerificationResult, CheckError> {
    let mut r = match property {
        Property::Reaches { goal, .. } => verify(initial, goal, strategy, budget)?,
        Property::Task(a) => verify_assertion(initial, a, strategy, budget)?,
    };
    r.property = property.to_string();
    Ok(r)
}

/// Rate counts of every reachable state without successors.
pub fn terminal_rates(
    initial: &GlobalState,
    strategy: Strategy,
    budget: &Budget,
) -> Result<(BTreeSet<RateCounts>, Exploration), CheckError> {
    let mut set = BTreeSet::new();
    let ex = explore(initial, strategy, budget, |s, deadend| {
        if deadend {
            set.insert(RateCounts::of(s));
        }
        Visit::Continue
    })?;
    Ok((set, ex))
}

#[cfg(test)]
mod tests;
