//! Depth-first exploration over one mutable state with undo.

use std::collections::HashSet;
use std::hash::{BuildHasherDefault, Hasher};
use std::time::{Duration, Instant};

use super::{Budget, Strategy};
use crate::model::{GlobalState, ModelError, Transition};

/// Fingerprints are already uniform; hash them by truncation.
#[derive(Default)]
pub(crate) struct FingerprintHasher(u64);

impl Hasher for FingerprintHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 = (self.0 << 8) | u64::from(*b);
        }
    }

    fn write_u128(&mut self, v: u128) {
        self.0 = v as u64 ^ (v >> 64) as u64;
    }
}

pub(crate) type FingerprintSet = HashSet<u128, BuildHasherDefault<FingerprintHasher>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visit {
    Continue,
    /// Do not expand this state's successors.
    Prune,
    /// Stop the search; the path to this state is reported.
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetHit {
    States,
    Time,
}

#[derive(Debug, Clone)]
pub struct Exploration {
    /// Distinct (up to the strategy's equivalence) states visited.
    pub states: u64,
    /// Transitions applied, including those leading to already visited states.
    pub transitions: u64,
    pub max_depth: usize,
    pub elapsed: Duration,
    /// Path to the state where the visitor stopped.
    pub stopped: Option<Vec<Transition>>,
    pub budget_hit: Option<BudgetHit>,
}

impl Exploration {
    /// True if the reachable space was covered completely.
    pub fn exhausted(&self) -> bool {
        self.stopped.is_none() && self.budget_hit.is_none()
    }
}

struct Frame {
    enabled: Vec<Transition>,
    next: usize,
}

/// Explores every state reachable from `initial` in depth-first order (enabled
/// transitions in their fixed order), calling `visit` once per new state with
/// a flag telling whether the state has no successors.
pub fn explore(
    initial: &GlobalState,
    strategy: Strategy,
    budget: &Budget,
    mut visit: impl FnMut(&GlobalState, bool) -> Visit,
) -> Result<Exploration, ModelError> {
    let started = Instant::now();
    let symmetric = strategy == Strategy::SymmetryDfs;
    let mut s = initial.snapshot();
    let mut visited = FingerprintSet::default();
    let mut out = Exploration {
        states: 1,
        transitions: 0,
        max_depth: 0,
        elapsed: Duration::ZERO,
        stopped: None,
        budget_hit: None,
    };
    visited.insert(s.fingerprint(symmetric));

    let mut path: Vec<Transition> = Vec::new();
    let mut stack: Vec<Frame> = Vec::new();
    let mut spare: Vec<Vec<Transition>> = Vec::new();

    let mut enabled = Vec::new();
    s.enabled_into(&mut enabled)?;
    match visit(&s, enabled.is_empty()) {
        Visit::Stop => {
            out.stopped = Some(Vec::new());
            out.elapsed = started.elapsed();
            return Ok(out);
        }
        Visit::Prune => {
            out.elapsed = started.elapsed();
            return Ok(out);
        }
        Visit::Continue => stack.push(Frame { enabled, next: 0 }),
    }

    while let Some(top) = stack.last_mut() {
        if top.next == top.enabled.len() {
            let frame = stack.pop().expect("non-empty stack");
            spare.push(frame.enabled);
            if !stack.is_empty() {
                s.undo();
                path.pop();
            }
            continue;
        }
        if out.transitions.is_multiple_of(1024) {
            if let Some(limit) = budget.max_time {
                if started.elapsed() >= limit {
                    out.budget_hit = Some(BudgetHit::Time);
                    break;
                }
            }
        }
        let t = top.enabled[top.next];
        top.next += 1;
        s.apply(t)?;
        out.transitions += 1;
        if !visited.insert(s.fingerprint(symmetric)) {
            s.undo();
            continue;
        }
        if out.states >= budget.max_states {
            out.budget_hit = Some(BudgetHit::States);
            break;
        }
        out.states += 1;
        path.push(t);
        out.max_depth = out.max_depth.max(path.len());

        let mut enabled = spare.pop().unwrap_or_default();
        s.enabled_into(&mut enabled)?;
        match visit(&s, enabled.is_empty()) {
            Visit::Stop => {
                out.stopped = Some(path);
                break;
            }
            Visit::Prune => {
                spare.push(enabled);
                s.undo();
                path.pop();
            }
            Visit::Continue => stack.push(Frame { enabled, next: 0 }),
        }
    }
    out.elapsed = started.elapsed();
    Ok(out)
}
