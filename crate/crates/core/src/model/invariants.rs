//! State and step invariants, checked in tests and by `--check-invariants` style runs.

use thiserror::Error;

use super::state::GlobalState;
use super::{AttemptKind, Phase};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantViolation {
    #[error("slot accounting: {0}")]
    SlotConservation(String),
    #[error("reduce {0} is running before its job's maps finished")]
    ReduceGating(String),
    #[error("task {task} moved back from {from} to {to}")]
    PhaseRegression { task: String, from: Phase, to: Phase },
    #[error("locality counters: {0}")]
    Counters(String),
    #[error("trackers active while the JobTracker is off")]
    ActivationOrder,
    #[error("timing: {0}")]
    Timing(String),
    #[error("incremental aggregates drifted from a full recount")]
    Aggregates,
}

/// Checks every single-state invariant.
pub fn check_state(s: &GlobalState) -> Result<(), InvariantViolation> {
    let slots_per_node = s.config().slots_per_node as u64;
    let mut on = 0u64;
    let mut occupied_on = 0u64;
    let mut seen = std::collections::HashSet::new();
    for (ni, n) in s.nodes().iter().enumerate() {
        let occ = n.slots.iter().flatten().count() as u64;
        if n.tracker_on {
            on += 1;
            occupied_on += occ;
        } else if occ > 0 {
            return Err(InvariantViolation::SlotConservation(format!("node {ni} is off but holds tasks")));
        }
        for (si, a) in n.slots.iter().enumerate() {
            let Some(a) = a else { continue };
            if !seen.insert(*a) {
                return Err(InvariantViolation::SlotConservation(format!("attempt {a} holds two slots")));
            }
            let t = s.task(*a);
            if t.node != Some(ni as u32) || t.slot != Some(si as u16) {
                return Err(InvariantViolation::SlotConservation(format!("attempt {a} disagrees with its slot")));
            }
            if !matches!(t.phase, Phase::Scheduled | Phase::Processed) {
                return Err(InvariantViolation::SlotConservation(format!("attempt {a} holds a slot in phase {}", t.phase)));
            }
        }
    }
    if s.free_slots() + occupied_on != on * slots_per_node {
        return Err(InvariantViolation::SlotConservation(format!(
            "{} free + {occupied_on} occupied != {on} trackers x {slots_per_node} slots",
            s.free_slots()
        )));
    }

    let model = s.model();
    let mut started = 0u64;
    for (i, t) in s.tasks().iter().enumerate() {
        if t.kind == AttemptKind::Reduce
            && t.phase == Phase::Processed
            && s.jobs()[t.job as usize].finished_maps < model.jobs[t.job as usize].maps
        {
            return Err(InvariantViolation::ReduceGating(s.attempt_name(i as u32)));
        }
        if t.start_ms.is_some() != t.local.is_some() {
            return Err(InvariantViolation::Counters(format!("{} has locality without start", s.attempt_name(i as u32))));
        }
        started += u64::from(t.start_ms.is_some());
        if let Some(st) = t.start_ms {
            if st < t.submit_ms {
                return Err(InvariantViolation::Timing(format!("{} started before submission", s.attempt_name(i as u32))));
            }
            if t.finish_ms.is_some_and(|f| f < st) {
                return Err(InvariantViolation::Timing(format!("{} finished before starting", s.attempt_name(i as u32))));
            }
        }
        if t.phase.is_queued() && s.tasks()[i].node.is_some() {
            return Err(InvariantViolation::SlotConservation(format!("queued {} has a node", s.attempt_name(i as u32))));
        }
    }
    let c = s.counters();
    if c.locality + c.nonlocality != started {
        return Err(InvariantViolation::Counters(format!(
            "locality {} + nonlocality {} != {started} dispatched",
            c.locality, c.nonlocality
        )));
    }
    if s.trackercount() > 0 && !s.job_tracker_on() {
        return Err(InvariantViolation::ActivationOrder);
    }
    if !s.aggregates_consistent() {
        return Err(InvariantViolation::Aggregates);
    }
    Ok(())
}

/// Phases of the original tasks, for [`check_step`].
pub fn phase_vector(s: &GlobalState) -> Vec<Phase> {
    s.originals().iter().map(|t| t.phase).collect()
}

/// Phase monotonicity across one step.
pub fn check_step(before: &[Phase], after: &GlobalState) -> Result<(), InvariantViolation> {
    for (i, (b, t)) in before.iter().zip(after.originals()).enumerate() {
        if t.phase.rank() < b.rank() || (b.is_terminal() && t.phase != *b) {
            return Err(InvariantViolation::PhaseRegression {
                task: after.attempt_name(i as u32),
                from: *b,
                to: t.phase,
            });
        }
    }
    Ok(())
}
