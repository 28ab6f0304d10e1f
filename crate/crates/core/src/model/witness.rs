//! Witness traces: a replayable path from the initial state, plus the per-task
//! outcomes it predicts.

use serde::{Deserialize, Serialize};

use super::state::{Counters, GlobalState};
use super::{FailureCause, ModelError, Phase, Transition};
use crate::kernel::Event;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseDelta {
    pub task: String,
    pub from: Phase,
    pub to: Phase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessStep {
    pub event: Event,
    pub transition: Transition,
    pub deltas: Vec<PhaseDelta>,
    pub clock_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSummary {
    pub clock_ms: u64,
    pub workload: usize,
    pub trackercount: u64,
    pub counters: Counters,
    /// Original tasks per phase, in phase order.
    pub phase_counts: Vec<(Phase, usize)>,
    /// Plain (order-sensitive) state fingerprint, hex encoded.
    pub fingerprint: String,
}

impl StateSummary {
    pub fn of(state: &GlobalState) -> StateSummary {
        let phase_counts = Phase::ALL
            .iter()
            .map(|p| (*p, state.originals().iter().filter(|t| t.phase == *p).count()))
            .filter(|(_, n)| *n > 0)
            .collect();
        StateSummary {
            clock_ms: state.clock(),
            workload: state.workload(),
            trackercount: state.trackercount(),
            counters: *state.counters(),
            phase_counts,
            fingerprint: format!("{:032x}", state.fingerprint(false)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub steps: Vec<WitnessStep>,
    pub terminal: StateSummary,
}

impl Witness {
    /// Replays `path` from `initial`, recording events and phase changes.
    pub fn record(initial: &GlobalState, path: &[Transition]) -> Result<(Witness, GlobalState), ModelError> {
        let mut s = initial.snapshot();
        let mut steps = Vec::with_capacity(path.len());
        for &t in path {
            let event = s.event_of(t)?;
            s.apply_checked(t)?;
            let deltas = s
                .phase_changes_since_mark()
                .into_iter()
                .map(|(a, from, to)| PhaseDelta { task: s.attempt_name(a), from, to })
                .collect();
            steps.push(WitnessStep { event, transition: t, deltas, clock_ms: s.clock() });
        }
        let terminal = StateSummary::of(&s);
        Ok((Witness { steps, terminal }, s.snapshot()))
    }

    pub fn transitions(&self) -> Vec<Transition> {
        self.steps.iter().map(|s| s.transition).collect()
    }

    /// Replays the witness and checks that it ends in the recorded terminal summary.
    pub fn replay(&self, initial: &GlobalState) -> Result<GlobalState, ModelError> {
        let mut s = initial.snapshot();
        for step in &self.steps {
            s.apply_checked(step.transition)?;
        }
        Ok(s.snapshot())
    }

    pub fn replays_to_terminal(&self, initial: &GlobalState) -> bool {
        self.replay(initial).is_ok_and(|s| StateSummary::of(&s) == self.terminal)
    }
}

/// Follows the first enabled transition until none is left. Returns the steps taken.
pub fn run_to_quiescence(state: &mut GlobalState) -> Result<Vec<Transition>, ModelError> {
    let mut taken = Vec::new();
    let mut buf = Vec::new();
    loop {
        state.enabled_into(&mut buf)?;
        let Some(&t) = buf.first() else { return Ok(taken) };
        state.apply(t)?;
        taken.push(t);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Finished,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPrediction {
    pub task_id: String,
    pub job_id: String,
    pub outcome: Outcome,
    pub phase: Phase,
    pub cause: Option<FailureCause>,
    /// Time spent queued: until start, or until the end of the path if never started.
    pub wait_ms: u64,
    pub run_ms: Option<u64>,
    /// Upstream hops to the job whose failure cascaded here (0 if none).
    pub cascade_depth: u32,
}

/// Per-task outcomes at `state`. Tasks that never resolved count as failed with
/// cause `Residual`; late finishes count as finished.
pub fn predictions(state: &GlobalState) -> Vec<TaskPrediction> {
    let model = state.model();
    let depth = |job: u32| {
        let mut d = 0;
        let mut cur = state.jobs()[job as usize].cascade_from;
        while let Some(u) = cur {
            d += 1;
            cur = state.jobs()[u as usize].cascade_from;
        }
        d
    };
    state
        .originals()
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let (outcome, cause) = match t.phase {
                Phase::FinishedWithinDeadline | Phase::FinishedAfterDeadline => (Outcome::Finished, None),
                Phase::Failed => (Outcome::Failed, t.failure_cause),
                _ => (Outcome::Failed, Some(FailureCause::Residual)),
            };
            let end = t.finish_ms.unwrap_or(state.clock());
            TaskPrediction {
                task_id: model.task_ids[i].clone(),
                job_id: model.jobs[t.job as usize].id.clone(),
                outcome,
                phase: t.phase,
                cause,
                wait_ms: t.start_ms.unwrap_or(end).saturating_sub(t.submit_ms),
                run_ms: t.start_ms.map(|s| end - s),
                cascade_depth: if cause == Some(FailureCause::Cascade) { depth(t.job) } else { 0 },
            }
        })
        .collect()
}
