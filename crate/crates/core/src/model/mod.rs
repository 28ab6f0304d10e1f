//! The Hadoop cluster as a transition system.
//!
//! Daemon start-up (NameNode, JobTracker, DataNodes, TaskTrackers) runs through
//! the process kernel. Scheduling, execution and the discrete clock are a
//! structured overlay on top of it, so that one mutable [`GlobalState`] can be
//! stepped forward and rolled back cheaply during search.

mod build;
mod deadlock;
pub mod invariants;
pub(crate) mod state;
mod step;
pub mod witness;

pub use build::{build_cluster, Model};
pub use state::{Counters, GlobalState, JobState, NodeState};
pub use step::TimedEvent;
pub use witness::{predictions, run_to_quiescence, Outcome as PredictedOutcome, PhaseDelta, StateSummary, TaskPrediction, Witness, WitnessStep};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::ConfigError;
use crate::kernel::KernelError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("workload is empty")]
    EmptyWorkload,
    #[error(transparent)]
    ConfigInvalid(#[from] ConfigError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("slot {slot} of node {node} is already running a task")]
    SlotConflict { node: u32, slot: u16 },
    #[error("transition {0:?} is not enabled")]
    NotEnabled(Transition),
}

/// Task lifecycle. Ranks order the phases; `Discarded` only applies to losing
/// speculative attempts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Submitted,
    WaitingResources,
    Scheduled,
    Processed,
    FinishedWithinDeadline,
    FinishedAfterDeadline,
    Failed,
    Discarded,
}

impl Phase {
    pub const ALL: [Phase; 8] = [
        Phase::Submitted,
        Phase::WaitingResources,
        Phase::Scheduled,
        Phase::Processed,
        Phase::FinishedWithinDeadline,
        Phase::FinishedAfterDeadline,
        Phase::Failed,
        Phase::Discarded,
    ];

    pub fn rank(self) -> u8 {
        match self {
            Phase::Submitted => 0,
            Phase::WaitingResources => 1,
            Phase::Scheduled => 2,
            Phase::Processed => 3,
            Phase::FinishedWithinDeadline
            | Phase::FinishedAfterDeadline
            | Phase::Failed
            | Phase::Discarded => 4,
        }
    }

    pub(crate) fn bit(self) -> u8 {
        1 << (self as u8)
    }

    pub fn is_terminal(self) -> bool {
        self.rank() == 4
    }

    pub fn is_queued(self) -> bool {
        matches!(self, Phase::Submitted | Phase::WaitingResources)
    }

    pub fn name(self) -> &'static str {
        match self {
            Phase::Submitted => "submitted",
            Phase::WaitingResources => "waiting-resources",
            Phase::Scheduled => "scheduled",
            Phase::Processed => "processed",
            Phase::FinishedWithinDeadline => "finished-within-deadline",
            Phase::FinishedAfterDeadline => "finished-after-deadline",
            Phase::Failed => "failed",
            Phase::Discarded => "discarded",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Phase::ALL
            .into_iter()
            .find(|p| p.name() == norm)
            .ok_or_else(|| format!("unknown phase `{s}`"))
    }
}

/// Queue entry kind; the discriminants are the scheduler's queue codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttemptKind {
    Map = 1,
    Reduce = 2,
    SpeculativeMap = 3,
    SpeculativeReduce = 4,
}

impl AttemptKind {
    pub fn is_reduce(self) -> bool {
        matches!(self, AttemptKind::Reduce | AttemptKind::SpeculativeReduce)
    }

    pub fn is_speculative(self) -> bool {
        matches!(self, AttemptKind::SpeculativeMap | AttemptKind::SpeculativeReduce)
    }

    pub fn queue_code(self) -> u8 {
        self as u8
    }

    fn speculative(self) -> AttemptKind {
        if self.is_reduce() {
            AttemptKind::SpeculativeReduce
        } else {
            AttemptKind::SpeculativeMap
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FailureCause {
    Timeout,
    SpeculativeLimit,
    Cascade,
    QueueWait,
    /// Never resolved by the end of the explored path.
    Residual,
}

impl FailureCause {
    pub const ALL: [FailureCause; 5] = [
        FailureCause::Timeout,
        FailureCause::SpeculativeLimit,
        FailureCause::Cascade,
        FailureCause::QueueWait,
        FailureCause::Residual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FailureCause::Timeout => "timeout",
            FailureCause::SpeculativeLimit => "speculative",
            FailureCause::Cascade => "cascade",
            FailureCause::QueueWait => "queuewait",
            FailureCause::Residual => "residual",
        }
    }
}

/// One task attempt. Index `i < workload` is the original attempt of trace task `i`;
/// speculative copies are appended after the originals.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaskState {
    pub orig: u32,
    /// 0 for the original, k for the k-th speculative copy.
    pub attempt: u8,
    pub job: u32,
    pub kind: AttemptKind,
    pub submit_ms: u64,
    pub duration_ms: u64,
    pub deadline_ms: u64,
    pub preferred_node: Option<u32>,
    pub phase: Phase,
    /// Bit set of every phase this attempt has been in.
    pub ever: u8,
    pub start_ms: Option<u64>,
    pub finish_ms: Option<u64>,
    pub node: Option<u32>,
    pub slot: Option<u16>,
    pub local: Option<bool>,
    pub failure_cause: Option<FailureCause>,
    /// Sticky resource-deadlock flag.
    pub deadlocked: bool,
    /// Speculation checkpoints already passed.
    pub checkpoints: u8,
}

impl TaskState {
    pub fn is_original(&self) -> bool {
        self.attempt == 0
    }

    pub fn reached(&self, phase: Phase) -> bool {
        self.ever & phase.bit() != 0
    }

    /// Identity that survives copy renumbering: `(original, attempt)`.
    pub(crate) fn id_word(&self) -> u64 {
        (u64::from(self.orig) << 8) | u64::from(self.attempt)
    }
}

/// One step of the transition system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Transition {
    /// The k-th enabled daemon start-up event of the kernel.
    Activate(u16),
    Assign { task: u32, node: u32 },
    Execute { task: u32 },
    /// Moves the clock to the next timed event; `task` names the attempt whose
    /// event fires (none for a pure arrival or threshold tick).
    Advance { task: Option<u32>, event: TimedEvent },
}
