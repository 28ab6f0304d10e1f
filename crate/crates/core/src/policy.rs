//! Queue-selection policies: which eligible queue entry gets the next free slot.
//!
//! The queue is scanned in `(submit_ms, task)` order and never past `max_queue`
//! entries, so tasks deep in a long queue can starve under every policy.

use serde::{Deserialize, Serialize};

use crate::config::SchedulerKind;
use crate::model::GlobalState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyDecision {
    /// Position in the queue scan ("location" in the scheduler script).
    pub queue_index: usize,
    pub task: u32,
    /// Another pool or queue had an equally good claim.
    pub tie_broken: bool,
}

/// Slot usage of one Fair pool or Capacity queue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolState {
    pub running_slots: usize,
    pub entitled_slots: f64,
}

impl PoolState {
    pub fn deficit(&self) -> f64 {
        self.entitled_slots - self.running_slots as f64
    }
}

fn on_slots(state: &GlobalState) -> usize {
    state.nodes().iter().filter(|n| n.tracker_on).map(|n| n.slots.len()).sum()
}

/// Running slots and entitlement per Fair pool (`job mod fair_pools`) or per
/// Capacity queue (`job mod queue count`).
pub fn pool_states(kind: SchedulerKind, state: &GlobalState) -> Vec<PoolState> {
    let model = state.model();
    let total = on_slots(state) as f64;
    let (count, entitled): (usize, Vec<f64>) = match kind {
        SchedulerKind::Fifo => (1, vec![total]),
        SchedulerKind::Fair => {
            let p = model.config.fair_pools;
            (p, vec![total / p as f64; p])
        }
        SchedulerKind::Capacity => {
            let qs = &model.config.capacity_queues;
            (qs.len(), qs.iter().map(|q| q.fraction * total).collect())
        }
    };
    let mut running = vec![0usize; count];
    for n in state.nodes() {
        for a in n.slots.iter().flatten() {
            let job = state.task(*a).job;
            let p = match kind {
                SchedulerKind::Fifo => 0,
                SchedulerKind::Fair => model.pool_of(job),
                SchedulerKind::Capacity => model.capacity_queue_of(job),
            };
            running[p] += 1;
        }
    }
    running
        .into_iter()
        .zip(entitled)
        .map(|(running_slots, entitled_slots)| PoolState { running_slots, entitled_slots })
        .collect()
}

/// Eligible entries within the scan window, as `(queue_index, task)`.
fn eligible_entries(state: &GlobalState) -> impl Iterator<Item = (usize, u32)> + '_ {
    let clock = state.clock();
    state
        .queue()
        .take(state.config().max_queue)
        .enumerate()
        .take_while(move |(_, (s, _))| *s <= clock)
        .filter(|(_, (_, a))| state.is_eligible(*a))
        .map(|(i, (_, a))| (i, a))
}

pub fn select(kind: SchedulerKind, state: &GlobalState) -> Option<PolicyDecision> {
    match kind {
        SchedulerKind::Fifo => eligible_entries(state)
            .next()
            .map(|(queue_index, task)| PolicyDecision { queue_index, task, tie_broken: false }),
        SchedulerKind::Fair => select_fair(state),
        SchedulerKind::Capacity => select_capacity(state),
    }
}

fn first_per_group(state: &GlobalState, groups: usize, group_of: impl Fn(u32) -> usize) -> Vec<Option<(usize, u32)>> {
    let mut firsts = vec![None; groups];
    let mut missing = groups;
    for (i, a) in eligible_entries(state) {
        let g = group_of(state.task(a).job);
        if firsts[g].is_none() {
            firsts[g] = Some((i, a));
            missing -= 1;
            if missing == 0 {
                break;
            }
        }
    }
    firsts
}

fn select_fair(state: &GlobalState) -> Option<PolicyDecision> {
    let model = state.model();
    let pools = pool_states(SchedulerKind::Fair, state);
    let firsts = first_per_group(state, pools.len(), |job| model.pool_of(job));
    let candidates: Vec<(f64, usize, u32)> = firsts
        .iter()
        .enumerate()
        .filter_map(|(p, f)| f.map(|(i, a)| (pools[p].deficit(), i, a)))
        .collect();
    let best_deficit = candidates.iter().map(|c| c.0).fold(f64::NEG_INFINITY, f64::max);
    let mut top = candidates.iter().filter(|c| c.0 == best_deficit);
    let &(_, queue_index, task) = top.clone().min_by_key(|c| c.1)?;
    let tie_broken = top.nth(1).is_some();
    Some(PolicyDecision { queue_index, task, tie_broken })
}

fn select_capacity(state: &GlobalState) -> Option<PolicyDecision> {
    let model = state.model();
    let queues = pool_states(SchedulerKind::Capacity, state);
    let firsts = first_per_group(state, queues.len(), |job| model.capacity_queue_of(job));
    for (q, first) in firsts.iter().enumerate() {
        if let Some((queue_index, task)) = *first {
            if (queues[q].running_slots as f64) < queues[q].entitled_slots {
                return Some(PolicyDecision { queue_index, task, tie_broken: false });
            }
        }
    }
    firsts
        .into_iter()
        .flatten()
        .min()
        .map(|(queue_index, task)| PolicyDecision { queue_index, task, tie_broken: false })
}
