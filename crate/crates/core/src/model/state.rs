use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_128;

use super::build::Model;
use super::{Phase, TaskState};
use crate::config::ClusterConfig;
use crate::kernel::KernelState;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeState {
    pub datanode_on: bool,
    pub tracker_on: bool,
    /// Occupying attempt per slot.
    pub slots: Vec<Option<u32>>,
    /// Order-independent hash of the occupying attempts.
    pub(crate) occupancy: u128,
    /// Unresolved original tasks that prefer this node.
    pub(crate) pinned_by: u32,
}

impl NodeState {
    pub fn free_slots(&self) -> usize {
        if self.tracker_on {
            self.slots.iter().filter(|s| s.is_none()).count()
        } else {
            0
        }
    }

    pub fn first_free_slot(&self) -> Option<u16> {
        self.slots.iter().position(Option::is_none).map(|s| s as u16)
    }

    pub fn is_pinned(&self) -> bool {
        self.pinned_by > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct JobState {
    pub finished_maps: u32,
    pub failed: bool,
    /// Upstream job whose failure took this job down.
    pub cascade_from: Option<u32>,
    /// Original tasks not yet finished or failed.
    pub unresolved: u32,
}

/// Aggregates over original tasks (locality and running count cover every attempt).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counters {
    pub completedscheduled: u64,
    pub ever_scheduled: u64,
    pub finished_within: u64,
    pub finished_after: u64,
    pub failed: u64,
    pub served_fair: u64,
    pub flagged: u64,
    pub waited: u64,
    pub locality: u64,
    pub nonlocality: u64,
    pub running: u64,
}

impl Counters {
    fn apply(&mut self, t: &TaskState, fairness_wait_ms: u64, add: bool) {
        let bump = |field: &mut u64, cond: bool| {
            if cond {
                if add {
                    *field += 1;
                } else {
                    *field -= 1;
                }
            }
        };
        bump(&mut self.locality, t.local == Some(true));
        bump(&mut self.nonlocality, t.local == Some(false));
        bump(&mut self.running, t.phase == Phase::Processed);
        if !t.is_original() {
            return;
        }
        bump(
            &mut self.completedscheduled,
            matches!(
                t.phase,
                Phase::Processed | Phase::FinishedWithinDeadline | Phase::FinishedAfterDeadline | Phase::Failed
            ),
        );
        bump(&mut self.ever_scheduled, t.reached(Phase::Scheduled));
        bump(&mut self.finished_within, t.phase == Phase::FinishedWithinDeadline);
        bump(&mut self.finished_after, t.phase == Phase::FinishedAfterDeadline);
        bump(&mut self.failed, t.phase == Phase::Failed);
        bump(
            &mut self.served_fair,
            t.start_ms.is_some_and(|s| s - t.submit_ms <= fairness_wait_ms),
        );
        bump(&mut self.flagged, t.deadlocked);
        bump(&mut self.waited, t.reached(Phase::WaitingResources));
    }

    pub(crate) fn add(&mut self, t: &TaskState, fairness_wait_ms: u64) {
        self.apply(t, fairness_wait_ms, true);
    }

    pub fn resolved(&self) -> u64 {
        self.finished_within + self.finished_after + self.failed
    }
}

#[derive(Debug, Clone)]
enum Undo {
    Task(u32, TaskState),
    Slot { node: u32, slot: u16, old: Option<u32> },
    Job(u32, JobState),
    QueueInsert(u64, u32),
    QueueRemove(u64, u32),
    PushTask,
    Kernel(Box<KernelState>),
    NodeFlags { node: u32, datanode_on: bool, tracker_on: bool },
    Clock(u64),
}

/// A complete cluster snapshot with an undo journal.
///
/// Every mutation goes through a setter that records the previous value and
/// keeps the incremental fingerprints and counters in step, so a transition can
/// be rolled back exactly with [`GlobalState::undo`].
#[derive(Debug, Clone)]
pub struct GlobalState {
    pub(crate) model: Arc<Model>,
    pub(crate) kernel: KernelState,
    pub(crate) kernel_sig: [u64; 4],
    pub(crate) tasks: Vec<TaskState>,
    pub(crate) nodes: Vec<NodeState>,
    pub(crate) jobs: Vec<JobState>,
    pub(crate) queue: BTreeSet<(u64, u32)>,
    pub(crate) clock: u64,
    pub(crate) counters: Counters,
    pub(crate) free_slots: u64,
    acc_plain: u128,
    acc_sym: u128,
    journal: Vec<Undo>,
    marks: Vec<usize>,
}

pub(crate) fn hash_words(words: &[u64]) -> u128 {
    let mut bytes = [0u8; 8 * 16];
    let n = words.len().min(16);
    for (i, w) in words[..n].iter().enumerate() {
        bytes[i * 8..i * 8 + 8].copy_from_slice(&w.to_le_bytes());
    }
    xxh3_128(&bytes[..n * 8])
}

fn opt(v: Option<u64>) -> u64 {
    v.map_or(0, |v| v + 1)
}

/// Per-attempt key words. The symmetric key leaves out node and slot, which the
/// node sub-states carry instead.
pub(crate) fn task_words(t: &TaskState, with_placement: bool) -> [u64; 13] {
    let (node, slot) = if with_placement {
        (opt(t.node.map(u64::from)), opt(t.slot.map(u64::from)))
    } else {
        (0, 0)
    };
    [
        0x7461_736b,
        t.id_word(),
        t.phase as u64,
        u64::from(t.ever),
        opt(t.start_ms),
        opt(t.finish_ms),
        t.local.map_or(0, |l| 1 + u64::from(l)),
        t.failure_cause.map_or(0, |c| 1 + c as u64),
        u64::from(t.deadlocked) | (u64::from(t.checkpoints) << 1),
        t.submit_ms,
        t.duration_ms,
        node,
        slot,
    ]
}

pub(crate) fn occupant_hash(id_word: u64) -> u128 {
    hash_words(&[0x6f63_6375, id_word])
}

pub(crate) fn kernel_signature(k: &KernelState) -> [u64; 4] {
    let int = |name: &str| k.store.int(name).unwrap_or(-1) as u64;
    [int("NameNode"), int("JobTracker"), int("trackercount"), k.active().len() as u64]
}

impl GlobalState {
    pub(crate) fn assemble(
        model: Arc<Model>,
        kernel: KernelState,
        tasks: Vec<TaskState>,
        nodes: Vec<NodeState>,
        jobs: Vec<JobState>,
        queue: BTreeSet<(u64, u32)>,
        counters: Counters,
    ) -> Self {
        let mut s = GlobalState {
            kernel_sig: kernel_signature(&kernel),
            model,
            kernel,
            tasks,
            nodes,
            jobs,
            queue,
            clock: 0,
            counters,
            free_slots: 0,
            acc_plain: 0,
            acc_sym: 0,
            journal: Vec::new(),
            marks: Vec::new(),
        };
        s.recompute_accumulators();
        s
    }

    fn recompute_accumulators(&mut self) {
        self.acc_plain = 0;
        self.acc_sym = 0;
        for t in &self.tasks {
            self.acc_plain = self.acc_plain.wrapping_add(hash_words(&task_words(t, true)));
            self.acc_sym = self.acc_sym.wrapping_add(hash_words(&task_words(t, false)));
        }
        self.free_slots = self.nodes.iter().map(|n| n.free_slots() as u64).sum();
        for n in &mut self.nodes {
            n.occupancy = 0;
        }
        for ni in 0..self.nodes.len() {
            let mut occ = 0u128;
            for o in self.nodes[ni].slots.iter().flatten() {
                occ = occ.wrapping_add(occupant_hash(self.tasks[*o as usize].id_word()));
            }
            self.nodes[ni].occupancy = occ;
        }
    }

    // ---- read access ---------------------------------------------------------

    pub fn model(&self) -> &Arc<Model> {
        &self.model
    }

    pub fn config(&self) -> &ClusterConfig {
        &self.model.config
    }

    pub fn workload(&self) -> usize {
        self.model.workload()
    }

    pub fn tasks(&self) -> &[TaskState] {
        &self.tasks
    }

    pub fn originals(&self) -> &[TaskState] {
        &self.tasks[..self.workload()]
    }

    pub fn task(&self, i: u32) -> &TaskState {
        &self.tasks[i as usize]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn jobs(&self) -> &[JobState] {
        &self.jobs
    }

    pub fn kernel(&self) -> &KernelState {
        &self.kernel
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn counters(&self) -> &Counters {
        &self.counters
    }

    pub fn free_slots(&self) -> u64 {
        self.free_slots
    }

    pub fn trackercount(&self) -> u64 {
        self.kernel_sig[2]
    }

    pub fn job_tracker_on(&self) -> bool {
        self.kernel_sig[1] == 1
    }

    /// Queue entries `(submit_ms, attempt)` in scheduling order.
    pub fn queue(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.queue.iter().copied()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// A copy without the undo history.
    pub fn snapshot(&self) -> GlobalState {
        let mut s = self.clone();
        s.journal = Vec::new();
        s.marks = Vec::new();
        s
    }

    /// 128-bit state fingerprint. With `symmetric`, nodes that no unresolved task
    /// prefers are interchangeable and the fingerprint ignores their order.
    pub fn fingerprint(&self, symmetric: bool) -> u128 {
        let mut head = [0u64; 9];
        head[0] = self.clock;
        head[1..5].copy_from_slice(&self.kernel_sig);
        let acc = if symmetric { self.acc_sym } else { self.acc_plain };
        head[5] = acc as u64;
        head[6] = (acc >> 64) as u64;

        let mut ordered: u128 = 0;
        let mut anonymous: u128 = 0;
        for (i, n) in self.nodes.iter().enumerate() {
            let flags = u64::from(n.datanode_on) | (u64::from(n.tracker_on) << 1);
            if symmetric && !n.is_pinned() {
                let h = hash_words(&[0x616e, flags, n.occupancy as u64, (n.occupancy >> 64) as u64]);
                anonymous = anonymous.wrapping_add(h);
            } else {
                let occ = if symmetric { n.occupancy } else { 0 };
                let h = hash_words(&[0x706e, i as u64, flags, occ as u64, (occ >> 64) as u64]);
                ordered = hash_words(&[ordered as u64, (ordered >> 64) as u64, h as u64, (h >> 64) as u64]);
            }
        }
        let nodes = ordered ^ anonymous.rotate_left(17);
        head[7] = nodes as u64;
        head[8] = (nodes >> 64) as u64;
        hash_words(&head)
    }

    /// Recomputes every incremental aggregate from scratch and reports whether it
    /// matches the maintained values.
    pub fn aggregates_consistent(&self) -> bool {
        let mut fresh = self.snapshot();
        fresh.recompute_accumulators();
        let mut counters = Counters::default();
        let fw = self.config().fairness_wait_ms;
        for t in &self.tasks {
            counters.add(t, fw);
        }
        let mut pins = vec![0u32; self.nodes.len()];
        for t in self.originals() {
            if let (Some(p), false) = (t.preferred_node, t.phase.is_terminal()) {
                if let Some(c) = pins.get_mut(p as usize) {
                    *c += 1;
                }
            }
        }
        fresh.acc_plain == self.acc_plain
            && fresh.acc_sym == self.acc_sym
            && fresh.free_slots == self.free_slots
            && counters == self.counters
            && self.nodes.iter().zip(&fresh.nodes).all(|(a, b)| a.occupancy == b.occupancy)
            && self.nodes.iter().zip(&pins).all(|(n, &p)| n.pinned_by == p)
            && kernel_signature(&self.kernel) == self.kernel_sig
    }

    // ---- journaled mutation ------------------------------------------------------

    pub(crate) fn begin(&mut self) {
        self.marks.push(self.journal.len());
    }

    /// Number of transitions that can currently be undone.
    pub fn depth(&self) -> usize {
        self.marks.len()
    }

    /// Rolls back the most recent transition.
    pub fn undo(&mut self) {
        let Some(mark) = self.marks.pop() else { return };
        while self.journal.len() > mark {
            let entry = self.journal.pop().expect("journal entry above mark");
            match entry {
                Undo::Task(i, old) => {
                    self.put_task(i, old);
                }
                Undo::Slot { node, slot, old } => {
                    self.put_slot(node, slot, old);
                }
                Undo::Job(j, old) => self.jobs[j as usize] = old,
                Undo::QueueInsert(s, t) => {
                    self.queue.remove(&(s, t));
                }
                Undo::QueueRemove(s, t) => {
                    self.queue.insert((s, t));
                }
                Undo::PushTask => {
                    let t = self.tasks.pop().expect("pushed task");
                    self.account(&t, false);
                }
                Undo::Kernel(k) => {
                    self.kernel = *k;
                    self.kernel_sig = kernel_signature(&self.kernel);
                }
                Undo::NodeFlags { node, datanode_on, tracker_on } => {
                    self.put_node_flags(node, datanode_on, tracker_on);
                }
                Undo::Clock(c) => self.clock = c,
            }
        }
    }

    /// Adds (or removes) one attempt's contribution to the aggregates.
    fn account(&mut self, t: &TaskState, add: bool) {
        let fw = self.model.config.fairness_wait_ms;
        self.counters.apply(t, fw, add);
        let hp = hash_words(&task_words(t, true));
        let hs = hash_words(&task_words(t, false));
        if add {
            self.acc_plain = self.acc_plain.wrapping_add(hp);
            self.acc_sym = self.acc_sym.wrapping_add(hs);
        } else {
            self.acc_plain = self.acc_plain.wrapping_sub(hp);
            self.acc_sym = self.acc_sym.wrapping_sub(hs);
        }
        if t.is_original() && !t.phase.is_terminal() {
            if let Some(n) = t.preferred_node.and_then(|p| self.nodes.get_mut(p as usize)) {
                if add {
                    n.pinned_by += 1;
                } else {
                    n.pinned_by -= 1;
                }
            }
        }
    }

    fn put_task(&mut self, i: u32, new: TaskState) -> TaskState {
        let old = std::mem::replace(&mut self.tasks[i as usize], new);
        self.account(&old, false);
        let new = self.tasks[i as usize].clone();
        self.account(&new, true);
        old
    }

    pub(crate) fn set_task(&mut self, i: u32, mut new: TaskState) {
        new.ever |= new.phase.bit();
        let old = self.put_task(i, new);
        self.journal.push(Undo::Task(i, old));
    }

    pub(crate) fn push_task(&mut self, mut t: TaskState) -> u32 {
        t.ever |= t.phase.bit();
        self.account(&t, true);
        self.tasks.push(t);
        self.journal.push(Undo::PushTask);
        (self.tasks.len() - 1) as u32
    }

    fn put_slot(&mut self, node: u32, slot: u16, new: Option<u32>) -> Option<u32> {
        let old = self.nodes[node as usize].slots[slot as usize];
        let tracker_on = self.nodes[node as usize].tracker_on;
        let mut occ = self.nodes[node as usize].occupancy;
        if let Some(o) = old {
            occ = occ.wrapping_sub(occupant_hash(self.tasks[o as usize].id_word()));
            if tracker_on {
                self.free_slots += 1;
            }
        }
        if let Some(o) = new {
            occ = occ.wrapping_add(occupant_hash(self.tasks[o as usize].id_word()));
            if tracker_on {
                self.free_slots -= 1;
            }
        }
        let n = &mut self.nodes[node as usize];
        n.occupancy = occ;
        n.slots[slot as usize] = new;
        old
    }

    pub(crate) fn set_slot(&mut self, node: u32, slot: u16, new: Option<u32>) {
        let old = self.put_slot(node, slot, new);
        self.journal.push(Undo::Slot { node, slot, old });
    }

    pub(crate) fn set_job(&mut self, j: u32, new: JobState) {
        let old = std::mem::replace(&mut self.jobs[j as usize], new);
        self.journal.push(Undo::Job(j, old));
    }

    pub(crate) fn queue_insert(&mut self, submit: u64, t: u32) {
        if self.queue.insert((submit, t)) {
            self.journal.push(Undo::QueueInsert(submit, t));
        }
    }

    pub(crate) fn queue_remove(&mut self, submit: u64, t: u32) {
        if self.queue.remove(&(submit, t)) {
            self.journal.push(Undo::QueueRemove(submit, t));
        }
    }

    pub(crate) fn set_kernel(&mut self, k: KernelState) {
        let old = std::mem::replace(&mut self.kernel, k);
        self.kernel_sig = kernel_signature(&self.kernel);
        self.journal.push(Undo::Kernel(Box::new(old)));
    }

    fn put_node_flags(&mut self, node: u32, datanode_on: bool, tracker_on: bool) {
        let n = &mut self.nodes[node as usize];
        let free = n.slots.iter().filter(|s| s.is_none()).count() as u64;
        if n.tracker_on && !tracker_on {
            self.free_slots -= free;
        } else if !n.tracker_on && tracker_on {
            self.free_slots += free;
        }
        n.datanode_on = datanode_on;
        n.tracker_on = tracker_on;
    }

    pub(crate) fn set_node_flags(&mut self, node: u32, datanode_on: bool, tracker_on: bool) {
        let n = &self.nodes[node as usize];
        if n.datanode_on == datanode_on && n.tracker_on == tracker_on {
            return;
        }
        let (d, t) = (n.datanode_on, n.tracker_on);
        self.put_node_flags(node, datanode_on, tracker_on);
        self.journal.push(Undo::NodeFlags { node, datanode_on: d, tracker_on: t });
    }

    pub(crate) fn set_clock(&mut self, c: u64) {
        if c != self.clock {
            self.journal.push(Undo::Clock(self.clock));
            self.clock = c;
        }
    }

    /// Phase changes `(attempt, from, to)` made by the current (unfinished or last) transition.
    pub(crate) fn phase_changes_since_mark(&self) -> Vec<(u32, Phase, Phase)> {
        let mark = self.marks.last().copied().unwrap_or(0);
        let mut firsts: Vec<(u32, Phase)> = Vec::new();
        for e in &self.journal[mark..] {
            if let Undo::Task(i, old) = e {
                if !firsts.iter().any(|(j, _)| j == i) {
                    firsts.push((*i, old.phase));
                }
            }
        }
        let mut pushed = 0;
        for e in &self.journal[mark..] {
            if let Undo::PushTask = e {
                pushed += 1;
            }
        }
        let base = self.tasks.len() - pushed;
        let mut out: Vec<(u32, Phase, Phase)> = firsts
            .into_iter()
            .filter(|(i, _)| (*i as usize) < base)
            .map(|(i, from)| (i, from, self.tasks[i as usize].phase))
            .filter(|(_, a, b)| a != b)
            .collect();
        for i in base..self.tasks.len() {
            out.push((i as u32, Phase::Submitted, self.tasks[i].phase));
        }
        out.sort();
        out
    }
}
