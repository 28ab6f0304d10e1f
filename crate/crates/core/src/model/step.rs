//! Enabled transitions and their effects.
//!
//! Urgency: the clock only moves when no start-up, assignment or execution step
//! is enabled. Time then jumps to the earliest pending event: an attempt
//! finishing, hitting the timeout or reaching a speculation checkpoint, a task
//! arriving, or a queued task crossing the fairness or queue-timeout bound.

use serde::{Deserialize, Serialize};

use super::state::{GlobalState, JobState};
use super::{AttemptKind, FailureCause, ModelError, Phase, TaskState, Transition};
use crate::kernel::Event;
use crate::policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TimedEvent {
    /// Clock moves with no attempt event (arrival or wait threshold).
    Tick,
    Finish,
    Timeout,
    Checkpoint,
}

impl GlobalState {
    /// True if the queued attempt may be handed a slot now.
    pub fn is_eligible(&self, a: u32) -> bool {
        let t = &self.tasks[a as usize];
        if !t.phase.is_queued() || t.submit_ms > self.clock {
            return false;
        }
        if !t.is_original() {
            return self.tasks[t.orig as usize].phase == Phase::Processed;
        }
        let job = &self.jobs[t.job as usize];
        if job.failed {
            return false;
        }
        if let Some(u) = self.model.jobs[t.job as usize].upstream {
            let up = &self.jobs[u as usize];
            if up.unresolved > 0 || up.failed {
                return false;
            }
        }
        if t.kind == AttemptKind::Reduce {
            let maps = self.model.jobs[t.job as usize].maps;
            return f64::from(job.finished_maps) >= self.model.config.reduce_slowstart * f64::from(maps);
        }
        true
    }

    /// True if the scheduled attempt may start executing.
    pub fn is_runnable(&self, a: u32) -> bool {
        let t = &self.tasks[a as usize];
        if t.phase != Phase::Scheduled {
            return false;
        }
        if t.kind == AttemptKind::Reduce {
            return self.jobs[t.job as usize].finished_maps == self.model.jobs[t.job as usize].maps;
        }
        true
    }

    /// Next timed event of a running attempt. Same-time ties favour finishing,
    /// then the timeout, then the checkpoint.
    pub(crate) fn next_event(&self, a: u32) -> Option<(u64, TimedEvent)> {
        let t = &self.tasks[a as usize];
        if t.phase != Phase::Processed {
            return None;
        }
        let start = t.start_ms?;
        let cfg = &self.model.config;
        let mut best = (start + t.duration_ms, TimedEvent::Finish);
        if t.duration_ms > cfg.task_timeout_ms {
            let at = start + cfg.task_timeout_ms;
            if at < best.0 {
                best = (at, TimedEvent::Timeout);
            }
        }
        if t.is_original() && cfg.max_speculative > 0 {
            let k = f64::from(t.checkpoints) + 1.0;
            let est = self.model.estimates[a as usize];
            let at = start + (k * cfg.speculation_factor * est).ceil().max(1.0) as u64;
            if at < best.0 {
                best = (at, TimedEvent::Checkpoint);
            }
        }
        Some(best)
    }

    fn running_attempts(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes
            .iter()
            .flat_map(|n| n.slots.iter().flatten().copied())
            .filter(|&a| self.tasks[a as usize].phase == Phase::Processed)
    }

    /// Earliest time a queued original crosses `threshold` of waiting.
    fn next_threshold(&self, threshold: u64, skip_waited: bool) -> Option<u64> {
        let lo = self.clock.saturating_sub(threshold);
        self.queue
            .range((lo, 0)..)
            .take_while(|(s, _)| *s <= self.clock)
            .find(|(_, a)| {
                let t = &self.tasks[*a as usize];
                t.is_original() && !(skip_waited && t.reached(Phase::WaitingResources))
            })
            .map(|(s, _)| s + threshold + 1)
    }

    /// The next clock value and the attempt events due at it.
    fn advance_plan(&self) -> Option<(u64, Vec<(u32, TimedEvent)>)> {
        let mut tau: Option<u64> = None;
        let mut due: Vec<(u32, TimedEvent)> = Vec::new();
        for a in self.running_attempts() {
            if let Some((at, ev)) = self.next_event(a) {
                match tau {
                    Some(t) if at > t => {}
                    Some(t) if at == t => due.push((a, ev)),
                    _ => {
                        tau = Some(at);
                        due.clear();
                        due.push((a, ev));
                    }
                }
            }
        }
        let cfg = &self.model.config;
        let mut others = Vec::with_capacity(3);
        if let Some((s, _)) = self.queue.range((self.clock + 1, 0)..).next() {
            others.push(*s);
        }
        others.extend(self.next_threshold(cfg.fairness_wait_ms, true));
        if let Some(qt) = cfg.queue_timeout_ms {
            others.extend(self.next_threshold(qt, false));
        }
        for at in others {
            match tau {
                Some(t) if at >= t => {}
                _ => {
                    tau = Some(at);
                    due.clear();
                }
            }
        }
        tau.map(|t| (t, due))
    }

    /// Every enabled transition, in a fixed order.
    pub fn enabled(&self) -> Result<Vec<Transition>, ModelError> {
        let mut out = Vec::new();
        self.enabled_into(&mut out)?;
        Ok(out)
    }

    pub fn enabled_into(&self, out: &mut Vec<Transition>) -> Result<(), ModelError> {
        out.clear();
        if !self.kernel.active().is_empty() {
            let n = self.model.program.successors(&self.kernel)?.len();
            out.extend((0..n).map(|k| Transition::Activate(k as u16)));
        }
        if self.free_slots > 0 {
            if let Some(d) = policy::select(self.model.config.scheduler, self) {
                for (i, n) in self.nodes.iter().enumerate() {
                    if n.tracker_on && n.first_free_slot().is_some() {
                        out.push(Transition::Assign { task: d.task, node: i as u32 });
                    }
                }
            }
        }
        for n in &self.nodes {
            for a in n.slots.iter().flatten() {
                if self.is_runnable(*a) {
                    out.push(Transition::Execute { task: *a });
                }
            }
        }
        if out.is_empty() {
            if let Some((_, due)) = self.advance_plan() {
                if due.is_empty() {
                    out.push(Transition::Advance { task: None, event: TimedEvent::Tick });
                } else {
                    out.extend(due.into_iter().map(|(a, ev)| Transition::Advance { task: Some(a), event: ev }));
                }
            }
        }
        Ok(())
    }

    /// Applies a transition taken from [`GlobalState::enabled`]. Undo with [`GlobalState::undo`].
    pub fn apply(&mut self, t: Transition) -> Result<(), ModelError> {
        self.begin();
        if let Err(e) = self.apply_inner(t) {
            self.undo();
            return Err(e);
        }
        self.detect_deadlock();
        Ok(())
    }

    /// Like `apply`, but first checks that the transition is enabled.
    pub fn apply_checked(&mut self, t: Transition) -> Result<(), ModelError> {
        if !self.enabled()?.contains(&t) {
            return Err(ModelError::NotEnabled(t));
        }
        self.apply(t)
    }

    /// Pure successor relation: every enabled transition with its resulting state.
    pub fn successors(&self) -> Result<Vec<(Transition, GlobalState)>, ModelError> {
        let mut out = Vec::new();
        for t in self.enabled()? {
            let mut s = self.snapshot();
            s.apply(t)?;
            out.push((t, s.snapshot()));
        }
        Ok(out)
    }

    fn apply_inner(&mut self, t: Transition) -> Result<(), ModelError> {
        match t {
            Transition::Activate(k) => {
                let mut succ = self.model.program.successors(&self.kernel)?;
                if (k as usize) >= succ.len() {
                    return Err(ModelError::NotEnabled(t));
                }
                let (_, next) = succ.swap_remove(k as usize);
                self.set_kernel(next);
                self.sync_daemons();
            }
            Transition::Assign { task, node } => {
                let slot = self.nodes[node as usize].first_free_slot().ok_or(ModelError::NotEnabled(t))?;
                let mut ts = self.tasks[task as usize].clone();
                self.queue_remove(ts.submit_ms, task);
                self.set_slot(node, slot, Some(task));
                ts.phase = Phase::Scheduled;
                ts.node = Some(node);
                ts.slot = Some(slot);
                self.set_task(task, ts);
            }
            Transition::Execute { task } => {
                let mut ts = self.tasks[task as usize].clone();
                let (Some(node), Some(slot)) = (ts.node, ts.slot) else {
                    return Err(ModelError::NotEnabled(t));
                };
                if self.nodes[node as usize].slots[slot as usize] != Some(task) {
                    return Err(ModelError::SlotConflict { node, slot });
                }
                ts.phase = Phase::Processed;
                ts.start_ms = Some(self.clock);
                ts.local = Some(ts.preferred_node.is_none_or(|p| p == node));
                self.set_task(task, ts);
            }
            Transition::Advance { task, event } => {
                let tau = match task {
                    Some(a) => self.next_event(a).filter(|(_, ev)| *ev == event).ok_or(ModelError::NotEnabled(t))?.0,
                    None => self.advance_plan().ok_or(ModelError::NotEnabled(t))?.0,
                };
                let old = self.clock;
                self.set_clock(tau);
                self.apply_thresholds(old, tau);
                if let Some(a) = task {
                    if self.tasks[a as usize].phase == Phase::Processed {
                        match event {
                            TimedEvent::Finish => self.finish(a),
                            TimedEvent::Timeout => {
                                self.fail_original(self.tasks[a as usize].orig, FailureCause::Timeout)
                            }
                            TimedEvent::Checkpoint => self.checkpoint(a),
                            TimedEvent::Tick => {}
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn sync_daemons(&mut self) {
        let cell = |name: &str, i: usize| self.kernel.store.cell(name, i as i64).unwrap_or(0) == 1;
        let flags: Vec<(bool, bool)> =
            (0..self.nodes.len()).map(|i| (cell("DataNode", i), cell("TaskTracker", i))).collect();
        for (i, (d, t)) in flags.into_iter().enumerate() {
            self.set_node_flags(i as u32, d, t);
        }
    }

    fn apply_thresholds(&mut self, old: u64, tau: u64) {
        let cfg = &self.model.config;
        if let Some(qt) = cfg.queue_timeout_ms {
            let expired: Vec<u32> = self
                .queue
                .range((old.saturating_sub(qt), 0)..(tau.saturating_sub(qt), 0))
                .map(|(_, a)| *a)
                .filter(|&a| self.tasks[a as usize].is_original())
                .collect();
            for a in expired {
                if self.tasks[a as usize].phase.is_queued() {
                    self.fail_original(a, FailureCause::QueueWait);
                }
            }
        }
        let fw = self.model.config.fairness_wait_ms;
        let waiting: Vec<u32> = self
            .queue
            .range((old.saturating_sub(fw), 0)..(tau.saturating_sub(fw), 0))
            .map(|(_, a)| *a)
            .filter(|&a| {
                let t = &self.tasks[a as usize];
                t.is_original() && !t.reached(Phase::WaitingResources)
            })
            .collect();
        for a in waiting {
            self.mark_waiting(a, false);
        }
    }

    pub(crate) fn mark_waiting(&mut self, a: u32, deadlocked: bool) {
        let mut ts = self.tasks[a as usize].clone();
        if ts.phase == Phase::Submitted {
            ts.phase = Phase::WaitingResources;
        }
        ts.ever |= Phase::WaitingResources.bit();
        ts.deadlocked |= deadlocked;
        if ts != self.tasks[a as usize] {
            self.set_task(a, ts);
        }
    }

    /// Takes an attempt out of its slot or the queue.
    fn release(&mut self, a: u32, ts: &mut TaskState) {
        if let (Some(node), Some(slot)) = (ts.node, ts.slot) {
            if self.nodes[node as usize].slots[slot as usize] == Some(a) {
                self.set_slot(node, slot, None);
            }
        }
        if ts.phase.is_queued() {
            self.queue_remove(ts.submit_ms, a);
        }
        ts.node = None;
        ts.slot = None;
    }

    fn copies_of(&self, orig: u32) -> Vec<u32> {
        if self.tasks[orig as usize].checkpoints == 0 {
            return Vec::new();
        }
        (self.workload()..self.tasks.len())
            .filter(|&i| self.tasks[i].orig == orig)
            .map(|i| i as u32)
            .collect()
    }

    /// Resolves every attempt of `orig`: the original gets `phase`, `winner`
    /// (if a copy) gets it too, remaining copies are discarded.
    fn resolve(&mut self, orig: u32, phase: Phase, cause: Option<FailureCause>, winner: Option<u32>) {
        let now = self.clock;
        for c in self.copies_of(orig) {
            let mut ts = self.tasks[c as usize].clone();
            if ts.phase.is_terminal() {
                continue;
            }
            self.release(c, &mut ts);
            ts.phase = if Some(c) == winner { phase } else { Phase::Discarded };
            ts.finish_ms = Some(now);
            self.set_task(c, ts);
        }
        let mut ts = self.tasks[orig as usize].clone();
        self.release(orig, &mut ts);
        ts.phase = phase;
        ts.failure_cause = cause;
        ts.finish_ms = Some(now);
        self.set_task(orig, ts);
    }

    fn finish(&mut self, a: u32) {
        let orig = self.tasks[a as usize].orig;
        let t = &self.tasks[orig as usize];
        let phase = if self.clock <= t.deadline_ms {
            Phase::FinishedWithinDeadline
        } else {
            Phase::FinishedAfterDeadline
        };
        let (job, is_map) = (t.job, t.kind == AttemptKind::Map);
        self.resolve(orig, phase, None, Some(a));
        let mut js = self.jobs[job as usize];
        js.unresolved -= 1;
        if is_map {
            js.finished_maps += 1;
        }
        self.set_job(job, js);
    }

    fn fail_original(&mut self, orig: u32, cause: FailureCause) {
        if self.tasks[orig as usize].phase.is_terminal() {
            return;
        }
        let (job, is_map) = (self.tasks[orig as usize].job, self.tasks[orig as usize].kind == AttemptKind::Map);
        self.resolve(orig, Phase::Failed, Some(cause), None);
        let mut js = self.jobs[job as usize];
        js.unresolved -= 1;
        self.set_job(job, js);
        if is_map && !js.failed {
            self.cascade(job, None);
        }
    }

    /// Fails a job and everything downstream of it.
    fn cascade(&mut self, job: u32, from: Option<u32>) {
        let js = self.jobs[job as usize];
        self.set_job(job, JobState { failed: true, cascade_from: from.or(js.cascade_from), ..js });
        let members = self.model.jobs[job as usize].tasks.clone();
        for o in members {
            if !self.tasks[o as usize].phase.is_terminal() {
                self.fail_original(o, FailureCause::Cascade);
            }
        }
        let downstream = self.model.jobs[job as usize].downstream.clone();
        for d in downstream {
            if !self.jobs[d as usize].failed {
                self.cascade(d, Some(job));
            }
        }
    }

    fn checkpoint(&mut self, a: u32) {
        let cfg = &self.model.config;
        let mut ts = self.tasks[a as usize].clone();
        let k = ts.checkpoints + 1;
        if k > cfg.max_speculative {
            self.fail_original(a, FailureCause::SpeculativeLimit);
            return;
        }
        ts.checkpoints = k;
        let copy = TaskState {
            orig: a,
            attempt: k,
            kind: ts.kind.speculative(),
            submit_ms: self.clock,
            duration_ms: self.model.estimates[a as usize].round().max(1.0) as u64,
            phase: Phase::Submitted,
            ever: 0,
            start_ms: None,
            finish_ms: None,
            node: None,
            slot: None,
            local: None,
            failure_cause: None,
            deadlocked: false,
            checkpoints: 0,
            ..ts.clone()
        };
        self.set_task(a, ts);
        let idx = self.push_task(copy);
        self.queue_insert(self.clock, idx);
    }

    /// Display name of an attempt: the trace id, with `~k` for the k-th copy.
    pub fn attempt_name(&self, a: u32) -> String {
        let t = &self.tasks[a as usize];
        let base = &self.model.task_ids[t.orig as usize];
        if t.is_original() {
            base.clone()
        } else {
            format!("{base}~{}", t.attempt)
        }
    }

    /// The observable event of a transition enabled in this state.
    pub fn event_of(&self, t: Transition) -> Result<Event, ModelError> {
        Ok(match t {
            Transition::Activate(k) => {
                let succ = self.model.program.successors(&self.kernel)?;
                succ.into_iter().nth(k as usize).ok_or(ModelError::NotEnabled(t))?.0
            }
            Transition::Assign { task, node } => Event::with_payload(format!("signedtask.{node}"), i64::from(task)),
            Transition::Execute { task } => Event::new(format!("execute.{}", self.attempt_name(task))),
            Transition::Advance { task: Some(a), event } => {
                let name = match event {
                    TimedEvent::Finish => "finish",
                    TimedEvent::Timeout => "timeout",
                    TimedEvent::Checkpoint => "speculate",
                    TimedEvent::Tick => "tick",
                };
                Event::new(format!("{name}.{}", self.attempt_name(a)))
            }
            Transition::Advance { task: None, .. } => Event::new("tick"),
        })
    }
}
