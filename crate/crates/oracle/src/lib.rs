//! Brute-force reference semantics for the cluster model.
//!
//! Every reachable state is enumerated breadth first with a plain cloned state
//! (no undo journal, no incremental counters, no fingerprints), and each verdict
//! is computed straight from its definition over the enumerated space:
//!
//! * a goal is reachable iff some enumerated state satisfies it;
//! * `EventuallyReaches` fails iff some dead-end state has a selected task that
//!   was never observed in the phase;
//! * `NeverReaches` fails iff some state has a selected task currently in the phase.
//!
//! Only the input types (config, trace, properties) are shared with the checker.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use schedcheck_core::checker::{
    AssertionShape, Comparator, GoalExpr, Metric, Operand, Property, RateCounts, TaskSelector,
};
use schedcheck_core::config::{ClusterConfig, SchedulerKind};
use schedcheck_core::model::Phase;
use schedcheck_core::trace::{TaskKind, WorkloadTrace};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("more than {0} reachable states")]
    TooManyStates(usize),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
}

struct Task {
    id: String,
    job: usize,
    is_map: bool,
    submit: u64,
    duration: u64,
    deadline: u64,
    preferred: Option<usize>,
    estimate: f64,
}

struct Job {
    members: Vec<usize>,
    maps: usize,
    upstream: Option<usize>,
    downstream: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Attempt {
    orig: usize,
    copy: u8,
    submit: u64,
    duration: u64,
    phase: Phase,
    /// Phases this attempt has been observed in, as a bit set.
    seen: u16,
    start: Option<u64>,
    node: Option<usize>,
    slot: Option<usize>,
    local: Option<bool>,
    deadlocked: bool,
    checkpoints: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    name_node: bool,
    job_tracker: bool,
    data_nodes: Vec<bool>,
    trackers: Vec<bool>,
    clock: u64,
    attempts: Vec<Attempt>,
    slots: Vec<Vec<Option<usize>>>,
    job_failed: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Ev {
    Finish,
    Timeout,
    Checkpoint,
}

#[derive(Debug, Clone, Copy)]
enum Step {
    NameNode,
    JobTracker,
    DataNode(usize),
    Tracker(usize),
    Assign(usize, usize),
    Execute(usize),
    Tick(u64),
    Fire(usize, Ev, u64),
}

fn bit(p: Phase) -> u16 {
    1 << (p as u16)
}

fn queued(p: Phase) -> bool {
    p == Phase::Submitted || p == Phase::WaitingResources
}

fn terminal(p: Phase) -> bool {
    matches!(
        p,
        Phase::FinishedWithinDeadline | Phase::FinishedAfterDeadline | Phase::Failed | Phase::Discarded
    )
}

fn finished(p: Phase) -> bool {
    p == Phase::FinishedWithinDeadline || p == Phase::FinishedAfterDeadline
}

pub struct Oracle {
    cfg: ClusterConfig,
    tasks: Vec<Task>,
    jobs: Vec<Job>,
}

/// The enumerated state space.
pub struct Space {
    states: Vec<State>,
    dead_end: Vec<bool>,
}

impl Space {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn dead_ends(&self) -> usize {
        self.dead_end.iter().filter(|d| **d).count()
    }
}

impl Oracle {
    pub fn new(cfg: &ClusterConfig, trace: &WorkloadTrace) -> Oracle {
        let records = trace.records();
        let mut job_ids: Vec<&str> = Vec::new();
        let mut jobs: Vec<Job> = Vec::new();
        let mut job_of = Vec::new();
        for (i, r) in records.iter().enumerate() {
            let j = match job_ids.iter().position(|id| *id == r.job_id) {
                Some(j) => j,
                None => {
                    job_ids.push(&r.job_id);
                    jobs.push(Job { members: Vec::new(), maps: 0, upstream: None, downstream: Vec::new() });
                    jobs.len() - 1
                }
            };
            jobs[j].members.push(i);
            if r.kind == TaskKind::Map {
                jobs[j].maps += 1;
            }
            job_of.push(j);
        }
        for r in records {
            if let Some(up) = &r.upstream_job {
                let j = job_ids.iter().position(|id| *id == r.job_id).unwrap();
                let u = job_ids.iter().position(|id| id == up).unwrap();
                jobs[j].upstream = Some(u);
            }
        }
        for j in 0..jobs.len() {
            if let Some(u) = jobs[j].upstream {
                jobs[u].downstream.push(j);
            }
        }
        let tasks = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let same: Vec<u64> = records
                    .iter()
                    .enumerate()
                    .filter(|(k, o)| job_of[*k] == job_of[i] && o.kind == r.kind)
                    .map(|(_, o)| o.duration_ms)
                    .collect();
                Task {
                    id: r.task_id.clone(),
                    job: job_of[i],
                    is_map: r.kind == TaskKind::Map,
                    submit: r.submit_ms,
                    duration: r.duration_ms,
                    deadline: r
                        .deadline_ms
                        .unwrap_or(r.submit_ms + (cfg.deadline_factor * r.duration_ms as f64).round() as u64),
                    preferred: r.preferred_node.map(|p| p as usize),
                    estimate: same.iter().sum::<u64>() as f64 / same.len() as f64,
                }
            })
            .collect();
        Oracle { cfg: cfg.clone(), tasks, jobs }
    }

    fn initial(&self) -> State {
        let n = self.cfg.node_count;
        State {
            name_node: false,
            job_tracker: false,
            data_nodes: vec![false; n],
            trackers: vec![false; n],
            clock: 0,
            attempts: self
                .tasks
                .iter()
                .enumerate()
                .map(|(i, t)| Attempt {
                    orig: i,
                    copy: 0,
                    submit: t.submit,
                    duration: t.duration,
                    phase: Phase::Submitted,
                    seen: bit(Phase::Submitted),
                    start: None,
                    node: None,
                    slot: None,
                    local: None,
                    deadlocked: false,
                    checkpoints: 0,
                })
                .collect(),
            slots: vec![vec![None; self.cfg.slots_per_node]; n],
            job_failed: vec![false; self.jobs.len()],
        }
    }

    // ---- derived quantities ---------------------------------------------------

    fn job(&self, s: &State, a: usize) -> usize {
        self.tasks[s.attempts[a].orig].job
    }

    fn finished_maps(&self, s: &State, j: usize) -> usize {
        self.jobs[j]
            .members
            .iter()
            .filter(|&&m| self.tasks[m].is_map && finished(s.attempts[m].phase))
            .count()
    }

    fn job_resolved(&self, s: &State, j: usize) -> bool {
        self.jobs[j].members.iter().all(|&m| terminal(s.attempts[m].phase))
    }

    fn free_slots(&self, s: &State) -> usize {
        (0..s.slots.len())
            .filter(|&n| s.trackers[n])
            .map(|n| s.slots[n].iter().filter(|x| x.is_none()).count())
            .sum()
    }

    /// Queued attempts in `(submit, index)` order.
    fn queue(&self, s: &State) -> Vec<usize> {
        let mut q: Vec<usize> = (0..s.attempts.len()).filter(|&a| queued(s.attempts[a].phase)).collect();
        q.sort_by_key(|&a| (s.attempts[a].submit, a));
        q
    }

    fn eligible(&self, s: &State, a: usize) -> bool {
        let at = &s.attempts[a];
        if !queued(at.phase) || at.submit > s.clock {
            return false;
        }
        if at.copy > 0 {
            return s.attempts[at.orig].phase == Phase::Processed;
        }
        let j = self.tasks[a].job;
        if s.job_failed[j] {
            return false;
        }
        if let Some(u) = self.jobs[j].upstream {
            if !self.job_resolved(s, u) || s.job_failed[u] {
                return false;
            }
        }
        if !self.tasks[a].is_map {
            return self.finished_maps(s, j) as f64 >= self.cfg.reduce_slowstart * self.jobs[j].maps as f64;
        }
        true
    }

    fn runnable(&self, s: &State, a: usize) -> bool {
        let at = &s.attempts[a];
        if at.phase != Phase::Scheduled {
            return false;
        }
        if at.copy == 0 && !self.tasks[a].is_map {
            let j = self.tasks[a].job;
            return self.finished_maps(s, j) == self.jobs[j].maps;
        }
        true
    }

    /// Eligible entries among the first `max_queue` queue entries that have arrived.
    fn window(&self, s: &State) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (i, a) in self.queue(s).into_iter().take(self.cfg.max_queue).enumerate() {
            if s.attempts[a].submit > s.clock {
                break;
            }
            if self.eligible(s, a) {
                out.push((i, a));
            }
        }
        out
    }

    fn select(&self, s: &State) -> Option<usize> {
        let window = self.window(s);
        let on_slots = (0..s.slots.len()).filter(|&n| s.trackers[n]).count() * self.cfg.slots_per_node;
        let group_stats = |groups: usize, group: &dyn Fn(usize) -> usize| {
            let mut running = vec![0usize; groups];
            for node in &s.slots {
                for a in node.iter().flatten() {
                    running[group(self.job(s, *a))] += 1;
                }
            }
            let mut first: Vec<Option<(usize, usize)>> = vec![None; groups];
            for &(i, a) in &window {
                let g = group(self.job(s, a));
                if first[g].is_none() {
                    first[g] = Some((i, a));
                }
            }
            (running, first)
        };
        match self.cfg.scheduler {
            SchedulerKind::Fifo => window.first().map(|&(_, a)| a),
            SchedulerKind::Fair => {
                let pools = self.cfg.fair_pools;
                let (running, first) = group_stats(pools, &|j| j % pools);
                let share = on_slots as f64 / pools as f64;
                let mut best: Option<(f64, usize, usize)> = None;
                for p in 0..pools {
                    if let Some((i, a)) = first[p] {
                        let deficit = share - running[p] as f64;
                        let better = match best {
                            None => true,
                            Some((d, bi, _)) => deficit > d || (deficit == d && i < bi),
                        };
                        if better {
                            best = Some((deficit, i, a));
                        }
                    }
                }
                best.map(|b| b.2)
            }
            SchedulerKind::Capacity => {
                let qs = &self.cfg.capacity_queues;
                let (running, first) = group_stats(qs.len(), &|j| j % qs.len());
                for q in 0..qs.len() {
                    if let Some((_, a)) = first[q] {
                        if (running[q] as f64) < qs[q].fraction * on_slots as f64 {
                            return Some(a);
                        }
                    }
                }
                first.iter().flatten().min().map(|&(_, a)| a)
            }
        }
    }

    fn next_event(&self, s: &State, a: usize) -> Option<(u64, Ev)> {
        let at = &s.attempts[a];
        if at.phase != Phase::Processed {
            return None;
        }
        let start = at.start.unwrap();
        let mut best = (start + at.duration, Ev::Finish);
        if at.duration > self.cfg.task_timeout_ms && start + self.cfg.task_timeout_ms < best.0 {
            best = (start + self.cfg.task_timeout_ms, Ev::Timeout);
        }
        if at.copy == 0 && self.cfg.max_speculative > 0 {
            let k = (at.checkpoints + 1) as f64;
            let delay = (k * self.cfg.speculation_factor * self.tasks[a].estimate).ceil().max(1.0) as u64;
            if start + delay < best.0 {
                best = (start + delay, Ev::Checkpoint);
            }
        }
        Some(best)
    }

    fn running(&self, s: &State) -> Vec<usize> {
        s.slots
            .iter()
            .flat_map(|n| n.iter().flatten().copied())
            .filter(|&a| s.attempts[a].phase == Phase::Processed)
            .collect()
    }

    fn steps(&self, s: &State) -> Vec<Step> {
        let mut out = Vec::new();
        if !s.name_node {
            out.push(Step::NameNode);
        }
        if !s.job_tracker {
            out.push(Step::JobTracker);
        }
        for i in 0..s.data_nodes.len() {
            if s.name_node && !s.data_nodes[i] {
                out.push(Step::DataNode(i));
            }
            if s.job_tracker && !s.trackers[i] {
                out.push(Step::Tracker(i));
            }
        }
        if self.free_slots(s) > 0 {
            if let Some(a) = self.select(s) {
                for n in 0..s.slots.len() {
                    if s.trackers[n] && s.slots[n].iter().any(Option::is_none) {
                        out.push(Step::Assign(a, n));
                    }
                }
            }
        }
        for node in &s.slots {
            for &a in node.iter().flatten() {
                if self.runnable(s, a) {
                    out.push(Step::Execute(a));
                }
            }
        }
        if !out.is_empty() {
            return out;
        }

        let events: Vec<(usize, u64, Ev)> = self
            .running(s)
            .into_iter()
            .filter_map(|a| self.next_event(s, a).map(|(t, e)| (a, t, e)))
            .collect();
        let mut times: Vec<u64> = events.iter().map(|e| e.1).collect();
        for &a in &self.queue(s) {
            let at = &s.attempts[a];
            if at.submit > s.clock {
                times.push(at.submit);
                continue;
            }
            if at.copy > 0 {
                continue;
            }
            let waited = s.clock - at.submit;
            if waited <= self.cfg.fairness_wait_ms && at.seen & bit(Phase::WaitingResources) == 0 {
                times.push(at.submit + self.cfg.fairness_wait_ms + 1);
            }
            if let Some(qt) = self.cfg.queue_timeout_ms {
                if waited <= qt {
                    times.push(at.submit + qt + 1);
                }
            }
        }
        let Some(&tau) = times.iter().min() else { return out };
        for (a, t, e) in events {
            if t == tau {
                out.push(Step::Fire(a, e, tau));
            }
        }
        if out.is_empty() {
            out.push(Step::Tick(tau));
        }
        out
    }

    // ---- effects ------------------------------------------------------------------

    fn release(&self, s: &mut State, a: usize) {
        if let (Some(n), Some(k)) = (s.attempts[a].node, s.attempts[a].slot) {
            if s.slots[n][k] == Some(a) {
                s.slots[n][k] = None;
            }
        }
        s.attempts[a].node = None;
        s.attempts[a].slot = None;
    }

    fn resolve(&self, s: &mut State, orig: usize, phase: Phase, winner: Option<usize>) {
        for c in 0..s.attempts.len() {
            if s.attempts[c].orig == orig && s.attempts[c].copy > 0 && !terminal(s.attempts[c].phase) {
                self.release(s, c);
                s.attempts[c].phase = if winner == Some(c) { phase } else { Phase::Discarded };
            }
        }
        self.release(s, orig);
        s.attempts[orig].phase = phase;
    }

    fn fail(&self, s: &mut State, orig: usize) {
        if terminal(s.attempts[orig].phase) {
            return;
        }
        self.resolve(s, orig, Phase::Failed, None);
        let j = self.tasks[orig].job;
        if self.tasks[orig].is_map && !s.job_failed[j] {
            self.cascade(s, j);
        }
    }

    fn cascade(&self, s: &mut State, j: usize) {
        s.job_failed[j] = true;
        for &m in &self.jobs[j].members {
            self.fail(s, m);
        }
        for &d in &self.jobs[j].downstream {
            if !s.job_failed[d] {
                self.cascade(s, d);
            }
        }
    }

    fn move_clock(&self, s: &mut State, tau: u64) {
        s.clock = tau;
        if let Some(qt) = self.cfg.queue_timeout_ms {
            let expired: Vec<usize> = self
                .queue(s)
                .into_iter()
                .filter(|&a| s.attempts[a].copy == 0 && s.attempts[a].submit + qt < tau)
                .collect();
            for a in expired {
                if queued(s.attempts[a].phase) {
                    self.fail(s, a);
                }
            }
        }
        let fw = self.cfg.fairness_wait_ms;
        for a in self.queue(s) {
            let at = &mut s.attempts[a];
            if at.copy == 0 && at.submit + fw < tau && at.seen & bit(Phase::WaitingResources) == 0 {
                at.phase = Phase::WaitingResources;
            }
        }
    }

    fn apply(&self, s: &State, step: Step) -> State {
        let mut s = s.clone();
        match step {
            Step::NameNode => s.name_node = true,
            Step::JobTracker => s.job_tracker = true,
            Step::DataNode(i) => s.data_nodes[i] = true,
            Step::Tracker(i) => s.trackers[i] = true,
            Step::Assign(a, n) => {
                let k = s.slots[n].iter().position(Option::is_none).unwrap();
                s.slots[n][k] = Some(a);
                let at = &mut s.attempts[a];
                at.phase = Phase::Scheduled;
                at.node = Some(n);
                at.slot = Some(k);
            }
            Step::Execute(a) => {
                let pref = self.tasks[s.attempts[a].orig].preferred;
                let clock = s.clock;
                let at = &mut s.attempts[a];
                at.phase = Phase::Processed;
                at.start = Some(clock);
                at.local = Some(pref.is_none() || pref == at.node);
            }
            Step::Tick(tau) => self.move_clock(&mut s, tau),
            Step::Fire(a, ev, tau) => {
                self.move_clock(&mut s, tau);
                if s.attempts[a].phase == Phase::Processed {
                    let orig = s.attempts[a].orig;
                    match ev {
                        Ev::Finish => {
                            let phase = if s.clock <= self.tasks[orig].deadline {
                                Phase::FinishedWithinDeadline
                            } else {
                                Phase::FinishedAfterDeadline
                            };
                            self.resolve(&mut s, orig, phase, Some(a));
                        }
                        Ev::Timeout => self.fail(&mut s, orig),
                        Ev::Checkpoint => {
                            let k = s.attempts[a].checkpoints + 1;
                            if k > self.cfg.max_speculative {
                                self.fail(&mut s, a);
                            } else {
                                s.attempts[a].checkpoints = k;
                                s.attempts.push(Attempt {
                                    orig: a,
                                    copy: k,
                                    submit: s.clock,
                                    duration: self.tasks[a].estimate.round().max(1.0) as u64,
                                    phase: Phase::Submitted,
                                    seen: 0,
                                    start: None,
                                    node: None,
                                    slot: None,
                                    local: None,
                                    deadlocked: false,
                                    checkpoints: 0,
                                });
                            }
                        }
                    }
                }
            }
        }
        self.flag_deadlocks(&mut s);
        for at in &mut s.attempts {
            at.seen |= bit(at.phase);
        }
        s
    }

    /// Blocked tasks whose job lies on a cycle of the job wait-for graph.
    fn flag_deadlocks(&self, s: &mut State) {
        if self.free_slots(s) > 0 || s.trackers.iter().any(|t| !t) {
            return;
        }
        let mut holders = Vec::new();
        for node in &s.slots {
            for &a in node.iter().flatten() {
                if s.attempts[a].phase != Phase::Scheduled || self.runnable(s, a) {
                    return;
                }
                holders.push(self.job(s, a));
            }
        }
        let blocked: Vec<usize> = self.window(s).into_iter().map(|(_, a)| a).collect();
        if blocked.is_empty() {
            return;
        }
        let mut edges: HashMap<usize, HashSet<usize>> = HashMap::new();
        for &b in &blocked {
            for &h in &holders {
                edges.entry(self.job(s, b)).or_default().insert(h);
            }
        }
        for &h in &holders {
            edges.entry(h).or_default().insert(h);
        }
        let on_cycle = |j: usize| {
            let mut stack: Vec<usize> = edges.get(&j).map(|e| e.iter().copied().collect()).unwrap_or_default();
            let mut seen = HashSet::new();
            while let Some(x) = stack.pop() {
                if x == j {
                    return true;
                }
                if seen.insert(x) {
                    stack.extend(edges.get(&x).into_iter().flatten().copied());
                }
            }
            false
        };
        for b in blocked {
            if on_cycle(self.job(s, b)) && !s.attempts[b].deadlocked {
                let at = &mut s.attempts[b];
                at.deadlocked = true;
                if at.phase == Phase::Submitted {
                    at.phase = Phase::WaitingResources;
                }
                at.seen |= bit(Phase::WaitingResources);
            }
        }
    }

    // ---- enumeration and verdicts ------------------------------------------------------------

    /// Enumerates every reachable state, failing past `limit` states.
    pub fn enumerate(&self, limit: usize) -> Result<Space, OracleError> {
        let init = self.initial();
        let mut seen: HashSet<State> = HashSet::new();
        let mut states = Vec::new();
        let mut dead_end = Vec::new();
        let mut frontier = VecDeque::new();
        seen.insert(init.clone());
        frontier.push_back(init);
        while let Some(s) = frontier.pop_front() {
            let steps = self.steps(&s);
            dead_end.push(steps.is_empty());
            for step in steps {
                let next = self.apply(&s, step);
                if seen.insert(next.clone()) {
                    if seen.len() > limit {
                        return Err(OracleError::TooManyStates(limit));
                    }
                    frontier.push_back(next);
                }
            }
            states.push(s);
        }
        Ok(Space { states, dead_end })
    }

    pub fn counts(&self, s: &State) -> RateCounts {
        let originals = &s.attempts[..self.tasks.len()];
        let fw = self.cfg.fairness_wait_ms;
        let count = |f: &dyn Fn(&Attempt) -> bool| originals.iter().filter(|a| f(a)).count() as u64;
        RateCounts {
            workload: self.tasks.len() as u64,
            ever_scheduled: count(&|a| a.seen & bit(Phase::Scheduled) != 0),
            finished_within: count(&|a| a.phase == Phase::FinishedWithinDeadline),
            served_fair: count(&|a| a.start.is_some_and(|st| st - a.submit <= fw)),
            flagged: count(&|a| a.deadlocked),
            completedscheduled: count(&|a| {
                matches!(
                    a.phase,
                    Phase::Processed | Phase::FinishedWithinDeadline | Phase::FinishedAfterDeadline | Phase::Failed
                )
            }),
        }
    }

    fn value(c: &RateCounts, m: Metric) -> f64 {
        let pct = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        match m {
            Metric::CompletedScheduled => c.completedscheduled as f64,
            Metric::Workload => c.workload as f64,
            Metric::SchedulabilityRate => pct(c.finished_within, c.ever_scheduled),
            Metric::FairnessRate => pct(c.served_fair, c.workload),
            Metric::ResourceDeadlockRate => pct(c.flagged, c.workload),
        }
    }

    fn goal_holds(goal: &GoalExpr, c: &RateCounts) -> bool {
        goal.atoms.iter().all(|atom| {
            let lhs = Self::value(c, atom.metric);
            let rhs = match atom.rhs {
                Operand::Number(n) => n,
                Operand::Metric(m) => Self::value(c, m),
            };
            let rate = matches!(
                atom.metric,
                Metric::SchedulabilityRate | Metric::FairnessRate | Metric::ResourceDeadlockRate
            );
            match atom.cmp {
                Comparator::Eq if rate => lhs >= rhs,
                Comparator::Eq => lhs == rhs,
                Comparator::Gt => lhs > rhs,
                Comparator::Ge => lhs >= rhs,
            }
        })
    }

    fn targets(&self, sel: &TaskSelector) -> Result<Vec<usize>, OracleError> {
        match sel {
            TaskSelector::All => Ok((0..self.tasks.len()).collect()),
            TaskSelector::Id(id) => self
                .tasks
                .iter()
                .position(|t| &t.id == id)
                .map(|i| vec![i])
                .ok_or_else(|| OracleError::UnknownTask(id.clone())),
        }
    }

    /// True if the property is valid over the enumerated space.
    pub fn verdict(&self, space: &Space, property: &Property) -> Result<bool, OracleError> {
        match property {
            Property::Reaches { goal, .. } => {
                Ok(space.states.iter().any(|s| Self::goal_holds(goal, &self.counts(s))))
            }
            Property::Task(a) => {
                let targets = self.targets(&a.selector)?;
                Ok(match a.shape {
                    AssertionShape::EventuallyReaches(p) => !space.states.iter().zip(&space.dead_end).any(|(s, &d)| {
                        d && targets.iter().any(|&t| s.attempts[t].seen & bit(p) == 0)
                    }),
                    AssertionShape::NeverReaches(p) => {
                        !space.states.iter().any(|s| targets.iter().any(|&t| s.attempts[t].phase == p))
                    }
                })
            }
        }
    }

    pub fn terminal_rates(&self, space: &Space) -> BTreeSet<RateCounts> {
        space
            .states
            .iter()
            .zip(&space.dead_end)
            .filter(|(_, d)| **d)
            .map(|(s, _)| self.counts(s))
            .collect()
    }

    /// Smallest and largest number of original tasks not finished at a dead end.
    pub fn failure_range(&self, space: &Space) -> Option<(usize, usize)> {
        let fails = space.states.iter().zip(&space.dead_end).filter(|(_, d)| **d).map(|(s, _)| {
            s.attempts[..self.tasks.len()].iter().filter(|a| !finished(a.phase)).count()
        });
        let v: Vec<usize> = fails.collect();
        Some((*v.iter().min()?, *v.iter().max()?))
    }
}


pub mod battery;
