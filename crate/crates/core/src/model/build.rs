use std::collections::BTreeSet;
use std::sync::Arc;

use super::state::{Counters, GlobalState, JobState, NodeState};
use super::{AttemptKind, ModelError, Phase, TaskState};
use crate::config::ClusterConfig;
use crate::kernel::parse::{parse_block, parse_expr};
use crate::kernel::{EventLabel, Expr, KernelState, Process, Program, Store, Value};
use crate::trace::{Outcome, TaskKind, WorkloadTrace};

pub const ON: i64 = 1;
pub const OFF: i64 = 0;

#[derive(Debug, Clone)]
pub struct JobInfo {
    pub id: String,
    pub tasks: Vec<u32>,
    pub maps: u32,
    pub upstream: Option<u32>,
    pub downstream: Vec<u32>,
}

/// Everything about a run that never changes during exploration.
#[derive(Debug)]
pub struct Model {
    pub config: ClusterConfig,
    pub task_ids: Vec<String>,
    pub truth: Vec<Outcome>,
    pub jobs: Vec<JobInfo>,
    /// Mean duration of the task's job and kind; the speculation baseline.
    pub estimates: Vec<f64>,
    pub program: Program,
    pub(crate) initial_tasks: Vec<TaskState>,
    pub(crate) initial_kernel: KernelState,
}

impl Model {
    pub fn workload(&self) -> usize {
        self.task_ids.len()
    }

    pub fn pool_of(&self, job: u32) -> usize {
        job as usize % self.config.fair_pools
    }

    pub fn capacity_queue_of(&self, job: u32) -> usize {
        job as usize % self.config.capacity_queues.len()
    }
}

fn cluster_program() -> Result<Program, ModelError> {
    let mut p = Program::new();
    let skip = || Process::Skip;
    p.define(
        "NameNode_activate",
        &[],
        Process::prefix_with(EventLabel::plain("activate_nn"), parse_block("NameNode = ON")?, skip()),
    );
    p.define(
        "JobTracker_activate",
        &[],
        Process::prefix_with(EventLabel::plain("activate_jt"), parse_block("JobTracker = ON")?, skip()),
    );
    p.define(
        "DataNode_activate",
        &["i"],
        Process::guard(
            parse_expr("DataNode[i] == OFF && NameNode == ON")?,
            Process::prefix_with(
                EventLabel::indexed("activate_dn", vec![Expr::var("i")]),
                parse_block("DataNode[i] = ON")?,
                skip(),
            ),
        ),
    );
    p.define(
        "TaskTracker_activate",
        &["i"],
        Process::guard(
            parse_expr("TaskTracker[i] == OFF && JobTracker == ON")?,
            Process::prefix_with(
                EventLabel::indexed("activate_tt", vec![Expr::var("i")]),
                parse_block("TaskTracker[i] = ON; trackercount++; slotTT[i] = slotsnb")?,
                skip(),
            ),
        ),
    );
    let each = |name: &str| {
        Process::indexed_par(
            "i",
            Expr::Const(0),
            parse_expr("N - 1").expect("static expression"),
            Process::call(name, vec![Expr::var("i")]),
        )
    };
    p.define(
        "Cluster",
        &[],
        Process::par(
            Process::par(Process::call("NameNode_activate", vec![]), Process::call("JobTracker_activate", vec![])),
            Process::par(each("DataNode_activate"), each("TaskTracker_activate")),
        ),
    );
    Ok(p)
}

fn initial_store(config: &ClusterConfig, workload: usize) -> Store {
    let n = config.node_count;
    Store::new()
        .with("ON", Value::Int(ON))
        .with("OFF", Value::Int(OFF))
        .with("N", Value::Int(n as i64))
        .with("NameNode", Value::Int(OFF))
        .with("JobTracker", Value::Int(OFF))
        .with("DataNode", Value::Array(vec![OFF; n]))
        .with("TaskTracker", Value::Array(vec![OFF; n]))
        .with("slotTT", Value::Array(vec![0; n]))
        .with("trackercount", Value::Int(0))
        .with("slotsnb", Value::Int(config.slots_per_node as i64))
        .with("maxqueue", Value::Int(config.max_queue as i64))
        .with("workload", Value::Int(workload as i64))
}

/// Builds the initial cluster state: every daemon OFF, the whole workload queued
/// in submit order, clock at 0.
pub fn build_cluster(config: &ClusterConfig, workload: &WorkloadTrace) -> Result<GlobalState, ModelError> {
    config.validate()?;
    if workload.is_empty() {
        return Err(ModelError::EmptyWorkload);
    }
    let records = workload.records();

    let mut jobs: Vec<JobInfo> = workload
        .jobs()
        .iter()
        .map(|j| JobInfo {
            id: j.id.clone(),
            tasks: j.tasks.iter().map(|&t| t as u32).collect(),
            maps: j.maps as u32,
            upstream: j.upstream.map(|u| u as u32),
            downstream: Vec::new(),
        })
        .collect();
    for j in 0..jobs.len() {
        if let Some(u) = jobs[j].upstream {
            jobs[u as usize].downstream.push(j as u32);
        }
    }

    let mut estimates = vec![0.0; records.len()];
    for job in &jobs {
        for kind in [TaskKind::Map, TaskKind::Reduce] {
            let members: Vec<u32> =
                job.tasks.iter().copied().filter(|&t| records[t as usize].kind == kind).collect();
            if members.is_empty() {
                continue;
            }
            let mean = members.iter().map(|&t| records[t as usize].duration_ms as f64).sum::<f64>()
                / members.len() as f64;
            for t in members {
                estimates[t as usize] = mean;
            }
        }
    }

    let initial_tasks: Vec<TaskState> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let deadline_ms = r.deadline_ms.unwrap_or_else(|| {
                r.submit_ms + (config.deadline_factor * r.duration_ms as f64).round() as u64
            });
            TaskState {
                orig: i as u32,
                attempt: 0,
                job: workload.job_of(i) as u32,
                kind: match r.kind {
                    TaskKind::Map => AttemptKind::Map,
                    TaskKind::Reduce => AttemptKind::Reduce,
                },
                submit_ms: r.submit_ms,
                duration_ms: r.duration_ms,
                deadline_ms,
                preferred_node: r.preferred_node,
                phase: Phase::Submitted,
                ever: Phase::Submitted.bit(),
                start_ms: None,
                finish_ms: None,
                node: None,
                slot: None,
                local: None,
                failure_cause: None,
                deadlocked: false,
                checkpoints: 0,
            }
        })
        .collect();

    let program = cluster_program()?;
    let initial_kernel =
        KernelState::new(vec![Process::call("Cluster", vec![])], initial_store(config, records.len()));

    let model = Arc::new(Model {
        config: config.clone(),
        task_ids: records.iter().map(|r| r.task_id.clone()).collect(),
        truth: records.iter().map(|r| r.outcome).collect(),
        jobs,
        estimates,
        program,
        initial_tasks,
        initial_kernel,
    });
    Ok(GlobalState::initial(model))
}

impl GlobalState {
    pub(crate) fn initial(model: Arc<Model>) -> GlobalState {
        let config = &model.config;
        let mut nodes = vec![
            NodeState {
                datanode_on: false,
                tracker_on: false,
                slots: vec![None; config.slots_per_node],
                occupancy: 0,
                pinned_by: 0,
            };
            config.node_count
        ];
        for t in &model.initial_tasks {
            if let Some(p) = t.preferred_node {
                if let Some(n) = nodes.get_mut(p as usize) {
                    n.pinned_by += 1;
                }
            }
        }
        let jobs = model
            .jobs
            .iter()
            .map(|j| JobState {
                finished_maps: 0,
                failed: false,
                cascade_from: None,
                unresolved: j.tasks.len() as u32,
            })
            .collect();
        let queue: BTreeSet<(u64, u32)> =
            model.initial_tasks.iter().enumerate().map(|(i, t)| (t.submit_ms, i as u32)).collect();
        let mut counters = Counters::default();
        for t in &model.initial_tasks {
            counters.add(t, config.fairness_wait_ms);
        }
        GlobalState::assemble(model.clone(), model.initial_kernel.clone(), model.initial_tasks.clone(), nodes, jobs, queue, counters)
    }
}
