//! Bundled regression fixtures and the property battery run against each.

use std::path::PathBuf;

use schedcheck_core::checker::{parse_goal_expr, AssertionShape, Property, TaskAssertion, TaskSelector};
use schedcheck_core::config::ClusterConfig;
use schedcheck_core::model::Phase;
use schedcheck_core::trace::{self, WorkloadTrace};

/// Small fixtures: at most 3 nodes, 2 slots per node and 6 tasks.
pub const FIXTURES: &[&str] = &[
    "map_only_one_slot",
    "map_only_three_nodes",
    "map_only_pinned",
    "reduce_gating",
    "slowstart_gating",
    "speculative_copy",
    "speculative_limit",
    "timeout",
    "deadlock_cycle",
    "cascade_chain",
    "fair_pools",
    "capacity_queues",
    "queue_timeout",
    "three_nodes_mixed",
    "late_finish",
    "analysis_six",
];

/// Fixtures whose nodes are all anonymous and identical, with at least three nodes.
pub const SYMMETRIC_FIXTURES: &[&str] = &["map_only_three_nodes", "three_nodes_mixed"];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn load(name: &str) -> (ClusterConfig, WorkloadTrace) {
    let dir = fixture_dir();
    let conf = std::fs::read_to_string(dir.join(format!("{name}.conf"))).expect("fixture config");
    let cfg = ClusterConfig::parse(&conf).expect("valid fixture config");
    let trace = trace::parse(&[dir.join(format!("{name}.csv"))]).expect("valid fixture trace");
    (cfg, trace)
}

const GOALS: &[&str] = &[
    "completedscheduled == workload && workload > 0",
    "completedscheduled == workload && schedulabilityrate > 80",
    "schedulabilityrate == 100",
    "schedulabilityrate >= 50",
    "schedulabilityrate > 0",
    "fairnessrate == 100",
    "fairnessrate > 50",
    "fairnessrate == 50 && completedscheduled == workload",
    "resourcedeadlockrate > 0",
    "resourcedeadlockrate == 50",
    "resourcedeadlockrate > 50",
    "completedscheduled > 2",
    "completedscheduled == 1",
];

const PHASES: &[Phase] = &[
    Phase::WaitingResources,
    Phase::Scheduled,
    Phase::Processed,
    Phase::FinishedWithinDeadline,
    Phase::FinishedAfterDeadline,
    Phase::Failed,
    Phase::Discarded,
];

/// Every goal above plus both assertion shapes for every phase, over the whole
/// workload and over each task.
pub fn properties(trace: &WorkloadTrace) -> Vec<Property> {
    let mut out: Vec<Property> = GOALS
        .iter()
        .map(|g| Property::Reaches { cluster: "cluster1".into(), goal: parse_goal_expr(g).expect("battery goal") })
        .collect();
    let selectors = std::iter::once(TaskSelector::All)
        .chain(trace.records().iter().map(|r| TaskSelector::Id(r.task_id.clone())));
    for selector in selectors {
        for &p in PHASES {
            for shape in [AssertionShape::EventuallyReaches(p), AssertionShape::NeverReaches(p)] {
                out.push(Property::Task(TaskAssertion { selector: selector.clone(), shape }));
            }
        }
    }
    out
}
