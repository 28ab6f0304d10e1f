use proptest::prelude::{any, prop_assert, prop_assert_eq, prop_assume, proptest, ProptestConfig};

use super::*;
use crate::config::ClusterConfig;
use crate::model::{build_cluster, Phase, Transition};
use crate::trace::{parse_str, synthesize, GenSpec, Profile};

/// Rows are `task,job,kind,submit,duration,deadline,preferred`.
fn model(doc: &str, rows: &[&str]) -> GlobalState {
    let mut csv = String::from("task_id,job_id,kind,submit_ms,duration_ms,deadline_ms,preferred_node,outcome,failure_cause\n");
    for r in rows {
        csv.push_str(&format!("{r},SUCCESS,\n"));
    }
    build_cluster(&ClusterConfig::parse(doc).unwrap(), &parse_str(&csv).unwrap()).unwrap()
}

fn deadlock_fixture() -> GlobalState {
    model(
        "nodes = 1\nslots = 2\nreduce_slowstart = 0",
        &["ma,A,MAP,1,10,,", "ra,A,REDUCE,0,10,,", "mb,B,MAP,1,10,,", "rb,B,REDUCE,0,10,,"],
    )
}

fn all_strategies(f: impl Fn(Strategy)) {
    for s in Strategy::ALL {
        f(s);
    }
}

fn assertion(sel: &str, shape: AssertionShape) -> TaskAssertion {
    let selector = if sel == "*" { TaskSelector::All } else { TaskSelector::Id(sel.into()) };
    TaskAssertion { selector, shape }
}

#[test]
fn goal0_is_reached_with_a_replayable_witness() {
    let init = model("nodes = 1\nslots = 1", &["a,j,MAP,0,10,,", "b,j,MAP,0,10,,"]);
    all_strategies(|st| {
        let r = verify(&init, &GoalExpr::all_scheduled(), st, &Budget::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Valid);
        let w = r.witness.as_ref().unwrap();
        let assigns = w.transitions().iter().filter(|t| matches!(t, Transition::Assign { .. })).count();
        assert_eq!(assigns, 2);
        assert!(w.steps.len() >= 4 + 2);
        assert!(w.replays_to_terminal(&init));
        let end = w.replay(&init).unwrap();
        assert!(GoalExpr::all_scheduled().holds(&RateCounts::of(&end)));
        assert_eq!(r.rates.unwrap().completedscheduled, 2);
        assert!(r.states_explored >= 1);
    });
}

#[test]
fn unreachable_schedulability_is_invalid() {
    let init = model("nodes = 1\nslots = 2\nmax_speculative = 0", &["a,j,MAP,0,10,,", "b,k,MAP,0,100,50,"]);
    let goal = parse_goal_expr("schedulabilityrate >= 80").unwrap();
    all_strategies(|st| {
        let r = verify(&init, &goal, st, &Budget::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Invalid);
        assert!(r.witness.is_none());
    });
    let half = parse_goal_expr("schedulabilityrate >= 50").unwrap();
    assert_eq!(verify(&init, &half, Strategy::PlainDfs, &Budget::default()).unwrap().verdict, Verdict::Valid);
}

#[test]
fn state_budget_gives_inconclusive() {
    let init = model("nodes = 2\nslots = 1", &["a,j,MAP,0,10,,", "b,j,MAP,0,10,,", "c,j,MAP,0,10,,"]);
    let goal = parse_goal_expr("resourcedeadlockrate > 0").unwrap();
    let r = verify(&init, &goal, Strategy::PlainDfs, &Budget::states(5)).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert_eq!(r.valid(), None);
    assert_eq!(r.states_explored, 5);
    let full = verify(&init, &goal, Strategy::PlainDfs, &Budget::default()).unwrap();
    assert_eq!(full.verdict, Verdict::Invalid);
    let exact = verify(&init, &goal, Strategy::PlainDfs, &Budget::states(full.states_explored)).unwrap();
    assert_eq!(exact.verdict, Verdict::Invalid);
}

#[test]
fn time_budget_gives_inconclusive() {
    let init = deadlock_fixture();
    let budget = Budget { max_states: u64::MAX, max_time: Some(Duration::ZERO) };
    let r = verify(&init, &parse_goal_expr("fairnessrate > 100").unwrap(), Strategy::PlainDfs, &budget).unwrap();
    assert_eq!(r.verdict, Verdict::Inconclusive);
    assert_eq!(r.inconclusive_reason.as_deref(), Some("time budget exhausted"));
}

#[test]
fn deadlock_fixture_reaches_half_deadlocked() {
    let init = deadlock_fixture();
    let goal = parse_goal_expr("resourcedeadlockrate == 50").unwrap();
    all_strategies(|st| {
        let r = verify(&init, &goal, st, &Budget::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Valid);
        assert_eq!(r.rates.unwrap().resourcedeadlockrate, 50.0);
    });
    let more = parse_goal_expr("resourcedeadlockrate > 50").unwrap();
    assert_eq!(verify(&init, &more, Strategy::PlainDfs, &Budget::default()).unwrap().verdict, Verdict::Invalid);
}

#[test]
fn blocked_map_waits() {
    let init = deadlock_fixture();
    all_strategies(|st| {
        let a = assertion("ma", AssertionShape::NeverReaches(Phase::WaitingResources));
        let r = verify_assertion(&init, &a, st, &Budget::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Invalid);
        let w = r.witness.unwrap();
        let last = w.steps.last().unwrap();
        assert!(last.deltas.iter().any(|d| d.task == "ma" && d.to == Phase::WaitingResources));
        assert!(w.steps.iter().any(|s| s.event.name.starts_with("signedtask")));
    });
}

#[test]
fn single_task_eventually_finishes() {
    let init = model("nodes = 2\nslots = 2", &["a,j,MAP,0,10,,"]);
    let a = assertion("a", AssertionShape::EventuallyReaches(Phase::FinishedWithinDeadline));
    all_strategies(|st| {
        let r = verify_assertion(&init, &a, st, &Budget::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Valid);
        assert!(r.witness.is_none());
    });
}

#[test]
fn overlong_task_eventually_fails() {
    let init = model("max_speculative = 0", &["a,j,MAP,0,700000,,"]);
    let fails = assertion("*", AssertionShape::EventuallyReaches(Phase::Failed));
    assert_eq!(verify_assertion(&init, &fails, Strategy::SymmetryDfs, &Budget::default()).unwrap().verdict, Verdict::Valid);

    let finishes = assertion("*", AssertionShape::EventuallyReaches(Phase::FinishedWithinDeadline));
    let r = verify_assertion(&init, &finishes, Strategy::SymmetryDfs, &Budget::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Invalid);
    let end = r.witness.unwrap().replay(&init).unwrap();
    assert!(end.enabled().unwrap().is_empty());
    assert_eq!(end.task(0).phase, Phase::Failed);
}

#[test]
fn unknown_task_is_an_error() {
    let init = model("", &["a,j,MAP,0,10,,"]);
    let a = assertion("zz", AssertionShape::NeverReaches(Phase::Failed));
    assert!(matches!(
        verify_assertion(&init, &a, Strategy::PlainDfs, &Budget::default()),
        Err(CheckError::UnknownTask(id)) if id == "zz"
    ));
}

#[test]
fn symmetry_shrinks_identical_nodes() {
    let init = model(
        "nodes = 3\nslots = 1",
        &["a,j,MAP,0,10,,", "b,j,MAP,0,20,,", "c,k,MAP,5,10,,", "d,k,REDUCE,5,10,,"],
    );
    let (plain_set, plain) = terminal_rates(&init, Strategy::PlainDfs, &Budget::default()).unwrap();
    let (sym_set, sym) = terminal_rates(&init, Strategy::SymmetryDfs, &Budget::default()).unwrap();
    assert_eq!(plain_set, sym_set);
    assert!(plain.exhausted() && sym.exhausted());
    assert!(sym.states * 2 <= plain.states, "{} vs {}", sym.states, plain.states);
}

#[test]
fn check_dispatches_on_property_kind() {
    let init = deadlock_fixture();
    let props = parse_properties(
        "#define goal2 resourcedeadlockrate ==50;\n#assert cluster1 reaches goal2;\n#assert ! (task[ma] |= (submitted -> waiting-resources));",
    )
    .unwrap();
    let r: Vec<_> = props
        .iter()
        .map(|p| check(&init, &p.property, Strategy::SymmetryDfs, &Budget::default()).unwrap())
        .collect();
    assert_eq!(r[0].verdict, Verdict::Valid);
    assert_eq!(r[1].verdict, Verdict::Invalid);
    assert_eq!(r[0].property, props[0].property.to_string());
}

fn small_random(seed: u64) -> GlobalState {
    let mut spec = GenSpec::profile(Profile::Default);
    spec.tasks = 4;
    spec.nodes = 2;
    spec.mean_interarrival_ms = 40_000.0;
    let trace = synthesize(&spec, seed).unwrap();
    let cfg = ClusterConfig { node_count: 2, slots_per_node: 1 + (seed % 2) as usize, ..ClusterConfig::default() };
    build_cluster(&cfg, &trace).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn goal0_implies_every_task_past_scheduled(seed in any::<u64>()) {
        let init = small_random(seed);
        let goal0 = GoalExpr::all_scheduled();
        let mut bad = None;
        explore(&init, Strategy::PlainDfs, &Budget::states(200_000), |s, _| {
            let c = RateCounts::of(s);
            let m = c.metrics();
            for r in [m.schedulabilityrate, m.fairnessrate, m.resourcedeadlockrate] {
                if !(0.0..=100.0).contains(&r) {
                    bad = Some(format!("rate {r} out of range"));
                }
            }
            if goal0.holds(&c) && s.originals().iter().any(|t| t.phase.rank() < Phase::Processed.rank()) {
                bad = Some("goal0 holds with a task not yet processed".into());
            }
            Visit::Continue
        }).unwrap();
        prop_assert!(bad.is_none(), "{:?}", bad);
    }

    #[test]
    fn strategies_agree_on_terminal_rates(seed in any::<u64>()) {
        let init = small_random(seed);
        let (a, ea) = terminal_rates(&init, Strategy::PlainDfs, &Budget::states(500_000)).unwrap();
        let (b, eb) = terminal_rates(&init, Strategy::SymmetryDfs, &Budget::states(500_000)).unwrap();
        prop_assume!(ea.exhausted() && eb.exhausted());
        prop_assert_eq!(a, b);
        prop_assert!(eb.states <= ea.states);
    }
}
