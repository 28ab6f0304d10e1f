//! Predicted task outcomes against trace ground truth: confusion matrix,
//! detected-failure rate and a breakdown of predicted failures by cause.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    predictions, run_to_quiescence, FailureCause, GlobalState, ModelError, PredictedOutcome, TaskPrediction, Witness,
};
use crate::trace::{Outcome, WorkloadTrace};

/// Waits or run times at or above this count as straggling (10 minutes).
pub const STRAGGLER_MS: u64 = 600_000;

/// Example task ids kept per failure cause.
pub const MAX_EXEMPLARS: usize = 10;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no prediction for trace task `{0}`")]
    CoverageGap(String),
    #[error("the trace contains no failed tasks")]
    NoFailuresInTruth,
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Predicted finished, succeeded in the trace.
    pub tp: u64,
    /// Predicted failed, failed in the trace.
    pub tn: u64,
    /// Predicted finished, failed in the trace.
    pub fp: u64,
    /// Predicted failed, succeeded in the trace.
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub total: u64,
    pub tp_pct: f64,
    pub tn_pct: f64,
    pub fp_pct: f64,
    pub fn_pct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectedFailures {
    pub df_pct: f64,
    pub tn: u64,
    pub failed_in_truth: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FailureBreakdown {
    pub predicted_failed: u64,
    pub timeout_pct: f64,
    pub speculative_pct: f64,
    pub cascade_pct: f64,
    pub queuewait_pct: f64,
    /// Tasks still unresolved when the path ends.
    pub residual_pct: f64,
    pub counts: BTreeMap<FailureCause, u64>,
    /// Cascaded failures per number of upstream hops to the originating job.
    pub cascade_depths: BTreeMap<u32, u64>,
    pub longest_cascade: u32,
    /// Tasks that waited or ran for at least [`STRAGGLER_MS`].
    pub stragglers: u64,
    pub exemplars: BTreeMap<FailureCause, Vec<String>>,
}

fn pct(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        100.0 * n as f64 / d as f64
    }
}

/// Per-task outcomes predicted by `witness`: the path is replayed and then
/// extended along first successors until nothing is enabled, so every task
/// has had the chance to resolve. Without a witness the extension starts at
/// `initial`.
pub fn predict(initial: &GlobalState, witness: Option<&Witness>) -> Result<Vec<TaskPrediction>, ModelError> {
    let mut s = match witness {
        Some(w) => w.replay(initial)?,
        None => initial.snapshot(),
    };
    run_to_quiescence(&mut s)?;
    Ok(predictions(&s))
}

pub fn outcome_map(predictions: &[TaskPrediction]) -> HashMap<&str, PredictedOutcome> {
    predictions.iter().map(|p| (p.task_id.as_str(), p.outcome)).collect()
}

/// Compares predictions with the trace outcome of every task.
pub fn classify(
    predicted: &HashMap<&str, PredictedOutcome>,
    truth: &WorkloadTrace,
) -> Result<ConfusionMatrix, AnalysisError> {
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for r in truth.records() {
        let p = predicted.get(r.task_id.as_str()).ok_or_else(|| AnalysisError::CoverageGap(r.task_id.clone()))?;
        match (p, r.outcome) {
            (PredictedOutcome::Finished, Outcome::Success) => tp += 1,
            (PredictedOutcome::Failed, Outcome::Fail) => tn += 1,
            (PredictedOutcome::Finished, Outcome::Fail) => fp += 1,
            (PredictedOutcome::Failed, Outcome::Success) => fn_ += 1,
        }
    }
    let total = truth.len() as u64;
    Ok(ConfusionMatrix {
        tp,
        tn,
        fp,
        fn_,
        total,
        tp_pct: pct(tp, total),
        tn_pct: pct(tn, total),
        fp_pct: pct(fp, total),
        fn_pct: pct(fn_, total),
    })
}

/// Share of the trace's failed tasks that the model also predicts to fail.
pub fn detected_failures(cm: &ConfusionMatrix, truth: &WorkloadTrace) -> Result<DetectedFailures, AnalysisError> {
    let failed = truth.failed_count() as u64;
    if failed == 0 {
        return Err(AnalysisError::NoFailuresInTruth);
    }
    Ok(DetectedFailures { df_pct: pct(cm.tn, failed), tn: cm.tn, failed_in_truth: failed })
}

/// The same rate from published percentages: every trace failure is either a
/// true negative or a false positive, so DF = TN / (TN + FP).
pub fn detected_failures_from_pcts(tn_pct: f64, fp_pct: f64) -> Option<f64> {
    let failed = tn_pct + fp_pct;
    (failed > 0.0).then(|| 100.0 * tn_pct / failed)
}

pub fn breakdown(predictions: &[TaskPrediction]) -> FailureBreakdown {
    let mut b = FailureBreakdown::default();
    for p in predictions {
        if p.wait_ms >= STRAGGLER_MS || p.run_ms.is_some_and(|r| r >= STRAGGLER_MS) {
            b.stragglers += 1;
        }
        if p.outcome != PredictedOutcome::Failed {
            continue;
        }
        let cause = p.cause.unwrap_or(FailureCause::Residual);
        b.predicted_failed += 1;
        *b.counts.entry(cause).or_default() += 1;
        let ex = b.exemplars.entry(cause).or_default();
        if ex.len() < MAX_EXEMPLARS {
            ex.push(p.task_id.clone());
        }
        if cause == FailureCause::Cascade {
            *b.cascade_depths.entry(p.cascade_depth).or_default() += 1;
            b.longest_cascade = b.longest_cascade.max(p.cascade_depth);
        }
    }
    let share = |c: FailureCause| pct(b.counts.get(&c).copied().unwrap_or(0), b.predicted_failed);
    b.timeout_pct = share(FailureCause::Timeout);
    b.speculative_pct = share(FailureCause::SpeculativeLimit);
    b.cascade_pct = share(FailureCause::Cascade);
    b.queuewait_pct = share(FailureCause::QueueWait);
    b.residual_pct = share(FailureCause::Residual);
    b
}

/// Percentage of tasks predicted to fail.
pub fn failure_pct(predictions: &[TaskPrediction]) -> f64 {
    let failed = predictions.iter().filter(|p| p.outcome == PredictedOutcome::Failed).count();
    pct(failed as u64, predictions.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ClusterConfig;
    use crate::model::{build_cluster, Phase};
    use crate::trace::parse_str;
    use proptest::prelude::{prop, prop_assert, prop_assert_eq, proptest};

    fn trace(rows: &[(&str, &str)]) -> WorkloadTrace {
        let mut csv = String::from("task_id,job_id,kind,submit_ms,duration_ms,deadline_ms,preferred_node,outcome,failure_cause\n");
        for (id, outcome) in rows {
            csv.push_str(&format!("{id},j,MAP,0,10,,,{outcome},\n"));
        }
        parse_str(&csv).unwrap()
    }

    fn pred(id: &str, outcome: PredictedOutcome, cause: Option<FailureCause>) -> TaskPrediction {
        TaskPrediction {
            task_id: id.into(),
            job_id: "j".into(),
            outcome,
            phase: if outcome == PredictedOutcome::Finished { Phase::FinishedWithinDeadline } else { Phase::Failed },
            cause,
            wait_ms: 0,
            run_ms: Some(10),
            cascade_depth: 0,
        }
    }

    use PredictedOutcome::{Failed, Finished};

    #[test]
    fn hand_labelled_six_tasks() {
        let truth = trace(&[
            ("t1", "SUCCESS"),
            ("t2", "SUCCESS"),
            ("t3", "SUCCESS"),
            ("t4", "FAIL"),
            ("t5", "SUCCESS"),
            ("t6", "FAIL"),
        ]);
        let p: HashMap<&str, PredictedOutcome> = [
            ("t1", Finished),
            ("t2", Finished),
            ("t3", Finished),
            ("t4", Finished),
            ("t5", Failed),
            ("t6", Failed),
        ]
        .into();
        let cm = classify(&p, &truth).unwrap();
        assert_eq!((cm.tp, cm.tn, cm.fp, cm.fn_), (3, 1, 1, 1));
        assert!((cm.tp_pct - 50.0).abs() < 0.01);
        for v in [cm.tn_pct, cm.fp_pct, cm.fn_pct] {
            assert!((v - 16.67).abs() < 0.01);
        }
        let df = detected_failures(&cm, &truth).unwrap();
        assert!((df.df_pct - 50.0).abs() < 1e-9);
    }

    #[test]
    fn perfect_predictions() {
        let mut rows: Vec<(String, &str)> = (0..9).map(|i| (format!("s{i}"), "SUCCESS")).collect();
        rows.push(("f".into(), "FAIL"));
        let borrowed: Vec<(&str, &str)> = rows.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        let truth = trace(&borrowed);
        let p: HashMap<&str, PredictedOutcome> = rows
            .iter()
            .map(|(id, o)| (id.as_str(), if *o == "FAIL" { Failed } else { Finished }))
            .collect();
        let cm = classify(&p, &truth).unwrap();
        assert_eq!((cm.tp_pct, cm.tn_pct, cm.fp_pct, cm.fn_pct), (90.0, 10.0, 0.0, 0.0));
        assert_eq!(detected_failures(&cm, &truth).unwrap().df_pct, 100.0);
    }

    #[test]
    fn missing_prediction_is_a_coverage_gap() {
        let truth = trace(&[("a", "SUCCESS"), ("b", "FAIL")]);
        let p: HashMap<&str, PredictedOutcome> = [("a", Finished)].into();
        assert!(matches!(classify(&p, &truth), Err(AnalysisError::CoverageGap(id)) if id == "b"));
    }

    #[test]
    fn detected_failures_needs_failures() {
        let truth = trace(&[("a", "SUCCESS")]);
        let cm = classify(&[("a", Failed)].into(), &truth).unwrap();
        assert!(matches!(detected_failures(&cm, &truth), Err(AnalysisError::NoFailuresInTruth)));
    }

    #[test]
    fn zero_true_negatives() {
        let rows: Vec<(String, &str)> = (0..5).map(|i| (format!("f{i}"), "FAIL")).collect();
        let borrowed: Vec<(&str, &str)> = rows.iter().map(|(a, b)| (a.as_str(), *b)).collect();
        let truth = trace(&borrowed);
        let p: HashMap<&str, PredictedOutcome> = rows.iter().map(|(id, _)| (id.as_str(), Finished)).collect();
        let cm = classify(&p, &truth).unwrap();
        assert_eq!(detected_failures(&cm, &truth).unwrap().df_pct, 0.0);
    }

    #[test]
    fn detected_failures_from_published_shares() {
        assert!((detected_failures_from_pcts(4.62, 1.26).unwrap() - 78.57).abs() < 0.01);
        assert!((detected_failures_from_pcts(2.47, 3.41).unwrap() - 42.00).abs() < 0.01);
        assert_eq!(detected_failures_from_pcts(0.0, 0.0), None);
    }

    #[test]
    fn breakdown_by_cause() {
        let mut ps = vec![
            pred("a", Failed, Some(FailureCause::Timeout)),
            pred("b", Failed, Some(FailureCause::Timeout)),
            pred("c", Failed, Some(FailureCause::Timeout)),
            pred("d", Failed, Some(FailureCause::SpeculativeLimit)),
            pred("e", Finished, None),
        ];
        ps[4].wait_ms = STRAGGLER_MS;
        let b = breakdown(&ps);
        assert_eq!(b.predicted_failed, 4);
        assert_eq!((b.timeout_pct, b.speculative_pct, b.cascade_pct, b.queuewait_pct), (75.0, 25.0, 0.0, 0.0));
        assert_eq!(b.stragglers, 1);
        assert_eq!(b.exemplars[&FailureCause::Timeout], vec!["a", "b", "c"]);
    }

    #[test]
    fn exemplars_are_capped() {
        let ps: Vec<_> = (0..25).map(|i| pred(&format!("t{i}"), Failed, Some(FailureCause::QueueWait))).collect();
        let b = breakdown(&ps);
        assert_eq!(b.exemplars[&FailureCause::QueueWait].len(), MAX_EXEMPLARS);
        assert_eq!(b.queuewait_pct, 100.0);
    }

    #[test]
    fn chained_jobs_fail_by_cascade() {
        let csv = "task_id,job_id,kind,submit_ms,duration_ms,deadline_ms,preferred_node,outcome,failure_cause,upstream_job\n\
                   a1,A,MAP,0,700000,,,FAIL,timeout,\n\
                   b1,B,MAP,0,10,,,FAIL,cascade,A\n\
                   b2,B,REDUCE,0,10,,,FAIL,cascade,A\n\
                   c1,C,MAP,0,10,,,FAIL,cascade,B\n";
        let cfg = ClusterConfig::parse("nodes = 1\nslots = 1\nmax_speculative = 0").unwrap();
        let truth = parse_str(csv).unwrap();
        let init = build_cluster(&cfg, &truth).unwrap();
        let ps = predict(&init, None).unwrap();
        let b = breakdown(&ps);
        assert_eq!(b.counts[&FailureCause::Timeout], 1);
        assert_eq!(b.counts[&FailureCause::Cascade], 3);
        assert_eq!(b.cascade_depths, [(1, 2), (2, 1)].into());
        assert_eq!(b.longest_cascade, 2);
        assert_eq!(b.stragglers, 4);
        let cm = classify(&outcome_map(&ps), &truth).unwrap();
        assert_eq!(cm.tn, 4);
    }

    proptest! {
        #[test]
        fn matrix_partitions_the_workload(labels in prop::collection::vec((prop::bool::ANY, prop::bool::ANY), 1..60)) {
            let ids: Vec<String> = (0..labels.len()).map(|i| format!("t{i}")).collect();
            let rows: Vec<(&str, &str)> = ids.iter().zip(&labels)
                .map(|(id, (_, ok))| (id.as_str(), if *ok { "SUCCESS" } else { "FAIL" }))
                .collect();
            let truth = trace(&rows);
            let p: HashMap<&str, PredictedOutcome> = ids.iter().zip(&labels)
                .map(|(id, (fin, _))| (id.as_str(), if *fin { Finished } else { Failed }))
                .collect();
            let cm = classify(&p, &truth).unwrap();
            prop_assert_eq!(cm.tp + cm.tn + cm.fp + cm.fn_, labels.len() as u64);
            prop_assert!((cm.tp_pct + cm.tn_pct + cm.fp_pct + cm.fn_pct - 100.0).abs() < 0.01);
            if let Ok(df) = detected_failures(&cm, &truth) {
                prop_assert!((df.df_pct * df.failed_in_truth as f64 - 100.0 * cm.tn as f64).abs() < 1e-6);
                prop_assert_eq!(df.failed_in_truth, cm.tn + cm.fp);
            }
        }

        #[test]
        fn breakdown_shares_sum_to_one_hundred(causes in prop::collection::vec(0usize..6, 1..40)) {
            let ps: Vec<_> = causes.iter().enumerate().map(|(i, &c)| match FailureCause::ALL.get(c) {
                Some(&cause) => pred(&format!("t{i}"), Failed, Some(cause)),
                None => pred(&format!("t{i}"), Finished, None),
            }).collect();
            let b = breakdown(&ps);
            let sum = b.timeout_pct + b.speculative_pct + b.cascade_pct + b.queuewait_pct + b.residual_pct;
            if b.predicted_failed > 0 {
                prop_assert!((sum - 100.0).abs() < 0.01);
            } else {
                prop_assert_eq!(sum, 0.0);
            }
        }
    }
}
