//! Rate metrics over original tasks.
//!
//! * schedulability: tasks finished within their deadline over tasks ever scheduled
//! * fairness: tasks that started within the fairness bound over the workload
//! * resource deadlock: tasks whose deadlock flag is set over the workload

use serde::{Deserialize, Serialize};

use super::goal::Metric;
use crate::model::GlobalState;

/// Integer numerators and denominators behind [`RateMetrics`]; exact and hashable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RateCounts {
    pub workload: u64,
    pub ever_scheduled: u64,
    pub finished_within: u64,
    pub served_fair: u64,
    pub flagged: u64,
    pub completedscheduled: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateMetrics {
    pub schedulabilityrate: f64,
    pub fairnessrate: f64,
    pub resourcedeadlockrate: f64,
    pub completedscheduled: u64,
    pub workload: u64,
}

fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl RateCounts {
    pub fn of(state: &GlobalState) -> RateCounts {
        let c = state.counters();
        RateCounts {
            workload: state.workload() as u64,
            ever_scheduled: c.ever_scheduled,
            finished_within: c.finished_within,
            served_fair: c.served_fair,
            flagged: c.flagged,
            completedscheduled: c.completedscheduled,
        }
    }

    /// `(scale, numerator, denominator)` of a metric; counts use scale 1 over 1.
    pub fn fraction(&self, m: Metric) -> (f64, u64, u64) {
        match m {
            Metric::CompletedScheduled => (1.0, self.completedscheduled, 1),
            Metric::Workload => (1.0, self.workload, 1),
            Metric::SchedulabilityRate => (100.0, self.finished_within, self.ever_scheduled),
            Metric::FairnessRate => (100.0, self.served_fair, self.workload),
            Metric::ResourceDeadlockRate => (100.0, self.flagged, self.workload),
        }
    }

    pub fn value(&self, m: Metric) -> f64 {
        let (scale, num, den) = self.fraction(m);
        if scale == 1.0 {
            num as f64
        } else {
            pct(num, den)
        }
    }

    pub fn metrics(&self) -> RateMetrics {
        RateMetrics {
            schedulabilityrate: self.value(Metric::SchedulabilityRate),
            fairnessrate: self.value(Metric::FairnessRate),
            resourcedeadlockrate: self.value(Metric::ResourceDeadlockRate),
            completedscheduled: self.completedscheduled,
            workload: self.workload,
        }
    }
}

pub fn compute_rates(state: &GlobalState) -> RateMetrics {
    RateCounts::of(state).metrics()
}
