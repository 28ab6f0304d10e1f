//! Seeded synthetic workloads for desk-scale experiments.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::{Outcome, TaskKind, TaskRecord, TraceError, WorkloadTrace};
use crate::config::settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Profile {
    Default,
    /// Long-tailed durations and a failure mix dominated by timeouts and
    /// exhausted speculation, shaped after a production Hadoop cluster.
    OpencloudLike,
    /// Dense arrivals of short map-only jobs that keep every slot busy.
    Saturated,
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "default" => Ok(Profile::Default),
            "opencloud-like" | "opencloud" => Ok(Profile::OpencloudLike),
            "saturated" => Ok(Profile::Saturated),
            other => Err(format!("unknown profile `{other}`")),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Default => "default",
            Profile::OpencloudLike => "opencloud-like",
            Profile::Saturated => "saturated",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub tasks: usize,
    pub maps_per_job_min: usize,
    pub maps_per_job_max: usize,
    /// Probability that a job also has one reduce task.
    pub reduce_prob: f64,
    pub duration_median_ms: f64,
    pub duration_sigma: f64,
    pub mean_interarrival_ms: f64,
    pub failure_fraction: f64,
    pub locality_fraction: f64,
    pub nodes: u32,
    /// Share of tasks whose duration is pushed past `timeout_ms`.
    pub long_fraction: f64,
    /// Share of reduce tasks pushed past `timeout_ms`, on top of `long_fraction`.
    pub long_reduce_fraction: f64,
    /// Share of tasks slowed down by 3.5x to 6x relative to their job.
    pub straggler_fraction: f64,
    pub timeout_ms: u64,
    /// Probability that a job consumes the output of the job submitted before it.
    pub chain_fraction: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec::profile(Profile::Default)
    }
}

impl GenSpec {
    pub fn profile(p: Profile) -> Self {
        let base = GenSpec {
            tasks: 1000,
            maps_per_job_min: 1,
            maps_per_job_max: 8,
            reduce_prob: 0.5,
            duration_median_ms: 60_000.0,
            duration_sigma: 0.6,
            mean_interarrival_ms: 30_000.0,
            failure_fraction: 0.0588,
            locality_fraction: 0.7,
            nodes: 4,
            long_fraction: 0.01,
            long_reduce_fraction: 0.0,
            straggler_fraction: 0.02,
            timeout_ms: 600_000,
            chain_fraction: 0.0,
        };
        match p {
            Profile::Default => base,
            Profile::OpencloudLike => GenSpec {
                maps_per_job_min: 4,
                maps_per_job_max: 10,
                reduce_prob: 0.4,
                duration_median_ms: 90_000.0,
                duration_sigma: 0.25,
                mean_interarrival_ms: 240_000.0,
                nodes: 8,
                long_fraction: 0.012,
                long_reduce_fraction: 0.7,
                straggler_fraction: 0.018,
                chain_fraction: 0.15,
                ..base
            },
            Profile::Saturated => GenSpec {
                tasks: 24,
                maps_per_job_min: 1,
                maps_per_job_max: 1,
                reduce_prob: 0.0,
                duration_median_ms: 100_000.0,
                duration_sigma: 0.0,
                mean_interarrival_ms: 2_000.0,
                locality_fraction: 0.0,
                long_fraction: 0.0,
                straggler_fraction: 0.0,
                ..base
            },
        }
    }

    /// Reads a `key = value` spec. A `profile` line, if present, must come first
    /// and selects the defaults the remaining keys override.
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let bad = |m: String| TraceError::SpecInvalid(m);
        let mut spec = GenSpec::default();
        for (key, value, line) in settings(text).map_err(|e| bad(e.to_string()))? {
            let f = || value.parse::<f64>().map_err(|e| bad(format!("line {line}: {key}: {e}")));
            let u = || value.parse::<u64>().map_err(|e| bad(format!("line {line}: {key}: {e}")));
            match key.as_str() {
                "profile" => spec = GenSpec::profile(value.parse().map_err(bad)?),
                "tasks" => spec.tasks = u()? as usize,
                "maps_per_job_min" => spec.maps_per_job_min = u()? as usize,
                "maps_per_job_max" => spec.maps_per_job_max = u()? as usize,
                "reduce_prob" => spec.reduce_prob = f()?,
                "duration_median_ms" => spec.duration_median_ms = f()?,
                "duration_sigma" => spec.duration_sigma = f()?,
                "mean_interarrival_ms" => spec.mean_interarrival_ms = f()?,
                "failure_fraction" => spec.failure_fraction = f()?,
                "locality_fraction" => spec.locality_fraction = f()?,
                "nodes" => spec.nodes = u()? as u32,
                "long_fraction" => spec.long_fraction = f()?,
                "long_reduce_fraction" => spec.long_reduce_fraction = f()?,
                "straggler_fraction" => spec.straggler_fraction = f()?,
                "timeout_ms" => spec.timeout_ms = u()?,
                "chain_fraction" => spec.chain_fraction = f()?,
                other => return Err(bad(format!("line {line}: unknown key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let bad = |m: &str| Err(TraceError::SpecInvalid(m.to_string()));
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if self.tasks == 0 {
            return bad("tasks must be positive");
        }
        if self.maps_per_job_min == 0 || self.maps_per_job_min > self.maps_per_job_max {
            return bad("need 1 <= maps_per_job_min <= maps_per_job_max");
        }
        if !(self.duration_median_ms >= 1.0 && self.duration_sigma >= 0.0) {
            return bad("duration_median_ms must be >= 1 and duration_sigma >= 0");
        }
        if self.mean_interarrival_ms.is_nan() || self.mean_interarrival_ms < 0.0 {
            return bad("mean_interarrival_ms must be non-negative");
        }
        for (name, x) in [
            ("reduce_prob", self.reduce_prob),
            ("failure_fraction", self.failure_fraction),
            ("locality_fraction", self.locality_fraction),
            ("long_fraction", self.long_fraction),
            ("long_reduce_fraction", self.long_reduce_fraction),
            ("straggler_fraction", self.straggler_fraction),
            ("chain_fraction", self.chain_fraction),
        ] {
            if !unit(x) {
                return Err(TraceError::SpecInvalid(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.long_fraction + self.straggler_fraction > 1.0 {
            return bad("long_fraction + straggler_fraction exceeds 1");
        }
        if self.nodes == 0 {
            return bad("nodes must be positive");
        }
        if self.timeout_ms == 0 {
            return bad("timeout_ms must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Class {
    Normal,
    Long,
    Straggler,
}

/// Generates a workload. The same `(spec, seed)` always yields the same trace,
/// and exactly `round(failure_fraction * tasks)` tasks are labelled FAIL, drawn
/// first from the tasks built to be slow.
pub fn synthesize(spec: &GenSpec, seed: u64) -> Result<WorkloadTrace, TraceError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lognormal = LogNormal::new(spec.duration_median_ms.ln(), spec.duration_sigma)
        .map_err(|e| TraceError::SpecInvalid(e.to_string()))?;
    let gap = if spec.mean_interarrival_ms > 0.0 {
        Some(Exp::new(1.0 / spec.mean_interarrival_ms).map_err(|e| TraceError::SpecInvalid(e.to_string()))?)
    } else {
        None
    };

    let mut records = Vec::with_capacity(spec.tasks);
    let mut classes = Vec::with_capacity(spec.tasks);
    let mut clock = 0.0f64;
    let mut job = 0usize;
    while records.len() < spec.tasks {
        let remaining = spec.tasks - records.len();
        let maps = rng.random_range(spec.maps_per_job_min..=spec.maps_per_job_max).min(remaining);
        let reduce = remaining > maps && rng.random::<f64>() < spec.reduce_prob;
        let upstream = (job > 0 && rng.random::<f64>() < spec.chain_fraction).then(|| format!("j{:06}", job - 1));
        let submit_ms = clock.round() as u64;
        let job_id = format!("j{job:06}");
        for k in 0..maps + usize::from(reduce) {
            let kind = if k < maps { TaskKind::Map } else { TaskKind::Reduce };
            let mut duration = lognormal.sample(&mut rng).max(1.0);
            let u: f64 = rng.random();
            let long_reduce = kind == TaskKind::Reduce && rng.random::<f64>() < spec.long_reduce_fraction;
            let class = if long_reduce || u < spec.long_fraction {
                duration = spec.timeout_ms as f64 * rng.random_range(1.1..2.0);
                Class::Long
            } else if u < spec.long_fraction + spec.straggler_fraction {
                duration *= rng.random_range(3.5..6.0);
                Class::Straggler
            } else {
                Class::Normal
            };
            let preferred_node =
                (rng.random::<f64>() < spec.locality_fraction).then(|| rng.random_range(0..spec.nodes));
            records.push(TaskRecord {
                task_id: format!("t{:07}", records.len()),
                job_id: job_id.clone(),
                kind,
                submit_ms,
                duration_ms: duration.round().max(1.0) as u64,
                deadline_ms: None,
                preferred_node,
                outcome: Outcome::Success,
                failure_cause: None,
                upstream_job: upstream.clone(),
            });
            classes.push(class);
        }
        if let Some(gap) = &gap {
            clock += gap.sample(&mut rng);
        }
        job += 1;
    }

    let n_fail = (spec.failure_fraction * spec.tasks as f64).round() as usize;
    let mut doomed: Vec<usize> = (0..records.len()).filter(|&i| classes[i] != Class::Normal).collect();
    let mut rest: Vec<usize> = (0..records.len()).filter(|&i| classes[i] == Class::Normal).collect();
    doomed.shuffle(&mut rng);
    rest.shuffle(&mut rng);
    for &i in doomed.iter().chain(&rest).take(n_fail) {
        records[i].outcome = Outcome::Fail;
        records[i].failure_cause = Some(
            match classes[i] {
                Class::Long => "timeout",
                Class::Straggler => "speculative",
                Class::Normal => "unknown",
            }
            .to_string(),
        );
    }
    WorkloadTrace::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_fraction_is_exact_count() {
        let spec = GenSpec { tasks: 1000, ..GenSpec::default() };
        let t = synthesize(&spec, 42).unwrap();
        assert_eq!(t.len(), 1000);
        assert_eq!(t.failed_count(), 59);
        assert!((t.stats().failure_pct - 5.9).abs() < 1e-9);
    }

    #[test]
    fn deterministic_for_seed() {
        let spec = GenSpec::profile(Profile::OpencloudLike);
        let a = synthesize(&spec, 7).unwrap().to_csv_string();
        let b = synthesize(&spec, 7).unwrap().to_csv_string();
        assert_eq!(a, b);
        assert_ne!(a, synthesize(&spec, 8).unwrap().to_csv_string());
    }

    #[test]
    fn zero_failure_fraction() {
        let spec = GenSpec { tasks: 200, failure_fraction: 0.0, ..GenSpec::default() };
        let t = synthesize(&spec, 1).unwrap();
        assert_eq!(t.failed_count(), 0);
    }

    #[test]
    fn parse_spec_with_profile() {
        let s = GenSpec::parse("profile = saturated\ntasks = 40\n").unwrap();
        assert_eq!(s.tasks, 40);
        assert_eq!(s.reduce_prob, 0.0);
        assert!(GenSpec::parse("tasks = 0").is_err());
        assert!(GenSpec::parse("frobs = 1").is_err());
        assert!(GenSpec::parse("failure_fraction = 1.5").is_err());
    }

    #[test]
    fn generated_trace_round_trips() {
        let t = synthesize(&GenSpec { tasks: 300, chain_fraction: 0.3, ..GenSpec::default() }, 3).unwrap();
        assert_eq!(super::super::parse_str(&t.to_csv_string()).unwrap(), t);
    }

    #[test]
    fn long_reduces_outlast_the_timeout() {
        let spec = GenSpec { tasks: 400, reduce_prob: 1.0, long_reduce_fraction: 1.0, ..GenSpec::default() };
        let t = synthesize(&spec, 2).unwrap();
        let reduces: Vec<_> = t.records().iter().filter(|r| r.kind == TaskKind::Reduce).collect();
        assert!(!reduces.is_empty());
        assert!(reduces.iter().all(|r| r.duration_ms > spec.timeout_ms));
    }
}
