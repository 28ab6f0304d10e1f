//! Cluster configuration, read from flat `key = value` files.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("bad value for `{key}`: {reason}")]
    BadValue { key: String, reason: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Fifo,
    Fair,
    Capacity,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [SchedulerKind::Fifo, SchedulerKind::Fair, SchedulerKind::Capacity];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Fifo => "FIFO",
            SchedulerKind::Fair => "Fair",
            SchedulerKind::Capacity => "Capacity",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fifo" => Ok(SchedulerKind::Fifo),
            "fair" => Ok(SchedulerKind::Fair),
            "capacity" => Ok(SchedulerKind::Capacity),
            other => Err(format!("unknown scheduler `{other}` (expected fifo, fair or capacity)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityQueue {
    pub name: String,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub node_count: usize,
    pub slots_per_node: usize,
    pub scheduler: SchedulerKind,
    pub max_queue: usize,
    pub task_timeout_ms: u64,
    pub max_speculative: u8,
    pub fairness_wait_ms: u64,
    pub capacity_queues: Vec<CapacityQueue>,
    pub fair_pools: usize,
    pub deadline_factor: f64,
    pub speculation_factor: f64,
    /// Fraction of a job's maps that must finish before its reduces may take a slot.
    pub reduce_slowstart: f64,
    /// Queued tasks waiting longer than this fail with cause QueueWait.
    pub queue_timeout_ms: Option<u64>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            node_count: 4,
            slots_per_node: 2,
            scheduler: SchedulerKind::Fifo,
            max_queue: 1000,
            task_timeout_ms: 600_000,
            max_speculative: 1,
            fairness_wait_ms: 600_000,
            capacity_queues: vec![CapacityQueue { name: "default".into(), fraction: 1.0 }],
            fair_pools: 2,
            deadline_factor: 3.0,
            speculation_factor: 1.5,
            reduce_slowstart: 1.0,
            queue_timeout_ms: None,
        }
    }
}

pub const MAX_SPECULATIVE_LIMIT: u8 = 16;

fn parse_capacity_queues(v: &str) -> Result<Vec<CapacityQueue>, String> {
    v.split(',')
        .map(|item| {
            let (name, frac) = item
                .split_once(':')
                .ok_or_else(|| format!("`{item}` is not `name:fraction`"))?;
            let fraction = frac
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("`{frac}`: {e}"))?;
            Ok(CapacityQueue { name: name.trim().to_string(), fraction })
        })
        .collect()
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| ConfigError::BadValue { key: key.into(), reason: e.to_string() })
}

impl ClusterConfig {
    /// Applies one `key = value` setting. Used for config files, scenario deltas and sweeps.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key.trim() {
            "node_count" | "nodes" => self.node_count = num(key, v)?,
            "slots_per_node" | "slots" => self.slots_per_node = num(key, v)?,
            "scheduler" => {
                self.scheduler = v
                    .parse()
                    .map_err(|reason| ConfigError::BadValue { key: key.into(), reason })?
            }
            "max_queue" => self.max_queue = num(key, v)?,
            "task_timeout_ms" | "timeout" => self.task_timeout_ms = num(key, v)?,
            "max_speculative" => self.max_speculative = num(key, v)?,
            "fairness_wait_ms" => self.fairness_wait_ms = num(key, v)?,
            "capacity_queues" => {
                self.capacity_queues = parse_capacity_queues(v)
                    .map_err(|reason| ConfigError::BadValue { key: key.into(), reason })?
            }
            "fair_pools" => self.fair_pools = num(key, v)?,
            "deadline_factor" => self.deadline_factor = num(key, v)?,
            "speculation_factor" => self.speculation_factor = num(key, v)?,
            "reduce_slowstart" => self.reduce_slowstart = num(key, v)?,
            "queue_timeout_ms" => {
                self.queue_timeout_ms = match v {
                    "" | "none" | "off" => None,
                    _ => Some(num(key, v)?),
                }
            }
            other => {
                return Err(ConfigError::UnknownKey { line: 0, key: other.to_string() });
            }
        }
        Ok(())
    }

    /// Parses a config document on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = ClusterConfig::default();
        cfg.apply_document(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies every setting of a `key = value` document, skipping `#` comments and blank lines.
    pub fn apply_document(&mut self, text: &str) -> Result<(), ConfigError> {
        for (key, value, line) in settings(text)? {
            self.set(&key, &value).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line, key },
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.node_count == 0 {
            return bad("node_count must be at least 1");
        }
        if self.slots_per_node == 0 {
            return bad("slots_per_node must be at least 1");
        }
        if self.max_queue == 0 {
            return bad("max_queue must be at least 1");
        }
        if self.task_timeout_ms == 0 {
            return bad("task_timeout_ms must be positive");
        }
        if self.fairness_wait_ms == 0 {
            return bad("fairness_wait_ms must be positive");
        }
        if self.fair_pools == 0 {
            return bad("fair_pools must be at least 1");
        }
        if self.max_speculative > MAX_SPECULATIVE_LIMIT {
            return bad("max_speculative is limited to 16");
        }
        if self.capacity_queues.is_empty() {
            return bad("capacity_queues needs at least one queue");
        }
        if self.capacity_queues.iter().any(|q| !(q.fraction > 0.0 && q.fraction <= 1.0)) {
            return bad("capacity fractions must lie in (0, 1]");
        }
        let total: f64 = self.capacity_queues.iter().map(|q| q.fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ConfigError::Invalid(format!("capacity fractions sum to {total}, not 1")));
        }
        if !(self.deadline_factor.is_finite() && self.deadline_factor > 0.0) {
            return bad("deadline_factor must be positive");
        }
        if !(self.speculation_factor.is_finite() && self.speculation_factor > 0.0) {
            return bad("speculation_factor must be positive");
        }
        if !(0.0..=1.0).contains(&self.reduce_slowstart) {
            return bad("reduce_slowstart must lie in [0, 1]");
        }
        if self.queue_timeout_ms == Some(0) {
            return bad("queue_timeout_ms must be positive when set");
        }
        Ok(())
    }

    /// Renders the config in the same flat format `parse` reads.
    pub fn to_document(&self) -> String {
        let queues: Vec<String> =
            self.capacity_queues.iter().map(|q| format!("{}:{}", q.name, q.fraction)).collect();
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("node_count", self.node_count.to_string());
        put("slots_per_node", self.slots_per_node.to_string());
        put("scheduler", self.scheduler.name().to_ascii_lowercase());
        put("max_queue", self.max_queue.to_string());
        put("task_timeout_ms", self.task_timeout_ms.to_string());
        put("max_speculative", self.max_speculative.to_string());
        put("fairness_wait_ms", self.fairness_wait_ms.to_string());
        put("capacity_queues", queues.join(","));
        put("fair_pools", self.fair_pools.to_string());
        put("deadline_factor", self.deadline_factor.to_string());
        put("speculation_factor", self.speculation_factor.to_string());
        put("reduce_slowstart", self.reduce_slowstart.to_string());
        put(
            "queue_timeout_ms",
            self.queue_timeout_ms.map_or_else(|| "none".to_string(), |v| v.to_string()),
        );
        out
    }
}

/// Splits a flat settings document into `(key, value, line)` triples.
pub fn settings(text: &str) -> Result<Vec<(String, String, usize)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: i + 1 })?;
        if k.trim().is_empty() {
            return Err(ConfigError::Syntax { line: i + 1 });
        }
        out.push((k.trim().to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ClusterConfig::default().validate().unwrap();
    }

    #[test]
    fn parses_flat_file() {
        let cfg = ClusterConfig::parse(
            "# small cluster\nnode_count = 2\nslots_per_node=1\nscheduler = capacity\n\
             capacity_queues = a:0.5, b:0.5\nqueue_timeout_ms = 9000\n",
        )
        .unwrap();
        assert_eq!(cfg.node_count, 2);
        assert_eq!(cfg.slots_per_node, 1);
        assert_eq!(cfg.scheduler, SchedulerKind::Capacity);
        assert_eq!(cfg.capacity_queues.len(), 2);
        assert_eq!(cfg.queue_timeout_ms, Some(9000));
    }

    #[test]
    fn round_trips_through_document() {
        let cfg = ClusterConfig { scheduler: SchedulerKind::Fair, reduce_slowstart: 0.25, ..ClusterConfig::default() };
        assert_eq!(ClusterConfig::parse(&cfg.to_document()).unwrap(), cfg);
    }

    #[test]
    fn rejects_invalid() {
        assert!(matches!(ClusterConfig::parse("node_count = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(ClusterConfig::parse("slots_per_node = 0"), Err(ConfigError::Invalid(_))));
        assert!(matches!(
            ClusterConfig::parse("capacity_queues = a:0.5,b:0.6"),
            Err(ConfigError::Invalid(_))
        ));
        assert!(matches!(
            ClusterConfig::parse("capacity_queues = a:0.5,b:0.5\nbogus = 1"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
        assert!(matches!(ClusterConfig::parse("node_count"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(ClusterConfig::parse("scheduler = lottery"), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn fraction_sum_tolerance() {
        let ok = "capacity_queues = a:0.3333333333333,b:0.3333333333333,c:0.3333333333334";
        ClusterConfig::parse(ok).unwrap();
    }
}
