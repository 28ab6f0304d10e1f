//! Workload traces: one CSV row per task, with the ground-truth outcome used
//! for failure analysis.
//!
//! Columns: `task_id,job_id,kind,submit_ms,duration_ms,deadline_ms,preferred_node,outcome,failure_cause`
//! and an optional trailing `upstream_job` naming a job whose output this job consumes.
//! Lines starting with `#` are ignored; LF and CRLF are both accepted.

mod synth;

pub use synth::{synthesize, GenSpec, Profile};

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{source_name}:{line}: malformed row: {reason}")]
    MalformedRow { source_name: String, line: u64, reason: String },
    #[error("duplicate task id `{0}`")]
    DuplicateTaskId(String),
    #[error("job `{0}` has reduce tasks but no map task")]
    OrphanReduce(String),
    #[error("job `{job}` names unknown upstream job `{upstream}`")]
    UnknownUpstream { job: String, upstream: String },
    #[error("job `{0}` lists conflicting upstream jobs")]
    ConflictingUpstream(String),
    #[error("upstream chain through job `{0}` is cyclic")]
    UpstreamCycle(String),
    #[error("workload is empty")]
    EmptyWorkload,
    #[error("invalid generator spec: {0}")]
    SpecInvalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    Map,
    Reduce,
}

impl TaskKind {
    fn parse(s: &str) -> Option<TaskKind> {
        match s.to_ascii_uppercase().as_str() {
            "MAP" => Some(TaskKind::Map),
            "REDUCE" => Some(TaskKind::Reduce),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TaskKind::Map => "MAP",
            TaskKind::Reduce => "REDUCE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Fail,
}

impl Outcome {
    fn parse(s: &str) -> Option<Outcome> {
        match s.to_ascii_uppercase().as_str() {
            "SUCCESS" => Some(Outcome::Success),
            "FAIL" | "FAILED" => Some(Outcome::Fail),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Success => "SUCCESS",
            Outcome::Fail => "FAIL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task_id: String,
    pub job_id: String,
    pub kind: TaskKind,
    pub submit_ms: u64,
    pub duration_ms: u64,
    pub deadline_ms: Option<u64>,
    pub preferred_node: Option<u32>,
    pub outcome: Outcome,
    pub failure_cause: Option<String>,
    pub upstream_job: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobEntry {
    pub id: String,
    /// Record indices, in trace order.
    pub tasks: Vec<usize>,
    pub maps: usize,
    pub upstream: Option<usize>,
}

/// A validated workload: records sorted by `(submit_ms, task_id)`, unique ids,
/// every reduce backed by at least one map of its job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkloadTrace {
    records: Vec<TaskRecord>,
    jobs: Vec<JobEntry>,
    job_index: HashMap<String, usize>,
    failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub tasks: usize,
    pub jobs: usize,
    pub maps: usize,
    pub reduces: usize,
    pub failed: usize,
    /// Percentage of FAIL-labelled tasks.
    pub failure_pct: f64,
}

const COLUMNS: [&str; 9] = [
    "task_id",
    "job_id",
    "kind",
    "submit_ms",
    "duration_ms",
    "deadline_ms",
    "preferred_node",
    "outcome",
    "failure_cause",
];

impl WorkloadTrace {
    pub fn from_records(mut records: Vec<TaskRecord>) -> Result<Self, TraceError> {
        if records.is_empty() {
            return Err(TraceError::EmptyWorkload);
        }
        records.sort_by(|a, b| (a.submit_ms, &a.task_id).cmp(&(b.submit_ms, &b.task_id)));

        let mut seen = HashMap::with_capacity(records.len());
        for r in &records {
            if seen.insert(r.task_id.as_str(), ()).is_some() {
                return Err(TraceError::DuplicateTaskId(r.task_id.clone()));
            }
        }

        let mut jobs: Vec<JobEntry> = Vec::new();
        let mut job_index: HashMap<String, usize> = HashMap::new();
        let mut upstream_names: Vec<Option<String>> = Vec::new();
        for (i, r) in records.iter().enumerate() {
            let j = *job_index.entry(r.job_id.clone()).or_insert_with(|| {
                jobs.push(JobEntry { id: r.job_id.clone(), tasks: Vec::new(), maps: 0, upstream: None });
                upstream_names.push(None);
                jobs.len() - 1
            });
            jobs[j].tasks.push(i);
            if r.kind == TaskKind::Map {
                jobs[j].maps += 1;
            }
            if let Some(up) = &r.upstream_job {
                match &upstream_names[j] {
                    Some(prev) if prev != up => return Err(TraceError::ConflictingUpstream(r.job_id.clone())),
                    _ => upstream_names[j] = Some(up.clone()),
                }
            }
        }
        for job in &jobs {
            if job.maps == 0 {
                return Err(TraceError::OrphanReduce(job.id.clone()));
            }
        }
        for (j, up) in upstream_names.iter().enumerate() {
            if let Some(up) = up {
                let u = *job_index.get(up).ok_or_else(|| TraceError::UnknownUpstream {
                    job: jobs[j].id.clone(),
                    upstream: up.clone(),
                })?;
                jobs[j].upstream = Some(u);
            }
        }
        for start in 0..jobs.len() {
            let mut cur = jobs[start].upstream;
            let mut hops = 0;
            while let Some(u) = cur {
                hops += 1;
                if u == start || hops > jobs.len() {
                    return Err(TraceError::UpstreamCycle(jobs[start].id.clone()));
                }
                cur = jobs[u].upstream;
            }
        }

        let failed = records.iter().filter(|r| r.outcome == Outcome::Fail).count();
        Ok(WorkloadTrace { records, jobs, job_index, failed })
    }

    pub fn records(&self) -> &[TaskRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn jobs(&self) -> &[JobEntry] {
        &self.jobs
    }

    pub fn job_of(&self, record: usize) -> usize {
        self.job_index[&self.records[record].job_id]
    }

    pub fn job_by_id(&self, id: &str) -> Option<usize> {
        self.job_index.get(id).copied()
    }

    pub fn failed_count(&self) -> usize {
        self.failed
    }

    pub fn position(&self, task_id: &str) -> Option<usize> {
        self.records.iter().position(|r| r.task_id == task_id)
    }

    pub fn stats(&self) -> TraceStats {
        let maps = self.records.iter().filter(|r| r.kind == TaskKind::Map).count();
        TraceStats {
            tasks: self.records.len(),
            jobs: self.jobs.len(),
            maps,
            reduces: self.records.len() - maps,
            failed: self.failed,
            failure_pct: 100.0 * self.failed as f64 / self.records.len() as f64,
        }
    }

    /// Writes the trace in the canonical CSV layout.
    pub fn write<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let with_upstream = self.records.iter().any(|r| r.upstream_job.is_some());
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<&str> = COLUMNS.to_vec();
        if with_upstream {
            header.push("upstream_job");
        }
        w.write_record(&header)?;
        let opt = |v: Option<u64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.records {
            let mut row = vec![
                r.task_id.clone(),
                r.job_id.clone(),
                r.kind.label().to_string(),
                r.submit_ms.to_string(),
                r.duration_ms.to_string(),
                opt(r.deadline_ms),
                opt(r.preferred_node.map(u64::from)),
                r.outcome.label().to_string(),
                r.failure_cause.clone().unwrap_or_default(),
            ];
            if with_upstream {
                row.push(r.upstream_job.clone().unwrap_or_default());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("trace fields are UTF-8")
    }
}

/// Parses and merges several trace files (for example one per month).
pub fn parse(paths: &[impl AsRef<Path>]) -> Result<WorkloadTrace, TraceError> {
    let mut records = Vec::new();
    for p in paths {
        let p = p.as_ref();
        let file = File::open(p).map_err(|source| TraceError::Io { path: p.to_path_buf(), source })?;
        records.extend(read_records(file, &p.display().to_string())?);
    }
    WorkloadTrace::from_records(records)
}

pub fn parse_str(text: &str) -> Result<WorkloadTrace, TraceError> {
    WorkloadTrace::from_records(read_records(text.as_bytes(), "<input>")?)
}

/// Reads raw rows without cross-row validation. This is the seam for converters
/// from other trace formats: anything that yields `TaskRecord`s can feed
/// `WorkloadTrace::from_records`.
pub fn read_records<R: Read>(input: R, source_name: &str) -> Result<Vec<TaskRecord>, TraceError> {
    let malformed = |line: u64, reason: String| TraceError::MalformedRow {
        source_name: source_name.to_string(),
        line,
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);

    let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
    let mut col = [usize::MAX; 10];
    for (i, h) in headers.iter().enumerate() {
        if let Some(k) = COLUMNS.iter().position(|c| *c == h) {
            col[k] = i;
        } else if h == "upstream_job" {
            col[9] = i;
        } else {
            return Err(malformed(1, format!("unknown column `{h}`")));
        }
    }
    if let Some(k) = (0..9).find(|&k| col[k] == usize::MAX) {
        return Err(malformed(1, format!("missing column `{}`", COLUMNS[k])));
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != headers.len() {
            return Err(malformed(line, format!("expected {} fields, found {}", headers.len(), row.len())));
        }
        let field = |k: usize| row.get(col[k]).unwrap_or("");
        let required = |k: usize| {
            let v = field(k);
            if v.is_empty() {
                Err(malformed(line, format!("empty `{}`", COLUMNS[k])))
            } else {
                Ok(v)
            }
        };
        let int = |k: usize| -> Result<u64, TraceError> {
            required(k)?
                .parse::<u64>()
                .map_err(|e| malformed(line, format!("`{}`: {e}", COLUMNS[k])))
        };
        let opt_int = |k: usize| -> Result<Option<u64>, TraceError> {
            if field(k).is_empty() {
                Ok(None)
            } else {
                int(k).map(Some)
            }
        };
        let duration_ms = int(4)?;
        if duration_ms == 0 {
            return Err(malformed(line, "duration_ms must be positive".into()));
        }
        let preferred_node = match opt_int(6)? {
            Some(n) => Some(u32::try_from(n).map_err(|_| malformed(line, "preferred_node too large".into()))?),
            None => None,
        };
        let non_empty = |s: &str| (!s.is_empty()).then(|| s.to_string());
        out.push(TaskRecord {
            task_id: required(0)?.to_string(),
            job_id: required(1)?.to_string(),
            kind: TaskKind::parse(required(2)?)
                .ok_or_else(|| malformed(line, format!("unknown kind `{}`", field(2))))?,
            submit_ms: int(3)?,
            duration_ms,
            deadline_ms: opt_int(5)?,
            preferred_node,
            outcome: Outcome::parse(required(7)?)
                .ok_or_else(|| malformed(line, format!("unknown outcome `{}`", field(7))))?,
            failure_cause: non_empty(field(8)),
            upstream_job: if col[9] == usize::MAX { None } else { non_empty(field(9)) },
        });
    }
    Ok(out)
}
