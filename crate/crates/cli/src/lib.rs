//! `schedcheck`: verify scheduler properties against a workload trace, compare
//! predicted outcomes with the trace, explore what-if cluster changes and
//! generate synthetic traces.
//!
//! Exit codes: 0 all properties valid, 1 some property invalid, 2 a budget ran
//! out before a verdict, 3 usage or input error.

pub mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use schedcheck_core::analysis::{self, AnalysisError};
use schedcheck_core::checker::{
    check, parse_goal_expr, parse_properties, Budget, CheckError, GoalExpr, NamedProperty, Strategy, VerificationResult,
};
use schedcheck_core::config::{ClusterConfig, ConfigError, SchedulerKind};
use schedcheck_core::model::{build_cluster, ModelError};
use schedcheck_core::trace::{self, synthesize, GenSpec, Profile, TraceError, WorkloadTrace};
use schedcheck_core::whatif::{failure_range, Dimension, Scenario, WhatIf, WhatIfError};
use thiserror::Error;

use report::{AnalysisSection, ExhaustiveRange, RunReport, TraceSummary};

pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    WhatIf(#[from] WhatIfError),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(name = "schedcheck", version, about = "Model-check Hadoop-style schedulers against workload traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check every `#assert` in a property file.
    Verify(VerifyArgs),
    /// Compare the outcomes predicted by one property's witness with the trace.
    Analyze(AnalyzeArgs),
    /// Compare a baseline config against a changed one.
    Whatif(WhatIfArgs),
    /// Write a synthetic trace.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Cluster config (`key = value` lines).
    #[arg(long)]
    pub config: PathBuf,
    /// Trace CSV files, merged in order.
    #[arg(long, num_args = 1.., required = true)]
    pub trace: Vec<PathBuf>,
    /// Overrides the config's scheduler.
    #[arg(long)]
    pub scheduler: Option<SchedulerKind>,
    #[arg(long, default_value = "dfs-sym")]
    pub strategy: Strategy,
    /// Maximum number of distinct states per property.
    #[arg(long)]
    pub state_budget: Option<u64>,
    /// Wall-clock limit per property, in seconds.
    #[arg(long)]
    pub time_budget: Option<f64>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub properties: PathBuf,
    /// Also compare the first witness's predicted outcomes with the trace labels.
    #[arg(long)]
    pub truth: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub properties: PathBuf,
    /// Which `#assert` feeds the analysis: its 1-based position or its exact text.
    #[arg(long)]
    pub property: String,
    /// Accepted for symmetry with `verify`; analysis always uses the trace labels.
    #[arg(long)]
    pub truth: bool,
}

#[derive(Debug, Args)]
pub struct WhatIfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Goal expression whose witness predicts failures.
    #[arg(long, default_value = "completedscheduled == workload")]
    pub goal: String,
    /// Scenario file of config overrides.
    #[arg(long, conflicts_with_all = ["set", "sweep"])]
    pub scenario: Option<PathBuf>,
    /// Inline override, `key=value`; repeatable.
    #[arg(long, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Sweep one dimension: nodes, slots, timeout, scheduler, max_queue or queue_timeout.
    #[arg(long, requires = "values")]
    pub sweep: Option<Dimension>,
    /// Comma-separated sweep values.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    /// One row per scheduler, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub schedulers: Vec<SchedulerKind>,
    /// Also report the failure range over every reachable end state.
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator spec (`key = value` lines).
    #[arg(long, conflicts_with = "profile")]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub tasks: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

impl ModelArgs {
    fn load(&self) -> Result<(ClusterConfig, WorkloadTrace), CliError> {
        let mut cfg = ClusterConfig::parse(&read(&self.config)?)
            .map_err(|source| CliError::Config { path: self.config.clone(), source })?;
        if let Some(s) = self.scheduler {
            cfg.scheduler = s;
        }
        let trace = trace::parse(&self.trace)?;
        Ok((cfg, trace))
    }

    fn budget(&self) -> Result<Budget, CliError> {
        let mut b = Budget::default();
        if let Some(n) = self.state_budget {
            b.max_states = n;
        }
        if let Some(secs) = self.time_budget {
            b.max_time = Some(
                Duration::try_from_secs_f64(secs).map_err(|e| CliError::Usage(format!("--time-budget: {e}")))?,
            );
        }
        Ok(b)
    }

    fn start(&self, command: &str, cfg: &ClusterConfig, trace: &WorkloadTrace) -> RunReport {
        let mut r = RunReport::new(command);
        r.config = Some(cfg.clone());
        r.trace = Some(TraceSummary {
            files: self.trace.iter().map(|p| p.display().to_string()).collect(),
            stats: trace.stats(),
        });
        r.strategy = Some(self.strategy);
        r
    }
}

fn analyze_witness(
    cfg: &ClusterConfig,
    trace: &WorkloadTrace,
    result: &VerificationResult,
) -> Result<AnalysisSection, CliError> {
    let init = build_cluster(cfg, trace)?;
    let ps = analysis::predict(&init, result.witness.as_ref())?;
    let matrix = analysis::classify(&analysis::outcome_map(&ps), trace)?;
    let detected_failures = match analysis::detected_failures(&matrix, trace) {
        Ok(d) => Some(d),
        Err(AnalysisError::NoFailuresInTruth) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(AnalysisSection {
        property: result.property.clone(),
        failure_pct: analysis::failure_pct(&ps),
        matrix,
        detected_failures,
        breakdown: analysis::breakdown(&ps),
    })
}

fn load_properties(path: &Path) -> Result<Vec<NamedProperty>, CliError> {
    let props = parse_properties(&read(path)?)?;
    if props.is_empty() {
        return Err(CliError::Usage(format!("{}: no #assert lines", path.display())));
    }
    Ok(props)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<RunReport, CliError> {
    let (cfg, trace) = args.model.load()?;
    let props = load_properties(&args.properties)?;
    let budget = args.model.budget()?;
    let init = build_cluster(&cfg, &trace)?;
    let mut report = args.model.start("verify", &cfg, &trace);
    for p in &props {
        report.push_result(check(&init, &p.property, args.model.strategy, &budget)?);
    }
    if args.truth {
        report.analysis = Some(analyze_witness(&cfg, &trace, &report.results[0])?);
    }
    Ok(report)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<RunReport, CliError> {
    let (cfg, trace) = args.model.load()?;
    let props = load_properties(&args.properties)?;
    let chosen = match args.property.parse::<usize>() {
        Ok(i) if (1..=props.len()).contains(&i) => &props[i - 1],
        Ok(i) => return Err(CliError::Usage(format!("--property {i}: file has {} properties", props.len()))),
        Err(_) => props
            .iter()
            .find(|p| p.label == args.property.trim().trim_end_matches(';'))
            .ok_or_else(|| CliError::Usage(format!("no property `{}` in {}", args.property, args.properties.display())))?,
    };
    let init = build_cluster(&cfg, &trace)?;
    let mut report = args.model.start("analyze", &cfg, &trace);
    report.push_result(check(&init, &chosen.property, args.model.strategy, &args.model.budget()?)?);
    report.analysis = Some(analyze_witness(&cfg, &trace, &report.results[0])?);
    Ok(report)
}

pub fn cmd_whatif(args: &WhatIfArgs) -> Result<RunReport, CliError> {
    let (cfg, trace) = args.model.load()?;
    let goal: GoalExpr = parse_goal_expr(&args.goal)?;
    let engine = WhatIf { workload: &trace, goal: &goal, strategy: args.model.strategy, budget: args.model.budget()? };
    let mut report = args.model.start("whatif", &cfg, &trace);
    report.comparisons = if let Some(dim) = args.sweep {
        engine.sweep(&cfg, dim, &args.values)?
    } else {
        let scenario = match &args.scenario {
            Some(path) => Scenario::parse(&read(path)?).map_err(|source| CliError::Config { path: path.clone(), source })?,
            None => {
                let mut delta = Vec::new();
                for s in &args.set {
                    let (k, v) = s
                        .split_once('=')
                        .ok_or_else(|| CliError::Usage(format!("--set `{s}` is not KEY=VALUE")))?;
                    delta.push((k.trim().to_string(), v.trim().to_string()));
                }
                let label = if delta.is_empty() { "identity".to_string() } else { args.set.join(",") };
                Scenario { label, delta }
            }
        };
        engine.run(&cfg, &scenario, &args.schedulers)?
    };
    for c in &report.comparisons {
        report.totals.states_explored += c.baseline.states_explored + c.scenario.states_explored;
    }
    if args.exhaustive {
        let mut seen: Vec<(String, ClusterConfig)> = Vec::new();
        for c in &report.comparisons {
            for (tag, leg) in [("baseline", &c.baseline), ("scenario", &c.scenario)] {
                if !seen.iter().any(|(_, cf)| *cf == leg.config) {
                    seen.push((format!("{} {} {tag}", c.label, c.scheduler.name().to_ascii_lowercase()), leg.config.clone()));
                }
            }
        }
        for (label, cf) in seen {
            let range = failure_range(&cf, &trace, args.model.strategy, &engine.budget)?;
            report.exhaustive.push(ExhaustiveRange {
                label,
                min_failure_pct: range.map(|r| r.0),
                max_failure_pct: range.map(|r| r.1),
            });
        }
    }
    Ok(report)
}

pub fn cmd_gen(args: &GenArgs) -> Result<WorkloadTrace, CliError> {
    let mut spec = match (&args.spec, args.profile) {
        (Some(path), _) => GenSpec::parse(&read(path)?)?,
        (None, Some(p)) => GenSpec::profile(p),
        (None, None) => GenSpec::default(),
    };
    if let Some(n) = args.tasks {
        spec.tasks = n;
    }
    Ok(synthesize(&spec, args.seed)?)
}

/// Parses `args`, runs the command and returns the exit code. Tables go to
/// `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32, CliError> {
    let (report, dest) = match command {
        Command::Verify(a) => (cmd_verify(a)?, &a.model.out),
        Command::Analyze(a) => (cmd_analyze(a)?, &a.model.out),
        Command::Whatif(a) => (cmd_whatif(a)?, &a.model.out),
        Command::Gen(a) => {
            let csv = cmd_gen(a)?.to_csv_string();
            match &a.out {
                Some(p) => write(p, &csv)?,
                None => {
                    let _ = out.write_all(csv.as_bytes());
                }
            }
            return Ok(0);
        }
    };
    if let Some(p) = dest {
        write(p, &report.to_json())?;
    }
    let _ = out.write_all(report.render().as_bytes());
    Ok(report.exit_code())
}
