//! Goals, task assertions and the property-file syntax.
//!
//! ```text
//! #define goal0 completedscheduled == workload && workload > 0;
//! #assert cluster1 reaches goal0 && schedulabilityrate > 80;
//! #assert <> (task |= (submitted -> finished-within-deadline));
//! #assert ! (task[t01] |= (submitted -> waiting-resources));
//! ```
//!
//! `◇`, `¬`, `⊨`, `≥` and `∧` are accepted for `<>`, `!`, `|=`, `>=` and `&&`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::rates::RateCounts;
use super::CheckError;
use crate::model::Phase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    CompletedScheduled,
    Workload,
    SchedulabilityRate,
    FairnessRate,
    ResourceDeadlockRate,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::CompletedScheduled,
        Metric::Workload,
        Metric::SchedulabilityRate,
        Metric::FairnessRate,
        Metric::ResourceDeadlockRate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::CompletedScheduled => "completedscheduled",
            Metric::Workload => "workload",
            Metric::SchedulabilityRate => "schedulabilityrate",
            Metric::FairnessRate => "fairnessrate",
            Metric::ResourceDeadlockRate => "resourcedeadlockrate",
        }
    }

    pub fn is_rate(self) -> bool {
        matches!(self, Metric::SchedulabilityRate | Metric::FairnessRate | Metric::ResourceDeadlockRate)
    }
}

impl FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparator {
    Eq,
    Gt,
    Ge,
}

impl Comparator {
    fn symbol(self) -> &'static str {
        match self {
            Comparator::Eq => "==",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operand {
    Metric(Metric),
    Number(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub metric: Metric,
    pub cmp: Comparator,
    pub rhs: Operand,
}

/// Exact comparison of `num/den` against `rhs`, scaled by `scale`.
fn compare(scale: f64, num: u64, den: u64, cmp: Comparator, rhs: f64) -> bool {
    // value = scale * num / den, or 0 if den == 0
    let (lhs, rhs) = if den == 0 { (0.0, rhs) } else { (scale * num as f64, rhs * den as f64) };
    match cmp {
        Comparator::Eq => lhs == rhs,
        Comparator::Gt => lhs > rhs,
        Comparator::Ge => lhs >= rhs,
    }
}

impl Atom {
    /// Rate atoms written with `==` are read as "at least".
    pub fn effective_cmp(&self) -> Comparator {
        if self.metric.is_rate() && self.cmp == Comparator::Eq {
            Comparator::Ge
        } else {
            self.cmp
        }
    }

    pub fn holds(&self, c: &RateCounts) -> bool {
        let cmp = self.effective_cmp();
        let rhs = match self.rhs {
            Operand::Number(n) => n,
            Operand::Metric(m) => c.value(m),
        };
        let (scale, num, den) = c.fraction(self.metric);
        compare(scale, num, den, cmp, rhs)
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} ", self.metric.name(), self.cmp.symbol())?;
        match self.rhs {
            Operand::Metric(m) => f.write_str(m.name()),
            Operand::Number(n) => write!(f, "{n}"),
        }
    }
}

/// A conjunction of atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalExpr {
    pub atoms: Vec<Atom>,
}

impl GoalExpr {
    pub fn holds(&self, c: &RateCounts) -> bool {
        self.atoms.iter().all(|a| a.holds(c))
    }

    /// The "every task scheduled" goal: `completedscheduled == workload && workload > 0`.
    pub fn all_scheduled() -> GoalExpr {
        GoalExpr {
            atoms: vec![
                Atom { metric: Metric::CompletedScheduled, cmp: Comparator::Eq, rhs: Operand::Metric(Metric::Workload) },
                Atom { metric: Metric::Workload, cmp: Comparator::Gt, rhs: Operand::Number(0.0) },
            ],
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.atoms.is_empty() {
            return Err("goal has no atoms".into());
        }
        for a in &self.atoms {
            if let Operand::Number(n) = a.rhs {
                if a.metric.is_rate() && !(0.0..=100.0).contains(&n) {
                    return Err(format!("rate threshold {n} outside [0, 100]"));
                }
                if !n.is_finite() {
                    return Err(format!("threshold {n} is not finite"));
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for GoalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSelector {
    All,
    Id(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssertionShape {
    EventuallyReaches(Phase),
    NeverReaches(Phase),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskAssertion {
    pub selector: TaskSelector,
    pub shape: AssertionShape,
}

impl fmt::Display for TaskAssertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sel = match &self.selector {
            TaskSelector::All => "task".to_string(),
            TaskSelector::Id(id) => format!("task[{id}]"),
        };
        match self.shape {
            AssertionShape::EventuallyReaches(p) => write!(f, "<> ({sel} |= (submitted -> {p}))"),
            AssertionShape::NeverReaches(p) => write!(f, "! ({sel} |= (submitted -> {p}))"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Reaches { cluster: String, goal: GoalExpr },
    Task(TaskAssertion),
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Reaches { cluster, goal } => write!(f, "{cluster} reaches {goal}"),
            Property::Task(a) => write!(f, "{a}"),
        }
    }
}

/// One `#assert` line: its source text and the compiled property.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedProperty {
    pub label: String,
    pub property: Property,
}

fn normalize(s: &str) -> String {
    s.replace('◇', "<>")
        .replace('⊨', "|=")
        .replace('¬', "!")
        .replace('≥', ">=")
        .replace('∧', "&&")
        .replace('→', "->")
}

fn parse_number(s: &str) -> Option<f64> {
    s.trim_end_matches('%').parse::<f64>().ok()
}

fn parse_atom(text: &str) -> Result<Atom, String> {
    let (pos, cmp, len) = ["==", ">=", ">"]
        .iter()
        .find_map(|op| text.find(op).map(|p| (p, *op, op.len())))
        .ok_or_else(|| format!("expected a comparison in `{text}`"))?;
    let cmp = match cmp {
        "==" => Comparator::Eq,
        ">=" => Comparator::Ge,
        _ => Comparator::Gt,
    };
    let lhs = text[..pos].trim();
    let rhs = text[pos + len..].trim();
    let metric: Metric = lhs.parse()?;
    let rhs = match parse_number(rhs) {
        Some(n) => Operand::Number(n),
        None => Operand::Metric(rhs.parse()?),
    };
    Ok(Atom { metric, cmp, rhs })
}

fn parse_goal(text: &str, defines: &HashMap<String, GoalExpr>) -> Result<GoalExpr, String> {
    let mut atoms = Vec::new();
    for part in text.split("&&") {
        let part = part.trim().trim_start_matches('(').trim_end_matches(')').trim();
        if part.is_empty() {
            return Err("empty conjunct".into());
        }
        if let Some(g) = defines.get(part) {
            atoms.extend(g.atoms.iter().copied());
        } else if part.chars().all(|c| c.is_alphanumeric() || c == '_') && Metric::from_str(part).is_err() {
            return Err(format!("undefined goal `{part}`"));
        } else {
            atoms.push(parse_atom(part)?);
        }
    }
    let goal = GoalExpr { atoms };
    goal.validate()?;
    Ok(goal)
}

fn strip_parens(s: &str) -> Result<&str, String> {
    let s = s.trim();
    s.strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .map(str::trim)
        .ok_or_else(|| format!("expected parentheses around `{s}`"))
}

fn parse_task_assertion(body: &str, eventually: bool) -> Result<TaskAssertion, String> {
    let inner = strip_parens(body)?;
    let (sel, rest) = inner.split_once("|=").ok_or("expected `|=`")?;
    let sel = sel.trim();
    let selector = if sel == "task" {
        TaskSelector::All
    } else {
        let id = sel
            .strip_prefix("task[")
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| format!("bad task selector `{sel}`"))?;
        TaskSelector::Id(id.trim().to_string())
    };
    let (pre, post) = strip_parens(rest)?.split_once("->").ok_or("expected `->`")?;
    if pre.trim() != "submitted" {
        return Err(format!("assertions start from `submitted`, not `{}`", pre.trim()));
    }
    let phase: Phase = post.trim().parse()?;
    let shape = if eventually {
        AssertionShape::EventuallyReaches(phase)
    } else {
        AssertionShape::NeverReaches(phase)
    };
    Ok(TaskAssertion { selector, shape })
}

/// Parses a property file into its `#assert` lines, in order.
pub fn parse_properties(text: &str) -> Result<Vec<NamedProperty>, CheckError> {
    let mut defines: HashMap<String, GoalExpr> = HashMap::new();
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |reason: String| CheckError::Parse { line, reason };
        let norm = normalize(raw.split("//").next().unwrap_or(""));
        let stmt = norm.trim().trim_end_matches(';').trim();
        if stmt.is_empty() {
            continue;
        }
        if let Some(rest) = stmt.strip_prefix("#define") {
            let rest = rest.trim();
            let (name, body) = rest.split_once(char::is_whitespace).ok_or_else(|| err("empty #define".into()))?;
            let goal = parse_goal(body, &defines).map_err(err)?;
            defines.insert(name.to_string(), goal);
        } else if let Some(rest) = stmt.strip_prefix("#assert") {
            let rest = rest.trim();
            let property = if let Some(body) = rest.strip_prefix("<>") {
                Property::Task(parse_task_assertion(body, true).map_err(err)?)
            } else if let Some(body) = rest.strip_prefix('!') {
                Property::Task(parse_task_assertion(body, false).map_err(err)?)
            } else {
                let mut words = rest.splitn(3, char::is_whitespace);
                let cluster = words.next().unwrap_or_default().to_string();
                if words.next() != Some("reaches") {
                    return Err(err(format!("expected `<cluster> reaches <goal>` in `{rest}`")));
                }
                let goal = parse_goal(words.next().unwrap_or(""), &defines).map_err(err)?;
                Property::Reaches { cluster, goal }
            };
            out.push(NamedProperty { label: rest.to_string(), property });
        } else {
            return Err(err(format!("unrecognised statement `{stmt}`")));
        }
    }
    Ok(out)
}

/// Parses a single goal expression, e.g. from the command line.
pub fn parse_goal_expr(text: &str) -> Result<GoalExpr, CheckError> {
    parse_goal(&normalize(text), &HashMap::new()).map_err(|reason| CheckError::Parse { line: 1, reason })
}
