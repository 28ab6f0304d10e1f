//! Small-step semantics for a CSP subset over a shared integer store.
//!
//! Terms are `Stop | Skip | a{updates} -> P | P ; Q | P || Q | c!e -> P | c?x -> P`
//! plus guards (`ifa(cond) P`), indexed parallel composition and calls into a
//! definition table. A prefix fires its event and its update block as one atomic
//! transition; a send and a matching receive fire together as one transition.

pub mod expr;
pub mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::{evaluate, Assign, BinOp, Expr, Store, Target, UnOp, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("undefined process `{0}`")]
    UndefinedProcess(String),
    #[error("process `{name}` expects {expected} argument(s), got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("`{0}` has the wrong shape for this use (scalar vs array)")]
    TypeMismatch(String),
    #[error("index {1} out of bounds for `{0}`")]
    IndexOutOfBounds(String, i64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("indexed parallel over empty range {0}..{1}")]
    EmptyRange(i64, i64),
    #[error("more than {0} process unfoldings in one step (unguarded recursion?)")]
    RecursionLimit(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// An observable event. `payload` is set only for channel communications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Event {
    pub name: String,
    pub payload: Option<i64>,
}

impl Event {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty());
        Event { name, payload: None }
    }

    pub fn with_payload(name: impl Into<String>, payload: i64) -> Self {
        let name = name.into();
        debug_assert!(!name.is_empty());
        Event { name, payload: Some(payload) }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.payload {
            Some(v) => write!(f, "{}!{v}", self.name),
            None => write!(f, "{}", self.name),
        }
    }
}

/// Event name with index parameters, rendered as `name.p0.p1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventLabel {
    pub name: String,
    pub params: Vec<Expr>,
}

impl EventLabel {
    pub fn plain(name: impl Into<String>) -> Self {
        EventLabel { name: name.into(), params: Vec::new() }
    }

    pub fn indexed(name: impl Into<String>, params: Vec<Expr>) -> Self {
        EventLabel { name: name.into(), params }
    }

    fn render(&self, store: &Store) -> Result<Event, KernelError> {
        let mut name = self.name.clone();
        for p in &self.params {
            name.push('.');
            name.push_str(&evaluate(p, store)?.to_string());
        }
        Ok(Event::new(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    Stop,
    Skip,
    Prefix {
        event: EventLabel,
        updates: Vec<Assign>,
        then: Box<Process>,
    },
    Seq(Box<Process>, Box<Process>),
    Par(Box<Process>, Box<Process>),
    Send {
        channel: String,
        value: Expr,
        then: Box<Process>,
    },
    Recv {
        channel: String,
        target: Target,
        then: Box<Process>,
    },
    Guard {
        cond: Expr,
        then: Box<Process>,
    },
    /// `|| var:{from..to} @ body`, bounds inclusive.
    IndexedPar {
        var: String,
        from: Expr,
        to: Expr,
        body: Box<Process>,
    },
    Call {
        name: String,
        args: Vec<Expr>,
    },
}

impl Process {
    pub fn prefix(event: impl Into<String>, then: Process) -> Process {
        Process::Prefix {
            event: EventLabel::plain(event),
            updates: Vec::new(),
            then: Box::new(then),
        }
    }

    pub fn prefix_with(event: EventLabel, updates: Vec<Assign>, then: Process) -> Process {
        Process::Prefix { event, updates, then: Box::new(then) }
    }

    pub fn seq(l: Process, r: Process) -> Process {
        Process::Seq(Box::new(l), Box::new(r))
    }

    pub fn par(l: Process, r: Process) -> Process {
        Process::Par(Box::new(l), Box::new(r))
    }

    pub fn send(channel: impl Into<String>, value: Expr, then: Process) -> Process {
        Process::Send { channel: channel.into(), value, then: Box::new(then) }
    }

    pub fn recv(channel: impl Into<String>, target: Target, then: Process) -> Process {
        Process::Recv { channel: channel.into(), target, then: Box::new(then) }
    }

    pub fn guard(cond: Expr, then: Process) -> Process {
        Process::Guard { cond, then: Box::new(then) }
    }

    pub fn indexed_par(var: impl Into<String>, from: Expr, to: Expr, body: Process) -> Process {
        Process::IndexedPar { var: var.into(), from, to, body: Box::new(body) }
    }

    pub fn call(name: impl Into<String>, args: Vec<Expr>) -> Process {
        Process::Call { name: name.into(), args }
    }

    /// Binds a scalar parameter to a constant throughout the term.
    pub fn substitute(&self, name: &str, value: i64) -> Process {
        let sub = |p: &Process| Box::new(p.substitute(name, value));
        match self {
            Process::Stop | Process::Skip => self.clone(),
            Process::Prefix { event, updates, then } => Process::Prefix {
                event: EventLabel {
                    name: event.name.clone(),
                    params: event.params.iter().map(|e| e.substitute(name, value)).collect(),
                },
                updates: updates.iter().map(|a| a.substitute(name, value)).collect(),
                then: sub(then),
            },
            Process::Seq(l, r) => Process::Seq(sub(l), sub(r)),
            Process::Par(l, r) => Process::Par(sub(l), sub(r)),
            Process::Send { channel, value: v, then } => Process::Send {
                channel: channel.clone(),
                value: v.substitute(name, value),
                then: sub(then),
            },
            Process::Recv { channel, target, then } => Process::Recv {
                channel: channel.clone(),
                target: target.substitute(name, value),
                then: sub(then),
            },
            Process::Guard { cond, then } => Process::Guard {
                cond: cond.substitute(name, value),
                then: sub(then),
            },
            Process::IndexedPar { var, from, to, body } => Process::IndexedPar {
                var: var.clone(),
                from: from.substitute(name, value),
                to: to.substitute(name, value),
                body: if var == name { body.clone() } else { sub(body) },
            },
            Process::Call { name: callee, args } => Process::Call {
                name: callee.clone(),
                args: args.iter().map(|e| e.substitute(name, value)).collect(),
            },
        }
    }

    fn normalize(self) -> Process {
        match self {
            Process::Seq(l, r) => match l.normalize() {
                Process::Skip => r.normalize(),
                l => Process::Seq(Box::new(l), r),
            },
            Process::Par(l, r) => match (l.normalize(), r.normalize()) {
                (Process::Skip, x) | (x, Process::Skip) => x,
                (l, r) => Process::Par(Box::new(l), Box::new(r)),
            },
            p => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDef {
    pub params: Vec<String>,
    pub body: Process,
}

/// A configuration: the multiset of parallel components plus the store.
///
/// Components are kept flattened (top-level `||` split apart, `Skip` dropped) and
/// sorted, so two configurations that differ only in component order are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelState {
    active: Vec<Process>,
    pub store: Store,
}

fn flatten_into(p: Process, out: &mut Vec<Process>) {
    match p.normalize() {
        Process::Par(l, r) => {
            flatten_into(*l, out);
            flatten_into(*r, out);
        }
        Process::Skip => {}
        p => out.push(p),
    }
}

impl KernelState {
    pub fn new(active: Vec<Process>, store: Store) -> Self {
        let mut flat = Vec::with_capacity(active.len());
        for p in active {
            flatten_into(p, &mut flat);
        }
        flat.sort();
        KernelState { active: flat, store }
    }

    pub fn active(&self) -> &[Process] {
        &self.active
    }

    /// True iff every component has terminated successfully.
    pub fn is_terminated(&self) -> bool {
        self.active.iter().all(|p| *p == Process::Skip)
    }
}

/// Definition table plus the unfolding guard.
#[derive(Debug, Clone)]
pub struct Program {
    defs: Arc<BTreeMap<String, ProcessDef>>,
    unfold_limit: usize,
}

impl Default for Program {
    fn default() -> Self {
        Program { defs: Arc::default(), unfold_limit: 1_000_000 }
    }
}

enum Offer {
    Event { event: Event, updates: Vec<Assign>, next: Process },
    Send { channel: String, value: i64, next: Process },
    Recv { channel: String, target: Target, next: Process },
}

impl Offer {
    fn map_next(self, f: impl FnOnce(Process) -> Process) -> Offer {
        match self {
            Offer::Event { event, updates, next } => Offer::Event { event, updates, next: f(next) },
            Offer::Send { channel, value, next } => Offer::Send { channel, value, next: f(next) },
            Offer::Recv { channel, target, next } => Offer::Recv { channel, target, next: f(next) },
        }
    }
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_unfold_limit(mut self, limit: usize) -> Self {
        self.unfold_limit = limit;
        self
    }

    pub fn define(&mut self, name: impl Into<String>, params: &[&str], body: Process) {
        Arc::make_mut(&mut self.defs).insert(
            name.into(),
            ProcessDef { params: params.iter().map(|s| s.to_string()).collect(), body },
        );
    }

    pub fn get(&self, name: &str) -> Option<&ProcessDef> {
        self.defs.get(name)
    }

    /// Every enabled one-step transition, in component order.
    pub fn successors(&self, state: &KernelState) -> Result<Vec<(Event, KernelState)>, KernelError> {
        let mut budget = self.unfold_limit;
        let mut per_component = Vec::with_capacity(state.active.len());
        for p in &state.active {
            per_component.push(self.offers(p, &state.store, &mut budget)?);
        }

        let mut out = Vec::new();
        for (i, offers) in per_component.iter().enumerate() {
            for offer in offers {
                if let Offer::Event { event, updates, next } = offer {
                    let mut store = state.store.clone();
                    for a in updates {
                        store.assign(a)?;
                    }
                    out.push((event.clone(), replace(state, &[(i, next.clone())], store)));
                }
            }
        }
        for (i, sends) in per_component.iter().enumerate() {
            for send in sends {
                let Offer::Send { channel, value, next: send_next } = send else { continue };
                for (j, recvs) in per_component.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    for recv in recvs {
                        let Offer::Recv { channel: c, target, next: recv_next } = recv else {
                            continue;
                        };
                        if c != channel {
                            continue;
                        }
                        let mut store = state.store.clone();
                        store.assign(&Assign::new(target.clone(), Expr::Const(*value)))?;
                        out.push((
                            Event::with_payload(channel.clone(), *value),
                            replace(state, &[(i, send_next.clone()), (j, recv_next.clone())], store),
                        ));
                    }
                }
            }
        }
        Ok(out)
    }

    fn offers(&self, p: &Process, store: &Store, budget: &mut usize) -> Result<Vec<Offer>, KernelError> {
        Ok(match p {
            Process::Stop | Process::Skip => Vec::new(),
            Process::Prefix { event, updates, then } => vec![Offer::Event {
                event: event.render(store)?,
                updates: updates.clone(),
                next: (**then).clone(),
            }],
            Process::Send { channel, value, then } => vec![Offer::Send {
                channel: channel.clone(),
                value: evaluate(value, store)?,
                next: (**then).clone(),
            }],
            Process::Recv { channel, target, then } => vec![Offer::Recv {
                channel: channel.clone(),
                target: target.clone(),
                next: (**then).clone(),
            }],
            Process::Guard { cond, then } => {
                if evaluate(cond, store)? != 0 {
                    self.offers(then, store, budget)?
                } else {
                    Vec::new()
                }
            }
            Process::Seq(l, r) => {
                if **l == Process::Skip {
                    return self.offers(r, store, budget);
                }
                self.offers(l, store, budget)?
                    .into_iter()
                    .map(|o| o.map_next(|n| Process::seq(n, (**r).clone()).normalize()))
                    .collect()
            }
            Process::Par(l, r) => self.par_offers(l, r, store, budget)?,
            Process::IndexedPar { var, from, to, body } => {
                let lo = evaluate(from, store)?;
                let hi = evaluate(to, store)?;
                if hi < lo {
                    return Err(KernelError::EmptyRange(lo, hi));
                }
                let mut expanded = body.substitute(var, hi);
                for k in (lo..hi).rev() {
                    expanded = Process::par(body.substitute(var, k), expanded);
                }
                self.offers(&expanded, store, budget)?
            }
            Process::Call { name, args } => {
                if *budget == 0 {
                    return Err(KernelError::RecursionLimit(self.unfold_limit));
                }
                *budget -= 1;
                let def = self
                    .defs
                    .get(name)
                    .ok_or_else(|| KernelError::UndefinedProcess(name.clone()))?;
                if def.params.len() != args.len() {
                    return Err(KernelError::Arity {
                        name: name.clone(),
                        expected: def.params.len(),
                        got: args.len(),
                    });
                }
                let mut body = def.body.clone();
                for (param, arg) in def.params.iter().zip(args) {
                    body = body.substitute(param, evaluate(arg, store)?);
                }
                self.offers(&body, store, budget)?
            }
        })
    }

    fn par_offers(
        &self,
        l: &Process,
        r: &Process,
        store: &Store,
        budget: &mut usize,
    ) -> Result<Vec<Offer>, KernelError> {
        let left = self.offers(l, store, budget)?;
        let right = self.offers(r, store, budget)?;
        let mut out = Vec::with_capacity(left.len() + right.len());

        // Rendezvous between the two sides.
        for (a, b, swap) in [(&left, &right, false), (&right, &left, true)] {
            for s in a.iter() {
                let Offer::Send { channel, value, next: sn } = s else { continue };
                for rv in b.iter() {
                    let Offer::Recv { channel: c, target, next: rn } = rv else { continue };
                    if c != channel {
                        continue;
                    }
                    let (ln, rn) = if swap { (rn.clone(), sn.clone()) } else { (sn.clone(), rn.clone()) };
                    out.push(Offer::Event {
                        event: Event::with_payload(channel.clone(), *value),
                        updates: vec![Assign::new(target.clone(), Expr::Const(*value))],
                        next: Process::par(ln, rn).normalize(),
                    });
                }
            }
        }
        // Interleaving; unmatched communications stay visible to outer compositions.
        for o in left {
            out.push(o.map_next(|n| Process::par(n, r.clone()).normalize()));
        }
        for o in right {
            out.push(o.map_next(|n| Process::par(l.clone(), n).normalize()));
        }
        Ok(out)
    }
}

fn replace(state: &KernelState, changes: &[(usize, Process)], store: Store) -> KernelState {
    let mut active = Vec::with_capacity(state.active.len() + 1);
    for (i, p) in state.active.iter().enumerate() {
        match changes.iter().find(|(j, _)| *j == i) {
            Some((_, next)) => flatten_into(next.clone(), &mut active),
            None => active.push(p.clone()),
        }
    }
    active.sort();
    KernelState { active, store }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn names(succ: &[(Event, KernelState)]) -> Vec<String> {
        succ.iter().map(|(e, _)| e.to_string()).collect()
    }

    #[test]
    fn stop_has_no_successors() {
        let p = Program::new();
        let s = KernelState::new(vec![Process::Stop], Store::new());
        assert!(p.successors(&s).unwrap().is_empty());
        assert!(!s.is_terminated());
    }

    #[test]
    fn termination() {
        assert!(KernelState::new(vec![Process::Skip, Process::Skip], Store::new()).is_terminated());
        assert!(KernelState::new(vec![], Store::new()).is_terminated());
        let a = KernelState::new(vec![Process::prefix("a", Process::Skip)], Store::new());
        assert!(!a.is_terminated());
    }

    #[test]
    fn sequencing_runs_left_then_right() {
        let p = Program::new();
        let s = KernelState::new(
            vec![Process::seq(
                Process::prefix("a", Process::Skip),
                Process::prefix("b", Process::Skip),
            )],
            Store::new(),
        );
        let first = p.successors(&s).unwrap();
        assert_eq!(names(&first), ["a"]);
        let second = p.successors(&first[0].1).unwrap();
        assert_eq!(names(&second), ["b"]);
        assert!(second[0].1.is_terminated());
        assert!(p.successors(&second[0].1).unwrap().is_empty());
    }

    /// Independent two-line interpreter for a single send/receive pair.
    fn rendezvous_oracle(value: i64, mut store: BTreeMap<&'static str, i64>) -> BTreeMap<&'static str, i64> {
        store.insert("x", value);
        store
    }

    #[test]
    fn rendezvous_is_one_transition() {
        let p = Program::new();
        let s = KernelState::new(
            vec![Process::par(
                Process::send("c", Expr::Const(5), Process::Skip),
                Process::recv("c", Target::Var("x".into()), Process::Skip),
            )],
            Store::new().with("x", Value::Int(0)),
        );
        let succ = p.successors(&s).unwrap();
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].0, Event::with_payload("c", 5));
        let expected = rendezvous_oracle(5, BTreeMap::from([("x", 0)]));
        assert_eq!(succ[0].1.store.int("x").unwrap(), expected["x"]);
        assert!(succ[0].1.is_terminated());
    }

    #[test]
    fn rendezvous_across_top_level_components() {
        let p = Program::new();
        let s = KernelState::new(
            vec![
                Process::recv("c", Target::Var("x".into()), Process::prefix("got", Process::Skip)),
                Process::send("c", Expr::bin(BinOp::Add, Expr::Const(2), Expr::Const(3)), Process::Skip),
            ],
            Store::new().with("x", Value::Int(0)),
        );
        let succ = p.successors(&s).unwrap();
        assert_eq!(names(&succ), ["c!5"]);
        assert_eq!(succ[0].1.store.int("x").unwrap(), 5);
        assert_eq!(names(&p.successors(&succ[0].1).unwrap()), ["got"]);
    }

    #[test]
    fn unmatched_send_blocks() {
        let p = Program::new();
        let s = KernelState::new(
            vec![Process::send("c", Expr::Const(1), Process::Skip)],
            Store::new(),
        );
        assert!(p.successors(&s).unwrap().is_empty());
    }

    #[test]
    fn guard_reads_store() {
        let p = Program::new();
        let g = Process::guard(
            parse::parse_expr("slotTT[0] > 0").unwrap(),
            Process::prefix("go", Process::Skip),
        );
        let open = KernelState::new(vec![g.clone()], Store::new().with("slotTT", Value::Array(vec![1])));
        let shut = KernelState::new(vec![g.clone()], Store::new().with("slotTT", Value::Array(vec![0])));
        assert_eq!(p.successors(&open).unwrap().len(), 1);
        assert!(p.successors(&shut).unwrap().is_empty());
        let unbound = KernelState::new(vec![g], Store::new());
        assert_eq!(
            p.successors(&unbound).unwrap_err(),
            KernelError::UnboundVariable("slotTT".into())
        );
    }

    #[test]
    fn prefix_updates_are_atomic_and_sequential() {
        let p = Program::new();
        let s = KernelState::new(
            vec![Process::prefix_with(
                EventLabel::plain("bump"),
                parse::parse_block("x = x + 1; y = x * 10").unwrap(),
                Process::Skip,
            )],
            Store::new().with("x", Value::Int(1)).with("y", Value::Int(0)),
        );
        let succ = p.successors(&s).unwrap();
        assert_eq!(succ[0].1.store.int("x").unwrap(), 2);
        assert_eq!(succ[0].1.store.int("y").unwrap(), 20);
    }

    #[test]
    fn calls_and_indexed_parallel() {
        let mut p = Program::new();
        p.define(
            "Act",
            &["i"],
            Process::prefix_with(
                EventLabel::indexed("act", vec![Expr::var("i")]),
                parse::parse_block("on[i] = 1").unwrap(),
                Process::Skip,
            ),
        );
        let s = KernelState::new(
            vec![Process::indexed_par(
                "i",
                Expr::Const(0),
                Expr::Const(2),
                Process::call("Act", vec![Expr::var("i")]),
            )],
            Store::new().with("on", Value::Array(vec![0, 0, 0])),
        );
        let succ = p.successors(&s).unwrap();
        assert_eq!(names(&succ), ["act.0", "act.1", "act.2"]);
        assert_eq!(succ[1].1.store.get("on"), Some(&Value::Array(vec![0, 1, 0])));
        assert_eq!(succ[1].1.active().len(), 2);
    }

    #[test]
    fn call_errors() {
        let mut p = Program::new();
        let s = KernelState::new(vec![Process::call("Nope", vec![])], Store::new());
        assert_eq!(p.successors(&s).unwrap_err(), KernelError::UndefinedProcess("Nope".into()));

        p.define("Loop", &[], Process::call("Loop", vec![]));
        let p = p.with_unfold_limit(100);
        let s = KernelState::new(vec![Process::call("Loop", vec![])], Store::new());
        assert_eq!(p.successors(&s).unwrap_err(), KernelError::RecursionLimit(100));
    }

    #[test]
    fn guarded_recursion_unfolds_lazily() {
        let mut p = Program::new();
        p.define("Tick", &[], Process::prefix("tick", Process::call("Tick", vec![])));
        let mut s = KernelState::new(vec![Process::call("Tick", vec![])], Store::new());
        for _ in 0..5 {
            let succ = p.successors(&s).unwrap();
            assert_eq!(names(&succ), ["tick"]);
            s = succ[0].1.clone();
        }
    }

    #[test]
    fn empty_indexed_range_is_an_error() {
        let p = Program::new();
        let s = KernelState::new(
            vec![Process::indexed_par("i", Expr::Const(1), Expr::Const(0), Process::Skip)],
            Store::new(),
        );
        assert_eq!(p.successors(&s).unwrap_err(), KernelError::EmptyRange(1, 0));
    }

    // ---- trace-set properties -------------------------------------------------

    /// Complete traces (event sequences ending in a state with no successors).
    fn traces(p: &Program, s: &KernelState) -> BTreeSet<Vec<String>> {
        let succ = p.successors(s).unwrap();
        if succ.is_empty() {
            return BTreeSet::from([Vec::new()]);
        }
        let mut out = BTreeSet::new();
        for (e, next) in succ {
            for mut t in traces(p, &next) {
                t.insert(0, e.to_string());
                out.insert(t);
            }
        }
        out
    }

    fn shuffle(a: &[String], b: &[String]) -> BTreeSet<Vec<String>> {
        if a.is_empty() || b.is_empty() {
            return BTreeSet::from([a.iter().chain(b).cloned().collect()]);
        }
        let mut out = BTreeSet::new();
        for mut t in shuffle(&a[1..], b) {
            t.insert(0, a[0].clone());
            out.insert(t);
        }
        for mut t in shuffle(a, &b[1..]) {
            t.insert(0, b[0].clone());
            out.insert(t);
        }
        out
    }

    /// A straight-line process over a private alphabet, built from prefixes and `;`.
    fn chain(prefix: &str, len: usize, split: usize) -> (Process, Vec<String>) {
        let evs: Vec<String> = (0..len).map(|k| format!("{prefix}{k}")).collect();
        let build = |evs: &[String]| {
            evs.iter()
                .rev()
                .fold(Process::Skip, |acc, e| Process::prefix(e.clone(), acc))
        };
        let split = split.min(len);
        (Process::seq(build(&evs[..split]), build(&evs[split..])), evs)
    }

    proptest! {
        #[test]
        fn interleaving_is_the_shuffle(la in 0usize..=2, lb in 0usize..=2, sa in 0usize..3, sb in 0usize..3) {
            let (pa, ea) = chain("a", la, sa);
            let (pb, eb) = chain("b", lb, sb);
            let prog = Program::new();
            let s = KernelState::new(vec![Process::par(pa, pb)], Store::new());
            prop_assert_eq!(traces(&prog, &s), shuffle(&ea, &eb));
        }

        #[test]
        fn successors_are_deterministic(la in 0usize..=3, lb in 0usize..=3) {
            let (pa, _) = chain("a", la, 1);
            let (pb, _) = chain("b", lb, 2);
            let prog = Program::new();
            let s = KernelState::new(vec![pa, pb], Store::new());
            prop_assert_eq!(prog.successors(&s).unwrap(), prog.successors(&s.clone()).unwrap());
        }

        #[test]
        fn stop_absorbs(n in 1usize..5) {
            let s = KernelState::new(vec![Process::Stop; n], Store::new());
            prop_assert!(Program::new().successors(&s).unwrap().is_empty());
            prop_assert!(!s.is_terminated());
        }
    }
}
