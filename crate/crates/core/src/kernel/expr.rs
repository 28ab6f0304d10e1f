//! Integer expressions over the shared-variable store.

use std::collections::BTreeMap;
use std::fmt;

use super::KernelError;

/// A store value. The scripts only ever need integers and integer arrays.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(i64),
    Array(Vec<i64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Const(i64),
    Var(String),
    Index(String, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn index(name: impl Into<String>, idx: Expr) -> Expr {
        Expr::Index(name.into(), Box::new(idx))
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Replaces free occurrences of `name` (as a scalar variable) by a constant.
    pub fn substitute(&self, name: &str, value: i64) -> Expr {
        match self {
            Expr::Var(v) if v == name => Expr::Const(value),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Index(a, i) => Expr::Index(a.clone(), Box::new(i.substitute(name, value))),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.substitute(name, value))),
            Expr::Binary(op, l, r) => Expr::Binary(
                *op,
                Box::new(l.substitute(name, value)),
                Box::new(r.substitute(name, value)),
            ),
        }
    }

    /// Names read by this expression, arrays included.
    pub fn free_names(&self, out: &mut Vec<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(v.clone()),
            Expr::Index(a, i) => {
                out.push(a.clone());
                i.free_names(out);
            }
            Expr::Unary(_, e) => e.free_names(out),
            Expr::Binary(_, l, r) => {
                l.free_names(out);
                r.free_names(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Index(a, i) => write!(f, "{a}[{i}]"),
            Expr::Unary(UnOp::Neg, e) => write!(f, "-({e})"),
            Expr::Unary(UnOp::Not, e) => write!(f, "!({e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
        }
    }
}

/// Assignment target: a scalar variable or one array cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Var(String),
    Index(String, Expr),
}

impl Target {
    pub fn substitute(&self, name: &str, value: i64) -> Target {
        match self {
            Target::Var(_) => self.clone(),
            Target::Index(a, i) => Target::Index(a.clone(), i.substitute(name, value)),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Var(v) => write!(f, "{v}"),
            Target::Index(a, i) => write!(f, "{a}[{i}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assign {
    pub target: Target,
    pub value: Expr,
}

impl Assign {
    pub fn new(target: Target, value: Expr) -> Self {
        Assign { target, value }
    }

    pub fn substitute(&self, name: &str, value: i64) -> Assign {
        Assign {
            target: self.target.substitute(name, value),
            value: self.value.substitute(name, value),
        }
    }
}

/// The shared-variable store. Ordered so that equal stores hash and compare equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Store {
    vars: BTreeMap<String, Value>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.vars.insert(name.into(), value);
        self
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Value) {
        self.vars.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.vars.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.vars.iter()
    }

    pub fn int(&self, name: &str) -> Result<i64, KernelError> {
        match self.vars.get(name) {
            Some(Value::Int(v)) => Ok(*v),
            Some(Value::Array(_)) => Err(KernelError::TypeMismatch(name.to_string())),
            None => Err(KernelError::UnboundVariable(name.to_string())),
        }
    }

    pub fn cell(&self, name: &str, idx: i64) -> Result<i64, KernelError> {
        match self.vars.get(name) {
            Some(Value::Array(a)) => usize::try_from(idx)
                .ok()
                .and_then(|i| a.get(i).copied())
                .ok_or_else(|| KernelError::IndexOutOfBounds(name.to_string(), idx)),
            Some(Value::Int(_)) => Err(KernelError::TypeMismatch(name.to_string())),
            None => Err(KernelError::UnboundVariable(name.to_string())),
        }
    }

    pub fn assign(&mut self, assign: &Assign) -> Result<(), KernelError> {
        let v = evaluate(&assign.value, self)?;
        match &assign.target {
            Target::Var(name) => match self.vars.get_mut(name) {
                Some(Value::Int(slot)) => *slot = v,
                Some(Value::Array(_)) => return Err(KernelError::TypeMismatch(name.clone())),
                None => return Err(KernelError::UnboundVariable(name.clone())),
            },
            Target::Index(name, idx) => {
                let i = evaluate(idx, self)?;
                match self.vars.get_mut(name) {
                    Some(Value::Array(a)) => {
                        let slot = usize::try_from(i)
                            .ok()
                            .and_then(|i| a.get_mut(i))
                            .ok_or_else(|| KernelError::IndexOutOfBounds(name.clone(), i))?;
                        *slot = v;
                    }
                    Some(Value::Int(_)) => return Err(KernelError::TypeMismatch(name.clone())),
                    None => return Err(KernelError::UnboundVariable(name.clone())),
                }
            }
        }
        Ok(())
    }
}

/// Evaluates an expression; comparisons and logical operators yield 0 or 1.
pub fn evaluate(expr: &Expr, store: &Store) -> Result<i64, KernelError> {
    Ok(match expr {
        Expr::Const(c) => *c,
        Expr::Var(v) => store.int(v)?,
        Expr::Index(a, i) => {
            let idx = evaluate(i, store)?;
            store.cell(a, idx)?
        }
        Expr::Unary(UnOp::Neg, e) => evaluate(e, store)?.wrapping_neg(),
        Expr::Unary(UnOp::Not, e) => (evaluate(e, store)? == 0) as i64,
        Expr::Binary(BinOp::And, l, r) => {
            (evaluate(l, store)? != 0 && evaluate(r, store)? != 0) as i64
        }
        Expr::Binary(BinOp::Or, l, r) => {
            (evaluate(l, store)? != 0 || evaluate(r, store)? != 0) as i64
        }
        Expr::Binary(op, l, r) => {
            let a = evaluate(l, store)?;
            let b = evaluate(r, store)?;
            match op {
                BinOp::Add => a.wrapping_add(b),
                BinOp::Sub => a.wrapping_sub(b),
                BinOp::Mul => a.wrapping_mul(b),
                BinOp::Div => a.checked_div(b).ok_or(KernelError::DivisionByZero)?,
                BinOp::Mod => a.checked_rem(b).ok_or(KernelError::DivisionByZero)?,
                BinOp::Eq => (a == b) as i64,
                BinOp::Ne => (a != b) as i64,
                BinOp::Lt => (a < b) as i64,
                BinOp::Le => (a <= b) as i64,
                BinOp::Gt => (a > b) as i64,
                BinOp::Ge => (a >= b) as i64,
                BinOp::And | BinOp::Or => unreachable!(),
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::parse::parse_expr;

    fn eval_str(src: &str, store: &Store) -> Result<i64, KernelError> {
        evaluate(&parse_expr(src).unwrap(), store)
    }

    #[test]
    fn free_slot_check() {
        let store = Store::new().with("slotTT", Value::Array(vec![2, 0]));
        assert_eq!(eval_str("slotTT[0] > 0", &store).unwrap(), 1);
        assert_eq!(eval_str("slotTT[1] > 0", &store).unwrap(), 0);
    }

    #[test]
    fn reduce_gate_expression() {
        let store = Store::new()
            .with("FinishedMap", Value::Array(vec![0, 3]))
            .with("Map", Value::Array(vec![1, 3]));
        assert_eq!(eval_str("FinishedMap[1] == Map[1]", &store).unwrap(), 1);
        assert_eq!(eval_str("FinishedMap[0] == Map[0]", &store).unwrap(), 0);
    }

    #[test]
    fn queue_scan_bound() {
        let store = Store::new()
            .with("index", Value::Int(7))
            .with("maxqueue", Value::Int(7));
        assert_eq!(eval_str("index < maxqueue", &store).unwrap(), 0);
    }

    #[test]
    fn unbound_names_are_reported() {
        let store = Store::new();
        assert_eq!(
            eval_str("found == 0", &store),
            Err(KernelError::UnboundVariable("found".into()))
        );
        assert_eq!(
            eval_str("slotTT[0]", &store),
            Err(KernelError::UnboundVariable("slotTT".into()))
        );
    }

    #[test]
    fn index_errors() {
        let store = Store::new()
            .with("a", Value::Array(vec![1]))
            .with("x", Value::Int(0));
        assert_eq!(
            eval_str("a[3]", &store),
            Err(KernelError::IndexOutOfBounds("a".into(), 3))
        );
        assert_eq!(eval_str("x[0]", &store), Err(KernelError::TypeMismatch("x".into())));
        assert_eq!(eval_str("1 / (x)", &store), Err(KernelError::DivisionByZero));
    }

    #[test]
    fn assignments_apply_in_place() {
        let mut store = Store::new()
            .with("TaskTracker", Value::Array(vec![0, 0]))
            .with("trackercount", Value::Int(0));
        store
            .assign(&Assign::new(
                Target::Index("TaskTracker".into(), Expr::Const(1)),
                Expr::Const(1),
            ))
            .unwrap();
        store
            .assign(&Assign::new(
                Target::Var("trackercount".into()),
                Expr::bin(BinOp::Add, Expr::var("trackercount"), Expr::Const(1)),
            ))
            .unwrap();
        assert_eq!(store.get("TaskTracker"), Some(&Value::Array(vec![0, 1])));
        assert_eq!(store.int("trackercount").unwrap(), 1);
    }
}
