//! Text syntax for guards and atomic update blocks, e.g.
//! `TaskTracker[i] == OFF && JobTracker == ON` and `TaskTracker[i] = ON; trackercount++`.

use super::expr::{Assign, BinOp, Expr, Target, UnOp};
use super::KernelError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Op(&'static str),
}

const OPS: &[&str] = &[
    "==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "<", ">", "+", "-", "*", "/", "%",
    "!", "(", ")", "[", "]", "=", ";",
];

fn tokenize(src: &str) -> Result<Vec<Tok>, KernelError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i]
                .parse()
                .map_err(|_| KernelError::Parse(format!("integer literal out of range: {}", &src[start..i])))?;
            out.push(Tok::Int(n));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Tok::Ident(src[start..i].to_string()));
            continue;
        }
        for op in OPS {
            if src[i..].starts_with(op) {
                out.push(Tok::Op(op));
                i += op.len();
                continue 'outer;
            }
        }
        return Err(KernelError::Parse(format!(
            "unexpected character {:?} at offset {i}",
            c as char
        )));
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn eat(&mut self, op: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Op(o)) if *o == op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), KernelError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(KernelError::Parse(format!(
                "expected `{op}`, found {:?}",
                self.peek()
            )))
        }
    }

    fn expr(&mut self) -> Result<Expr, KernelError> {
        let mut lhs = self.and()?;
        while self.eat("||") {
            lhs = Expr::bin(BinOp::Or, lhs, self.and()?);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, KernelError> {
        let mut lhs = self.cmp()?;
        while self.eat("&&") {
            lhs = Expr::bin(BinOp::And, lhs, self.cmp()?);
        }
        Ok(lhs)
    }

    fn cmp(&mut self) -> Result<Expr, KernelError> {
        let lhs = self.add()?;
        let op = match self.peek() {
            Some(Tok::Op("==")) => BinOp::Eq,
            Some(Tok::Op("!=")) => BinOp::Ne,
            Some(Tok::Op("<")) => BinOp::Lt,
            Some(Tok::Op("<=")) => BinOp::Le,
            Some(Tok::Op(">")) => BinOp::Gt,
            Some(Tok::Op(">=")) => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.pos += 1;
        Ok(Expr::bin(op, lhs, self.add()?))
    }

    fn add(&mut self) -> Result<Expr, KernelError> {
        let mut lhs = self.mul()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op("+")) => BinOp::Add,
                Some(Tok::Op("-")) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.mul()?);
        }
    }

    fn mul(&mut self) -> Result<Expr, KernelError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Op("*")) => BinOp::Mul,
                Some(Tok::Op("/")) => BinOp::Div,
                Some(Tok::Op("%")) => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            lhs = Expr::bin(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> Result<Expr, KernelError> {
        if self.eat("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, KernelError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(Expr::Const(n))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat("[") {
                    let idx = self.expr()?;
                    self.expect("]")?;
                    Ok(Expr::index(name, idx))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Op("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            other => Err(KernelError::Parse(format!("unexpected token {other:?}"))),
        }
    }

    fn target(&mut self) -> Result<Target, KernelError> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat("[") {
                    let idx = self.expr()?;
                    self.expect("]")?;
                    Ok(Target::Index(name, idx))
                } else {
                    Ok(Target::Var(name))
                }
            }
            other => Err(KernelError::Parse(format!(
                "expected assignment target, found {other:?}"
            ))),
        }
    }

    fn statement(&mut self) -> Result<Assign, KernelError> {
        let target = self.target()?;
        let current = match &target {
            Target::Var(v) => Expr::Var(v.clone()),
            Target::Index(a, i) => Expr::index(a.clone(), i.clone()),
        };
        let value = if self.eat("++") {
            Expr::bin(BinOp::Add, current, Expr::Const(1))
        } else if self.eat("--") {
            Expr::bin(BinOp::Sub, current, Expr::Const(1))
        } else if self.eat("+=") {
            Expr::bin(BinOp::Add, current, self.expr()?)
        } else if self.eat("-=") {
            Expr::bin(BinOp::Sub, current, self.expr()?)
        } else {
            self.expect("=")?;
            self.expr()?
        };
        Ok(Assign::new(target, value))
    }

    fn finish(&self) -> Result<(), KernelError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(KernelError::Parse(format!("trailing input at {t:?}"))),
        }
    }
}

pub fn parse_expr(src: &str) -> Result<Expr, KernelError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let e = p.expr()?;
    p.finish()?;
    Ok(e)
}

/// Parses a `;`-separated block of assignments. A trailing `;` is allowed.
pub fn parse_block(src: &str) -> Result<Vec<Assign>, KernelError> {
    let mut p = Parser { toks: tokenize(src)?, pos: 0 };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.statement()?);
        if !p.eat(";") {
            break;
        }
    }
    p.finish()?;
    Ok(out)
}
