//! A small arithmetic language for function programs.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := rational | 'x' INT | 'sum()' | fn '(' expr (',' expr)* ')'
//!         | '(' expr ')' | '-' factor
//! fn     := min | max | abs | floor | clip
//! ```
//!
//! Rational literals are integers, `p/q` or finite decimals.

use std::fmt;

use super::{FunctionOracle, LookupCounter, Value};
use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Floor,
    Clip,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Min => "min",
            Func::Max => "max",
            Func::Abs => "abs",
            Func::Floor => "floor",
            Func::Clip => "clip",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "min" => Func::Min,
            "max" => Func::Max,
            "abs" => Func::Abs,
            "floor" => Func::Floor,
            "clip" => Func::Clip,
            _ => return None,
        })
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Min | Func::Max => n >= 1,
            Func::Abs | Func::Floor => n == 1,
            Func::Clip => n == 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Lit(Rational),
    /// 1-based coordinate index.
    Coord(usize),
    Sum,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

impl Expr {
    pub fn eval(&self, coords: &[u64]) -> Rational {
        match self {
            Expr::Lit(q) => q.clone(),
            Expr::Coord(i) => Rational::from_integer(coords[i - 1] as i64),
            Expr::Sum => Rational::from_integer(coords.iter().sum::<u64>() as i64),
            Expr::Neg(e) => -e.eval(coords),
            Expr::Add(a, b) => a.eval(coords) + b.eval(coords),
            Expr::Sub(a, b) => a.eval(coords) - b.eval(coords),
            Expr::Mul(a, b) => a.eval(coords) * b.eval(coords),
            Expr::Call(func, args) => {
                let mut vals = args.iter().map(|a| a.eval(coords));
                match func {
                    Func::Min => vals.reduce(Rational::min).expect("arity checked"),
                    Func::Max => vals.reduce(Rational::max).expect("arity checked"),
                    Func::Abs => vals.next().expect("arity checked").abs(),
                    Func::Floor => vals.next().expect("arity checked").floor(),
                    Func::Clip => {
                        let (v, lo, hi) = (vals.next().unwrap(), vals.next().unwrap(), vals.next().unwrap());
                        v.max(lo).min(hi)
                    }
                }
            }
        }
    }

    /// Coordinates referenced (1-based, sorted), or `None` if `sum()` appears.
    pub fn coordinates(&self) -> Option<Vec<usize>> {
        let mut out = Vec::new();
        if self.collect_coords(&mut out) {
            out.sort_unstable();
            out.dedup();
            Some(out)
        } else {
            None
        }
    }

    fn collect_coords(&self, out: &mut Vec<usize>) -> bool {
        match self {
            Expr::Lit(_) => true,
            Expr::Coord(i) => {
                out.push(*i);
                true
            }
            Expr::Sum => false,
            Expr::Neg(e) => e.collect_coords(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => a.collect_coords(out) && b.collect_coords(out),
            Expr::Call(_, args) => args.iter().all(|a| a.collect_coords(out)),
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let (prec, open) = match self {
            Expr::Add(..) | Expr::Sub(..) => (1, min_prec > 1),
            Expr::Mul(..) => (2, min_prec > 2),
            _ => (3, false),
        };
        if open {
            f.write_str("(")?;
        }
        match self {
            Expr::Lit(q) => write!(f, "{q}")?,
            Expr::Coord(i) => write!(f, "x{i}")?,
            Expr::Sum => f.write_str("sum()")?,
            Expr::Neg(e) => {
                f.write_str("-")?;
                // `-3` would read back as a negative literal
                if matches!(**e, Expr::Lit(ref q) if !q.is_negative()) {
                    write!(f, "({e})")?;
                } else {
                    e.write(f, 3)?;
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.write(f, prec)?;
                f.write_str(if matches!(self, Expr::Add(..)) { " + " } else { " - " })?;
                b.write(f, prec + 1)?;
            }
            Expr::Mul(a, b) => {
                a.write(f, prec)?;
                f.write_str(" * ")?;
                b.write(f, prec + 1)?;
            }
            Expr::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    a.write(f, 1)?;
                }
                f.write_str(")")?;
            }
        }
        if open {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, 1)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    d: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected '{}'", c as char))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn digits(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits")
    }

    fn number(&mut self, negative: bool) -> Result<Expr> {
        let start = self.pos;
        self.digits();
        if self.src.get(self.pos) == Some(&b'.') || self.src.get(self.pos) == Some(&b'/') {
            let sep = self.pos;
            self.pos += 1;
            if self.digits().is_empty() {
                self.pos = sep;
                return self.err("malformed number");
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        let q: Rational = text.parse().map_err(|_| Error::Parse { pos: start, msg: "malformed number".into() })?;
        Ok(Expr::Lit(if negative { -q } else { q }))
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.number(true)
                } else {
                    Ok(Expr::Neg(Box::new(self.factor()?)))
                }
            }
            Some(c) if c.is_ascii_digit() => self.number(false),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
                if word == "x" {
                    let at = self.pos;
                    let idx = self.digits();
                    if idx.is_empty() {
                        return self.err("expected coordinate index after 'x'");
                    }
                    let index: usize = idx.parse().map_err(|_| Error::Parse { pos: at, msg: "index too large".into() })?;
                    if index == 0 || index > self.d {
                        return Err(Error::Dimension { index, dim: self.d });
                    }
                    return Ok(Expr::Coord(index));
                }
                if word == "sum" {
                    self.expect(b'(')?;
                    self.expect(b')')?;
                    return Ok(Expr::Sum);
                }
                let Some(func) = Func::from_name(word) else {
                    self.pos = start;
                    return self.err(format!("unknown identifier '{word}'"));
                };
                self.expect(b'(')?;
                let mut args = vec![self.expr()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                self.expect(b')')?;
                if !func.arity_ok(args.len()) {
                    self.pos = start;
                    return self.err(format!("wrong number of arguments to {}", func.name()));
                }
                Ok(Expr::Call(func, args))
            }
            Some(c) => self.err(format!("unexpected '{}'", c as char)),
        }
    }
}

/// Parses a program over coordinates `x1..xd`.
pub fn parse_expr(text: &str, d: usize) -> Result<Expr> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, d };
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

/// A program evaluated on the coordinates of each queried vertex.
pub struct ExprFunction {
    expr: Expr,
    graph: Graph,
    bounds: Option<(Rational, Rational)>,
    counter: LookupCounter,
}

impl ExprFunction {
    pub fn new(expr: Expr, graph: &Graph, bounds: Option<(Rational, Rational)>) -> Result<Self> {
        let d = graph
            .dim()
            .ok_or_else(|| Error::InvalidParam("expressions need a hypergrid or hypercube".into()))?;
        if let Some(coords) = expr.coordinates() {
            if let Some(&index) = coords.iter().find(|&&i| i > d) {
                return Err(Error::Dimension { index, dim: d });
            }
        }
        Ok(Self { expr, graph: graph.clone(), bounds, counter: LookupCounter::default() })
    }

    pub fn parse(text: &str, graph: &Graph, bounds: Option<(Rational, Rational)>) -> Result<Self> {
        let d = graph.dim().unwrap_or(0);
        Self::new(parse_expr(text, d)?, graph, bounds)
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }
}

impl FunctionOracle for ExprFunction {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        let coords = self.graph.coords(x)?;
        self.counter.tick();
        Ok(Value::Defined(self.expr.eval(&coords)))
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        self.bounds.clone()
    }

    fn lookups(&self) -> u64 {
        self.counter.get()
    }

    fn support(&self) -> Option<Vec<usize>> {
        self.expr.coordinates().map(|c| c.into_iter().map(|i| i - 1).collect())
    }
}
