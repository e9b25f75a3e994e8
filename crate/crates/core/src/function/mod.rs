//! Lookup access to (possibly partial) functions on graph vertices.

mod expr;
mod table;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::rational::Rational;

pub use expr::{parse_expr, Expr, ExprFunction, Func};
pub use table::{DomainSpec, TableFile, TableFunction};

/// A function value: a rational or the undefined marker `?`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Defined(Rational),
    Undefined,
}

impl Value {
    pub fn defined(&self) -> Option<&Rational> {
        match self {
            Value::Defined(q) => Some(q),
            Value::Undefined => None,
        }
    }

    pub fn is_undefined(&self) -> bool {
        matches!(self, Value::Undefined)
    }

    /// The value, or `PartialFunction` naming `what`.
    pub fn expect_defined(self, what: impl FnOnce() -> String) -> Result<Rational> {
        match self {
            Value::Defined(q) => Ok(q),
            Value::Undefined => Err(Error::PartialFunction(what())),
        }
    }
}

impl From<Rational> for Value {
    fn from(q: Rational) -> Self {
        Value::Defined(q)
    }
}

impl From<i64> for Value {
    fn from(n: i64) -> Self {
        Value::Defined(Rational::from_integer(n))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Defined(q) => q.fmt(f),
            Value::Undefined => f.write_str("?"),
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Value {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "?" {
            Ok(Value::Undefined)
        } else {
            s.parse().map(Value::Defined)
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Thread-safe lookup counter.
#[derive(Debug, Default)]
pub struct LookupCounter(AtomicU64);

impl LookupCounter {
    pub fn tick(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

pub trait FunctionOracle: Send + Sync {
    /// One counted lookup without range enforcement.
    fn lookup_raw(&self, x: Vertex) -> Result<Value>;

    /// Declared range `[lo, hi]`, `None` if unbounded.
    fn bounds(&self) -> Option<(Rational, Rational)>;

    fn lookups(&self) -> u64;

    /// Coordinates the function depends on, when it is known to ignore the rest.
    fn support(&self) -> Option<Vec<usize>> {
        None
    }

    /// One counted lookup; a defined value outside the declared range is an error.
    fn lookup(&self, x: Vertex) -> Result<Value> {
        let value = self.lookup_raw(x)?;
        if let (Value::Defined(q), Some((lo, hi))) = (&value, self.bounds()) {
            if *q < lo || *q > hi {
                return Err(Error::RangeViolation {
                    value: q.to_string(),
                    lo: lo.to_string(),
                    hi: hi.to_string(),
                });
            }
        }
        Ok(value)
    }

    fn range_diameter(&self) -> Option<Rational> {
        self.bounds().map(|(lo, hi)| &hi - &lo)
    }
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for &T {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        (**self).lookup_raw(x)
    }
    fn bounds(&self) -> Option<(Rational, Rational)> {
        (**self).bounds()
    }
    fn lookups(&self) -> u64 {
        (**self).lookups()
    }
    fn support(&self) -> Option<Vec<usize>> {
        (**self).support()
    }
    fn lookup(&self, x: Vertex) -> Result<Value> {
        (**self).lookup(x)
    }
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for Arc<T> {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        (**self).lookup_raw(x)
    }
    fn bounds(&self) -> Option<(Rational, Rational)> {
        (**self).bounds()
    }
    fn lookups(&self) -> u64 {
        (**self).lookups()
    }
    fn support(&self) -> Option<Vec<usize>> {
        (**self).support()
    }
    fn lookup(&self, x: Vertex) -> Result<Value> {
        (**self).lookup(x)
    }
}

impl<T: FunctionOracle + ?Sized> FunctionOracle for Box<T> {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        (**self).lookup_raw(x)
    }
    fn bounds(&self) -> Option<(Rational, Rational)> {
        (**self).bounds()
    }
    fn lookups(&self) -> u64 {
        (**self).lookups()
    }
    fn support(&self) -> Option<Vec<usize>> {
        (**self).support()
    }
    fn lookup(&self, x: Vertex) -> Result<Value> {
        (**self).lookup(x)
    }
}

fn check_interval(lo: &Rational, hi: &Rational) -> Result<()> {
    if lo > hi {
        Err(Error::InvalidInterval { lo: lo.to_string(), hi: hi.to_string() })
    } else {
        Ok(())
    }
}

/// `f[lo, hi]`: values truncated into `[lo, hi]`, `?` kept.
///
/// The inner function is read raw, so the clipped oracle never reports a
/// range violation whatever the inner source returns.
pub struct Clip<F> {
    inner: F,
    lo: Rational,
    hi: Rational,
    counter: LookupCounter,
}

impl<F: FunctionOracle> Clip<F> {
    pub fn new(inner: F, lo: Rational, hi: Rational) -> Result<Self> {
        check_interval(&lo, &hi)?;
        Ok(Self { inner, lo, hi, counter: LookupCounter::default() })
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: FunctionOracle> FunctionOracle for Clip<F> {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        self.counter.tick();
        Ok(match self.inner.lookup_raw(x)? {
            Value::Defined(q) if q < self.lo => Value::Defined(self.lo.clone()),
            Value::Defined(q) if q > self.hi => Value::Defined(self.hi.clone()),
            v => v,
        })
    }

    /// `[lo, hi]` narrowed to the inner range when the inner range is known.
    fn bounds(&self) -> Option<(Rational, Rational)> {
        match self.inner.bounds() {
            None => Some((self.lo.clone(), self.hi.clone())),
            Some((ilo, ihi)) => {
                let lo = self.lo.clone().max(ilo.min(self.hi.clone()));
                let hi = self.hi.clone().min(ihi.max(self.lo.clone()));
                Some((lo, hi))
            }
        }
    }

    fn lookups(&self) -> u64 {
        self.counter.get()
    }

    fn support(&self) -> Option<Vec<usize>> {
        self.inner.support()
    }
}

/// `f_I`: `f(x)` where `f(x) ∈ [lo, hi]`, `?` elsewhere.
pub struct Restrict<F> {
    inner: F,
    lo: Rational,
    hi: Rational,
    counter: LookupCounter,
}

impl<F: FunctionOracle> Restrict<F> {
    pub fn new(inner: F, lo: Rational, hi: Rational) -> Result<Self> {
        check_interval(&lo, &hi)?;
        Ok(Self { inner, lo, hi, counter: LookupCounter::default() })
    }

    pub fn interval(&self) -> (&Rational, &Rational) {
        (&self.lo, &self.hi)
    }
}

impl<F: FunctionOracle> FunctionOracle for Restrict<F> {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        self.counter.tick();
        Ok(match self.inner.lookup(x)? {
            Value::Defined(q) if q >= self.lo && q <= self.hi => Value::Defined(q),
            _ => Value::Undefined,
        })
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        match self.inner.bounds() {
            None => Some((self.lo.clone(), self.hi.clone())),
            Some((ilo, ihi)) => {
                let lo = self.lo.clone().max(ilo);
                let hi = self.hi.clone().min(ihi);
                // an empty intersection leaves an everywhere-undefined function
                if lo > hi {
                    Some((self.lo.clone(), self.hi.clone()))
                } else {
                    Some((lo, hi))
                }
            }
        }
    }

    fn lookups(&self) -> u64 {
        self.counter.get()
    }

    fn support(&self) -> Option<Vec<usize>> {
        self.inner.support()
    }
}

/// A function given by a closure over vertices.
pub struct FnOracle<F> {
    f: F,
    num_vertices: u64,
    bounds: Option<(Rational, Rational)>,
    support: Option<Vec<usize>>,
    counter: LookupCounter,
}

impl<F: Fn(Vertex) -> Value + Send + Sync> FnOracle<F> {
    pub fn new(g: &Graph, bounds: Option<(Rational, Rational)>, f: F) -> Self {
        Self { f, num_vertices: g.num_vertices(), bounds, support: None, counter: LookupCounter::default() }
    }

    pub fn with_support(mut self, support: Vec<usize>) -> Self {
        self.support = Some(support);
        self
    }
}

impl<F: Fn(Vertex) -> Value + Send + Sync> FunctionOracle for FnOracle<F> {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        if x.0 >= self.num_vertices {
            return Err(Error::OutOfDomain(format!("{x:?}")));
        }
        self.counter.tick();
        Ok((self.f)(x))
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        self.bounds.clone()
    }

    fn lookups(&self) -> u64 {
        self.counter.get()
    }

    fn support(&self) -> Option<Vec<usize>> {
        self.support.clone()
    }
}

/// Reads every vertex once (counted).
pub fn materialize(g: &Graph, f: &dyn FunctionOracle) -> Result<Vec<Value>> {
    g.vertices().map(|v| f.lookup(v)).collect()
}

/// Reads every vertex once and fails on `?`.
pub fn materialize_total(g: &Graph, f: &dyn FunctionOracle) -> Result<Vec<Rational>> {
    g.vertices()
        .map(|v| f.lookup(v)?.expect_defined(|| g.encode(v)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    fn constant(g: &Graph, c: i64) -> FnOracle<impl Fn(Vertex) -> Value + Send + Sync> {
        FnOracle::new(g, None, move |_| Value::from(c))
    }

    #[test]
    fn clip_examples() {
        let g = Graph::hypercube(1).unwrap();
        for (value, want) in [(5, 3), (-1, 0), (2, 2)] {
            let f = Clip::new(constant(&g, value), q(0), q(3)).unwrap();
            assert_eq!(f.lookup(Vertex(0)).unwrap(), Value::from(want));
        }
        assert!(matches!(
            Clip::new(constant(&g, 0), q(3), q(0)),
            Err(Error::InvalidInterval { .. })
        ));
    }

    #[test]
    fn clip_bounds_narrow_to_inner_range() {
        let g = Graph::hypercube(1).unwrap();
        let f = FnOracle::new(&g, Some((q(0), q(4))), |_| Value::from(1));
        assert_eq!(Clip::new(&f, q(-2), q(2)).unwrap().bounds(), Some((q(0), q(2))));
        assert_eq!(Clip::new(&f, q(6), q(9)).unwrap().bounds(), Some((q(6), q(6))));
        assert_eq!(Clip::new(&f, q(-9), q(-6)).unwrap().bounds(), Some((q(-6), q(-6))));
    }

    #[test]
    fn restrict_examples() {
        let g = Graph::hypercube(1).unwrap();
        let r = Restrict::new(constant(&g, 7), q(0), q(3)).unwrap();
        assert_eq!(r.lookup(Vertex(0)).unwrap(), Value::Undefined);
        let r = Restrict::new(constant(&g, 2), q(0), q(3)).unwrap();
        assert_eq!(r.lookup(Vertex(0)).unwrap(), Value::from(2));
        let undefined = FnOracle::new(&g, None, |_| Value::Undefined);
        let r = Restrict::new(&undefined, q(0), q(3)).unwrap();
        assert_eq!(r.lookup(Vertex(1)).unwrap(), Value::Undefined);
    }

    #[test]
    fn counters_propagate() {
        let g = Graph::hypercube(2).unwrap();
        let f = constant(&g, 1);
        let c = Clip::new(&f, q(0), q(3)).unwrap();
        for i in 0..4 {
            c.lookup(Vertex(i)).unwrap();
        }
        c.lookup(Vertex(0)).unwrap();
        assert_eq!(c.lookups(), 5);
        assert_eq!(f.lookups(), 5);
        assert!(f.lookup(Vertex(4)).is_err());
    }

    #[test]
    fn range_violation_is_reported() {
        let g = Graph::hypercube(1).unwrap();
        let f = FnOracle::new(&g, Some((q(0), q(3))), |v| Value::from(if v.0 == 0 { 1 } else { 4 }));
        assert!(f.lookup(Vertex(0)).is_ok());
        assert!(matches!(f.lookup(Vertex(1)), Err(Error::RangeViolation { .. })));
        assert_eq!(f.lookup_raw(Vertex(1)).unwrap(), Value::from(4));
    }

    #[test]
    fn value_text() {
        assert_eq!("?".parse::<Value>().unwrap(), Value::Undefined);
        assert_eq!("3/6".parse::<Value>().unwrap(), Value::Defined(Rational::new(1, 2)));
        assert_eq!(serde_json::to_string(&Value::Defined(Rational::new(-3, 4))).unwrap(), "\"-3/4\"");
    }

    fn table_strategy() -> impl Strategy<Value = (usize, Vec<i64>)> {
        (1usize..=4).prop_flat_map(|d| (Just(d), proptest::collection::vec(-3i64..8, 1 << d)))
    }

    proptest! {
        #[test]
        fn clip_is_idempotent((d, values) in table_strategy(), lo in -2i64..3, width in 0i64..5) {
            let g = Graph::hypercube(d).unwrap();
            let f = FnOracle::new(&g, None, |v| Value::from(values[v.0 as usize]));
            let once = Clip::new(&f, q(lo), q(lo + width)).unwrap();
            let twice = Clip::new(&once, q(lo), q(lo + width)).unwrap();
            for v in g.vertices() {
                prop_assert_eq!(once.lookup(v).unwrap(), twice.lookup(v).unwrap());
            }
        }

        #[test]
        fn clip_preserves_lipschitz(d in 1usize..=5, start in -3i64..3, steps in proptest::collection::vec(-1i64..=1, 5), lo in -2i64..3, width in 0i64..4) {
            // a linear function with coefficients in {-1,0,1} is 1-Lipschitz on the cube
            let g = Graph::hypercube(d).unwrap();
            let coef = steps.clone();
            let f = FnOracle::new(&g, None, move |v| {
                let coords = (0..d).map(|i| (v.0 >> (d - 1 - i)) & 1);
                Value::from(start + coords.zip(&coef).map(|(c, k)| c as i64 * k).sum::<i64>())
            });
            prop_assert!(crate::graph::is_c_lipschitz(&g, &f, &Rational::one()).unwrap());
            let clipped = Clip::new(&f, q(lo), q(lo + width)).unwrap();
            prop_assert!(crate::graph::is_c_lipschitz(&g, &clipped, &Rational::one()).unwrap());
        }

        #[test]
        fn restrict_agrees_with_clip((d, values) in table_strategy(), lo in -2i64..3, width in 0i64..5) {
            let g = Graph::hypercube(d).unwrap();
            let f = FnOracle::new(&g, None, |v| Value::from(values[v.0 as usize]));
            let restricted = Restrict::new(&f, q(lo), q(lo + width)).unwrap();
            let clipped = Clip::new(&f, q(lo), q(lo + width)).unwrap();
            for v in g.vertices() {
                if let Value::Defined(x) = restricted.lookup(v).unwrap() {
                    prop_assert_eq!(Value::Defined(x), clipped.lookup(v).unwrap());
                }
            }
        }

        #[test]
        fn counter_is_exact(k in 0usize..200) {
            let g = Graph::hypergrid(3, 2).unwrap();
            let f = constant(&g, 0);
            for i in 0..k {
                f.lookup(Vertex((i % 9) as u64)).unwrap();
            }
            prop_assert_eq!(f.lookups(), k as u64);
        }
    }
}
