//! Tolerant Lipschitz testing on the hypercube.
//!
//! One run picks a pivot `p`, restricts `f` to `I = [f(p) - t, f(p) + t]`,
//! runs the ℓ0 filter on the restriction and counts sampled points where the
//! filter output disagrees with `f` (a `?` always disagrees).

use rand::Rng;

use crate::error::{Error, Result};
use crate::filter_l0::LocalFilter0;
use crate::filter_l1::Budgets;
use crate::function::{materialize, FunctionOracle, Restrict, Value};
use crate::graph::{Graph, Vertex};
use crate::oracles::canonical_cover;
use crate::rational::Rational;
use crate::seed::Seed;

/// Base of the logarithm in the interval half-width.
pub const LOG_BASE: f64 = 2.0;

/// Accept when the disagreement rate is below `ACCEPT_FACTOR · ε`.
pub const ACCEPT_FACTOR: f64 = 2.005;

pub const DEFAULT_REPS: usize = 9;

#[derive(Clone, Debug, PartialEq)]
pub struct TesterParams {
    pub eps: f64,
    /// `t = 2 √(d log(d/ε))`.
    pub half_width: Rational,
    pub samples: u64,
    pub reps: usize,
    pub budgets: Budgets,
}

/// `2 √(d log(d/ε))`.
pub fn half_width(d: usize, eps: f64) -> f64 {
    2.0 * (d as f64 * (d as f64 / eps).log(LOG_BASE)).sqrt()
}

impl TesterParams {
    /// Defaults: `(1500/ε)²` samples and 9 repetitions.
    pub fn new(d: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0 / 3.0) {
            return Err(Error::InvalidParam(format!("epsilon must lie in (0, 1/3), got {eps}")));
        }
        if d < 4 {
            return Err(Error::InvalidParam(format!("the tester needs d >= 4, got {d}")));
        }
        let half_width = Rational::from_f64(half_width(d, eps))
            .ok_or_else(|| Error::InvalidParam("interval half-width is not finite".into()))?;
        let samples = (1500.0 / eps).powi(2).ceil() as u64;
        Ok(Self { eps, half_width, samples, reps: DEFAULT_REPS, budgets: Budgets::default() })
    }

    pub fn with_samples(mut self, samples: u64) -> Result<Self> {
        if samples == 0 {
            return Err(Error::InvalidParam("at least one sample is needed".into()));
        }
        self.samples = samples;
        Ok(self)
    }

    pub fn with_reps(mut self, reps: usize) -> Result<Self> {
        if reps % 2 == 0 {
            return Err(Error::InvalidParam(format!("repetitions must be odd, got {reps}")));
        }
        self.reps = reps;
        Ok(self)
    }

    pub fn with_budgets(mut self, budgets: Budgets) -> Self {
        self.budgets = budgets;
        self
    }

    pub fn threshold(&self) -> f64 {
        ACCEPT_FACTOR * self.eps
    }

    /// `I` around the value `fp` of the pivot.
    pub fn interval(&self, fp: &Rational) -> (Rational, Rational) {
        (fp - &self.half_width, fp + &self.half_width)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub accept: bool,
    pub pivot: Vertex,
    pub interval: (Rational, Rational),
    pub disagreements: u64,
    pub samples: u64,
    pub omega_hat: f64,
    pub lookups: u64,
    /// Set when the filter gave up; such a run votes reject.
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub accept: bool,
    pub runs: Vec<RunReport>,
}

impl TestReport {
    pub fn accepts(&self) -> usize {
        self.runs.iter().filter(|r| r.accept).count()
    }

    pub fn lookups(&self) -> u64 {
        self.runs.iter().map(|r| r.lookups).sum()
    }
}

pub fn majority(votes: &[bool]) -> bool {
    2 * votes.iter().filter(|v| **v).count() > votes.len()
}

fn check_cube(g: &Graph) -> Result<u64> {
    match g {
        Graph::Hypercube { .. } => Ok(g.num_vertices()),
        _ => Err(Error::InvalidParam("the tester runs on hypercubes".into())),
    }
}

fn value_at(f: &dyn FunctionOracle, x: Vertex) -> Result<Rational> {
    f.lookup(x)?.expect_defined(|| format!("{x:?}"))
}

/// The filter output `y` for the restriction of `f` around `pivot`.
pub struct RestrictedFilter<'a> {
    filter: LocalFilter0<'a>,
    pub interval: (Rational, Rational),
}

impl<'a> RestrictedFilter<'a> {
    pub fn new(g: &'a Graph, f: &'a dyn FunctionOracle, params: &TesterParams, pivot: Vertex, seed: &Seed) -> Result<Self> {
        let interval = params.interval(&value_at(f, pivot)?);
        let restricted = Restrict::new(f, interval.0.clone(), interval.1.clone())?;
        let filter = LocalFilter0::new(g, restricted, seed, params.budgets)?;
        Ok(Self { filter, interval })
    }

    pub fn query(&self, x: Vertex) -> Result<Value> {
        self.filter.query(x)
    }
}

/// One run with `params.samples` uniform sample points.
pub fn tolerant_test_once(
    g: &Graph,
    f: &dyn FunctionOracle,
    params: &TesterParams,
    rng: &mut impl Rng,
    seed: &Seed,
) -> Result<RunReport> {
    let n = check_cube(g)?;
    let before = f.lookups();
    let pivot = Vertex(rng.gen_range(0..n));
    let filter = RestrictedFilter::new(g, f, params, pivot, seed)?;
    let mut disagreements = 0;
    for _ in 0..params.samples {
        let x = Vertex(rng.gen_range(0..n));
        let fx = value_at(f, x)?;
        if filter.query(x)? != Value::Defined(fx) {
            disagreements += 1;
        }
    }
    let omega_hat = disagreements as f64 / params.samples as f64;
    Ok(RunReport {
        accept: omega_hat < params.threshold(),
        pivot,
        interval: filter.interval,
        disagreements,
        samples: params.samples,
        omega_hat,
        lookups: f.lookups() - before,
        failure: None,
    })
}

/// Majority over `params.reps` runs; run `i` uses filter seed `seed.derive("run", i)`.
pub fn tolerant_test(
    g: &Graph,
    f: &dyn FunctionOracle,
    params: &TesterParams,
    rng: &mut impl Rng,
    seed: &Seed,
) -> Result<TestReport> {
    let mut runs = Vec::with_capacity(params.reps);
    for i in 0..params.reps {
        let before = f.lookups();
        match tolerant_test_once(g, f, params, rng, &seed.derive("run", i as u64)) {
            Ok(run) => runs.push(run),
            Err(e @ Error::BudgetExceeded { .. }) => runs.push(RunReport {
                accept: false,
                pivot: Vertex(0),
                interval: (Rational::zero(), Rational::zero()),
                disagreements: 0,
                samples: 0,
                omega_hat: f64::NAN,
                lookups: f.lookups() - before,
                failure: Some(e.to_string()),
            }),
            Err(e) => return Err(e),
        }
    }
    let votes: Vec<bool> = runs.iter().map(|r| r.accept).collect();
    Ok(TestReport { accept: majority(&votes), runs })
}

/// Exhaustive disagreement indicators `f(x) ≠ y(x)` for one pivot and seed.
pub fn disagreement_table(
    g: &Graph,
    f: &dyn FunctionOracle,
    params: &TesterParams,
    pivot: Vertex,
    seed: &Seed,
) -> Result<Vec<bool>> {
    check_cube(g)?;
    let filter = RestrictedFilter::new(g, f, params, pivot, seed)?;
    g.vertices()
        .map(|x| Ok(filter.query(x)? != Value::Defined(value_at(f, x)?)))
        .collect()
}

/// Mean of `samples` uniform draws from `table`.
pub fn estimate_rate(table: &[bool], samples: u64, rng: &mut impl Rng) -> f64 {
    let hits = (0..samples).filter(|_| table[rng.gen_range(0..table.len())]).count();
    hits as f64 / samples as f64
}

/// Fraction of the domain lying in the canonical cover with a value accepted by `keep`.
pub fn eps_of_set(g: &Graph, f: &dyn FunctionOracle, cap: usize, keep: impl Fn(&Rational) -> bool) -> Result<Rational> {
    let values = materialize(g, f)?;
    let cover = canonical_cover(g, &values, cap)?;
    let inside = cover
        .iter()
        .filter(|v| values[v.0 as usize].defined().is_some_and(&keep))
        .count();
    Ok(Rational::new(inside as i64, g.num_vertices() as i64))
}

/// `ε[I]` for the closed interval `I = [lo, hi]`.
pub fn eps_of_interval(g: &Graph, f: &dyn FunctionOracle, lo: &Rational, hi: &Rational, cap: usize) -> Result<Rational> {
    eps_of_set(g, f, cap, |q| q >= lo && q <= hi)
}
