//! The ℓ1-respecting filter: mass moves along maximal matchings of
//! shrinking-threshold violation graphs.
//!
//! Round `t` (for `t = 2..T`) matches the violation graph of the round
//! `t - 1` values at threshold `τ_t = r (2/3)^(t-1)` and moves each matched
//! pair `Δ_t = τ_t / 2` towards each other.

use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::function::{FunctionOracle, TableFunction, Value};
use crate::graph::{Graph, Vertex};
use crate::matching::{global_matching, EdgeId, Matcher, MatchingLca, DEFAULT_EDGE_BUDGET};
use crate::rational::Rational;
use crate::seed::Seed;
use crate::violation::{violation_edges, ValueSource, ViolationGraph, DEFAULT_BALL_BUDGET};

/// Slack used when none is given: outputs are 1.01-Lipschitz.
pub fn default_slack() -> Rational {
    Rational::new(1, 100)
}

/// Exploration caps for one filter instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Vertices per ball enumeration.
    pub ball: u64,
    /// Fresh edge evaluations per matching query.
    pub edges: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Self { ball: DEFAULT_BALL_BUDGET, edges: DEFAULT_EDGE_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    r: Rational,
    slack: Rational,
    rounds: u32,
}

impl Schedule {
    /// `T = 1 + k` for the least `k` with `(3/2)^k ≥ r / slack`.
    pub fn new(r: Rational, slack: Rational) -> Result<Self> {
        if !r.is_positive() || !slack.is_positive() {
            return Err(Error::InvalidParam(format!("schedule needs r > 0 and slack > 0, got r={r}, slack={slack}")));
        }
        let target = &r / &slack;
        let step = Rational::new(3, 2);
        let mut power = Rational::one();
        let mut k = 0u32;
        while power < target {
            power = &power * &step;
            k += 1;
        }
        Ok(Self { r, slack, rounds: k + 1 })
    }

    /// The round count `T`; rounds `2..=T` move values.
    pub fn rounds(&self) -> u32 {
        self.rounds
    }

    pub fn r(&self) -> &Rational {
        &self.r
    }

    pub fn slack(&self) -> &Rational {
        &self.slack
    }

    /// `τ_t = r (2/3)^(t-1)`.
    pub fn tau(&self, t: u32) -> Rational {
        &self.r * &Rational::new(2, 3).pow(t as i32 - 1)
    }

    /// `Δ_t = (r/3) (2/3)^(t-2) = τ_t / 2`.
    pub fn delta(&self, t: u32) -> Rational {
        &self.tau(t) / &Rational::from_integer(2)
    }
}

fn bounds_of<F: FunctionOracle + ?Sized>(f: &F) -> Result<(Rational, Rational)> {
    FunctionOracle::bounds(f).ok_or_else(|| Error::InvalidParam("the filter needs a declared range".into()))
}

/// Schedule for a range `[lo, hi]`; a constant range needs no rounds.
fn schedule_for(lo: &Rational, hi: &Rational, slack: &Rational) -> Result<Schedule> {
    let r = hi - lo;
    if r.is_zero() {
        if !slack.is_positive() {
            return Err(Error::InvalidParam(format!("slack must be positive, got {slack}")));
        }
        return Ok(Schedule { r, slack: slack.clone(), rounds: 1 });
    }
    Schedule::new(r, slack.clone())
}

/// `sign(other - own) · Δ` added to `own`.
fn moved(own: &Rational, other: &Rational, delta: &Rational) -> Rational {
    match other.cmp(own) {
        std::cmp::Ordering::Greater => own + delta,
        std::cmp::Ordering::Less => own - delta,
        std::cmp::Ordering::Equal => unreachable!("matched vertices have distinct values"),
    }
}

/// One round of the local recursion; its values are the round-`t` function.
struct Round<'a> {
    lca: MatchingLca<ViolationGraph<'a>>,
    delta: Rational,
    bounds: (Rational, Rational),
    cache: Mutex<FxHashMap<Vertex, Rational>>,
}

impl Round<'_> {
    fn previous(&self, x: Vertex) -> Result<Rational> {
        let g = self.lca.graph();
        g.value(x)?.expect_defined(|| g.graph().encode(x))
    }
}

impl ValueSource for Round<'_> {
    fn value(&self, x: Vertex) -> Result<Value> {
        if let Some(v) = self.cache.lock().expect("round cache").get(&x) {
            return Ok(Value::Defined(v.clone()));
        }
        let own = self.previous(x)?;
        let v = match self.lca.match_of(x)? {
            None => own,
            Some(y) => moved(&own, &self.previous(y)?, &self.delta),
        };
        self.cache.lock().expect("round cache").insert(x, v.clone());
        Ok(Value::Defined(v))
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        Some(self.bounds.clone())
    }
}

/// Local query access to the ℓ1 filter output for one seed.
///
/// Round values, violation neighborhoods and matching verdicts are cached
/// inside the instance; a fresh instance answers identically.
pub struct LocalFilter1<'a> {
    schedule: Schedule,
    rounds: Vec<Arc<dyn ValueSource + 'a>>,
}

impl<'a> LocalFilter1<'a> {
    pub fn new<F: FunctionOracle + 'a>(
        graph: &'a Graph,
        f: F,
        slack: &Rational,
        seed: &Seed,
        budgets: Budgets,
    ) -> Result<Self> {
        let (lo, hi) = bounds_of(&f)?;
        let schedule = schedule_for(&lo, &hi, slack)?;
        let mut rounds: Vec<Arc<dyn ValueSource + 'a>> = vec![Arc::new(f)];
        for t in 2..=schedule.rounds() {
            let prev = rounds.last().expect("round 1").clone();
            let viol = ViolationGraph::new(graph, prev, schedule.tau(t), budgets.ball)?;
            let lca = MatchingLca::new(viol, &seed.iteration(t as u64), budgets.edges);
            rounds.push(Arc::new(Round {
                lca,
                delta: schedule.delta(t),
                bounds: (lo.clone(), hi.clone()),
                cache: Mutex::new(FxHashMap::default()),
            }));
        }
        Ok(Self { schedule, rounds })
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// `g_t(x)` for `1 ≤ t ≤ T`.
    pub fn round_value(&self, x: Vertex, t: u32) -> Result<Rational> {
        let round = self
            .rounds
            .get(t as usize - 1)
            .ok_or_else(|| Error::InvalidParam(format!("round {t} outside 1..={}", self.rounds.len())))?;
        round.value(x)?.expect_defined(|| format!("{x:?}"))
    }

    /// The filtered value `g_T(x)`.
    pub fn query(&self, x: Vertex) -> Result<Rational> {
        self.round_value(x, self.schedule.rounds())
    }
}

/// Reference run of all rounds on the whole domain; returns `g_1, …, g_T`.
///
/// With `Matcher::RandomGreedy(seed)` or `Matcher::Lca { seed, .. }` round
/// `t` uses the per-round seed `seed.iteration(t)`, exactly as the local
/// filter does.
pub fn global_filter_l1(
    g: &Graph,
    f: &dyn FunctionOracle,
    slack: &Rational,
    matcher: Matcher,
    ball_budget: u64,
) -> Result<Vec<Vec<Rational>>> {
    let (lo, hi) = bounds_of(f)?;
    let schedule = schedule_for(&lo, &hi, slack)?;
    let mut current = crate::function::materialize_total(g, f)?;
    let vertices: Vec<Vertex> = g.vertices().collect();
    let mut trace = vec![current.clone()];
    for t in 2..=schedule.rounds() {
        let tau = schedule.tau(t);
        let delta = schedule.delta(t);
        let table: Vec<Value> = current.iter().cloned().map(Value::Defined).collect();
        let edges: Vec<EdgeId> = violation_edges(g, &table, &tau);
        let mate = match matcher {
            Matcher::Greedy => global_matching(g, &vertices, &edges, Matcher::Greedy)?,
            Matcher::RandomGreedy(seed) => {
                global_matching(g, &vertices, &edges, Matcher::RandomGreedy(seed.iteration(t as u64)))?
            }
            Matcher::Lca { seed, budget } => {
                let snapshot = TableFunction::dense(g, Some((lo.clone(), hi.clone())), table)?;
                let viol = ViolationGraph::over(g, snapshot, tau.clone(), ball_budget)?;
                global_matching(&viol, &vertices, &edges, Matcher::Lca { seed: seed.iteration(t as u64), budget })?
            }
        };
        let next: Vec<Rational> = current
            .iter()
            .enumerate()
            .map(|(i, own)| match mate.get(&Vertex(i as u64)) {
                Some(y) => moved(own, &current[y.0 as usize], &delta),
                None => own.clone(),
            })
            .collect();
        trace.push(next.clone());
        current = next;
    }
    Ok(trace)
}
