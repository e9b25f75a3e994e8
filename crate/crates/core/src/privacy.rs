//! Differentially private query answering on top of the filters.
//!
//! Noise is the only floating-point quantity: filter values stay exact and
//! are converted to `f64` when the noise is added.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::filter_l0::LocalFilter0;
use crate::filter_l1::{Budgets, LocalFilter1};
use crate::function::{Clip, FunctionOracle};
use crate::graph::{Graph, Vertex};
use crate::rational::Rational;
use crate::seed::Seed;

/// Base of every logarithm in the binary-search mechanism.
pub const LOG_BASE: f64 = 2.0;

fn log(x: f64) -> f64 {
    x.log(LOG_BASE)
}

/// The Laplace distribution with scale `λ`, centered at 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Laplace {
    scale: f64,
}

impl Laplace {
    pub fn new(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidParam(format!("Laplace scale must be positive, got {scale}")));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Inverse-CDF transform of a uniform `u ∈ (0, 1)`.
    pub fn transform(&self, u: f64) -> f64 {
        let c = u - 0.5;
        -self.scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        // open interval: 0 would map to an infinite draw
        let u = loop {
            let u: f64 = rng.gen();
            if u > 0.0 {
                break u;
            }
        };
        self.transform(u)
    }
}

/// A seeded stream of Laplace draws that can be switched off for testing.
pub struct NoiseSource {
    rng: Option<ChaCha20Rng>,
}

impl NoiseSource {
    pub fn new(seed: &Seed) -> Self {
        Self { rng: Some(seed.rng("noise")) }
    }

    /// Every draw is exactly 0.
    pub fn disabled() -> Self {
        Self { rng: None }
    }

    pub fn is_enabled(&self) -> bool {
        self.rng.is_some()
    }

    pub fn laplace(&mut self, scale: f64) -> Result<f64> {
        let dist = Laplace::new(scale)?;
        Ok(match &mut self.rng {
            Some(rng) => dist.sample(rng),
            None => 0.0,
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParam(format!("epsilon must be positive, got {eps}")));
    }
    Ok(())
}

fn check_delta(delta: f64, max: f64) -> Result<()> {
    if !(delta > 0.0 && delta < max) {
        return Err(Error::InvalidParam(format!("delta must lie in (0, {max}), got {delta}")));
    }
    Ok(())
}

/// `f(x) + Laplace(c/ε)`.
pub fn laplace_mechanism(f: &dyn FunctionOracle, x: Vertex, eps: f64, c: f64, noise: &mut NoiseSource) -> Result<f64> {
    check_eps(eps)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidParam(format!("sensitivity must be positive, got {c}")));
    }
    let fx = f.lookup(x)?.expect_defined(|| format!("{x:?}"))?;
    Ok(fx.to_f64() + noise.laplace(c / eps)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MechanismOutput {
    pub value: f64,
    /// The filter value the noise was added to (last iteration for binary search).
    pub filtered: Rational,
    pub lookups: u64,
    pub iterations: u32,
}

/// Bounded-range mechanism: the ℓ1 filter with slack 1, then `Laplace(2/ε)`.
///
/// The oracle is clipped to `[0, r]` before the filter sees it. One instance
/// answers any number of queries with the same filter seed, so repeated
/// queries are consistent.
pub struct FilterMechanism<'a, F: FunctionOracle> {
    filter: LocalFilter1<'a>,
    clipped: std::sync::Arc<Clip<F>>,
    eps: f64,
}

impl<'a, F: FunctionOracle + 'a> FilterMechanism<'a, F> {
    pub fn new(graph: &'a Graph, f: F, r: Rational, eps: f64, delta: f64, seed: &Seed, budgets: Budgets) -> Result<Self> {
        check_eps(eps)?;
        check_delta(delta, 1.0)?;
        if r.is_negative() {
            return Err(Error::InvalidParam(format!("range diameter must be nonnegative, got {r}")));
        }
        let clipped = std::sync::Arc::new(Clip::new(f, Rational::zero(), r)?);
        let filter = LocalFilter1::new(graph, clipped.clone(), &Rational::one(), seed, budgets)?;
        Ok(Self { filter, clipped, eps })
    }

    /// The noiseless filter value at `x`.
    pub fn filtered(&self, x: Vertex) -> Result<Rational> {
        self.filter.query(x)
    }

    pub fn query(&self, x: Vertex, noise: &mut NoiseSource) -> Result<MechanismOutput> {
        let before = self.clipped.lookups();
        let filtered = self.filter.query(x)?;
        let value = filtered.to_f64() + noise.laplace(2.0 / self.eps)?;
        Ok(MechanismOutput { value, filtered, lookups: self.clipped.lookups() - before, iterations: 1 })
    }
}

/// One-shot form of [`FilterMechanism`].
#[allow(clippy::too_many_arguments)]
pub fn filter_mechanism<F: FunctionOracle>(
    graph: &Graph,
    f: F,
    x: Vertex,
    r: Rational,
    eps: f64,
    delta: f64,
    seed: &Seed,
    noise: &mut NoiseSource,
    budgets: Budgets,
) -> Result<MechanismOutput> {
    FilterMechanism::new(graph, f, r, eps, delta, seed, budgets)?.query(x, noise)
}

/// Derived constants of the binary-search mechanism for one domain.
#[derive(Clone, Debug, PartialEq)]
pub struct MechanismParams {
    pub eps: f64,
    pub delta: f64,
    /// `min(r_opt, diam)`.
    pub r: Rational,
    /// `log r`, floored at 1 so small ranges still get one iteration of noise.
    pub kappa: f64,
    /// Half-width of the acceptance band.
    pub alpha: Rational,
    /// Last value of `i`; the loop runs `i = 2..=last_iteration`.
    pub last_iteration: u32,
}

impl MechanismParams {
    /// `r_opt = None` means no range was supplied.
    pub fn new(graph: &Graph, r_opt: Option<Rational>, eps: f64, delta: f64) -> Result<Self> {
        check_eps(eps)?;
        check_delta(delta, 1.0 / 200.0)?;
        let diam = graph
            .diameter()
            .map(|d| Rational::from_integer(d as i64))
            .ok_or_else(|| Error::InvalidParam("the domain graph is disconnected".into()))?;
        let r = match r_opt {
            Some(r) if r.is_negative() => {
                return Err(Error::InvalidParam(format!("range must be nonnegative, got {r}")));
            }
            Some(r) => r.min(diam),
            None => diam,
        };
        let kappa = log(r.to_f64()).max(1.0);
        let alpha = Rational::from_f64(kappa * log(200.0 * kappa) / eps)
            .ok_or_else(|| Error::InvalidParam(format!("band half-width for epsilon {eps} is not finite")))?;
        let last_iteration = (log(r.to_f64()).ceil() as i64).max(2) as u32;
        Ok(Self { eps, delta, r, kappa, alpha, last_iteration })
    }

    pub fn iterations(&self) -> u32 {
        self.last_iteration - 1
    }

    pub fn noise_scale(&self) -> f64 {
        self.kappa / self.eps
    }
}

/// The binary-search mechanism for functions of unknown range.
///
/// Iteration `i` runs the ℓ0 filter (seed `seed.iteration(i)`) on
/// `f[t - 2α, t + 2α]` and adds `Laplace(κ/ε)`; it stops once the noisy
/// value lands in `[t - α, t + α]` and otherwise moves `t` by `⌈r/2^i⌉`
/// toward it.
pub fn binary_search_mechanism(
    graph: &Graph,
    f: &dyn FunctionOracle,
    x: Vertex,
    params: &MechanismParams,
    seed: &Seed,
    noise: &mut NoiseSource,
    budgets: Budgets,
) -> Result<MechanismOutput> {
    let zero = Rational::zero();
    let clipped = Clip::new(f, zero.clone(), params.r.clone())?;
    let two = Rational::from_integer(2);
    let band = &two * &params.alpha;
    let mut t = &params.r / &two;
    let mut last = None;
    let mut lookups = 0;
    for i in 2..=params.last_iteration {
        let window = Clip::new(&clipped, &t - &band, &t + &band)?;
        let filter = LocalFilter0::new(graph, &window, &seed.iteration(i as u64), budgets)?;
        let before = clipped.lookups();
        let filtered = filter
            .query(x)?
            .expect_defined(|| format!("{x:?}"))?;
        lookups += clipped.lookups() - before;
        let h = filtered.to_f64() + noise.laplace(params.noise_scale())?;
        let iterations = i - 1;
        let out = MechanismOutput { value: h, filtered, lookups, iterations };
        let gap = h - t.to_f64();
        if gap.abs() <= params.alpha.to_f64() {
            return Ok(out);
        }
        assert!(gap != 0.0, "outside the band implies a nonzero gap");
        let step = (&params.r / &Rational::from_integer(1i64 << i.min(62))).ceil();
        t = if gap > 0.0 { &t + &step } else { &t - &step };
        last = Some(out);
    }
    Ok(last.expect("at least one iteration"))
}
