//! Random hard instances on the hypercube: paired anchor points whose small
//! balls carry distance-shaped values, Lipschitz for `b = 0` and violated on
//! every anchor pair for `b = 1`.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{FunctionOracle, LookupCounter, Value};
use crate::graph::{Graph, Vertex};
use crate::rational::Rational;

/// Resampling attempts before separation is given up.
pub const DEFAULT_RETRY_CAP: usize = 100_000;

/// Anchors per side when no count is given.
pub const DEFAULT_ANCHORS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HardParams {
    pub d: usize,
    pub r: u64,
    pub b: u8,
    pub m: usize,
    pub enforce_separation: bool,
    pub retry_cap: usize,
}

impl HardParams {
    pub fn new(d: usize, r: u64, b: u8) -> Self {
        Self { d, r, b, m: DEFAULT_ANCHORS, enforce_separation: true, retry_cap: DEFAULT_RETRY_CAP }
    }

    pub fn anchors(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn separated(mut self, on: bool) -> Self {
        self.enforce_separation = on;
        self
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if self.d == 0 || self.d > 64 {
            return bad(format!("dimension {} outside 1..=64", self.d));
        }
        if self.b > 1 {
            return bad(format!("b must be 0 or 1, got {}", self.b));
        }
        if self.r < 2 || self.r % 2 != 0 {
            return bad(format!("r must be even and at least 2, got {}", self.r));
        }
        if self.r - u64::from(self.b) > self.d as u64 {
            return bad(format!("anchor pairs at distance {} do not fit in dimension {}", self.r - u64::from(self.b), self.d));
        }
        if self.m == 0 {
            return bad("at least one anchor pair is needed".into());
        }
        Ok(())
    }
}

/// Anchor-only description of an instance, vertices as bit strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnchorsFile {
    pub d: usize,
    pub r: u64,
    pub b: u8,
    #[serde(rename = "A")]
    pub anchors: Vec<String>,
    #[serde(rename = "A'")]
    pub partners: Vec<String>,
}

/// One sample; lookups compare the query against every anchor.
#[derive(Debug)]
pub struct HardInstance {
    pub d: usize,
    pub r: u64,
    pub b: u8,
    /// `A`, as bit strings with coordinate 1 as the most significant bit.
    pub anchors: Vec<Vertex>,
    /// `A'`, paired with `anchors` by index.
    pub partners: Vec<Vertex>,
    counter: LookupCounter,
}

fn in_cube(v: Vertex, d: usize) -> bool {
    v.0.checked_shr(d as u32).unwrap_or(0) == 0
}

fn hamming(a: Vertex, b: Vertex) -> u64 {
    u64::from((a.0 ^ b.0).count_ones())
}

impl HardInstance {
    pub fn new(d: usize, r: u64, b: u8, anchors: Vec<Vertex>, partners: Vec<Vertex>) -> Result<Self> {
        HardParams::new(d, r, b).anchors(anchors.len()).validate()?;
        if anchors.len() != partners.len() {
            return Err(Error::InvalidParam("anchor lists differ in length".into()));
        }
        for (a, p) in anchors.iter().zip(&partners) {
            if !in_cube(*a, d) || !in_cube(*p, d) {
                return Err(Error::OutOfDomain(format!("anchor outside {{0,1}}^{d}")));
            }
            if hamming(*a, *p) != r - u64::from(b) {
                return Err(Error::InvalidParam(format!("anchor pair at distance {}, expected {}", hamming(*a, *p), r - u64::from(b))));
            }
        }
        Ok(Self { d, r, b, anchors, partners, counter: LookupCounter::default() })
    }

    pub fn sample(params: HardParams, rng: &mut impl Rng) -> Result<Self> {
        params.validate()?;
        let gap = (params.r - u64::from(params.b)) as usize;
        let mask = u64::MAX >> (64 - params.d);
        for _ in 0..params.retry_cap.max(1) {
            let anchors: Vec<Vertex> = (0..params.m).map(|_| Vertex(rng.gen::<u64>() & mask)).collect();
            let partners: Vec<Vertex> = anchors
                .iter()
                .map(|a| {
                    let flip = sample(rng, params.d, gap).into_iter().fold(0u64, |acc, i| acc | 1 << i);
                    Vertex(a.0 ^ flip)
                })
                .collect();
            let inst = Self::new(params.d, params.r, params.b, anchors, partners)?;
            if !params.enforce_separation || inst.is_separated() {
                return Ok(inst);
            }
        }
        Err(Error::RetryExhausted(params.retry_cap))
    }

    pub fn to_file(&self) -> AnchorsFile {
        let enc = |vs: &[Vertex]| vs.iter().map(|v| format!("{:0w$b}", v.0, w = self.d)).collect();
        AnchorsFile { d: self.d, r: self.r, b: self.b, anchors: enc(&self.anchors), partners: enc(&self.partners) }
    }

    pub fn from_file(file: &AnchorsFile) -> Result<Self> {
        let dec = |vs: &[String]| {
            vs.iter()
                .map(|s| {
                    if s.len() != file.d || !s.bytes().all(|c| c == b'0' || c == b'1') {
                        return Err(Error::OutOfDomain(format!("{s:?}")));
                    }
                    u64::from_str_radix(s, 2).map(Vertex).map_err(|_| Error::OutOfDomain(format!("{s:?}")))
                })
                .collect::<Result<Vec<_>>>()
        };
        Self::new(file.d, file.r, file.b, dec(&file.anchors)?, dec(&file.partners)?)
    }

    /// The domain as a graph; fails for `d = 64`, which only lazy lookups support.
    pub fn graph(&self) -> Result<Graph> {
        Graph::hypercube(self.d)
    }

    /// Every anchor pair other than corresponding ones is more than `d/4` apart.
    pub fn is_separated(&self) -> bool {
        let m = self.anchors.len();
        let points: Vec<(usize, Vertex)> = self
            .anchors
            .iter()
            .chain(&self.partners)
            .enumerate()
            .map(|(k, v)| (k % m, *v))
            .collect();
        points.iter().enumerate().all(|(i, (pi, u))| {
            points[i + 1..]
                .iter()
                .all(|(pj, v)| pi == pj || 4 * hamming(*u, *v) > self.d as u64)
        })
    }

    /// `f(x)` without counting.
    pub fn eval(&self, x: Vertex) -> u64 {
        // open ball of radius r/2: distance strictly below it
        let radius = self.r / 2;
        if let Some(a) = self.anchors.iter().find(|a| hamming(x, **a) < radius) {
            return hamming(x, *a);
        }
        if let Some(a) = self.partners.iter().find(|a| hamming(x, **a) < radius) {
            return self.r - hamming(x, *a);
        }
        radius
    }

    /// The support of the query distribution: `A` then `A'`.
    pub fn support_points(&self) -> Vec<Vertex> {
        self.anchors.iter().chain(&self.partners).copied().collect()
    }
}

impl FunctionOracle for HardInstance {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        if !in_cube(x, self.d) {
            return Err(Error::OutOfDomain(format!("{x:?} outside {{0,1}}^{}", self.d)));
        }
        self.counter.tick();
        Ok(Value::from(self.eval(x) as i64))
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        Some((Rational::zero(), Rational::from_integer(self.r as i64)))
    }

    fn lookups(&self) -> u64 {
        self.counter.get()
    }
}

/// `check_separation` for an instance.
pub fn check_separation(inst: &HardInstance) -> bool {
    inst.is_separated()
}

pub fn sample_hard_instance(params: HardParams, rng: &mut impl Rng) -> Result<HardInstance> {
    HardInstance::sample(params, rng)
}
