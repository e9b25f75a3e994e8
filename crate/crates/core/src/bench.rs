//! Lookup counts per query for the local filters on hard instances.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter_l0::LocalFilter0;
use crate::filter_l1::{default_slack, Budgets, LocalFilter1};
use crate::function::FunctionOracle;
use crate::graph::Vertex;
use crate::hard::{HardInstance, HardParams};
use crate::rational::Rational;
use crate::seed::Seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterKind {
    L0,
    L1,
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l0" => Ok(FilterKind::L0),
            "l1" => Ok(FilterKind::L1),
            _ => Err(Error::InvalidParam(format!("unknown filter kind {s:?}, expected l0 or l1"))),
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FilterKind::L0 => "l0",
            FilterKind::L1 => "l1",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub kind: FilterKind,
    /// Anchor pairs per instance.
    pub anchors: usize,
    /// Queries per table row; half at anchor points, half uniform.
    pub queries: usize,
    pub seed: Seed,
    pub budgets: Budgets,
    pub slack: Rational,
}

impl BenchConfig {
    pub fn new(kind: FilterKind, seed: Seed) -> Self {
        Self { kind, anchors: 4, queries: 64, seed, budgets: Budgets::default(), slack: default_slack() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub d: usize,
    pub r: u64,
    pub queries: usize,
    pub mean_lookups: f64,
    pub max_lookups: u64,
}

/// One row: a `b = 1` instance (separation not enforced) queried with a
/// fresh filter per query, so nothing is cached between queries.
pub fn bench_point(d: usize, r: u64, config: &BenchConfig) -> Result<BenchRow> {
    if config.queries == 0 {
        return Err(Error::InvalidParam("at least one query is needed".into()));
    }
    let point_seed = config.seed.derive("bench", ((d as u64) << 32) | r);
    let mut rng = point_seed.rng("instance");
    let params = HardParams::new(d, r, 1).anchors(config.anchors).separated(false);
    let inst = HardInstance::sample(params, &mut rng)?;
    let graph = inst.graph()?;
    let support = inst.support_points();
    let n = graph.num_vertices();
    let filter_seed = point_seed.derive("filter", 0);
    let (mut total, mut max) = (0u64, 0u64);
    for q in 0..config.queries {
        let x = if q % 2 == 0 { support[(q / 2) % support.len()] } else { Vertex(rng.gen_range(0..n)) };
        let before = inst.lookups();
        match config.kind {
            FilterKind::L0 => {
                LocalFilter0::new(&graph, &inst, &filter_seed, config.budgets)?.query(x)?;
            }
            FilterKind::L1 => {
                LocalFilter1::new(&graph, &inst, &config.slack, &filter_seed, config.budgets)?.query(x)?;
            }
        }
        let used = inst.lookups() - before;
        total += used;
        max = max.max(used);
    }
    Ok(BenchRow { d, r, queries: config.queries, mean_lookups: total as f64 / config.queries as f64, max_lookups: max })
}

pub fn sweep_d(r: u64, ds: &[usize], config: &BenchConfig) -> Result<Vec<BenchRow>> {
    ds.iter().map(|&d| bench_point(d, r, config)).collect()
}

pub fn sweep_r(d: usize, rs: &[u64], config: &BenchConfig) -> Result<Vec<BenchRow>> {
    rs.iter().map(|&r| bench_point(d, r, config)).collect()
}

/// Least-squares slope of `ln(mean_lookups)` against `ln(d)`.
pub fn loglog_slope(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|row| row.mean_lookups > 0.0)
        .map(|row| ((row.d as f64).ln(), row.mean_lookups.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
