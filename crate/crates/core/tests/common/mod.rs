//! Generators and brute-force checks shared by the integration tests.
#![allow(dead_code)]

use lipfilter::function::TableFunction;
use lipfilter::{Graph, Rational, Vertex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64) -> Rational {
    Rational::from_integer(n)
}

pub fn half(n: i64) -> Rational {
    Rational::new(n, 2)
}

/// A hypercube or hypergrid with at most `max_vertices` vertices.
pub fn random_domain(rng: &mut impl Rng, max_vertices: u64) -> Graph {
    loop {
        let g = if rng.gen_bool(0.5) {
            let d = rng.gen_range(1..=12usize);
            Graph::hypercube(d).unwrap()
        } else {
            let n = rng.gen_range(2..=6u64);
            let d = rng.gen_range(1..=4usize);
            Graph::hypergrid(n, d).unwrap()
        };
        if g.num_vertices() <= max_vertices {
            return g;
        }
    }
}

/// Half-integer values in `[0, r]`, no structure.
pub fn random_values(rng: &mut impl Rng, g: &Graph, r: i64) -> Vec<Rational> {
    g.vertices().map(|_| half(rng.gen_range(0..=2 * r))).collect()
}

/// `min_j (c_j + dist(x, a_j))` or `max_j (c_j - dist(x, a_j))`, clamped to `[0, r]`.
pub fn random_lipschitz_values(rng: &mut impl Rng, g: &Graph, r: i64) -> Vec<Rational> {
    let n = g.num_vertices();
    let k = rng.gen_range(1..=4);
    let anchors: Vec<(Vertex, i64)> = (0..k)
        .map(|_| (Vertex(rng.gen_range(0..n)), rng.gen_range(-2 * r..=4 * r)))
        .collect();
    let lower = rng.gen_bool(0.5);
    g.vertices()
        .map(|x| {
            let cands = anchors.iter().map(|&(a, c)| {
                let dist = 2 * g.dist(x, a).unwrap() as i64;
                if lower { c + dist } else { c - dist }
            });
            let v = if lower { cands.min().unwrap() } else { cands.max().unwrap() };
            half(v.clamp(0, 2 * r))
        })
        .collect()
}

pub fn table(g: &Graph, r: i64, values: &[Rational]) -> TableFunction {
    TableFunction::from_values(g, q(r), values.to_vec()).unwrap()
}

/// Largest `|g(u) - g(v)|` over graph edges.
pub fn max_edge_gap(g: &Graph, values: &[Rational]) -> Rational {
    let mut worst = Rational::zero();
    for u in g.vertices() {
        for v in g.neighbors(u).unwrap() {
            let gap = (&values[u.0 as usize] - &values[v.0 as usize]).abs();
            if gap > worst {
                worst = gap;
            }
        }
    }
    worst
}

/// `max(0, max_{x,y} |g(x) - g(y)| - dist(x, y))` over all pairs.
pub fn max_pair_violation(g: &Graph, values: &[Rational]) -> Rational {
    let mut worst = Rational::zero();
    let vs: Vec<Vertex> = g.vertices().collect();
    for (i, &x) in vs.iter().enumerate() {
        for &y in &vs[i + 1..] {
            let s = (&values[x.0 as usize] - &values[y.0 as usize]).abs() - q(g.dist(x, y).unwrap() as i64);
            if s > worst {
                worst = s;
            }
        }
    }
    worst
}

/// `Σ |a - b| / n`.
pub fn l1(a: &[Rational], b: &[Rational]) -> Rational {
    let mut sum = Rational::zero();
    for (x, y) in a.iter().zip(b) {
        sum = &sum + &(x - y).abs();
    }
    &sum / &q(a.len() as i64)
}

pub fn hamming(a: u64, b: u64) -> u64 {
    u64::from((a ^ b).count_ones())
}
