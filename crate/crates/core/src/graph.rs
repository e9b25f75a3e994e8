//! Hypergrids, hypercubes and explicit graphs with shortest-path distance.
//!
//! Vertices are stored as a single `u64` index. For `[n]^d` the index is the
//! big-endian mixed-radix number `Σ (x_i - 1) n^(d-i)`, for `{0,1}^d` it is
//! the bit string `x_1 … x_d`, so integer order on indices is lexicographic
//! order on coordinates.

use std::collections::VecDeque;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{FunctionOracle, Value};
use crate::rational::Rational;

/// Distance between vertices in different components.
pub const UNREACHABLE: u64 = u64::MAX;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Vertex(pub u64);

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BallKind {
    /// `dist < radius`
    Open,
    /// `dist <= radius`
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplicitGraph {
    adj: Vec<Vec<u64>>,
}

#[derive(Deserialize, Serialize)]
struct EdgeListFile {
    vertices: u64,
    edges: Vec<[u64; 2]>,
}

impl ExplicitGraph {
    pub fn new(vertices: u64, edges: &[(u64, u64)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); vertices as usize];
        for &(u, v) in edges {
            if u >= vertices || v >= vertices {
                return Err(Error::OutOfDomain(format!("edge ({u}, {v})")));
            }
            if u == v {
                return Err(Error::InvalidParam(format!("self-loop at {u}")));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self { adj })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: EdgeListFile = serde_json::from_str(text)?;
        let edges: Vec<(u64, u64)> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        Self::new(file.vertices, &edges)
    }

    pub fn to_json(&self) -> String {
        let mut edges = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            for &v in list {
                if (u as u64) < v {
                    edges.push([u as u64, v]);
                }
            }
        }
        serde_json::to_string(&EdgeListFile { vertices: self.adj.len() as u64, edges })
            .expect("edge list serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Graph {
    Hypergrid { n: u64, d: usize },
    Hypercube { d: usize },
    Explicit(ExplicitGraph),
}

impl Graph {
    pub fn hypergrid(n: u64, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidParam(format!("hypergrid n={n}, d={d}")));
        }
        let mut total: u64 = 1;
        for _ in 0..d {
            total = total
                .checked_mul(n)
                .filter(|t| *t < (1 << 63))
                .ok_or_else(|| Error::SizeExceeded(format!("[{n}]^{d} does not fit in 63 bits")))?;
        }
        Ok(Graph::Hypergrid { n, d })
    }

    pub fn hypercube(d: usize) -> Result<Self> {
        if d == 0 || d > 63 {
            return Err(Error::InvalidParam(format!("hypercube dimension {d} not in 1..=63")));
        }
        Ok(Graph::Hypercube { d })
    }

    pub fn explicit(g: ExplicitGraph) -> Self {
        Graph::Explicit(g)
    }

    pub fn load_explicit(path: &Path) -> Result<Self> {
        Ok(Graph::Explicit(ExplicitGraph::from_json(&std::fs::read_to_string(path)?)?))
    }

    pub fn num_vertices(&self) -> u64 {
        match self {
            Graph::Hypergrid { n, d } => n.pow(*d as u32),
            Graph::Hypercube { d } => 1u64 << d,
            Graph::Explicit(g) => g.adj.len() as u64,
        }
    }

    pub fn max_degree(&self) -> usize {
        match self {
            Graph::Hypergrid { n, d } => match n {
                1 => 0,
                2 => *d,
                _ => 2 * d,
            },
            Graph::Hypercube { d } => *d,
            Graph::Explicit(g) => g.adj.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    /// Dimension for hypergrids and hypercubes.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Graph::Hypergrid { d, .. } | Graph::Hypercube { d } => Some(*d),
            Graph::Explicit(_) => None,
        }
    }

    /// Largest possible distance between two vertices of a grid or cube.
    pub fn diameter(&self) -> Option<u64> {
        match self {
            Graph::Hypergrid { n, d } => Some((n - 1) * *d as u64),
            Graph::Hypercube { d } => Some(*d as u64),
            Graph::Explicit(_) => None,
        }
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.0 < self.num_vertices()
    }

    pub fn check(&self, v: Vertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(format!("{v:?}")))
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> {
        (0..self.num_vertices()).map(Vertex)
    }

    /// Place value of coordinate `i` (0-based) in the vertex index.
    fn weight(&self, i: usize) -> u64 {
        match self {
            Graph::Hypergrid { n, d } => n.pow((d - 1 - i) as u32),
            Graph::Hypercube { d } => 1u64 << (d - 1 - i),
            Graph::Explicit(_) => unreachable!("explicit graphs have no coordinates"),
        }
    }

    /// 1-based coordinates on hypergrids, 0/1 on hypercubes.
    pub fn coords(&self, v: Vertex) -> Result<Vec<u64>> {
        self.check(v)?;
        match self {
            Graph::Hypergrid { n, d } => {
                let mut out = vec![0; *d];
                let mut rest = v.0;
                for i in (0..*d).rev() {
                    out[i] = rest % n + 1;
                    rest /= n;
                }
                Ok(out)
            }
            Graph::Hypercube { d } => Ok((0..*d).map(|i| (v.0 >> (d - 1 - i)) & 1).collect()),
            Graph::Explicit(_) => Err(Error::InvalidParam("explicit graphs have no coordinates".into())),
        }
    }

    /// Coordinate `i` (0-based) of `v`, unchecked.
    pub fn coord(&self, v: Vertex, i: usize) -> u64 {
        match self {
            Graph::Hypergrid { n, .. } => (v.0 / self.weight(i)) % n + 1,
            Graph::Hypercube { d } => (v.0 >> (d - 1 - i)) & 1,
            Graph::Explicit(_) => unreachable!("explicit graphs have no coordinates"),
        }
    }

    pub fn vertex(&self, coords: &[u64]) -> Result<Vertex> {
        let (lo, hi, d) = match self {
            Graph::Hypergrid { n, d } => (1, *n, *d),
            Graph::Hypercube { d } => (0, 1, *d),
            Graph::Explicit(_) => {
                return Err(Error::InvalidParam("explicit graphs have no coordinates".into()))
            }
        };
        if coords.len() != d || coords.iter().any(|c| *c < lo || *c > hi) {
            return Err(Error::OutOfDomain(format!("{coords:?}")));
        }
        Ok(Vertex(
            coords.iter().enumerate().map(|(i, c)| (c - lo) * self.weight(i)).sum(),
        ))
    }

    pub fn neighbors(&self, v: Vertex) -> Result<Vec<Vertex>> {
        self.check(v)?;
        let mut out = match self {
            Graph::Hypergrid { n, d } => {
                let mut out = Vec::with_capacity(2 * d);
                for i in 0..*d {
                    let w = self.weight(i);
                    let c = self.coord(v, i);
                    if c > 1 {
                        out.push(Vertex(v.0 - w));
                    }
                    if c < *n {
                        out.push(Vertex(v.0 + w));
                    }
                }
                out
            }
            Graph::Hypercube { d } => (0..*d).map(|i| Vertex(v.0 ^ (1u64 << i))).collect(),
            Graph::Explicit(g) => g.adj[v.0 as usize].iter().map(|&u| Vertex(u)).collect(),
        };
        out.sort_unstable();
        Ok(out)
    }

    /// Shortest-path distance; [`UNREACHABLE`] across components.
    pub fn dist(&self, x: Vertex, y: Vertex) -> Result<u64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist_unchecked(x, y))
    }

    pub(crate) fn dist_unchecked(&self, x: Vertex, y: Vertex) -> u64 {
        match self {
            Graph::Hypercube { .. } => (x.0 ^ y.0).count_ones() as u64,
            Graph::Hypergrid { n, d } => {
                let (mut a, mut b) = (x.0, y.0);
                let mut total = 0;
                for _ in 0..*d {
                    total += (a % n).abs_diff(b % n);
                    a /= n;
                    b /= n;
                }
                total
            }
            Graph::Explicit(_) => {
                if x == y {
                    return 0;
                }
                let mut found = UNREACHABLE;
                let _ = self.bfs(x, u64::MAX, u64::MAX, |v, dist| {
                    if v == y {
                        found = dist;
                        false
                    } else {
                        true
                    }
                });
                found
            }
        }
    }

    /// Breadth-first search from `src` up to `max_dist`, calling `visit` on
    /// each vertex in BFS order until it returns `false`.
    fn bfs(
        &self,
        src: Vertex,
        max_dist: u64,
        budget: u64,
        mut visit: impl FnMut(Vertex, u64) -> bool,
    ) -> Result<()> {
        let mut seen = rustc_hash::FxHashSet::default();
        let mut queue = VecDeque::new();
        seen.insert(src);
        queue.push_back((src, 0u64));
        while let Some((v, dist)) = queue.pop_front() {
            if !visit(v, dist) {
                return Ok(());
            }
            if dist == max_dist {
                continue;
            }
            for u in self.neighbors(v)? {
                if seen.insert(u) {
                    if seen.len() as u64 > budget {
                        return Err(Error::BudgetExceeded { what: "ball enumeration", budget });
                    }
                    queue.push_back((u, dist + 1));
                }
            }
        }
        Ok(())
    }

    /// All vertices within `radius` of `x` with their distances, ordered by
    /// `(distance, vertex)`. Fails once more than `budget` vertices are found.
    pub fn ball(&self, x: Vertex, radius: u64, kind: BallKind, budget: u64) -> Result<Vec<(Vertex, u64)>> {
        self.check(x)?;
        let max = match kind {
            BallKind::Closed => radius,
            BallKind::Open if radius == 0 => return Ok(Vec::new()),
            BallKind::Open => radius - 1,
        };
        let mut out = Vec::new();
        match self {
            Graph::Explicit(_) => {
                self.bfs(x, max, budget, |v, dist| {
                    out.push((v, dist));
                    true
                })?;
            }
            _ => {
                let all: Vec<usize> = (0..self.dim().unwrap()).collect();
                self.ball_in_coords(x, &all, max, budget, &mut |v, dist| out.push((v, dist)))?;
            }
        }
        out.sort_unstable_by_key(|&(v, dist)| (dist, v));
        Ok(out)
    }

    /// Enumerates every vertex that agrees with `x` outside `free` and lies
    /// within distance `max` of it (closed ball inside the sub-grid spanned by
    /// the `free` coordinates). Order is unspecified.
    pub(crate) fn ball_in_coords(
        &self,
        x: Vertex,
        free: &[usize],
        max: u64,
        budget: u64,
        emit: &mut dyn FnMut(Vertex, u64),
    ) -> Result<()> {
        if let Graph::Hypercube { .. } = self {
            let count = hypercube_ball_size(free.len(), max);
            if count > budget {
                return Err(Error::BudgetExceeded { what: "ball enumeration", budget });
            }
        }
        let mut count = 0u64;
        self.ball_rec(x, free, 0, max, 0, budget, &mut count, emit)
    }

    #[allow(clippy::too_many_arguments)]
    fn ball_rec(
        &self,
        v: Vertex,
        free: &[usize],
        start: usize,
        rem: u64,
        dist: u64,
        budget: u64,
        count: &mut u64,
        emit: &mut dyn FnMut(Vertex, u64),
    ) -> Result<()> {
        *count += 1;
        if *count > budget {
            return Err(Error::BudgetExceeded { what: "ball enumeration", budget });
        }
        emit(v, dist);
        if rem == 0 {
            return Ok(());
        }
        for j in start..free.len() {
            let i = free[j];
            match self {
                Graph::Hypercube { d } => {
                    let u = Vertex(v.0 ^ (1u64 << (d - 1 - i)));
                    self.ball_rec(u, free, j + 1, rem - 1, dist + 1, budget, count, emit)?;
                }
                Graph::Hypergrid { n, .. } => {
                    let w = self.weight(i);
                    let c = self.coord(v, i);
                    for step in 1..=rem {
                        if c + step <= *n {
                            let u = Vertex(v.0 + step * w);
                            self.ball_rec(u, free, j + 1, rem - step, dist + step, budget, count, emit)?;
                        }
                        if c > step {
                            let u = Vertex(v.0 - step * w);
                            self.ball_rec(u, free, j + 1, rem - step, dist + step, budget, count, emit)?;
                        }
                    }
                }
                Graph::Explicit(_) => unreachable!("explicit graphs have no coordinates"),
            }
        }
        Ok(())
    }

    /// Canonical text form: fixed-width big-endian digits per coordinate for
    /// grids and cubes, the decimal id for explicit graphs.
    pub fn encode(&self, v: Vertex) -> String {
        match self {
            Graph::Hypergrid { n, .. } => {
                let width = n.to_string().len();
                self.coords(v)
                    .expect("encode of vertex outside domain")
                    .iter()
                    .map(|c| format!("{c:0width$}"))
                    .collect()
            }
            Graph::Hypercube { .. } => self
                .coords(v)
                .expect("encode of vertex outside domain")
                .iter()
                .map(|c| if *c == 1 { '1' } else { '0' })
                .collect(),
            Graph::Explicit(_) => v.0.to_string(),
        }
    }

    pub fn decode(&self, s: &str) -> Result<Vertex> {
        let bad = || Error::OutOfDomain(format!("{s:?}"));
        match self {
            Graph::Hypergrid { n, d } => {
                let width = n.to_string().len();
                if s.len() != width * d || !s.is_ascii() {
                    return Err(bad());
                }
                let coords = (0..*d)
                    .map(|i| s[i * width..(i + 1) * width].parse::<u64>().map_err(|_| bad()))
                    .collect::<Result<Vec<_>>>()?;
                self.vertex(&coords)
            }
            Graph::Hypercube { d } => {
                if s.len() != *d {
                    return Err(bad());
                }
                let coords = s
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        _ => Err(bad()),
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.vertex(&coords)
            }
            Graph::Explicit(_) => {
                let v = Vertex(s.parse().map_err(|_| bad())?);
                self.check(v)?;
                Ok(v)
            }
        }
    }

    /// Parses a vertex given either canonically or as comma-separated coordinates.
    pub fn parse_vertex(&self, s: &str) -> Result<Vertex> {
        if s.contains(',') {
            let coords = s
                .split(',')
                .map(|c| c.trim().parse::<u64>().map_err(|_| Error::OutOfDomain(s.to_string())))
                .collect::<Result<Vec<_>>>()?;
            self.vertex(&coords)
        } else {
            self.decode(s)
        }
    }

    /// Every undirected edge `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(Vertex, Vertex)> {
        let mut out = Vec::new();
        for u in self.vertices() {
            for v in self.neighbors(u).expect("vertex in domain") {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// `Σ_{i ≤ radius} C(d, i)`, saturating.
pub fn hypercube_ball_size(d: usize, radius: u64) -> u64 {
    let mut total: u64 = 0;
    let mut binom: u128 = 1;
    for i in 0..=(radius.min(d as u64)) {
        if i > 0 {
            binom = binom * (d as u128 - i as u128 + 1) / i as u128;
        }
        total = total.saturating_add(binom.min(u64::MAX as u128) as u64);
    }
    total
}

/// `|f(x) - f(y)| <= c` on every edge; equivalent to `c`-Lipschitz for total `f`.
pub fn is_c_lipschitz(g: &Graph, f: &dyn FunctionOracle, c: &Rational) -> Result<bool> {
    let mut table = Vec::with_capacity(g.num_vertices() as usize);
    for v in g.vertices() {
        match f.lookup(v)? {
            Value::Defined(q) => table.push(q),
            Value::Undefined => return Err(Error::PartialFunction(g.encode(v))),
        }
    }
    for (u, v) in g.edges() {
        let gap = (&table[u.0 as usize] - &table[v.0 as usize]).abs();
        if gap > *c {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pairwise check `|f(x) - f(y)| <= c·dist(x, y)` over the defined points of a
/// possibly partial function.
pub fn is_c_lipschitz_pairwise(g: &Graph, f: &dyn FunctionOracle, c: &Rational) -> Result<bool> {
    let mut defined = Vec::new();
    for v in g.vertices() {
        if let Value::Defined(q) = f.lookup(v)? {
            defined.push((v, q));
        }
    }
    for (i, (x, fx)) in defined.iter().enumerate() {
        for (y, fy) in &defined[i + 1..] {
            let dist = g.dist_unchecked(*x, *y);
            if dist == UNREACHABLE {
                continue;
            }
            if (fx - fy).abs() > c * &Rational::from_integer(dist as i64) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
