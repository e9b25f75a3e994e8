//! Seeded random-greedy maximal matching, answered locally.
//!
//! Edges are ranked by a keyed hash. An edge is in the matching iff no
//! adjacent edge of smaller rank is, which defines the matching the global
//! greedy pass in rank order would build. A query explores only the
//! decreasing-rank chains around the queried vertex.

use std::sync::{Arc, Mutex};

use rustc_hash::FxHashMap;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Graph, Vertex};
use crate::seed::Seed;

/// Default cap on fresh edge evaluations per query.
pub const DEFAULT_EDGE_BUDGET: u64 = 1 << 20;

/// Undirected edge with endpoints in canonical order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId(Vertex, Vertex);

impl EdgeId {
    pub fn new(u: Vertex, v: Vertex) -> Self {
        if u <= v {
            EdgeId(u, v)
        } else {
            EdgeId(v, u)
        }
    }

    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.0, self.1)
    }

    pub fn other(&self, x: Vertex) -> Vertex {
        if self.0 == x {
            self.1
        } else {
            self.0
        }
    }
}

/// Total order on edges: hash rank, then `EdgeId`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RankKey(u128, EdgeId);

impl RankKey {
    pub fn rank(&self) -> u128 {
        self.0
    }
}

/// `rank(ρ, e)`: first 16 bytes of `SHA256("rank" ‖ ρ ‖ u ‖ v)`.
#[derive(Clone)]
pub struct EdgeRanker {
    prefix: Sha256,
}

impl EdgeRanker {
    pub fn new(seed: &Seed) -> Self {
        let mut prefix = Sha256::new();
        prefix.update(b"rank");
        prefix.update(seed.bytes());
        Self { prefix }
    }

    pub fn rank(&self, e: EdgeId) -> u128 {
        let (u, v) = e.endpoints();
        let mut h = self.prefix.clone();
        h.update(u.0.to_be_bytes());
        h.update(v.0.to_be_bytes());
        let digest = h.finalize();
        u128::from_be_bytes(digest[..16].try_into().expect("16 bytes"))
    }

    pub fn key(&self, e: EdgeId) -> RankKey {
        RankKey(self.rank(e), e)
    }
}

/// Adjacency access for the matching; must be symmetric.
pub trait LocalGraph: Send + Sync {
    fn local_neighbors(&self, x: Vertex) -> Result<Arc<[Vertex]>>;
}

impl LocalGraph for Graph {
    fn local_neighbors(&self, x: Vertex) -> Result<Arc<[Vertex]>> {
        Ok(self.neighbors(x)?.into())
    }
}

impl<T: LocalGraph + ?Sized> LocalGraph for &T {
    fn local_neighbors(&self, x: Vertex) -> Result<Arc<[Vertex]>> {
        (**self).local_neighbors(x)
    }
}

struct Frame {
    edge: EdgeId,
    lower: Vec<EdgeId>,
    next: usize,
}

/// Local maximal-matching oracle over a [`LocalGraph`].
///
/// Verdicts are memoized per edge; the memo only ever holds fully resolved
/// verdicts, so answers never depend on which queries came first.
pub struct MatchingLca<G> {
    graph: G,
    ranker: EdgeRanker,
    budget: u64,
    memo: Mutex<FxHashMap<EdgeId, bool>>,
}

impl<G: LocalGraph> MatchingLca<G> {
    pub fn new(graph: G, seed: &Seed, budget: u64) -> Self {
        Self { graph, ranker: EdgeRanker::new(seed), budget, memo: Mutex::new(FxHashMap::default()) }
    }

    pub fn graph(&self) -> &G {
        &self.graph
    }

    pub fn ranker(&self) -> &EdgeRanker {
        &self.ranker
    }

    fn incident_by_rank(&self, x: Vertex) -> Result<Vec<(RankKey, EdgeId)>> {
        let mut out: Vec<(RankKey, EdgeId)> = self
            .graph
            .local_neighbors(x)?
            .iter()
            .map(|&y| {
                let e = EdgeId::new(x, y);
                (self.ranker.key(e), e)
            })
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    fn frame(&self, edge: EdgeId) -> Result<Frame> {
        let key = self.ranker.key(edge);
        let (u, v) = edge.endpoints();
        let mut lower: Vec<(RankKey, EdgeId)> = Vec::new();
        for w in [u, v] {
            for (k, e) in self.incident_by_rank(w)? {
                if k >= key {
                    break;
                }
                lower.push((k, e));
            }
        }
        lower.sort_unstable();
        Ok(Frame { edge, lower: lower.into_iter().map(|(_, e)| e).collect(), next: 0 })
    }

    fn cached(&self, e: EdgeId) -> Option<bool> {
        self.memo.lock().expect("memo lock").get(&e).copied()
    }

    fn resolve(&self, e: EdgeId, matched: bool) {
        self.memo.lock().expect("memo lock").insert(e, matched);
    }

    /// Whether `e` is in the matching. `e` must be an edge of the graph.
    pub fn is_matched(&self, e: EdgeId) -> Result<bool> {
        if let Some(m) = self.cached(e) {
            return Ok(m);
        }
        let mut fresh = 1u64;
        let mut stack = vec![self.frame(e)?];
        while let Some(top) = stack.last_mut() {
            if top.next == top.lower.len() {
                self.resolve(top.edge, true);
                stack.pop();
                continue;
            }
            let child = top.lower[top.next];
            match self.cached(child) {
                Some(true) => {
                    self.resolve(top.edge, false);
                    stack.pop();
                }
                Some(false) => top.next += 1,
                None => {
                    fresh += 1;
                    if fresh > self.budget {
                        return Err(Error::BudgetExceeded { what: "matching exploration", budget: self.budget });
                    }
                    let frame = self.frame(child)?;
                    stack.push(frame);
                }
            }
        }
        Ok(self.cached(e).expect("resolved"))
    }

    /// The vertex matched to `x`, if any.
    pub fn match_of(&self, x: Vertex) -> Result<Option<Vertex>> {
        for (_, e) in self.incident_by_rank(x)? {
            if self.is_matched(e)? {
                return Ok(Some(e.other(x)));
            }
        }
        Ok(None)
    }
}

/// How a global reference pass picks its maximal matching.
#[derive(Clone, Copy, Debug)]
pub enum Matcher {
    /// Greedy over edges in canonical `EdgeId` order.
    Greedy,
    /// Greedy over edges in seeded rank order (same matching as the LCA).
    RandomGreedy(Seed),
    /// Query the LCA at every vertex.
    Lca { seed: Seed, budget: u64 },
}

/// Greedy maximal matching visiting edges in the given order.
pub fn greedy_matching(edges: impl IntoIterator<Item = EdgeId>) -> FxHashMap<Vertex, Vertex> {
    let mut mate = FxHashMap::default();
    for e in edges {
        let (u, v) = e.endpoints();
        if !mate.contains_key(&u) && !mate.contains_key(&v) {
            mate.insert(u, v);
            mate.insert(v, u);
        }
    }
    mate
}

/// Matching on an explicit edge set (all vertices that can appear are
/// endpoints of `edges`), returned as a mate map.
pub fn global_matching<G: LocalGraph>(
    graph: G,
    vertices: &[Vertex],
    edges: &[EdgeId],
    matcher: Matcher,
) -> Result<FxHashMap<Vertex, Vertex>> {
    match matcher {
        Matcher::Greedy => {
            let mut sorted = edges.to_vec();
            sorted.sort_unstable();
            Ok(greedy_matching(sorted))
        }
        Matcher::RandomGreedy(seed) => {
            let ranker = EdgeRanker::new(&seed);
            let mut keyed: Vec<RankKey> = edges.iter().map(|&e| ranker.key(e)).collect();
            keyed.sort_unstable();
            Ok(greedy_matching(keyed.into_iter().map(|k| k.1)))
        }
        Matcher::Lca { seed, budget } => {
            let lca = MatchingLca::new(graph, &seed, budget);
            let mut mate = FxHashMap::default();
            for &x in vertices {
                if let Some(y) = lca.match_of(x)? {
                    mate.insert(x, y);
                }
            }
            Ok(mate)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ExplicitGraph;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn explicit(n: u64, edges: &[(u64, u64)]) -> Graph {
        Graph::explicit(ExplicitGraph::new(n, edges).unwrap())
    }

    fn all_matches<G: LocalGraph>(lca: &MatchingLca<G>, n: u64) -> Vec<Option<Vertex>> {
        (0..n).map(|x| lca.match_of(Vertex(x)).unwrap()).collect()
    }

    #[test]
    fn single_edge_always_matched() {
        let g = explicit(2, &[(0, 1)]);
        for s in 0..20 {
            let lca = MatchingLca::new(&g, &Seed::from_u64(s), 100);
            assert_eq!(lca.match_of(Vertex(0)).unwrap(), Some(Vertex(1)));
            assert_eq!(lca.match_of(Vertex(1)).unwrap(), Some(Vertex(0)));
        }
    }

    #[test]
    fn edgeless_graph_has_no_matches() {
        let g = explicit(5, &[]);
        let lca = MatchingLca::new(&g, &Seed::from_u64(0), 100);
        assert!(all_matches(&lca, 5).iter().all(Option::is_none));
    }

    #[test]
    fn path_follows_lower_rank() {
        let g = explicit(3, &[(0, 1), (1, 2)]);
        let ab = EdgeId::new(Vertex(0), Vertex(1));
        let bc = EdgeId::new(Vertex(1), Vertex(2));
        let mut seen = [false, false];
        for s in 0..40 {
            let seed = Seed::from_u64(s);
            let ranker = EdgeRanker::new(&seed);
            let lca = MatchingLca::new(&g, &seed, 100);
            let got = all_matches(&lca, 3);
            if ranker.key(ab) < ranker.key(bc) {
                seen[0] = true;
                assert_eq!(got, vec![Some(Vertex(1)), Some(Vertex(0)), None]);
            } else {
                seen[1] = true;
                assert_eq!(got, vec![None, Some(Vertex(2)), Some(Vertex(1))]);
            }
        }
        assert_eq!(seen, [true, true]);
    }

    #[test]
    fn rank_is_canonical_and_deterministic() {
        let ranker = EdgeRanker::new(&Seed::from_u64(9));
        let e = EdgeId::new(Vertex(4), Vertex(2));
        assert_eq!(e, EdgeId::new(Vertex(2), Vertex(4)));
        assert_eq!(ranker.rank(e), ranker.rank(EdgeId::new(Vertex(2), Vertex(4))));
        assert_ne!(ranker.key(e), ranker.key(EdgeId::new(Vertex(2), Vertex(5))));
    }

    #[test]
    fn budget_is_enforced() {
        // a long path forces long decreasing-rank chains for some seed
        let edges: Vec<(u64, u64)> = (0..200).map(|i| (i, i + 1)).collect();
        let g = explicit(201, &edges);
        let lca = MatchingLca::new(&g, &Seed::from_u64(1), 1);
        let failed = (0..201).any(|x| matches!(lca.match_of(Vertex(x)), Err(Error::BudgetExceeded { .. })));
        assert!(failed);
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: u64, p: f64) -> (Graph, Vec<EdgeId>) {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let ids = edges.iter().map(|&(u, v)| EdgeId::new(Vertex(u), Vertex(v))).collect();
        (explicit(n, &edges), ids)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn valid_maximal_symmetric_and_equal_to_global(graph_seed in any::<u64>(), seed in any::<u64>(), n in 2u64..40, p in 0.02f64..0.4) {
            let mut rng = ChaCha8Rng::seed_from_u64(graph_seed);
            let (g, edges) = random_graph(&mut rng, n, p);
            let seed = Seed::from_u64(seed);
            let lca = MatchingLca::new(&g, &seed, DEFAULT_EDGE_BUDGET);
            let got = all_matches(&lca, n);
            for (x, m) in got.iter().enumerate() {
                if let Some(y) = m {
                    prop_assert_eq!(got[y.0 as usize], Some(Vertex(x as u64)));
                    prop_assert!(g.neighbors(Vertex(x as u64)).unwrap().contains(y));
                }
            }
            for e in &edges {
                let (u, v) = e.endpoints();
                prop_assert!(got[u.0 as usize].is_some() || got[v.0 as usize].is_some());
            }
            let vertices: Vec<Vertex> = g.vertices().collect();
            let global = global_matching(&g, &vertices, &edges, Matcher::RandomGreedy(seed)).unwrap();
            for x in 0..n {
                prop_assert_eq!(global.get(&Vertex(x)).copied(), got[x as usize]);
            }
        }

        #[test]
        fn query_order_is_irrelevant(graph_seed in any::<u64>(), seed in any::<u64>(), perm_seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(graph_seed);
            let (g, _) = random_graph(&mut rng, 30, 0.15);
            let seed = Seed::from_u64(seed);
            let reference = all_matches(&MatchingLca::new(&g, &seed, DEFAULT_EDGE_BUDGET), 30);
            let mut order: Vec<u64> = (0..30).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
            let lca = MatchingLca::new(&g, &seed, DEFAULT_EDGE_BUDGET);
            for &x in &order {
                prop_assert_eq!(lca.match_of(Vertex(x)).unwrap(), reference[x as usize]);
            }
        }
    }

    #[test]
    fn hypercube_matching_is_valid_and_maximal() {
        let g = Graph::hypercube(12).unwrap();
        let lca = MatchingLca::new(&g, &Seed::from_u64(5), DEFAULT_EDGE_BUDGET);
        let got = all_matches(&lca, g.num_vertices());
        for (u, v) in g.edges() {
            assert!(got[u.0 as usize].is_some() || got[v.0 as usize].is_some());
        }
        for (x, m) in got.iter().enumerate() {
            if let Some(y) = m {
                assert_eq!(got[y.0 as usize], Some(Vertex(x as u64)));
            }
        }
    }

    #[test]
    fn greedy_canonical_order() {
        let g = explicit(4, &[(0, 1), (1, 2), (2, 3)]);
        let edges: Vec<EdgeId> = g.edges().iter().map(|&(u, v)| EdgeId::new(u, v)).collect();
        let vertices: Vec<Vertex> = g.vertices().collect();
        let mate = global_matching(&g, &vertices, &edges, Matcher::Greedy).unwrap();
        assert_eq!(mate.get(&Vertex(0)), Some(&Vertex(1)));
        assert_eq!(mate.get(&Vertex(2)), Some(&Vertex(3)));
    }
}
