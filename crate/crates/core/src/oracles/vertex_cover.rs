use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Exact minimum vertex cover by branch and bound.
///
/// Branches on a maximum-degree vertex `v` (lowest label on ties): either
/// `v` joins the cover or all of its neighbors do. A greedy matching bounds
/// the remaining cost from below. The first optimum found is returned, so the
/// cover is a deterministic function of the edge set.
pub fn min_vertex_cover<V: Copy + Ord>(edges: &[(V, V)], cap: usize) -> Result<(usize, Vec<V>)> {
    let mut labels: BTreeMap<V, usize> = BTreeMap::new();
    for &(u, v) in edges {
        labels.entry(u).or_insert(0);
        labels.entry(v).or_insert(0);
    }
    let names: Vec<V> = labels.keys().copied().collect();
    for (i, slot) in labels.values_mut().enumerate() {
        *slot = i;
    }
    let mut compact: Vec<(usize, usize)> = edges
        .iter()
        .filter(|(u, v)| u != v)
        .map(|(u, v)| {
            let (a, b) = (labels[u], labels[v]);
            (a.min(b), a.max(b))
        })
        .collect();
    compact.sort_unstable();
    compact.dedup();

    let mut search = Search { n: names.len(), best: None, bound: cap + 1 };
    let mut taken = Vec::new();
    search.branch(&compact, &mut taken);
    let cover = search.best.ok_or(Error::CapExceeded(cap))?;
    let mut out: Vec<V> = cover.into_iter().map(|i| names[i]).collect();
    out.sort_unstable();
    Ok((out.len(), out))
}

struct Search {
    n: usize,
    best: Option<Vec<usize>>,
    /// Only covers strictly smaller than this are interesting.
    bound: usize,
}

fn matching_lower_bound(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut used = vec![false; n];
    let mut size = 0;
    for &(u, v) in edges {
        if !used[u] && !used[v] {
            used[u] = true;
            used[v] = true;
            size += 1;
        }
    }
    size
}

impl Search {
    fn branch(&mut self, edges: &[(usize, usize)], taken: &mut Vec<usize>) {
        if edges.is_empty() {
            if taken.len() < self.bound {
                self.bound = taken.len();
                self.best = Some(taken.clone());
            }
            return;
        }
        if taken.len() + matching_lower_bound(self.n, edges) >= self.bound {
            return;
        }
        let mut degree = vec![0usize; self.n];
        for &(u, v) in edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        let v = (0..self.n).max_by_key(|&i| (degree[i], std::cmp::Reverse(i))).expect("nonempty");

        taken.push(v);
        let rest: Vec<(usize, usize)> = edges.iter().copied().filter(|&(a, b)| a != v && b != v).collect();
        self.branch(&rest, taken);
        taken.pop();

        let neighbors: Vec<usize> = edges
            .iter()
            .filter_map(|&(a, b)| if a == v { Some(b) } else if b == v { Some(a) } else { None })
            .collect();
        if taken.len() + neighbors.len() >= self.bound {
            return;
        }
        let before = taken.len();
        taken.extend(&neighbors);
        let rest: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| !neighbors.contains(&a) && !neighbors.contains(&b))
            .collect();
        self.branch(&rest, taken);
        taken.truncate(before);
    }
}
