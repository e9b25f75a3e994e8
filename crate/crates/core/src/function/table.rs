use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{FunctionOracle, LookupCounter, Value};
use crate::error::{Error, Result};
use crate::graph::{ExplicitGraph, Graph, Vertex};
use crate::rational::Rational;

/// Serialized domain description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainSpec {
    Hypergrid { n: u64, d: usize },
    Hypercube { d: usize },
    Explicit { vertices: u64, edges: Vec<[u64; 2]> },
}

impl DomainSpec {
    pub fn to_graph(&self) -> Result<Graph> {
        match self {
            DomainSpec::Hypergrid { n, d } => Graph::hypergrid(*n, *d),
            DomainSpec::Hypercube { d } => Graph::hypercube(*d),
            DomainSpec::Explicit { vertices, edges } => {
                let edges: Vec<(u64, u64)> = edges.iter().map(|e| (e[0], e[1])).collect();
                Ok(Graph::explicit(ExplicitGraph::new(*vertices, &edges)?))
            }
        }
    }

    pub fn of(g: &Graph) -> Self {
        match g {
            Graph::Hypergrid { n, d } => DomainSpec::Hypergrid { n: *n, d: *d },
            Graph::Hypercube { d } => DomainSpec::Hypercube { d: *d },
            Graph::Explicit(_) => DomainSpec::Explicit {
                vertices: g.num_vertices(),
                edges: g.edges().iter().map(|(u, v)| [u.0, v.0]).collect(),
            },
        }
    }
}

/// On-disk function table; rationals are `"p/q"` strings, `"?"` is undefined.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableFile {
    pub domain: DomainSpec,
    pub r: Rational,
    pub values: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default: Option<Value>,
}

enum Storage {
    Dense(Vec<Value>),
    Sparse { map: FxHashMap<u64, Value>, default: Value },
}

pub struct TableFunction {
    num_vertices: u64,
    storage: Storage,
    bounds: Option<(Rational, Rational)>,
    counter: LookupCounter,
}

fn check_range(value: &Value, bounds: &Option<(Rational, Rational)>) -> Result<()> {
    if let (Value::Defined(q), Some((lo, hi))) = (value, bounds) {
        if q < lo || q > hi {
            return Err(Error::RangeViolation { value: q.to_string(), lo: lo.to_string(), hi: hi.to_string() });
        }
    }
    Ok(())
}

impl TableFunction {
    /// One value per vertex in index order; every defined value must lie in `bounds`.
    pub fn dense(g: &Graph, bounds: Option<(Rational, Rational)>, values: Vec<Value>) -> Result<Self> {
        if values.len() as u64 != g.num_vertices() {
            return Err(Error::InvalidParam(format!(
                "table has {} values for {} vertices",
                values.len(),
                g.num_vertices()
            )));
        }
        for v in &values {
            check_range(v, &bounds)?;
        }
        Ok(Self { num_vertices: g.num_vertices(), storage: Storage::Dense(values), bounds, counter: LookupCounter::default() })
    }

    pub fn sparse(
        g: &Graph,
        bounds: Option<(Rational, Rational)>,
        map: FxHashMap<u64, Value>,
        default: Value,
    ) -> Result<Self> {
        check_range(&default, &bounds)?;
        for (k, v) in &map {
            g.check(Vertex(*k))?;
            check_range(v, &bounds)?;
        }
        Ok(Self {
            num_vertices: g.num_vertices(),
            storage: Storage::Sparse { map, default },
            bounds,
            counter: LookupCounter::default(),
        })
    }

    /// A total table with range `[0, r]`.
    pub fn from_values(g: &Graph, r: Rational, values: Vec<Rational>) -> Result<Self> {
        Self::dense(g, Some((Rational::zero(), r)), values.into_iter().map(Value::Defined).collect())
    }

    pub fn from_fn(g: &Graph, r: Rational, f: impl Fn(Vertex) -> Rational) -> Result<Self> {
        Self::from_values(g, r, g.vertices().map(f).collect())
    }

    /// Snapshot of another oracle (one lookup per vertex on it).
    pub fn from_oracle(g: &Graph, f: &dyn FunctionOracle) -> Result<Self> {
        Self::dense(g, f.bounds(), super::materialize(g, f)?)
    }

    pub fn from_file(file: &TableFile) -> Result<(Graph, Self)> {
        let g = file.domain.to_graph()?;
        let bounds = Some((Rational::zero(), file.r.clone()));
        if file.r.is_negative() {
            return Err(Error::InvalidParam(format!("negative range diameter {}", file.r)));
        }
        let mut map = FxHashMap::default();
        for (key, value) in &file.values {
            map.insert(g.decode(key)?.0, value.clone());
        }
        let table = match &file.default {
            Some(default) => Self::sparse(&g, bounds, map, default.clone())?,
            None => {
                let values = g
                    .vertices()
                    .map(|v| {
                        map.remove(&v.0)
                            .ok_or_else(|| Error::Format(format!("no value for vertex {} and no default", g.encode(v))))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Self::dense(&g, bounds, values)?
            }
        };
        Ok((g, table))
    }

    pub fn from_json(text: &str) -> Result<(Graph, Self)> {
        Self::from_file(&serde_json::from_str(text)?)
    }

    /// Dense serialization; `r` is the upper bound of the declared range.
    pub fn to_file(&self, g: &Graph) -> TableFile {
        let r = self.bounds.as_ref().map(|(_, hi)| hi.clone()).unwrap_or_default();
        match &self.storage {
            Storage::Dense(values) => TableFile {
                domain: DomainSpec::of(g),
                r,
                values: g.vertices().map(|v| (g.encode(v), values[v.0 as usize].clone())).collect(),
                default: None,
            },
            Storage::Sparse { map, default } => TableFile {
                domain: DomainSpec::of(g),
                r,
                values: map.iter().map(|(k, v)| (g.encode(Vertex(*k)), v.clone())).collect(),
                default: Some(default.clone()),
            },
        }
    }

    fn get(&self, x: Vertex) -> &Value {
        match &self.storage {
            Storage::Dense(values) => &values[x.0 as usize],
            Storage::Sparse { map, default } => map.get(&x.0).unwrap_or(default),
        }
    }
}

impl FunctionOracle for TableFunction {
    fn lookup_raw(&self, x: Vertex) -> Result<Value> {
        if x.0 >= self.num_vertices {
            return Err(Error::OutOfDomain(format!("{x:?}")));
        }
        self.counter.tick();
        Ok(self.get(x).clone())
    }

    fn bounds(&self) -> Option<(Rational, Rational)> {
        self.bounds.clone()
    }

    fn lookups(&self) -> u64 {
        self.counter.get()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_read_partial() {
        let g = Graph::hypercube(2).unwrap();
        let text = r#"{"domain": {"kind": "hypercube", "d": 2}, "r": "1",
                       "values": {"00": "1/2", "01": "?"}, "default": "0"}"#;
        let (g2, f) = TableFunction::from_json(text).unwrap();
        assert_eq!(g2, g);
        assert_eq!(f.lookup(g.decode("01").unwrap()).unwrap(), Value::Undefined);
        assert_eq!(f.lookup(g.decode("00").unwrap()).unwrap(), Value::Defined(Rational::new(1, 2)));
        assert_eq!(f.lookup(g.decode("11").unwrap()).unwrap(), Value::from(0));
        assert_eq!(f.lookups(), 3);
    }

    #[test]
    fn load_rejects_out_of_range() {
        let text = r#"{"domain": {"kind": "hypergrid", "n": 2, "d": 1}, "r": "3", "values": {"1": "0", "2": "4"}}"#;
        assert!(matches!(TableFunction::from_json(text), Err(Error::RangeViolation { .. })));
        let text = r#"{"domain": {"kind": "hypergrid", "n": 2, "d": 1}, "r": "3", "values": {"1": "0"}}"#;
        assert!(matches!(TableFunction::from_json(text), Err(Error::Format(_))));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let g = Graph::hypergrid(3, 2).unwrap();
        let f = TableFunction::from_fn(&g, Rational::from_integer(5), |v| Rational::new(v.0 as i64, 3)).unwrap();
        let text = serde_json::to_string(&f.to_file(&g)).unwrap();
        let (g2, f2) = TableFunction::from_json(&text).unwrap();
        assert_eq!(g, g2);
        for v in g.vertices() {
            assert_eq!(f.lookup(v).unwrap(), f2.lookup(v).unwrap());
        }
        assert_eq!(serde_json::to_string(&f2.to_file(&g2)).unwrap(), text);
    }

    #[test]
    fn explicit_domain_round_trip() {
        let spec = DomainSpec::Explicit { vertices: 3, edges: vec![[0, 1], [1, 2]] };
        let g = spec.to_graph().unwrap();
        assert_eq!(DomainSpec::of(&g), spec);
    }
}
