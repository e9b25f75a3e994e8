//! Local Lipschitz filters for bounded-range functions on hypergrids,
//! hypercubes and small explicit graphs.
//!
//! ```
//! use lipfilter::filter_l0::LocalFilter0;
//! use lipfilter::filter_l1::Budgets;
//! use lipfilter::function::ExprFunction;
//! use lipfilter::{Graph, Rational, Seed, Value, Vertex};
//!
//! # fn main() -> lipfilter::Result<()> {
//! let g = Graph::hypercube(10)?;
//! let range = (Rational::from_integer(0), Rational::from_integer(2));
//! let f = ExprFunction::parse("min(x1+x2+x3, 2)", &g, Some(range))?;
//! let filter = LocalFilter0::new(&g, &f, &Seed::from_u64(7), Budgets::default())?;
//! assert_eq!(filter.query(Vertex(0b1100000000))?, Value::from(2));
//! # Ok(())
//! # }
//! ```

pub mod bench;
pub mod error;
pub mod filter_l0;
pub mod filter_l1;
pub mod function;
pub mod graph;
pub mod hard;
pub mod matching;
pub mod oracles;
pub mod privacy;
pub mod rational;
pub mod seed;
pub mod tester;
pub mod violation;

pub use error::{Error, Result};
pub use function::{FunctionOracle, Value};
pub use graph::{Graph, Vertex};
pub use rational::Rational;
pub use seed::Seed;
