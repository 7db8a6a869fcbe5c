//! Fully dynamic all-pairs shortest paths on directed graphs under vertex
//! insertions and deletions.
//!
//! The engine keeps a stack of layers, each covering shortest paths through a
//! center set, and answers every update by recovering broken paths from
//! surviving ones. Randomness is seeded, so runs are reproducible.
//!
//! ```
//! use dynapsp::{Config, Engine, Graph, Update};
//!
//! let mut g = Graph::new(3);
//! g.set_edge(0, 1, 4);
//! g.set_edge(1, 2, -1);
//! let mut e = Engine::build(g, Config::default()).unwrap();
//! assert_eq!(e.distance(0, 2).weight(), 3);
//!
//! e.apply_update(&Update::Delete(1)).unwrap();
//! e.apply_update(&Update::Insert { v: 1, in_edges: vec![(0, 1)], out_edges: vec![(2, 1)] }).unwrap();
//! assert_eq!(e.distance(0, 2).weight(), 2);
//! ```

pub mod engine;
pub mod error;
pub mod graph;
pub mod hop;
pub mod layer;
pub mod long_paths;
pub mod oracle;
pub mod path;
pub mod rng;
pub mod update;
pub mod sssp;
pub mod trace;
pub mod weight;

pub use error::{Error, Result};
pub use weight::{Weight, INF};
pub use engine::{Config, Distance, Engine, LongPaths, Mode, Update};
pub use graph::Graph;
