//! Logarithmic Q-learning next to regular Q-learning on small benchmark
//! MDPs, with exact dynamic-programming oracles, diagnostic metrics and a
//! reproducible sweep harness.
//!
//! ```
//! use loggap::envs::{make_chain, LEFT};
//! use loggap::oracle::value_iteration;
//!
//! let mdp = make_chain(50, 0.25, 1.0, -1.0).unwrap();
//! let q = value_iteration(&mdp, 0.9, 1e-10).unwrap();
//! assert_eq!(q.greedy(1), LEFT);
//! ```

pub mod agents;
pub mod envs;
pub mod error;
pub mod features;
pub mod harness;
pub mod kv;
pub mod mapping;
pub mod metrics;
pub mod oracle;
pub mod rng;

pub use error::{Error, Result};
