//! Random-cluster and Potts models on finite graphs.
//!
//! The crate couples every random-cluster chain it runs to one seed-addressed
//! source of Poisson update clocks. Chains started from the past at different
//! parameters, boundary conditions and volumes then satisfy all the classical
//! stochastic-domination inequalities pointwise, and monotone coupling from
//! the past turns the same dynamics into an exact sampler. A brute-force
//! enumeration oracle ([`exact`]) checks every sampler on small instances.
//!
//! Module map:
//!
//! * [`graph`]: finite graphs, exhaustion volumes, boundaries, automorphisms.
//! * [`exact`]: enumeration of random-cluster and Potts laws, Holley and
//!   Strassen checks.
//! * [`randomness`]: counter-based update streams and the vertex field.
//! * [`dynamics`]: the heat-bath edge kernel and connectivity queries.
//! * [`cftp`]: from-the-past runs, exact sampling, the grand coupling.
//! * [`potts`]: spin assignment for clusters and the equivariant factor map.
//! * [`stats`]: estimators and exploratory probes.
//! * [`config`]: run configuration shared by the command-line tool.
//! * [`verify`]: the oracle-versus-sampler suite behind `randcluster verify`.

pub mod cftp;
pub mod config;
pub mod dynamics;
mod error;
pub mod exact;
pub mod graph;
pub mod potts;
pub mod randomness;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use exact::{Distribution, EdgeConfig};
pub use graph::{Exhaustion, Graph, Host};

/// Version recorded in every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
