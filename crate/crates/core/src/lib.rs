//! Expander decomposition in a simulated CONGEST network.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: multigraphs with degree-preserving loops, exact cut
//!   statistics and exhaustive oracles;
//! * [`congest`]: the synchronous round engine and tree primitives;
//! * [`walks`]: truncated lazy random walks, generic over [`Scalar`];
//! * [`sparse_cut`]: the nibble family and the balanced sparse cut;
//! * [`low_diam`]: exponential-shift clustering and the high-probability
//!   low-diameter decomposition;
//! * [`expander`]: the two-phase decomposition;
//! * [`triangles`]: triangle enumeration on top of the decomposition;
//! * [`verify`], [`bench`], [`config`]: checking and running experiments.
//!
//! ```
//! use expander_core::congest::{Backend, Network};
//! use expander_core::expander::{expander_decomposition, DecompConfig};
//! use expander_core::generators::cliques_chain;
//! use expander_core::rng::seeded;
//! use expander_core::walks::Profile;
//!
//! # fn main() -> expander_core::Result<()> {
//! let g = cliques_chain(3, 12, 1)?;
//! let mut net = Network::for_graph(&g).with_backend(Backend::Charged);
//! let cfg = DecompConfig::for_profile(Profile::Desk);
//! let d = expander_decomposition(&mut net, &g, 0.5, 2, &cfg, &mut seeded(7))?;
//! assert!(d.removed.total() as f64 <= 0.5 * g.m() as f64);
//! assert!(net.ledger().total().rounds > 0);
//! # Ok(())
//! # }
//! ```

pub mod bench;
pub mod config;
pub mod congest;
pub mod error;
pub mod expander;
pub mod generators;
pub mod graph;
pub mod low_diam;
pub mod rng;
pub mod scalar;
pub mod sparse_cut;
pub mod triangles;
pub mod verify;
pub mod walks;

pub use error::{Error, Result};
pub use graph::{Cut, Graph, Subgraph, VertexId};
pub use scalar::{Fixed, Scalar};

/// Exact rational numbers for oracle-grade walk computations.
pub type Rational = num_rational::BigRational;
/// Walk state in the fixed-point wire format used by the distributed code.
pub type FixedWalkState = walks::TruncatedWalkState<Fixed>;
/// Walk state in double precision.
pub type FloatWalkState = walks::TruncatedWalkState<f64>;
/// Walk state in exact rational arithmetic.
pub type ExactWalkState = walks::TruncatedWalkState<Rational>;
