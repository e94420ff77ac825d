//! Computational measure theory and harmonic analysis on the space of
//! countable labelled graphs `{0,1}^{K_V}`.
//!
//! Edges of the complete graph on countably many vertices are enumerated
//! by the colexicographic labelling ([`labelling`]), so a graph is an
//! element of the Cantor group of 0/1 sequences. On that group the crate
//! provides:
//!
//! - exact graph values and cylinder sets with the group and ring
//!   structure ([`graph`]),
//! - metrics, the exact dyadic bijection onto `[0,1]`, the Cantor-set
//!   embedding, and summable/supremum/multiplicative norms ([`metrics`],
//!   [`dyadic`]),
//! - Bernoulli product measures with exact rational cylinder and ball
//!   measures and counter-based reproducible sampling ([`measures`],
//!   [`rng`]),
//! - closed-form and Monte Carlo expectations plus the change of
//!   variables onto the unit interval ([`expectations`]),
//! - Walsh characters, the fast Walsh–Hadamard transform, and Bochner
//!   positive-definiteness checks ([`harmonic`]).
//!
//! The `graphspace` binary exposes the same functionality as seeded,
//! manifest-emitting commands ([`manifest`]).

pub mod dyadic;
pub mod expectations;
pub mod graph;
pub mod harmonic;
pub mod labelling;
pub mod manifest;
pub mod measures;
pub mod metrics;
pub mod rng;

pub use dyadic::{DyadicValue, Tail};
pub use graph::{Ball, BallKind, CylinderSet, GraphKind, GraphRepr, TruncatedAtom};
pub use labelling::{Edge, EdgeIndex};
pub use measures::{ProbabilityAssignment, SampleBatch};
