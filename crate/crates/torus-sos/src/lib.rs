//! Certified lower bounds on the global minimum of smooth periodic functions.
//!
//! The crate models a real trigonometric polynomial `f` on the torus `[0, 1)^d`,
//! fits a positive semidefinite model `g_A(x) = phi(x)^* A phi(x)` to it with
//! stochastic first-order methods, and turns any such `A` into a machine-checkable
//! lower bound `c <= min f` whose error terms are certified rather than estimated.
//!
//! Start with the runnable examples in `examples/` (one per capability), or with the
//! `torus-sos` binary, which exposes the same pipeline as `gen`, `solve`, `certify`,
//! and `oracle` subcommands.

pub mod certify;
pub mod cli;
pub mod error;
pub mod features;
mod fftgrid;
pub mod fourier;
pub mod optimizer;
pub mod oracles;
pub mod sampling;

pub use certify::{DetBound, ProbBound, Report, UpperBound, UpperMethod};
pub use error::{Error, Result};
pub use features::{BandLimitedMap, FeatureMap, KernelMap, MomentCache, PsdModel};
pub use fourier::{MultiIndex, TrigPoly, WeightSeq};
pub use optimizer::{SolveOutcome, SolverConfig};
pub use sampling::PiDistribution;
