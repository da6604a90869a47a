//! Two-colour urn with a random mixture of Friedman and Pólya replacement.
//!
//! * [`urn`]: parameters, state, transition kernel, reproducible sampling.
//! * [`exact`]: exact finite-step laws by dynamic programming.
//! * [`theory`]: the affine contraction `ell`, its envelope and the
//!   sign classification of `theta`.
//! * [`mc`]: parallel replicate engine, histograms and convergence curves.
//! * [`stats`]: empirical CDF, Kolmogorov-Smirnov distance, incomplete beta.
//! * [`validate`]: Monte Carlo against the exact oracle, plus KS checks.
//! * [`cli`]: the `mixed-urn` command line.

pub mod cli;
pub mod error;
pub mod exact;
pub mod mc;
pub mod stats;
pub mod theory;
pub mod urn;
pub mod validate;

pub use error::{Error, ParamError, Result};
pub use exact::{exact_distribution, ExactDistribution, RationalDistribution, XPoint};
pub use mc::{
    convergence_curve, run_replicates, ConvergenceCurve, Histogram, MomentAccumulator,
    ReplicateSummary,
};
pub use theory::{analyze, Case, TheoryReport};
pub use urn::{
    new_urn, run_trajectory, step, transition_kernel, Colour, DrawEvent, MixingProb, RngStream,
    Scheme, UrnParams, UrnState,
};
