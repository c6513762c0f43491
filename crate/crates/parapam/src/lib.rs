//! Pseudospectral paracontrolled calculus on the 2-torus.
//!
//! The crate provides, bottom up:
//!
//! - [`field`] / [`spectral`]: scalar fields on the periodic n×n grid,
//!   Fourier transforms under the convention `f(x) = Σ_k f̂(k) e^{ik·x}`,
//!   Fourier multipliers (heat semigroup, Laplacian and its zero-mean
//!   inverse) and two-thirds-rule dealiasing;
//! - [`lp`]: Littlewood–Paley blocks with an exactly normalized partition of
//!   unity, Hölder–Besov and parabolic norms, and an empirical
//!   regularity-exponent estimator;
//! - [`para`]: Bony paraproducts, the resonant term, the time-smoothed
//!   modified paraproduct and the corrector/commutator operators;
//! - [`noise`]: seeded white noise, heat-kernel mollification, the
//!   logarithmically diverging renormalization constant and the enhanced
//!   noise `(ξ^ε, Π(X^ε, ξ^ε) − c^ε)`;
//! - [`solver`]: stabilized IMEX (and RK4) integration of the renormalized
//!   quasilinear equation `∂_t u − a(u)Δu = g(u)ξ^ε − c^ε{g'g/a − a'g²/a²}(u)`
//!   plus the transformed scalar equation as an independent cross-check;
//! - [`diagnostics`]: the paracontrolled decomposition `u = Π̄_{u'}X + u^♯`
//!   of numerical solutions and its weighted norms;
//! - [`config`] / [`harness`]: the `parapam` CLI with noise, solve,
//!   converge, diagnose and proptest commands.

pub mod config;
pub mod diagnostics;
pub mod field;
pub mod harness;
pub mod lp;
pub mod noise;
pub mod para;
pub mod solver;
pub mod spectral;

pub use config::{NoiseMode, RunConfig};
pub use field::{GridSpec, RealField, SpectralField};
pub use lp::{DyadicPartition, Trajectory};
pub use noise::{enhance, mollify, renorm_constant, sample_white_noise, EnhancedNoise};
pub use para::{bony, modified_paraproduct, paraproduct, resonant};
pub use solver::{coefficient_registry, integrate, integrate_transformed, ModelCoefficients, SolverConfig};
