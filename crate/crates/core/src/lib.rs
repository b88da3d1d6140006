//! Smooth local solutions of the prescribed `sigma_k`-curvature equation
//! `sigma_k(kappa) = psi(x)` and the `sigma_k`-Hessian equation
//! `sigma_k(lambda(D^2 u)) = psi(x)`.
//!
//! A solution is built around a quadratic seed `1/2 sum mu_i x_i^2` whose
//! linearization `sum_i sigma_{k-1}(mu|i) d_ii` is uniformly elliptic for any
//! sign of `psi(0)` (see [`mu`]), then corrected by a Picard iteration on a
//! rescaled perturbation (see [`nonlinear`]).

pub mod checks;
pub mod cli;
pub mod elliptic;
pub mod error;
pub mod geometry;
pub mod mu;
pub mod nonlinear;
pub mod psi;
pub mod symfun;

pub use elliptic::EllipticOperator;
pub use error::{Error, Result};
pub use geometry::{CurvatureFrame, GridSpec, Mode, ScalarField};
pub use mu::{construct_mu, convex_mu, gauss_mu, seed_mu, validate_mu, MuVector, ValidationReport};
pub use nonlinear::{
    picard_solve, reconstruct_u, residual_f, verify_solution, verify_summary, SolveReport,
    SolverConfig, VerifySummary,
};
pub use psi::PsiExpr;
pub use symfun::SymMatrix;
