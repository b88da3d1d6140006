//! Scaled residual and Picard iteration for `sigma_k(A(u)) = psi`.
//!
//! The unknown is written as
//!
//! ```text
//! u(xt) = 1/2 sum_i mu_i xt_i^2 + eps^5 w(xt / eps^2),   xt = eps^2 x,
//! ```
//!
//! with `x` in `[-1, 1]^n` (solver coordinates) and `w = 0` on the boundary.
//! The derivatives of `u` follow from the chain rule,
//! `d_i u = eps^2 mu_i x_i + eps^3 d_i w` and `d_ij u = mu_i delta_ij + eps d_ij w`,
//! so `u` itself is never differenced by the solver. The scaled residual
//!
//! ```text
//! F(w, eps) = (sigma_k(A) - psi(xt)) / eps
//! ```
//!
//! equals `L w + O(eps)` with `L = sum_i sigma_{k-1}(mu|i) d_ii`, and the
//! iteration `w <- w - L^{-1} F(w)` contracts for small `eps`.

use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::EllipticOperator;
use crate::error::{Error, Result};
use crate::geometry::{sigma_k_field, GridSpec, Mode, ScalarField, Stencil};
use crate::mu::{seed_mu, validate_mu, MuVector};
use crate::psi::PsiExpr;
use crate::symfun::{sigma_k_matrix_unchecked, SymMatrix};

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 50;

/// Consecutive residual increases that count as divergence.
const DIVERGENCE_STREAK: usize = 3;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub mode: Mode,
    pub mu: MuVector,
    pub psi: PsiExpr,
    pub epsilon: f64,
    pub grid: GridSpec,
    pub max_iter: usize,
    pub tol: f64,
}

impl SolverConfig {
    /// Checks dimensions, `eps > 0`, and that `mu` is an admissible seed
    /// for `M = psi(0)`.
    pub fn new(
        mode: Mode,
        mu: MuVector,
        psi: PsiExpr,
        epsilon: f64,
        grid: GridSpec,
    ) -> Result<Self> {
        let cfg = SolverConfig {
            mode,
            mu,
            psi,
            epsilon,
            grid,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Derives `M = psi(0)` and the matching seed (see [`seed_mu`]).
    pub fn seeded(
        k: usize,
        mode: Mode,
        psi: PsiExpr,
        epsilon: f64,
        grid: GridSpec,
    ) -> Result<Self> {
        let m = psi.at_origin()?;
        let mu = seed_mu(grid.dim(), k, m)?;
        Self::new(mode, mu, psi, epsilon, grid)
    }

    pub fn with_tolerance(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    pub fn k(&self) -> usize {
        self.mu.k()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.dim();
        if !(2..=3).contains(&n) {
            return Err(Error::Domain(format!(
                "the solver supports n = 2 or 3, got {n}"
            )));
        }
        if self.mu.n() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: self.mu.n(),
            });
        }
        if self.psi.n_vars() != n {
            return Err(Error::Dimension {
                expected: n,
                actual: self.psi.n_vars(),
            });
        }
        check_epsilon(self.epsilon)?;
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        let report = validate_mu(&self.mu);
        if !report.passed {
            return Err(Error::Domain(format!(
                "seed is not admissible (margin {}, sigma residual {})",
                report.margin, report.sigma_residual
            )));
        }
        let psi0 = self.psi.at_origin()?;
        let m = self.mu.target();
        if (psi0 - m).abs() > 1e-9 * (1.0 + m.abs()) {
            return Err(Error::Domain(format!(
                "seed targets sigma_k = {m} but psi(0) = {psi0}"
            )));
        }
        Ok(())
    }

    /// Physical coordinates `xt = eps^2 x` of a node.
    pub fn physical_coords(&self, flat: usize) -> Vec<f64> {
        let e2 = self.epsilon * self.epsilon;
        self.grid.coords(flat).into_iter().map(|x| e2 * x).collect()
    }

    /// The constant-coefficient linearization `sum_i sigma_{k-1}(mu|i) d_ii`.
    pub fn linear_operator(&self) -> Result<EllipticOperator> {
        EllipticOperator::new(self.mu.coefficients(), self.grid)
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Domain(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub n: usize,
    pub k: usize,
    pub mode: Mode,
    pub epsilon: f64,
    pub mu: Vec<f64>,
    pub iterations: usize,
    /// Max-norm of the scaled residual before each update and after the last.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub final_w_maxnorm: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }

    /// Ratios of consecutive residual norms.
    pub fn contraction_factors(&self) -> Vec<f64> {
        self.residual_history
            .windows(2)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

/// Scaled residual `F(w, eps)` at interior nodes; zero on the boundary.
pub fn residual_f(w: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    check_epsilon(cfg.epsilon)?;
    if w.grid() != &cfg.grid {
        return Err(Error::Domain("w lives on a different grid".into()));
    }
    let grid = cfg.grid;
    let eps = cfg.epsilon;
    let (e2, e3) = (eps * eps, eps * eps * eps);
    let mu = cfg.mu.entries();
    let k = cfg.k();
    let stencil = Stencil::compact(&grid);
    let values = w.values();
    let out: Result<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            if !grid.is_interior(p) {
                return Ok(0.0);
            }
            let x = grid.coords(p);
            let gw = stencil.gradient(&grid, values, p);
            let hw = stencil.hessian(&grid, values, p);
            let grad: Vec<f64> = (0..x.len())
                .map(|i| e2 * mu[i] * x[i] + e3 * gw[i])
                .collect();
            let hess = SymMatrix::from_fn(x.len(), |i, j| {
                let d = if i == j { mu[i] } else { 0.0 };
                d + eps * hw.get(i, j)
            });
            let a = cfg.mode.operator_matrix(&grad, &hess);
            let xt: Vec<f64> = x.iter().map(|xi| e2 * xi).collect();
            let psi = cfg.psi.eval(&xt)?;
            Ok((sigma_k_matrix_unchecked(&a, k) - psi) / eps)
        })
        .collect();
    ScalarField::from_values(grid, out?)
}

/// Frozen-coefficient Picard iteration `w <- w + L^{-1}(-F(w))` from `w = 0`.
///
/// Stops when `|F|_inf <= tol` or after `max_iter` updates. Three
/// consecutive residual increases are reported as [`Error::Diverged`].
pub fn picard_solve(cfg: &SolverConfig) -> Result<(ScalarField, SolveReport)> {
    cfg.validate()?;
    let op = cfg.linear_operator()?;
    let mut w = ScalarField::zeros(cfg.grid);
    let mut f = residual_f(&w, cfg)?;
    let mut norm = f.max_norm();
    let mut history = vec![norm];
    let mut iterations = 0;
    let mut streak = 0;

    while norm > cfg.tol && iterations < cfg.max_iter {
        let mut rhs = f;
        rhs.values_mut().iter_mut().for_each(|v| *v = -*v);
        let cg_tol = (1e-6 * norm).max(1e-2 * cfg.tol);
        let (delta, _) = op.solve_with_tolerance(&rhs, cg_tol)?;
        for (wv, dv) in w.values_mut().iter_mut().zip(delta.values()) {
            *wv += dv;
        }
        iterations += 1;
        f = residual_f(&w, cfg)?;
        let next = f.max_norm();
        history.push(next);
        if !next.is_finite() {
            streak = DIVERGENCE_STREAK;
        } else if next > norm {
            streak += 1;
        } else {
            streak = 0;
        }
        norm = next;
        if streak >= DIVERGENCE_STREAK {
            return Err(Error::Diverged {
                iterations,
                residual: norm,
                suggested_epsilon: cfg.epsilon / 2.0,
            });
        }
    }

    let report = SolveReport {
        n: cfg.n(),
        k: cfg.k(),
        mode: cfg.mode,
        epsilon: cfg.epsilon,
        mu: cfg.mu.entries().to_vec(),
        iterations,
        residual_history: history,
        converged: norm <= cfg.tol,
        final_w_maxnorm: w.max_norm(),
    };
    Ok((w, report))
}

/// Samples of `u(xt) = 1/2 sum mu_i xt_i^2 + eps^5 w(x)` at every node; the
/// node's physical position is [`SolverConfig::physical_coords`].
pub fn reconstruct_u(w: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    if w.grid() != &cfg.grid {
        return Err(Error::Domain("w lives on a different grid".into()));
    }
    let e5 = cfg.epsilon.powi(5);
    let mu = cfg.mu.entries();
    let values = (0..cfg.grid.len())
        .map(|p| {
            let xt = cfg.physical_coords(p);
            let quad: f64 = xt.iter().zip(mu).map(|(x, m)| m * x * x).sum();
            0.5 * quad + e5 * w.values()[p]
        })
        .collect();
    ScalarField::from_values(cfg.grid, values)
}

/// Depth (in nodes) below which [`verify_solution`] reports nothing.
pub const VERIFY_DEPTH: usize = 2;

/// Pointwise `|sigma_k - psi(xt)|` computed by differencing the samples of
/// `u` directly in physical coordinates.
///
/// Uses central differences over two nodes (spacing `2 eps^2 h`), a different
/// discretization from the one the solver enforces, so the result measures
/// discretization error rather than restating the residual. Nodes closer than
/// [`VERIFY_DEPTH`] to the boundary hold zero.
pub fn verify_solution(u: &ScalarField, cfg: &SolverConfig) -> Result<ScalarField> {
    if u.grid() != &cfg.grid {
        return Err(Error::Domain("u lives on a different grid".into()));
    }
    let stencil = Stencil {
        reach: VERIFY_DEPTH,
        spacing: cfg.epsilon * cfg.epsilon * cfg.grid.h(),
    };
    let sk = sigma_k_field(u, cfg.k(), cfg.mode, stencil)?;
    let errs: Result<Vec<f64>> = (0..cfg.grid.len())
        .map(|p| {
            if cfg.grid.depth(p) < VERIFY_DEPTH {
                return Ok(0.0);
            }
            Ok((sk.values()[p] - cfg.psi.eval(&cfg.physical_coords(p))?).abs())
        })
        .collect();
    ScalarField::from_values(cfg.grid, errs?)
}

/// Half-width of the inner box `|x|_inf <= INNER_RADIUS` (solver
/// coordinates) on which [`VerifySummary::inner_max_error`] is taken.
pub const INNER_RADIUS: f64 = 0.5;

/// Aggregates of [`verify_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifySummary {
    /// Max error over nodes at depth `>= VERIFY_DEPTH`.
    pub max_error: f64,
    /// Max error over the inner box. Near the corners of the cube the
    /// Dirichlet problem for `w` is only `C^{1,alpha}`, so this is the
    /// quantity that refines at second order.
    pub inner_max_error: f64,
    pub origin_error: f64,
}

pub fn verify_summary(u: &ScalarField, cfg: &SolverConfig) -> Result<VerifySummary> {
    let err = verify_solution(u, cfg)?;
    let grid = cfg.grid;
    let mut inner: f64 = 0.0;
    for (p, e) in err.values().iter().enumerate() {
        let inside = grid
            .coords(p)
            .iter()
            .all(|x| x.abs() <= INNER_RADIUS + 1e-12);
        if inside && grid.depth(p) >= VERIFY_DEPTH {
            inner = inner.max(*e);
        }
    }
    Ok(VerifySummary {
        max_error: err.max_norm_at_depth(VERIFY_DEPTH),
        inner_max_error: inner,
        origin_error: err.values()[grid.origin()],
    })
}
