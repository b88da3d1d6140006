//! Dirichlet problems for the constant-coefficient operator
//! `L v = sum_i c_i d_ii v` on a uniform grid.
//!
//! Sign convention: with all `c_i > 0` the discrete `L` is negative definite
//! on fields with zero boundary values, so the conjugate gradient solve runs
//! on `-L`, which is symmetric positive definite.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{GridSpec, ScalarField};

/// Relative algebraic residual target of [`EllipticOperator::solve_dirichlet`].
pub const SOLVE_RTOL: f64 = 1e-10;

const PAR_MIN_LEN: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct EllipticOperator {
    coeffs: Vec<f64>,
    grid: GridSpec,
}

/// Outcome of one conjugate gradient solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Max-norm of `L v - rhs` over interior nodes.
    pub residual: f64,
}

impl EllipticOperator {
    pub fn new(coeffs: Vec<f64>, grid: GridSpec) -> Result<Self> {
        if coeffs.len() != grid.dim() {
            return Err(Error::Dimension {
                expected: grid.dim(),
                actual: coeffs.len(),
            });
        }
        if let Some((index, &value)) = coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| !(**c > 0.0 && c.is_finite()))
        {
            return Err(Error::Ellipticity { index, value });
        }
        Ok(Self { coeffs, grid })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn check_grid(&self, field: &ScalarField) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::Domain("field lives on a different grid".into()));
        }
        Ok(())
    }

    /// `L v` on interior nodes, zero on the boundary. Boundary values of `v`
    /// enter the stencil as known data.
    pub fn apply_l(&self, v: &ScalarField) -> Result<ScalarField> {
        self.check_grid(v)?;
        let mut out = vec![0.0; self.grid.len()];
        self.apply_into(v.values(), &mut out, 1.0);
        ScalarField::from_values(self.grid, out)
    }

    /// `out = sign * L x` on interior nodes, zero elsewhere.
    fn apply_into(&self, x: &[f64], out: &mut [f64], sign: f64) {
        let grid = self.grid;
        let h2 = grid.h() * grid.h();
        let weights: Vec<(usize, f64)> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (grid.stride(i), sign * c / h2))
            .collect();
        out.par_iter_mut()
            .with_min_len(PAR_MIN_LEN)
            .enumerate()
            .for_each(|(p, o)| {
                *o = if grid.is_interior(p) {
                    let x0 = x[p];
                    weights
                        .iter()
                        .map(|&(s, w)| w * (x[p + s] - 2.0 * x0 + x[p - s]))
                        .sum()
                } else {
                    0.0
                };
            });
    }

    /// Solves `L v = rhs` on interior nodes with `v = 0` on the boundary, to a
    /// max-norm residual of `1e-10 * (1 + |rhs|_inf)`.
    pub fn solve_dirichlet(&self, rhs: &ScalarField) -> Result<ScalarField> {
        let scale = interior_max(&self.grid, rhs.values());
        self.solve_with_tolerance(rhs, SOLVE_RTOL * (1.0 + scale))
            .map(|(v, _)| v)
    }

    /// Preconditioned conjugate gradient on `-L v = -rhs` until the true
    /// residual max-norm is at most `abs_tol`. The iteration cap is
    /// `50 * points^n`.
    pub fn solve_with_tolerance(
        &self,
        rhs: &ScalarField,
        abs_tol: f64,
    ) -> Result<(ScalarField, CgStats)> {
        self.check_grid(rhs)?;
        let grid = self.grid;
        let len = grid.len();
        if rhs
            .values()
            .iter()
            .enumerate()
            .any(|(p, v)| grid.is_interior(p) && !v.is_finite())
        {
            return Err(Error::Domain("right-hand side is not finite".into()));
        }
        let h2 = grid.h() * grid.h();
        let inv_diag = h2 / (2.0 * self.coeffs.iter().sum::<f64>());
        let cap = 50 * len;

        // b = -rhs on the interior.
        let b: Vec<f64> = (0..len)
            .map(|p| {
                if grid.is_interior(p) {
                    -rhs.values()[p]
                } else {
                    0.0
                }
            })
            .collect();
        let mut x = vec![0.0; len];
        let mut r = b.clone();
        let mut ax = vec![0.0; len];
        let mut iterations = 0;

        loop {
            // (Re)start from the true residual.
            self.apply_into(&x, &mut ax, -1.0);
            for p in 0..len {
                r[p] = b[p] - ax[p];
            }
            let true_res = max_abs(&r);
            if true_res <= abs_tol {
                return Ok((
                    ScalarField::from_values(grid, x)?,
                    CgStats {
                        iterations,
                        residual: true_res,
                    },
                ));
            }
            if iterations >= cap {
                return Err(Error::Numeric {
                    message: format!("conjugate gradient hit the cap of {cap} iterations"),
                    residual: true_res,
                });
            }

            let mut z: Vec<f64> = r.iter().map(|v| v * inv_diag).collect();
            let mut p_dir = z.clone();
            let mut rz = dot(&r, &z);
            let mut ap = vec![0.0; len];
            let mut stalled = 0;
            let mut best = true_res;
            while iterations < cap {
                iterations += 1;
                self.apply_into(&p_dir, &mut ap, -1.0);
                let pap = dot(&p_dir, &ap);
                if !(pap > 0.0) {
                    break;
                }
                let alpha = rz / pap;
                for p in 0..len {
                    x[p] += alpha * p_dir[p];
                    r[p] -= alpha * ap[p];
                }
                let res = max_abs(&r);
                if res <= 0.5 * abs_tol {
                    break;
                }
                // Recurrence residual can drift below what the true residual
                // reaches; restart if progress stops.
                if res < 0.999 * best {
                    best = res;
                    stalled = 0;
                } else {
                    stalled += 1;
                    if stalled > 50 {
                        break;
                    }
                }
                for p in 0..len {
                    z[p] = r[p] * inv_diag;
                }
                let rz_new = dot(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for p in 0..len {
                    p_dir[p] = z[p] + beta * p_dir[p];
                }
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn interior_max(grid: &GridSpec, values: &[f64]) -> f64 {
    values
        .iter()
        .enumerate()
        .filter(|(p, _)| grid.is_interior(*p))
        .fold(0.0, |m, (_, v)| m.max(v.abs()))
}
