//! Uniform grids on `[-1, 1]^n`, finite-difference derivatives, and the
//! principal-curvature matrix of a graph `(x, u(x))`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symfun::{jacobi_eigenvalues, sigma_k_matrix, SymMatrix};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Which matrix is fed to `sigma_k`: the curvature matrix of the graph or the
/// plain Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Curvature,
    Hessian,
}

impl Mode {
    pub fn operator_matrix(self, grad: &[f64], hess: &SymMatrix) -> SymMatrix {
        match self {
            Mode::Hessian => hess.clone(),
            Mode::Curvature => curvature_matrix(grad, hess).a,
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curvature" => Ok(Mode::Curvature),
            "hessian" => Ok(Mode::Hessian),
            other => Err(Error::Domain(format!(
                "unknown mode `{other}` (expected `curvature` or `hessian`)"
            ))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Curvature => "curvature",
            Mode::Hessian => "hessian",
        })
    }
}

/// `points^n` nodes on `[-1, 1]^n` with spacing `h = 2 / (points - 1)`.
///
/// `points` is odd so the origin is a node. Nodes are stored row-major: the
/// last axis varies fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    points: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(n: usize, points: usize) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::Domain(format!(
                "dimension {n} outside [1, {MAX_DIM}]"
            )));
        }
        if points < 5 || points.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "points per axis must be odd and at least 5, got {points}"
            )));
        }
        Ok(Self {
            n,
            points,
            h: 2.0 / (points - 1) as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flat-index offset of one step along `axis`.
    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.points.pow((self.n - 1 - axis) as u32)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.n];
        let mut r = flat;
        for axis in (0..self.n).rev() {
            idx[axis] = r % self.points;
            r /= self.points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                actual: idx.len(),
            });
        }
        let mut flat = 0;
        for &i in idx {
            if i >= self.points {
                return Err(Error::Domain(format!(
                    "node index {i} outside [0, {})",
                    self.points
                )));
            }
            flat = flat * self.points + i;
        }
        Ok(flat)
    }

    /// Solver coordinates `x_i = -1 + h * idx_i`.
    pub fn coords(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .into_iter()
            .map(|i| self.coord(i))
            .collect()
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        // Mirror so that symmetric nodes get bit-identical magnitudes.
        let mid = (self.points - 1) / 2;
        if i >= mid {
            (i - mid) as f64 * self.h
        } else {
            -((mid - i) as f64 * self.h)
        }
    }

    /// Index of the origin node.
    pub fn origin(&self) -> usize {
        let mid = (self.points - 1) / 2;
        (0..self.n).fold(0, |acc, _| acc * self.points + mid)
    }

    /// Distance in nodes to the nearest boundary face.
    pub fn depth(&self, flat: usize) -> usize {
        self.multi_index(flat)
            .into_iter()
            .map(|i| i.min(self.points - 1 - i))
            .min()
            .unwrap_or(0)
    }

    #[inline]
    pub fn is_interior(&self, flat: usize) -> bool {
        self.depth(flat) >= 1
    }
}

/// Real values on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the solver coordinates of every node.
    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|p| f(&grid.coords(p))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, idx: &[usize]) -> Result<f64> {
        Ok(self.values[self.grid.flat_index(idx)?])
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max norm over nodes at least `depth` nodes from the boundary.
    pub fn max_norm_at_depth(&self, depth: usize) -> f64 {
        (0..self.values.len())
            .filter(|&p| self.grid.depth(p) >= depth)
            .fold(0.0, |m, p| m.max(self.values[p].abs()))
    }

    /// Sets every boundary node to zero.
    pub fn clear_boundary(&mut self) {
        for p in 0..self.values.len() {
            if !self.grid.is_interior(p) {
                self.values[p] = 0.0;
            }
        }
    }
}

/// Central-difference stencils reaching `reach` nodes out, with physical
/// spacing `spacing` per node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Stencil {
    pub reach: usize,
    pub spacing: f64,
}

impl Stencil {
    pub fn compact(grid: &GridSpec) -> Self {
        Self {
            reach: 1,
            spacing: grid.h(),
        }
    }

    pub fn gradient(&self, grid: &GridSpec, values: &[f64], p: usize) -> Vec<f64> {
        let d = self.reach as f64 * self.spacing;
        (0..grid.dim())
            .map(|i| {
                let s = grid.stride(i) * self.reach;
                (values[p + s] - values[p - s]) / (2.0 * d)
            })
            .collect()
    }

    pub fn hessian(&self, grid: &GridSpec, values: &[f64], p: usize) -> SymMatrix {
        let d = self.reach as f64 * self.spacing;
        let d2 = d * d;
        let f0 = values[p];
        SymMatrix::from_fn(grid.dim(), |i, j| {
            let si = grid.stride(i) * self.reach;
            if i == j {
                (values[p + si] - 2.0 * f0 + values[p - si]) / d2
            } else {
                let sj = grid.stride(j) * self.reach;
                (values[p + si + sj] - values[p + si - sj] - values[p - si + sj]
                    + values[p - si - sj])
                    / (4.0 * d2)
            }
        })
    }
}

fn interior_node(field: &ScalarField, node: &[usize]) -> Result<usize> {
    let p = field.grid.flat_index(node)?;
    if !field.grid.is_interior(p) {
        return Err(Error::Domain(format!(
            "node {node:?} lies on the boundary; stencils need interior nodes"
        )));
    }
    Ok(p)
}

/// Second-order central-difference gradient at an interior node.
pub fn fd_gradient(field: &ScalarField, node: &[usize]) -> Result<Vec<f64>> {
    let p = interior_node(field, node)?;
    Ok(Stencil::compact(&field.grid).gradient(&field.grid, &field.values, p))
}

/// Second-order Hessian at an interior node: three-point diagonal stencil and
/// four-point cross stencil off the diagonal.
pub fn fd_hessian(field: &ScalarField, node: &[usize]) -> Result<SymMatrix> {
    let p = interior_node(field, node)?;
    Ok(Stencil::compact(&field.grid).hessian(&field.grid, &field.values, p))
}

/// Gradient, Hessian and curvature matrix of a graph at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureFrame {
    pub gradient: Vec<f64>,
    pub hessian: SymMatrix,
    /// `sqrt(1 + |grad u|^2)`.
    pub v: f64,
    /// Symmetric matrix whose eigenvalues are the principal curvatures.
    pub a: SymMatrix,
}

impl CurvatureFrame {
    pub fn principal_curvatures(&self) -> Result<Vec<f64>> {
        jacobi_eigenvalues(&self.a)
    }
}

/// Curvature matrix of the graph of `u` with upward normal:
///
/// `a_ij = (u_ij - (u_i p_j + u_j p_i) / (v(1+v)) + u_i u_j q / (v^2 (1+v)^2)) / v`
///
/// where `p = D^2u grad u` and `q = grad u . p`. In one dimension this is
/// `u'' / (1 + u'^2)^{3/2}`.
pub fn curvature_matrix(grad: &[f64], hess: &SymMatrix) -> CurvatureFrame {
    let n = grad.len();
    let v = (1.0 + grad.iter().map(|g| g * g).sum::<f64>()).sqrt();
    let p: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|l| hess.get(i, l) * grad[l]).sum())
        .collect();
    let q: f64 = grad.iter().zip(&p).map(|(g, pi)| g * pi).sum();
    let c1 = 1.0 / (v * (1.0 + v));
    let c2 = c1 * c1 * q;
    let a = SymMatrix::from_fn(n, |i, j| {
        (hess.get(i, j) - c1 * (grad[i] * p[j] + grad[j] * p[i]) + c2 * grad[i] * grad[j]) / v
    });
    CurvatureFrame {
        gradient: grad.to_vec(),
        hessian: hess.clone(),
        v,
        a,
    }
}

/// Pointwise `sigma_k` of `mode`'s matrix at nodes at least `stencil.reach`
/// deep; shallower nodes are left at zero.
pub(crate) fn sigma_k_field(
    u: &ScalarField,
    k: usize,
    mode: Mode,
    stencil: Stencil,
) -> Result<ScalarField> {
    let grid = u.grid;
    if k == 0 || k > grid.dim() {
        return Err(Error::Domain(format!(
            "k = {k} outside [1, {}]",
            grid.dim()
        )));
    }
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            if grid.depth(p) < stencil.reach {
                return 0.0;
            }
            let grad = stencil.gradient(&grid, &u.values, p);
            let hess = stencil.hessian(&grid, &u.values, p);
            crate::symfun::sigma_k_matrix_unchecked(&mode.operator_matrix(&grad, &hess), k)
        })
        .collect();
    Ok(ScalarField { grid, values })
}

/// `sigma_k` of the principal curvatures of the graph of `u` at every interior
/// node (boundary nodes hold zero).
pub fn sigma_k_curvature(u: &ScalarField, k: usize) -> Result<ScalarField> {
    sigma_k_field(u, k, Mode::Curvature, Stencil::compact(&u.grid))
}

/// `sigma_k` of the curvature frame at one interior node; a checked
/// single-point variant of [`sigma_k_curvature`].
pub fn sigma_k_curvature_at(u: &ScalarField, k: usize, node: &[usize]) -> Result<f64> {
    let frame = curvature_matrix(&fd_gradient(u, node)?, &fd_hessian(u, node)?);
    sigma_k_matrix(&frame.a, k)
}
