//! Diagonal seeds `mu` for the quadratic initial approximation
//! `u0 = 1/2 sum mu_i x_i^2`.
//!
//! A seed is admissible when `sigma_k(mu) = M` and every coefficient
//! `sigma_{k-1}(mu|i)` of the linearized operator is strictly positive. For
//! `2 <= k <= n-1` such a seed exists for every real `M`, including `M <= 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symfun::{binomial, sigma, sigma_deleted};

/// Relative tolerance on `|sigma_k(mu) - M| / (1 + |M|)`.
pub const SIGMA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MuVector {
    entries: Vec<f64>,
    k: usize,
    target: f64,
    margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    /// `sigma_k(mu) - M`.
    pub sigma_residual: f64,
    /// `sigma_{k-1}(mu|i)` for each `i`.
    pub coefficients: Vec<f64>,
    pub margin: f64,
    pub passed: bool,
}

impl MuVector {
    /// Wraps `entries` after checking both admissibility conditions.
    pub fn new(entries: Vec<f64>, k: usize, target: f64) -> Result<Self> {
        let mut mu = MuVector {
            entries,
            k,
            target,
            margin: 0.0,
        };
        let report = validate_mu(&mu);
        if !report.passed {
            return Err(Error::Domain(format!(
                "seed {:?} is not admissible for k = {k}, M = {target}: \
                 sigma residual {:e}, margin {:e}",
                mu.entries, report.sigma_residual, report.margin
            )));
        }
        mu.margin = report.margin;
        Ok(mu)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The prescribed value `M = sigma_k(mu)`.
    pub fn target(&self) -> f64 {
        self.target
    }

    /// `min_i sigma_{k-1}(mu|i)`.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Coefficients `sigma_{k-1}(mu|i)` of the linearized operator.
    pub fn coefficients(&self) -> Vec<f64> {
        deleted_values(&self.entries, self.k)
    }
}

fn deleted_values(mu: &[f64], k: usize) -> Vec<f64> {
    if k == 0 {
        return vec![0.0; mu.len()];
    }
    (0..mu.len())
        .map(|i| sigma_deleted(mu, k - 1, i).expect("index in range"))
        .collect()
}

/// Recomputes `sigma_k(mu) - M` and the deleted values from scratch.
pub fn validate_mu(mu: &MuVector) -> ValidationReport {
    let n = mu.entries.len();
    let in_range = n >= 1 && (1..=n).contains(&mu.k) && mu.entries.iter().all(|x| x.is_finite());
    let sigma_residual = if in_range {
        sigma(&mu.entries, mu.k) - mu.target
    } else {
        f64::NAN
    };
    let coefficients = if in_range {
        deleted_values(&mu.entries, mu.k)
    } else {
        Vec::new()
    };
    let margin = coefficients.iter().copied().fold(f64::INFINITY, f64::min);
    let margin = if margin.is_finite() { margin } else { f64::NAN };
    let passed =
        in_range && sigma_residual.abs() <= SIGMA_TOL * (1.0 + mu.target.abs()) && margin > 0.0;
    ValidationReport {
        sigma_residual,
        coefficients,
        margin,
        passed,
    }
}

/// Scale `N` used for the first `n-1` entries of the constructed seed.
///
/// The rule makes the Newton-inequality lower bound on `sigma_{k-1}(mu|i)` at
/// least half its leading term.
pub fn default_scale(n: usize, k: usize, target: f64) -> f64 {
    let theta = (n - 1) as f64 / (k * (n - k)) as f64;
    let lead = binomial(n - 2, k - 1);
    let ratio = 2.0 * target.abs() * binomial(n - 2, k - 2) / (theta * lead * lead);
    ratio.powf(1.0 / k as f64).max(1.0)
}

fn check_general(n: usize, k: usize) -> Result<()> {
    if n < 3 || k < 2 || k + 1 > n {
        return Err(Error::Domain(format!(
            "the general construction needs 2 <= k <= n-1 and n >= 3, got n = {n}, k = {k}"
        )));
    }
    Ok(())
}

/// Seed with `sigma_k(mu) = M` and all `sigma_{k-1}(mu|i) > 0`.
///
/// For `2 <= k <= n-1`: `mu_1 = ... = mu_{n-1} = N` with `N` from
/// [`default_scale`], and `mu_n` solved from `sigma_k(mu) = M`. For `k = 1`
/// the seed is `(M/n, ..., M/n)`, whose coefficients are all `1`.
pub fn construct_mu(n: usize, k: usize, target: f64) -> Result<MuVector> {
    if !target.is_finite() {
        return Err(Error::Domain(format!("target {target} is not finite")));
    }
    if k == 1 && n >= 1 {
        return MuVector::new(vec![target / n as f64; n], 1, target)
            .map_err(|e| Error::Internal(e.to_string()));
    }
    check_general(n, k)?;
    construct_mu_with_scale(n, k, target, default_scale(n, k, target))
        .map_err(|e| Error::Internal(e.to_string()))
}

/// The same construction with an explicit scale `N > 0`.
///
/// Small `N` may violate positivity; that is reported as a domain error.
pub fn construct_mu_with_scale(n: usize, k: usize, target: f64, scale: f64) -> Result<MuVector> {
    check_general(n, k)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!(
            "scale must be positive, got {scale}"
        )));
    }
    let last = (target - binomial(n - 1, k) * scale.powi(k as i32))
        / (binomial(n - 1, k - 1) * scale.powi(k as i32 - 1));
    let mut entries = vec![scale; n - 1];
    entries.push(last);
    MuVector::new(entries, k, target)
}

/// Convex seed `mu_i = (M / C(n,k))^{1/k}` for `M > 0`.
pub fn convex_mu(n: usize, k: usize, target: f64) -> Result<MuVector> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Domain(format!(
            "the convex seed needs M > 0, got {target}"
        )));
    }
    if k < 1 || k > n {
        return Err(Error::Domain(format!("k = {k} outside [1, {n}]")));
    }
    let value = (target / binomial(n, k)).powf(1.0 / k as f64);
    MuVector::new(vec![value; n], k, target)
}

/// Seed for the Gauss-curvature case `k = n`, restricted to `M > 0`.
pub fn gauss_mu(n: usize, target: f64) -> Result<MuVector> {
    if !(target > 0.0) {
        return Err(Error::Unsupported(format!(
            "k = n requires psi(0) > 0, got {target}; the degenerate and hyperbolic \
             regimes are not supported"
        )));
    }
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    convex_mu(n, n, target)
}

/// Picks the seed for `(n, k, M)`: the mean-curvature seed for `k = 1`, the
/// Gauss seed for `k = n`, the general construction otherwise.
pub fn seed_mu(n: usize, k: usize, target: f64) -> Result<MuVector> {
    match k {
        1 => construct_mu(n, 1, target),
        _ if k == n => gauss_mu(n, target),
        _ => construct_mu(n, k, target),
    }
}
