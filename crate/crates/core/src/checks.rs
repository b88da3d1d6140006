//! Randomized checks of the `sigma_k` algebra: expansion order, Newton's
//! inequality, the Laplace recursion, and minors against eigenvalues.
//!
//! Everything here is seeded and bit-reproducible for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::symfun::{
    expansion_first_order, expansion_second_order, expansion_term, newton_gap, sigma,
    sigma_deleted, sigma_k_matrix, sigma_k_matrix_oracle, SymMatrix,
};

/// Step sizes of the ratio test.
pub const RATIO_STEPS: [f64; 3] = [1e-1, 1e-2, 1e-3];
/// Accepted window for `|R(t)| / |R(t/10)|` when `R = O(t^2)`.
pub const QUADRATIC_WINDOW: (f64, f64) = (80.0, 120.0);
/// Accepted window when `R = O(t^3)`.
pub const CUBIC_WINDOW: (f64, f64) = (800.0, 1200.0);
/// Below this the remainder is treated as identically zero.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;
/// Smallest leading coefficient accepted for a ratio sample.
pub const MIN_LEADING: f64 = 1e-2;
pub const NEWTON_TOL: f64 = 1e-12;
pub const ORACLE_RTOL: f64 = 1e-8;

/// Symmetric matrix with entries uniform in `[-1, 1]`.
pub fn random_sym(rng: &mut impl Rng, n: usize) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

/// Random symmetric matrix scaled to unit Frobenius norm.
pub fn random_unit_sym(rng: &mut impl Rng, n: usize) -> SymMatrix {
    loop {
        let b = random_sym(rng, n);
        let norm = b.frobenius_norm();
        if norm > 1e-3 {
            return SymMatrix::from_fn(n, |i, j| b.get(i, j) / norm);
        }
    }
}

pub fn random_vector(rng: &mut impl Rng, n: usize, half_width: f64) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(-half_width..half_width))
        .collect()
}

/// Result of a Richardson ratio test on one `(mu, B, k)` sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioTest {
    /// Order of the remainder being tested (2 or 3).
    pub order: usize,
    pub remainders: Vec<f64>,
    pub ratios: Vec<f64>,
    /// The remainder vanished to roundoff at every step.
    pub identically_zero: bool,
    pub passed: bool,
}

/// Remainder of `sigma_k(diag(mu) + t B)` after removing the terms of degree
/// below `order` in `t`.
pub fn remainder(mu: &[f64], b: &SymMatrix, k: usize, order: usize, t: f64) -> Result<f64> {
    let d = SymMatrix::diagonal(mu);
    let mut r = sigma_k_matrix(&d.add_scaled(t, b)?, k)? - sigma(mu, k);
    if order >= 2 {
        r -= t * expansion_first_order(mu, b, k)?;
    }
    if order >= 3 && k >= 2 {
        r -= t * t * expansion_second_order(mu, b, k)?;
    }
    Ok(r)
}

/// Ratio test of `R(t) = O(t^order)` at [`RATIO_STEPS`].
pub fn ratio_test(mu: &[f64], b: &SymMatrix, k: usize, order: usize) -> Result<RatioTest> {
    let window = if order == 2 {
        QUADRATIC_WINDOW
    } else {
        CUBIC_WINDOW
    };
    let remainders = RATIO_STEPS
        .iter()
        .map(|&t| remainder(mu, b, k, order, t))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = remainders
        .windows(2)
        .map(|w| w[0].abs() / w[1].abs())
        .collect();
    let identically_zero = remainders.iter().all(|r| r.abs() <= ROUNDOFF_FLOOR);
    let passed = identically_zero || ratios.iter().all(|q| (window.0..=window.1).contains(q));
    Ok(RatioTest {
        order,
        remainders,
        ratios,
        identically_zero,
        passed,
    })
}

/// Whether the degree-`order` coefficient of `t` in `sigma_k(diag(mu) + t B)`
/// dominates all higher ones: `|c_p| >= sum_{q>p} |c_q|` and
/// `|c_p| >= MIN_LEADING`, or all of them vanish.
///
/// Under this condition the ratios at [`RATIO_STEPS`] lie within 11% of
/// `10^order`, so the windows test the order rather than the sample.
pub fn leading_term_dominates(mu: &[f64], b: &SymMatrix, k: usize, order: usize) -> Result<bool> {
    let lead = expansion_term(mu, b, k, order)?.abs();
    let mut tail = 0.0;
    for q in order + 1..=k {
        tail += expansion_term(mu, b, k, q)?.abs();
    }
    if lead == 0.0 && tail == 0.0 {
        return Ok(true);
    }
    Ok(lead >= tail && lead >= MIN_LEADING)
}

/// Draws `(mu, B)` until [`leading_term_dominates`] holds; returns the sample
/// and the number of rejected draws.
pub fn draw_order_sample(
    rng: &mut impl Rng,
    n: usize,
    k: usize,
    order: usize,
) -> Result<(Vec<f64>, SymMatrix, usize)> {
    let mut rejected = 0;
    loop {
        let mu = random_vector(rng, n, 2.0);
        let b = random_unit_sym(rng, n);
        if leading_term_dominates(&mu, &b, k, order)? {
            return Ok((mu, b, rejected));
        }
        rejected += 1;
    }
}

/// One line of the `expand-check` table.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Worst observed statistic, described by `detail`.
    pub worst: f64,
    pub detail: String,
    pub skipped: Option<String>,
}

impl CheckRow {
    pub fn passed(&self) -> bool {
        self.skipped.is_some() || self.failures == 0
    }
}

fn worst_distance(ratios: &[f64], target: f64) -> f64 {
    ratios
        .iter()
        .map(|q| (q / target - 1.0).abs())
        .fold(0.0, f64::max)
}

/// The full randomized suite for fixed `(n, k)`.
pub fn expand_check(n: usize, k: usize, trials: usize, seed: u64) -> Result<Vec<CheckRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    // Laplace recursion sigma_k = sigma_k(.|i) + mu_i sigma_{k-1}(.|i).
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let mu = random_vector(&mut rng, n, 2.0);
        for i in 0..n {
            let lhs = sigma(&mu, k);
            let rhs = sigma_deleted(&mu, k, i)? + mu[i] * sigma_deleted(&mu, k - 1, i)?;
            let err = (lhs - rhs).abs() / (1.0 + lhs.abs());
            worst = worst.max(err);
            if err > 1e-12 {
                failures += 1;
            }
        }
    }
    rows.push(CheckRow {
        name: "laplace-recursion",
        trials,
        failures,
        worst,
        detail: "max relative error".into(),
        skipped: None,
    });

    // Principal minors against Jacobi eigenvalues.
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let a = random_sym(&mut rng, n);
        let v = sigma_k_matrix(&a, k)?;
        let o = sigma_k_matrix_oracle(&a, k)?;
        let err = (v - o).abs() / (1.0 + v.abs());
        worst = worst.max(err);
        if err > ORACLE_RTOL {
            failures += 1;
        }
    }
    rows.push(CheckRow {
        name: "minors-vs-eigenvalues",
        trials,
        failures,
        worst,
        detail: "max relative difference".into(),
        skipped: None,
    });

    // Remainders after the first- and second-order terms.
    for (name, order, target) in [
        ("first-order-remainder", 2usize, 100.0),
        ("second-order-remainder", 3, 1000.0),
    ] {
        let mut failures = 0;
        let mut worst: f64 = 0.0;
        let mut rejected = 0;
        let mut exact = 0;
        for _ in 0..trials {
            let (mu, b, r) = draw_order_sample(&mut rng, n, k, order)?;
            rejected += r;
            let test = ratio_test(&mu, &b, k, order)?;
            if test.identically_zero {
                exact += 1;
            } else {
                worst = worst.max(worst_distance(&test.ratios, target));
            }
            if !test.passed {
                failures += 1;
            }
        }
        rows.push(CheckRow {
            name,
            trials,
            failures,
            worst,
            detail: format!(
                "max |ratio/{target} - 1|; {exact} exact-zero remainders, {rejected} redraws"
            ),
            skipped: None,
        });
    }

    // Newton's inequality in dimension n - 2 with j = k - 1.
    if n < 3 || k < 2 || k + 1 > n {
        rows.push(CheckRow {
            name: "newton-inequality",
            trials: 0,
            failures: 0,
            worst: 0.0,
            detail: String::new(),
            skipped: Some(format!(
                "needs 1 <= k-1 <= n-2, i.e. n >= 3 and 2 <= k <= n-1 (n = {n}, k = {k})"
            )),
        });
    } else {
        let mut failures = 0;
        let mut worst = f64::INFINITY;
        for _ in 0..trials {
            let v = random_vector(&mut rng, n - 2, 1.0);
            let gap = newton_gap(&v, k - 1)?;
            worst = worst.min(gap);
            if gap < -NEWTON_TOL {
                failures += 1;
            }
        }
        rows.push(CheckRow {
            name: "newton-inequality",
            trials,
            failures,
            worst,
            detail: "min gap".into(),
            skipped: None,
        });
    }
    Ok(rows)
}
