//! Elementary symmetric functions of vectors and symmetric matrices.
//!
//! `sigma(mu, j)` is the sum of all `j`-fold products of distinct entries of
//! `mu`, with `sigma(mu, 0) == 1` and `sigma(mu, j) == 0` for `j > mu.len()`.
//! The matrix version is the sum of the `k x k` principal minors, which equals
//! `sigma` of the eigenvalues. Indices are zero-based throughout.

use crate::error::{Error, Result};

/// Largest matrix order accepted by [`sigma_k_matrix`].
pub const MAX_MATRIX_ORDER: usize = 12;

/// Dense symmetric matrix stored as its lower triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    lower: Vec<f64>,
}

#[inline]
fn packed(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        Self {
            order,
            lower: vec![0.0; order * (order + 1) / 2],
        }
    }

    pub fn identity(order: usize) -> Self {
        Self::diagonal(&vec![1.0; order])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }

    /// Builds the matrix from `f(i, j)` evaluated on the lower triangle only.
    pub fn from_fn(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            for j in 0..=i {
                m.lower[packed(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds from row-major rows; only the lower triangle is read.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    actual: row.len(),
                });
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.lower[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.lower[packed(i, j)] = value;
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.order).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.order)
            .map(|i| (0..self.order).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: f64, other: &SymMatrix) -> Result<SymMatrix> {
        check_dim(self.order, other.order)?;
        Ok(SymMatrix {
            order: self.order,
            lower: self
                .lower
                .iter()
                .zip(&other.lower)
                .map(|(a, b)| a + t * b)
                .collect(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.order {
            for j in 0..self.order {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    /// Determinant of the principal submatrix selected by `idx`.
    pub fn principal_minor(&self, idx: &[usize]) -> f64 {
        let k = idx.len();
        let mut a: Vec<f64> = Vec::with_capacity(k * k);
        for &r in idx {
            for &c in idx {
                a.push(self.get(r, c));
            }
        }
        det_in_place(&mut a, k)
    }
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Dimension { expected, actual });
    }
    Ok(())
}

/// LU with partial pivoting on a row-major `k x k` buffer.
fn det_in_place(a: &mut [f64], k: usize) -> f64 {
    match k {
        0 => return 1.0,
        1 => return a[0],
        2 => return a[0] * a[3] - a[1] * a[2],
        _ => {}
    }
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        if a[piv * k + col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in 0..k {
                a.swap(piv * k + c, col * k + c);
            }
            det = -det;
        }
        let p = a[col * k + col];
        det *= p;
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f != 0.0 {
                for c in col + 1..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
            }
        }
    }
    det
}

/// Visits every increasing `k`-subset of `0..n`.
pub(crate) fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut pos = k;
        while pos > 0 && idx[pos - 1] == n - k + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            return;
        }
        idx[pos - 1] += 1;
        for q in pos..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

fn sigma_iter(values: impl Iterator<Item = f64>, j: usize) -> f64 {
    let mut e = vec![0.0; j + 1];
    e[0] = 1.0;
    let mut count = 0usize;
    for x in values {
        count += 1;
        for t in (1..=j.min(count)).rev() {
            e[t] += x * e[t - 1];
        }
    }
    e[j]
}

/// `sigma_j(mu)` by the one-pass recurrence `e_t <- e_t + x * e_{t-1}`.
pub fn sigma(mu: &[f64], j: usize) -> f64 {
    sigma_iter(mu.iter().copied(), j)
}

/// `sigma_j` of `mu` with entry `i` removed.
pub fn sigma_deleted(mu: &[f64], j: usize, i: usize) -> Result<f64> {
    if i >= mu.len() {
        return Err(Error::Domain(format!(
            "index {i} out of range for a vector of length {}",
            mu.len()
        )));
    }
    Ok(sigma_iter(
        mu.iter()
            .enumerate()
            .filter(|&(p, _)| p != i)
            .map(|(_, &x)| x),
        j,
    ))
}

/// `sigma_j` of `mu` with entries `i` and `l` removed.
pub fn sigma_deleted2(mu: &[f64], j: usize, i: usize, l: usize) -> Result<f64> {
    if i == l {
        return Err(Error::Domain(format!(
            "deleted indices must differ, got {i} twice"
        )));
    }
    if i >= mu.len() || l >= mu.len() {
        return Err(Error::Domain(format!(
            "indices ({i}, {l}) out of range for a vector of length {}",
            mu.len()
        )));
    }
    Ok(sigma_iter(
        mu.iter()
            .enumerate()
            .filter(|&(p, _)| p != i && p != l)
            .map(|(_, &x)| x),
        j,
    ))
}

/// `sigma_{j}(mu | idx)` for an arbitrary sorted deletion set.
fn sigma_deleted_set(mu: &[f64], j: usize, idx: &[usize]) -> f64 {
    sigma_iter(
        mu.iter()
            .enumerate()
            .filter(|(p, _)| idx.binary_search(p).is_err())
            .map(|(_, &x)| x),
        j,
    )
}

fn check_k(k: usize, lo: usize, n: usize) -> Result<()> {
    if k < lo || k > n {
        return Err(Error::Domain(format!("k = {k} outside [{lo}, {n}]")));
    }
    Ok(())
}

/// `sigma_k` of the eigenvalues of `a`, as the sum of its `k x k` principal minors.
pub fn sigma_k_matrix(a: &SymMatrix, k: usize) -> Result<f64> {
    let n = a.order();
    if n > MAX_MATRIX_ORDER {
        return Err(Error::Domain(format!(
            "matrix order {n} exceeds the supported maximum {MAX_MATRIX_ORDER}"
        )));
    }
    check_k(k, 1, n)?;
    Ok(sigma_k_matrix_unchecked(a, k))
}

pub(crate) fn sigma_k_matrix_unchecked(a: &SymMatrix, k: usize) -> f64 {
    let n = a.order();
    match (n, k) {
        (_, 1) => return a.diag().iter().sum(),
        (2, 2) => return a.get(0, 0) * a.get(1, 1) - a.get(0, 1) * a.get(1, 0),
        _ => {}
    }
    let mut sum = 0.0;
    for_each_subset(n, k, |idx| sum += a.principal_minor(idx));
    sum
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Sweeps until the off-diagonal Frobenius norm falls below `1e-12` times the
/// full norm; gives up after 100 sweeps.
pub fn jacobi_eigenvalues(a: &SymMatrix) -> Result<Vec<f64>> {
    const TOL: f64 = 1e-12;
    const MAX_SWEEPS: usize = 100;
    let n = a.order();
    let mut m = a.to_rows();
    let total = a.frobenius_norm();
    let off = |m: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i][j] * m[i][j];
                }
            }
        }
        s.sqrt()
    };
    let mut sweeps = 0;
    while off(&m) > TOL * total {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric {
                message: "Jacobi eigenvalue sweeps did not converge".into(),
                residual: off(&m),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let (mrp, mrq) = (m[r][p], m[r][q]);
                    m[r][p] = c * mrp - s * mrq;
                    m[r][q] = s * mrp + c * mrq;
                }
                for r in 0..n {
                    let (mpr, mqr) = (m[p][r], m[q][r]);
                    m[p][r] = c * mpr - s * mqr;
                    m[q][r] = s * mpr + c * mqr;
                }
            }
        }
    }
    Ok((0..n).map(|i| m[i][i]).collect())
}

/// Eigenvalue route to `sigma_k(A)`; serves as an independent check on
/// [`sigma_k_matrix`].
pub fn sigma_k_matrix_oracle(a: &SymMatrix, k: usize) -> Result<f64> {
    check_k(k, 1, a.order())?;
    let eig = jacobi_eigenvalues(a)?;
    Ok(sigma(&eig, k))
}

/// Linear term of `sigma_k(diag(mu) + B)` in `B`: `sum_i sigma_{k-1}(mu|i) b_ii`.
pub fn expansion_first_order(mu: &[f64], b: &SymMatrix, k: usize) -> Result<f64> {
    check_dim(mu.len(), b.order())?;
    check_k(k, 1, mu.len())?;
    let mut s = 0.0;
    for i in 0..mu.len() {
        s += sigma_deleted(mu, k - 1, i)? * b.get(i, i);
    }
    Ok(s)
}

/// Quadratic term: `sum_{i<j} sigma_{k-2}(mu|i,j) (b_ii b_jj - b_ij^2)`.
pub fn expansion_second_order(mu: &[f64], b: &SymMatrix, k: usize) -> Result<f64> {
    check_dim(mu.len(), b.order())?;
    check_k(k, 2, mu.len())?;
    let n = mu.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let minor = b.get(i, i) * b.get(j, j) - b.get(i, j) * b.get(i, j);
            s += sigma_deleted2(mu, k - 2, i, j)? * minor;
        }
    }
    Ok(s)
}

/// Degree-`p` term in `B` of `sigma_k(diag(mu) + B)`:
/// `sum_{|I|=p} sigma_{k-p}(mu|I) det(B_I)`.
///
/// Summing `t^p * expansion_term(mu, B, k, p)` over `p = 0..=k` reproduces
/// `sigma_k(diag(mu) + t B)` exactly.
pub fn expansion_term(mu: &[f64], b: &SymMatrix, k: usize, p: usize) -> Result<f64> {
    check_dim(mu.len(), b.order())?;
    check_k(k, 1, mu.len())?;
    if p > k {
        return Ok(0.0);
    }
    let mut s = 0.0;
    for_each_subset(mu.len(), p, |idx| {
        s += sigma_deleted_set(mu, k - p, idx) * b.principal_minor(idx);
    });
    Ok(s)
}

/// Newton's inequality gap for `mu` in dimension `m = mu.len()`:
/// `j(m-j)/((j+1)(m-j+1)) * sigma_j^2 - sigma_{j-1} sigma_{j+1}`.
///
/// Nonnegative for every real vector. With `m = n - 2` and `j = k - 1` the
/// coefficient is `(k-1)(n-k-1)/(k(n-k))`. `j = m` is accepted: both sides
/// vanish there.
pub fn newton_gap(mu: &[f64], j: usize) -> Result<f64> {
    let m = mu.len();
    if j < 1 || j > m {
        return Err(Error::Domain(format!("j = {j} outside [1, {m}]")));
    }
    let c = (j * (m - j)) as f64 / ((j + 1) * (m - j + 1)) as f64;
    let sj = sigma(mu, j);
    Ok(c * sj * sj - sigma(mu, j - 1) * sigma(mu, j + 1))
}

/// Binomial coefficient as `f64`, i.e. `sigma_j` of the all-ones vector.
pub fn binomial(m: usize, j: usize) -> f64 {
    if j > m {
        return 0.0;
    }
    let j = j.min(m - j);
    let mut c = 1.0;
    for t in 0..j {
        c = c * (m - t) as f64 / (t + 1) as f64;
    }
    c.round()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        SymMatrix::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma(&[1.0, 1.0, 1.0], 2), 3.0);
        assert_eq!(sigma(&[1.0, 2.0, 3.0], 3), 6.0);
        assert_eq!(sigma(&[1.0, 2.0, 3.0], 2), 11.0);
        assert_eq!(sigma(&[1.0, 2.0, 3.0], 0), 1.0);
        assert_eq!(sigma(&[1.0, 2.0, 3.0], 4), 0.0);
    }

    #[test]
    fn deleted_examples() {
        assert_eq!(sigma_deleted(&[1.0, 2.0, 3.0], 1, 1).unwrap(), 4.0);
        assert_eq!(sigma_deleted(&[5.0], 0, 0).unwrap(), 1.0);
        assert_eq!(sigma_deleted(&[1.0; 4], 2, 3).unwrap(), 3.0);
        assert!(sigma_deleted(&[1.0, 2.0], 1, 2).is_err());

        assert_eq!(sigma_deleted2(&[1.0, 2.0, 3.0, 4.0], 1, 0, 3).unwrap(), 5.0);
        assert_eq!(sigma_deleted2(&[1.0, 2.0, 3.0], 0, 0, 2).unwrap(), 1.0);
        assert_eq!(sigma_deleted2(&[2.0; 4], 2, 1, 2).unwrap(), 4.0);
        assert!(sigma_deleted2(&[1.0, 2.0, 3.0], 1, 1, 1).is_err());
    }

    #[test]
    fn matrix_examples() {
        assert_eq!(sigma_k_matrix(&SymMatrix::identity(3), 2).unwrap(), 3.0);
        let swap = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(sigma_k_matrix(&swap, 2).unwrap(), -1.0);
        assert!(sigma_k_matrix(&swap, 0).is_err());
        assert!(sigma_k_matrix(&swap, 3).is_err());
        assert!(sigma_k_matrix(&SymMatrix::identity(13), 2).is_err());

        let d = SymMatrix::diagonal(&[1.0, 2.0, 3.0]);
        assert!((sigma_k_matrix_oracle(&d, 2).unwrap() - 11.0).abs() < 1e-12);
        assert!((sigma_k_matrix_oracle(&SymMatrix::identity(2), 1).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn minors_match_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let a = random_sym(&mut rng, 5);
            for k in 1..=5 {
                let v = sigma_k_matrix(&a, k).unwrap();
                let o = sigma_k_matrix_oracle(&a, k).unwrap();
                assert!((v - o).abs() <= 1e-8 * (1.0 + v.abs()), "k={k}: {v} vs {o}");
            }
        }
    }

    #[test]
    fn subsets_enumerated() {
        let mut count = 0;
        for_each_subset(6, 3, |_| count += 1);
        assert_eq!(count, 20);
        let mut seen = Vec::new();
        for_each_subset(3, 0, |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![Vec::<usize>::new()]);
        let mut seen = Vec::new();
        for_each_subset(3, 3, |s| seen.push(s.to_vec()));
        assert_eq!(seen, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn expansion_examples() {
        let b = SymMatrix::identity(3);
        assert_eq!(expansion_first_order(&[1.0; 3], &b, 2).unwrap(), 6.0);
        let off = SymMatrix::from_fn(3, |i, j| if i == j { 0.0 } else { 0.7 });
        assert_eq!(
            expansion_first_order(&[2.0, -1.0, 3.0], &off, 2).unwrap(),
            0.0
        );
        assert!(expansion_first_order(&[1.0; 2], &b, 2).is_err());

        let swap = SymMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(expansion_second_order(&[1.0, 1.0], &swap, 2).unwrap(), -1.0);
        let diag = SymMatrix::diagonal(&[3.0, -2.0]);
        assert_eq!(expansion_second_order(&[0.4, 9.0], &diag, 2).unwrap(), -6.0);
        assert!(expansion_second_order(&[1.0, 1.0], &diag, 1).is_err());
    }

    #[test]
    fn full_expansion_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..=5 {
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = random_sym(&mut rng, n);
            for k in 1..=n {
                let t = 0.37;
                let direct =
                    sigma_k_matrix(&SymMatrix::diagonal(&mu).add_scaled(t, &b).unwrap(), k)
                        .unwrap();
                let series: f64 = (0..=k)
                    .map(|p| t.powi(p as i32) * expansion_term(&mu, &b, k, p).unwrap())
                    .sum();
                assert!((direct - series).abs() < 1e-12 * (1.0 + direct.abs()));
                assert!(
                    (expansion_term(&mu, &b, k, 1).unwrap()
                        - expansion_first_order(&mu, &b, k).unwrap())
                    .abs()
                        < 1e-12
                );
                if k >= 2 {
                    assert!(
                        (expansion_term(&mu, &b, k, 2).unwrap()
                            - expansion_second_order(&mu, &b, k).unwrap())
                        .abs()
                            < 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn first_order_is_the_derivative() {
        // Richardson extrapolation of the difference quotient at t = 1e-3, 1e-4.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = rng.random_range(2..=5);
            let k = rng.random_range(1..=n);
            let mu: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = random_sym(&mut rng, n);
            let d = SymMatrix::diagonal(&mu);
            let q = |t: f64| {
                (sigma_k_matrix(&d.add_scaled(t, &b).unwrap(), k).unwrap() - sigma(&mu, k)) / t
            };
            let (q1, q2) = (q(1e-3), q(1e-4));
            let limit = (10.0 * q2 - q1) / 9.0;
            let first = expansion_first_order(&mu, &b, k).unwrap();
            assert!(
                (limit - first).abs() < 1e-7 * (1.0 + first.abs()),
                "{limit} vs {first}"
            );
        }
    }

    #[test]
    fn newton_gap_examples() {
        assert!(newton_gap(&[1.0, 1.0], 1).unwrap().abs() < 1e-15);
        assert!((newton_gap(&[1.0, 0.0], 1).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(newton_gap(&[3.0, -1.0], 2).unwrap(), 0.0);
        assert!(newton_gap(&[1.0, 1.0], 0).is_err());
        assert!(newton_gap(&[1.0, 1.0], 3).is_err());
    }

    #[test]
    fn newton_gap_random_certification() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let m = rng.random_range(1..=8);
            let mu: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
            let j = rng.random_range(1..=m);
            assert!(newton_gap(&mu, j).unwrap() >= -1e-12, "{mu:?} j={j}");
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(12, 6), 924.0);
        assert_eq!(binomial(3, 4), 0.0);
        for m in 0..10 {
            for j in 0..=m {
                assert_eq!(binomial(m, j), sigma(&vec![1.0; m], j));
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn laplace_recursion(mu in prop::collection::vec(-3.0f64..3.0, 1..8), seed in 0usize..64) {
                let n = mu.len();
                let i = seed % n;
                for k in 1..=n {
                    let lhs = sigma(&mu, k);
                    let rhs = sigma_deleted(&mu, k, i).unwrap()
                        + mu[i] * sigma_deleted(&mu, k - 1, i).unwrap();
                    prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
                }
            }

            #[test]
            fn matrix_entries_symmetric(n in 1usize..6, vals in prop::collection::vec(-1.0f64..1.0, 21)) {
                let a = SymMatrix::from_fn(n, |i, j| vals[i * (i + 1) / 2 + j]);
                for i in 0..n {
                    for j in 0..n {
                        prop_assert_eq!(a.get(i, j), a.get(j, i));
                    }
                }
            }

            #[test]
            fn newton_inequality(mu in prop::collection::vec(-5.0f64..5.0, 1..9), jj in 0usize..16) {
                let j = 1 + jj % mu.len();
                let scale = mu.iter().fold(1.0f64, |a, x| a.max(x.abs()));
                let gap = newton_gap(&mu, j).unwrap();
                prop_assert!(gap >= -1e-12 * scale.powi(2 * j as i32));
            }
        }
    }
}
