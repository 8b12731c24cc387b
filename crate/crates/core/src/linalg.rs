//! Small dense and banded linear-algebra kernels used by the solvers.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Neumaier-compensated sum.
pub fn compensated_sum<I: Iterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if libm::fabs(sum) >= libm::fabs(v) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Symmetric banded matrix stored by rows of its upper band.
///
/// Entry `(i, i + d)` for `d in 0..=bandwidth` lives at `i * (bandwidth + 1) + d`.
/// Entries outside the band are structurally zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSystem {
    n: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandedSystem {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bandwidth, band: vec![0.0; n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        if hi - lo > self.bandwidth {
            0.0
        } else {
            self.band[lo * (self.bandwidth + 1) + (hi - lo)]
        }
    }

    /// Adds `value` to entries `(i, j)` and `(j, i)`.
    ///
    /// Panics if `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.bandwidth, "entry ({i}, {j}) outside bandwidth {}", self.bandwidth);
        self.band[lo * (self.bandwidth + 1) + (hi - lo)] += value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.band.iter().fold(0.0, |acc, v| acc.max(libm::fabs(*v)))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let hi = (i + self.bandwidth).min(self.n - 1);
            for j in i..=hi {
                let a = self.get(i, j);
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// Banded Cholesky factorisation `A = L Lᵀ`.
    ///
    /// Fails when a pivot drops to `tol` or below.
    pub fn cholesky(&self, tol: f64) -> core::result::Result<BandCholesky, usize> {
        let (n, bw) = (self.n, self.bandwidth);
        // Row i of L holds L[i][i - bw..=i] at offsets 0..=bw (offset bw is the diagonal).
        let mut l = vec![0.0; n * (bw + 1)];
        let idx = |i: usize, j: usize| i * (bw + 1) + (bw + j - i);
        for i in 0..n {
            let first = i.saturating_sub(bw);
            for j in first..=i {
                let mut s = self.get(j, i);
                for p in first.max(j.saturating_sub(bw))..j {
                    s -= l[idx(i, p)] * l[idx(j, p)];
                }
                if i == j {
                    if !(s > tol) {
                        return Err(i);
                    }
                    l[idx(i, i)] = libm::sqrt(s);
                } else {
                    l[idx(i, j)] = s / l[idx(j, j)];
                }
            }
        }
        Ok(BandCholesky { n, bandwidth: bw, l })
    }

    /// Solves `A x = rhs`.
    ///
    /// A pivot at or below `1e-12 * max|A|` triggers a single diagonal jitter of
    /// `1e-10 * trace(A) / n`; if that also fails the system is reported as
    /// degenerate. The returned flag tells whether the jitter was applied.
    pub fn solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, bool)> {
        if rhs.len() != self.n {
            return Err(Error::Shape(format!("rhs has length {}, system has {}", rhs.len(), self.n)));
        }
        let tol = 1e-12 * self.max_abs();
        match self.cholesky(tol) {
            Ok(chol) => Ok((chol.solve(rhs), false)),
            Err(_) => {
                let jitter = 1e-10 * self.trace() / self.n as f64;
                let mut jittered = self.clone();
                for i in 0..self.n {
                    jittered.add(i, i, jitter);
                }
                match jittered.cholesky(tol) {
                    Ok(chol) => Ok((chol.solve(rhs), true)),
                    Err(row) => Err(Error::Degenerate(format!(
                        "banded system of dimension {} is singular (non-positive pivot at row {row}); \
                         the lag loadings are likely proportional",
                        self.n
                    ))),
                }
            }
        }
    }
}

/// Lower band factor produced by [`BandedSystem::cholesky`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    bandwidth: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.l[i * (self.bandwidth + 1) + (self.bandwidth + j - i)]
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bandwidth);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for p in i.saturating_sub(bw)..i {
                s -= self.at(i, p) * y[p];
            }
            y[i] = s / self.at(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in i + 1..=(i + bw).min(n - 1) {
                s -= self.at(p, i) * y[p];
            }
            y[i] = s / self.at(i, i);
        }
        y
    }
}

/// Least-squares solution of `design · X ≈ rhs` for every column of `rhs`,
/// via Householder QR.
pub fn least_squares(design: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = design.shape();
    if rows < cols {
        return Err(Error::Degenerate(format!("design has {rows} rows for {cols} unknowns")));
    }
    let qr = design.clone().qr();
    let r = qr.r();
    let max_diag = (0..cols).fold(0.0f64, |acc, i| acc.max(libm::fabs(r[(i, i)])));
    for i in 0..cols {
        if !(libm::fabs(r[(i, i)]) > 1e-12 * max_diag) {
            return Err(Error::Degenerate(format!(
                "regression design is rank deficient (column {i} is a combination of the others)"
            )));
        }
    }
    let qtb = qr.q().transpose() * rhs;
    r.solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Numeric("triangular solve failed".to_string()))
}

/// Weighted least squares `argmin Σ w_t (y_t - x_tᵀ b)²` with `w_t ≥ 0`.
pub fn weighted_least_squares(design: &DMatrix<f64>, y: &[f64], weights: &[f64]) -> Result<DVector<f64>> {
    let mut xw = design.clone();
    let mut yw = DMatrix::zeros(y.len(), 1);
    for (t, (&w, &v)) in weights.iter().zip(y).enumerate() {
        let sw = libm::sqrt(w);
        xw.row_mut(t).scale_mut(sw);
        yw[(t, 0)] = v * sw;
    }
    Ok(least_squares(&xw, &yw)?.column(0).into_owned())
}

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
///
/// Each eigenvector is signed so its largest-magnitude entry is positive
/// (earliest index on ties).
pub fn symmetric_eigen_desc(matrix: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(matrix.clone());
    let n = matrix.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(src).into_owned();
        if sign_of_largest(v.as_slice()) < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(dst, &v);
    }
    (values, vectors)
}

/// Sign of the largest-magnitude entry; the earliest such entry wins ties.
pub fn sign_of_largest(values: &[f64]) -> f64 {
    let mut best = 0.0f64;
    for &v in values {
        if libm::fabs(v) > libm::fabs(best) {
            best = v;
        }
    }
    if best < 0.0 {
        -1.0
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd_band(n: usize, bw: usize, seed: u64) -> BandedSystem {
        // Deterministic pseudo-random band, made diagonally dominant.
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = BandedSystem::zeros(n, bw);
        for i in 0..n {
            for j in i + 1..=(i + bw).min(n - 1) {
                a.add(i, j, next());
            }
            a.add(i, i, 2.0 * bw as f64 + 1.0);
        }
        a
    }

    #[test]
    fn banded_solve_matches_dense() {
        for (n, bw) in [(1, 0), (5, 0), (8, 3), (30, 5), (12, 11)] {
            let a = random_spd_band(n, bw, n as u64 * 31 + bw as u64);
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let (x, jittered) = a.solve(&rhs).unwrap();
            assert!(!jittered);
            let dense = a.to_dense().lu().solve(&DVector::from_column_slice(&rhs)).unwrap();
            for i in 0..n {
                assert!((x[i] - dense[i]).abs() < 1e-12, "n={n} bw={bw} i={i}");
            }
            let back = a.matvec(&x);
            for i in 0..n {
                assert!((back[i] - rhs[i]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn singular_band_is_degenerate_after_one_jitter() {
        // Rank-one 3x3 band: jitter gets it through, an all-zero one does not.
        let mut a = BandedSystem::zeros(3, 2);
        for i in 0..3 {
            for j in i..3 {
                a.add(i, j, 1.0);
            }
        }
        let (_, jittered) = a.solve(&[1.0, 1.0, 1.0]).unwrap();
        assert!(jittered);
        let zero = BandedSystem::zeros(3, 1);
        assert!(matches!(zero.solve(&[1.0, 0.0, 0.0]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn out_of_band_reads_are_zero() {
        let a = random_spd_band(6, 1, 3);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.get(5, 0), 0.0);
        assert_eq!(a.get(1, 2), a.get(2, 1));
    }

    #[test]
    fn least_squares_exact_line() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let y = DMatrix::from_column_slice(3, 1, &[2.0, 5.0, 8.0]);
        let b = least_squares(&x, &y).unwrap();
        assert!((b[(0, 0)] - 2.0).abs() < 1e-12);
        assert!((b[(1, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn least_squares_flags_collinear_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let y = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(matches!(least_squares(&x, &y), Err(Error::Degenerate(_))));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let vals = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(vals.iter().copied()), 2.0);
    }

    #[test]
    fn eigen_sorted_and_signed() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        let (vals, vecs) = symmetric_eigen_desc(&c);
        assert!((vals[0] - 4.0).abs() < 1e-14 && (vals[1] - 1.0).abs() < 1e-14);
        assert!((vecs[(1, 0)] - 1.0).abs() < 1e-14);
    }
}
