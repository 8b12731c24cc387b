//! Closed forms for the one-lag factor system.
//!
//! With `k = 1` the matrix `D(β)` is tridiagonal: corners `a1` and `a2`,
//! interior diagonal `a1 + a2` and off-diagonal `b`. It can be written as
//! `alpha · (A0 + diag(m1, 0, …, 0, m2))` where `A0` is the AR(1) precision
//! pattern with decay `c`, which gives an explicit inverse. These routines are
//! used to check the banded solver; the solver never calls them.

use alloc::format;
use alloc::string::ToString;

use nalgebra::{DMatrix, Matrix2};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TridiagonalParams {
    /// `Σ_j β[j,0]²`
    pub a1: f64,
    /// `Σ_j β[j,1]²`
    pub a2: f64,
    /// `Σ_j β[j,0] β[j,1]`
    pub b: f64,
    pub alpha_scale: f64,
    /// Decay constant, `|c| < 1`.
    pub c: f64,
    pub w1: f64,
    pub w2: f64,
    pub m1: f64,
    pub m2: f64,
}

/// Parameterises `D(β)` for an `m × 2` loading matrix.
///
/// `c` is the root of `c² + ((a1 + a2)/b) c + 1 = 0` inside the unit disk.
/// Proportional columns make `D` equivalent to a static fit and are rejected.
pub fn tridiagonal_params(beta: &DMatrix<f64>) -> Result<TridiagonalParams> {
    if beta.ncols() != 2 {
        return Err(Error::Shape(format!("expected 2 loading columns, got {}", beta.ncols())));
    }
    let a1 = beta.column(0).norm_squared();
    let a2 = beta.column(1).norm_squared();
    let b = beta.column(0).dot(&beta.column(1));
    let s = a1 + a2;
    if a1 * a2 - b * b <= 1e-12 * a1 * a2 {
        return Err(Error::Degenerate(
            "loading columns are proportional; the one-lag factor reduces to a static one".to_string(),
        ));
    }
    let (c, alpha_scale) = if libm::fabs(b) < 1e-12 * s {
        (0.0, s)
    } else {
        let root = s + libm::sqrt(s * s - 4.0 * b * b);
        (-2.0 * b / root, root / 2.0)
    };
    let (w1, w2) = (a1 / alpha_scale, a2 / alpha_scale);
    Ok(TridiagonalParams { a1, a2, b, alpha_scale, c, w1, w2, m1: w1 - 1.0, m2: w2 - 1.0 })
}

/// `A0` of dimension `n`: diagonal `(1, 1 + c², …, 1 + c², 1)`, off-diagonal `-c`.
pub fn a0_matrix(c: f64, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, h| {
        if i == h {
            if i == 0 || i + 1 == n {
                1.0
            } else {
                1.0 + c * c
            }
        } else if i.abs_diff(h) == 1 {
            -c
        } else {
            0.0
        }
    })
}

/// `(A0⁻¹)[i, h] = c^|i-h| / (1 - c²)`, for any dimension.
pub fn a0_inverse_entry(c: f64, i: usize, h: usize) -> Result<f64> {
    if !(libm::fabs(c) < 1.0) {
        return Err(Error::Domain(format!("decay constant must satisfy |c| < 1, got {c}")));
    }
    Ok(libm::pow(c, i.abs_diff(h) as f64) / (1.0 - c * c))
}

pub fn a0_inverse(c: f64, n: usize) -> Result<DMatrix<f64>> {
    a0_inverse_entry(c, 0, 0)?;
    Ok(DMatrix::from_fn(n, n, |i, h| libm::pow(c, i.abs_diff(h) as f64) / (1.0 - c * c)))
}

/// `alpha · (A0 + diag(m1, 0, …, 0, m2))`, which equals `D(β)` of dimension `n`.
pub fn d_from_params(params: &TridiagonalParams, n: usize) -> DMatrix<f64> {
    let mut d = a0_matrix(params.c, n);
    d[(0, 0)] += params.m1;
    d[(n - 1, n - 1)] += params.m2;
    d * params.alpha_scale
}

/// The rank-two term `A0⁻¹ G M (I + Gᵀ A0⁻¹ G M)⁻¹ Gᵀ A0⁻¹ / alpha` with
/// `G = (e_1, e_n)` and `M = diag(m1, m2)`.
///
/// Subtracting it from `A0⁻¹ / alpha` gives `D⁻¹`. Signed corner weights are
/// handled directly, so no square roots of `m1`, `m2` are taken.
pub fn corner_correction(params: &TridiagonalParams, n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::Shape(format!("dimension must be at least 2, got {n}")));
    }
    let c = params.c;
    let g = |i: usize, h: usize| a0_inverse_entry(c, i, h);
    let last = n - 1;
    // Gᵀ A0⁻¹ G is 2 × 2.
    let gag = Matrix2::new(g(0, 0)?, g(0, last)?, g(last, 0)?, g(last, last)?);
    let m = Matrix2::new(params.m1, 0.0, 0.0, params.m2);
    let core = (Matrix2::identity() + gag * m).try_inverse().ok_or_else(|| {
        Error::AnalyticFormUnavailable("the 2 × 2 capacitance matrix is singular".to_string())
    })?;
    let h = m * core;
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let u = [g(i, 0)?, g(i, last)?];
        for l in 0..n {
            let v = [g(0, l)?, g(last, l)?];
            let mut acc = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    acc += u[a] * h[(a, b)] * v[b];
                }
            }
            out[(i, l)] = acc / params.alpha_scale;
        }
    }
    Ok(out)
}

/// `D⁻¹` of dimension `n` assembled from the closed forms.
pub fn d_inverse_correction(params: &TridiagonalParams, n: usize) -> Result<DMatrix<f64>> {
    let base = a0_inverse(params.c, n)? / params.alpha_scale;
    Ok(base - corner_correction(params, n)?)
}
