//! Reconstruction error, explained variance and compression ratio.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::{compensated_sum, least_squares};
use crate::solver::DpcComponent;
use crate::{Error, Result, SeriesPanel};

/// Reconstruction MSE of a component: `Σ_j (1/T) Σ_t (z[j,t] - ẑ[j,t])²`.
pub fn mse(panel: &SeriesPanel, component: &DpcComponent) -> Result<f64> {
    mse_of(panel, &component.f, &component.beta, &component.alpha)
}

/// [`mse`] on raw parts: `f` of length `T + k`, `beta` of shape `m × (k + 1)`.
pub fn mse_of(panel: &SeriesPanel, f: &[f64], beta: &DMatrix<f64>, alpha: &[f64]) -> Result<f64> {
    check_parts(panel, f, beta, alpha)?;
    let t_len = panel.n_periods();
    let per_series = (0..panel.n_series()).map(|j| {
        let z = panel.series(j);
        let sq = (0..t_len).map(|t| {
            let r = z[t] - fitted_value(f, beta, alpha, j, t);
            r * r
        });
        compensated_sum(sq) / t_len as f64
    });
    Ok(compensated_sum(per_series))
}

/// `ẑ[j,t] = Σ_i beta[j,i] f[t+i] + alpha[j]`.
#[inline]
pub(crate) fn fitted_value(f: &[f64], beta: &DMatrix<f64>, alpha: &[f64], j: usize, t: usize) -> f64 {
    let mut acc = alpha[j];
    for i in 0..beta.ncols() {
        acc += beta[(j, i)] * f[t + i];
    }
    acc
}

pub(crate) fn check_parts(panel: &SeriesPanel, f: &[f64], beta: &DMatrix<f64>, alpha: &[f64]) -> Result<()> {
    let (t_len, m) = (panel.n_periods(), panel.n_series());
    if beta.ncols() == 0 {
        return Err(Error::Shape("loading matrix has no columns".to_string()));
    }
    let k = beta.ncols() - 1;
    if f.len() != t_len + k {
        return Err(Error::Shape(format!("factor has length {}, expected T + k = {}", f.len(), t_len + k)));
    }
    if beta.nrows() != m || alpha.len() != m {
        return Err(Error::Shape(format!(
            "loadings for {} series and {} intercepts, panel has {m} series",
            beta.nrows(),
            alpha.len()
        )));
    }
    Ok(())
}

/// Least-squares fit of every series on the leads `f[t], …, f[t+k]` and an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedFit {
    /// `m × (k + 1)`.
    pub beta: DMatrix<f64>,
    pub alpha: Vec<f64>,
    /// Number of time points used, `min(T, len(f) - k)`.
    pub rows: usize,
    /// `Σ_j` mean squared residual over the rows used.
    pub mse: f64,
}

/// Regresses each series on `(f[t], …, f[t+k], 1)`.
///
/// With `len(f) = T + k` every period is used. A shorter `f` (static scores of
/// length `T`) drops the last `k` periods, whose leads do not exist.
pub fn lagged_regression(panel: &SeriesPanel, f: &[f64], k: usize) -> Result<LaggedFit> {
    let (t_len, m) = (panel.n_periods(), panel.n_series());
    if f.len() < k + 1 {
        return Err(Error::Shape(format!("factor of length {} is too short for {k} lags", f.len())));
    }
    let rows = t_len.min(f.len() - k);
    if rows < k + 2 {
        return Err(Error::Input(format!("{rows} usable periods cannot identify {} coefficients", k + 2)));
    }
    let design = DMatrix::from_fn(rows, k + 2, |t, i| if i <= k { f[t + i] } else { 1.0 });
    let rhs = panel.values().rows(0, rows).into_owned();
    let coef = least_squares(&design, &rhs)?;
    let beta = coef.rows(0, k + 1).transpose();
    let alpha: Vec<f64> = (0..m).map(|j| coef[(k + 1, j)]).collect();
    let fitted = &design * &coef;
    let per_series = (0..m).map(|j| {
        compensated_sum((0..rows).map(|t| {
            let r = rhs[(t, j)] - fitted[(t, j)];
            r * r
        })) / rows as f64
    });
    let mse = compensated_sum(per_series);
    Ok(LaggedFit { beta, alpha, rows, mse })
}

/// Percentage of total variance explained by the best `k`-lag reconstruction from `component.f`.
///
/// Returns `100 · (1 - min_{β,α} MSE / Σ_j V_j)` with population variances.
pub fn explained_variance(panel: &SeriesPanel, component: &DpcComponent, k: usize) -> Result<f64> {
    let total = panel.total_variance();
    if !(total > 0.0) {
        return Err(Error::DegeneratePanel);
    }
    let fit = lagged_regression(panel, &component.f, k)?;
    Ok(100.0 * (1.0 - fit.mse / total))
}

/// Fraction of the panel's `m·T` numbers needed to store `p` components of order `k`.
///
/// Equal to `((T + k)p + (k + 1)mp + m) / (mT)`.
pub fn information_proportion(t: u64, m: u64, k: u64, p: u64) -> f64 {
    let (num, den) = information_proportion_ratio(t, m, k, p);
    num as f64 / den as f64
}

/// Numerator and denominator of [`information_proportion`].
pub fn information_proportion_ratio(t: u64, m: u64, k: u64, p: u64) -> (u128, u128) {
    let (t, m, k, p) = (t as u128, m as u128, k as u128, p as u128);
    ((t + k) * p + (k + 1) * m * p + m, m * t)
}
