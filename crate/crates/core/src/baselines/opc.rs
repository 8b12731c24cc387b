use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::symmetric_eigen_desc;
use crate::metrics::lagged_regression;
use crate::{Error, Result, SeriesPanel};

/// Ordinary principal components of the (population) sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct OpcFit {
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// `m × p`, orthonormal columns, each with its largest-magnitude entry positive.
    pub loadings: DMatrix<f64>,
    /// `T × p` scores of the centred panel.
    pub scores: DMatrix<f64>,
}

impl OpcFit {
    /// Scores of component `i` as a vector.
    pub fn score(&self, i: usize) -> Vec<f64> {
        self.scores.column(i).iter().copied().collect()
    }
}

pub fn opc_fit(panel: &SeriesPanel, p: usize) -> Result<OpcFit> {
    let m = panel.n_series();
    if p == 0 || p > m {
        return Err(Error::Config(format!("number of components must lie in 1..={m}, got {p}")));
    }
    let x = panel.centered();
    let cov = x.transpose() * &x / panel.n_periods() as f64;
    let (eigenvalues, vectors) = symmetric_eigen_desc(&cov);
    let loadings = vectors.columns(0, p).into_owned();
    let scores = &x * &loadings;
    Ok(OpcFit { eigenvalues, loadings, scores })
}

/// Least-squares reconstruction from leads of static scores.
#[derive(Debug, Clone, PartialEq)]
pub struct OpcReconstruction {
    /// `rows × m` fitted values for periods `0..rows`.
    pub fitted: DMatrix<f64>,
    /// Periods used: the last `k` have no complete set of leads and are dropped.
    pub rows: usize,
    pub mse: f64,
}

/// Regresses every series on `(p[t], …, p[t+k], 1)` over the periods where all leads exist.
pub fn opc_reconstruct_lagged(panel: &SeriesPanel, scores: &[f64], k: usize) -> Result<OpcReconstruction> {
    if scores.len() != panel.n_periods() {
        return Err(Error::Shape(format!("{} scores for {} periods", scores.len(), panel.n_periods())));
    }
    let fit = lagged_regression(panel, scores, k)?;
    let fitted = DMatrix::from_fn(fit.rows, panel.n_series(), |t, j| {
        fit.alpha[j] + (0..=k).map(|i| fit.beta[(j, i)] * scores[t + i]).sum::<f64>()
    });
    Ok(OpcReconstruction { fitted, rows: fit.rows, mse: fit.mse })
}
