//! S-estimator dynamic principal components.
//!
//! Instead of the MSE these fits minimise `SRS = Σ_j s_j²`, where `s_j` is the
//! M-scale of the residuals of series `j`. Each iteration reweights the factor
//! step with
//!
//! ```text
//! W[j,t] = s_j² w(r[j,t] / s_j) / Σ_h w(r[j,h] / s_j) r[j,h]²
//! ```
//!
//! refits the loadings by weighted least squares with the weights `w` of the
//! previous iterate, and recomputes the scales.

mod mscale;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

pub use mscale::{m_scale, MScaleSpec, RhoFamily};

use crate::linalg::{symmetric_eigen_desc, weighted_least_squares};
use crate::metrics::{check_parts, fitted_value, mse_of};
use crate::solver::{
    apply_sign_convention, fit_with, initial_factor, normalize, solve_factor, update_beta_alpha, Convergence,
    DpcComponent, DpcModel, SolverConfig,
};
use crate::{Error, Result, SeriesPanel};

const INIT_REWEIGHTING_ROUNDS: usize = 20;

/// Current iterate of a robust fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustFitState {
    pub f: Vec<f64>,
    pub beta: DMatrix<f64>,
    pub alpha: Vec<f64>,
    /// M-scale of each series' residuals.
    pub s: Vec<f64>,
    /// `w(r[j,t] / s_j)` stored `T × m`.
    pub weights: DMatrix<f64>,
    pub convergence: Convergence,
}

impl RobustFitState {
    pub fn srs(&self) -> f64 {
        self.s.iter().map(|s| s * s).sum()
    }

    pub fn into_component(self) -> DpcComponent {
        DpcComponent { k: self.beta.ncols() - 1, f: self.f, beta: self.beta, alpha: self.alpha, convergence: self.convergence }
    }
}

/// Weights of one robust iteration, both stored `T × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustWeights {
    /// `w(r[j,t] / s_j)`, used by the loading step.
    pub w: DMatrix<f64>,
    /// Normalised weights `W[j,t]`, used by the factor step.
    pub big_w: DMatrix<f64>,
}

/// Robust fit of `p` components.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustModel {
    pub model: DpcModel,
    /// Per component, the M-scales of the residual series after that component.
    pub scales: Vec<Vec<f64>>,
}

impl RobustModel {
    pub fn srs(&self) -> Vec<f64> {
        self.scales.iter().map(|s| s.iter().map(|x| x * x).sum()).collect()
    }
}

/// Residuals `z - ẑ` as a `T × m` matrix.
pub fn residuals(panel: &SeriesPanel, f: &[f64], beta: &DMatrix<f64>, alpha: &[f64]) -> Result<DMatrix<f64>> {
    check_parts(panel, f, beta, alpha)?;
    let z = panel.values();
    Ok(DMatrix::from_fn(panel.n_periods(), panel.n_series(), |t, j| z[(t, j)] - fitted_value(f, beta, alpha, j, t)))
}

/// M-scales of every residual column.
pub fn scales(residuals: &DMatrix<f64>, spec: &MScaleSpec) -> Result<Vec<f64>> {
    residuals.column_iter().map(|col| m_scale(col.as_slice(), spec)).collect()
}

/// Sum of squared residual M-scales.
pub fn srs(panel: &SeriesPanel, component: &DpcComponent, spec: &MScaleSpec) -> Result<f64> {
    let r = residuals(panel, &component.f, &component.beta, &component.alpha)?;
    Ok(scales(&r, spec)?.iter().map(|s| s * s).sum())
}

/// Weights for the next iteration given residuals and their scales.
pub fn robust_weights(residuals: &DMatrix<f64>, scales: &[f64], spec: &MScaleSpec) -> Result<RobustWeights> {
    let (t_len, m) = residuals.shape();
    if scales.len() != m {
        return Err(Error::Shape(format!("{} scales for {m} series", scales.len())));
    }
    let mut w = DMatrix::zeros(t_len, m);
    let mut big_w = DMatrix::zeros(t_len, m);
    for j in 0..m {
        let s = scales[j];
        if !(s > 0.0) {
            return Err(Error::ExactFit { series: j });
        }
        let mut denom = 0.0;
        for t in 0..t_len {
            let r = residuals[(t, j)];
            let wt = spec.weight(r / s);
            w[(t, j)] = wt;
            denom += wt * r * r;
        }
        if !(denom > 0.0) {
            return Err(Error::ExactFit { series: j });
        }
        for t in 0..t_len {
            big_w[(t, j)] = s * s * w[(t, j)] / denom;
        }
    }
    Ok(RobustWeights { w, big_w })
}

/// Weighted factor step `f = D_W(β)⁻¹ Σ_j C_j^W(α) β_j`; not renormalised.
pub fn update_f_robust(panel: &SeriesPanel, beta: &DMatrix<f64>, alpha: &[f64], big_w: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_weights(panel, big_w)?;
    solve_factor(panel, beta, alpha, Some(big_w)).map(|(f, _)| f)
}

/// Per-series weighted least squares on `(f[t], …, f[t+k], 1)` with weights `w[t, j]`.
pub fn update_beta_alpha_robust(panel: &SeriesPanel, f: &[f64], w: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    check_weights(panel, w)?;
    let (t_len, m) = (panel.n_periods(), panel.n_series());
    let k = f
        .len()
        .checked_sub(t_len)
        .ok_or_else(|| Error::Shape(format!("factor of length {} is shorter than T = {t_len}", f.len())))?;
    let design = DMatrix::from_fn(t_len, k + 2, |t, i| if i <= k { f[t + i] } else { 1.0 });
    let mut beta = DMatrix::zeros(m, k + 1);
    let mut alpha = vec![0.0; m];
    for j in 0..m {
        let coef = weighted_least_squares(&design, panel.series(j), w.column(j).as_slice()).map_err(|e| match e {
            Error::Degenerate(msg) => Error::Degenerate(format!("series {j}: {msg}")),
            other => other,
        })?;
        for i in 0..=k {
            beta[(j, i)] = coef[i];
        }
        alpha[j] = coef[k + 1];
    }
    Ok((beta, alpha))
}

fn check_weights(panel: &SeriesPanel, w: &DMatrix<f64>) -> Result<()> {
    if w.shape() != panel.values().shape() {
        return Err(Error::Shape(format!("weights are {:?}, panel is {:?}", w.shape(), panel.values().shape())));
    }
    Ok(())
}

/// Approximate regression S-estimate of the loadings for a fixed factor:
/// least squares followed by a fixed number of M-scale reweightings.
fn initial_loadings(panel: &SeriesPanel, f: &[f64], spec: &MScaleSpec) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (mut beta, mut alpha) = update_beta_alpha(panel, f)?;
    for _ in 0..INIT_REWEIGHTING_ROUNDS {
        let r = residuals(panel, f, &beta, &alpha)?;
        let s = scales(&r, spec)?;
        if s.iter().any(|x| !(*x > 0.0)) {
            break;
        }
        let w = DMatrix::from_fn(r.nrows(), r.ncols(), |t, j| spec.weight(r[(t, j)] / s[j]));
        match update_beta_alpha_robust(panel, f, &w) {
            Ok((b, a)) => {
                beta = b;
                alpha = a;
            }
            Err(Error::Degenerate(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok((beta, alpha))
}

fn state_from(
    panel: &SeriesPanel,
    f: Vec<f64>,
    beta: DMatrix<f64>,
    alpha: Vec<f64>,
    spec: &MScaleSpec,
) -> Result<(RobustFitState, DMatrix<f64>)> {
    let r = residuals(panel, &f, &beta, &alpha)?;
    let s = scales(&r, spec)?;
    let t_len = panel.n_periods();
    let state = RobustFitState {
        f,
        beta,
        alpha,
        weights: DMatrix::zeros(t_len, panel.n_series()),
        s,
        convergence: Convergence::default(),
    };
    Ok((state, r))
}

/// First S-estimator dynamic principal component of order `config.k`.
///
/// The initial factor follows `config.init`; [`crate::Init::SphericalPc`] is
/// the robust choice. The returned state is the iterate with the smallest SRS
/// seen, and `weights` holds its `w` weights.
pub fn fit_s_component(panel: &SeriesPanel, config: &SolverConfig, spec: &MScaleSpec) -> Result<RobustFitState> {
    config.validate()?;
    spec.validate()?;
    if panel.n_periods() < config.k + 2 {
        return Err(Error::Input(format!(
            "{} periods are too few for k = {} (need at least k + 2)",
            panel.n_periods(),
            config.k
        )));
    }
    if !(panel.total_variance() > 0.0) {
        return Err(Error::DegeneratePanel);
    }
    let mut f = initial_factor(panel, config)?;
    let (mut beta, alpha) = initial_loadings(panel, &f, spec)?;
    apply_sign_convention(&mut f, &mut beta);
    let (mut state, mut r) = state_from(panel, f, beta, alpha, spec)?;
    let mut current = state.srs();
    let mut history = vec![current];
    let mut best: Option<RobustFitState> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut jittered = false;

    loop {
        let weights = robust_weights(&r, &state.s, spec)?;
        state.weights = weights.w.clone();
        if best.as_ref().map_or(true, |b| current < b.srs()) {
            best = Some(state.clone());
        }
        if converged || iterations >= config.max_iter {
            break;
        }
        let (mut f_new, jit) = solve_factor(panel, &state.beta, &state.alpha, Some(&weights.big_w))?;
        jittered |= jit;
        normalize(&mut f_new)?;
        let (mut beta_new, alpha_new) = update_beta_alpha_robust(panel, &f_new, &weights.w)?;
        apply_sign_convention(&mut f_new, &mut beta_new);
        let (next_state, next_r) = state_from(panel, f_new, beta_new, alpha_new, spec)?;
        let next = next_state.srs();
        iterations += 1;
        history.push(next);
        converged = (current - next) / current < config.epsilon;
        state = next_state;
        r = next_r;
        current = next;
    }

    let mut best = best.unwrap_or(state);
    best.convergence = Convergence { iterations, criterion: best.srs(), converged, history, jittered };
    Ok(best)
}

/// Fits `config.p` robust components, each to the residuals of the previous ones.
pub fn fit_s(panel: &SeriesPanel, config: &SolverConfig, spec: &MScaleSpec) -> Result<RobustModel> {
    let mut scales_out = Vec::with_capacity(config.p);
    let model = fit_with(panel, config, |current, cfg| {
        let state = fit_s_component(current, cfg, spec)?;
        scales_out.push(state.s.clone());
        Ok(state.into_component())
    })?;
    Ok(RobustModel { model, scales: scales_out })
}

/// MSE of a robust state, for comparison with least-squares fits.
pub fn state_mse(panel: &SeriesPanel, state: &RobustFitState) -> Result<f64> {
    mse_of(panel, &state.f, &state.beta, &state.alpha)
}

/// Spherical principal component scores (length `T`).
///
/// Rows are centred at the coordinatewise median and scaled to unit length;
/// the leading eigenvector of their second-moment matrix gives the direction,
/// and the median-centred observations are projected on it.
pub fn spherical_pc_scores(panel: &SeriesPanel) -> Result<Vec<f64>> {
    let (t_len, m) = (panel.n_periods(), panel.n_series());
    let medians: Vec<f64> = (0..m).map(|j| median(panel.series(j))).collect();
    let x = DMatrix::from_fn(t_len, m, |t, j| panel.values()[(t, j)] - medians[j]);
    let mut y = x.clone();
    for mut row in y.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let second = y.transpose() * &y / t_len as f64;
    let (values, vectors) = symmetric_eigen_desc(&second);
    if !(values[0] > 0.0) {
        return Err(Error::DegeneratePanel);
    }
    Ok((&x * vectors.column(0)).iter().copied().collect())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
