//! Alternating least-squares fit of dynamic principal components.
//!
//! Each iteration regresses every series on the `k + 1` leads of the current
//! factor (the loading step) and then solves the banded normal equations
//! `D(β) f = Σ_j C_j(α) β_j` for the factor (the factor step). The factor is
//! renormalised to mean zero and mean square one after every factor step.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{compensated_sum, sign_of_largest, symmetric_eigen_desc, BandedSystem};
use crate::metrics::{check_parts, fitted_value, lagged_regression, mse_of};
use crate::{Error, Result, SeriesPanel};

/// How the factor is initialised before the first loading step.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Init {
    /// First principal component scores of the centred panel, padded with `k` zeros.
    #[default]
    ClassicalPc,
    /// Spherical principal component scores (robust), padded with `k` zeros.
    SphericalPc,
    /// A caller-supplied vector of length `T` (zero-padded) or `T + k`.
    Supplied(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Number of leads `k`.
    pub k: usize,
    /// Number of components `p`.
    pub p: usize,
    /// Stop once the relative improvement of the criterion drops below this.
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Seeds the random start used when the initial vector is degenerate.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { k: 0, p: 1, epsilon: 1e-4, max_iter: 500, init: Init::ClassicalPc, seed: 0 }
    }
}

impl SolverConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive and finite, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".to_string()));
        }
        if self.p == 0 {
            return Err(Error::Config("at least one component is required".to_string()));
        }
        Ok(())
    }

    fn check_panel(&self, panel: &SeriesPanel) -> Result<()> {
        if panel.n_periods() < self.k + 2 {
            return Err(Error::Input(format!(
                "{} periods are too few for k = {} (need at least k + 2)",
                panel.n_periods(),
                self.k
            )));
        }
        Ok(())
    }
}

/// Iteration record of a fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Convergence {
    pub iterations: usize,
    /// Final value of the criterion (MSE, or SRS for robust fits).
    pub criterion: f64,
    pub converged: bool,
    /// Criterion after the initial loading step and after every iteration.
    pub history: Vec<f64>,
    /// Whether any factor step needed the diagonal jitter.
    pub jittered: bool,
}

/// One fitted dynamic principal component.
#[derive(Debug, Clone, PartialEq)]
pub struct DpcComponent {
    pub k: usize,
    /// Factor of length `T + k`.
    pub f: Vec<f64>,
    /// `m × (k + 1)`; column `i` multiplies `f[t + i]`.
    pub beta: DMatrix<f64>,
    pub alpha: Vec<f64>,
    pub convergence: Convergence,
}

impl DpcComponent {
    /// Reconstruction `ẑ` as a `T × m` matrix.
    pub fn fitted(&self, n_periods: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n_periods, self.beta.nrows(), |t, j| fitted_value(&self.f, &self.beta, &self.alpha, j, t))
    }

    pub fn n_periods(&self) -> usize {
        self.f.len() - self.k
    }
}

/// `p` components fitted in turn to successive residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct DpcModel {
    pub components: Vec<DpcComponent>,
    /// `residual_panels[s]` is what remains after components `0..=s`.
    pub residual_panels: Vec<SeriesPanel>,
}

impl DpcModel {
    pub fn p(&self) -> usize {
        self.components.len()
    }
}

/// The matrices `C_j` of shape `(T + k) × (k + 1)`, with
/// `C_j[t, q] = z[j, t - q] - alpha[j]` when `0 ≤ t - q < T` and zero otherwise.
pub fn build_c(panel: &SeriesPanel, alpha: &[f64], k: usize) -> Result<Vec<DMatrix<f64>>> {
    if alpha.len() != panel.n_series() {
        return Err(Error::Shape(format!("{} intercepts for {} series", alpha.len(), panel.n_series())));
    }
    let t_len = panel.n_periods();
    Ok((0..panel.n_series())
        .map(|j| {
            let z = panel.series(j);
            DMatrix::from_fn(t_len + k, k + 1, |t, q| match t.checked_sub(q) {
                Some(s) if s < t_len => z[s] - alpha[j],
                _ => 0.0,
            })
        })
        .collect())
}

/// The banded matrix `D(β)` of the factor step, dimension `T + k`, bandwidth `k`.
pub fn build_d(beta: &DMatrix<f64>, n_periods: usize) -> BandedSystem {
    build_d_weighted(beta, n_periods, None)
}

/// `D[s, u] = Σ_j Σ_t W[t, j] β[j, s - t] β[j, u - t]`; `W ≡ 1` when `weights` is `None`.
///
/// `weights` is `T × m`.
pub(crate) fn build_d_weighted(beta: &DMatrix<f64>, n_periods: usize, weights: Option<&DMatrix<f64>>) -> BandedSystem {
    let (m, k) = (beta.nrows(), beta.ncols() - 1);
    let mut d = BandedSystem::zeros(n_periods + k, k);
    match weights {
        None => {
            let gram = beta.transpose() * beta;
            for t in 0..n_periods {
                for i in 0..=k {
                    for i2 in i..=k {
                        d.add(t + i, t + i2, gram[(i, i2)]);
                    }
                }
            }
        }
        Some(w) => {
            for t in 0..n_periods {
                for i in 0..=k {
                    for i2 in i..=k {
                        let g: f64 = (0..m).map(|j| w[(t, j)] * beta[(j, i)] * beta[(j, i2)]).sum();
                        d.add(t + i, t + i2, g);
                    }
                }
            }
        }
    }
    d
}

/// Right-hand side `Σ_j C_j(α) β_j`, optionally weighted per cell.
pub(crate) fn build_rhs(
    panel: &SeriesPanel,
    beta: &DMatrix<f64>,
    alpha: &[f64],
    weights: Option<&DMatrix<f64>>,
) -> Vec<f64> {
    let (t_len, k) = (panel.n_periods(), beta.ncols() - 1);
    let mut rhs = vec![0.0; t_len + k];
    for j in 0..panel.n_series() {
        let z = panel.series(j);
        for t in 0..t_len {
            let c = match weights {
                Some(w) => w[(t, j)] * (z[t] - alpha[j]),
                None => z[t] - alpha[j],
            };
            for i in 0..=k {
                rhs[t + i] += beta[(j, i)] * c;
            }
        }
    }
    rhs
}

/// Factor step: the minimiser of the MSE in `f` for fixed `beta` and `alpha`.
///
/// The result is not renormalised.
pub fn update_f(panel: &SeriesPanel, beta: &DMatrix<f64>, alpha: &[f64]) -> Result<Vec<f64>> {
    solve_factor(panel, beta, alpha, None).map(|(f, _)| f)
}

pub(crate) fn solve_factor(
    panel: &SeriesPanel,
    beta: &DMatrix<f64>,
    alpha: &[f64],
    weights: Option<&DMatrix<f64>>,
) -> Result<(Vec<f64>, bool)> {
    if beta.ncols() == 0 || beta.nrows() != panel.n_series() || alpha.len() != panel.n_series() {
        return Err(Error::Shape(format!(
            "loadings {:?} and {} intercepts do not match {} series",
            beta.shape(),
            alpha.len(),
            panel.n_series()
        )));
    }
    let d = build_d_weighted(beta, panel.n_periods(), weights);
    let rhs = build_rhs(panel, beta, alpha, weights);
    d.solve(&rhs)
}

/// Loading step: per-series least squares on `(f[t], …, f[t+k], 1)`.
pub fn update_beta_alpha(panel: &SeriesPanel, f: &[f64]) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let k = f
        .len()
        .checked_sub(panel.n_periods())
        .ok_or_else(|| Error::Shape(format!("factor of length {} is shorter than T = {}", f.len(), panel.n_periods())))?;
    let fit = lagged_regression(panel, f, k)?;
    Ok((fit.beta, fit.alpha))
}

/// Rescales `f` to mean zero and `Σ f² = len(f)`.
pub fn normalize(f: &mut [f64]) -> Result<()> {
    let n = f.len() as f64;
    let mean = compensated_sum(f.iter().copied()) / n;
    let norm = libm::sqrt(compensated_sum(f.iter().map(|x| (x - mean) * (x - mean))));
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Degenerate("factor is constant and cannot be normalised".to_string()));
    }
    let scale = libm::sqrt(n) / norm;
    for x in f.iter_mut() {
        *x = (*x - mean) * scale;
    }
    Ok(())
}

/// Flips `f` and `beta` together so the largest-magnitude entry of `f` is positive.
pub(crate) fn apply_sign_convention(f: &mut [f64], beta: &mut DMatrix<f64>) {
    if sign_of_largest(f) < 0.0 {
        f.iter_mut().for_each(|x| *x = -*x);
        beta.neg_mut();
    }
}

/// First principal component scores of the centred panel (length `T`).
pub fn classical_pc_scores(panel: &SeriesPanel) -> Result<Vec<f64>> {
    let x = panel.centered();
    let cov = x.transpose() * &x / panel.n_periods() as f64;
    let (values, vectors) = symmetric_eigen_desc(&cov);
    if !(values[0] > 0.0) {
        return Err(Error::DegeneratePanel);
    }
    Ok((&x * vectors.column(0)).iter().copied().collect())
}

/// Initial factor of length `T + k` with mean zero and unit mean square.
pub(crate) fn initial_factor(panel: &SeriesPanel, config: &SolverConfig) -> Result<Vec<f64>> {
    let (t_len, k) = (panel.n_periods(), config.k);
    let mut f = match &config.init {
        Init::ClassicalPc => classical_pc_scores(panel)?,
        Init::SphericalPc => crate::robust::spherical_pc_scores(panel)?,
        Init::Supplied(v) if v.len() == t_len || v.len() == t_len + k => v.clone(),
        Init::Supplied(v) => {
            return Err(Error::Config(format!(
                "initial factor has length {}, expected {t_len} or {}",
                v.len(),
                t_len + k
            )))
        }
    };
    f.resize(t_len + k, 0.0);
    if normalize(&mut f).is_err() {
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        f = (0..t_len + k).map(|_| StandardNormal.sample(&mut rng)).collect();
        normalize(&mut f)?;
    }
    Ok(f)
}

/// Fits the first dynamic principal component of order `config.k`.
///
/// Running out of iterations is not an error: the component is returned with
/// `convergence.converged == false`.
pub fn fit_component(panel: &SeriesPanel, config: &SolverConfig) -> Result<DpcComponent> {
    config.validate()?;
    config.check_panel(panel)?;
    if !(panel.total_variance() > 0.0) {
        return Err(Error::DegeneratePanel);
    }
    let mut f = initial_factor(panel, config)?;
    let (mut beta, mut alpha) = update_beta_alpha(panel, &f)?;
    apply_sign_convention(&mut f, &mut beta);
    let mut current = mse_of(panel, &f, &beta, &alpha)?;
    let mut convergence = Convergence { history: vec![current], ..Convergence::default() };

    while convergence.iterations < config.max_iter {
        if current == 0.0 {
            convergence.converged = true;
            break;
        }
        let (mut f_new, jittered) = solve_factor(panel, &beta, &alpha, None)?;
        convergence.jittered |= jittered;
        normalize(&mut f_new)?;
        let (mut beta_new, alpha_new) = update_beta_alpha(panel, &f_new)?;
        apply_sign_convention(&mut f_new, &mut beta_new);
        let next = mse_of(panel, &f_new, &beta_new, &alpha_new)?;
        convergence.iterations += 1;
        convergence.history.push(next);
        let improvement = (current - next) / current;
        f = f_new;
        beta = beta_new;
        alpha = alpha_new;
        current = next;
        if improvement < config.epsilon {
            convergence.converged = true;
            break;
        }
    }
    convergence.criterion = current;
    Ok(DpcComponent { k: config.k, f, beta, alpha, convergence })
}

/// Fits `config.p` components, each to the residuals of the previous ones.
pub fn fit(panel: &SeriesPanel, config: &SolverConfig) -> Result<DpcModel> {
    fit_with(panel, config, fit_component)
}

pub(crate) fn fit_with<F>(panel: &SeriesPanel, config: &SolverConfig, mut fit_one: F) -> Result<DpcModel>
where
    F: FnMut(&SeriesPanel, &SolverConfig) -> Result<DpcComponent>,
{
    config.validate()?;
    let mut components = Vec::with_capacity(config.p);
    let mut residual_panels = Vec::with_capacity(config.p);
    let mut current = panel.clone();
    for _ in 0..config.p {
        let component = fit_one(&current, config)?;
        let next = current.minus(&component.fitted(current.n_periods()))?;
        components.push(component);
        residual_panels.push(next.clone());
        current = next;
    }
    Ok(DpcModel { components, residual_panels })
}

/// Sum of the reconstructions of the first `upto_p` components.
pub fn reconstruct(model: &DpcModel, upto_p: usize) -> Result<SeriesPanel> {
    if upto_p == 0 || upto_p > model.p() {
        return Err(Error::Config(format!("upto_p must lie in 1..={}, got {upto_p}", model.p())));
    }
    let template = &model.residual_panels[0];
    let t_len = template.n_periods();
    let mut total = DMatrix::zeros(t_len, template.n_series());
    for component in &model.components[..upto_p] {
        check_parts(template, &component.f, &component.beta, &component.alpha)?;
        total += component.fitted(t_len);
    }
    template.with_values(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mse;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
    }

    fn random_panel(t: usize, m: usize, seed: u64) -> SeriesPanel {
        let mut r = lcg(seed);
        SeriesPanel::unlabeled(DMatrix::from_fn(t, m, |_, _| r())).unwrap()
    }

    fn dynamic_panel(t: usize, m: usize, k: usize, seed: u64) -> SeriesPanel {
        let mut r = lcg(seed);
        let v: Vec<f64> = (0..t + k).map(|_| r()).collect();
        let b: Vec<f64> = (0..m * (k + 1)).map(|_| r()).collect();
        SeriesPanel::unlabeled(DMatrix::from_fn(t, m, |s, j| {
            (0..=k).map(|i| b[j * (k + 1) + i] * v[s + i]).sum::<f64>() + 0.05 * r()
        }))
        .unwrap()
    }

    #[test]
    fn build_c_small_example() {
        let p = SeriesPanel::unlabeled(DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 3.0])).unwrap();
        let c = build_c(&p, &[0.0], 1).unwrap();
        let expected = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 1.0, 3.0, 2.0, 0.0, 3.0]);
        assert_eq!(c[0], expected);
        let c0 = build_c(&p, &[2.0], 0).unwrap();
        assert_eq!(c0[0].as_slice(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn build_c_matches_loop_oracle_with_centering() {
        let p = random_panel(7, 3, 11);
        let alpha = p.means();
        let k = 2;
        let c = build_c(&p, &alpha, k).unwrap();
        for j in 0..3 {
            for t in 0..7 + k {
                for q in 0..=k {
                    let mut expect = 0.0;
                    for s in 0..7 {
                        if s + q == t {
                            expect = p.series(j)[s] - alpha[j];
                        }
                    }
                    assert_eq!(c[j][(t, q)], expect);
                }
            }
        }
    }

    #[test]
    fn build_d_matches_triple_loop() {
        let mut r = lcg(5);
        let (m, k, t_len) = (4, 3, 8);
        let beta = DMatrix::from_fn(m, k + 1, |_, _| r());
        let d = build_d(&beta, t_len).to_dense();
        for s in 0..t_len + k {
            for u in 0..t_len + k {
                let mut expect = 0.0;
                for j in 0..m {
                    for t in 0..t_len {
                        if s >= t && u >= t && s - t <= k && u - t <= k {
                            expect += beta[(j, s - t)] * beta[(j, u - t)];
                        }
                    }
                }
                assert!((d[(s, u)] - expect).abs() < 1e-12);
                if (s as isize - u as isize).abs() > k as isize {
                    assert_eq!(d[(s, u)], 0.0);
                }
            }
        }
    }

    #[test]
    fn build_d_static_is_scaled_identity() {
        let beta = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, -2.0]);
        let d = build_d(&beta, 5).to_dense();
        assert_eq!(d, DMatrix::identity(5, 5) * 9.0);
    }

    #[test]
    fn rhs_equals_sum_of_c_times_beta() {
        let p = random_panel(6, 3, 2);
        let mut r = lcg(3);
        let beta = DMatrix::from_fn(3, 3, |_, _| r());
        let alpha = vec![0.1, -0.2, 0.3];
        let rhs = build_rhs(&p, &beta, &alpha, None);
        let c = build_c(&p, &alpha, 2).unwrap();
        for t in 0..8 {
            let expect: f64 = (0..3).map(|j| (c[j].row(t) * beta.row(j).transpose())[(0, 0)]).sum();
            assert!((rhs[t] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn update_f_matches_dense_solve() {
        let p = random_panel(4, 2, 9);
        let mut r = lcg(10);
        let beta = DMatrix::from_fn(2, 2, |_, _| r());
        let alpha = vec![r(), r()];
        let f = update_f(&p, &beta, &alpha).unwrap();
        let mut d = DMatrix::zeros(5, 5);
        let mut rhs = nalgebra::DVector::zeros(5);
        for j in 0..2 {
            // Dense normal equations from the explicit lead design of series j.
            let x = DMatrix::from_fn(4, 5, |t, s| if s >= t && s - t <= 1 { beta[(j, s - t)] } else { 0.0 });
            d += x.transpose() * &x;
            let zc = nalgebra::DVector::from_iterator(4, p.series(j).iter().map(|z| z - alpha[j]));
            rhs += x.transpose() * zc;
        }
        let dense = d.lu().solve(&rhs).unwrap();
        for t in 0..5 {
            assert!((f[t] - dense[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn update_f_static_is_pc_score_update() {
        let p = random_panel(10, 3, 4);
        let beta = DMatrix::from_column_slice(3, 1, &[0.5, -1.0, 2.0]);
        let f = update_f(&p, &beta, &[0.0; 3]).unwrap();
        for t in 0..10 {
            let expect = (0..3).map(|j| p.values()[(t, j)] * beta[(j, 0)]).sum::<f64>() / 5.25;
            assert!((f[t] - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn update_beta_alpha_noiseless_and_null() {
        let f: Vec<f64> = (0..8).map(|t| (t as f64 * 0.7).sin()).collect();
        let z: Vec<f64> = f.iter().map(|x| 2.0 * x + 3.0).collect();
        let p = SeriesPanel::unlabeled(DMatrix::from_column_slice(8, 1, &z)).unwrap();
        let (b, a) = update_beta_alpha(&p, &f).unwrap();
        assert!((b[(0, 0)] - 2.0).abs() < 1e-12 && (a[0] - 3.0).abs() < 1e-12);

        let f = [1.0, -1.0, 1.0, -1.0];
        let p = SeriesPanel::unlabeled(DMatrix::from_column_slice(4, 1, &[1.0, 1.0, -1.0, -1.0])).unwrap();
        let (b, a) = update_beta_alpha(&p, &f).unwrap();
        assert!(b[(0, 0)].abs() < 1e-12 && a[0].abs() < 1e-12);
    }

    #[test]
    fn update_beta_alpha_matches_normal_equations() {
        let (t_len, k) = (20, 2);
        let p = random_panel(t_len, 2, 21);
        let mut r = lcg(22);
        let f: Vec<f64> = (0..t_len + k).map(|_| r()).collect();
        let (b, a) = update_beta_alpha(&p, &f).unwrap();
        let x = DMatrix::from_fn(t_len, k + 2, |t, i| if i <= k { f[t + i] } else { 1.0 });
        let xtx = x.transpose() * &x;
        for j in 0..2 {
            let y = nalgebra::DVector::from_column_slice(p.series(j));
            let coef = xtx.clone().cholesky().unwrap().solve(&(x.transpose() * y));
            for i in 0..=k {
                assert!((b[(j, i)] - coef[i]).abs() < 1e-10);
            }
            assert!((a[j] - coef[k + 1]).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_factor_is_rank_deficient() {
        let p = random_panel(6, 1, 1);
        assert!(matches!(update_beta_alpha(&p, &[1.0; 6]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn single_series_reconstructs_itself() {
        let p = random_panel(30, 1, 7);
        let c = fit_component(&p, &SolverConfig::default()).unwrap();
        assert!(mse(&p, &c).unwrap() < 1e-12);
    }

    #[test]
    fn fit_normalises_and_signs_factor() {
        let p = dynamic_panel(60, 4, 2, 8);
        let c = fit_component(&p, &SolverConfig::with_k(2)).unwrap();
        let n = c.f.len() as f64;
        let mean = c.f.iter().sum::<f64>() / n;
        let ms = c.f.iter().map(|x| x * x).sum::<f64>() / n;
        assert!(mean.abs() < 1e-10 && (ms - 1.0).abs() < 1e-10);
        assert!(sign_of_largest(&c.f) > 0.0);
        assert!(c.convergence.converged);
    }

    #[test]
    fn fit_descends_and_is_a_fixed_point() {
        let p = dynamic_panel(80, 5, 3, 12);
        let cfg = SolverConfig { k: 3, epsilon: 1e-14, max_iter: 20_000, ..SolverConfig::default() };
        let c = fit_component(&p, &cfg).unwrap();
        for w in c.convergence.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let again = update_f(&p, &c.beta, &c.alpha).unwrap();
        let max_diff = again.iter().zip(&c.f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max_diff < 1e-8, "max diff {max_diff}");
    }

    #[test]
    fn residual_chain_and_reconstruction() {
        let p = dynamic_panel(50, 4, 1, 3);
        let cfg = SolverConfig { k: 1, p: 2, ..SolverConfig::default() };
        let model = fit(&p, &cfg).unwrap();
        let mut prev = p.values().clone();
        for (s, comp) in model.components.iter().enumerate() {
            let expect = &prev - comp.fitted(50);
            assert!((&expect - model.residual_panels[s].values()).amax() < 1e-10);
            prev = expect;
        }
        let full = reconstruct(&model, 2).unwrap();
        assert!((full.values() + model.residual_panels[1].values() - p.values()).amax() < 1e-10);
        assert!(reconstruct(&model, 3).is_err());
        let m1 = (p.values() - reconstruct(&model, 1).unwrap().values()).norm_squared();
        let m2 = (p.values() - full.values()).norm_squared();
        assert!(m2 <= m1);
    }

    #[test]
    fn supplied_zero_init_falls_back_to_random() {
        let p = dynamic_panel(40, 3, 1, 5);
        let cfg = SolverConfig { k: 1, init: Init::Supplied(vec![0.0; 40]), seed: 9, ..SolverConfig::default() };
        let a = fit_component(&p, &cfg).unwrap();
        let b = fit_component(&p, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.convergence.criterion.is_finite());
    }

    #[test]
    fn rejects_too_short_panels_and_bad_config() {
        let p = random_panel(3, 2, 1);
        assert!(matches!(fit_component(&p, &SolverConfig::with_k(2)), Err(Error::Input(_))));
        let bad = SolverConfig { epsilon: 0.0, ..SolverConfig::default() };
        assert!(matches!(fit_component(&p, &bad), Err(Error::Config(_))));
    }
}
