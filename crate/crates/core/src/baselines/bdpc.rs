use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::spectrum::{estimate_cross_spectrum, Smoothing, SpectralEstimate};
use crate::linalg::compensated_sum;
use crate::{Error, Result, SeriesPanel};

/// Truncated two-sided filter built from per-frequency leading eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BdpcModel {
    /// Truncation half-width `M`.
    pub half_width: usize,
    /// Row `M + k` holds the filter vector `c_k`, `k = -M..=M`.
    pub filter: DMatrix<f64>,
    /// Row `M + j` holds the reconstruction vector `β_j`, `j = -M..=M`.
    pub loadings: DMatrix<f64>,
    /// Largest imaginary part discarded from the inverse transforms, relative
    /// to the largest real coefficient.
    pub imag_residue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BdpcReconstruction {
    /// Factor `f_t`, `t = 0..T`.
    pub factor: Vec<f64>,
    /// `T × m`.
    pub fitted: DMatrix<f64>,
    pub mse: f64,
}

/// Leading eigenvector of a Hermitian matrix, rotated so its largest-modulus
/// coordinate is real and positive.
///
/// When several coordinates share the largest modulus, `previous` (the
/// reference coordinate of the neighbouring frequency) is kept if it is among
/// them, otherwise the lowest index is used. Returns the vector and the
/// reference coordinate.
fn leading_eigenvector(s: &DMatrix<Complex64>, previous: Option<usize>) -> Result<(Vec<Complex64>, usize)> {
    let eig = SymmetricEigen::try_new(s.clone(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Hermitian eigen-decomposition did not converge".to_string()))?;
    let top = (0..eig.eigenvalues.len())
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(b.cmp(&a)))
        .unwrap_or(0);
    let v: Vec<Complex64> = eig.eigenvectors.column(top).iter().copied().collect();
    let max = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    let tied = |i: usize| v[i].norm() >= max * (1.0 - 1e-12);
    let reference = match previous {
        Some(p) if p < v.len() && tied(p) => p,
        _ => (0..v.len()).find(|&i| tied(i)).unwrap_or(0),
    };
    let rot = v[reference].conj() / v[reference].norm();
    Ok((v.into_iter().map(|z| z * rot).collect(), reference))
}

/// Per-frequency leading eigenvectors `V_l`, `l = 0..T`, with `V_{T-l} = conj(V_l)`.
fn eigenvector_path(est: &SpectralEstimate) -> Result<Vec<Vec<Complex64>>> {
    let t_len = est.matrices.len();
    let mut path: Vec<Vec<Complex64>> = Vec::with_capacity(t_len);
    path.resize(t_len, Vec::new());
    let mut previous = None;
    for l in 0..=t_len / 2 {
        let (v, reference) = leading_eigenvector(&est.matrices[l], previous)?;
        previous = Some(reference);
        if l > 0 && l < t_len - l {
            path[t_len - l] = v.iter().map(|z| z.conj()).collect();
        }
        path[l] = v;
    }
    Ok(path)
}

/// Fits the truncated frequency-domain component.
///
/// With `V_l` the phase-fixed leading eigenvector at `ω_l`, the filter is
/// `c_k = (1/T) Σ_l V_l e^{ikω_l}` and the loadings are the transform of the
/// conjugates, `β_j = (1/T) Σ_l conj(V_l) e^{ijω_l}`, for `|k|, |j| ≤ M`.
/// The sums in [`bdpc_scores`] and [`bdpc_reconstruct`] never reach past
/// `T - 1`, so `M` may exceed `T / 2`.
pub fn bdpc_fit(panel: &SeriesPanel, half_width: usize, smoothing: &Smoothing) -> Result<BdpcModel> {
    let t_len = panel.n_periods();
    // Coefficients are periodic in k with period T, so M up to T - 1 is usable.
    if half_width >= t_len {
        return Err(Error::Config(format!("half-width {half_width} needs more than {half_width} periods")));
    }
    let est = estimate_cross_spectrum(panel, smoothing)?;
    let path = eigenvector_path(&est)?;
    let m = panel.n_series();
    let rows = 2 * half_width + 1;
    let mut filter = DMatrix::zeros(rows, m);
    let mut loadings = DMatrix::zeros(rows, m);
    let (mut max_im, mut max_re) = (0.0f64, 0.0f64);
    for row in 0..rows {
        let k = row as i64 - half_width as i64;
        for i in 0..m {
            let (mut c, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
            for (l, v) in path.iter().enumerate() {
                let r = (k * l as i64).rem_euclid(t_len as i64) as f64;
                let e = Complex64::from_polar(1.0, 2.0 * core::f64::consts::PI * r / t_len as f64);
                c += v[i] * e;
                b += v[i].conj() * e;
            }
            c /= t_len as f64;
            b /= t_len as f64;
            max_im = max_im.max(c.im.abs()).max(b.im.abs());
            max_re = max_re.max(c.re.abs()).max(b.re.abs());
            filter[(row, i)] = c.re;
            loadings[(row, i)] = b.re;
        }
    }
    let imag_residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    Ok(BdpcModel { half_width, filter, loadings, imag_residue })
}

/// Factor `f_t = Σ_k c_k · z_{t-k}` over the lags with `0 ≤ t - k < T`.
pub fn bdpc_scores(panel: &SeriesPanel, model: &BdpcModel) -> Result<Vec<f64>> {
    check_model(panel, model)?;
    let (t_len, m) = (panel.n_periods(), panel.n_series());
    let big_m = model.half_width as isize;
    let z = panel.values();
    Ok((0..t_len as isize)
        .map(|t| {
            let mut acc = 0.0;
            for k in (-big_m).max(t - t_len as isize + 1)..=big_m.min(t) {
                let row = (k + big_m) as usize;
                let s = (t - k) as usize;
                for i in 0..m {
                    acc += model.filter[(row, i)] * z[(s, i)];
                }
            }
            acc
        })
        .collect())
}

/// Reconstruction `ẑ_t = Σ_j β_j f_{t+j}` over the leads with `0 ≤ t + j < T`.
pub fn bdpc_reconstruct(panel: &SeriesPanel, model: &BdpcModel) -> Result<BdpcReconstruction> {
    let factor = bdpc_scores(panel, model)?;
    let fitted = reconstruct_from_factor(model, &factor, panel.n_series());
    let t_len = panel.n_periods();
    let z = panel.values();
    let mse = compensated_sum((0..panel.n_series()).map(|j| {
        compensated_sum((0..t_len).map(|t| {
            let r = z[(t, j)] - fitted[(t, j)];
            r * r
        })) / t_len as f64
    }));
    Ok(BdpcReconstruction { factor, fitted, mse })
}

pub(crate) fn reconstruct_from_factor(model: &BdpcModel, factor: &[f64], m: usize) -> DMatrix<f64> {
    let t_len = factor.len() as isize;
    let big_m = model.half_width as isize;
    DMatrix::from_fn(t_len as usize, m, |t, i| {
        let t = t as isize;
        let mut acc = 0.0;
        for j in (-big_m).max(-t)..=big_m.min(t_len - 1 - t) {
            acc += model.loadings[((j + big_m) as usize, i)] * factor[(t + j) as usize];
        }
        acc
    })
}

fn check_model(panel: &SeriesPanel, model: &BdpcModel) -> Result<()> {
    let rows = 2 * model.half_width + 1;
    if model.filter.shape() != (rows, panel.n_series()) || model.loadings.shape() != (rows, panel.n_series()) {
        return Err(Error::Shape(format!(
            "model has {} series and {} taps, panel has {} series",
            model.filter.ncols(),
            model.filter.nrows(),
            panel.n_series()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{opc_fit, opc_reconstruct_lagged};

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0) * libm::sqrt(3.0)
        }
    }

    #[test]
    fn phase_rule_makes_largest_coordinate_real_positive() {
        let s = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5), Complex64::new(0.0, -0.5), Complex64::new(2.0, 0.0)],
        );
        let (v, r) = leading_eigenvector(&s, None).unwrap();
        assert_eq!(r, 1);
        assert!(v[1].im.abs() < 1e-15 && v[1].re > 0.0);
    }

    #[test]
    fn phase_ties_keep_previous_reference() {
        let s = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.0)],
        );
        assert_eq!(leading_eigenvector(&s, Some(1)).unwrap().1, 1);
        assert_eq!(leading_eigenvector(&s, None).unwrap().1, 0);
    }

    #[test]
    fn zero_coefficients_give_second_moment() {
        let mut g = lcg(1);
        let p = SeriesPanel::unlabeled(DMatrix::from_fn(20, 2, |_, _| g() + 1.0)).unwrap();
        let model = BdpcModel {
            half_width: 1,
            filter: DMatrix::zeros(3, 2),
            loadings: DMatrix::zeros(3, 2),
            imag_residue: 0.0,
        };
        let rec = bdpc_reconstruct(&p, &model).unwrap();
        let second: f64 = p.values().iter().map(|x| x * x).sum::<f64>() / 20.0;
        assert!((rec.mse - second).abs() < 1e-12);
        assert!(rec.fitted.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn reconstruction_is_bilinear_in_factor_and_loadings() {
        let mut g = lcg(2);
        let p = SeriesPanel::unlabeled(DMatrix::from_fn(60, 3, |_, _| g())).unwrap();
        let model = bdpc_fit(&p, 4, &Smoothing::default()).unwrap();
        let f = bdpc_scores(&p, &model).unwrap();
        let base = reconstruct_from_factor(&model, &f, 3);
        let gamma = 3.7;
        let scaled_f: Vec<f64> = f.iter().map(|x| x * gamma).collect();
        let mut scaled = model.clone();
        scaled.loadings /= gamma;
        let other = reconstruct_from_factor(&scaled, &scaled_f, 3);
        assert!((base - other).amax() < 1e-12);
    }

    #[test]
    fn coefficients_are_real() {
        let mut g = lcg(3);
        let v: Vec<f64> = (0..102).map(|_| g()).collect();
        let p = SeriesPanel::unlabeled(DMatrix::from_fn(100, 3, |t, i| v[t + i] + 0.1 * g())).unwrap();
        let model = bdpc_fit(&p, 10, &Smoothing::default()).unwrap();
        assert!(model.imag_residue < 1e-8, "{}", model.imag_residue);
    }

    #[test]
    fn isotropic_noise_keeps_most_variance_unexplained() {
        let mut total = 0.0;
        let mut expect = 0.0;
        for seed in 0..5 {
            let mut g = lcg(10 + seed);
            let p = SeriesPanel::unlabeled(DMatrix::from_fn(400, 4, |_, _| g())).unwrap();
            total += bdpc_reconstruct(&p, &bdpc_fit(&p, 10, &Smoothing { span: Some(20), taper: 0.1 }).unwrap()).unwrap().mse;
            expect += 0.75 * p.values().iter().map(|x| x * x).sum::<f64>() / 400.0;
        }
        let ratio = total / expect;
        assert!((0.75..=1.25).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn static_filter_is_no_better_than_first_pc() {
        let mut g = lcg(4);
        let v: Vec<f64> = (0..102).map(|_| g()).collect();
        let p = SeriesPanel::unlabeled(DMatrix::from_fn(100, 3, |t, i| v[t + i] + 0.1 * g())).unwrap();
        let bd = bdpc_reconstruct(&p, &bdpc_fit(&p, 0, &Smoothing::default()).unwrap()).unwrap();
        let opc = opc_fit(&p, 1).unwrap();
        let op = opc_reconstruct_lagged(&p, &opc.score(0), 0).unwrap();
        assert!(bd.mse >= op.mse - 1e-6);
    }

    #[test]
    fn wide_half_width_uses_clipped_sums() {
        let mut g = lcg(5);
        let p = SeriesPanel::unlabeled(DMatrix::from_fn(30, 2, |_, _| g())).unwrap();
        let model = bdpc_fit(&p, 20, &Smoothing::default()).unwrap();
        assert!(bdpc_reconstruct(&p, &model).unwrap().mse.is_finite());
        assert!(matches!(bdpc_fit(&p, 30, &Smoothing::default()), Err(Error::Config(_))));
    }
}
