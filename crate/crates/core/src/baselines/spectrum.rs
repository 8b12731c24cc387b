use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result, SeriesPanel};

/// Periodogram taper and Daniell smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Smoothing {
    /// Width of the modified Daniell window; `None` means `⌊√T⌋`.
    pub span: Option<usize>,
    /// Fraction of each end covered by a split cosine bell taper.
    pub taper: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Self { span: None, taper: 0.1 }
    }
}

impl Smoothing {
    pub fn span_for(&self, n_periods: usize) -> usize {
        self.span.unwrap_or_else(|| libm::floor(libm::sqrt(n_periods as f64)) as usize)
    }
}

/// Smoothed cross-periodogram on the Fourier grid `ω_l = 2πl/T`, `l = 0..T`.
///
/// Density convention: `Σ_l S(ω_l) · 2π/T` approximates the covariance matrix,
/// so white noise of unit variance has density `1/(2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate {
    pub frequencies: Vec<f64>,
    /// One Hermitian `m × m` matrix per frequency.
    pub matrices: Vec<DMatrix<Complex64>>,
    pub span: usize,
    pub taper: f64,
}

/// Split cosine bell weights covering `proportion` of each end.
pub(crate) fn cosine_bell(n: usize, proportion: f64) -> Vec<f64> {
    let mut w = vec![1.0; n];
    let edge = libm::floor(n as f64 * proportion) as usize;
    for i in 0..edge.min(n / 2) {
        let v = 0.5 * (1.0 - libm::cos(PI * (2 * i + 1) as f64 / (2 * edge) as f64));
        w[i] = v;
        w[n - 1 - i] = v;
    }
    w
}

pub fn estimate_cross_spectrum(panel: &SeriesPanel, smoothing: &Smoothing) -> Result<SpectralEstimate> {
    let (t_len, m) = (panel.n_periods(), panel.n_series());
    let span = smoothing.span_for(t_len);
    if 2 * span > t_len {
        return Err(Error::Config(format!("smoothing span {span} is too wide for {t_len} periods")));
    }
    if !(0.0..=0.5).contains(&smoothing.taper) {
        return Err(Error::Config(format!("taper proportion must lie in [0, 0.5], got {}", smoothing.taper)));
    }
    let taper = cosine_bell(t_len, smoothing.taper);
    let u2 = taper.iter().map(|w| w * w).sum::<f64>() / t_len as f64;
    let x = panel.centered();
    let twiddle: Vec<Complex64> =
        (0..t_len).map(|r| Complex64::from_polar(1.0, -2.0 * PI * r as f64 / t_len as f64)).collect();

    let half = t_len / 2;
    let mut raw: Vec<DMatrix<Complex64>> = Vec::with_capacity(t_len);
    for l in 0..t_len {
        let d: Vec<Complex64> = (0..m)
            .map(|j| {
                (0..t_len).fold(Complex64::new(0.0, 0.0), |acc, t| acc + twiddle[(l * t) % t_len] * (x[(t, j)] * taper[t]))
            })
            .collect();
        let scale = 1.0 / (2.0 * PI * t_len as f64 * u2);
        raw.push(DMatrix::from_fn(m, m, |a, b| d[a] * d[b].conj() * scale));
    }

    // Modified Daniell: 2h + 1 taps, half weight at both ends, wrapped around the circle.
    let h = span / 2;
    let taps: Vec<(isize, f64)> = if h == 0 {
        vec![(0, 1.0)]
    } else {
        (-(h as isize)..=h as isize)
            .map(|o| (o, if o.unsigned_abs() == h { 1.0 / (4 * h) as f64 } else { 1.0 / (2 * h) as f64 }))
            .collect()
    };
    let mut matrices: Vec<DMatrix<Complex64>> = vec![DMatrix::zeros(m, m); t_len];
    for l in 0..=half {
        let mut s = DMatrix::zeros(m, m);
        for &(o, w) in &taps {
            let idx = (l as isize + o).rem_euclid(t_len as isize) as usize;
            s += &raw[idx] * Complex64::new(w, 0.0);
        }
        // Exact Hermitian symmetry, and real matrices where ω is 0 or π.
        let mut s = (&s + s.adjoint()) * Complex64::new(0.5, 0.0);
        if l == 0 || 2 * l == t_len {
            s.iter_mut().for_each(|v| v.im = 0.0);
        }
        if l > 0 && l < t_len - l {
            matrices[t_len - l] = s.map(|v| v.conj());
        }
        matrices[l] = s;
    }
    let frequencies = (0..t_len).map(|l| 2.0 * PI * l as f64 / t_len as f64).collect();
    Ok(SpectralEstimate { frequencies, matrices, span, taper: smoothing.taper })
}
