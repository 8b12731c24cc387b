use alloc::format;

use crate::{Error, Result};

/// Loss family behind an M-scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RhoFamily {
    /// Bounded, `ρ(x) = 1 - (1 - (x/c)²)³` for `|x| ≤ c` and 1 beyond.
    TukeyBiweight,
    /// `ρ(x) = x²`; the M-scale is then a root mean square.
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MScaleSpec {
    pub family: RhoFamily,
    /// Tukey cutoff; ignored by the square family.
    pub c: f64,
    /// Target mean of `ρ(x / s)`.
    pub b: f64,
}

impl Default for MScaleSpec {
    fn default() -> Self {
        Self::tukey(5.13, 0.1)
    }
}

impl MScaleSpec {
    pub fn tukey(c: f64, b: f64) -> Self {
        Self { family: RhoFamily::TukeyBiweight, c, b }
    }

    pub fn square(b: f64) -> Self {
        Self { family: RhoFamily::Square, c: 1.0, b }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::Config(format!("cutoff must be positive, got {}", self.c)));
        }
        let b_ok = match self.family {
            RhoFamily::TukeyBiweight => self.b > 0.0 && self.b < 1.0,
            RhoFamily::Square => self.b > 0.0 && self.b.is_finite(),
        };
        if !b_ok {
            return Err(Error::Config(format!("target b = {} is out of range for {:?}", self.b, self.family)));
        }
        Ok(())
    }

    pub fn rho(&self, x: f64) -> f64 {
        match self.family {
            RhoFamily::Square => x * x,
            RhoFamily::TukeyBiweight => {
                let u = x / self.c;
                if libm::fabs(u) >= 1.0 {
                    1.0
                } else {
                    let v = 1.0 - u * u;
                    1.0 - v * v * v
                }
            }
        }
    }

    pub fn psi(&self, x: f64) -> f64 {
        x * self.weight(x)
    }

    /// `ψ(x) / x`, extended continuously to `x = 0`.
    pub fn weight(&self, x: f64) -> f64 {
        match self.family {
            RhoFamily::Square => 2.0,
            RhoFamily::TukeyBiweight => {
                let u = x / self.c;
                if libm::fabs(u) >= 1.0 {
                    0.0
                } else {
                    let v = 1.0 - u * u;
                    6.0 / (self.c * self.c) * v * v
                }
            }
        }
    }
}

/// The scale `s` solving `(1/n) Σ ρ(x_i / s) = b`.
///
/// For the bounded family the scale is exactly zero once at most `b·n`
/// residuals are nonzero. Otherwise the root is bracketed analytically and
/// bisected in log space to about 1e-13 relative.
pub fn m_scale(residuals: &[f64], spec: &MScaleSpec) -> Result<f64> {
    spec.validate()?;
    if residuals.is_empty() {
        return Err(Error::Input("M-scale of an empty sample".into()));
    }
    if let Some(i) = residuals.iter().position(|x| !x.is_finite()) {
        return Err(Error::Input(format!("non-finite residual at position {i}")));
    }
    let n = residuals.len() as f64;
    let max = residuals.iter().fold(0.0f64, |a, x| a.max(libm::fabs(*x)));
    if max == 0.0 {
        return Ok(0.0);
    }
    match spec.family {
        RhoFamily::Square => {
            // Scaling by the maximum keeps the sum of squares from overflowing.
            let ms = residuals.iter().map(|x| (x / max) * (x / max)).sum::<f64>() / n;
            Ok(max * libm::sqrt(ms / spec.b))
        }
        RhoFamily::TukeyBiweight => {
            let nonzero = residuals.iter().filter(|x| **x != 0.0).count() as f64;
            if nonzero <= spec.b * n {
                return Ok(0.0);
            }
            let u: alloc::vec::Vec<f64> = residuals.iter().map(|x| libm::fabs(x / max)).collect();
            let min_nonzero = u.iter().copied().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
            let excess = |s: f64| u.iter().map(|v| spec.rho(v / s)).sum::<f64>() / n - spec.b;
            // Every nonzero |u| / lo is at least 2c, so the mean of ρ is nonzero / n > b.
            let mut lo = 0.5 * min_nonzero / spec.c;
            // ρ(x) ≤ 3 (x/c)², so the mean of ρ at hi is at most b / 4.
            let mut hi = 2.0 * libm::sqrt(3.0 / spec.b) / spec.c;
            for _ in 0..400 {
                if hi / lo - 1.0 <= 1e-14 {
                    break;
                }
                let mid = libm::sqrt(lo * hi);
                if excess(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(max * libm::sqrt(lo * hi))
        }
    }
}
