use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::linalg::compensated_sum;
use crate::{Error, Result};

/// A `T × m` panel of observations: rows are time, columns are series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl SeriesPanel {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::Input("panel must have at least one row and one series".to_string()));
        }
        if labels.len() != values.ncols() {
            return Err(Error::Shape(format!(
                "{} labels for {} series",
                labels.len(),
                values.ncols()
            )));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let (t, j) = (idx % values.nrows(), idx / values.nrows());
            return Err(Error::Input(format!("non-finite value at row {t}, series {j}")));
        }
        Ok(Self { values, labels })
    }

    /// Builds a panel with labels `s1, s2, …`.
    pub fn unlabeled(values: DMatrix<f64>) -> Result<Self> {
        let labels = (1..=values.ncols()).map(|j| format!("s{j}")).collect();
        Self::new(values, labels)
    }

    /// Same labels, new values of the same shape.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        if values.shape() != self.values.shape() {
            return Err(Error::Shape(format!(
                "expected {:?}, got {:?}",
                self.values.shape(),
                values.shape()
            )));
        }
        Self::new(values, self.labels.clone())
    }

    /// Number of time points `T`.
    pub fn n_periods(&self) -> usize {
        self.values.nrows()
    }

    /// Number of series `m`.
    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Observations of series `j` in time order.
    pub fn series(&self, j: usize) -> &[f64] {
        let t = self.n_periods();
        &self.values.as_slice()[j * t..(j + 1) * t]
    }

    pub fn means(&self) -> Vec<f64> {
        (0..self.n_series())
            .map(|j| compensated_sum(self.series(j).iter().copied()) / self.n_periods() as f64)
            .collect()
    }

    /// Population variances (denominator `T`), one per series.
    pub fn variances(&self) -> Vec<f64> {
        let n = self.n_periods() as f64;
        self.means()
            .into_iter()
            .enumerate()
            .map(|(j, mu)| compensated_sum(self.series(j).iter().map(|z| (z - mu) * (z - mu))) / n)
            .collect()
    }

    pub fn total_variance(&self) -> f64 {
        compensated_sum(self.variances().into_iter())
    }

    /// Pooled standard deviation `sqrt(Σ V_j / m)`.
    pub fn scale(&self) -> f64 {
        libm::sqrt(self.total_variance() / self.n_series() as f64)
    }

    /// Entrywise difference `self - other`, keeping these labels.
    pub fn minus(&self, other: &DMatrix<f64>) -> Result<Self> {
        if other.shape() != self.values.shape() {
            return Err(Error::Shape(format!(
                "cannot subtract {:?} from {:?}",
                other.shape(),
                self.values.shape()
            )));
        }
        Self::new(&self.values - other, self.labels.clone())
    }

    /// Column-centred copy of the values.
    pub fn centered(&self) -> DMatrix<f64> {
        let mut x = self.values.clone();
        for (j, mu) in self.means().into_iter().enumerate() {
            x.column_mut(j).add_scalar_mut(-mu);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_cells() {
        let v = DMatrix::from_column_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        let err = SeriesPanel::unlabeled(v).unwrap_err();
        assert!(matches!(err, Error::Input(msg) if msg.contains("row 1, series 0")));
    }

    #[test]
    fn population_variance() {
        let v = DMatrix::from_column_slice(4, 1, &[1.0, 2.0, 3.0, 4.0]);
        let p = SeriesPanel::unlabeled(v).unwrap();
        assert!((p.variances()[0] - 1.25).abs() < 1e-15);
        assert_eq!(p.labels(), ["s1"]);
    }
}
