//! Greedy choice of the number of leads and components.

use alloc::vec::Vec;

use crate::solver::{fit_component, DpcComponent, DpcModel, SolverConfig};
use crate::{Error, Result, SeriesPanel};

/// One fitted candidate visited by [`select_structure`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    /// 1-based component number.
    pub component: usize,
    pub k: usize,
    /// Reconstruction MSE of the whole panel with this candidate in place.
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Leads chosen for each component.
    pub lags: Vec<usize>,
    pub p: usize,
    /// Largest lead count over the components.
    pub k: usize,
    /// Whether the MSE target was reached within the caps.
    pub met: bool,
    pub trace: Vec<TraceStep>,
    pub model: DpcModel,
}

/// Starts with one component of order 0 and adds leads while each extra lead
/// cuts the MSE by at least `epsilon_lag` (relative); then moves on to a new
/// component fitted to the residuals. Stops once the MSE is at most
/// `mse_target` or both caps are reached.
///
/// `base` supplies the tolerance, iteration cap, initialisation and seed.
pub fn select_structure(
    panel: &SeriesPanel,
    epsilon_lag: f64,
    mse_target: f64,
    caps: (usize, usize),
    base: &SolverConfig,
) -> Result<Selection> {
    let (k_max, p_max) = caps;
    if p_max == 0 || !(epsilon_lag > 0.0) {
        return Err(Error::Config("caps must allow one component and epsilon_lag must be positive".into()));
    }
    let cfg = |k| SolverConfig { k, p: 1, ..base.clone() };
    let mut residual = panel.clone();
    let mut components: Vec<DpcComponent> = Vec::new();
    let mut residual_panels = Vec::new();
    let mut lags = Vec::new();
    let mut trace = Vec::new();
    let mut met = false;

    while components.len() < p_max {
        let number = components.len() + 1;
        let mut best = fit_component(&residual, &cfg(0))?;
        trace.push(TraceStep { component: number, k: 0, mse: best.convergence.criterion });
        met = best.convergence.criterion <= mse_target;
        while !met && best.k < k_max && residual.n_periods() >= best.k + 3 {
            let candidate = fit_component(&residual, &cfg(best.k + 1))?;
            let (old, new) = (best.convergence.criterion, candidate.convergence.criterion);
            trace.push(TraceStep { component: number, k: candidate.k, mse: new });
            if !(old > 0.0) || (old - new) / old < epsilon_lag {
                break;
            }
            best = candidate;
            met = new <= mse_target;
        }
        let next = residual.minus(&best.fitted(residual.n_periods()))?;
        lags.push(best.k);
        components.push(best);
        residual_panels.push(next.clone());
        residual = next;
        if met || !(residual.total_variance() > 0.0) {
            break;
        }
    }
    let k = lags.iter().copied().max().unwrap_or(0);
    Ok(Selection { p: lags.len(), lags, k, met, trace, model: DpcModel { components, residual_panels } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::generate_panel;
    use nalgebra::DMatrix;

    #[test]
    fn static_rank_one_stops_at_first_fit() {
        let g: Vec<f64> = (0..40).map(|t| libm::sin(t as f64 * 0.3) + 0.1 * t as f64).collect();
        let b = [1.0, -2.0, 0.5];
        let p = SeriesPanel::unlabeled(DMatrix::from_fn(40, 3, |t, j| b[j] * g[t])).unwrap();
        let sel = select_structure(&p, 0.01, 1e-12 * p.scale(), (5, 3), &SolverConfig::default()).unwrap();
        assert_eq!((sel.p, sel.k), (1, 0));
        assert!(sel.met);
    }

    #[test]
    fn infinite_target_returns_immediately() {
        let p = generate_panel(60, 2);
        let sel = select_structure(&p, 0.01, f64::INFINITY, (5, 3), &SolverConfig::default()).unwrap();
        assert_eq!((sel.k, sel.p), (0, 1));
        assert_eq!(sel.trace.len(), 1);
    }

    #[test]
    fn shifted_driver_model_grows_leads_before_components() {
        let p = generate_panel(100, 4);
        let sel = select_structure(&p, 0.05, 0.0, (6, 2), &SolverConfig::default()).unwrap();
        assert!(sel.lags[0] >= 2, "lags {:?}", sel.lags);
        assert!(!sel.met);
    }
}
