//! Monte Carlo generators and the study harness.
//!
//! All randomness comes from ChaCha20. Replication `r` of a study seeded with
//! `seed` draws from `ChaCha20Rng::seed_from_u64(seed)` switched to stream `r`,
//! so replications are reproducible and independent of execution order.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use crate::baselines::{bdpc_fit, bdpc_reconstruct, opc_fit, opc_reconstruct_lagged, Smoothing};
use crate::linalg::compensated_sum;
use crate::robust::{fit_s_component, residuals, scales, state_mse, MScaleSpec};
use crate::solver::{fit_component, Init, SolverConfig};
use crate::{Error, Result, SeriesPanel};

/// Generator for replication `replication` of a study seeded with `seed`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

fn normal<R: RngCore>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Three series sharing one white-noise driver at successive leads:
/// `z[i,t] = v[t+i] + 0.1 w[i,t]`, `i = 0, 1, 2`.
///
/// `v` (length `T + 2`) is drawn first, then `w` in time order.
pub fn generate_panel_with<R: RngCore>(n_periods: usize, rng: &mut R) -> SeriesPanel {
    let v: Vec<f64> = (0..n_periods + 2).map(|_| normal(rng)).collect();
    let mut z = DMatrix::zeros(n_periods, 3);
    for t in 0..n_periods {
        for i in 0..3 {
            z[(t, i)] = v[t + i] + 0.1 * normal(rng);
        }
    }
    SeriesPanel::unlabeled(z).expect("generated values are finite")
}

pub fn generate_panel(n_periods: usize, seed: u64) -> SeriesPanel {
    generate_panel_with(n_periods, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// One-factor dynamic panel with random loadings:
/// `z[j,t] = Σ_{i=0..=lags} β[j,i] v[t+i] + 0.1 w[j,t]`.
///
/// Draw order: loadings (series-major), then `v`, then `w` in time order.
pub fn generate_one_factor_panel<R: RngCore>(n_periods: usize, n_series: usize, lags: usize, rng: &mut R) -> SeriesPanel {
    let mut beta = DMatrix::zeros(n_series, lags + 1);
    for j in 0..n_series {
        for i in 0..=lags {
            beta[(j, i)] = normal(rng);
        }
    }
    let v: Vec<f64> = (0..n_periods + lags).map(|_| normal(rng)).collect();
    let mut z = DMatrix::zeros(n_periods, n_series);
    for t in 0..n_periods {
        for j in 0..n_series {
            let common: f64 = (0..=lags).map(|i| beta[(j, i)] * v[t + i]).sum();
            z[(t, j)] = common + 0.1 * normal(rng);
        }
    }
    SeriesPanel::unlabeled(z).expect("generated values are finite")
}

/// A panel with additive outliers and the mask of affected cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Contaminated {
    pub panel: SeriesPanel,
    /// `T × m`, `true` where `shift` was added.
    pub mask: DMatrix<bool>,
}

impl Contaminated {
    pub fn count(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }
}

/// Adds `shift` to each cell independently with probability `prob`.
///
/// Cells are visited in row-major order (all series at `t = 0`, then `t = 1`, …).
pub fn contaminate_with<R: RngCore>(panel: &SeriesPanel, prob: f64, shift: f64, rng: &mut R) -> Result<Contaminated> {
    let coin = Bernoulli::new(prob).map_err(|_| Error::Config(format!("probability must lie in [0, 1], got {prob}")))?;
    let (t_len, m) = (panel.n_periods(), panel.n_series());
    let mut values = panel.values().clone();
    let mut mask = DMatrix::from_element(t_len, m, false);
    for t in 0..t_len {
        for j in 0..m {
            if coin.sample(rng) {
                values[(t, j)] += shift;
                mask[(t, j)] = true;
            }
        }
    }
    Ok(Contaminated { panel: panel.with_values(values)?, mask })
}

pub fn contaminate(panel: &SeriesPanel, prob: f64, shift: f64, seed: u64) -> Result<Contaminated> {
    contaminate_with(panel, prob, shift, &mut ChaCha20Rng::seed_from_u64(seed))
}

/// A fitted method in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// First static PC reconstructed from `k` leads.
    Opc(usize),
    /// Dynamic PC with `k` leads.
    Dpc(usize),
    /// Frequency-domain dynamic PC truncated at half-width `M`.
    Bdpc(usize),
    /// S-estimator dynamic PC with `k` leads.
    Sdpc(usize),
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Opc(k) => format!("OPC_{k}"),
            Method::Dpc(k) => format!("DPC_{k}"),
            Method::Bdpc(m) => format!("BDPC_{m}"),
            Method::Sdpc(k) => format!("SDPC_{k}"),
        }
    }

    /// Parses labels such as `DPC_5` (case-insensitive).
    pub fn parse(label: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown method `{label}`; expected OPC_k, DPC_k, BDPC_M or SDPC_k"));
        let (name, param) = label.split_once('_').ok_or_else(bad)?;
        let n: usize = param.parse().map_err(|_| bad())?;
        match name.to_ascii_uppercase().as_str() {
            "OPC" => Ok(Method::Opc(n)),
            "DPC" => Ok(Method::Dpc(n)),
            "BDPC" => Ok(Method::Bdpc(n)),
            "SDPC" => Ok(Method::Sdpc(n)),
            _ => Err(bad()),
        }
    }
}

/// Which panel each replication draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// The three-series shifted-driver model of [`generate_panel`].
    ThreeSeries,
    /// [`generate_one_factor_panel`] with the given series count and lags.
    OneFactor { n_series: usize, lags: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n_periods: usize,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub generator: Generator,
    /// Outlier probability and shift applied after generation.
    pub contamination: Option<(f64, f64)>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub smoothing: Smoothing,
    /// Scale used by robust fits and, when `report_srs` is set, for SRS columns.
    pub mscale: MScaleSpec,
    pub report_srs: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_periods: 100,
            replications: 50,
            seed: 1,
            methods: Vec::new(),
            generator: Generator::ThreeSeries,
            contamination: None,
            epsilon: 1e-4,
            max_iter: 500,
            smoothing: Smoothing::default(),
            mscale: MScaleSpec::default(),
            report_srs: false,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_periods < 20 {
            return Err(Error::Config(format!("T must be at least 20, got {}", self.n_periods)));
        }
        if self.replications == 0 {
            return Err(Error::Config("at least one replication is required".to_string()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods configured".to_string()));
        }
        Ok(())
    }

    pub fn panel(&self, replication: u64) -> Result<(SeriesPanel, Option<Contaminated>)> {
        let mut rng = replication_rng(self.seed, replication);
        let clean = match self.generator {
            Generator::ThreeSeries => generate_panel_with(self.n_periods, &mut rng),
            Generator::OneFactor { n_series, lags } => generate_one_factor_panel(self.n_periods, n_series, lags, &mut rng),
        };
        match self.contamination {
            None => Ok((clean, None)),
            Some((prob, shift)) => {
                let c = contaminate_with(&clean, prob, shift, &mut rng)?;
                Ok((c.panel.clone(), Some(c)))
            }
        }
    }
}

/// Error measures of one method on one panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub mse: f64,
    pub srs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationResult {
    pub replication: u64,
    /// One entry per configured method; failures carry the error text.
    pub outcomes: Vec<core::result::Result<Outcome, String>>,
}

fn srs_of(resid: &DMatrix<f64>, spec: &MScaleSpec) -> Result<f64> {
    Ok(scales(resid, spec)?.iter().map(|s| s * s).sum())
}

/// Fits one method to `panel` and measures its reconstruction error.
pub fn evaluate(panel: &SeriesPanel, method: Method, config: &McConfig) -> Result<Outcome> {
    let spec = &config.mscale;
    let solver = |k: usize, init: Init| SolverConfig {
        k,
        p: 1,
        epsilon: config.epsilon,
        max_iter: config.max_iter,
        init,
        seed: config.seed,
    };
    let (mse, resid) = match method {
        Method::Opc(k) => {
            let opc = opc_fit(panel, 1)?;
            let rec = opc_reconstruct_lagged(panel, &opc.score(0), k)?;
            let resid = panel.values().rows(0, rec.rows) - &rec.fitted;
            (rec.mse, resid)
        }
        Method::Dpc(k) => {
            let c = fit_component(panel, &solver(k, Init::ClassicalPc))?;
            let resid = residuals(panel, &c.f, &c.beta, &c.alpha)?;
            (c.convergence.criterion, resid)
        }
        Method::Bdpc(m) => {
            let model = bdpc_fit(panel, m, &config.smoothing)?;
            let rec = bdpc_reconstruct(panel, &model)?;
            (rec.mse, panel.values() - &rec.fitted)
        }
        Method::Sdpc(k) => {
            let st = fit_s_component(panel, &solver(k, Init::SphericalPc), spec)?;
            let mse = state_mse(panel, &st)?;
            let resid = residuals(panel, &st.f, &st.beta, &st.alpha)?;
            (mse, resid)
        }
    };
    let srs = if config.report_srs { Some(srs_of(&resid, spec)?) } else { None };
    Ok(Outcome { mse, srs })
}

pub fn run_replication(config: &McConfig, replication: u64) -> Result<ReplicationResult> {
    let (panel, _) = config.panel(replication)?;
    let outcomes = config
        .methods
        .iter()
        .map(|m| evaluate(&panel, *m, config).map_err(|e| e.to_string()))
        .collect();
    Ok(ReplicationResult { replication, outcomes })
}

/// Mean and standard error of one method across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub succeeded: usize,
    pub failed: usize,
    pub mean_mse: f64,
    pub se_mse: f64,
    pub mean_srs: Option<f64>,
    pub se_srs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub n_periods: usize,
    pub replications: usize,
    pub seed: u64,
    pub rows: Vec<MethodSummary>,
    /// Per-replication outcomes, ordered by replication index.
    pub results: Vec<ReplicationResult>,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, libm::sqrt(var / n))
}

/// Aggregates replication results; the order of `results` does not matter.
pub fn summarize(config: &McConfig, mut results: Vec<ReplicationResult>) -> StudyTable {
    results.sort_by_key(|r| r.replication);
    let rows = config
        .methods
        .iter()
        .enumerate()
        .map(|(i, method)| {
            let ok: Vec<Outcome> = results.iter().filter_map(|r| r.outcomes[i].as_ref().ok().copied()).collect();
            let mses: Vec<f64> = ok.iter().map(|o| o.mse).collect();
            let srss: Vec<f64> = ok.iter().filter_map(|o| o.srs).collect();
            let (mean_mse, se_mse) = mean_se(&mses);
            let (mean_srs, se_srs) = if srss.is_empty() {
                (None, None)
            } else {
                let (a, b) = mean_se(&srss);
                (Some(a), Some(b))
            };
            MethodSummary {
                method: *method,
                succeeded: ok.len(),
                failed: results.len() - ok.len(),
                mean_mse,
                se_mse,
                mean_srs,
                se_srs,
            }
        })
        .collect();
    StudyTable { n_periods: config.n_periods, replications: config.replications, seed: config.seed, rows, results }
}

/// Runs every replication in order on the calling thread.
pub fn run_study(config: &McConfig) -> Result<StudyTable> {
    config.validate()?;
    let results = (0..config.replications as u64)
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(config, results))
}

/// Lag-one sample autocorrelation.
pub fn lag1_autocorrelation(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = compensated_sum(xs.iter().copied()) / n;
    let den = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    let num = compensated_sum(xs.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)));
    num / den
}
