//! JSON model files.
//!
//! Floats are written in the shortest form that parses back to the same
//! bits, so a save and load cycle is exact.

use std::fs;
use std::path::Path;

use dpc_core::robust::{MScaleSpec, RhoFamily};
use dpc_core::{DpcComponent, DpcModel, Init, SolverConfig};
use dpc_core::solver::Convergence;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL: &str = concat!("dpc ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Dpc,
    SDpc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub k: usize,
    pub p: usize,
    pub epsilon: f64,
    pub max_iter: usize,
    pub init: String,
    pub seed: u64,
}

impl ConfigEcho {
    pub fn from_config(config: &SolverConfig) -> Self {
        let init = match config.init {
            Init::ClassicalPc => "classical",
            Init::SphericalPc => "spherical",
            Init::Supplied(_) => "supplied",
        };
        Self { k: config.k, p: config.p, epsilon: config.epsilon, max_iter: config.max_iter, init: init.into(), seed: config.seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub iterations: usize,
    pub criterion: f64,
    pub converged: bool,
    pub jittered: bool,
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub k: usize,
    pub f: Vec<f64>,
    /// One row of `k + 1` loadings per series.
    pub beta: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub convergence: ConvergenceRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustRecord {
    pub family: String,
    pub c: f64,
    pub b: f64,
    /// Per component, the M-scale of each series' residuals.
    pub scales: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    pub timestamp: Option<String>,
    pub seed: u64,
    pub tool: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub kind: ModelKind,
    pub config: ConfigEcho,
    pub labels: Vec<String>,
    pub n_periods: usize,
    pub components: Vec<ComponentRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust: Option<RobustRecord>,
    pub provenance: Provenance,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn family_name(family: RhoFamily) -> &'static str {
    match family {
        RhoFamily::TukeyBiweight => "tukey",
        RhoFamily::Square => "square",
    }
}

pub fn parse_family(name: &str) -> Result<RhoFamily, CliError> {
    match name {
        "tukey" => Ok(RhoFamily::TukeyBiweight),
        "square" => Ok(RhoFamily::Square),
        other => Err(CliError::Input(format!("unknown rho family `{other}`; expected tukey or square"))),
    }
}

impl RobustRecord {
    pub fn new(spec: &MScaleSpec, scales: Vec<Vec<f64>>) -> Self {
        Self { family: family_name(spec.family).into(), c: spec.c, b: spec.b, scales }
    }
}

impl ComponentRecord {
    pub fn from_component(c: &DpcComponent) -> Self {
        let beta = (0..c.beta.nrows()).map(|j| c.beta.row(j).iter().copied().collect()).collect();
        let conv = &c.convergence;
        Self {
            k: c.k,
            f: c.f.clone(),
            beta,
            alpha: c.alpha.clone(),
            convergence: ConvergenceRecord {
                iterations: conv.iterations,
                criterion: conv.criterion,
                converged: conv.converged,
                jittered: conv.jittered,
                history: conv.history.clone(),
            },
        }
    }

    pub fn to_component(&self) -> Result<DpcComponent, CliError> {
        let m = self.beta.len();
        if self.beta.iter().any(|row| row.len() != self.k + 1) {
            return Err(CliError::Input(format!("loading rows must have k + 1 = {} entries", self.k + 1)));
        }
        if self.alpha.len() != m {
            return Err(CliError::Input(format!("{} intercepts for {m} series", self.alpha.len())));
        }
        let beta = DMatrix::from_fn(m, self.k + 1, |j, i| self.beta[j][i]);
        let conv = &self.convergence;
        Ok(DpcComponent {
            k: self.k,
            f: self.f.clone(),
            beta,
            alpha: self.alpha.clone(),
            convergence: Convergence {
                iterations: conv.iterations,
                criterion: conv.criterion,
                converged: conv.converged,
                history: conv.history.clone(),
                jittered: conv.jittered,
            },
        })
    }
}

impl ModelFile {
    pub fn new(
        kind: ModelKind,
        config: &SolverConfig,
        labels: &[String],
        n_periods: usize,
        model: &DpcModel,
        input: &[u8],
        timestamp: Option<String>,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            kind,
            config: ConfigEcho::from_config(config),
            labels: labels.to_vec(),
            n_periods,
            components: model.components.iter().map(ComponentRecord::from_component).collect(),
            robust: None,
            provenance: Provenance { input_sha256: sha256_hex(input), timestamp, seed: config.seed, tool: TOOL.into() },
        }
    }

    pub fn components(&self) -> Result<Vec<DpcComponent>, CliError> {
        self.components.iter().map(ComponentRecord::to_component).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model values are finite");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Input(format!("invalid model file: {e}")))?;
        if file.format_version != FORMAT_VERSION {
            return Err(CliError::Input(format!(
                "model format version {} is not supported (expected {FORMAT_VERSION})",
                file.format_version
            )));
        }
        for (s, c) in file.components.iter().enumerate() {
            if c.f.len() != file.n_periods + c.k {
                return Err(CliError::Input(format!("component {}: factor length {} != T + k", s + 1, c.f.len())));
            }
            if c.beta.len() != file.labels.len() {
                return Err(CliError::Input(format!("component {}: {} loading rows for {} series", s + 1, c.beta.len(), file.labels.len())));
            }
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ModelFile {
        let beta = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -7e-310, 2.0f64.sqrt()]);
        let component = DpcComponent {
            k: 1,
            f: vec![std::f64::consts::PI, -1e-17, 0.5],
            beta,
            alpha: vec![1e300, -0.0],
            convergence: Convergence { iterations: 3, criterion: 0.1 + 0.2, converged: true, history: vec![1.0, 0.3], jittered: false },
        };
        let model = DpcModel { components: vec![component], residual_panels: Vec::new() };
        let config = SolverConfig { k: 1, ..SolverConfig::default() };
        ModelFile::new(ModelKind::Dpc, &config, &["a".into(), "b".into()], 2, &model, b"a,b\n", None)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let file = sample();
        let back = ModelFile::from_json(&file.to_json()).unwrap();
        let (a, b) = (&file.components[0], &back.components[0]);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.f), bits(&b.f));
        assert_eq!(bits(&a.alpha), bits(&b.alpha));
        for (ra, rb) in a.beta.iter().zip(&b.beta) {
            assert_eq!(bits(ra), bits(rb));
        }
        assert_eq!(back.to_json(), file.to_json());
    }

    #[test]
    fn digest_is_hex_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn rejects_other_versions() {
        let mut file = sample();
        file.format_version = 9;
        assert!(ModelFile::from_json(&file.to_json()).is_err());
    }
}
