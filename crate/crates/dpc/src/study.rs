//! Benchmark configuration files and the parallel study runner.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dpc_core::baselines::Smoothing;
use dpc_core::robust::MScaleSpec;
use dpc_core::simulation::{run_replication, summarize, Generator, McConfig, Method, StudyTable};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model_file::{family_name, parse_family};
use crate::CliError;

pub const THREADS_ENV: &str = "DPC_THREADS";
pub const STUDY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    S4,
    OneFactor { n_series: usize, lags: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    pub prob: f64,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MScaleRecord {
    pub family: String,
    pub c: f64,
    pub b: f64,
}

/// On-disk study description. Missing fields take the defaults of the
/// three-series study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub format_version: u32,
    #[serde(rename = "T")]
    pub n_periods: usize,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub generator: GeneratorSpec,
    pub contamination: Option<ContaminationSpec>,
    pub epsilon: f64,
    pub max_iter: usize,
    pub span: Option<usize>,
    pub taper: f64,
    pub mscale: MScaleRecord,
    pub report_srs: bool,
}

impl Default for StudyConfig {
    fn default() -> Self {
        let methods = ["OPC_1", "OPC_5", "OPC_10", "DPC_1", "DPC_5", "DPC_10", "BDPC_10", "BDPC_20", "BDPC_50"];
        let spec = MScaleSpec::default();
        Self {
            format_version: STUDY_FORMAT_VERSION,
            n_periods: 100,
            replications: 50,
            seed: 1,
            methods: methods.iter().map(|s| s.to_string()).collect(),
            generator: GeneratorSpec::S4,
            contamination: None,
            epsilon: 1e-4,
            max_iter: 500,
            span: None,
            taper: Smoothing::default().taper,
            mscale: MScaleRecord { family: family_name(spec.family).into(), c: spec.c, b: spec.b },
            report_srs: false,
        }
    }
}

impl StudyConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let config: StudyConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if config.format_version != STUDY_FORMAT_VERSION {
            return Err(CliError::Input(format!("study format version {} is not supported", config.format_version)));
        }
        Ok(config)
    }

    pub fn to_mc(&self) -> Result<McConfig, CliError> {
        let methods = self.methods.iter().map(|m| Method::parse(m)).collect::<Result<Vec<_>, _>>()?;
        let generator = match self.generator {
            GeneratorSpec::S4 => Generator::ThreeSeries,
            GeneratorSpec::OneFactor { n_series, lags } => Generator::OneFactor { n_series, lags },
        };
        let mscale = MScaleSpec { family: parse_family(&self.mscale.family)?, c: self.mscale.c, b: self.mscale.b };
        mscale.validate()?;
        let config = McConfig {
            n_periods: self.n_periods,
            replications: self.replications,
            seed: self.seed,
            methods,
            generator,
            contamination: self.contamination.map(|c| (c.prob, c.shift)),
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            smoothing: Smoothing { span: self.span, taper: self.taper },
            mscale,
            report_srs: self.report_srs,
        };
        config.validate()?;
        Ok(config)
    }
}

/// The requested thread count, or rayon's default when none is given.
pub fn resolve_threads(requested: Option<usize>) -> Result<usize, CliError> {
    match requested {
        Some(0) => Err(CliError::Input("thread count must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(rayon::current_num_threads()),
    }
}

/// Runs the replications on a pool of `threads` workers. The table does not
/// depend on the thread count.
pub fn run_parallel(config: &McConfig, threads: usize) -> Result<StudyTable, CliError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start thread pool: {e}")))?;
    let results = pool.install(|| {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|r| run_replication(config, r))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(summarize(config, results))
}

#[derive(Debug, Serialize)]
struct MethodRow {
    method: String,
    succeeded: usize,
    failed: usize,
    mean_mse: Option<f64>,
    se_mse: Option<f64>,
    mean_srs: Option<f64>,
    se_srs: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ResultsJson<'a> {
    format_version: u32,
    tool: &'static str,
    config: &'a StudyConfig,
    summary: Vec<MethodRow>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn summary_rows(table: &StudyTable) -> Vec<MethodRow> {
    table
        .rows
        .iter()
        .map(|r| MethodRow {
            method: r.method.label(),
            succeeded: r.succeeded,
            failed: r.failed,
            mean_mse: finite(r.mean_mse),
            se_mse: finite(r.se_mse),
            mean_srs: r.mean_srs.and_then(finite),
            se_srs: r.se_srs.and_then(finite),
        })
        .collect()
}

pub fn results_json(config: &StudyConfig, table: &StudyTable) -> String {
    let doc = ResultsJson { format_version: STUDY_FORMAT_VERSION, tool: crate::model_file::TOOL, config, summary: summary_rows(table) };
    let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
    s.push('\n');
    s
}

/// One line per replication and method; failed fits leave the values empty.
pub fn results_csv(table: &StudyTable, methods: &[Method]) -> String {
    let mut s = String::from("# dpc-results v1\nreplication,method,mse,srs,error\n");
    for r in &table.results {
        for (method, outcome) in methods.iter().zip(&r.outcomes) {
            match outcome {
                Ok(o) => {
                    let srs = o.srs.map(|v| v.to_string()).unwrap_or_default();
                    let _ = writeln!(s, "{},{},{},{},", r.replication, method.label(), o.mse, srs);
                }
                Err(e) => {
                    let _ = writeln!(s, "{},{},,,\"{}\"", r.replication, method.label(), e.replace('"', "'"));
                }
            }
        }
    }
    s
}

/// Mean MSE, its standard error and, if recorded, mean SRS, one column per method.
pub fn render_table(table: &StudyTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Mean square errors, T = {}, {} replications, seed {}", table.n_periods, table.replications, table.seed);
    let header: Vec<String> = table.rows.iter().map(|r| r.method.label()).collect();
    let width = header.iter().map(String::len).max().unwrap_or(6).max(9);
    let mut line = format!("{:<8}", "");
    for h in &header {
        let _ = write!(line, " {h:>width$}");
    }
    let _ = writeln!(s, "{}", line.trim_end());
    let cell = |v: Option<f64>| v.filter(|x| x.is_finite()).map_or("-".to_string(), format_sig);
    let mut line = format!("{:<8}", "MSE");
    for r in &table.rows {
        let _ = write!(line, " {:>width$}", cell(Some(r.mean_mse)));
    }
    let _ = writeln!(s, "{line}");
    let mut line = format!("{:<8}", "s.e.");
    for r in &table.rows {
        let _ = write!(line, " {:>width$}", cell(Some(r.se_mse)));
    }
    let _ = writeln!(s, "{line}");
    if table.rows.iter().any(|r| r.mean_srs.is_some()) {
        let mut line = format!("{:<8}", "SRS");
        for r in &table.rows {
            let _ = write!(line, " {:>width$}", cell(r.mean_srs));
        }
        let _ = writeln!(s, "{line}");
    }
    let failed: usize = table.rows.iter().map(|r| r.failed).sum();
    if failed > 0 {
        let _ = writeln!(s, "{failed} fits failed; see results.csv");
    }
    s
}

fn format_sig(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-3 || x.abs() >= 1e5) {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let c = StudyConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<StudyConfig>(&text).unwrap(), c);
        assert_eq!(c.to_mc().unwrap().methods.len(), 9);
    }

    #[test]
    fn partial_config_takes_defaults() {
        let c: StudyConfig = serde_json::from_str(r#"{"T": 60, "methods": ["DPC_2"], "generator": {"model": "one-factor", "n_series": 4, "lags": 1}}"#).unwrap();
        let mc = c.to_mc().unwrap();
        assert_eq!((mc.n_periods, mc.replications), (60, 50));
        assert_eq!(mc.generator, Generator::OneFactor { n_series: 4, lags: 1 });
    }

    #[test]
    fn unknown_method_or_model_is_rejected() {
        let c = StudyConfig { methods: vec!["XPC_1".into()], ..StudyConfig::default() };
        assert!(c.to_mc().is_err());
        assert!(serde_json::from_str::<StudyConfig>(r#"{"generator": {"model": "s5"}}"#).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let c = StudyConfig { replications: 6, methods: vec!["DPC_1".into(), "OPC_1".into()], ..StudyConfig::default() };
        let mc = c.to_mc().unwrap();
        let a = run_parallel(&mc, 1).unwrap();
        let b = run_parallel(&mc, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(results_csv(&a, &mc.methods), results_csv(&b, &mc.methods));
    }
}
