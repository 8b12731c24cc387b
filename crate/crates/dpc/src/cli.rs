//! Argument definitions and the command implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dpc_core::metrics::mse_of;
use dpc_core::robust::{fit_s, MScaleSpec};
use dpc_core::simulation::{Generator, McConfig};
use dpc_core::{explained_variance, fit, mse, DpcComponent, DpcModel, Init, SeriesPanel, SolverConfig};
use nalgebra::DMatrix;
use serde_json::json;

use crate::csvio::{read_panel, write_mask_file, write_matrix_file};
use crate::model_file::{family_name, ModelFile, ModelKind, RobustRecord};
use crate::study::{render_table, resolve_threads, results_csv, results_json, run_parallel, StudyConfig, THREADS_ENV};
use crate::{CliError, ExitStatus};

#[derive(Debug, Parser)]
#[command(name = "dpc", version, about = "Dynamic principal components of multivariate time series")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit least-squares dynamic principal components to a CSV panel.
    Fit(FitArgs),
    /// Fit S-estimator dynamic principal components.
    RobustFit(RobustFitArgs),
    /// Rebuild a panel from a saved model.
    Reconstruct(ReconstructArgs),
    /// Generate a simulated panel.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo comparison of methods.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Classical,
    Spherical,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    /// Number of leads in each component.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Number of components.
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Relative improvement below which iteration stops.
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Seed for the random start used when the initial factor is degenerate.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Exit with status 4 if any component stops at the iteration limit.
    #[arg(long)]
    pub strict: bool,
    /// Record the current time in the model file.
    #[arg(long)]
    pub timestamp: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value = "classical")]
    pub init: InitArg,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Tukey,
    Square,
}

#[derive(Debug, Args)]
pub struct RobustFitArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long, value_enum, default_value = "spherical")]
    pub init: InitArg,
    #[arg(long, value_enum, default_value = "tukey")]
    pub family: FamilyArg,
    /// Bisquare cutoff.
    #[arg(long, default_value_t = 5.13)]
    pub tukey_c: f64,
    /// Target mean of rho.
    #[arg(long, default_value_t = 0.1)]
    pub b: f64,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReconstructArgs {
    pub model: PathBuf,
    pub input: PathBuf,
    /// Use the first N components; defaults to all of them.
    #[arg(long)]
    pub upto_p: Option<usize>,
    #[arg(long, default_value = "recon.csv")]
    pub out: PathBuf,
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    /// Directory for per-series files with columns t, original, reconstructed.
    #[arg(long)]
    pub plotdata: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    /// Three series driven by one white noise at leads 0, 1 and 2.
    S4,
    /// Random-loading one-factor panel.
    OneFactor,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "s4")]
    pub model: ModelArg,
    #[arg(long = "T", default_value_t = 100)]
    pub n_periods: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Series count for the one-factor model.
    #[arg(long, default_value_t = 10)]
    pub n_series: usize,
    /// Loading lags for the one-factor model.
    #[arg(long, default_value_t = 1)]
    pub lags: usize,
    /// Replace each cell with probability PROB by itself plus SHIFT.
    #[arg(long, num_args = 2, value_names = ["PROB", "SHIFT"])]
    pub contaminate: Option<Vec<f64>>,
    #[arg(long, default_value = "panel.csv")]
    pub out: PathBuf,
    /// Where to write the 0/1 contamination mask.
    #[arg(long)]
    pub mask: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Study description; the built-in three-series study is used if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// Worker threads; overrides the DPC_THREADS environment variable.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a, out),
        Command::RobustFit(a) => cmd_robust_fit(&a, out),
        Command::Reconstruct(a) => cmd_reconstruct(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Benchmark(a) => cmd_benchmark(&a, out),
    }
}

fn solver_config(args: &SolverArgs, init: InitArg) -> SolverConfig {
    SolverConfig {
        k: args.k,
        p: args.p,
        epsilon: args.epsilon,
        max_iter: args.max_iter,
        init: match init {
            InitArg::Classical => Init::ClassicalPc,
            InitArg::Spherical => Init::SphericalPc,
        },
        seed: args.seed,
    }
}

fn timestamp(enabled: bool) -> Option<String> {
    enabled.then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

fn emit(out: &mut dyn Write, line: &str) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::io("<stdout>", e))
}

fn emit_json(out: &mut dyn Write, value: serde_json::Value) -> Result<(), CliError> {
    emit(out, &value.to_string())
}

/// Panels each component was fitted to: the input, then successive residuals.
fn stage_panels(panel: &SeriesPanel, components: &[DpcComponent]) -> Result<Vec<SeriesPanel>, CliError> {
    let mut stages = Vec::with_capacity(components.len() + 1);
    stages.push(panel.clone());
    for c in components {
        let current = stages.last().expect("non-empty");
        if c.beta.nrows() != current.n_series() || c.n_periods() != current.n_periods() {
            return Err(CliError::Input(format!(
                "model describes {} series over {} periods, panel has {} series over {} periods",
                c.beta.nrows(),
                c.n_periods(),
                current.n_series(),
                current.n_periods()
            )));
        }
        let next = current.minus(&c.fitted(current.n_periods()))?;
        stages.push(next);
    }
    Ok(stages)
}

struct ComponentReport {
    k: usize,
    mse: f64,
    ev: f64,
    srs: Option<f64>,
    iterations: usize,
    converged: bool,
}

fn report_components(
    panel: &SeriesPanel,
    model: &DpcModel,
    srs: Option<&[f64]>,
    out: &mut dyn Write,
) -> Result<Vec<ComponentReport>, CliError> {
    let stages = stage_panels(panel, &model.components)?;
    let mut reports = Vec::new();
    for (s, c) in model.components.iter().enumerate() {
        let mse = mse(&stages[s], c)?;
        let ev = explained_variance(&stages[s], c, c.k)?;
        let r = ComponentReport {
            k: c.k,
            mse,
            ev,
            srs: srs.map(|v| v[s]),
            iterations: c.convergence.iterations,
            converged: c.convergence.converged,
        };
        let srs_text = r.srs.map(|v| format!(" SRS={v:.6}")).unwrap_or_default();
        emit(
            out,
            &format!(
                "component {}: k={} iterations={}{} MSE={:.6}{srs_text} EV={:.3}%",
                s + 1,
                r.k,
                r.iterations,
                if r.converged { "" } else { " (not converged)" },
                r.mse,
                r.ev
            ),
        )?;
        reports.push(r);
    }
    let total = panel.total_variance();
    let last = stages.last().expect("non-empty").total_variance();
    emit(out, &format!("cumulative EV={:.3}%", 100.0 * (1.0 - last / total)))?;
    Ok(reports)
}

fn reports_json(reports: &[ComponentReport]) -> serde_json::Value {
    reports
        .iter()
        .map(|r| {
            let mut v = json!({
                "k": r.k,
                "mse": r.mse,
                "ev": r.ev,
                "iterations": r.iterations,
                "converged": r.converged,
            });
            if let Some(srs) = r.srs {
                v["srs"] = json!(srs);
            }
            v
        })
        .collect()
}

fn finish_fit(strict: bool, reports: &[ComponentReport]) -> Result<ExitStatus, CliError> {
    if strict {
        if let Some(i) = reports.iter().position(|r| !r.converged) {
            return Err(CliError::NotConverged(format!("component {} reached the iteration limit", i + 1)));
        }
    }
    Ok(ExitStatus::Success)
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let (panel, bytes) = read_panel(&args.input)?;
    let config = solver_config(&args.solver, args.init);
    let model = fit(&panel, &config)?;
    let file = ModelFile::new(ModelKind::Dpc, &config, panel.labels(), panel.n_periods(), &model, &bytes, timestamp(args.solver.timestamp));
    file.save(&args.out)?;
    emit(out, &format!("fitted {} component(s) to {} series over {} periods", model.p(), panel.n_series(), panel.n_periods()))?;
    let reports = report_components(&panel, &model, None, out)?;
    emit(out, &format!("model written to {}", args.out.display()))?;
    emit_json(out, json!({"command": "fit", "model": args.out.display().to_string(), "components": reports_json(&reports)}))?;
    finish_fit(args.solver.strict, &reports)
}

pub fn cmd_robust_fit(args: &RobustFitArgs, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let (panel, bytes) = read_panel(&args.input)?;
    let config = solver_config(&args.solver, args.init);
    let spec = match args.family {
        FamilyArg::Tukey => MScaleSpec::tukey(args.tukey_c, args.b),
        FamilyArg::Square => MScaleSpec::square(args.b),
    };
    let robust = fit_s(&panel, &config, &spec).map_err(|e| CliError::with_labels(e, panel.labels()))?;
    let srs = robust.srs();
    let mut file = ModelFile::new(ModelKind::SDpc, &config, panel.labels(), panel.n_periods(), &robust.model, &bytes, timestamp(args.solver.timestamp));
    file.robust = Some(RobustRecord::new(&spec, robust.scales.clone()));
    file.save(&args.out)?;
    emit(
        out,
        &format!(
            "fitted {} robust component(s) ({} rho, c={}, b={}) to {} series over {} periods",
            robust.model.p(),
            family_name(spec.family),
            spec.c,
            spec.b,
            panel.n_series(),
            panel.n_periods()
        ),
    )?;
    let reports = report_components(&panel, &robust.model, Some(&srs), out)?;
    emit(out, &format!("model written to {}", args.out.display()))?;
    emit_json(out, json!({"command": "robust-fit", "model": args.out.display().to_string(), "components": reports_json(&reports)}))?;
    finish_fit(args.solver.strict, &reports)
}

fn safe_name(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn cmd_reconstruct(args: &ReconstructArgs, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let file = ModelFile::load(&args.model)?;
    let (panel, _) = read_panel(&args.input)?;
    let components = file.components()?;
    let p = components.len();
    let upto = args.upto_p.unwrap_or(p);
    if upto == 0 || upto > p {
        return Err(CliError::Input(format!("--upto-p must lie in 1..={p}, got {upto}")));
    }
    if panel.n_series() != file.labels.len() || panel.n_periods() != file.n_periods {
        return Err(CliError::Input(format!(
            "model was fitted to {} series over {} periods, panel has {} series over {} periods",
            file.labels.len(),
            file.n_periods,
            panel.n_series(),
            panel.n_periods()
        )));
    }
    let stages = stage_panels(&panel, &components[..upto])?;
    let last = &components[upto - 1];
    let mse = mse_of(&stages[upto - 1], &last.f, &last.beta, &last.alpha)?;
    let residual = stages[upto].values().clone();
    let recon: DMatrix<f64> = components[..upto]
        .iter()
        .fold(DMatrix::zeros(panel.n_periods(), panel.n_series()), |acc, c| acc + c.fitted(panel.n_periods()));
    let ev = 100.0 * (1.0 - stages[upto].total_variance() / panel.total_variance());

    write_matrix_file(&args.out, panel.labels(), &recon)?;
    if let Some(path) = &args.residuals {
        write_matrix_file(path, panel.labels(), &residual)?;
    }
    let mut plot_files = Vec::new();
    if let Some(dir) = &args.plotdata {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (j, label) in panel.labels().iter().enumerate() {
            let path = dir.join(format!("{:02}_{}.csv", j + 1, safe_name(label)));
            write_plot_file(&path, panel.series(j), &recon.column(j).iter().copied().collect::<Vec<_>>())?;
            plot_files.push(path.display().to_string());
        }
    }
    emit(out, &format!("reconstructed {} series from {upto} of {p} component(s)", panel.n_series()))?;
    emit(out, &format!("MSE={mse:.6} EV={ev:.3}%"))?;
    emit_json(
        out,
        json!({"command": "reconstruct", "upto_p": upto, "mse": mse, "ev": ev, "out": args.out.display().to_string(), "plotdata": plot_files}),
    )?;
    Ok(ExitStatus::Success)
}

fn write_plot_file(path: &Path, original: &[f64], fitted: &[f64]) -> Result<(), CliError> {
    let mut text = String::from("t,original,reconstructed\n");
    for (t, (a, b)) in original.iter().zip(fitted).enumerate() {
        text.push_str(&format!("{},{a},{b}\n", t + 1));
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let generator = match args.model {
        ModelArg::S4 => Generator::ThreeSeries,
        ModelArg::OneFactor => Generator::OneFactor { n_series: args.n_series, lags: args.lags },
    };
    if args.n_periods < 2 {
        return Err(CliError::Input("--T must be at least 2".into()));
    }
    let contamination = args.contaminate.as_ref().map(|v| (v[0], v[1]));
    let config = McConfig { n_periods: args.n_periods, seed: args.seed, generator, contamination, ..McConfig::default() };
    let (panel, contaminated) = config.panel(0)?;
    write_matrix_file(&args.out, panel.labels(), panel.values())?;
    emit(out, &format!("wrote {} series over {} periods to {}", panel.n_series(), panel.n_periods(), args.out.display()))?;
    let mut summary = json!({
        "command": "simulate",
        "out": args.out.display().to_string(),
        "T": panel.n_periods(),
        "m": panel.n_series(),
        "seed": args.seed,
    });
    if let Some(c) = contaminated {
        let count = c.count();
        emit(out, &format!("contaminated {count} of {} cells", panel.n_periods() * panel.n_series()))?;
        if let Some(path) = &args.mask {
            write_mask_file(path, panel.labels(), &c.mask)?;
        }
        summary["contaminated"] = json!(count);
    }
    emit_json(out, summary)?;
    Ok(ExitStatus::Success)
}

pub fn cmd_benchmark(args: &BenchmarkArgs, out: &mut dyn Write) -> Result<ExitStatus, CliError> {
    let study = match &args.config {
        Some(path) => StudyConfig::load(path)?,
        None => StudyConfig::default(),
    };
    let mc = study.to_mc()?;
    let threads = resolve_threads(args.threads)?;
    let table = run_parallel(&mc, threads)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let text = render_table(&table);
    let write = |name: &str, body: &str| {
        let path = args.out.join(name);
        fs::write(&path, body).map_err(|e| CliError::io(path, e))
    };
    write("results.csv", &results_csv(&table, &mc.methods))?;
    write("results.json", &results_json(&study, &table))?;
    write("table.txt", &text)?;
    emit(out, text.trim_end())?;
    let summary: serde_json::Map<String, serde_json::Value> =
        table.rows.iter().map(|r| (r.method.label(), json!(r.mean_mse))).collect();
    emit_json(out, json!({"command": "benchmark", "out": args.out.display().to_string(), "threads": threads, "mean_mse": summary}))?;
    Ok(ExitStatus::Success)
}
