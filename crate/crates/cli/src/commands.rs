use std::fs;
use std::io::Write;
use std::path::Path;

use fcls_core::graph::{connected_components, edge_count, EdgeVector};
use fcls_core::initializers::{
    cv_select_lasso, cv_select_threshold, generalized_threshold, lasso_path, CovarianceSamples, InitKind,
    InitSpec, MeanSamples, SampleEstimator, ThresholdKind,
};
use fcls_core::io::{
    format_value, load_column, load_edge_vector, load_matrix, save_edge_vector, write_trace_csv, TraceSidecar,
};
use fcls_core::lla::{lla_run, tau_grid, tau_max, LlaOptions, LlaTrace};
use fcls_core::penalty::{Penalty, PenaltySpec};
use fcls_core::solvers::{LinearModel, LogisticModel, LossModel, ShrinkageModel, SolverOptions};
use fcls_core::FclsError;
use fcls_simbench::data::Model;
use fcls_simbench::{monte_carlo, preset, SimError, SimScenario};
use ndarray::Array1;
use rayon::prelude::*;
use serde_json::json;

use crate::args::{CheckArgs, Cli, Command, FitArgs, InitArgs, ModelArgs, ModelKind, PathArgs, SampleKind, SimulateArgs};
use crate::checks::run_checks;

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Solver(String),
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Input(_) => 1,
            Self::Solver(_) => 2,
            Self::CheckFailed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Input(m) => write!(f, "input error: {m}"),
            Self::Solver(m) => write!(f, "solver error: {m}"),
            Self::CheckFailed(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<FclsError> for CliError {
    fn from(e: FclsError) -> Self {
        match e {
            FclsError::EigenFailure { .. }
            | FclsError::NonConvergence { .. }
            | FclsError::RankDeficient { .. }
            | FclsError::StepFailed { .. } => Self::Solver(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Core(c) => c.into(),
            SimError::Schema(fields) => Self::Input(format!("invalid scenario:\n  {}", fields.join("\n  "))),
            other => Self::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Runs a parsed command line; informational output goes to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a, out),
        Command::Path(a) => cmd_path(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Check(a) => cmd_check(&a, out),
    }
}

enum Samples {
    Mean(MeanSamples<f64>),
    Covariance(CovarianceSamples<f64>),
}

impl Samples {
    fn estimator(&self) -> &dyn SampleEstimator<f64> {
        match self {
            Self::Mean(s) => s,
            Self::Covariance(s) => s,
        }
    }
}

/// A loss model read from disk.
pub struct LoadedModel {
    model: Model,
    d: usize,
    samples: Option<Samples>,
}

fn nodes_for(len: usize, declared: Option<usize>) -> CliResult<usize> {
    let d = EdgeVector::<f64>::nodes_for_len(len)
        .ok_or_else(|| input(format!("{len} columns is not d(d-1)/2 for any node count d")))?;
    match declared {
        Some(dd) if dd != d => Err(input(format!("--d {dd} needs {} columns, found {len}", edge_count(dd)))),
        _ => Ok(d),
    }
}

fn required<'a>(p: &'a Option<std::path::PathBuf>, flag: &str, model: &str) -> CliResult<&'a Path> {
    p.as_deref()
        .ok_or_else(|| input(format!("--{flag} is required for the {model} model")))
}

fn load_model(a: &ModelArgs) -> CliResult<LoadedModel> {
    match a.model {
        ModelKind::Shrinkage => {
            if a.x.is_some() || a.y.is_some() {
                return Err(input("--x/--y do not apply to the shrinkage model"));
            }
            let samples = match &a.samples {
                None => None,
                Some(p) => {
                    let m = load_matrix::<f64>(p)?;
                    Some(match a.sample_kind {
                        SampleKind::Mean => Samples::Mean(MeanSamples::new(m)),
                        SampleKind::Covariance => Samples::Covariance(CovarianceSamples::new(m)),
                    })
                }
            };
            let bok = match (&a.bok, &samples) {
                (Some(p), _) => load_edge_vector::<f64>(p)?,
                (None, Some(s)) => {
                    let est = s.estimator().full_estimate();
                    let d = nodes_for(est.len(), None)?;
                    EdgeVector::new(d, est)?
                }
                (None, None) => return Err(input("the shrinkage model needs --bok or --samples")),
            };
            if let Some(dd) = a.d {
                if dd != bok.d() {
                    return Err(input(format!("--d {dd} disagrees with d={} in the input", bok.d())));
                }
            }
            if let Some(s) = &samples {
                let est_len = s.estimator().full_estimate().len();
                if est_len != bok.len() {
                    return Err(input(format!(
                        "samples give {est_len} edge values but the estimate has {}",
                        bok.len()
                    )));
                }
            }
            Ok(LoadedModel {
                d: bok.d(),
                model: Model::Shrinkage(ShrinkageModel::new(bok.into_values())),
                samples,
            })
        }
        ModelKind::Linear | ModelKind::Logistic => {
            let name = if a.model == ModelKind::Linear { "linear" } else { "logistic" };
            let x = load_matrix::<f64>(required(&a.x, "x", name)?)?;
            let y = load_column::<f64>(required(&a.y, "y", name)?)?;
            if x.nrows() != y.len() {
                return Err(input(format!("X has {} rows but y has {} entries", x.nrows(), y.len())));
            }
            let d = nodes_for(x.ncols(), a.d)?;
            let model = if a.model == ModelKind::Linear {
                Model::Linear(LinearModel::new(x, y)?)
            } else {
                if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
                    return Err(input("logistic responses must be 0 or 1"));
                }
                Model::Logistic(LogisticModel::new(x, y, a.ridge)?)
            };
            Ok(LoadedModel { model, d, samples: None })
        }
    }
}

fn solver() -> SolverOptions<f64> {
    SolverOptions::default()
}

fn full_estimate(m: &LoadedModel) -> CliResult<Array1<f64>> {
    match &m.model {
        Model::Shrinkage(s) => Ok(s.b_ok().clone()),
        model => Ok(model.restricted_unpenalized(&vec![true; model.dim()], &solver())?),
    }
}

/// Builds the initializer and a JSON description of how it was chosen.
fn build_init(m: &LoadedModel, a: &InitArgs, warn: &mut Vec<String>) -> CliResult<(EdgeVector<f64>, serde_json::Value)> {
    let spec = InitSpec {
        kind: a.init,
        gamma: a.init_gamma,
        cv_folds: a.cv_folds,
        grid: None,
        seed: a.seed,
    };
    let mut info = json!({ "kind": spec.kind });
    let threshold = match spec.kind {
        InitKind::HardThreshold => Some(ThresholdKind::Hard),
        InitKind::SoftThreshold => Some(ThresholdKind::Soft),
        InitKind::LassoCv if matches!(m.model, Model::Shrinkage(_)) => Some(ThresholdKind::Soft),
        _ => None,
    };
    let values = match (spec.kind, threshold) {
        (InitKind::Zero, _) => Array1::zeros(m.model.dim()),
        (InitKind::Raw, _) => full_estimate(m)?,
        (_, Some(kind)) => match (spec.gamma, &m.samples) {
            (Some(g), _) => {
                info["gamma"] = json!(g);
                generalized_threshold(full_estimate(m)?.view(), g, kind)
            }
            (None, Some(s)) => {
                let c = cv_select_threshold(s.estimator(), kind, spec.cv_folds, None, spec.seed)?;
                info["gamma"] = json!(c.gamma);
                info["cv_folds"] = json!(spec.cv_folds);
                c.init
            }
            (None, None) if matches!(m.model, Model::Shrinkage(_)) => {
                let note = "no --samples given; cross-validated thresholding fell back to the raw estimate (gamma = 0)";
                warn.push(note.to_string());
                info["gamma"] = json!(0.0);
                info["note"] = json!(note);
                full_estimate(m)?
            }
            (None, None) => {
                return Err(input("cross-validated thresholding needs a shrinkage model; use --init lasso-cv or --init-gamma"))
            }
        },
        (_, None) => match spec.gamma {
            Some(g) => {
                info["gamma"] = json!(g);
                lasso_path(&m.model, &[g], &solver())?.pop().expect("one level")
            }
            None => {
                let c = match &m.model {
                    Model::Linear(l) => cv_select_lasso(l, spec.cv_folds, None, spec.seed, &solver())?,
                    Model::Logistic(l) => cv_select_lasso(l, spec.cv_folds, None, spec.seed, &solver())?,
                    Model::Shrinkage(_) => unreachable!("handled as soft thresholding"),
                };
                info["gamma"] = json!(c.gamma);
                info["cv_folds"] = json!(spec.cv_folds);
                c.init
            }
        },
    };
    Ok((EdgeVector::new(m.d, values)?, info))
}

fn unit_penalty(spec: &PenaltySpec) -> CliResult<Penalty<f64>> {
    Ok(Penalty::new(spec.kind, 1.0, spec.shape())?)
}

fn auto_tau(m: &LoadedModel, spec: &PenaltySpec, init: &EdgeVector<f64>) -> CliResult<f64> {
    Ok(tau_max(&m.model, &unit_penalty(spec)?, init)?)
}

fn lla_options(mode: fcls_core::lla::LlaMode, steps: Option<usize>) -> CliResult<LlaOptions<f64>> {
    let mut opts = LlaOptions::new(mode);
    if let Some(s) = steps {
        if s == 0 {
            return Err(input("--steps must be at least 1"));
        }
        opts = opts.with_max_steps(s);
    }
    Ok(opts)
}

fn create_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| input(format!("cannot create {}: {e}", dir.display())))
}

fn write_trace(dir: &Path, trace: &LlaTrace<f64>) -> CliResult<()> {
    let f = fs::File::create(dir.join("trace.csv"))?;
    write_trace_csv(std::io::BufWriter::new(f), trace)?;
    Ok(())
}

fn cmd_fit(a: &FitArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = PenaltySpec {
        kind: a.penalty.penalty,
        tau: a.tau,
        a: a.penalty.a,
    };
    if let Some(t) = a.tau.value() {
        if !t.is_finite() || t <= 0.0 {
            return Err(input(format!("--tau must be positive, got {t}")));
        }
    }
    let opts = lla_options(a.mode, a.steps)?;
    let m = load_model(&a.model)?;
    let mut warnings = Vec::new();
    let (init, init_info) = build_init(&m, &a.init, &mut warnings)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let tmax = unit_penalty(&spec)?
        .b1
        .is_some()
        .then(|| auto_tau(&m, &spec, &init))
        .transpose()?;
    let penalty = spec.build(|| {
        tmax.ok_or_else(|| FclsError::InvalidArgument("--tau auto needs a SCAD-like penalty (scad or mcp)".into()))
    })?;
    let trace = lla_run(&m.model, &penalty, &init, &opts)?;

    create_out(&a.out)?;
    save_edge_vector(&a.out.join("beta.csv"), trace.last())?;
    let mut sidecar = TraceSidecar::new(&trace, &penalty);
    sidecar.tau_max = tmax;
    sidecar.init = Some(init_info);
    sidecar.save(&a.out.join("trace.json"))?;
    write_trace(&a.out, &trace)?;

    let blocks = connected_components(trace.last(), 0.0).members().len();
    writeln!(
        out,
        "tau={} steps={} converged={} nonzeros={} blocks={}",
        format_value(penalty.tau),
        trace.steps_taken,
        trace.converged,
        trace.last().values().iter().filter(|v| **v != 0.0).count(),
        blocks
    )?;
    if a.mode == fcls_core::lla::LlaMode::ToConvergence && !trace.converged {
        return Err(CliError::Solver(format!(
            "LLA did not reach a fixed point within {} steps",
            trace.steps_taken
        )));
    }
    Ok(())
}

fn cmd_path(a: &PathArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec = PenaltySpec {
        kind: a.penalty.penalty,
        tau: fcls_core::TauSpec::AUTO,
        a: a.penalty.a,
    };
    let opts = lla_options(a.mode, a.steps)?;
    let m = load_model(&a.model)?;
    let mut warnings = Vec::new();
    let (init, _) = build_init(&m, &a.init, &mut warnings)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let top = auto_tau(&m, &spec, &init)?;
    let grid = tau_grid(top, a.points, a.decades)?;
    let unit = unit_penalty(&spec)?;
    let traces: Vec<LlaTrace<f64>> = grid
        .par_iter()
        .map(|&t| lla_run(&m.model, &unit.with_tau(t)?, &init, &opts))
        .collect::<Result<_, FclsError>>()?;

    create_out(&a.out)?;
    let mut summary = String::from("tau,steps,converged,nonzeros,blocks\n");
    let mut values = String::from("tau,edge_id,value\n");
    for (t, trace) in grid.iter().zip(&traces) {
        let beta = trace.last();
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            format_value(*t),
            trace.steps_taken,
            trace.converged,
            beta.values().iter().filter(|v| **v != 0.0).count(),
            connected_components(beta, 0.0).members().len()
        ));
        for (l, v) in beta.values().iter().enumerate() {
            values.push_str(&format!("{},{l},{}\n", format_value(*t), format_value(*v)));
        }
    }
    fs::write(a.out.join("path_summary.csv"), summary)?;
    fs::write(a.out.join("path.csv"), values)?;
    writeln!(out, "tau_max={} points={}", format_value(top), grid.len())?;
    Ok(())
}

fn load_scenario(a: &SimulateArgs) -> CliResult<SimScenario> {
    let mut s = match (&a.preset, &a.scenario) {
        (Some(name), None) => preset(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
            SimScenario::from_json(&text)?
        }
        _ => return Err(input("give exactly one of --preset or --scenario")),
    };
    if let Some(r) = a.reps {
        s.reps = r;
    }
    if let Some(seed) = a.seed {
        s.seed = seed;
    }
    if let Some(n) = &a.n_values {
        s.n_values = n.clone();
    }
    s.validate()?;
    Ok(s)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let s = load_scenario(a)?;
    create_out(&a.out)?;
    let (report, files) = monte_carlo(&s, &a.out, None)?;
    if !report.skipped_n.is_empty() {
        eprintln!("warning: skipped infeasible sample sizes {:?}", report.skipped_n);
    }
    for note in report.failure_notes() {
        eprintln!("note: {note}");
    }
    for row in &report.summary {
        writeln!(
            out,
            "{:<24} n={:<5} mean={:.4} stderr={:.4} failures={}",
            row.method, row.n, row.mean, row.stderr, row.failures
        )?;
    }
    for p in [&files.results, &files.summary, &files.plot] {
        writeln!(out, "wrote {}", p.display())?;
    }
    Ok(())
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> CliResult<()> {
    let report = run_checks(a.only.as_deref(), a.seed, a.inject_fault).map_err(CliError::Input)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| input(e.to_string()))?;
    if a.json {
        writeln!(out, "{json}")?;
    } else {
        write!(out, "{}", report.render())?;
    }
    if let Some(dir) = &a.out {
        create_out(dir)?;
        fs::write(dir.join("check_report.json"), format!("{json}\n"))?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}/{}", c.family, c.name))
            .collect();
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
