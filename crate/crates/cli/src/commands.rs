use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sdfstab::bench;
use sdfstab::certificate::{Branch, Classifier, ToleranceMap};
use sdfstab::integrate::IntegratorConfig;
use sdfstab::parse::{parse_system_spec, ParseError};
use sdfstab::record::{format_f64, render_records};
use sdfstab::simulate::{
    parse_trajectory_csv, trajectory_csv, verify_report, ClosedLoopConfig, Controller, Partition, RunReport, SimError,
};
use sdfstab::synthesis::{
    select_epsilon_with, smooth_outcome, synthesize_pair_with, EpsilonSearch, FlowJets, SearchPolicy, SynthesisError,
};
use sdfstab::{Poly, System};
use thiserror::Error;

use crate::args::{ClassifyArgs, Point, Command, IntegArgs, IntegratorKind, SimulateArgs, SynthesizeArgs, TolArgs, VerifyArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("system file {path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Controller(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } | CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Controller(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::ControllerFailure { .. } | SimError::Synthesis(_) => {
                CliError::Controller(format!("sdf_simulator: {e}"))
            }
            SimError::Numerical { .. } => CliError::Numerical(format!("sdf_simulator: {e}")),
            _ => CliError::Config(format!("sdf_simulator: {e}")),
        }
    }
}

impl From<SynthesisError> for CliError {
    fn from(e: SynthesisError) -> Self {
        match e {
            SynthesisError::SearchExhausted { .. } | SynthesisError::NoDecrease { .. } => {
                CliError::Controller(format!("control_synthesis: {e}"))
            }
            SynthesisError::Integrate(_) => CliError::Numerical(format!("control_synthesis: {e}")),
            _ => CliError::Config(format!("control_synthesis: {e}")),
        }
    }
}

fn config(module: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{module}: {e}"))
}

struct Loaded {
    sys: System,
    theta: Poly,
}

fn load_system(name: &str) -> Result<Loaded, CliError> {
    if let Some(case) = bench::registry(name) {
        return Ok(Loaded {
            sys: case.system,
            theta: case.theta,
        });
    }
    let path = PathBuf::from(name);
    let text = read(&path)?;
    let spec = parse_system_spec(&text).map_err(|source| CliError::Parse { path, source })?;
    let theta = spec.theta.unwrap_or_else(|| Poly::zero(spec.system.dim()));
    Ok(Loaded { sys: spec.system, theta })
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: String) -> Result<String, CliError> {
    match out {
        Some(p) => {
            write_atomic(p, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn tolerances(t: &TolArgs) -> Result<ToleranceMap, CliError> {
    if t.n_max == 0 {
        return Err(config("clf_certificate", "n_max must be at least 1"));
    }
    ToleranceMap::new(t.zero_tol, t.strict_tol).map_err(|e| config("clf_certificate", e))
}

fn integrator(a: &IntegArgs) -> Result<IntegratorConfig<f64>, CliError> {
    match a.integrator {
        IntegratorKind::Rk4 => IntegratorConfig::rk4(a.step),
        IntegratorKind::Dp45 => IntegratorConfig::dormand_prince(a.rtol, a.atol),
    }
    .map_err(|e| config("sdf_simulator", e))
}

fn policy(a: &IntegArgs, tol: &ToleranceMap) -> Result<SearchPolicy, CliError> {
    if !(a.u_max > 0.0) {
        return Err(config("control_synthesis", "u-max must be positive"));
    }
    Ok(SearchPolicy {
        tol: *tol,
        ..SearchPolicy::default()
    }
    .with_cap(a.u_max))
}

fn check_dim(sys: &System, p: &[f64], what: &str) -> Result<(), CliError> {
    if p.len() != sys.dim() {
        return Err(CliError::Config(format!(
            "{what} {} has {} coordinates, system dimension is {}",
            sdfstab::record::format_point(p),
            p.len(),
            sys.dim()
        )));
    }
    Ok(())
}

pub fn run(cmd: Command) -> Result<String, CliError> {
    match cmd {
        Command::Classify(a) => classify(a),
        Command::Synthesize(a) => synthesize(a),
        Command::Simulate(a) => simulate(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    }
}

fn classify(a: ClassifyArgs) -> Result<String, CliError> {
    let loaded = load_system(&a.system.system)?;
    let tol = tolerances(&a.tol)?;
    let points: Vec<Vec<f64>> = a.point.into_iter().map(|p| p.0).collect();
    for p in &points {
        check_dim(&loaded.sys, p, "point")?;
    }
    let classifier = Classifier::new(&loaded.sys);
    let mut records = Vec::new();
    for (p, cert) in points.iter().zip(classifier.classify_many(&points, &tol, a.tol.n_max)) {
        let cert = cert.map_err(|e| config("clf_certificate", e))?;
        records.push(cert.to_record(p));
    }
    emit(a.out.as_deref(), render_records(None, &records))
}

fn synthesize(a: SynthesizeArgs) -> Result<String, CliError> {
    let loaded = load_system(&a.system.system)?;
    let tol = tolerances(&a.tol)?;
    let integ = integrator(&a.integ)?;
    let policy = policy(&a.integ, &tol)?;
    let classifier = Classifier::new(&loaded.sys);
    let jets = FlowJets::new(&loaded.sys);
    let opts = EpsilonSearch::default();
    let mut records = Vec::new();
    for Point(p) in &a.point {
        check_dim(&loaded.sys, p, "point")?;
        let cert = classifier
            .classify_point(p, &tol, a.tol.n_max)
            .map_err(|e| config("clf_certificate", e))?;
        let outcome = if cert.branch.is_bracket() {
            let pair = synthesize_pair_with(&jets, p, &cert, &policy)?;
            select_epsilon_with(&loaded.sys, p, &pair, a.sigma, &integ, &opts)?
        } else if cert.branch == Branch::Unclassified {
            return Err(CliError::Controller(format!(
                "clf_certificate: no branch applies at {}",
                sdfstab::record::format_point(p)
            )));
        } else {
            smooth_outcome(&loaded.sys, &loaded.theta, p, a.sigma, &tol, &integ, &opts)?
        };
        let mut r = outcome.to_record(p);
        r.push("branch", cert.branch);
        records.push(r);
    }
    emit(a.out.as_deref(), render_records(None, &records))
}

fn simulate(a: SimulateArgs) -> Result<String, CliError> {
    let loaded = load_system(&a.system.system)?;
    check_dim(&loaded.sys, &a.x0.0, "x0")?;
    let tol = tolerances(&a.tol)?;
    let partition = match &a.times {
        Some(t) => Partition::new(t.0.clone()),
        None => Partition::uniform(a.dt, a.horizon),
    }
    .map_err(|e| config("sdf_simulator", e))?;
    let cfg = ClosedLoopConfig {
        tol,
        n_max: a.tol.n_max,
        policy: policy(&a.integ, &tol)?,
        integ: integrator(&a.integ)?,
        ..ClosedLoopConfig::default()
    };
    let controller = Controller::new(&loaded.sys, &loaded.theta, cfg)?;
    let (traj, report) = controller.run(&partition, &a.x0.0)?;
    let csv = trajectory_csv(&traj, &loaded.sys);
    let mut stdout = String::new();
    match &a.out {
        Some(p) => write_atomic(p, &csv)?,
        None => stdout.push_str(&csv),
    }
    let times: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
    finish_report(&report, &times, a.report.as_deref(), a.plot.as_deref(), &mut stdout)?;
    Ok(stdout)
}

fn finish_report(
    report: &RunReport,
    times: &[f64],
    report_path: Option<&Path>,
    plot: Option<&Path>,
    stdout: &mut String,
) -> Result<(), CliError> {
    let summary = report.summary();
    match report_path {
        Some(p) => write_atomic(p, &render_records(Some(&summary), &[report.to_record()]))?,
        None => stdout.push_str(&summary),
    }
    if let Some(p) = plot {
        write_atomic(p, &plot_data(times, &report.v_samples))?;
    }
    Ok(())
}

fn plot_data(times: &[f64], v: &[f64]) -> String {
    let mut s = String::from("# t V\n");
    for (t, v) in times.iter().zip(v) {
        let _ = writeln!(s, "{} {}", format_f64(*t), format_f64(*v));
    }
    s
}

fn load_trajectory(a: &VerifyArgs) -> Result<(Loaded, RunReport, Vec<f64>), CliError> {
    let loaded = load_system(&a.system.system)?;
    if !a.trajectory.exists() {
        return Err(config("bench_cli", format!("missing artifact {}", a.trajectory.display())));
    }
    let text = read(&a.trajectory)?;
    let traj = parse_trajectory_csv(&text, loaded.sys.dim(), a.dt).map_err(|e| match e {
        SimError::EmptyTrajectory => config("bench_cli", format!("missing artifact: {} is empty", a.trajectory.display())),
        e => config("sdf_simulator", e),
    })?;
    let report = verify_report(&traj, &loaded.sys, None)?;
    let times = traj.samples.iter().map(|s| s.t).collect();
    Ok((loaded, report, times))
}

fn verify(a: VerifyArgs) -> Result<String, CliError> {
    let (_, report, times) = load_trajectory(&a)?;
    let mut stdout = String::new();
    finish_report(&report, &times, a.out.as_deref(), a.plot.as_deref(), &mut stdout)?;
    if !(report.decrease_ok && report.intersample_ok) {
        return Err(CliError::Controller(format!("sdf_simulator: trajectory fails verification\n{}", report.summary())));
    }
    Ok(stdout)
}

fn report(a: VerifyArgs) -> Result<String, CliError> {
    let (_, report, times) = load_trajectory(&a)?;
    let mut stdout = String::new();
    finish_report(&report, &times, a.out.as_deref(), a.plot.as_deref(), &mut stdout)?;
    Ok(stdout)
}
