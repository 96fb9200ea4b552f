use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "sdfstab", version, about = "Sampled-data stabilization via generalized control Lyapunov functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify points against the stabilizability hypotheses.
    Classify(ClassifyArgs),
    /// Build the controller at points and measure its decrease.
    Synthesize(SynthesizeArgs),
    /// Run the sampled-data closed loop and write the trajectory.
    Simulate(SimulateArgs),
    /// Re-check decrease and inter-sample bounds on a trajectory file.
    Verify(VerifyArgs),
    /// Summarize a trajectory file and write (t, V) plot data.
    Report(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// Registry name (case1, case2i, case3, case4, case5) or a system file.
    #[arg(long)]
    pub system: String,
}

#[derive(Args, Debug, Clone)]
pub struct TolArgs {
    #[arg(long, default_value_t = 1e-9)]
    pub zero_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub strict_tol: f64,
    /// Largest N scanned by the classifier.
    #[arg(long, default_value_t = 6)]
    pub n_max: u32,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegratorKind {
    Rk4,
    Dp45,
}

#[derive(Args, Debug, Clone)]
pub struct IntegArgs {
    #[arg(long, value_enum, default_value_t = IntegratorKind::Rk4)]
    pub integrator: IntegratorKind,
    /// RK4 step size.
    #[arg(long, default_value_t = 0.005)]
    pub step: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Cap on |u1| for the bracket search.
    #[arg(long, default_value_t = 1048576.0)]
    pub u_max: f64,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Comma-separated coordinates; repeat for several points.
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_point)]
    pub point: Vec<Point>,
    #[command(flatten)]
    pub tol: TolArgs,
    /// Write records here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_point)]
    pub point: Vec<Point>,
    /// Upper bound on the schedule length.
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub integ: IntegArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, required = true, allow_hyphen_values = true, value_parser = parse_point)]
    pub x0: Point,
    /// Uniform sampling period.
    #[arg(long, default_value_t = 0.1)]
    pub dt: f64,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    /// Explicit sampling times, overriding --dt and --horizon.
    #[arg(long, value_parser = parse_point)]
    pub times: Option<Point>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[command(flatten)]
    pub integ: IntegArgs,
    /// Trajectory CSV (t,x1..xn,u,V).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run report record file.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Two-column (t, V) file at the sample times.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    pub trajectory: PathBuf,
    /// Sampling period used to tell sample rows from probe rows.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// Comma-separated coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub Vec<f64>);

fn parse_point(s: &str) -> Result<Point, String> {
    s.split(',')
        .map(|c| {
            let c = c.trim();
            c.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("invalid coordinate `{c}`"))
        })
        .collect::<Result<_, _>>()
        .map(Point)
}
