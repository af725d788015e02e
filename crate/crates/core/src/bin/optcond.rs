use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use optcond::report::{self, ArcDirections, ProblemSource, RunConfig};

#[derive(Parser)]
#[command(
    version,
    about = "Constraint qualifications, multipliers, second-order conditions and feasible arcs at a point"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a problem file or a builtin (`builtin:paper-example-1`,
    /// `builtin:paper-example-2`, `builtin:circle`).
    Analyze(Analyze),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct Analyze {
    problem: String,
    /// Candidate point, overriding the file's `point` line.
    #[arg(long, value_delimiter = ',')]
    point: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Neighbourhood radii for the constant-rank scans.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-3, 1e-4])]
    radii: Vec<f64>,
    /// Sample points per radius.
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol_rank: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_active: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_dir: f64,
    #[arg(long, default_value_t = 1e-12)]
    tol_newton: f64,
    #[arg(long, default_value_t = 1e-7)]
    tol_verify: f64,
    /// Arc direction (repeatable); replaces sampled directions.
    #[arg(long = "arc-dir", allow_hyphen_values = true)]
    arc_dir: Vec<String>,
    /// Number of sampled linearized-cone directions to trace.
    #[arg(long, default_value_t = 4)]
    arc_sample: usize,
    /// Points on each arc grid (odd, at least 5).
    #[arg(long, default_value_t = 41)]
    arc_points: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Directions traced for the Abadie evidence.
    #[arg(long, default_value_t = 8)]
    acq_directions: usize,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// Add wall-clock timing to the JSON report (breaks byte-for-byte reproducibility).
    #[arg(long)]
    timing: bool,
}

fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad number `{v}` in `{s}`: {e}")))
        .collect()
}

fn config(a: Analyze) -> Result<RunConfig, String> {
    let arc_directions = if a.arc_dir.is_empty() {
        ArcDirections::Sample(a.arc_sample)
    } else {
        ArcDirections::Explicit(a.arc_dir.iter().map(|s| parse_vector(s)).collect::<Result<_, _>>()?)
    };
    let mut c = RunConfig::new(ProblemSource::parse(&a.problem));
    c.point = a.point;
    c.seed = a.seed;
    c.radii = a.radii;
    c.samples = a.samples;
    c.tol.rank = a.tol_rank;
    c.tol.active = a.tol_active;
    c.tol.direction = a.tol_dir;
    c.tol.newton = a.tol_newton;
    c.tol.verify = a.tol_verify;
    c.arc_directions = arc_directions;
    c.arc_samples = a.arc_points;
    c.delta = a.delta;
    c.acq_directions = a.acq_directions;
    c.json_path = a.json;
    c.csv_dir = a.csv_dir;
    c.include_timing = a.timing;
    Ok(c)
}

fn main() -> ExitCode {
    let Command::Analyze(args) = Cli::parse().command;
    let config = match config(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("input error: {e}");
            return ExitCode::from(2);
        }
    };
    let started = std::time::Instant::now();
    let mut report = match report::run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Err(e) = report::write_outputs(&mut report, &config) {
        eprintln!("{e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    print!("{}", report::summary(&report));
    println!("time      {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
    if report.errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}
