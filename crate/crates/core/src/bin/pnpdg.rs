use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pnp_dg::convergence::convergence_study;
use pnp_dg::scenario::{
    builtin_scenario, describe_scenario, run_scenario, Overrides, RunOptions, ScenarioConfig, BUILTIN_SCENARIOS,
};
use pnp_dg::stepper::Scheme;
use pnp_dg::DgError;

const EXIT_VIOLATION: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CONFIG: u8 = 4;

#[derive(Parser)]
#[command(name = "pnpdg", version, about = "DG solver for 1D Poisson-Nernst-Planck systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write trace, snapshots and a summary
    Run(RunArgs),
    /// Mesh-refinement study against the exact solution of a scenario
    Converge(ConvergeArgs),
    /// Print the built-in scenarios
    ListScenarios,
}

#[derive(Args)]
struct Common {
    /// Built-in scenario name
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// JSON scenario file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    cells: Option<usize>,
    #[arg(long = "k")]
    degree: Option<usize>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "T")]
    final_time: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta1: Option<f64>,
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,
    /// Positivity floor of the limiter
    #[arg(long)]
    delta: Option<f64>,
    /// Output directory
    #[arg(long, env = "PNPDG_OUT_DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Exit with status 2 when mass or energy checks fail
    #[arg(long)]
    strict: bool,
    /// Steps between intermediate snapshots
    #[arg(long)]
    snapshot_every: Option<usize>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Common,
    /// Cell counts to run, coarsest first
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40")]
    meshes: Vec<usize>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: DgError| e.to_string())
}

enum Failure {
    Config(String),
    Solver(String),
}

impl From<DgError> for Failure {
    fn from(e: DgError) -> Self {
        match e.root() {
            DgError::Config(_) | DgError::Json(_) => Failure::Config(e.to_string()),
            _ => Failure::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

fn load(common: &Common, snapshot_every: Option<usize>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match (&common.scenario, &common.config) {
        (Some(name), None) => builtin_scenario(name)?,
        (None, Some(path)) => ScenarioConfig::load(path)?,
        _ => return Err(Failure::Config("pass exactly one of --scenario or --config".into())),
    };
    cfg.apply(&Overrides {
        cells: common.cells,
        degree: common.degree,
        mu: common.mu,
        final_time: common.final_time,
        beta0: common.beta0,
        beta1: common.beta1,
        scheme: common.scheme,
        limiter_delta: common.delta,
        snapshot_every,
        out_dir: common.out_dir.clone(),
    });
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<u8, Failure> {
    let cfg = load(&args.common, args.snapshot_every)?;
    let report = run_scenario(
        &cfg,
        &RunOptions {
            out_dir: cfg.output.out_dir.clone(),
            strict: args.strict,
            dry_run: false,
        },
    )?;
    let s = &report.summary;
    println!(
        "{}: {} steps to t = {} (dt = {:.3e}) in {:.2}s",
        s.scenario, s.diagnostics.steps, report.integration.state.time, s.time_step, s.wall_time_seconds
    );
    if let Some(last) = report.integration.trace.last() {
        println!(
            "free energy {:.10e}, min cell average {:.3e}, limited cells {}",
            last.free_energy, s.diagnostics.min_cell_average, s.diagnostics.total_limited
        );
    }
    if let Some(dir) = &report.out_dir {
        println!("output written to {}", dir.display());
    }
    for v in &s.violations {
        eprintln!("violation: {v}");
    }
    Ok(if args.strict && report.has_violations() {
        EXIT_VIOLATION
    } else {
        0
    })
}

fn converge(args: ConvergeArgs) -> Result<u8, Failure> {
    let cfg = load(&args.common, None)?;
    let report = convergence_study(&cfg, &args.meshes)?;
    print!("{}", report.to_table());
    let dir = cfg
        .output
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("pnpdg-out").join(format!("{}-convergence", cfg.name)));
    fs::create_dir_all(&dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join("convergence.csv"))?);
    report.write_csv(&mut w)?;
    w.flush()?;
    fs::write(dir.join("convergence.txt"), report.to_table())?;
    println!("output written to {}", dir.display());
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Converge(args) => converge(args),
        Command::ListScenarios => {
            for name in BUILTIN_SCENARIOS {
                println!("{name:<10} {}", describe_scenario(name));
            }
            Ok(0)
        }
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(EXIT_SOLVER)
        }
    }
}
