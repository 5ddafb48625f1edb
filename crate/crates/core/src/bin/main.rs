use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{error, warn};

use decouple_sim::experiment::{self, load_scenario, to_report, write_outputs, PlotKind};
use decouple_sim::{verify, Result, SimError};

#[derive(Parser)]
#[command(name = "decouple-sim", version, about = "Hadamard gate under continuous decoupling in thermal baths")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "DECOUPLE_SIM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        scenario: PathBuf,
        /// Directory for the CSV (and SVG) output.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Integration steps, overriding `integrator.steps`.
        #[arg(long)]
        steps: Option<usize>,
        /// Step-doubling tolerance, overriding `integrator.tol`.
        #[arg(long)]
        tol: Option<f64>,
        /// Also render an SVG next to the CSV.
        #[arg(long)]
        plot: bool,
    },
    /// Run the quadrature oracle and invariant suites.
    Verify,
    /// Render a runner CSV as SVG.
    Plot {
        csv: PathBuf,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Output path (defaults to the CSV path with an `.svg` extension).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Line,
    Heatmap,
}

impl From<Kind> for PlotKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Line => PlotKind::Line,
            Kind::Heatmap => PlotKind::Heatmap,
        }
    }
}

fn run(scenario: PathBuf, out_dir: PathBuf, steps: Option<usize>, tol: Option<f64>, plot: bool) -> Result<()> {
    let mut cfg = load_scenario(&scenario)?;
    if steps.is_some() {
        cfg.steps = steps;
    }
    if let Some(tol) = tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(SimError::Config(format!("--tol must be positive, got {tol}")));
        }
        cfg.tol = tol;
    }
    let outcome = experiment::run(&cfg)?;
    let report = to_report(&cfg, &outcome);
    let stem = scenario
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(cfg.experiment.name());
    let written = write_outputs(&report, &out_dir, stem, plot)?;
    println!("{}", written.csv.display());
    if let Some(svg) = written.svg {
        println!("{}", svg.display());
    }
    for (k, v) in &report.metadata {
        if k.ends_with("min_fidelity") || k.ends_with("final_fidelity") {
            println!("{k} = {v}");
        }
    }
    if !outcome.converged() {
        let worst = report
            .metadata
            .iter()
            .filter(|(k, _)| k.contains("step_doubling"))
            .filter_map(|(_, v)| v.parse::<f64>().ok())
            .fold(0.0, f64::max);
        let steps = report
            .metadata_value("grid.steps")
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        return Err(SimError::NotConverged {
            steps,
            difference: worst,
            tolerance: cfg.tol,
        });
    }
    Ok(())
}

fn verify_all() -> Result<bool> {
    let checks = verify::run_all()?;
    let mut ok = true;
    for c in &checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{mark}  {:<56} worst {:.3e} (limit {:.0e}, {:.2?})",
            c.name, c.worst, c.limit, c.elapsed
        );
        ok &= c.passed;
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("could not size the worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Run {
            scenario,
            out_dir,
            steps,
            tol,
            plot,
        } => run(scenario, out_dir, steps, tol, plot),
        Command::Verify => match verify_all() {
            Ok(true) => Ok(()),
            Ok(false) => {
                error!("verification failed");
                return ExitCode::from(1);
            }
            Err(e) => Err(e),
        },
        Command::Plot { csv, kind, out } => {
            let out = out.unwrap_or_else(|| csv.with_extension("svg"));
            experiment::emit_plot(&csv, kind.into(), &out).map(|_| println!("{}", out.display()))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
