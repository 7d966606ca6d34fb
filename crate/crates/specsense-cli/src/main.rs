use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use specsense_cli::execute::{execute, Overrides};
use specsense_cli::output;
use specsense_cli::scenario::Scenario;

/// Optimize and validate opportunistic spectrum-access schedules described
/// by TOML scenario files.
#[derive(Parser)]
#[command(name = "specsense", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write policies, metrics, and comparisons.
    Run {
        /// Scenario TOML file.
        scenario: PathBuf,
        /// Output directory (default: `<scenario stem>-out` next to the file).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run several scenarios and print one summary line per variant.
    Compare {
        /// Scenario TOML files.
        #[arg(required = true)]
        scenarios: Vec<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Override the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of Monte-Carlo runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the simulation horizon (adds a simulation to scenarios
    /// without one).
    #[arg(long)]
    horizon: Option<f64>,
    /// Skip all simulation.
    #[arg(long)]
    no_sim: bool,
    /// Override the coarse search-lattice step.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Size of the worker thread pool (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            runs: self.runs,
            horizon: self.horizon,
            no_sim: self.no_sim,
            grid_step: self.grid_step,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify(&err))
        }
    }
}

/// Exit codes: 2 for configuration problems, 3 when no schedule satisfies
/// the constraints, 4 for numerical breakdowns.
fn classify(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<specsense::Error>() {
        Some(specsense::Error::Infeasible(_)) => 3,
        Some(specsense::Error::NumericFailure(_)) => 4,
        Some(specsense::Error::DegenerateChain) => 4,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { scenario, out, common } => {
            init_threads(common.threads)?;
            let parsed = Scenario::load(&scenario)?;
            let resolved = parsed.resolve()?;
            let exec = execute(&resolved, &common.overrides())?;
            let out_dir = out.unwrap_or_else(|| {
                let stem = scenario
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "scenario".into());
                scenario.with_file_name(format!("{stem}-out"))
            });
            output::write_all(&exec, &out_dir)?;
            print!("{}", output::render_summary(&exec));
            println!("\noutputs written to {}", out_dir.display());
            Ok(())
        }
        Command::Compare { scenarios, common } => {
            init_threads(common.threads)?;
            println!(
                "{:<46} {:>12} {:>12} {:>10} {:>9}",
                "variant", "analytic R", "simulated R", "stderr", "rel err"
            );
            for path in &scenarios {
                let resolved = Scenario::load(path)?.resolve()?;
                let exec = execute(&resolved, &common.overrides())?;
                for v in &exec.variants {
                    let analytic = v.analytic.objective();
                    let sim = v.empirical.as_ref().map(|r| r.aggregate_r);
                    let name = format!("{}/{}", exec.name, v.label);
                    let fmt_opt = |x: Option<f64>| {
                        x.map_or_else(|| "-".into(), output::fmt_sig)
                    };
                    let rel = match (analytic, sim) {
                        (Some(a), Some(s)) if a != 0.0 => {
                            output::fmt_sig((s.mean - a) / a)
                        }
                        _ => "-".into(),
                    };
                    println!(
                        "{:<46} {:>12} {:>12} {:>10} {:>9}",
                        name,
                        fmt_opt(analytic),
                        fmt_opt(sim.map(|s| s.mean)),
                        fmt_opt(sim.map(|s| s.stderr)),
                        rel
                    );
                }
            }
            Ok(())
        }
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow::anyhow!("cannot size the thread pool: {e}"))?;
    }
    Ok(())
}
