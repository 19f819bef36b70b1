use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use freejc::config::load_config;
use freejc::output::write_result;
use freejc::scenario::{self, ScenarioConfig, ScenarioKind};
use freejc::selftest::run_selftest;

#[derive(Parser)]
#[command(name = "freejc", version, about = "Free-electron cavity QED simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario named in a config file.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Phase-matching and detuning report only.
    Report {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Oracle-equivalence and invariant checks.
    Selftest,
}

#[derive(clap::Args)]
struct RunFlags {
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Integrator tolerance, overrides the config.
    #[arg(long)]
    tol: Option<f64>,
    /// Run even when the few-level reduction is not valid.
    #[arg(long)]
    override_criterion: bool,
}

fn resolve(config: &Path, flags: &RunFlags) -> freejc::Result<ScenarioConfig> {
    let mut cfg = load_config(config)?;
    if let Some(tol) = flags.tol {
        cfg.numerics.tolerance = tol;
        cfg.numerics.integrator().validate()?;
    }
    cfg.override_criterion |= flags.override_criterion;
    Ok(cfg)
}

fn run(cfg: &ScenarioConfig, flags: &RunFlags) -> freejc::Result<()> {
    let result = scenario::run_scenario(cfg)?;
    for path in write_result(&result, &flags.out_dir)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { config, flags } => resolve(config, flags).and_then(|cfg| run(&cfg, flags)),
        Command::Report { config, flags } => resolve(config, flags).and_then(|mut cfg| {
            cfg.kind = ScenarioKind::PhaseMatchReport;
            run(&cfg, flags)
        }),
        Command::Selftest => run_selftest().map(|checks| {
            let mut failed = 0;
            for c in &checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {:<36} value={:.3e} limit={:.1e}", c.name, c.value, c.limit);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                eprintln!("{failed} selftest check(s) failed");
                std::process::exit(1);
            }
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
