use std::path::PathBuf;
use std::process::ExitCode;

use accel_core::MomentumSign;
use accel_harness::{checks, cmd_compare, cmd_run, cmd_sweep, load_config, CheckOptions, HarnessError, HarnessResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "accel-lab", version, about = "Accelerated-method experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method and flow.
    Run(Common),
    /// Fit contraction rates over a list of condition numbers.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated condition numbers; overrides the config.
        #[arg(long, value_delimiter = ',')]
        kappas: Option<Vec<f64>>,
    },
    /// Compare a discrete method with its continuous-time model.
    Compare(Common),
    /// Run the invariant suite.
    Check {
        #[arg(long)]
        quiet: bool,
        #[arg(long, hide = true)]
        momentum_sign_minus: bool,
        #[arg(long, hide = true)]
        corrupt_counterexample: bool,
    },
}

fn load(c: &Common) -> HarnessResult<accel_harness::ExperimentConfig> {
    let mut cfg = load_config(&c.config)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn report(quiet: bool, r: &accel_harness::ExperimentResult) {
    if !quiet {
        println!("wrote {}", r.summary_path.display());
    }
}

fn dispatch(cli: Cli) -> HarnessResult<()> {
    match cli.command {
        Command::Run(c) => {
            let r = cmd_run(&load(&c)?, c.out.as_deref())?;
            report(c.quiet, &r);
        }
        Command::Sweep { common, kappas } => {
            let r = cmd_sweep(&load(&common)?, kappas.as_deref(), common.out.as_deref())?;
            if !common.quiet {
                for row in r.summary.sweep.iter().flatten() {
                    println!("kappa {:>8}  {:<15} fitted {:.6}  theoretical {:.6}  {}", row.kappa, row.method, row.fitted_contraction, row.theoretical, if row.pass { "pass" } else { "fail" });
                }
            }
            report(common.quiet, &r);
        }
        Command::Compare(c) => {
            let r = cmd_compare(&load(&c)?, c.out.as_deref())?;
            if let (false, Some(cmp)) = (c.quiet, &r.summary.compare) {
                println!("{}: max deviation {:.6e} (delta {:.6e})", cmp.pair, cmp.max_deviation, cmp.delta);
            }
            report(c.quiet, &r);
        }
        Command::Check { quiet, momentum_sign_minus, corrupt_counterexample } => {
            let opts = CheckOptions {
                momentum_sign: if momentum_sign_minus { MomentumSign::Minus } else { MomentumSign::Plus },
                corrupt_counterexample,
            };
            let rows = checks::run_checks(&opts);
            if !quiet {
                print!("{}", checks::render_table(&rows));
            }
            let failed = rows.iter().filter(|r| !r.passed).count();
            if failed > 0 {
                return Err(HarnessError::ChecksFailed { failed, total: rows.len() });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
