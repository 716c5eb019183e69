//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 numerical failure,
//! 3 identity-suite failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use qnls_harness::config::ScenarioConfig;
use qnls_harness::identities::{check_identities, print_report};
use qnls_harness::runner::{
    batch, default_out_root, load_config_dir, run_scenario, verify_run_dir, NumericalFailure,
    ValidationFailure, OUT_ROOT_ENV,
};
use qnls_harness::writer::read_series;

#[derive(Parser)]
#[command(
    name = "qnls",
    about = "Numerical laboratory for the 1D focusing quintic NLS",
    long_about = None,
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichOperator {
    /// Real-part block (potential -5 Q^4).
    L,
    /// Imaginary-part block (potential -Q^4).
    Lminus,
}

#[derive(Subcommand)]
enum Command {
    /// Run the static identity suite at two resolutions.
    CheckIdentities {
        /// Write the full report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one scenario config (TOML or JSON).
    Simulate {
        config: PathBuf,
        /// Output root; defaults to ./runs or $QNLS_OUT_ROOT.
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Fit modulation parameters to a stored field.
    Fit {
        field_file: PathBuf,
        /// Use the symmetric two-parameter fit instead of the full four.
        #[arg(long)]
        symmetric: bool,
    },
    /// Low spectrum of a linearized operator.
    Spectrum {
        which: WhichOperator,
        #[arg(long, default_value_t = 512)]
        n: usize,
        #[arg(long, default_value_t = 32.0)]
        half_length: f64,
        #[arg(long, default_value_t = 4)]
        count: usize,
        /// Write eigenvalues (and residuals) as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every scenario config in a directory.
    Batch {
        dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long)]
        out_root: Option<PathBuf>,
    },
    /// Summarize a finished run directory.
    Report { run_dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<NumericalFailure>().is_some() {
                ExitCode::from(2)
            } else if e.downcast_ref::<ValidationFailure>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::CheckIdentities { out } => {
            let report = check_identities(None)?;
            print_report(&report);
            if let Some(path) = out {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                println!("report written to {}", path.display());
            }
            Ok(if report.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(3)
            })
        }
        Command::Simulate { config, out_root } => {
            let cfg = ScenarioConfig::load(&config)?;
            let root = out_root.unwrap_or_else(default_out_root);
            let manifest = run_scenario(&cfg, &root)?;
            println!(
                "run '{}' complete: {} steps, {} frames, output in {}",
                cfg.name,
                manifest.summary.steps,
                manifest.summary.pass_count,
                root.join(&cfg.name).display()
            );
            if let Some(h) = &manifest.summary.halted {
                println!("halted early: {h}");
            }
            for w in &manifest.summary.warnings {
                println!("warning: {w}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fit {
            field_file,
            symmetric,
        } => {
            let field = qnls_harness::fieldio::read_field(&field_file)?;
            let mode = if symmetric {
                qnls::modulation::DecomposeMode::Symmetric2
            } else {
                qnls::modulation::DecomposeMode::Full4
            };
            let seed = qnls::modulation::seed_guess(&field).map_err(|e| anyhow::anyhow!("{e}"))?;
            let dec = qnls::modulation::decompose(&field, mode, &seed)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let content = qnls::symmetries::invert(&dec.params);
            let json = serde_json::json!({
                "fit": {
                    "lambda": dec.params.lambda,
                    "gamma": dec.params.gamma,
                    "x0": dec.params.x0,
                    "xi": dec.params.xi,
                },
                "content": {
                    "lambda": content.lambda,
                    "gamma": content.gamma.rem_euclid(std::f64::consts::TAU),
                    "x0": content.x0,
                    "xi": content.xi,
                },
                "eps_l2": dec.eps_l2,
                "newton_iters": dec.newton_iters,
                "ortho_residuals": dec.ortho_residuals,
            });
            println!("{}", serde_json::to_string_pretty(&json)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum {
            which,
            n,
            half_length,
            count,
            out,
        } => {
            let kind = match which {
                WhichOperator::L => qnls::linearized::OperatorKind::LPlus,
                WhichOperator::Lminus => qnls::linearized::OperatorKind::LMinus,
            };
            let grid = qnls::Grid::new(half_length, n).map_err(|e| anyhow::anyhow!("{e}"))?;
            let op = qnls::linearized::assemble(kind, &grid).map_err(|e| anyhow::anyhow!("{e}"))?;
            let pairs =
                qnls::linearized::low_spectrum(&op, count).map_err(|e| anyhow::anyhow!("{e}"))?;
            let mut entries = Vec::new();
            for (i, p) in pairs.iter().enumerate() {
                let res = qnls::linearized::eigen_residual_for(kind, p)
                    .map_err(|e| anyhow::anyhow!("{e}"))?;
                println!("eigenvalue {i}: {:+.9e}  (residual {res:.2e})", p.value);
                entries.push(serde_json::json!({
                    "index": i,
                    "value": p.value,
                    "residual": res,
                }));
            }
            if let Some(path) = out {
                let json = serde_json::json!({
                    "operator": match which { WhichOperator::L => "L", WhichOperator::Lminus => "Lminus" },
                    "grid": { "half_length": half_length, "n_points": n },
                    "eigenvalues": entries,
                });
                std::fs::write(&path, serde_json::to_string_pretty(&json)?)?;
                println!("spectrum written to {}", path.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch {
            dir,
            parallel,
            out_root,
        } => {
            let configs = load_config_dir(&dir)?;
            let root = out_root.unwrap_or_else(default_out_root);
            let results = batch(&configs, parallel, &root);
            let mut failures = 0;
            for (name, result) in &results {
                match result {
                    Ok(m) => println!(
                        "ok   {name}: {} steps{}",
                        m.summary.steps,
                        m.summary
                            .halted
                            .as_ref()
                            .map(|h| format!(" (halted: {h})"))
                            .unwrap_or_default()
                    ),
                    Err(e) => {
                        failures += 1;
                        println!("fail {name}: {e:#}");
                    }
                }
            }
            println!(
                "batch: {} succeeded, {failures} failed (output root {}; override with ${OUT_ROOT_ENV})",
                results.len() - failures,
                root.display()
            );
            Ok(if failures == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Report { run_dir } => {
            let manifest = verify_run_dir(&run_dir)?;
            println!("scenario: {}", manifest.scenario.name);
            println!("code version: {}", manifest.code_version);
            println!("started:  {}", manifest.started);
            println!("finished: {}", manifest.finished);
            println!("files: {:?}", manifest.output_files);
            println!(
                "steps: {}, warnings: {}",
                manifest.summary.steps,
                manifest.summary.warnings.len()
            );
            let (columns, rows) = read_series(&run_dir.join("series.csv"))?;
            println!("series: {} rows", rows.len());
            for (i, name) in columns.iter().enumerate() {
                let vals: Vec<f64> = rows.iter().filter_map(|r| r.get(i).copied().flatten()).collect();
                if vals.is_empty() {
                    continue;
                }
                let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                println!("  {name}: min {min:+.6e}, max {max:+.6e}");
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
