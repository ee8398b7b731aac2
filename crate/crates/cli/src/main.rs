use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddasym::profiles::Moments;
use ddasym::{PrefactorMode, QuadratureSpec};
use ddasym_cli::compare::{self, CompareOptions};
use ddasym_cli::run_config::{parse_expansion, parse_q_list};
use ddasym_cli::verify::{Profile, VerifyOptions};
use ddasym_cli::{constants, parse_window, simulate, table, verify, write_text, CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "ddasym", version, about = "Large-time asymptotics toolkit for the 3D drift-diffusion equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the constants table with recomputed values.
    Constants {
        /// Also write constants.csv and constants.json here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Read quadrature tolerances from the [tolerance] section.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the kernel, quadrature and profile invariant suites.
    Verify {
        #[arg(long, value_enum, default_value = "fast")]
        profile: Profile,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Scale κ by this factor (negative control).
        #[arg(long, hide = true, default_value_t = 1.0)]
        tamper_kappa: f64,
    },
    /// Run the solver and write snapshots plus a manifest.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to [run] output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residuals of a snapshot directory against the expansions.
    Compare {
        /// Directory written by `simulate`.
        snapshots: PathBuf,
        /// Defaults to the snapshot directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Take [compare] and [tolerance] settings from this config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated exponents, e.g. `1,2,inf`.
        #[arg(long)]
        q: Option<String>,
        /// Fit window in profile time, `T0:T1`.
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        mode: Option<PrefactorMode>,
        /// Comma-separated expansions: u0, first, full or terms joined by `+`.
        #[arg(long)]
        expansion: Option<String>,
    },
    /// Tabulate the expansion terms at given times and points.
    ProfileTable {
        /// Comma-separated positive times.
        #[arg(long)]
        t: String,
        /// Radii along the first axis.
        #[arg(long, conflicts_with = "x")]
        r: Option<String>,
        /// Points `x,y,z;x,y,z`.
        #[arg(long)]
        x: Option<String>,
        #[arg(long, default_value_t = 1.0)]
        m0: f64,
        #[arg(long, default_value = "0,0,0")]
        m1: String,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Usage(format!("THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn tolerance_from(config: Option<&Path>) -> CliResult<QuadratureSpec> {
    match config {
        Some(p) => Ok(RunConfig::read(p)?.quad),
        None => Ok(ddasym::profiles::default_profile_spec()),
    }
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Constants { out, config } => {
            let table = constants::cmd_constants(&tolerance_from(config.as_deref())?)?;
            print!("{}", table.to_text());
            if let Some(dir) = out {
                write_text(&dir.join("constants.csv"), &table.to_csv())?;
                write_text(&dir.join("constants.json"), &(serde_json::to_string_pretty(&table)? + "\n"))?;
            }
            Ok(())
        }
        Command::Verify { profile, out, seed, tamper_kappa } => {
            let report = verify::cmd_verify(&VerifyOptions { profile, seed, kappa_scale: tamper_kappa })?;
            for c in &report.checks {
                println!(
                    "{} {:<11} {:<40} achieved {:.6e} target {:.6e} tol {:.1e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.suite,
                    c.name,
                    c.achieved,
                    c.target,
                    c.tolerance
                );
            }
            let path = out.join("verify.json");
            write_text(&path, &report.to_json()?)?;
            println!("report written to {}", path.display());
            let failed: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Check(failed.join(", ")))
            }
        }
        Command::Simulate { config, out } => {
            let cfg = RunConfig::read(&config)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            let manifest = simulate::cmd_simulate(&cfg, &out)?;
            println!(
                "{} snapshots written to {} (config_hash={}, mass drift {:.2e})",
                manifest.snapshots.len(),
                out.display(),
                manifest.config_hash,
                manifest.run.mass_drift()
            );
            Ok(())
        }
        Command::Compare { snapshots, out, config, q, window, mode, expansion } => {
            let base = config.as_deref().map(RunConfig::read).transpose()?;
            let mode = mode.or(base.as_ref().map(|c| c.mode)).unwrap_or_default();
            let expansions = match expansion {
                Some(list) => list.split(',').map(|e| parse_expansion(e, mode)).collect::<CliResult<Vec<_>>>()?,
                None => match &base {
                    Some(c) => c.expansions.iter().map(|e| e.with_mode(mode)).collect(),
                    None => ["u0", "first", "full"].iter().map(|e| parse_expansion(e, mode)).collect::<CliResult<_>>()?,
                },
            };
            let opts = CompareOptions {
                expansions,
                q_list: match q {
                    Some(q) => parse_q_list(&q)?,
                    None => base.as_ref().map(|c| c.q_list.clone()).unwrap_or_default(),
                },
                fit_window: match window {
                    Some(w) => Some(parse_window(&w)?),
                    None => base.as_ref().and_then(|c| c.window),
                },
                time_shift: base.as_ref().and_then(|c| c.time_shift),
                apply_window_rule: base.as_ref().map(|c| c.window_rule).unwrap_or(true),
                quad: base.as_ref().map(|c| c.quad).unwrap_or_else(ddasym::profiles::default_profile_spec),
            };
            let out_dir = out.unwrap_or_else(|| snapshots.clone());
            let result = compare::cmd_compare(&snapshots, &out_dir, &opts)?;
            print!("{}", compare::summary(&result));
            Ok(())
        }
        Command::ProfileTable { t, r, x, m0, m1, out } => {
            let times: Vec<f64> = ddasym::config::parse_list(&t).map_err(CliError::Usage)?;
            let points = match (r, x) {
                (Some(r), None) => table::radial_points(&ddasym::config::parse_list(&r).map_err(CliError::Usage)?),
                (None, Some(x)) => table::parse_points(&x)?,
                _ => return Err(CliError::Usage("give either --r or --x".into())),
            };
            let m1: Vec<f64> = ddasym::config::parse_list(&m1).map_err(CliError::Usage)?;
            let m1: [f64; 3] = m1.try_into().map_err(|_| CliError::Usage("--m1 needs three components".into()))?;
            let tab = table::cmd_profile_table(&times, &points, &Moments::new(m0, m1), &ddasym::profiles::default_profile_spec())?;
            for (row, col, msg) in &tab.errors {
                eprintln!("row {row}, column {col}: {msg}");
            }
            match out {
                Some(path) => write_text(&path, &tab.to_csv())?,
                None => print!("{}", tab.to_csv()),
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| dispatch(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
