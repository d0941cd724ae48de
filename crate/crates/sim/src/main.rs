use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lwa_sim::SimError;
use lwa_sim::scenario::{PRESETS, Scenario};

/// Overrides the scenario seed; `--seed` wins over it.
const SEED_ENV: &str = "LWA_SEED";

#[derive(Parser)]
#[command(name = "lwa", version, about = "LTE-WiFi split-bearer simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write per-interval metrics as CSV.
    Run {
        /// Scenario file (.toml or .json) or `presets:<name>`.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed and $LWA_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Deliver merged PDUs without reordering.
        #[arg(long)]
        no_reorder: bool,
    },
    /// List the built-in scenarios.
    Presets,
    /// Check a scenario without running it.
    Validate {
        #[arg(long)]
        scenario: String,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match cli.command {
        Command::Presets => {
            for (name, _) in PRESETS {
                let s = Scenario::preset(name).expect("built-in presets are valid");
                println!("{name:<20} {}", s.description);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { scenario } => match Scenario::load(&scenario) {
            Ok(s) => {
                println!("ok: {} ({} s)", if s.name.is_empty() { &scenario } else { &s.name }, s.duration_s);
                ExitCode::SUCCESS
            }
            Err(e) => fail(1, e),
        },
        Command::Run { scenario, out, seed, duration, no_reorder } => {
            let mut s = match Scenario::load(&scenario) {
                Ok(s) => s,
                Err(e) => return fail(1, e),
            };
            let env_seed = match std::env::var(SEED_ENV) {
                Ok(v) => match v.parse::<u64>() {
                    Ok(n) => Some(n),
                    Err(_) => return fail(1, format!("{SEED_ENV}: not an unsigned integer: {v:?}")),
                },
                Err(_) => None,
            };
            if let Some(seed) = seed.or(env_seed) {
                s.seed = seed;
            }
            if let Some(d) = duration {
                s.duration_s = d;
            }
            if no_reorder {
                s.reorder.enabled = false;
            }
            let report = match lwa_sim::run(&s) {
                Ok(r) => r,
                Err(SimError::Config(e)) => return fail(1, e),
                Err(e) => return fail(2, e),
            };
            if let Err(e) = report.write_csv(&out) {
                return fail(2, format!("{}: {e}", out.display()));
            }
            let sum = &report.summary;
            println!(
                "{}: {} records, {} of {} SDUs delivered, mean goodput {:.3} Mbps",
                out.display(),
                report.records.len(),
                sum.sdus_delivered,
                sum.sdus_sourced,
                sum.mean_goodput_bps() / 1e6
            );
            ExitCode::SUCCESS
        }
    }
}
