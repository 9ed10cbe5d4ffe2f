use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use switchnet_cli::{oracle_check, parse_scenario, run_scenario, verify_bounds, Scenario};

/// Exit code for unreadable or invalid input.
const EXIT_INPUT: u8 = 1;

#[derive(Parser)]
#[command(name = "switchnet", version, about = "Run and certify state-dependent network dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory, Lyapunov and certificate files.
    Run {
        scenario: PathBuf,
        #[arg(long, env = "SWITCHNET_OUT_DIR", default_value = "switchnet-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Check the scenario's convergence bounds and print a JSON report.
    Verify {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare the network minimisers with brute-force enumeration.
    OracleCheck {
        #[arg(long = "n")]
        n: usize,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load(path: &Path, seed: Option<u64>, max_iters: Option<usize>, tol: Option<f64>) -> switchnet_cli::Result<Scenario> {
    let mut s = parse_scenario(path)?;
    if let Some(seed) = seed {
        s.run.seed = seed;
    }
    if let Some(m) = max_iters {
        s.run.max_iters = m;
    }
    if let Some(t) = tol {
        s.run.tol = t;
    }
    s.validate()?;
    Ok(s)
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn execute(cmd: Command) -> switchnet_cli::Result<u8> {
    match cmd {
        Command::Run {
            scenario,
            out,
            seed,
            max_iters,
            tol,
        } => {
            let s = load(&scenario, seed, max_iters, tol)?;
            let summary = run_scenario(&s, &out)?;
            eprintln!(
                "{}: {:?} after {} iterations in {:.3}s; certificates {}; outputs in {}",
                summary.model,
                summary.status,
                summary.iterations,
                summary.elapsed.as_secs_f64(),
                if summary.all_pass() { "pass" } else { "FAIL" },
                out.display()
            );
            Ok(summary.exit_code() as u8)
        }
        Command::Verify { scenario, seed } => {
            let s = load(&scenario, seed, None, None)?;
            let report = verify_bounds(&s)?;
            print_json(&report);
            Ok(if report.all_pass() { 0 } else { 3 })
        }
        Command::OracleCheck { n, instances, seed } => {
            let report = oracle_check(n, instances, seed)?;
            print_json(&report);
            Ok(if report.pass() { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit with 2, which is reserved for max_iters
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
