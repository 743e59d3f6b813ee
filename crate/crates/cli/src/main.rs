use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bb84_eve::analysis::{threshold, tradeoff_curve, write_csv, write_json};
use bb84_eve::optimizer::{search, SearchConfig};
use bb84_eve::probe::build_optimal;
use bb84_eve::simulate::{run, ProtocolConfig, TranscriptSummary};
use bb84_eve::verify::{run_suite, Suite};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

/// Optimal individual-signal eavesdropping on BB84: curves, simulation,
/// optimization and self-checks.
#[derive(Parser)]
#[command(name = "bb84-eve", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Information–disturbance table for the optimal attack.
    Tradeoff {
        #[arg(long, default_value_t = 0.0)]
        d_min: f64,
        #[arg(long, default_value_t = 0.5)]
        d_max: f64,
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Monte Carlo run of the protocol.
    Simulate {
        #[arg(long, default_value_t = 0.1)]
        d: f64,
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Results depend on the worker count.
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, value_enum, default_value_t = OnOff::On)]
        attack: OnOff,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Put the wall time in the JSON instead of on standard error.
        #[arg(long)]
        timing: bool,
    },
    /// Numerical search for the best attack.
    Optimize {
        #[arg(long, default_value = "4", value_parser = ["2", "4"])]
        probe_dim: String,
        #[arg(long, default_value_t = 0.1)]
        d: f64,
        #[arg(long, default_value_t = 20)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
        /// Restrict the interaction and measurements to real amplitudes.
        #[arg(long)]
        real_amplitudes: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Put the wall time in the JSON instead of on standard error.
        #[arg(long)]
        timing: bool,
    },
    /// Run the self-check suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
    /// Optimal strategy for the given error rates as JSON.
    StrategyDump {
        #[arg(long)]
        dxy: f64,
        #[arg(long)]
        duv: f64,
        #[arg(long, value_enum, default_value_t = DumpFormat::Json)]
        format: DumpFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum DumpFormat {
    Json,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Bounds,
    Equality,
    Symmetry,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Bounds => Suite::Bounds,
            SuiteArg::Equality => Suite::Equality,
            SuiteArg::Symmetry => Suite::Symmetry,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    config: &'a ProtocolConfig,
    summary: TranscriptSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(e: impl ToString) -> Self {
        Self { code: EXIT_USAGE, message: e.to_string() }
    }
}

fn emit(out: Option<&PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(bytes).map_err(Failure::usage),
    }
}

fn json_bytes(v: &impl Serialize) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

fn report_wall(timing: bool, secs: f64) -> Option<f64> {
    if timing {
        Some(secs)
    } else {
        eprintln!("wall time {secs:.3} s");
        None
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Tradeoff { d_min, d_max, step, out, format } => {
            let rows = tradeoff_curve(d_min, d_max, step).map_err(Failure::usage)?;
            let mut buf = Vec::new();
            match format {
                TableFormat::Csv => write_csv(&rows, &mut buf),
                TableFormat::Json => write_json(&rows, &mut buf),
            }
            .map_err(Failure::usage)?;
            emit(out.as_ref(), &buf)?;
            let t = threshold();
            eprintln!(
                "threshold d* = {:.12} (bisection {:.12}, chsh root {:.12})",
                t.closed_form, t.bisection, t.chsh_root
            );
            Ok(())
        }
        Command::Simulate { d, n, seed, workers, attack, out, timing } => {
            let cfg = ProtocolConfig { n_signals: n, d, attack_enabled: attack == OnOff::On, seed, workers };
            let start = Instant::now();
            let summary = run(&cfg).map_err(Failure::usage)?;
            let wall_time_s = report_wall(timing, start.elapsed().as_secs_f64());
            emit(out.as_ref(), &json_bytes(&SimulateOutput { config: &cfg, summary, wall_time_s }))
        }
        Command::Optimize { probe_dim, d, restarts, seed, max_iters, real_amplitudes, out, timing } => {
            let cfg = SearchConfig {
                probe_dim: probe_dim.parse().expect("restricted to 2 or 4"),
                d_target: d,
                restarts,
                seed,
                max_iters,
                real_amplitudes,
                ..SearchConfig::default()
            };
            let start = Instant::now();
            let result = search(&cfg).map_err(Failure::usage)?;
            let wall = report_wall(timing, start.elapsed().as_secs_f64());
            let report = result.report(&cfg, wall);
            emit(out.as_ref(), &json_bytes(&report))?;
            if report.converged {
                Ok(())
            } else {
                Err(Failure { code: EXIT_NO_CONVERGENCE, message: "optimizer did not converge".into() })
            }
        }
        Command::Verify { suite } => {
            let report = run_suite(suite.into());
            println!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(Failure { code: EXIT_VERIFY, message: "verification failed".into() })
            }
        }
        Command::StrategyDump { dxy, duv, format: DumpFormat::Json, out } => {
            let strategy = build_optimal(dxy, duv).map_err(Failure::usage)?.optimal_strategy();
            let mut text = strategy.to_json();
            text.push('\n');
            emit(out.as_ref(), text.as_bytes())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
