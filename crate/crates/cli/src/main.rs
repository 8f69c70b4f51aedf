use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use distshor_cli::{run, ModeArg, Outcome, RunConfig};

/// Factor a small integer with a simulated (optionally distributed) Shor circuit.
#[derive(Debug, Parser)]
#[command(name = "distshor", version)]
struct Args {
    /// Odd composite to factor.
    #[arg(long = "N", value_name = "N")]
    modulus: u64,
    /// Fixed base coprime to N; drawn at random when omitted.
    #[arg(long)]
    a: Option<u64>,
    /// Counting-register width (default 2n).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Monolithic)]
    mode: ModeArg,
    /// Phase-estimation rounds per base (default 8⌈log₂log₂N⌉ + 8).
    #[arg(long)]
    max_rounds: Option<usize>,
    /// Write the phase-estimation circuit, one gate per line.
    #[arg(long, value_name = "PATH")]
    dump_circuit: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Only build the circuits and report gate and communication counts.
    #[arg(long)]
    counts_only: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = RunConfig {
        modulus: args.modulus,
        a: args.a,
        m: args.m,
        mode: args.mode,
        seed: args.seed,
        max_rounds: args.max_rounds,
        dump_circuit: args.dump_circuit,
        report: args.report.clone(),
        counts_only: args.counts_only,
    };
    match run(&config) {
        Ok(out) => {
            if args.report.is_none() {
                println!("{}", out.report.to_json());
            }
            match &out.report.outcome {
                Outcome::Factors([p, q]) => eprintln!("{} = {p} × {q}", config.modulus),
                Outcome::Failure(f) => eprintln!("no factors: {f}"),
                Outcome::CountsOnly => {}
            }
            ExitCode::from(out.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
