//! Command-line front end: configure, run, analyze, and batch-verify
//! simulations.

use vote_diffuse_cli::{config, verify};

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vote_diffuse::{
    conservation_audit, spread_series_csv, topk_certificate, trace_io, verify_component_consensus,
    Error, PolicySummary, StopReason,
};

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_VERIFY_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "vote-diffuse", version, about = "Pairwise opinion-averaging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file and write its trace.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a recorded trace: consensus classes, component checks,
    /// conservation, and (for top-k traces) the ranking certificate.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long = "min-count", default_value_t = 10)]
        min_count: u64,
        /// Directory for the CSV reports.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named verification suite over a seed sweep.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { config, seed, out } => cmd_simulate(&config, seed, &out),
        Command::Analyze { trace, tol, min_count, out } => cmd_analyze(&trace, tol, min_count, &out),
        Command::Verify { suite, seeds } => return cmd_verify(&suite, seeds),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_VALIDATION,
            })
        }
    }
}

fn cmd_simulate(
    config_path: &std::path::Path,
    seed: Option<u64>,
    out: &std::path::Path,
) -> Result<(), Error> {
    let config = config::load(config_path, seed)?;
    let trace = vote_diffuse::run(&config)?;
    trace_io::save_trace(&trace, out)?;
    let reason = match trace.stop_reason {
        StopReason::Converged => "converged",
        StopReason::MaxSteps => "max_steps",
        StopReason::ScheduleExhausted => "schedule_exhausted",
    };
    println!("stop_reason: {reason}");
    println!("steps: {}", trace.stopped_at);
    println!("conservation_drift: {:e}", conservation_audit(&trace));
    println!("trace: {}", out.display());
    Ok(())
}

fn cmd_analyze(
    trace_path: &std::path::Path,
    tol: f64,
    min_count: u64,
    out: &std::path::Path,
) -> Result<(), Error> {
    let trace = trace_io::load_trace(trace_path)?;
    fs::create_dir_all(out)?;

    let consensus = vote_diffuse::consensus_report(&trace.final_profile, tol);
    fs::write(out.join("consensus.csv"), consensus.to_csv())?;

    let components = verify_component_consensus(&trace, tol, min_count);
    fs::write(out.join("components.csv"), components.to_csv())?;

    fs::write(out.join("spread.csv"), spread_series_csv(&trace))?;

    let drift = conservation_audit(&trace);
    println!("conservation_drift: {drift:e}");
    println!(
        "component_consensus: {}",
        if components.pass() { "PASS" } else { "FAIL" }
    );
    for check in components.failures() {
        println!(
            "  FAIL candidate {} component {:?} spread {:e}",
            check.candidate + 1,
            check.agents.iter().map(|a| a + 1).collect::<Vec<_>>(),
            check.spread
        );
    }

    if matches!(trace.policy, PolicySummary::TopK { .. }) {
        let cert = topk_certificate(&trace, tol, min_count)?;
        let mut text = String::new();
        text.push_str(&format!("applicable: {}\n", cert.applicable));
        text.push_str(&format!("k: {}\n", cert.k));
        text.push_str(&format!("k_prime: {}\n", cert.k_prime));
        match cert.alpha_hat {
            Some(a) => text.push_str(&format!("alpha_hat: {a:e}\n")),
            None => text.push_str("alpha_hat: none\n"),
        }
        text.push_str(&format!(
            "aggregate_ranking: {}\n",
            cert.aggregate_ranking.iter().map(|j| (j + 1).to_string()).collect::<Vec<_>>().join(" ")
        ));
        text.push_str(&format!(
            "consensual_candidates: {}\n",
            cert.consensual_candidates
                .iter()
                .map(|j| (j + 1).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
        if let Some(diag) = &cert.diagnostic {
            text.push_str(&format!("diagnostic: {diag}\n"));
        }
        fs::write(out.join("certificate.txt"), &text)?;
        println!("topk_certificate: k_prime = {}", cert.k_prime);
    }

    println!("reports: {}", out.display());
    Ok(())
}

fn cmd_verify(suite: &str, seeds: u64) -> ExitCode {
    let outcome = match verify::run_suite(suite, seeds) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    println!(
        "suite {}: {} over {} seeds (worst figure {:e})",
        outcome.suite,
        if outcome.pass() { "PASS" } else { "FAIL" },
        outcome.seeds,
        outcome.worst
    );
    for (seed, msg) in &outcome.failures {
        println!("  seed {seed}: {msg}");
    }
    if outcome.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY_FAILED)
    }
}
