use std::path::PathBuf;
use std::process::ExitCode;

use anonq::adversary::{MaliciousAgentPolicy, SourceStrategy};
use anonq::experiment::{parse_config, run_experiment, summarize, ExperimentResult, OneOrMany, SpecFile};
use anonq::orchestrator::{run_protocol5, ProtocolConfig};
use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "ANONQ_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "results";

#[derive(Parser)]
#[command(name = "anonq", version, about = "Seeded experiments for anonymous quantum message transmission")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write CSV and JSON results.
    Run(RunArgs),
    /// Print a JSON result file as a table; exits 1 if any row fails.
    Summarize {
        /// JSON summary written by `run`.
        file: PathBuf,
    },
    /// Re-execute one protocol run from its seed and write the transcript as JSON lines.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// theorem1, guess_bound, soundness, ae_fidelity, classical_probs or full_run.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    #[arg(long = "S", value_delimiter = ',')]
    s: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    delta: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    fidelity: Option<Vec<f64>>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: $ANONQ_OUT_DIR, then ./results].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    n: usize,
    /// Honest agents 1..=k; the rest run a bounded source and accept every verification.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long = "S")]
    s: usize,
    #[arg(long, default_value_t = 0.6)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    seed: u64,
    /// Transcript destination; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare the transcript with this file byte for byte.
    #[arg(long)]
    check: Option<PathBuf>,
}

fn many<T>(v: Option<Vec<T>>) -> Option<OneOrMany<T>> {
    v.map(OneOrMany::Many)
}

fn run(args: RunArgs) -> anyhow::Result<bool> {
    let flags = SpecFile {
        experiment: args.experiment,
        n: many(args.n),
        k: many(args.k),
        s: many(args.s),
        epsilon: many(args.epsilon),
        delta: many(args.delta),
        fidelity: many(args.fidelity),
        states: args.states,
        trials: args.trials,
        seed: args.seed,
        out: args.out,
    };
    let mut spec = parse_config(args.config.as_deref(), flags)?;
    if spec.out.is_none() {
        spec.out = Some(std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), PathBuf::from));
    }
    let result = run_experiment(&spec)?;
    let summary = summarize(&result.rows)?;
    print!("{}", summary.text);
    let dir = spec.out.as_ref().expect("set above");
    let stem = spec.experiment.name();
    println!(
        "wrote {} and {} in {:.1?}",
        dir.join(format!("{stem}.csv")).display(),
        dir.join(format!("{stem}.json")).display(),
        result.duration
    );
    Ok(summary.all_pass)
}

fn replay(args: ReplayArgs) -> anyhow::Result<bool> {
    let mut cfg = ProtocolConfig::honest(args.n, args.s, args.epsilon, args.delta, args.seed);
    if let Some(k) = args.k {
        if k == 0 || k > args.n {
            bail!("k = {k} outside 1..={}", args.n);
        }
        cfg.honest = (1..=k).collect();
        if k < args.n {
            cfg.source = SourceStrategy::BoundedFidelity { target_fprime: cfg.fprime_threshold() };
            cfg.malicious_policy = MaliciousAgentPolicy::worst_case_verifier();
        }
    }
    cfg.record_transcript = true;
    let run = run_protocol5(&cfg)?;
    let text = run.transcript.as_ref().expect("recording was requested").to_jsonl();
    match &args.out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    eprintln!(
        "termination: {:?}, rounds: {}, C_eps: {}",
        run.termination,
        run.rounds.len(),
        run.c_epsilon()
    );
    if let Some(path) = &args.check {
        let expected = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        if expected != text.as_bytes() {
            eprintln!("transcript differs from {}", path.display());
            return Ok(false);
        }
        eprintln!("transcript matches {}", path.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Summarize { file } => ExperimentResult::read_json(&file)
            .with_context(|| format!("reading {}", file.display()))
            .and_then(|r| Ok(summarize(&r.rows)?))
            .map(|s| {
                print!("{}", s.text);
                s.all_pass
            }),
        Command::Replay(args) => replay(args),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
