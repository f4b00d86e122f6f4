//! `compgen` command-line front end.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;

use commands::cover::CoverArgs;
use commands::gen::GenArgs;
use commands::metrics::{IeArgs, IicgArgs, MrrArgs};
use commands::scaling::{FitArgs, ScalingArgs};
use commands::selfcheck::SelfcheckArgs;
use error::{CliError, CliResult};
use manifest::{Manifest, Run};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  2  usage error (unknown subcommand, bad or conflicting flags, bad config)
  3  data error (unreadable, malformed or inconsistent input, I/O failure)
  4  capacity error (pool too small, search ceiling reached)
  5  internal invariant violation (oracle mismatch, replay not identical)

Every run writes a manifest.json next to its outputs; `compgen replay
--manifest <file>` re-executes it and checks the outputs byte for byte.
Default output directory: $COMPGEN_OUT_DIR, else ./out.";

#[derive(Parser)]
#[command(name = "compgen", version, about = "Compositional task generation, k-coverage and data-scaling tools")]
#[command(after_help = EXIT_CODES)]
struct Cli {
    /// Worker threads [default: available parallelism]. Outputs do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// JSON file mirroring the subcommand's flags; flags given on the command line win
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate primitives, a training set and ID/OOD test sets
    Gen(GenArgs),
    /// k-coverage and k-cutoff of every test example (alias: cutoff)
    #[command(alias = "cutoff")]
    Cover(CoverArgs),
    /// Simulate n_req across vocabulary sizes and fit the exponent
    Scaling(ScalingArgs),
    /// Fit a power law to a scaling CSV
    Fit(FitArgs),
    /// Intra-inter cosine gap per tag slice of a vector file
    Iicg(IicgArgs),
    /// Indirect effect from clean / corrupted / patched probabilities
    Ie(IeArgs),
    /// Mean reciprocal rank of JSONL score rows
    Mrr(MrrArgs),
    /// Compare the coverage pipeline with the brute-force oracle
    Selfcheck(SelfcheckArgs),
    /// Re-run a command from its manifest and verify identical outputs
    Replay(ReplayArgs),
}

#[derive(clap::Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Compare without rewriting any file
    #[arg(long)]
    verify_only: bool,
}

fn execute(name: &str, config: &serde_json::Value) -> CliResult<Run> {
    fn parse<A: DeserializeOwned>(v: &serde_json::Value) -> CliResult<A> {
        serde_json::from_value(v.clone()).map_err(|e| CliError::data(format!("manifest config: {e}")))
    }
    match name {
        "gen" => commands::gen::run(&parse(config)?),
        "cover" => commands::cover::run(&parse(config)?),
        "scaling" => commands::scaling::run(&parse(config)?),
        "fit" => commands::scaling::fit(&parse(config)?),
        "iicg" => commands::metrics::iicg(&parse(config)?),
        "ie" => commands::metrics::ie(&parse(config)?),
        "mrr" => commands::metrics::mrr(&parse(config)?),
        "selfcheck" => commands::selfcheck::run(&parse(config)?),
        other => Err(CliError::data(format!("manifest names unknown command {other}"))),
    }
}

/// Resolves flags against the config file, runs, then writes outputs and
/// the manifest.
fn dispatch<A: Serialize + DeserializeOwned>(
    name: &str,
    flags: &A,
    config_file: Option<&std::path::Path>,
    resolve: impl FnOnce(A) -> CliResult<A>,
) -> CliResult<()> {
    let started = Instant::now();
    let resolved = resolve(config::merge(flags, config_file)?)?;
    let config = serde_json::to_value(&resolved)?;
    let run = execute(name, &config)?;
    let manifest = Manifest::build(name, config, &run, started)?;
    manifest::commit(&run, &manifest)?;
    println!("{}", run.report);
    match run.violation {
        Some(v) => Err(CliError::internal(v)),
        None => Ok(()),
    }
}

fn replay(args: &ReplayArgs) -> CliResult<()> {
    let started = Instant::now();
    let old = Manifest::load(&args.manifest)?;
    let changed = old.changed_inputs()?;
    if !changed.is_empty() {
        return Err(CliError::data(format!("inputs changed since the manifest was written: {changed:?}")));
    }
    let run = execute(&old.command, &old.config)?;
    let new = Manifest::build(&old.command, old.config.clone(), &run, started)?;
    let differing: Vec<_> = old
        .outputs
        .iter()
        .zip(&new.outputs)
        .filter(|(a, b)| a != b)
        .map(|(a, _)| a.path.display().to_string())
        .collect();
    if !args.verify_only {
        manifest::commit(&run, &new)?;
    }
    if old.outputs.len() != new.outputs.len() || !differing.is_empty() {
        return Err(CliError::internal(format!("replay of {} produced different outputs: {differing:?}", old.command)));
    }
    println!("{}\nreplay of {} matches {} recorded outputs", run.report, old.command, new.outputs.len());
    Ok(())
}

fn real_main() -> CliResult<()> {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => Ok(()),
                _ => Err(CliError::usage("invalid command line")),
            };
        }
    };
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::internal(e.to_string()))?;
    }
    let cfg = cli.config.as_deref();
    match &cli.command {
        Command::Gen(a) => dispatch("gen", a, cfg, GenArgs::resolve),
        Command::Cover(a) => dispatch("cover", a, cfg, CoverArgs::resolve),
        Command::Scaling(a) => dispatch("scaling", a, cfg, ScalingArgs::resolve),
        Command::Fit(a) => dispatch("fit", a, cfg, FitArgs::resolve),
        Command::Iicg(a) => dispatch("iicg", a, cfg, IicgArgs::resolve),
        Command::Ie(a) => dispatch("ie", a, cfg, IeArgs::resolve),
        Command::Mrr(a) => dispatch("mrr", a, cfg, MrrArgs::resolve),
        Command::Selfcheck(a) => dispatch("selfcheck", a, cfg, SelfcheckArgs::resolve),
        Command::Replay(a) => {
            if cfg.is_some() {
                return Err(CliError::usage("replay takes its configuration from the manifest"));
            }
            replay(a)
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
