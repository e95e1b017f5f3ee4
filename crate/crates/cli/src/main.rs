mod args;
mod commands;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use coxnet::{Error, ErrorKind, Result};

use args::{expand_config, Cli, Command};
use manifest::{digest_inputs, digest_outputs, differing_outputs, now_ms, RunManifest, MANIFEST_FILE};

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Io => 3,
        ErrorKind::Validation => 4,
        ErrorKind::Numerical => 5,
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    match run(&argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn parse(resolved: &[String]) -> Cli {
    let mut full = vec!["coxnet".to_string()];
    full.extend_from_slice(resolved);
    // Usage errors exit with clap's code 2; --help and --version with 0.
    Cli::try_parse_from(full).unwrap_or_else(|e| e.exit())
}

fn run(argv: &[String]) -> Result<()> {
    let (resolved, config) = expand_config(argv)?;
    let cli = parse(&resolved);
    env_logger::Builder::new()
        .filter_level(if cli.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .parse_default_env()
        .init();

    if let Command::Replay(r) = &cli.command {
        return replay(&r.manifest, r.out_dir.as_deref());
    }
    execute(&cli.command, argv, &resolved, config)?;
    Ok(())
}

fn common(command: &Command) -> &args::Common {
    match command {
        Command::Generate(a) => &a.common,
        Command::Describe(a) => &a.common,
        Command::FitLinear(a) => &a.common,
        Command::Rank(a) => &a.common,
        Command::Search(a) => &a.common,
        Command::Evaluate(a) => &a.common,
        Command::Replay(_) => unreachable!("replay has no common flags"),
    }
}

/// Runs one analysis command and writes its manifest.
fn execute(
    command: &Command,
    argv: &[String],
    resolved: &[String],
    config: Option<PathBuf>,
) -> Result<RunManifest> {
    let common = common(command);
    if common.jobs == 0 {
        return Err(Error::invalid("--jobs must be at least 1"));
    }
    // Ignore the error if a pool already exists (replay re-enters here).
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build_global();
    let out_dir = &common.out_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let started = now_ms();
    let outcome = commands::dispatch(command)?;
    let finished = now_ms();

    let mut inputs = outcome.inputs;
    inputs.extend(config);
    let cwd = std::env::current_dir().map_err(|e| Error::io(".", e))?;
    let manifest = RunManifest {
        tool: "coxnet".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        argv: argv.to_vec(),
        resolved_args: resolved.to_vec(),
        config: serde_json::to_value(command).map_err(|e| Error::invalid(e.to_string()))?,
        seed: outcome.seed,
        working_directory: cwd,
        inputs: digest_inputs(&inputs)?,
        outputs: digest_outputs(out_dir)?,
        started_unix_ms: started,
        finished_unix_ms: finished,
        timing: outcome.timing,
    };
    manifest.write(out_dir)?;
    log::info!("wrote {}", out_dir.join(MANIFEST_FILE).display());
    Ok(manifest)
}

fn replay(manifest_path: &Path, out_dir: Option<&Path>) -> Result<()> {
    let recorded = RunManifest::read(manifest_path)?;
    recorded.check_inputs()?;
    let mut resolved = recorded.resolved_args.clone();
    if let Some(dir) = out_dir {
        let dir = std::path::absolute(dir).map_err(|e| Error::io(dir, e))?;
        resolved.push("--out-dir".into());
        resolved.push(dir.display().to_string());
    }
    std::env::set_current_dir(&recorded.working_directory)
        .map_err(|e| Error::io(&recorded.working_directory, e))?;
    let (expanded, config) = expand_config(&resolved)?;
    let cli = parse(&expanded);
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::invalid("a replay manifest cannot itself be replayed"));
    }
    let fresh = execute(&cli.command, &recorded.argv, &expanded, config)?;
    let diff = differing_outputs(&recorded.outputs, &fresh.outputs);
    if diff.is_empty() {
        println!("replay reproduced {} output files", fresh.outputs.len());
        Ok(())
    } else {
        Err(Error::invalid(format!("replay outputs differ: {}", diff.join(", "))))
    }
}
