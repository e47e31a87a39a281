//! Command-line runner for the privacy-pricing game simulator.
//!
//! Subcommands: `run` plays one simulation and writes its trace and
//! summary, `compare` sweeps the learning schemes over an identical
//! owner population, `verify-ne` computes an exploitability certificate
//! for a finished run, and `print-config` shows the fully resolved
//! configuration.
//!
//! Exit codes: 0 on success, 1 for configuration errors, 2 for runtime
//! errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ppgame::compare::compare_schemes;
use ppgame::config::{load_config, ConfigError, GameConfig, RunManifest, Scheme};
use ppgame::engine::Engine;
use ppgame::ne_verifier::exploitability_of_snapshot;
use ppgame::trace::write_trace;

#[derive(Parser)]
#[command(name = "ppgame", version, about = "Privacy-pricing game simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play one simulation and write trace, summary, snapshot, and
    /// manifest files.
    Run(RunArgs),
    /// Run every requested scheme on the identical owner population and
    /// summarize each run.
    Compare(RunArgs),
    /// Compute the best-response exploitability certificate for a
    /// finished run directory.
    VerifyNe(VerifyArgs),
    /// Print the fully resolved configuration as TOML.
    PrintConfig(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file; unset keys take built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration budget override.
    #[arg(long)]
    iterations: Option<u64>,
    /// Scheme override (wolf-phc, q-learning, greedy); applies to both
    /// sides. `compare` accepts it repeatedly to select the sweep.
    #[arg(long)]
    scheme: Vec<Scheme>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run directory holding resolved_config.toml and snapshot.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

enum CliError {
    /// Invalid configuration or command line; exit code 1.
    Config(String),
    /// Failure while simulating or writing outputs; exit code 2.
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Compare(args) => cmd_compare(args),
        Command::VerifyNe(args) => cmd_verify_ne(args),
        Command::PrintConfig(args) => cmd_print_config(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Loads the configuration file (or defaults) and applies command-line
/// overrides. The scheme override, when present, sets both sides.
fn resolve_config(args: &ConfigArgs) -> Result<GameConfig, CliError> {
    if args.scheme.len() > 1 {
        return Err(CliError::Config(
            "at most one --scheme override is accepted here; \
             repeated --scheme is only meaningful for `compare`"
                .into(),
        ));
    }
    resolve_config_multi(args)
}

/// Like [`resolve_config`] but leaves repeated `--scheme` flags to the
/// caller (the `compare` sweep).
fn resolve_config_multi(args: &ConfigArgs) -> Result<GameConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => GameConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(iterations) = args.iterations {
        config.max_iterations = iterations;
    }
    if let Some(&scheme) = args.scheme.first() {
        config.do_scheme = scheme;
        config.curator_scheme = scheme;
    }
    config.validate()?;
    Ok(config)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

fn record_output(manifest: &mut RunManifest, path: &Path) {
    manifest.output_paths.push(path.display().to_string());
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let config = resolve_config(&args.config)?;
    std::fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new(&config);

    let mut engine = Engine::new(config).map_err(CliError::from)?;
    let (records, summary) = engine.run();

    let trace_path = args.out.join("trace.csv");
    write_trace(
        &records,
        engine.profiles(),
        &engine.config().grids,
        &trace_path,
    )
    .map_err(runtime)?;
    record_output(&mut manifest, &trace_path);

    let summary_path = args.out.join("summary.json");
    write_json(&summary_path, &summary)?;
    record_output(&mut manifest, &summary_path);

    let snapshot_path = args.out.join("snapshot.json");
    write_json(&snapshot_path, &engine.snapshot())?;
    record_output(&mut manifest, &snapshot_path);

    let config_path = args.out.join("resolved_config.toml");
    std::fs::write(&config_path, engine.config().to_toml())?;
    record_output(&mut manifest, &config_path);

    manifest.finish();
    write_json(&args.out.join("manifest.json"), &manifest)?;

    println!(
        "ran {} iterations ({}): mean saved noise {:.4}, mean payment {:.4}, converged {}",
        summary.iterations_run,
        engine.config().do_scheme.name(),
        summary.converged_mean_delta_sigma,
        summary.converged_mean_price,
        summary.converged
    );
    println!("outputs in {}", args.out.display());
    Ok(())
}

fn cmd_compare(args: RunArgs) -> Result<(), CliError> {
    let config = resolve_config_multi(&args.config)?;
    let schemes: Vec<Scheme> = if args.config.scheme.is_empty() {
        Scheme::ALL.to_vec()
    } else {
        args.config.scheme.clone()
    };
    std::fs::create_dir_all(&args.out)?;
    let mut manifest = RunManifest::new(&config);

    let runs = compare_schemes(&config, &schemes).map_err(CliError::from)?;
    let profiles = {
        // Identical population across schemes; rebuild it once for the
        // trace writer.
        ppgame::engine::sample_population(&config)
    };
    let mut results = Vec::with_capacity(runs.len());
    for (result, records) in &runs {
        let trace_path = args.out.join(format!("trace-{}.csv", result.scheme.name()));
        write_trace(records, &profiles, &config.grids, &trace_path).map_err(runtime)?;
        record_output(&mut manifest, &trace_path);
        println!(
            "{:10} converged {:5} at {:6} iterations, mean saved noise {:.4}, mean payment {:.4}",
            result.scheme.name(),
            result.converged,
            result.iterations_to_convergence,
            result.converged_mean_delta_sigma,
            result.converged_mean_price
        );
        results.push(result.clone());
    }

    let compare_path = args.out.join("compare.json");
    write_json(&compare_path, &results)?;
    record_output(&mut manifest, &compare_path);

    let config_path = args.out.join("resolved_config.toml");
    std::fs::write(&config_path, config.to_toml())?;
    record_output(&mut manifest, &config_path);

    manifest.finish();
    write_json(&args.out.join("manifest.json"), &manifest)?;
    println!("outputs in {}", args.out.display());
    Ok(())
}

fn cmd_verify_ne(args: VerifyArgs) -> Result<(), CliError> {
    let config_path = args.out.join("resolved_config.toml");
    let config_text = std::fs::read_to_string(&config_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", config_path.display())))?;
    let config = GameConfig::from_resolved_toml(&config_text)?;

    let snapshot_path = args.out.join("snapshot.json");
    let snapshot_text = std::fs::read_to_string(&snapshot_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", snapshot_path.display())))?;
    let snapshot: ppgame::engine::RunSnapshot =
        serde_json::from_str(&snapshot_text).map_err(runtime)?;

    if snapshot.config_hash != config.hash() {
        return Err(CliError::Runtime(format!(
            "snapshot was produced by config {} but the directory holds config {}",
            snapshot.config_hash,
            config.hash()
        )));
    }

    let report = exploitability_of_snapshot(&snapshot, config.grids, config.econ, config.loss)
        .map_err(runtime)?;
    write_json(&args.out.join("ne_report.json"), &report)?;

    let verdict = if report.epsilon <= config.ne_epsilon {
        "within"
    } else {
        "outside"
    };
    println!(
        "exploitability epsilon {:.6} ({verdict} the configured tolerance {})",
        report.epsilon, config.ne_epsilon
    );
    println!("report in {}", args.out.join("ne_report.json").display());
    Ok(())
}

fn cmd_print_config(args: ConfigArgs) -> Result<(), CliError> {
    let config = resolve_config(&args)?;
    print!("{}", config.to_toml());
    Ok(())
}
