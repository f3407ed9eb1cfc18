use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stap_bench::compare::compare_dirs;
use stap_bench::config::{apply_overrides, bundled, ExperimentConfig, Method, BUNDLED};
use stap_bench::emit::write_artifacts;
use stap_bench::experiment::run_experiment;
use stap_bench::{exit, BenchError};

#[derive(Parser)]
#[command(name = "stap-bench", version, about = "Gridless STAP clutter suppression experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment described by a config file.
    Run {
        /// Config path, or the name of a bundled config (e.g. psi45).
        config: String,
        /// Number of Monte Carlo runs.
        #[arg(long)]
        runs: Option<usize>,
        /// Comma-separated methods: optimal,smi,focuss,anm,ram.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Base seed; run r uses seed + r.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Suppress per-run progress.
        #[arg(long, short)]
        quiet: bool,
    },
    /// Compare the CSV outputs of two runs.
    Compare {
        left: PathBuf,
        right: PathBuf,
        /// Relative tolerance on numeric cells.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Print a fully resolved config. Without an argument, lists the bundled configs.
    ShowConfig { config: Option<String> },
}

fn load(spec: &str) -> Result<ExperimentConfig, BenchError> {
    let path = Path::new(spec);
    if path.exists() {
        return ExperimentConfig::load(path);
    }
    let name = if spec.ends_with(".cfg") { spec.to_string() } else { format!("{spec}.cfg") };
    match bundled(&name) {
        Some(text) => ExperimentConfig::parse(text, &name),
        None => Err(BenchError::Io(format!("{spec}: no such file or bundled config"))),
    }
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, BenchError> {
    names
        .iter()
        .map(|n| {
            Method::parse(n.trim()).ok_or_else(|| BenchError::Config(format!("--methods: unknown method `{n}`")))
        })
        .collect()
}

fn run(
    spec: &str,
    runs: Option<usize>,
    methods: Option<Vec<String>>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    quiet: bool,
) -> Result<i32, BenchError> {
    let methods = methods.map(|m| parse_methods(&m)).transpose()?;
    let config = apply_overrides(load(spec)?, runs, methods.as_deref(), seed, out.as_deref())?;
    let total = config.experiment.monte_carlo_runs;
    let outcome = run_experiment(&config, |record| {
        if quiet {
            return;
        }
        let parts: Vec<String> = record
            .outputs
            .iter()
            .map(|(m, o)| match o {
                Ok(o) => format!("{m} {:.2}s", o.seconds),
                Err(e) => format!("{m} FAILED ({e})"),
            })
            .collect();
        eprintln!("run {}/{} seed {}: {}", record.run + 1, total, record.seed, parts.join(", "));
    })?;
    let dir = &config.experiment.output_dir;
    let manifest = write_artifacts(&outcome, dir)?;
    for m in &manifest.methods {
        println!(
            "{:8} mean loss outside notch {:8.3} dB  ({} ok, {} failed)",
            m.method, m.mean_loss_outside_notch_db, m.successful_runs, m.failed_runs
        );
    }
    println!("wrote {} files to {}", manifest.files.len() + 1, dir.display());
    Ok(if outcome.has_failures() { exit::PARTIAL } else { exit::OK })
}

fn dispatch(cli: Cli) -> Result<i32, BenchError> {
    match cli.command {
        Command::Run { config, runs, methods, seed, out, quiet } => run(&config, runs, methods, seed, out, quiet),
        Command::Compare { left, right, tol } => {
            let diffs = compare_dirs(&left, &right, tol)?;
            for d in &diffs {
                println!("{d}");
            }
            if diffs.is_empty() {
                println!("no differences");
                Ok(exit::OK)
            } else {
                Ok(exit::PARTIAL)
            }
        }
        Command::ShowConfig { config: Some(spec) } => {
            print!("{}", load(&spec)?.to_toml());
            Ok(exit::OK)
        }
        Command::ShowConfig { config: None } => {
            for (name, _) in BUNDLED {
                println!("{}", name.trim_end_matches(".cfg"));
            }
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
