use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dfris_cli::sweep::{run_sweep, summarize, write_rows_csv, write_summary_csv};
use dfris_cli::trace::{dump_channels, emit_convergence_trace};
use dfris_cli::{load_config, ScenarioConfig};

/// Sum-rate optimization for a dual-functional RIS downlink.
#[derive(Debug, Parser)]
#[command(name = "dfris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo sweep over the `[sweep]` parameter.
    Sweep(SweepArgs),
    /// Per-iteration sum rate of one seeded realization.
    Trace(TraceArgs),
    /// Check a scenario file and print what it describes.
    Validate(ConfigArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Scenario file (TOML); the reference scenario when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `base_seed`.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ConfigArgs,
    /// Per-trial CSV.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Per-value mean and standard error; defaults to `<out stem>.summary.csv`.
    #[arg(long, value_name = "PATH")]
    summary: Option<PathBuf>,
    /// Overrides `trials`.
    #[arg(long, value_name = "N")]
    trials: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Add a wall-time column (output is then no longer reproducible byte for byte).
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[command(flatten)]
    common: ConfigArgs,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Also write the channel realization in plain text.
    #[arg(long, value_name = "PATH")]
    dump_channels: Option<PathBuf>,
}

fn load(args: &ConfigArgs) -> Result<ScenarioConfig> {
    let mut config = match &args.config {
        Some(path) => load_config(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    Ok(config)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("sweep".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.summary.csv"))
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut config = load(&args.common)?;
    if let Some(trials) = args.trials {
        if trials == 0 {
            bail!("--trials must be at least 1");
        }
        config.trials = trials;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = args.threads {
        if threads == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(threads);
    }
    let pool = pool.build().context("cannot build thread pool")?;
    let rows = pool.install(|| run_sweep(&config))?;

    write_rows_csv(&rows, args.timing, create(&args.out)?)?;
    let summary = summarize(&rows);
    let summary_out = args.summary.unwrap_or_else(|| summary_path(&args.out));
    write_summary_csv(&summary, create(&summary_out)?)?;

    for s in &summary {
        let label = if s.value.is_empty() { String::new() } else { format!("{} = {}: ", s.parameter, s.value) };
        println!(
            "{label}{:.4} +/- {:.4} bit/s/Hz over {} trials ({} failed)",
            s.mean_sum_rate,
            s.stderr_sum_rate,
            s.trials - s.failed,
            s.failed
        );
    }
    let failed: usize = summary.iter().map(|s| s.failed).sum();
    if failed > 0 {
        eprintln!("warning: {failed} trial(s) failed; see the error column of {}", args.out.display());
    }
    Ok(())
}

fn trace(args: TraceArgs) -> Result<()> {
    let config = load(&args.common)?;
    let seed = config.base_seed;
    if let Some(path) = &args.dump_channels {
        dump_channels(&config, seed, create(path)?)?;
    }
    let outcome = emit_convergence_trace(&config, seed, create(&args.out)?)?;
    println!(
        "seed {seed}: {:.4} bit/s/Hz after {} iterations ({})",
        outcome.sum_rate,
        outcome.iterations,
        if outcome.converged { "converged" } else { "iteration cap reached" }
    );
    Ok(())
}

fn validate(args: ConfigArgs) -> Result<()> {
    let config = load(&args)?;
    println!(
        "N = {}, K = {}, M = {}, P_T = {} dBm, beta = {} dB, bits = {}",
        config.n_antennas,
        config.n_users,
        config.n_elements,
        config.p_t_dbm,
        config.beta_db,
        config.bits.resolution()
    );
    match &config.sweep {
        Some(s) => {
            let values: Vec<String> = s.values.iter().map(|v| v.to_string()).collect();
            println!("sweep {} over [{}], {} trials each", s.parameter.name(), values.join(", "), config.trials)
        }
        None => println!("no sweep, {} trials", config.trials),
    }
    println!("base seed {}", config.base_seed);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Trace(a) => trace(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
