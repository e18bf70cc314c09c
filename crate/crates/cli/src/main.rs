use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use dayahead::backtest::run_backtest_jobs;
use dayahead::ingest::{load_market, write_ingest_bundle};
use dayahead::report::{evaluate, write_profiles};
use dayahead::run::{read_manifest, read_run, write_run, RunConfig, CONFIG_FILE, MANIFEST_FILE};
use dayahead::synthetic::{export, generate, DgpConfig, SyntheticDgp};
use dayahead::{Error, Result};

#[derive(Parser)]
#[command(name = "dayahead", version, about = "Day-ahead electricity price forecasting backtests")]
struct Cli {
    /// Config file for the chosen subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a market manifest and write a normalized dataset bundle.
    Ingest,
    /// Generate a synthetic market from a DGP config (defaults when absent).
    Synth {
        /// Number of days; overrides the config.
        #[arg(long)]
        days: Option<usize>,
    },
    /// Run the rolling-window backtest described by a run config.
    Backtest,
    /// Score a run directory and write report tables.
    Evaluate {
        /// Run directory written by `backtest`.
        run: PathBuf,
    },
    /// Monthly, day-of-week and yearly profiles of a dataset or run.
    Plotdata {
        /// Market manifest or run directory.
        source: PathBuf,
    },
}

fn need_config(cli: &Cli) -> Result<&Path> {
    cli.config.as_deref().ok_or_else(|| Error::Config("--config is required for this command".into()))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn cmd_ingest(cli: &Cli) -> Result<()> {
    let manifest = need_config(cli)?;
    let (data, report) = load_market(manifest)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("ingest"));
    let normalized = write_ingest_bundle(&data, &report, &out)?;
    println!("market {}: {} days {}..{}", report.market, report.days, report.start, report.end);
    println!("panels: {}", report.panels.join(", "));
    for r in &report.repairs {
        if r.dst_dropped + r.dst_interpolated > 0 {
            println!("{}: dst dropped {} interpolated {}", r.panel, r.dst_dropped, r.dst_interpolated);
        }
    }
    let f = &report.fuel_fills;
    println!("fuel fills: co2 {} gas {} coal {}", f.co2, f.gas, f.coal);
    println!("solar zeros jittered: {}", report.solar_jittered);
    println!("normalized manifest: {}", normalized.display());
    Ok(())
}

fn cmd_synth(cli: &Cli, days: Option<usize>) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => DgpConfig::from_path(p)?,
        None => DgpConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = days {
        cfg.days = d;
    }
    let dgp = SyntheticDgp::from_config(&cfg)?;
    let data = generate(&dgp, cfg.days)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("synthetic"));
    let manifest = export(&dgp, &data, &out)?;
    println!("{} days {}..{} spectral radius {:.4}", data.len(), data.start(), data.end(), dgp.radius());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn cmd_backtest(cli: &Cli) -> Result<()> {
    let path = need_config(cli)?;
    let mut cfg = RunConfig::from_path(path)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let base = base_dir(path);
    let market = base.join(&cfg.market);
    let out = cli.out.clone().unwrap_or_else(|| base.join(&cfg.out));
    let (data, _) = load_market(&market)?;
    let result = run_backtest_jobs(&data, &cfg.plan(), cli.jobs)?;
    let market_abs = std::fs::canonicalize(&market).map_err(|e| Error::io(&market, e))?;
    let manifest = write_run(&out, &cfg, &market_abs, &data, &result)?;
    for m in &manifest.models {
        println!("{}: {} records", m.id, m.records);
    }
    println!("config hash {}", manifest.config_hash);
    println!("run directory: {}", out.display());
    Ok(())
}

fn cmd_evaluate(cli: &Cli, run: &Path) -> Result<()> {
    let (cfg, models) = read_run(run)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let report = evaluate(&models, &cfg.metrics, seed)?;
    let out = cli.out.clone().unwrap_or_else(|| run.join("report"));
    let files = report.write(&out)?;
    println!("{} observations, {} models, alpha {}", report.observations, models.len(), report.alpha);
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}

fn cmd_plotdata(cli: &Cli, source: &Path) -> Result<()> {
    let manifest = if source.is_dir() {
        if source.join(MANIFEST_FILE).exists() {
            read_manifest(source)?.market_manifest
        } else if source.join(CONFIG_FILE).exists() {
            return Err(Error::Config(format!("{} has no {MANIFEST_FILE}", source.display())));
        } else {
            source.join("manifest.toml")
        }
    } else {
        source.to_path_buf()
    };
    let (data, _) = load_market(&manifest)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("plotdata"));
    for f in write_profiles(&data, &out)? {
        println!("{}", out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Ingest => cmd_ingest(&cli),
        Command::Synth { days } => cmd_synth(&cli, *days),
        Command::Backtest => cmd_backtest(&cli),
        Command::Evaluate { run } => cmd_evaluate(&cli, run),
        Command::Plotdata { source } => cmd_plotdata(&cli, source),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
