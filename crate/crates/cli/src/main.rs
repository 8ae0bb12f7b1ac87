use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use courtside::experiment::{self, ExperimentConfig, ExperimentError, SweepGrid};

/// Build match features, train the classifier and write evaluation reports.
///
/// Settings are resolved as defaults, then the `--config` file, then flags.
#[derive(Debug, Parser)]
#[command(name = "courtside", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Match CSV to load.
    #[arg(long)]
    data: Option<String>,
    /// Franchise aliases: `none`, `nba` or a two-column CSV.
    #[arg(long)]
    aliases: Option<String>,
    /// Use a synthetic league, optionally as `teams=4,seasons=3,...`.
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    synth: Option<String>,
    /// elo, diff or four_factors.
    #[arg(long)]
    feature_family: Option<String>,
    /// historical or dynamic.
    #[arg(long)]
    periodicity: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    court_split: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    regression_pct: Option<String>,
    #[arg(long)]
    home_advantage: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    folds: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Grid file (`regression_pct = 0, 0.5, 1` etc.); runs a sweep.
    #[arg(long)]
    sweep: Option<PathBuf>,
    /// Sweep worker pool size.
    #[arg(long)]
    workers: Option<String>,
    /// Any configuration key, e.g. `--set epochs=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_path(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(spec) = &cli.synth {
        cfg.set("data", "synth")?;
        for pair in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                ExperimentError::Config(format!("--synth: expected key=value, got {pair:?}"))
            })?;
            cfg.set(&format!("synth.{}", k.trim()), v.trim())?;
        }
    }
    let flags = [
        ("data", &cli.data),
        ("aliases", &cli.aliases),
        ("feature_family", &cli.feature_family),
        ("periodicity", &cli.periodicity),
        ("court_split", &cli.court_split),
        ("depth", &cli.depth),
        ("regression_pct", &cli.regression_pct),
        ("home_advantage", &cli.home_advantage),
        ("k", &cli.k),
        ("folds", &cli.folds),
        ("seed", &cli.seed),
        ("out", &cli.out),
        ("workers", &cli.workers),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    for o in &cli.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| {
            ExperimentError::Config(format!("--set: expected KEY=VALUE, got {o:?}"))
        })?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(grid) = &cli.sweep {
        cfg.sweep = SweepGrid::from_path(grid)?;
        if cfg.sweep.is_empty() {
            return Err(ExperimentError::Config(format!(
                "grid file {} lists no values",
                grid.display()
            )));
        }
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<String, ExperimentError> {
    let cfg = resolve(cli)?;
    let mut msg = String::new();
    if cfg.sweep.is_empty() {
        let outcome = experiment::run(&cfg)?;
        let r = &outcome.report;
        let _ = writeln!(
            msg,
            "{}: auc {:.4}, accuracy {:.4}, threshold {:.4}",
            r.mode, r.auc_mean, r.accuracy_mean, r.threshold_mean
        );
        if let Some(b) = outcome.bayes_accuracy {
            let _ = writeln!(msg, "generator bayes-optimal accuracy {b:.4}");
        }
        let _ = writeln!(msg, "report written to {}", outcome.out.display());
    } else {
        let points = experiment::sweep(&cfg)?;
        let failed = points.iter().filter(|p| p.result.is_err()).count();
        if let Some(best) = points.first().filter(|p| p.result.is_ok()) {
            let r = best.result.as_ref().expect("checked");
            let _ = writeln!(
                msg,
                "best of {} points: point_{:03} (regression_pct {}, home_advantage {}, k {}, depth {}): auc {:.4}, accuracy {:.4}",
                points.len(),
                best.index,
                best.regression_pct,
                best.home_advantage,
                best.k,
                best.depth,
                r.auc_mean,
                r.accuracy_mean
            );
        }
        if failed > 0 {
            let _ = writeln!(msg, "{failed} point(s) failed; see results.csv");
        }
        let _ = writeln!(
            msg,
            "results written to {}",
            cfg.out.join("results.csv").display()
        );
    }
    Ok(msg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(msg) => {
            // A closed stdout (e.g. piped into `head`) is not an error.
            let _ = std::io::stdout().lock().write_all(msg.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
