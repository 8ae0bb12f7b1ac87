//! Configured runs and parameter sweeps that write report directories.

mod config;

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{self, normalize_franchises, write_matches, DataError, Dataset, FranchiseMap};
use crate::elo;
use crate::eval::{cross_validate_matrix, write_report, CvOptions, EvalError, EvalReport};
use crate::features::{build_feature_matrix, FeatureError, FeatureFamily};
use crate::synth::{self, SynthError};

pub use config::{Aliases, Architecture, DataSource, ExperimentConfig, SplitKind, SweepGrid};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl ExperimentError {
    /// 1 for configuration, 2 for data validation, 3 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Data(_) => 2,
            ExperimentError::Runtime(_) => 3,
        }
    }
}

impl From<DataError> for ExperimentError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InvalidSplit(_) | DataError::OverlappingSeasons(_) => ExperimentError::Config(e.to_string()),
            _ => ExperimentError::Data(e.to_string()),
        }
    }
}

impl From<SynthError> for ExperimentError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Data(d) => d.into(),
            other => ExperimentError::Config(other.to_string()),
        }
    }
}

impl From<FeatureError> for ExperimentError {
    fn from(e: FeatureError) -> Self {
        ExperimentError::Config(e.to_string())
    }
}

impl From<EvalError> for ExperimentError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Data(d) => d.into(),
            EvalError::Feature(f) => f.into(),
            other => ExperimentError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Runtime(e.to_string())
    }
}

/// A loaded dataset; synthetic leagues also carry their true home-win
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub probabilities: Option<Vec<f64>>,
}

impl LoadedData {
    pub fn bayes_accuracy(&self) -> Option<f64> {
        self.probabilities.as_deref().map(synth::bayes_accuracy)
    }
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData, ExperimentError> {
    let (dataset, probabilities) = match &cfg.data {
        DataSource::Csv { path } => {
            let d = dataset::load_matches(path)
                .map_err(|e| ExperimentError::Data(format!("{}: {e}", path.display())))?;
            (d, None)
        }
        DataSource::Synth(spec) => {
            let league = synth::generate(spec)?;
            (league.dataset, Some(league.probabilities))
        }
    };
    let dataset = match &cfg.aliases {
        Aliases::None => dataset,
        Aliases::Nba => normalize_franchises(dataset, &FranchiseMap::nba())?,
        Aliases::File(p) => normalize_franchises(dataset, &FranchiseMap::from_path(p)?)?,
    };
    Ok(LoadedData { dataset, probabilities })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: EvalReport,
    pub bayes_accuracy: Option<f64>,
    pub out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>, ExperimentError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| ExperimentError::Runtime(format!("cannot create {}: {e}", path.display())))
}

/// Loads the data, writes `config.txt` (and `data.csv` for synthetic
/// leagues) into `cfg.out`, then evaluates.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, ExperimentError> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    if matches!(cfg.data, DataSource::Synth(_)) {
        let mut w = create(&cfg.out.join("data.csv"))?;
        write_matches(&data.dataset, &mut w)?;
        w.flush()?;
    }
    run_loaded(cfg, &data, &cfg.out)
}

/// Evaluates already loaded data, writing every output into `out`.
pub fn run_loaded(cfg: &ExperimentConfig, data: &LoadedData, out: &Path) -> Result<RunOutcome, ExperimentError> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;

    let d = &data.dataset;
    let matrix = build_feature_matrix(d, &cfg.features)?;
    {
        let mut w = create(&out.join("features.csv"))?;
        matrix.write_csv(&mut w)?;
        w.flush()?;
    }
    if cfg.features.family == FeatureFamily::Elo {
        let ledger = elo::replay(d, &cfg.features.elo_config()).map_err(FeatureError::from)?;
        let mut w = create(&out.join("ratings.csv"))?;
        ledger.write_history_csv(&mut w)?;
        w.flush()?;
    }

    let (matrix, dropped) = dataset::drop_na_rows(matrix);
    if matrix.is_empty() {
        return Err(ExperimentError::Data("no rows left after dropping missing features".into()));
    }
    let split = cfg.split_spec(&d.seasons());
    split.validate()?;
    let opts = CvOptions {
        net: cfg.net_config(),
        train: cfg.train.clone(),
        split,
        criterion: cfg.criterion,
    };
    let mut report = cross_validate_matrix(&matrix, &opts)?;
    report.rows_total = dropped.kept + dropped.dropped;
    report.rows_dropped = dropped.dropped;
    write_report(out, &report)?;

    let bayes_accuracy = data.bayes_accuracy();
    if let Some(b) = bayes_accuracy {
        let mut csv = OpenOptions::new().append(true).open(out.join("summary.csv"))?;
        writeln!(csv, "bayes_accuracy,{b}")?;
        let mut txt = OpenOptions::new().append(true).open(out.join("summary.txt"))?;
        writeln!(txt, "\ngenerator bayes-optimal accuracy: {b:.4}")?;
    }
    Ok(RunOutcome {
        report,
        bayes_accuracy,
        out: out.to_path_buf(),
    })
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub regression_pct: f64,
    pub home_advantage: f64,
    pub k: f64,
    pub depth: usize,
    pub seed: u64,
    pub result: Result<EvalReport, String>,
}

const AXIS_MIX: [u64; 4] = [
    0x9E37_79B9_7F4A_7C15,
    0xC2B2_AE3D_27D4_EB4F,
    0x1656_67B1_9E37_79F9,
    0x27D4_EB2F_1656_67C5,
];

/// Per-point seed; all-zero coordinates give `base` back.
pub fn point_seed(base: u64, coords: [usize; 4]) -> u64 {
    coords
        .iter()
        .zip(AXIS_MIX)
        .fold(base, |s, (&c, m)| s ^ (c as u64).wrapping_mul(m))
}

fn axis<T: Copy>(grid: &[T], base: T) -> Vec<T> {
    if grid.is_empty() {
        vec![base]
    } else {
        grid.to_vec()
    }
}

/// Evaluates every point of the grid in `cfg.sweep` on a bounded worker
/// pool. Points write into `out/point_NNN`; `out/results.csv` ranks them by
/// AUC, then accuracy. Failed points are recorded, not fatal.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepPoint>, ExperimentError> {
    cfg.validate()?;
    let data = load_data(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    fs::write(cfg.out.join("config.txt"), cfg.to_text())?;

    let f = &cfg.features;
    let ps = axis(&cfg.sweep.regression_pct, f.regression_pct);
    let has = axis(&cfg.sweep.home_advantage, f.elo.home_advantage);
    let ks = axis(&cfg.sweep.k, f.elo.k);
    let depths = axis(&cfg.sweep.depth, f.depth);
    let mut grid = Vec::new();
    for (a, &p) in ps.iter().enumerate() {
        for (b, &ha) in has.iter().enumerate() {
            for (c, &k) in ks.iter().enumerate() {
                for (e, &depth) in depths.iter().enumerate() {
                    grid.push(([a, b, c, e], p, ha, k, depth));
                }
            }
        }
    }

    let workers = cfg.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let mut points: Vec<SweepPoint> = pool.install(|| {
        grid.par_iter()
            .enumerate()
            .map(|(index, &(coords, p, ha, k, depth))| {
                let mut point = cfg.clone();
                point.features.regression_pct = p;
                point.features.elo.home_advantage = ha;
                point.features.elo.k = k;
                point.features.depth = depth;
                point.train.seed = point_seed(cfg.train.seed, coords);
                point.sweep = SweepGrid::default();
                let dir = cfg.out.join(format!("point_{index:03}"));
                point.out = dir.clone();
                let result = fs::create_dir_all(&dir)
                    .and_then(|()| fs::write(dir.join("config.txt"), point.to_text()))
                    .map_err(ExperimentError::from)
                    .and_then(|()| point.validate())
                    .and_then(|()| run_loaded(&point, &data, &dir))
                    .map(|o| o.report)
                    .map_err(|e| {
                        log::warn!("sweep point {index} failed: {e}");
                        e.to_string()
                    });
                SweepPoint {
                    index,
                    regression_pct: p,
                    home_advantage: ha,
                    k,
                    depth,
                    seed: point.train.seed,
                    result,
                }
            })
            .collect()
    });

    points.sort_by(|a, b| match (&a.result, &b.result) {
        (Ok(x), Ok(y)) => y
            .auc_mean
            .total_cmp(&x.auc_mean)
            .then(y.accuracy_mean.total_cmp(&x.accuracy_mean))
            .then(a.index.cmp(&b.index)),
        (Ok(_), Err(_)) => std::cmp::Ordering::Less,
        (Err(_), Ok(_)) => std::cmp::Ordering::Greater,
        (Err(_), Err(_)) => a.index.cmp(&b.index),
    });
    write_results(&cfg.out.join("results.csv"), &points)?;
    Ok(points)
}

fn write_results(path: &Path, points: &[SweepPoint]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    let header = [
        "point",
        "regression_pct",
        "home_advantage",
        "k",
        "depth",
        "seed",
        "auc_mean",
        "auc_sd",
        "accuracy_mean",
        "accuracy_sd",
        "threshold_mean",
        "error",
    ];
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    let mut rows = vec![header.map(String::from).to_vec()];
    for p in points {
        let mut row = vec![
            format!("point_{:03}", p.index),
            p.regression_pct.to_string(),
            p.home_advantage.to_string(),
            p.k.to_string(),
            p.depth.to_string(),
            p.seed.to_string(),
        ];
        match &p.result {
            Ok(r) => row.extend([
                r.auc_mean.to_string(),
                opt(r.auc_sd),
                r.accuracy_mean.to_string(),
                opt(r.accuracy_sd),
                r.threshold_mean.to_string(),
                String::new(),
            ]),
            Err(e) => row.extend([String::new(), String::new(), String::new(), String::new(), String::new(), e.clone()]),
        }
        rows.push(row);
    }
    for row in rows {
        w.write_record(&row).map_err(|e| ExperimentError::Runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
