use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::ExperimentError;
use crate::dataset::{SplitMode, SplitSpec};
use crate::eval::ThresholdCriterion;
use crate::features::FeatureSpec;
use crate::net::{NetConfig, TrainConfig};
use crate::synth::LeagueSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Csv { path: PathBuf },
    Synth(LeagueSpec),
}

/// How team names are mapped onto franchises before anything else runs.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Aliases {
    #[default]
    None,
    /// The built-in NBA relocation table.
    Nba,
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Architecture {
    #[default]
    Simple,
    Deep,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitKind {
    #[default]
    Random,
    Partition,
    Temporal,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepGrid {
    pub regression_pct: Vec<f64>,
    pub home_advantage: Vec<f64>,
    pub k: Vec<f64>,
    pub depth: Vec<usize>,
}

impl SweepGrid {
    pub fn is_empty(&self) -> bool {
        self.regression_pct.is_empty() && self.home_advantage.is_empty() && self.k.is_empty() && self.depth.is_empty()
    }

    /// Reads `key = v1, v2, ...` lines; keys may carry a `sweep.` prefix.
    pub fn from_text(text: &str) -> Result<Self, ExperimentError> {
        let mut grid = SweepGrid::default();
        for (line, key, value) in key_values(text)? {
            let key = key.strip_prefix("sweep.").unwrap_or(key);
            grid.set(key, value)
                .map_err(|m| ExperimentError::Config(format!("grid line {line}: {m}")))?;
        }
        Ok(grid)
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read grid {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "regression_pct" => self.regression_pct = parse_list(value)?,
            "home_advantage" => self.home_advantage = parse_list(value)?,
            "k" => self.k = parse_list(value)?,
            "depth" => self.depth = parse_list(value)?,
            _ => return Err(format!("unknown grid key {key:?}")),
        }
        Ok(())
    }
}

/// Everything that affects a run. Text form is one `key = value` per line;
/// see [`ExperimentConfig::KEYS`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub aliases: Aliases,
    pub features: FeatureSpec,
    pub architecture: Architecture,
    pub hidden_units: usize,
    pub dropout: f64,
    pub l2: f64,
    pub train: TrainConfig,
    pub split: SplitKind,
    pub folds: usize,
    pub train_fraction: f64,
    /// Temporal split: the first this many seasons train.
    pub train_seasons: usize,
    pub criterion: ThresholdCriterion,
    pub sweep: SweepGrid,
    pub out: PathBuf,
    /// Sweep worker pool size; `None` uses the available parallelism.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: DataSource::Synth(LeagueSpec::default()),
            aliases: Aliases::None,
            features: FeatureSpec::default(),
            architecture: Architecture::Simple,
            hidden_units: 16,
            dropout: 0.3,
            l2: 1e-4,
            train: TrainConfig::default(),
            split: SplitKind::Random,
            folds: 4,
            train_fraction: 0.75,
            train_seasons: 8,
            criterion: ThresholdCriterion::Accuracy,
            sweep: SweepGrid::default(),
            out: PathBuf::from("out"),
            workers: None,
        }
    }
}

/// `(line, key, value)` for every non-blank, non-comment line.
fn key_values(text: &str) -> Result<Vec<(usize, &str, &str)>, ExperimentError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ExperimentError::Config(format!("line {}: expected `key = value`", i + 1)))?;
        out.push((i + 1, k.trim(), v.trim()));
    }
    Ok(out)
}

fn parse<T: FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("invalid value {value:?}: {e}"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("invalid boolean {value:?}")),
    }
}

fn parse_list<T: FromStr>(value: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse(v.trim())).collect()
}

fn list<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    /// Every accepted key, in echo order.
    pub const KEYS: &'static [&'static str] = &[
        "data",
        "aliases",
        "synth.teams",
        "synth.seasons",
        "synth.games_per_team",
        "synth.strength_sd",
        "synth.home_advantage",
        "synth.season_carryover",
        "synth.drift_sd",
        "synth.factor_noise",
        "synth.season_noise",
        "synth.seed",
        "synth.start_year",
        "feature_family",
        "periodicity",
        "court_split",
        "depth",
        "regression_pct",
        "dynamic_regression",
        "initial_rating",
        "logistic_divisor",
        "k",
        "home_advantage",
        "architecture",
        "hidden_units",
        "dropout",
        "l2",
        "epochs",
        "batch_size",
        "validation_fraction",
        "patience",
        "restore_best",
        "learning_rate",
        "seed",
        "split",
        "folds",
        "train_fraction",
        "train_seasons",
        "criterion",
        "sweep.regression_pct",
        "sweep.home_advantage",
        "sweep.k",
        "sweep.depth",
        "out",
        "workers",
    ];

    /// Defaults overridden by the file at `path`.
    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ExperimentError> {
        for (line, key, value) in key_values(text)? {
            self.set(key, value)
                .map_err(|e| ExperimentError::Config(format!("line {line}: {e}")))?;
        }
        Ok(())
    }

    fn synth_mut(&mut self) -> &mut LeagueSpec {
        if !matches!(self.data, DataSource::Synth(_)) {
            self.data = DataSource::Synth(LeagueSpec::default());
        }
        match &mut self.data {
            DataSource::Synth(s) => s,
            DataSource::Csv { .. } => unreachable!(),
        }
    }

    /// Sets one key. Any `synth.*` key switches the data source to a
    /// synthetic league.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        let err = |m: String| ExperimentError::Config(format!("{key}: {m}"));
        self.set_inner(key, value).map_err(err)
    }

    fn set_inner(&mut self, key: &str, value: &str) -> Result<(), String> {
        let f = &mut self.features;
        match key {
            "data" => match value {
                "synth" => {
                    self.synth_mut();
                }
                path => self.data = DataSource::Csv { path: PathBuf::from(path) },
            },
            "aliases" => {
                self.aliases = match value {
                    "none" | "" => Aliases::None,
                    "nba" => Aliases::Nba,
                    path => Aliases::File(PathBuf::from(path)),
                }
            }
            "synth.teams" => self.synth_mut().team_count = parse(value)?,
            "synth.seasons" => self.synth_mut().seasons = parse(value)?,
            "synth.games_per_team" => self.synth_mut().games_per_team = parse(value)?,
            "synth.strength_sd" => self.synth_mut().strength_sd = parse(value)?,
            "synth.home_advantage" => self.synth_mut().home_advantage = parse(value)?,
            "synth.season_carryover" => self.synth_mut().season_carryover = parse(value)?,
            "synth.drift_sd" => self.synth_mut().drift_sd = parse(value)?,
            "synth.factor_noise" => self.synth_mut().factor_noise = parse(value)?,
            "synth.season_noise" => self.synth_mut().season_noise = parse_list(value)?,
            "synth.seed" => self.synth_mut().seed = parse(value)?,
            "synth.start_year" => self.synth_mut().start_year = parse(value)?,
            "feature_family" => f.family = parse(value)?,
            "periodicity" => f.periodicity = parse(value)?,
            "court_split" => f.court_split = parse_bool(value)?,
            "depth" => f.depth = parse(value)?,
            "regression_pct" => f.regression_pct = parse(value)?,
            "dynamic_regression" => f.dynamic_regression = parse_bool(value)?,
            "initial_rating" => f.elo.initial_rating = parse(value)?,
            "logistic_divisor" => f.elo.logistic_divisor = parse(value)?,
            "k" => f.elo.k = parse(value)?,
            "home_advantage" => f.elo.home_advantage = parse(value)?,
            "architecture" => {
                self.architecture = match value {
                    "simple" => Architecture::Simple,
                    "deep" => Architecture::Deep,
                    "linear" => Architecture::Linear,
                    _ => return Err(format!("unknown architecture {value:?} (simple, deep, linear)")),
                }
            }
            "hidden_units" => self.hidden_units = parse(value)?,
            "dropout" => self.dropout = parse(value)?,
            "l2" => self.l2 = parse(value)?,
            "epochs" => self.train.epochs = parse(value)?,
            "batch_size" => self.train.batch_size = parse(value)?,
            "validation_fraction" => self.train.validation_fraction = parse(value)?,
            "patience" => {
                self.train.patience = match value {
                    "none" | "off" => None,
                    v => Some(parse(v)?),
                }
            }
            "restore_best" => self.train.restore_best = parse_bool(value)?,
            "learning_rate" => self.train.learning_rate = parse(value)?,
            "seed" => self.train.seed = parse(value)?,
            "split" => {
                self.split = match value {
                    "random" => SplitKind::Random,
                    "partition" => SplitKind::Partition,
                    "temporal" => SplitKind::Temporal,
                    _ => return Err(format!("unknown split {value:?} (random, partition, temporal)")),
                }
            }
            "folds" => self.folds = parse(value)?,
            "train_fraction" => self.train_fraction = parse(value)?,
            "train_seasons" => self.train_seasons = parse(value)?,
            "criterion" => self.criterion = parse(value)?,
            "sweep.regression_pct" | "sweep.home_advantage" | "sweep.k" | "sweep.depth" => {
                self.sweep.set(&key["sweep.".len()..], value)?
            }
            "out" => self.out = PathBuf::from(value),
            "workers" => {
                self.workers = match value {
                    "auto" => None,
                    v => Some(parse(v)?),
                }
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    pub fn net_config(&self) -> NetConfig {
        match self.architecture {
            Architecture::Simple => NetConfig::simple(self.hidden_units, self.dropout, self.l2),
            Architecture::Deep => NetConfig::deep(self.dropout, self.l2),
            Architecture::Linear => NetConfig::linear(),
        }
    }

    /// The split for a dataset with the given season labels.
    pub fn split_spec<S: AsRef<str>>(&self, seasons: &[S]) -> SplitSpec {
        let seed = self.train.seed;
        match self.split {
            SplitKind::Random => SplitSpec {
                mode: SplitMode::Random {
                    train_fraction: self.train_fraction,
                },
                folds: self.folds,
                seed,
            },
            SplitKind::Partition => SplitSpec {
                mode: SplitMode::Partition,
                folds: self.folds,
                seed,
            },
            SplitKind::Temporal => SplitSpec::temporal_first(seasons, self.train_seasons, seed),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let cfg = |m: String| ExperimentError::Config(m);
        self.features.validate().map_err(|e| cfg(e.to_string()))?;
        self.net_config().validate().map_err(|e| cfg(e.to_string()))?;
        if let DataSource::Synth(s) = &self.data {
            s.validate().map_err(|e| cfg(e.to_string()))?;
        }
        if self.train.epochs == 0 || self.train.batch_size == 0 {
            return Err(cfg("epochs and batch_size must be positive".into()));
        }
        if !(self.train.learning_rate.is_finite() && self.train.learning_rate > 0.0) {
            return Err(cfg("learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.train.validation_fraction) {
            return Err(cfg("validation_fraction must lie in [0, 1)".into()));
        }
        if self.split != SplitKind::Temporal {
            self.split_spec::<&str>(&[]).validate().map_err(|e| cfg(e.to_string()))?;
        } else if self.train_seasons == 0 {
            return Err(cfg("train_seasons must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(cfg("workers must be positive".into()));
        }
        if self.sweep.regression_pct.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(cfg("sweep.regression_pct values must lie in [0, 1]".into()));
        }
        if self.sweep.depth.contains(&0) {
            return Err(cfg("sweep.depth values must be positive".into()));
        }
        Ok(())
    }

    /// Fully resolved configuration in the text format; parsing it back
    /// yields an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.data {
            DataSource::Csv { path } => kv("data", path.display().to_string()),
            DataSource::Synth(l) => {
                kv("data", "synth".into());
                kv("synth.teams", l.team_count.to_string());
                kv("synth.seasons", l.seasons.to_string());
                kv("synth.games_per_team", l.games_per_team.to_string());
                kv("synth.strength_sd", l.strength_sd.to_string());
                kv("synth.home_advantage", l.home_advantage.to_string());
                kv("synth.season_carryover", l.season_carryover.to_string());
                kv("synth.drift_sd", l.drift_sd.to_string());
                kv("synth.factor_noise", l.factor_noise.to_string());
                kv("synth.season_noise", list(&l.season_noise));
                kv("synth.seed", l.seed.to_string());
                kv("synth.start_year", l.start_year.to_string());
            }
        }
        kv(
            "aliases",
            match &self.aliases {
                Aliases::None => "none".into(),
                Aliases::Nba => "nba".into(),
                Aliases::File(p) => p.display().to_string(),
            },
        );
        let f = &self.features;
        kv("feature_family", f.family.to_string());
        kv("periodicity", f.periodicity.to_string());
        kv("court_split", f.court_split.to_string());
        kv("depth", f.depth.to_string());
        kv("regression_pct", f.regression_pct.to_string());
        kv("dynamic_regression", f.dynamic_regression.to_string());
        kv("initial_rating", f.elo.initial_rating.to_string());
        kv("logistic_divisor", f.elo.logistic_divisor.to_string());
        kv("k", f.elo.k.to_string());
        kv("home_advantage", f.elo.home_advantage.to_string());
        kv(
            "architecture",
            match self.architecture {
                Architecture::Simple => "simple",
                Architecture::Deep => "deep",
                Architecture::Linear => "linear",
            }
            .into(),
        );
        kv("hidden_units", self.hidden_units.to_string());
        kv("dropout", self.dropout.to_string());
        kv("l2", self.l2.to_string());
        let t = &self.train;
        kv("epochs", t.epochs.to_string());
        kv("batch_size", t.batch_size.to_string());
        kv("validation_fraction", t.validation_fraction.to_string());
        kv("patience", t.patience.map_or("none".into(), |p| p.to_string()));
        kv("restore_best", t.restore_best.to_string());
        kv("learning_rate", t.learning_rate.to_string());
        kv("seed", t.seed.to_string());
        kv(
            "split",
            match self.split {
                SplitKind::Random => "random",
                SplitKind::Partition => "partition",
                SplitKind::Temporal => "temporal",
            }
            .into(),
        );
        kv("folds", self.folds.to_string());
        kv("train_fraction", self.train_fraction.to_string());
        kv("train_seasons", self.train_seasons.to_string());
        kv("criterion", self.criterion.to_string());
        kv("sweep.regression_pct", list(&self.sweep.regression_pct));
        kv("sweep.home_advantage", list(&self.sweep.home_advantage));
        kv("sweep.k", list(&self.sweep.k));
        kv("sweep.depth", list(&self.sweep.depth));
        kv("out", self.out.display().to_string());
        kv("workers", self.workers.map_or("auto".into(), |w| w.to_string()));
        s
    }
}
