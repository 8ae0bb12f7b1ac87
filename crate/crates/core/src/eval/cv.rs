use std::fmt;

use rayon::prelude::*;

use super::{best_threshold, roc_and_auc, EvalError, RocCurve, ThresholdCriterion};
use crate::dataset::{drop_na_rows, split, Dataset, Fold, SplitMode, SplitSpec, Standardizer};
use crate::features::{build_feature_matrix, FeatureMatrix, FeatureSpec};
use crate::net::{predict_proba, train_matrix, NetConfig, Network, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CvOptions {
    pub net: NetConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
    pub criterion: ThresholdCriterion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Independent random train/test draws.
    CrossValidation { folds: usize },
    /// A single random train/test draw.
    SingleExecution,
    /// Disjoint v-fold partition.
    Partition { folds: usize },
    Temporal,
}

impl EvalMode {
    fn of(split: &SplitSpec) -> Self {
        match split.mode {
            SplitMode::Random { .. } if split.folds == 1 => EvalMode::SingleExecution,
            SplitMode::Random { .. } => EvalMode::CrossValidation { folds: split.folds },
            SplitMode::Partition => EvalMode::Partition { folds: split.folds },
            SplitMode::Temporal { .. } => EvalMode::Temporal,
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMode::CrossValidation { folds } => write!(f, "cross-validation ({folds} random draws)"),
            EvalMode::SingleExecution => f.write_str("single execution"),
            EvalMode::Partition { folds } => write!(f, "{folds}-fold partition"),
            EvalMode::Temporal => f.write_str("temporal split"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonAccuracy {
    pub season: String,
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Fewer than 50 test rows.
    pub low_count: bool,
}

pub const LOW_COUNT: usize = 50;

/// Accuracy per season label, in order of first appearance.
pub fn per_season_accuracy(scores: &[f64], labels: &[u8], seasons: &[&str], threshold: f64) -> Vec<SeasonAccuracy> {
    let mut out: Vec<SeasonAccuracy> = Vec::new();
    for ((s, l), season) in scores.iter().zip(labels).zip(seasons) {
        let hit = usize::from((*s >= threshold) == (*l == 1));
        match out.iter_mut().find(|a| a.season == *season) {
            Some(a) => {
                a.n += 1;
                a.correct += hit;
            }
            None => out.push(SeasonAccuracy {
                season: season.to_string(),
                n: 1,
                correct: hit,
                accuracy: 0.0,
                low_count: false,
            }),
        }
    }
    for a in &mut out {
        a.accuracy = a.correct as f64 / a.n as f64;
        a.low_count = a.n < LOW_COUNT;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub auc: f64,
    pub threshold: f64,
    pub accuracy: f64,
    pub roc: RocCurve,
    pub per_season: Vec<SeasonAccuracy>,
    pub training: TrainReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub mode: EvalMode,
    pub criterion: ThresholdCriterion,
    pub folds: Vec<FoldResult>,
    pub skipped: Vec<usize>,
    pub auc_mean: f64,
    pub auc_sd: Option<f64>,
    pub accuracy_mean: f64,
    pub accuracy_sd: Option<f64>,
    pub threshold_mean: f64,
    /// Pooled over folds, each fold at its own threshold.
    pub per_season: Vec<SeasonAccuracy>,
    pub rows_total: usize,
    pub rows_dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldModel {
    pub standardizer: Standardizer,
    pub network: Network,
    pub training: TrainReport,
}

fn fold_seed(base: u64, fold: usize) -> u64 {
    base.wrapping_add((fold as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Standardises the fold's training rows and trains a fresh network on them.
pub fn fit_fold(m: &FeatureMatrix, fold: &Fold, fold_index: usize, opts: &CvOptions) -> Result<FoldModel, EvalError> {
    let train = m.select(&fold.train);
    let standardizer = Standardizer::fit(&train)?;
    let train = standardizer.apply(&train)?;
    let seed = fold_seed(opts.train.seed, fold_index);
    let mut network = Network::new(m.width(), &opts.net, seed)?;
    let cfg = TrainConfig {
        seed,
        ..opts.train.clone()
    };
    let training = train_matrix(&mut network, &train, &cfg)?;
    Ok(FoldModel {
        standardizer,
        network,
        training,
    })
}

fn evaluate_fold(m: &FeatureMatrix, fold: &Fold, fold_index: usize, opts: &CvOptions) -> Result<Option<FoldResult>, EvalError> {
    let test = m.select(&fold.test);
    let labels = test.labels();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == labels.len() {
        log::warn!("fold {fold_index}: test set has a single class; skipped");
        return Ok(None);
    }
    let model = fit_fold(m, fold, fold_index, opts)?;
    let test_z = model.standardizer.apply(&test)?;
    let scores = predict_proba(&model.network, &test_z.dense()?)?;
    let (roc, auc) = roc_and_auc(&scores, &labels)?;
    let (threshold, accuracy) = best_threshold(&scores, &labels, opts.criterion)?;
    let per_season = per_season_accuracy(&scores, &labels, &test.seasons(), threshold);
    Ok(Some(FoldResult {
        fold: fold_index,
        n_train: fold.train.len(),
        n_test: fold.test.len(),
        auc,
        threshold,
        accuracy,
        roc,
        per_season,
        training: model.training,
    }))
}

fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (mean, sd)
}

/// Evaluates an NA-free feature matrix: split, then per fold standardise,
/// train, score the test rows and pick a threshold. Folds run in parallel.
pub fn cross_validate_matrix(m: &FeatureMatrix, opts: &CvOptions) -> Result<EvalReport, EvalError> {
    let folds = split(&m.rows, &opts.split)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(i, f)| evaluate_fold(m, f, i, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let skipped: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(i, _)| i)
        .collect();
    let folds: Vec<FoldResult> = results.into_iter().flatten().collect();
    if folds.is_empty() {
        return Err(EvalError::NoFolds);
    }

    let (auc_mean, auc_sd) = mean_sd(&folds.iter().map(|f| f.auc).collect::<Vec<_>>());
    let (accuracy_mean, accuracy_sd) = mean_sd(&folds.iter().map(|f| f.accuracy).collect::<Vec<_>>());
    let (threshold_mean, _) = mean_sd(&folds.iter().map(|f| f.threshold).collect::<Vec<_>>());

    let mut per_season: Vec<SeasonAccuracy> = Vec::new();
    for season in m.seasons() {
        if per_season.iter().any(|s| s.season == season) {
            continue;
        }
        let (n, correct) = folds
            .iter()
            .flat_map(|f| f.per_season.iter().filter(|s| s.season == season))
            .fold((0, 0), |(n, c), s| (n + s.n, c + s.correct));
        if n > 0 {
            per_season.push(SeasonAccuracy {
                season: season.to_string(),
                n,
                correct,
                accuracy: correct as f64 / n as f64,
                low_count: n < LOW_COUNT,
            });
        }
    }

    Ok(EvalReport {
        mode: EvalMode::of(&opts.split),
        criterion: opts.criterion,
        folds,
        skipped,
        auc_mean,
        auc_sd,
        accuracy_mean,
        accuracy_sd,
        threshold_mean,
        per_season,
        rows_total: m.len(),
        rows_dropped: 0,
    })
}

/// Full pipeline from raw matches: build features, drop NA rows, then
/// [`cross_validate_matrix`].
pub fn cross_validate(d: &Dataset, spec: &FeatureSpec, opts: &CvOptions) -> Result<EvalReport, EvalError> {
    let m = build_feature_matrix(d, spec)?;
    let (m, dropped) = drop_na_rows(m);
    let mut report = cross_validate_matrix(&m, opts)?;
    report.rows_total = dropped.kept + dropped.dropped;
    report.rows_dropped = dropped.dropped;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureRow;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_matrix(n: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..n)
            .map(|i| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let p = 1.0 / (1.0 + (-2.0 * x).exp());
                FeatureRow {
                    match_index: i,
                    season: format!("s{}", i * 3 / n),
                    label: u8::from(rng.random::<f64>() < p),
                    values: vec![Some(x)],
                }
            })
            .collect();
        FeatureMatrix {
            columns: vec!["x".into()],
            rows,
        }
    }

    fn quick_opts() -> CvOptions {
        CvOptions {
            train: TrainConfig {
                epochs: 5,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn four_folds_and_mean() {
        let report = cross_validate_matrix(&noisy_matrix(400, 1), &quick_opts()).unwrap();
        assert_eq!(report.folds.len(), 4);
        assert_eq!(report.mode, EvalMode::CrossValidation { folds: 4 });
        let mean = report.folds.iter().map(|f| f.auc).sum::<f64>() / 4.0;
        assert!((report.auc_mean - mean).abs() < 1e-12);
        assert!(report.auc_sd.is_some());
        assert_eq!(report.per_season.iter().map(|s| s.n).sum::<usize>(), 400);
    }

    #[test]
    fn deterministic() {
        let m = noisy_matrix(300, 2);
        assert_eq!(
            cross_validate_matrix(&m, &quick_opts()).unwrap(),
            cross_validate_matrix(&m, &quick_opts()).unwrap()
        );
    }

    #[test]
    fn single_class_folds_are_skipped() {
        let mut m = noisy_matrix(40, 3);
        m.rows.iter_mut().for_each(|r| r.label = 1);
        m.rows[0].label = 0;
        let opts = CvOptions {
            split: SplitSpec {
                mode: SplitMode::Partition,
                folds: 4,
                seed: 0,
            },
            ..quick_opts()
        };
        let report = cross_validate_matrix(&m, &opts).unwrap();
        assert_eq!(report.skipped.len(), 3);
        assert_eq!(report.folds.len(), 1);
        assert_eq!(report.accuracy_sd, None);
    }

    #[test]
    fn test_rows_never_touch_training() {
        let m = noisy_matrix(200, 4);
        let fold = &split(&m.rows, &SplitSpec::default()).unwrap()[0];
        let a = fit_fold(&m, fold, 0, &quick_opts()).unwrap();
        let mut mutated = m.clone();
        for &i in &fold.test {
            mutated.rows[i].values[0] = Some(99.0);
            mutated.rows[i].label ^= 1;
        }
        let b = fit_fold(&mutated, fold, 0, &quick_opts()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn season_table() {
        let t = per_season_accuracy(&[0.9, 0.2, 0.7], &[1, 0, 0], &["a", "a", "b"], 0.5);
        assert_eq!(t.len(), 2);
        assert_eq!((t[0].accuracy, t[1].accuracy), (1.0, 0.0));
        assert!(t[0].low_count);
    }
}
