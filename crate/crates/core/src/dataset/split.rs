use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DataError, MatchRecord};
use crate::features::FeatureRow;

/// Anything that belongs to a season label.
pub trait Seasoned {
    fn season(&self) -> &str;
}

impl Seasoned for MatchRecord {
    fn season(&self) -> &str {
        &self.season
    }
}

impl Seasoned for FeatureRow {
    fn season(&self) -> &str {
        &self.season
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitMode {
    /// Every fold is an independent seeded draw of `train_fraction` rows.
    Random { train_fraction: f64 },
    /// Classic v-fold partition: the test sets are disjoint and cover all rows.
    Partition,
    /// One fold: named seasons train, the others test.
    Temporal {
        train_seasons: Vec<String>,
        test_seasons: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub mode: SplitMode,
    pub folds: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            mode: SplitMode::Random {
                train_fraction: 0.75,
            },
            folds: 4,
            seed: 42,
        }
    }
}

impl SplitSpec {
    /// Temporal split training on the first `k` of `seasons`.
    pub fn temporal_first<S: AsRef<str>>(seasons: &[S], k: usize, seed: u64) -> Self {
        let names: Vec<String> = seasons.iter().map(|s| s.as_ref().to_string()).collect();
        let k = k.min(names.len());
        Self {
            mode: SplitMode::Temporal {
                train_seasons: names[..k].to_vec(),
                test_seasons: names[k..].to_vec(),
            },
            folds: 1,
            seed,
        }
    }

    pub fn fold_count(&self) -> usize {
        match self.mode {
            SplitMode::Temporal { .. } => 1,
            _ => self.folds,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        match &self.mode {
            SplitMode::Random { train_fraction } => {
                if !(*train_fraction > 0.0 && *train_fraction < 1.0) {
                    return Err(DataError::InvalidSplit(format!(
                        "train fraction {train_fraction} outside (0, 1)"
                    )));
                }
            }
            SplitMode::Partition => {
                if self.folds < 2 {
                    return Err(DataError::InvalidSplit("partition needs at least 2 folds".into()));
                }
            }
            SplitMode::Temporal {
                train_seasons,
                test_seasons,
            } => {
                let train: BTreeSet<_> = train_seasons.iter().collect();
                let overlap: Vec<String> = test_seasons
                    .iter()
                    .filter(|s| train.contains(s))
                    .cloned()
                    .collect();
                if !overlap.is_empty() {
                    return Err(DataError::OverlappingSeasons(overlap));
                }
            }
        }
        if self.folds == 0 {
            return Err(DataError::InvalidSplit("folds must be positive".into()));
        }
        Ok(())
    }
}

/// Row indices of one train/test partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn fold_rng(seed: u64, fold: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fold as u64);
    rng
}

pub fn split<S: Seasoned>(rows: &[S], spec: &SplitSpec) -> Result<Vec<Fold>, DataError> {
    spec.validate()?;
    let n = rows.len();
    let folds = match &spec.mode {
        SplitMode::Random { train_fraction } => {
            let n_train = (train_fraction * n as f64).round() as usize;
            (0..spec.folds)
                .map(|f| {
                    let mut idx: Vec<usize> = (0..n).collect();
                    idx.shuffle(&mut fold_rng(spec.seed, f));
                    let (train, test) = idx.split_at(n_train);
                    sorted_fold(train, test)
                })
                .collect()
        }
        SplitMode::Partition => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut fold_rng(spec.seed, 0));
            let k = spec.folds;
            (0..k)
                .map(|f| {
                    let (lo, hi) = (f * n / k, (f + 1) * n / k);
                    let train: Vec<usize> = idx[..lo].iter().chain(&idx[hi..]).copied().collect();
                    sorted_fold(&train, &idx[lo..hi])
                })
                .collect()
        }
        SplitMode::Temporal {
            train_seasons,
            test_seasons,
        } => {
            let (mut train, mut test) = (Vec::new(), Vec::new());
            for (i, r) in rows.iter().enumerate() {
                let s = r.season();
                if train_seasons.iter().any(|t| t == s) {
                    train.push(i);
                } else if test_seasons.iter().any(|t| t == s) {
                    test.push(i);
                } else {
                    return Err(DataError::UnassignedSeason(s.to_string()));
                }
            }
            vec![Fold { train, test }]
        }
    };
    Ok(folds)
}

fn sorted_fold(train: &[usize], test: &[usize]) -> Fold {
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Fold { train, test }
}
