use std::collections::BTreeMap;

use courtside::dataset::{home_win_rate_by_season, read_matches, write_matches, SplitMode};
use courtside::eval::{cross_validate, CvOptions};
use courtside::features::build_feature_matrix;
use courtside::synth::{generate, home_advantage_for_rate, LeagueSpec};
use courtside::{FeatureFamily, FeatureSpec, Periodicity, SplitSpec, TrainConfig};

fn quick() -> CvOptions {
    CvOptions {
        train: TrainConfig {
            epochs: 30,
            ..TrainConfig::default()
        },
        ..CvOptions::default()
    }
}

#[test]
fn synthetic_csv_round_trip() {
    let league = generate(&LeagueSpec {
        team_count: 8,
        seasons: 2,
        games_per_team: 14,
        ..LeagueSpec::default()
    })
    .unwrap();
    let mut buf = Vec::new();
    write_matches(&league.dataset, &mut buf).unwrap();
    assert_eq!(read_matches(buf.as_slice()).unwrap(), league.dataset);
}

#[test]
fn calibrated_home_advantage_reproduces_home_win_rate() {
    for rate in [0.5927, 0.6] {
        let league = generate(&LeagueSpec {
            strength_sd: 0.0,
            home_advantage: home_advantage_for_rate(rate),
            seasons: 5,
            ..LeagueSpec::default()
        })
        .unwrap();
        let n = league.dataset.len() as f64;
        assert!(n >= 5000.0);
        assert!(league.probabilities.iter().all(|p| (p - rate).abs() < 1e-12));
        let observed = home_win_rate_by_season(&league.dataset).overall / 100.0;
        let sigma = (rate * (1.0 - rate) / n).sqrt();
        assert!((observed - rate).abs() < 3.0 * sigma, "{observed} vs {rate}");
    }
}

#[test]
fn results_concentrate_around_generator_probabilities() {
    let league = generate(&LeagueSpec::default()).unwrap();
    let wins = league.dataset.matches().iter().filter(|m| m.home_win).count() as f64;
    let expected: f64 = league.probabilities.iter().sum();
    let sd = league.probabilities.iter().map(|p| p * (1.0 - p)).sum::<f64>().sqrt();
    assert!((wins - expected).abs() < 4.0 * sd, "{wins} vs {expected} (sd {sd})");
}

#[test]
fn dynamic_na_rows_are_teams_without_two_priors() {
    let league = generate(&LeagueSpec {
        team_count: 10,
        seasons: 16,
        games_per_team: 18,
        ..LeagueSpec::default()
    })
    .unwrap();
    let d = &league.dataset;
    let mut played: BTreeMap<&str, usize> = BTreeMap::new();
    let mut expected = 0;
    for m in d.matches() {
        let h = played.get(m.home_team.as_str()).copied().unwrap_or(0);
        let a = played.get(m.away_team.as_str()).copied().unwrap_or(0);
        expected += usize::from(h < 2 || a < 2);
        *played.entry(&m.home_team).or_default() += 1;
        *played.entry(&m.away_team).or_default() += 1;
    }
    for family in [FeatureFamily::Elo, FeatureFamily::Diff] {
        let spec = FeatureSpec {
            family,
            periodicity: Periodicity::Dynamic,
            depth: 2,
            ..FeatureSpec::default()
        };
        let m = build_feature_matrix(d, &spec).unwrap();
        assert_eq!(m.rows.iter().filter(|r| r.has_na()).count(), expected, "{family}");
    }
}

#[test]
fn noisier_season_is_predicted_worse() {
    let league = generate(&LeagueSpec {
        seasons: 2,
        season_noise: vec![1.0, 4.0],
        ..LeagueSpec::default()
    })
    .unwrap();
    let report = cross_validate(&league.dataset, &FeatureSpec::default(), &quick()).unwrap();
    let by_season: BTreeMap<_, _> = report.per_season.iter().map(|s| (s.season.as_str(), s.accuracy)).collect();
    assert!(by_season["2004-2005"] > by_season["2005-2006"], "{by_season:?}");
}

#[test]
fn temporal_split_trains_on_early_seasons() {
    let league = generate(&LeagueSpec {
        team_count: 10,
        seasons: 4,
        games_per_team: 30,
        ..LeagueSpec::default()
    })
    .unwrap();
    let seasons = league.dataset.seasons();
    let opts = CvOptions {
        split: SplitSpec::temporal_first(&seasons, 3, 1),
        ..quick()
    };
    assert!(matches!(opts.split.mode, SplitMode::Temporal { .. }));
    let report = cross_validate(&league.dataset, &FeatureSpec::default(), &opts).unwrap();
    assert_eq!(report.folds.len(), 1);
    assert_eq!(report.per_season.len(), 1);
    assert_eq!(report.per_season[0].season, "2007-2008");
    assert_eq!(report.folds[0].n_test, 150);
}

#[test]
fn elo_beats_coin_flip_on_a_strong_league() {
    let league = generate(&LeagueSpec {
        seasons: 3,
        strength_sd: 150.0,
        ..LeagueSpec::default()
    })
    .unwrap();
    let report = cross_validate(&league.dataset, &FeatureSpec::default(), &quick()).unwrap();
    assert_eq!(report.folds.len(), 4);
    assert!(report.auc_mean > 0.65, "{}", report.auc_mean);
    assert!(report.accuracy_mean <= league.bayes_accuracy() + 0.02);
}
