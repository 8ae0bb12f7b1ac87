//! Synthetic leagues with known outcome probabilities.
//!
//! Each team has a latent strength `s` in Elo points. Match outcomes are
//! Bernoulli draws with
//!
//! ```text
//! p_home = 1 / (1 + 10^(-(s_home - s_away + HA) / (400 * noise)))
//! ```
//!
//! where `noise` is the season's outcome-noise multiplier (1 by default).
//! Strengths start as `N(0, strength_sd)`, move by `N(0, drift_sd)` after
//! every round and, at each season boundary, become
//! `rho * s + sqrt(1 - rho^2) * N(0, strength_sd)`.
//!
//! Box scores depend on strength only, never on the drawn result. With
//! `z = s / 100` and `e = factor_noise * (u + v)`, where `u ~ N(0, 1)` is a
//! team style offset redrawn each season and `v ~ N(0, 1)` is per match:
//!
//! | factor | mean                           |
//! |--------|--------------------------------|
//! | eFG%   | `0.50 + 0.02 z + 0.03 e`       |
//! | TO%    | `0.13 - 0.006 z + 0.02 e`      |
//! | OREB%  | `0.25 + 0.01 z + 0.04 e`       |
//! | FT rate| `0.20 + 0.01 z + 0.04 e`       |
//!
//! Style offsets do not average out over a team's history, so a large
//! `factor_noise` makes the factors a weak proxy for strength.
//!
//! Attempts are `P2A ~ Poisson(60)` and `P3A ~ Poisson(25)`; makes are
//! binomial at `efg` (two) and `efg / 1.5` (three), so `E[eFG%] = efg`.
//! `FTA ~ Poisson(FGA * ft_rate / 0.76)`, `FTM ~ Bin(FTA, 0.76)`,
//! `TOV ~ Poisson(100 * to)`, and the offensive rebounds are
//! `Bin(missed field goals, oreb)` with the opponent collecting the rest.

use chrono::{Days, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use thiserror::Error;

use crate::dataset::{BoxScore, DataError, Dataset, MatchRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),
    #[error("invalid league spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

const FT_PCT: f64 = 0.76;

#[derive(Debug, Clone, PartialEq)]
pub struct LeagueSpec {
    /// Even, so every team plays in every round.
    pub team_count: usize,
    pub seasons: usize,
    /// Rounds per season; each team plays once per round.
    pub games_per_team: usize,
    pub strength_sd: f64,
    pub home_advantage: f64,
    /// Season-to-season strength correlation; 0 redraws every strength.
    pub season_carryover: f64,
    /// Strength random-walk step per round.
    pub drift_sd: f64,
    /// Scale of the box-score style and per-match offsets.
    pub factor_noise: f64,
    /// Outcome-noise multiplier per season; missing entries are 1.
    pub season_noise: Vec<f64>,
    pub seed: u64,
    pub start_year: i32,
}

impl Default for LeagueSpec {
    fn default() -> Self {
        Self {
            team_count: 30,
            seasons: 10,
            games_per_team: 82,
            strength_sd: 100.0,
            home_advantage: home_advantage_for_rate(0.5927),
            season_carryover: 1.0,
            drift_sd: 0.0,
            factor_noise: 1.0,
            season_noise: Vec::new(),
            seed: 42,
            start_year: 2004,
        }
    }
}

/// Home advantage giving home-win probability `rate` between equal teams.
pub fn home_advantage_for_rate(rate: f64) -> f64 {
    400.0 * (rate / (1.0 - rate)).log10()
}

/// Mean of `max(p, 1 - p)`: the accuracy of always picking the favourite.
pub fn bayes_accuracy(probabilities: &[f64]) -> f64 {
    probabilities.iter().map(|p| p.max(1.0 - p)).sum::<f64>() / probabilities.len() as f64
}

impl LeagueSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.team_count < 2 || !self.team_count.is_multiple_of(2) {
            return Err(SynthError::InfeasibleSchedule(format!(
                "team_count must be even and at least 2, got {}",
                self.team_count
            )));
        }
        let bad = |m: &str| Err(SynthError::InvalidSpec(m.to_string()));
        if self.seasons == 0 || self.games_per_team == 0 {
            return bad("seasons and games_per_team must be positive");
        }
        if !(self.strength_sd.is_finite() && self.strength_sd >= 0.0) {
            return bad("strength_sd must be finite and non-negative");
        }
        if !self.home_advantage.is_finite() {
            return bad("home_advantage must be finite");
        }
        if !(0.0..=1.0).contains(&self.season_carryover) {
            return bad("season_carryover must lie in [0, 1]");
        }
        if !(self.drift_sd.is_finite() && self.drift_sd >= 0.0) {
            return bad("drift_sd must be finite and non-negative");
        }
        if !(self.factor_noise.is_finite() && self.factor_noise >= 0.0) {
            return bad("factor_noise must be finite and non-negative");
        }
        if self.season_noise.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("season_noise entries must be positive");
        }
        Ok(())
    }

    pub fn season_label(&self, season: usize) -> String {
        let y = self.start_year + season as i32;
        format!("{}-{}", y, y + 1)
    }

    pub fn team_name(i: usize) -> String {
        format!("Team {:02}", i + 1)
    }
}

/// A generated league and the home-win probability of every match, indexed
/// like `dataset.matches()`.
#[derive(Debug, Clone, PartialEq)]
pub struct League {
    pub dataset: Dataset,
    pub probabilities: Vec<f64>,
}

impl League {
    pub fn bayes_accuracy(&self) -> f64 {
        bayes_accuracy(&self.probabilities)
    }
}

/// Circle-method double round robin: `2 (n - 1)` rounds of `n / 2` pairs
/// `(home, away)`; the second half mirrors the first.
fn round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let half = n - 1;
    let mut rounds = Vec::with_capacity(2 * half);
    for r in 0..half {
        let mut pairs = Vec::with_capacity(n / 2);
        for i in 0..n / 2 {
            let a = if i == 0 { n - 1 } else { (r + i) % half };
            let b = (r + half - i) % half;
            pairs.push(if (r + i) % 2 == 0 { (a, b) } else { (b, a) });
        }
        rounds.push(pairs);
    }
    let mirrored: Vec<_> = rounds
        .iter()
        .map(|p| p.iter().map(|&(h, a)| (a, h)).collect())
        .collect();
    rounds.extend(mirrored);
    rounds
}

struct FactorMeans {
    efg: f64,
    to: f64,
    oreb: f64,
    ft: f64,
}

fn unit_normals<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    std::array::from_fn(|_| normal.sample(rng))
}

fn factor_means(strength: f64, style: &[f64; 4], noise: f64, rng: &mut ChaCha8Rng) -> FactorMeans {
    let z = strength / 100.0;
    let v = unit_normals::<4>(rng);
    let e = |i: usize| noise * (style[i] + v[i]);
    FactorMeans {
        efg: (0.50 + 0.02 * z + 0.03 * e(0)).clamp(0.2, 0.8),
        to: (0.13 - 0.006 * z + 0.02 * e(1)).clamp(0.02, 0.3),
        oreb: (0.25 + 0.01 * z + 0.04 * e(2)).clamp(0.05, 0.6),
        ft: (0.20 + 0.01 * z + 0.04 * e(3)).clamp(0.02, 0.6),
    }
}

fn poisson(lambda: f64, rng: &mut ChaCha8Rng) -> u32 {
    Poisson::new(lambda.max(1e-9)).expect("positive rate").sample(rng) as u32
}

fn binomial(n: u32, p: f64, rng: &mut ChaCha8Rng) -> u32 {
    Binomial::new(u64::from(n), p.clamp(0.0, 1.0))
        .expect("probability in range")
        .sample(rng) as u32
}

/// Shooting, free throws and turnovers for one side; rebounds are filled in
/// once both sides' misses are known.
fn sample_side(f: &FactorMeans, rng: &mut ChaCha8Rng) -> BoxScore {
    let p2a = poisson(60.0, rng);
    let p3a = poisson(25.0, rng);
    let p2m = binomial(p2a, f.efg, rng);
    let p3m = binomial(p3a, f.efg / 1.5, rng);
    let fta = poisson(f64::from(p2a + p3a) * f.ft / FT_PCT, rng);
    let ftm = binomial(fta, FT_PCT, rng);
    let tov = poisson(100.0 * f.to, rng);
    BoxScore {
        p2a,
        p3a,
        fta,
        p2m,
        p3m,
        ftm,
        tov,
        ..BoxScore::default()
    }
}

fn rebound(own: &mut BoxScore, opp: &mut BoxScore, oreb_pct: f64, rng: &mut ChaCha8Rng) {
    let misses = own.p2a - own.p2m + own.p3a - own.p3m;
    own.oreb = binomial(misses, oreb_pct, rng);
    opp.dreb = misses - own.oreb;
}

pub fn generate(spec: &LeagueSpec) -> Result<League, SynthError> {
    spec.validate()?;
    // Strengths, schedule and results use stream 0 and box scores stream 1,
    // so box-score settings never change the results.
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut box_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    box_rng.set_stream(1);
    let n = spec.team_count;
    let strength_dist = Normal::new(0.0, spec.strength_sd).expect("validated sd");
    let drift = Normal::new(0.0, spec.drift_sd).expect("validated sd");
    let mut strength: Vec<f64> = (0..n).map(|_| strength_dist.sample(&mut rng)).collect();
    let names: Vec<String> = (0..n).map(LeagueSpec::team_name).collect();
    let schedule = round_robin(n);
    let carry = spec.season_carryover;
    let fresh = (1.0 - carry * carry).sqrt();

    let mut matches = Vec::new();
    let mut probabilities = Vec::new();
    for season in 0..spec.seasons {
        if season > 0 {
            for s in &mut strength {
                *s = carry * *s + fresh * strength_dist.sample(&mut rng);
            }
        }
        let style: Vec<[f64; 4]> = (0..n).map(|_| unit_normals::<4>(&mut box_rng)).collect();
        let divisor = 400.0 * spec.season_noise.get(season).copied().unwrap_or(1.0);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let start = NaiveDate::from_ymd_opt(spec.start_year + season as i32, 11, 1)
            .ok_or_else(|| SynthError::InvalidSpec("start_year out of range".into()))?;
        for round in 0..spec.games_per_team {
            let date = start + Days::new(round as u64);
            for &(h, a) in &schedule[round % schedule.len()] {
                let (h, a) = (order[h], order[a]);
                let edge = strength[h] - strength[a] + spec.home_advantage;
                let p = 1.0 / (1.0 + 10f64.powf(-edge / divisor));
                let home_win = rng.random::<f64>() < p;
                let fh = factor_means(strength[h], &style[h], spec.factor_noise, &mut box_rng);
                let fa = factor_means(strength[a], &style[a], spec.factor_noise, &mut box_rng);
                let mut home_box = sample_side(&fh, &mut box_rng);
                let mut away_box = sample_side(&fa, &mut box_rng);
                rebound(&mut home_box, &mut away_box, fh.oreb, &mut box_rng);
                rebound(&mut away_box, &mut home_box, fa.oreb, &mut box_rng);
                matches.push(MatchRecord {
                    season: spec.season_label(season),
                    match_index: 0,
                    date,
                    home_team: names[h].clone(),
                    away_team: names[a].clone(),
                    home_win,
                    home_box,
                    away_box,
                });
                probabilities.push(p);
            }
            if spec.drift_sd > 0.0 {
                for s in &mut strength {
                    *s += drift.sample(&mut rng);
                }
            }
        }
    }
    // Matches are generated in date order, so the stable sort keeps
    // `probabilities` aligned.
    let dataset = Dataset::new(matches)?;
    Ok(League {
        dataset,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn small() -> LeagueSpec {
        LeagueSpec {
            team_count: 6,
            seasons: 2,
            games_per_team: 10,
            ..Default::default()
        }
    }

    #[test]
    fn round_robin_is_a_double_round_robin() {
        for n in [2, 4, 6, 30] {
            let rounds = round_robin(n);
            assert_eq!(rounds.len(), 2 * (n - 1));
            let mut seen = BTreeMap::new();
            for r in &rounds {
                let mut teams: Vec<usize> = r.iter().flat_map(|&(h, a)| [h, a]).collect();
                teams.sort_unstable();
                assert_eq!(teams, (0..n).collect::<Vec<_>>());
                for &p in r {
                    *seen.entry(p).or_insert(0) += 1;
                }
            }
            assert_eq!(seen.len(), n * (n - 1));
            assert!(seen.values().all(|&c| c == 1));
        }
    }

    #[test]
    fn calibration_helper() {
        let ha = home_advantage_for_rate(0.5927);
        assert!((ha - 65.17).abs() < 0.01);
        assert_eq!(home_advantage_for_rate(0.5), 0.0);
    }

    #[test]
    fn bayes_accuracy_closed_form() {
        assert!((bayes_accuracy(&[0.7, 0.2, 0.5]) - (0.7 + 0.8 + 0.5) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn shape_and_determinism() {
        let a = generate(&small()).unwrap();
        assert_eq!(a.dataset.len(), 2 * 10 * 3);
        assert_eq!(a.probabilities.len(), a.dataset.len());
        assert_eq!(a.dataset.seasons(), vec!["2004-2005", "2005-2006"]);
        assert_eq!(a, generate(&small()).unwrap());
        let b = generate(&LeagueSpec { seed: 7, ..small() }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn factor_noise_leaves_results_unchanged() {
        let a = generate(&small()).unwrap();
        let b = generate(&LeagueSpec {
            factor_noise: 4.0,
            ..small()
        })
        .unwrap();
        assert_eq!(a.probabilities, b.probabilities);
        let results = |l: &League| l.dataset.matches().iter().map(|m| m.home_win).collect::<Vec<_>>();
        assert_eq!(results(&a), results(&b));
        assert_ne!(a.dataset, b.dataset);
    }

    #[test]
    fn odd_team_count_is_infeasible() {
        let spec = LeagueSpec {
            team_count: 5,
            ..small()
        };
        assert!(matches!(generate(&spec), Err(SynthError::InfeasibleSchedule(_))));
    }

    #[test]
    fn box_scores_are_consistent() {
        let league = generate(&small()).unwrap();
        for m in league.dataset.matches() {
            m.home_box.validate().unwrap();
            m.away_box.validate().unwrap();
            let home_misses = m.home_box.p2a - m.home_box.p2m + m.home_box.p3a - m.home_box.p3m;
            assert_eq!(m.home_box.oreb + m.away_box.dreb, home_misses);
            assert_eq!(m.home_box.poss, None);
        }
    }

    #[test]
    fn equal_strengths_without_home_advantage() {
        let spec = LeagueSpec {
            strength_sd: 0.0,
            home_advantage: 0.0,
            seasons: 4,
            ..Default::default()
        };
        let league = generate(&spec).unwrap();
        assert!(league.probabilities.iter().all(|&p| p == 0.5));
        let n = league.dataset.len() as f64;
        let rate = league.dataset.matches().iter().filter(|m| m.home_win).count() as f64 / n;
        assert!((rate - 0.5).abs() < 3.0 * (0.25 / n).sqrt());
    }

    #[test]
    fn full_carryover_keeps_strengths() {
        let spec = LeagueSpec {
            home_advantage: 0.0,
            ..small()
        };
        let league = generate(&spec).unwrap();
        let mut by_pair = BTreeMap::new();
        for (m, p) in league.dataset.matches().iter().zip(&league.probabilities) {
            let prev = by_pair.insert((m.home_team.clone(), m.away_team.clone()), *p);
            if let Some(prev) = prev {
                assert!((prev - p).abs() < 1e-12);
            }
        }
    }
}
