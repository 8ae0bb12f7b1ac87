//! Elo ratings with home advantage, generalised prize/penalty adjustments
//! and season regression to the mean.
//!
//! The home side's win probability is
//!
//! ```text
//! p_home = 1 / (1 + 10^(-(R_home - R_away + HA + adj_home - adj_away) / D))
//! ```
//!
//! where `adj = advantage - disadvantage` for each side, `HA` is the home
//! advantage in rating points and `D` the logistic divisor (400). The away
//! probability is its complement. After the match, each side moves by
//! `K * (result - expected)`, so the pair's rating sum is conserved.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::dataset::{Dataset, MatchRecord};
use crate::features::Periodicity;

#[derive(Debug, Error, PartialEq)]
pub enum EloError {
    #[error("invalid Elo configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite input to Elo computation")]
    NonFinite,
    #[error("team {0:?} is not in the ledger")]
    UnknownTeam(String),
    #[error("season rollover requested before any match was played")]
    RolloverBeforePlay,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EloConfig {
    pub initial_rating: f64,
    pub logistic_divisor: f64,
    pub k: f64,
    pub home_advantage: f64,
    /// Share of the way each rating moves toward the grand mean at a
    /// season boundary.
    pub regression_pct: f64,
    /// Keep separate home-only and away-only ratings per team.
    pub court_split: bool,
}

impl Default for EloConfig {
    fn default() -> Self {
        Self {
            initial_rating: 1300.0,
            logistic_divisor: 400.0,
            k: 30.0,
            home_advantage: 40.0,
            regression_pct: 0.2,
            court_split: false,
        }
    }
}

impl EloConfig {
    pub fn validate(&self) -> Result<(), EloError> {
        let finite = [
            self.initial_rating,
            self.logistic_divisor,
            self.k,
            self.home_advantage,
            self.regression_pct,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(EloError::InvalidConfig("all parameters must be finite".into()));
        }
        if self.logistic_divisor <= 0.0 {
            return Err(EloError::InvalidConfig("logistic divisor must be positive".into()));
        }
        if self.k <= 0.0 {
            return Err(EloError::InvalidConfig("K must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.regression_pct) {
            return Err(EloError::InvalidConfig("regression_pct must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Extra rating points for one side of a match: a prize for known
/// advantages and a penalty for known disadvantages.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Adjustments {
    pub advantage: f64,
    pub disadvantage: f64,
}

impl Adjustments {
    pub const NONE: Self = Self {
        advantage: 0.0,
        disadvantage: 0.0,
    };

    fn net(&self) -> f64 {
        self.advantage - self.disadvantage
    }
}

fn logistic(points: f64, divisor: f64) -> f64 {
    1.0 / (1.0 + 10f64.powf(-points / divisor))
}

/// Win probabilities `(home, away)`.
pub fn win_probability(
    r_home: f64,
    r_away: f64,
    cfg: &EloConfig,
    adj_home: Adjustments,
    adj_away: Adjustments,
) -> Result<(f64, f64), EloError> {
    let inputs = [
        r_home,
        r_away,
        adj_home.advantage,
        adj_home.disadvantage,
        adj_away.advantage,
        adj_away.disadvantage,
    ];
    if !inputs.iter().all(|v| v.is_finite()) {
        return Err(EloError::NonFinite);
    }
    let edge = r_home - r_away + cfg.home_advantage + adj_home.net() - adj_away.net();
    Ok((
        logistic(edge, cfg.logistic_divisor),
        logistic(-edge, cfg.logistic_divisor),
    ))
}

/// Post-match ratings `(home, away)`.
pub fn update_ratings(
    r_home: f64,
    r_away: f64,
    home_win: bool,
    cfg: &EloConfig,
    adj_home: Adjustments,
    adj_away: Adjustments,
) -> Result<(f64, f64), EloError> {
    let (p_home, p_away) = win_probability(r_home, r_away, cfg, adj_home, adj_away)?;
    let s = if home_win { 1.0 } else { 0.0 };
    Ok((
        r_home + cfg.k * (s - p_home),
        r_away + cfg.k * ((1.0 - s) - p_away),
    ))
}

/// Which of a team's ratings an event or lookup refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CourtFilter {
    All,
    Home,
    Away,
}

impl CourtFilter {
    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CourtFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CourtFilter::All => "all",
            CourtFilter::Home => "home",
            CourtFilter::Away => "away",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingEvent {
    pub match_index: usize,
    pub team: String,
    pub court: CourtFilter,
    pub pre: f64,
    pub post: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Track {
    ratings: BTreeMap<String, f64>,
    history: BTreeMap<String, Vec<f64>>,
    post_sum: f64,
    post_count: usize,
}

impl Track {
    fn new<'a>(teams: impl Iterator<Item = &'a String>, initial: f64) -> Self {
        let ratings: BTreeMap<_, _> = teams.map(|t| (t.clone(), initial)).collect();
        let history = ratings.keys().map(|t| (t.clone(), Vec::new())).collect();
        Self {
            ratings,
            history,
            post_sum: 0.0,
            post_count: 0,
        }
    }

    fn rating(&self, team: &str) -> Result<f64, EloError> {
        self.ratings
            .get(team)
            .copied()
            .ok_or_else(|| EloError::UnknownTeam(team.to_string()))
    }

    fn record(&mut self, team: &str, post: f64) {
        self.ratings.insert(team.to_string(), post);
        self.history.entry(team.to_string()).or_default().push(post);
        self.post_sum += post;
        self.post_count += 1;
    }

    fn grand_mean(&self) -> Option<f64> {
        (self.post_count > 0).then(|| self.post_sum / self.post_count as f64)
    }

    fn regress(&mut self, p: f64) {
        if let Some(mean) = self.grand_mean() {
            for r in self.ratings.values_mut() {
                *r = (1.0 - p) * *r + p * mean;
            }
        }
    }
}

/// Current ratings, post-match history and running grand mean for every
/// team, optionally split into home-only and away-only ledgers.
#[derive(Debug, Clone, PartialEq)]
pub struct EloLedger {
    cfg: EloConfig,
    tracks: [Track; 3],
    events: Vec<RatingEvent>,
    matches_played: usize,
}

impl EloLedger {
    pub fn new<'a, I>(teams: I, cfg: EloConfig) -> Result<Self, EloError>
    where
        I: IntoIterator<Item = &'a String>,
        I::IntoIter: Clone,
    {
        cfg.validate()?;
        let teams = teams.into_iter();
        let track = |on: bool| {
            if on {
                Track::new(teams.clone(), cfg.initial_rating)
            } else {
                Track::default()
            }
        };
        Ok(Self {
            tracks: [track(true), track(cfg.court_split), track(cfg.court_split)],
            cfg,
            events: Vec::new(),
            matches_played: 0,
        })
    }

    pub fn config(&self) -> &EloConfig {
        &self.cfg
    }

    pub fn rating(&self, team: &str, court: CourtFilter) -> Option<f64> {
        self.tracks[court.slot()].ratings.get(team).copied()
    }

    /// Post-match ratings in chronological order.
    pub fn history(&self, team: &str, court: CourtFilter) -> &[f64] {
        self.tracks[court.slot()]
            .history
            .get(team)
            .map_or(&[], Vec::as_slice)
    }

    /// Mean of every post-match rating recorded so far on a track.
    pub fn grand_mean(&self, court: CourtFilter) -> Option<f64> {
        self.tracks[court.slot()].grand_mean()
    }

    pub fn ratings(&self, court: CourtFilter) -> impl Iterator<Item = (&str, f64)> {
        self.tracks[court.slot()]
            .ratings
            .iter()
            .map(|(t, r)| (t.as_str(), *r))
    }

    pub fn events(&self) -> &[RatingEvent] {
        &self.events
    }

    pub fn matches_played(&self) -> usize {
        self.matches_played
    }

    /// The filters read for the home and away side of a match.
    fn sides(&self) -> (CourtFilter, CourtFilter) {
        if self.cfg.court_split {
            (CourtFilter::Home, CourtFilter::Away)
        } else {
            (CourtFilter::All, CourtFilter::All)
        }
    }

    pub fn apply_match(
        &mut self,
        m: &MatchRecord,
        adj_home: Adjustments,
        adj_away: Adjustments,
    ) -> Result<(), EloError> {
        let mut filters = vec![(CourtFilter::All, CourtFilter::All)];
        if self.cfg.court_split {
            filters.push((CourtFilter::Home, CourtFilter::Away));
        }
        for (hf, af) in filters {
            let pre_home = self.tracks[hf.slot()].rating(&m.home_team)?;
            let pre_away = self.tracks[af.slot()].rating(&m.away_team)?;
            let (post_home, post_away) =
                update_ratings(pre_home, pre_away, m.home_win, &self.cfg, adj_home, adj_away)?;
            self.tracks[hf.slot()].record(&m.home_team, post_home);
            self.tracks[af.slot()].record(&m.away_team, post_away);
            for (team, court, pre, post) in [
                (&m.home_team, hf, pre_home, post_home),
                (&m.away_team, af, pre_away, post_away),
            ] {
                self.events.push(RatingEvent {
                    match_index: m.match_index,
                    team: team.clone(),
                    court,
                    pre,
                    post,
                });
            }
        }
        self.matches_played += 1;
        Ok(())
    }

    /// Moves every rating a share `regression_pct` of the way toward the
    /// grand mean of all post-match ratings on its track.
    pub fn season_rollover(&mut self) -> Result<(), EloError> {
        if self.matches_played == 0 {
            return Err(EloError::RolloverBeforePlay);
        }
        let p = self.cfg.regression_pct;
        for track in &mut self.tracks {
            track.regress(p);
        }
        Ok(())
    }

    /// Elo feature for `m` from the current (pre-match) state, home minus
    /// away. Historical mode uses current ratings; dynamic mode uses each
    /// team's mean of its last `depth` post-match ratings and is `None`
    /// while either team has fewer than `depth` of them.
    pub fn feature(&self, m: &MatchRecord, periodicity: Periodicity, depth: usize) -> Option<f64> {
        let (hf, af) = self.sides();
        match periodicity {
            Periodicity::Historical => {
                Some(self.rating(&m.home_team, hf)? - self.rating(&m.away_team, af)?)
            }
            Periodicity::Dynamic => {
                let recent = |team: &str, court| {
                    let h = self.history(team, court);
                    (depth > 0 && h.len() >= depth)
                        .then(|| h[h.len() - depth..].iter().sum::<f64>() / depth as f64)
                };
                Some(recent(&m.home_team, hf)? - recent(&m.away_team, af)?)
            }
        }
    }

    /// Writes `match_index,team,court_filter,pre_rating,post_rating`.
    pub fn write_history_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["match_index", "team", "court_filter", "pre_rating", "post_rating"])?;
        for e in &self.events {
            w.write_record([
                e.match_index.to_string(),
                e.team.clone(),
                e.court.to_string(),
                e.pre.to_string(),
                e.post.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Replays the whole dataset, rolling ratings over at every season change.
pub fn replay(d: &Dataset, cfg: &EloConfig) -> Result<EloLedger, EloError> {
    replay_with(d, cfg, |_, _| {})
}

/// Like [`replay`], calling `before_match` with the pre-match ledger state
/// for every match.
pub fn replay_with<F>(d: &Dataset, cfg: &EloConfig, mut before_match: F) -> Result<EloLedger, EloError>
where
    F: FnMut(&EloLedger, &MatchRecord),
{
    let mut ledger = EloLedger::new(d.teams(), cfg.clone())?;
    let mut season: Option<&str> = None;
    for m in d.matches() {
        if season.is_some_and(|s| s != m.season) {
            ledger.season_rollover()?;
        }
        season = Some(&m.season);
        before_match(&ledger, m);
        ledger.apply_match(m, Adjustments::NONE, Adjustments::NONE)?;
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::record;
    use proptest::prelude::*;

    fn cfg(k: f64, ha: f64) -> EloConfig {
        EloConfig {
            k,
            home_advantage: ha,
            regression_pct: 0.0,
            ..Default::default()
        }
    }

    const NONE: Adjustments = Adjustments::NONE;

    #[test]
    fn equal_ratings_are_even() {
        let (p1, p2) = win_probability(1300.0, 1300.0, &cfg(30.0, 0.0), NONE, NONE).unwrap();
        assert_eq!((p1, p2), (0.5, 0.5));
    }

    #[test]
    fn hundred_point_edge() {
        // 1 / (1 + 10^(-1/4))
        let (p1, _) = win_probability(1500.0, 1400.0, &cfg(30.0, 0.0), NONE, NONE).unwrap();
        assert!((p1 - 0.6400649998028851).abs() < 1e-12);
        let (h, a) = win_probability(1300.0, 1300.0, &cfg(30.0, 100.0), NONE, NONE).unwrap();
        assert_eq!((h * 100.0).round() / 100.0, 0.64);
        assert_eq!((a * 100.0).round() / 100.0, 0.36);
    }

    #[test]
    fn adjustments_shift_like_rating_points() {
        let adj = Adjustments {
            advantage: 30.0,
            disadvantage: 10.0,
        };
        let with_adj = win_probability(1300.0, 1300.0, &cfg(30.0, 0.0), adj, NONE).unwrap();
        let with_points = win_probability(1320.0, 1300.0, &cfg(30.0, 0.0), NONE, NONE).unwrap();
        assert_eq!(with_adj, with_points);
        let away_adj = win_probability(1300.0, 1300.0, &cfg(30.0, 0.0), NONE, adj).unwrap();
        assert!((away_adj.1 - with_points.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            win_probability(f64::NAN, 1300.0, &cfg(30.0, 0.0), NONE, NONE),
            Err(EloError::NonFinite)
        );
    }

    #[test]
    fn update_examples() {
        let (a, b) = update_ratings(1500.0, 1400.0, true, &cfg(5.0, 0.0), NONE, NONE).unwrap();
        assert_eq!((a.round(), b.round()), (1502.0, 1398.0));
        let (a, b) = update_ratings(1500.0, 1400.0, false, &cfg(50.0, 0.0), NONE, NONE).unwrap();
        assert_eq!((a.round(), b.round()), (1468.0, 1432.0));
        let (a, b) = update_ratings(1300.0, 1300.0, true, &cfg(30.0, 50.0), NONE, NONE).unwrap();
        assert!((a - 1312.86).abs() < 0.005 && (b - 1287.14).abs() < 0.005);
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            EloConfig { k: 0.0, ..Default::default() },
            EloConfig { logistic_divisor: -1.0, ..Default::default() },
            EloConfig { regression_pct: 1.5, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(EloError::InvalidConfig(_))));
        }
    }

    fn two_team_dataset() -> Dataset {
        Dataset::new(vec![record("s1", 1, "A", "B", true)]).unwrap()
    }

    #[test]
    fn first_match_starts_at_initial_rating() {
        let mut seen = Vec::new();
        let ledger = replay_with(&two_team_dataset(), &cfg(30.0, 0.0), |l, m| {
            seen.push((
                l.rating(&m.home_team, CourtFilter::All),
                l.rating(&m.away_team, CourtFilter::All),
            ));
        })
        .unwrap();
        assert_eq!(seen, vec![(Some(1300.0), Some(1300.0))]);
        assert_eq!(ledger.rating("A", CourtFilter::All), Some(1315.0));
        assert_eq!(ledger.rating("B", CourtFilter::All), Some(1285.0));
    }

    #[test]
    fn rollover_regresses_toward_grand_mean() {
        let teams = ["A".to_string(), "B".to_string()];
        let mut ledger = EloLedger::new(&teams, EloConfig { regression_pct: 1.0, ..cfg(30.0, 0.0) }).unwrap();
        assert_eq!(ledger.season_rollover(), Err(EloError::RolloverBeforePlay));
        let m = record("s1", 1, "A", "B", true);
        ledger.apply_match(&m, NONE, NONE).unwrap();
        assert_eq!(ledger.grand_mean(CourtFilter::All), Some(1300.0));
        ledger.season_rollover().unwrap();
        assert_eq!(ledger.rating("A", CourtFilter::All), Some(1300.0));
        assert_eq!(ledger.rating("B", CourtFilter::All), Some(1300.0));
    }

    #[test]
    fn partial_regression() {
        // 0.8 * 1500 + 0.2 * 1300
        let mut track = Track {
            ratings: BTreeMap::from([("A".to_string(), 1500.0)]),
            post_sum: 2600.0,
            post_count: 2,
            ..Default::default()
        };
        track.regress(0.2);
        assert!((track.ratings["A"] - 1460.0).abs() < 1e-9);
        track.regress(0.0);
        assert!((track.ratings["A"] - 1460.0).abs() < 1e-9);
    }

    #[test]
    fn court_split_reads_home_and_away_ledgers() {
        let d = Dataset::new(vec![
            record("s1", 1, "A", "B", true),
            record("s1", 2, "B", "A", true),
        ])
        .unwrap();
        let c = EloConfig { court_split: true, ..cfg(30.0, 0.0) };
        let mut features = Vec::new();
        let ledger = replay_with(&d, &c, |l, m| features.push(l.feature(m, Periodicity::Historical, 1))).unwrap();
        // Match 2: B's home ledger and A's away ledger are untouched.
        assert_eq!(features, vec![Some(0.0), Some(0.0)]);
        assert_eq!(ledger.rating("A", CourtFilter::Home), Some(1315.0));
        assert_eq!(ledger.rating("A", CourtFilter::Away), Some(1285.0));
        assert_eq!(ledger.history("A", CourtFilter::Home), &[1315.0]);
        let p_a = win_probability(1285.0, 1315.0, &c, NONE, NONE).unwrap().1;
        assert_eq!(ledger.rating("A", CourtFilter::All), Some(1315.0 - 30.0 * p_a));
    }

    #[test]
    fn dynamic_feature_needs_depth() {
        let teams = ["A".to_string(), "B".to_string(), "C".to_string()];
        let mut ledger = EloLedger::new(&teams, cfg(30.0, 0.0)).unwrap();
        let m = record("s1", 5, "A", "C", true);
        assert_eq!(ledger.feature(&m, Periodicity::Dynamic, 2), None);
        ledger.apply_match(&record("s1", 1, "A", "B", true), NONE, NONE).unwrap();
        ledger.apply_match(&record("s1", 2, "C", "B", true), NONE, NONE).unwrap();
        assert_eq!(ledger.feature(&m, Periodicity::Dynamic, 2), None);
        let c_post = 1300.0 + 30.0 * (1.0 - win_probability(1300.0, 1285.0, &cfg(30.0, 0.0), NONE, NONE).unwrap().0);
        assert_eq!(ledger.feature(&m, Periodicity::Dynamic, 1), Some(1315.0 - c_post));
        assert_eq!(ledger.feature(&m, Periodicity::Historical, 2), Some(1315.0 - c_post));
    }

    #[test]
    fn dynamic_feature_is_rolling_mean_of_post_ratings() {
        let teams = ["A".to_string(), "B".to_string()];
        let mut ledger = EloLedger::new(&teams, cfg(30.0, 0.0)).unwrap();
        ledger.tracks[0].history.insert("A".into(), vec![1290.0, 1310.0, 1320.0]);
        ledger.tracks[0].history.insert("B".into(), vec![1300.0, 1300.0]);
        let m = record("s1", 1, "A", "B", true);
        assert_eq!(ledger.feature(&m, Periodicity::Dynamic, 2), Some(15.0));
    }

    #[test]
    fn history_csv_header() {
        let ledger = replay(&two_team_dataset(), &cfg(30.0, 0.0)).unwrap();
        let mut buf = Vec::new();
        ledger.write_history_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("match_index,team,court_filter,pre_rating,post_rating"));
        assert_eq!(lines.next(), Some("0,A,all,1300,1315"));
        assert_eq!(lines.next(), Some("0,B,all,1300,1285"));
    }

    proptest! {
        #[test]
        fn probabilities_are_normalised(r1 in 0.0f64..3000.0, r2 in 0.0f64..3000.0, ha in -200.0f64..200.0,
                                        a1 in -100.0f64..100.0, b1 in 0.0f64..100.0, a2 in -100.0f64..100.0, b2 in 0.0f64..100.0) {
            let c = cfg(30.0, ha);
            let (p1, p2) = win_probability(r1, r2, &c,
                Adjustments { advantage: a1, disadvantage: b1 },
                Adjustments { advantage: a2, disadvantage: b2 }).unwrap();
            prop_assert!(p1 > 0.0 && p1 < 1.0 && p2 > 0.0 && p2 < 1.0);
            prop_assert!((p1 + p2 - 1.0).abs() < 1e-12);
        }

        #[test]
        fn updates_conserve_sum(r1 in 800.0f64..2000.0, r2 in 800.0f64..2000.0, win in any::<bool>(), k in 1.0f64..80.0, ha in 0.0f64..150.0) {
            let (a, b) = update_ratings(r1, r2, win, &cfg(k, ha), NONE, NONE).unwrap();
            prop_assert!((a + b - r1 - r2).abs() < 1e-9);
        }

        #[test]
        fn probability_is_monotone(r1 in 800.0f64..2000.0, r2 in 800.0f64..2000.0, step in 1.0f64..50.0, ha in 0.0f64..150.0) {
            let p = |x: f64, h: f64| win_probability(x, r2, &cfg(30.0, h), NONE, NONE).unwrap().0;
            prop_assert!(p(r1 + step, ha) > p(r1, ha));
            prop_assert!(p(r1, ha + step) > p(r1, ha));
        }
    }
}
