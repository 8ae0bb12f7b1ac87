//! Match data: records, loading, franchise normalisation, splits and
//! standardisation.

mod csv_io;
mod franchise;
mod split;
mod standardize;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use thiserror::Error;

use crate::features::FeatureMatrix;

pub use csv_io::{load_matches, read_matches, write_matches, MATCH_COLUMNS};
pub use franchise::{normalize_franchises, FranchiseMap};
pub use split::{split, Fold, Seasoned, SplitMode, SplitSpec};
pub use standardize::Standardizer;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("line {line}: duplicate match {date} {home} vs {away}")]
    Duplicate {
        line: u64,
        date: NaiveDate,
        home: String,
        away: String,
    },
    #[error("season {0} is not contiguous in chronological order")]
    SeasonNotContiguous(String),
    #[error("unknown team name {0:?} (no alias entry)")]
    UnknownTeam(String),
    #[error("seasons assigned to both train and test: {}", .0.join(", "))]
    OverlappingSeasons(Vec<String>),
    #[error("season {0} is assigned to neither train nor test")]
    UnassignedSeason(String),
    #[error("invalid split: {0}")]
    InvalidSplit(String),
    #[error("feature matrix is empty")]
    EmptyMatrix,
    #[error("column {0} is constant (zero standard deviation)")]
    ConstantColumn(String),
    #[error("expected {expected} feature columns, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("row {0} contains NA values")]
    NaPresent(usize),
}

/// Box-score counts for one side of a match.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoxScore {
    pub p2a: u32,
    pub p3a: u32,
    pub fta: u32,
    pub p2m: u32,
    pub p3m: u32,
    pub ftm: u32,
    pub oreb: u32,
    pub dreb: u32,
    pub tov: u32,
    /// Possessions when the source provides them; estimated otherwise.
    pub poss: Option<f64>,
}

impl BoxScore {
    pub fn validate(&self) -> Result<(), String> {
        if self.p2m > self.p2a {
            return Err(format!("p2m ({}) exceeds p2a ({})", self.p2m, self.p2a));
        }
        if self.p3m > self.p3a {
            return Err(format!("p3m ({}) exceeds p3a ({})", self.p3m, self.p3a));
        }
        if self.ftm > self.fta {
            return Err(format!("ftm ({}) exceeds fta ({})", self.ftm, self.fta));
        }
        if let Some(p) = self.poss {
            if !p.is_finite() || p < 0.0 {
                return Err(format!("poss ({p}) must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn field_goal_attempts(&self) -> u32 {
        self.p2a + self.p3a
    }

    /// Possessions: the provided value, or `FGA + 0.44 FTA - OREB + TOV`
    /// clamped at zero.
    pub fn possessions(&self) -> f64 {
        if let Some(p) = self.poss {
            return p;
        }
        let est = f64::from(self.field_goal_attempts()) + 0.44 * f64::from(self.fta)
            - f64::from(self.oreb)
            + f64::from(self.tov);
        if est < 0.0 {
            log::warn!("negative possession estimate {est:.2} clamped to 0");
            0.0
        } else {
            est
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub season: String,
    /// Position in the chronologically sorted dataset.
    pub match_index: usize,
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    pub home_win: bool,
    pub home_box: BoxScore,
    pub away_box: BoxScore,
}

impl MatchRecord {
    pub fn label(&self) -> u8 {
        u8::from(self.home_win)
    }
}

/// Chronologically ordered matches.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    matches: Vec<MatchRecord>,
    teams: BTreeSet<String>,
}

impl Dataset {
    /// Sorts `matches` by date (stable, so same-day file order is kept),
    /// reassigns `match_index` and checks that every season is a contiguous
    /// block.
    pub fn new(mut matches: Vec<MatchRecord>) -> Result<Self, DataError> {
        matches.sort_by_key(|m| m.date);
        let mut seen = BTreeSet::new();
        let mut current: Option<&str> = None;
        for m in &matches {
            if current != Some(m.season.as_str()) {
                if !seen.insert(m.season.as_str()) {
                    return Err(DataError::SeasonNotContiguous(m.season.clone()));
                }
                current = Some(m.season.as_str());
            }
        }
        for (i, m) in matches.iter_mut().enumerate() {
            m.match_index = i;
        }
        let teams = matches
            .iter()
            .flat_map(|m| [m.home_team.clone(), m.away_team.clone()])
            .collect();
        Ok(Self { matches, teams })
    }

    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn teams(&self) -> &BTreeSet<String> {
        &self.teams
    }

    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// Season labels in chronological order.
    pub fn seasons(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for m in &self.matches {
            if out.last() != Some(&m.season.as_str()) {
                out.push(&m.season);
            }
        }
        out
    }

    pub fn into_matches(self) -> Vec<MatchRecord> {
        self.matches
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomeWinRates {
    /// `(season, percentage)` in chronological order.
    pub per_season: Vec<(String, f64)>,
    pub overall: f64,
}

/// Percentage of home victories per season and overall.
pub fn home_win_rate_by_season(d: &Dataset) -> HomeWinRates {
    let mut per_season: Vec<(String, usize, usize)> = Vec::new();
    for m in d.matches() {
        match per_season.last_mut() {
            Some((s, wins, n)) if *s == m.season => {
                *wins += usize::from(m.home_win);
                *n += 1;
            }
            _ => per_season.push((m.season.clone(), usize::from(m.home_win), 1)),
        }
    }
    let wins: usize = per_season.iter().map(|(_, w, _)| w).sum();
    let overall = if d.is_empty() {
        f64::NAN
    } else {
        100.0 * wins as f64 / d.len() as f64
    };
    HomeWinRates {
        per_season: per_season
            .into_iter()
            .map(|(s, w, n)| (s, 100.0 * w as f64 / n as f64))
            .collect(),
        overall,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropReport {
    pub kept: usize,
    pub dropped: usize,
}

/// Removes rows with any NA feature value.
pub fn drop_na_rows(m: FeatureMatrix) -> (FeatureMatrix, DropReport) {
    let total = m.rows.len();
    let FeatureMatrix { columns, rows } = m;
    let rows: Vec<_> = rows.into_iter().filter(|r| !r.has_na()).collect();
    let report = DropReport {
        kept: rows.len(),
        dropped: total - rows.len(),
    };
    if report.kept == 0 && total > 0 {
        log::warn!("every one of {total} rows contains NA values; matrix is now empty");
    } else if report.dropped > 0 {
        log::info!("dropped {} of {} rows with NA values", report.dropped, total);
    }
    (FeatureMatrix { columns, rows }, report)
}


#[cfg(test)]
mod tests {
    use super::test_util::record;
    use super::*;
    use crate::features::FeatureRow;

    #[test]
    fn possessions_estimator() {
        let b = BoxScore {
            p2a: 60,
            p3a: 20,
            fta: 25,
            oreb: 10,
            tov: 12,
            ..Default::default()
        };
        assert!((b.possessions() - 93.0).abs() < 1e-12);
        let given = BoxScore {
            poss: Some(98.0),
            ..b
        };
        assert_eq!(given.possessions(), 98.0);
        assert_eq!(BoxScore::default().possessions(), 0.0);
        let negative = BoxScore {
            oreb: 5,
            ..Default::default()
        };
        assert_eq!(negative.possessions(), 0.0);
    }

    #[test]
    fn box_score_invariants() {
        let mut b = test_util::box_score(60, 20, 25, 10, 12);
        assert!(b.validate().is_ok());
        b.ftm = 26;
        assert!(b.validate().unwrap_err().contains("ftm"));
    }

    #[test]
    fn dataset_sorts_and_reindexes() {
        let d = Dataset::new(vec![
            record("s1", 3, "A", "B", true),
            record("s1", 1, "B", "C", false),
            record("s1", 2, "C", "A", true),
        ])
        .unwrap();
        let days: Vec<_> = d.matches().iter().map(|m| m.home_team.as_str()).collect();
        assert_eq!(days, ["B", "C", "A"]);
        assert!(d.matches().iter().enumerate().all(|(i, m)| m.match_index == i));
        assert_eq!(d.teams().len(), 3);
    }

    #[test]
    fn interleaved_seasons_are_rejected() {
        let err = Dataset::new(vec![
            record("s1", 1, "A", "B", true),
            record("s2", 2, "A", "B", true),
            record("s1", 3, "A", "B", true),
        ])
        .unwrap_err();
        assert!(matches!(err, DataError::SeasonNotContiguous(s) if s == "s1"));
    }

    #[test]
    fn home_win_rates() {
        let d = Dataset::new(vec![
            record("s1", 1, "A", "B", true),
            record("s1", 2, "B", "A", true),
            record("s2", 3, "A", "B", true),
            record("s2", 4, "B", "A", false),
        ])
        .unwrap();
        let r = home_win_rate_by_season(&d);
        assert_eq!(r.per_season, vec![("s1".into(), 100.0), ("s2".into(), 50.0)]);
        assert_eq!(r.overall, 75.0);
    }

    fn row(i: usize, values: Vec<Option<f64>>) -> FeatureRow {
        FeatureRow {
            match_index: i,
            season: "s".into(),
            label: 1,
            values,
        }
    }

    #[test]
    fn drop_na_identity_and_degenerate() {
        let m = FeatureMatrix {
            columns: vec!["x".into()],
            rows: vec![row(0, vec![Some(1.0)]), row(1, vec![Some(2.0)])],
        };
        let (out, rep) = drop_na_rows(m.clone());
        assert_eq!(out, m);
        assert_eq!(rep, DropReport { kept: 2, dropped: 0 });

        let all_na = FeatureMatrix {
            columns: vec!["x".into()],
            rows: vec![row(0, vec![None]), row(1, vec![None])],
        };
        let (out, rep) = drop_na_rows(all_na);
        assert!(out.rows.is_empty());
        assert_eq!(rep.dropped, 2);
    }
}
