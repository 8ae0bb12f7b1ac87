//! Ex-ante features: Elo difference, win-frequency difference and the Four
//! Factors, in historical or rolling-window form and optionally split by
//! court.
//!
//! Every feature for match `g` is computed from matches strictly before `g`.

mod four_factors;
mod window;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use thiserror::Error;

use crate::dataset::{DataError, Dataset, MatchRecord};
use crate::elo::{self, EloConfig, EloError};

pub use crate::elo::CourtFilter as View;
pub use four_factors::{four_factors, possessions_estimate, FourFactors};
pub use window::{windowed_mean, TeamHistory};

#[derive(Debug, Error, PartialEq)]
pub enum FeatureError {
    #[error("invalid feature spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Elo(#[from] EloError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureFamily {
    Elo,
    Diff,
    FourFactors,
}

impl FeatureFamily {
    pub fn width(self) -> usize {
        match self {
            FeatureFamily::Elo | FeatureFamily::Diff => 1,
            FeatureFamily::FourFactors => 8,
        }
    }
}

impl fmt::Display for FeatureFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureFamily::Elo => "elo",
            FeatureFamily::Diff => "diff",
            FeatureFamily::FourFactors => "four_factors",
        })
    }
}

impl FromStr for FeatureFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "elo" => Ok(Self::Elo),
            "diff" => Ok(Self::Diff),
            "four_factors" | "four-factors" | "ff" => Ok(Self::FourFactors),
            _ => Err(format!("unknown feature family {s:?} (elo, diff, four_factors)")),
        }
    }
}

/// Historical averages over all prior matches; dynamic over the last `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Periodicity {
    Historical,
    Dynamic,
}

impl fmt::Display for Periodicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Periodicity::Historical => "historical",
            Periodicity::Dynamic => "dynamic",
        })
    }
}

impl FromStr for Periodicity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "historical" => Ok(Self::Historical),
            "dynamic" => Ok(Self::Dynamic),
            _ => Err(format!("unknown periodicity {s:?} (historical, dynamic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSpec {
    pub family: FeatureFamily,
    pub periodicity: Periodicity,
    /// Pair the home team's home-only statistic with the away team's
    /// away-only statistic.
    pub court_split: bool,
    pub depth: usize,
    /// Regression to the mean at season boundaries. Applies to historical
    /// features and to Elo ratings.
    pub regression_pct: f64,
    /// Also regress dynamic windows at season boundaries.
    pub dynamic_regression: bool,
    /// Elo parameters; `court_split` and `regression_pct` above take
    /// precedence over the copies in here.
    pub elo: EloConfig,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        Self {
            family: FeatureFamily::Elo,
            periodicity: Periodicity::Dynamic,
            court_split: false,
            depth: 2,
            regression_pct: 0.2,
            dynamic_regression: false,
            elo: EloConfig::default(),
        }
    }
}

impl FeatureSpec {
    pub fn elo_config(&self) -> EloConfig {
        EloConfig {
            court_split: self.court_split,
            regression_pct: self.regression_pct,
            ..self.elo.clone()
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.depth == 0 {
            return Err(FeatureError::InvalidSpec("depth must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.regression_pct) {
            return Err(FeatureError::InvalidSpec("regression_pct must lie in [0, 1]".into()));
        }
        if self.family == FeatureFamily::Elo {
            self.elo_config().validate()?;
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        match self.family {
            FeatureFamily::Elo => vec!["elo_diff".into()],
            FeatureFamily::Diff => vec!["diff".into()],
            FeatureFamily::FourFactors => ["ht", "at"]
                .iter()
                .flat_map(|side| FourFactors::NAMES.iter().map(move |n| format!("{n}_{side}")))
                .collect(),
        }
    }

    fn views(&self) -> (View, View) {
        if self.court_split {
            (View::Home, View::Away)
        } else {
            (View::All, View::All)
        }
    }

    fn dynamic_rollover_depth(&self) -> Option<usize> {
        (self.periodicity == Periodicity::Dynamic && self.dynamic_regression).then_some(self.depth)
    }
}

/// One match's features. `None` marks an undefined (NA) value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub match_index: usize,
    pub season: String,
    pub label: u8,
    pub values: Vec<Option<f64>>,
}

impl FeatureRow {
    pub fn has_na(&self) -> bool {
        self.values.iter().any(Option::is_none)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn labels(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn seasons(&self) -> Vec<&str> {
        self.rows.iter().map(|r| r.season.as_str()).collect()
    }

    /// Dense feature rows; fails on the first NA.
    pub fn dense(&self) -> Result<Vec<Vec<f64>>, DataError> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.values
                    .iter()
                    .map(|v| v.ok_or(DataError::NaPresent(i)))
                    .collect()
            })
            .collect()
    }

    /// Writes `match_index,season,label,<columns>` with NA as an empty field.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let header = ["match_index", "season", "label"]
            .into_iter()
            .map(String::from)
            .chain(self.columns.iter().cloned());
        w.write_record(header)?;
        for r in &self.rows {
            let head = [r.match_index.to_string(), r.season.clone(), r.label.to_string()];
            let vals = r.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default());
            w.write_record(head.into_iter().chain(vals))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `diff` for `m` from the win-indicator history before it.
pub fn diff_feature(wins: &TeamHistory, m: &MatchRecord, spec: &FeatureSpec) -> Option<f64> {
    let (hv, av) = spec.views();
    let home = wins.value(&m.home_team, hv, spec.periodicity, spec.depth)?;
    let away = wins.value(&m.away_team, av, spec.periodicity, spec.depth)?;
    Some(home - away)
}

/// Builds one feature row per match, in chronological order.
pub fn build_feature_matrix(d: &Dataset, spec: &FeatureSpec) -> Result<FeatureMatrix, FeatureError> {
    spec.validate()?;
    let values = match spec.family {
        FeatureFamily::Elo => elo_rows(d, spec)?,
        FeatureFamily::Diff => diff_rows(d, spec),
        FeatureFamily::FourFactors => four_factor_rows(d, spec),
    };
    let rows = d
        .matches()
        .iter()
        .zip(values)
        .map(|(m, values)| FeatureRow {
            match_index: m.match_index,
            season: m.season.clone(),
            label: m.label(),
            values,
        })
        .collect();
    Ok(FeatureMatrix {
        columns: spec.column_names(),
        rows,
    })
}

fn elo_rows(d: &Dataset, spec: &FeatureSpec) -> Result<Vec<Vec<Option<f64>>>, EloError> {
    let mut out = Vec::with_capacity(d.len());
    elo::replay_with(d, &spec.elo_config(), |ledger, m| {
        out.push(vec![ledger.feature(m, spec.periodicity, spec.depth)]);
    })?;
    Ok(out)
}

/// Calls `row` for each match with rollovers applied at season changes,
/// then `record` to append the match's own values.
fn chronological_fold<S>(
    d: &Dataset,
    spec: &FeatureSpec,
    state: &mut S,
    rollover: impl Fn(&mut S, f64, Option<usize>),
    mut row: impl FnMut(&S, &MatchRecord) -> Vec<Option<f64>>,
    mut record: impl FnMut(&mut S, &MatchRecord),
) -> Vec<Vec<Option<f64>>> {
    let mut season: Option<&str> = None;
    let mut out = Vec::with_capacity(d.len());
    for m in d.matches() {
        if season.is_some_and(|s| s != m.season) {
            rollover(state, spec.regression_pct, spec.dynamic_rollover_depth());
        }
        season = Some(&m.season);
        out.push(row(state, m));
        record(state, m);
    }
    out
}

fn diff_rows(d: &Dataset, spec: &FeatureSpec) -> Vec<Vec<Option<f64>>> {
    let mut wins = TeamHistory::new();
    chronological_fold(
        d,
        spec,
        &mut wins,
        |h, p, depth| h.rollover(p, depth),
        |h, m| vec![diff_feature(h, m, spec)],
        |h, m| {
            let home_win = if m.home_win { 1.0 } else { 0.0 };
            h.push(&m.home_team, true, home_win);
            h.push(&m.away_team, false, 1.0 - home_win);
        },
    )
}

fn four_factor_rows(d: &Dataset, spec: &FeatureSpec) -> Vec<Vec<Option<f64>>> {
    let mut factors: [TeamHistory; 4] = Default::default();
    let (hv, av) = spec.views();
    chronological_fold(
        d,
        spec,
        &mut factors,
        |hs, p, depth| hs.iter_mut().for_each(|h| h.rollover(p, depth)),
        |hs, m| {
            let side = |team: &str, view| {
                hs.iter()
                    .map(|h| h.value(team, view, spec.periodicity, spec.depth))
                    .collect::<Vec<_>>()
            };
            let mut row = side(&m.home_team, hv);
            row.extend(side(&m.away_team, av));
            row
        },
        |hs, m| {
            let home = four_factors(&m.home_box, &m.away_box).components();
            let away = four_factors(&m.away_box, &m.home_box).components();
            for (h, (hv, av)) in hs.iter_mut().zip(home.into_iter().zip(away)) {
                if let Some(v) = hv {
                    h.push(&m.home_team, true, v);
                }
                if let Some(v) = av {
                    h.push(&m.away_team, false, v);
                }
            }
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::test_util::record;

    fn spec(family: FeatureFamily, periodicity: Periodicity) -> FeatureSpec {
        FeatureSpec {
            family,
            periodicity,
            regression_pct: 0.0,
            ..Default::default()
        }
    }

    #[test]
    fn undefeated_home_team_against_winless_away_team() {
        let d = Dataset::new(vec![
            record("s", 1, "A", "C", true),
            record("s", 2, "D", "B", true),
            record("s", 3, "A", "B", true),
        ])
        .unwrap();
        let m = build_feature_matrix(&d, &spec(FeatureFamily::Diff, Periodicity::Historical)).unwrap();
        assert_eq!(m.columns, ["diff"]);
        assert_eq!(m.rows[2].values, vec![Some(1.0)]);
        assert_eq!(m.rows[0].values, vec![None]);
    }

    #[test]
    fn dynamic_diff_depth_four() {
        let mut wins = TeamHistory::new();
        for w in [1.0, 0.0, 1.0, 1.0] {
            wins.push("H", true, w);
        }
        for w in [0.0, 0.0, 1.0, 0.0] {
            wins.push("V", false, w);
        }
        let m = record("s", 9, "H", "V", true);
        let s = FeatureSpec {
            depth: 4,
            ..spec(FeatureFamily::Diff, Periodicity::Dynamic)
        };
        assert_eq!(diff_feature(&wins, &m, &s), Some(0.5));
    }

    #[test]
    fn four_factors_have_eight_columns() {
        let d = Dataset::new(vec![
            record("s", 1, "A", "B", true),
            record("s", 2, "B", "A", false),
        ])
        .unwrap();
        let m = build_feature_matrix(&d, &spec(FeatureFamily::FourFactors, Periodicity::Historical)).unwrap();
        assert_eq!(m.width(), 8);
        assert_eq!(m.columns[0], "efg_pct_ht");
        assert_eq!(m.columns[7], "ft_rate_at");
        assert!(m.rows[0].has_na());
        assert!(!m.rows[1].has_na());
    }

    #[test]
    fn elo_family_is_one_column() {
        let d = Dataset::new(vec![record("s", 1, "A", "B", true)]).unwrap();
        let m = build_feature_matrix(&d, &spec(FeatureFamily::Elo, Periodicity::Historical)).unwrap();
        assert_eq!(m.columns, ["elo_diff"]);
        assert_eq!(m.rows[0].values, vec![Some(0.0)]);
    }

    #[test]
    fn feature_csv_uses_empty_field_for_na() {
        let d = Dataset::new(vec![
            record("s", 1, "A", "B", true),
            record("s", 2, "B", "A", false),
        ])
        .unwrap();
        let m = build_feature_matrix(&d, &spec(FeatureFamily::Diff, Periodicity::Historical)).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "match_index,season,label,diff\n0,s,1,\n1,s,0,-1\n");
    }

    #[test]
    fn zero_depth_is_invalid() {
        let s = FeatureSpec {
            depth: 0,
            ..Default::default()
        };
        assert!(matches!(s.validate(), Err(FeatureError::InvalidSpec(_))));
    }
}
