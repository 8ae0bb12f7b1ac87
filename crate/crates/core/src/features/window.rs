use std::collections::BTreeMap;

use super::{Periodicity, View};

/// Mean of all of `values` (historical) or of the last `depth` (dynamic).
/// `None` when there are not enough values.
pub fn windowed_mean(values: &[f64], periodicity: Periodicity, depth: usize) -> Option<f64> {
    let window = match periodicity {
        Periodicity::Historical => values,
        Periodicity::Dynamic if depth > 0 && values.len() >= depth => &values[values.len() - depth..],
        Periodicity::Dynamic => return None,
    };
    (!window.is_empty()).then(|| window.iter().sum::<f64>() / window.len() as f64)
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Series {
    values: Vec<f64>,
    // Running historical mean is `sum / count`; a season rollover rewrites
    // `sum` so the mean equals the regressed value while keeping `count`.
    sum: f64,
    count: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Totals {
    sum: f64,
    count: usize,
}

fn slot(view: View) -> usize {
    match view {
        View::All => 0,
        View::Home => 1,
        View::Away => 2,
    }
}

/// Per-team chronological series of one per-match statistic, kept for all
/// matches and separately for home and away matches.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TeamHistory {
    series: BTreeMap<(String, View), Series>,
    totals: [Totals; 3],
}

impl TeamHistory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a team's value for one match.
    pub fn push(&mut self, team: &str, at_home: bool, value: f64) {
        let court = if at_home { View::Home } else { View::Away };
        for view in [View::All, court] {
            let s = self.series.entry((team.to_string(), view)).or_default();
            s.values.push(value);
            s.sum += value;
            s.count += 1;
            let t = &mut self.totals[slot(view)];
            t.sum += value;
            t.count += 1;
        }
    }

    pub fn values(&self, team: &str, view: View) -> &[f64] {
        self.series
            .get(&(team.to_string(), view))
            .map_or(&[], |s| s.values.as_slice())
    }

    /// Matches recorded for a team in a view.
    pub fn played(&self, team: &str, view: View) -> usize {
        self.values(team, view).len()
    }

    /// Sum of recorded values; the win count when values are win indicators.
    pub fn total(&self, team: &str, view: View) -> f64 {
        self.values(team, view).iter().sum()
    }

    /// Mean of every value recorded in a view over all teams.
    pub fn grand_mean(&self, view: View) -> Option<f64> {
        let t = self.totals[slot(view)];
        (t.count > 0).then(|| t.sum / t.count as f64)
    }

    /// Feature value from the state before the next match.
    pub fn value(&self, team: &str, view: View, periodicity: Periodicity, depth: usize) -> Option<f64> {
        let s = self.series.get(&(team.to_string(), view))?;
        match periodicity {
            Periodicity::Historical => (s.count > 0).then(|| s.sum / s.count as f64),
            Periodicity::Dynamic => windowed_mean(&s.values, periodicity, depth),
        }
    }

    /// Season boundary: each historical mean becomes
    /// `(1 - p) * mean + p * grand_mean(view)` and keeps its weight. With
    /// `dynamic_depth` set, the last `depth` raw values are likewise replaced
    /// by the regressed rolling mean.
    pub fn rollover(&mut self, p: f64, dynamic_depth: Option<usize>) {
        let means = [View::All, View::Home, View::Away].map(|v| self.grand_mean(v));
        for ((_, view), s) in self.series.iter_mut() {
            let Some(grand) = means[slot(*view)] else {
                continue;
            };
            if s.count > 0 {
                let seed = (1.0 - p) * (s.sum / s.count as f64) + p * grand;
                s.sum = seed * s.count as f64;
            }
            if let Some(depth) = dynamic_depth {
                let n = s.values.len();
                let k = depth.min(n);
                if k > 0 {
                    let recent = s.values[n - k..].iter().sum::<f64>() / k as f64;
                    let blended = (1.0 - p) * recent + p * grand;
                    s.values[n - k..].iter_mut().for_each(|v| *v = blended);
                }
            }
        }
    }
}
