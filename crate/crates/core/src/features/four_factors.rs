use crate::dataset::BoxScore;

/// Oliver's Four Factors for one team in one match. A component is `None`
/// when its denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FourFactors {
    /// `(P2M + 1.5 P3M) / (P2A + P3A)`
    pub efg_pct: Option<f64>,
    /// `TOV / POSS`
    pub to_ratio: Option<f64>,
    /// `OREB / (OREB + opponent DREB)`
    pub oreb_pct: Option<f64>,
    /// `FTM / (P2A + P3A)`
    pub ft_rate: Option<f64>,
}

impl FourFactors {
    pub const NAMES: [&'static str; 4] = ["efg_pct", "to_ratio", "oreb_pct", "ft_rate"];

    pub fn components(&self) -> [Option<f64>; 4] {
        [self.efg_pct, self.to_ratio, self.oreb_pct, self.ft_rate]
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Possessions for `b`. `_opp` is accepted for estimators that use both
/// sides; the one implemented here needs only the team's own box score.
pub fn possessions_estimate(b: &BoxScore, _opp: &BoxScore) -> f64 {
    b.possessions()
}

pub fn four_factors(b: &BoxScore, opp: &BoxScore) -> FourFactors {
    let fga = f64::from(b.field_goal_attempts());
    FourFactors {
        efg_pct: ratio(f64::from(b.p2m) + 1.5 * f64::from(b.p3m), fga),
        to_ratio: ratio(f64::from(b.tov), possessions_estimate(b, opp)),
        oreb_pct: ratio(f64::from(b.oreb), f64::from(b.oreb + opp.dreb)),
        ft_rate: ratio(f64::from(b.ftm), fga),
    }
}
