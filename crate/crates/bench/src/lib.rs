//! Shared fixtures for the benchmarks.

use courtside::synth::{generate, League};
use courtside::LeagueSpec;

/// A full-size league: 30 teams, `seasons` seasons of 82 rounds.
pub fn league(seasons: usize) -> League {
    generate(&LeagueSpec {
        seasons,
        ..LeagueSpec::default()
    })
    .expect("default league spec is valid")
}

/// Scores correlated with the labels, with ties from two-decimal rounding.
pub fn scored_labels(n: usize) -> (Vec<f64>, Vec<u8>) {
    (0..n)
        .map(|i| {
            let label = u8::from(i % 3 != 0);
            let raw = ((i * 7919) % 1000) as f64 / 1000.0;
            let score = ((raw + 0.3 * f64::from(label)) / 1.3 * 100.0).round() / 100.0;
            (score, label)
        })
        .unzip()
}
