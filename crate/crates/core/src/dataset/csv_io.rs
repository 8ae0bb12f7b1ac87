use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::{BoxScore, DataError, Dataset, MatchRecord};

const BOX_FIELDS: [&str; 10] = [
    "p2a", "p3a", "fta", "p2m", "p3m", "ftm", "oreb", "dreb", "tov", "poss",
];

/// Header of the match CSV, in order.
pub const MATCH_COLUMNS: [&str; 25] = [
    "season", "date", "home_team", "away_team", "home_win", "h_p2a", "h_p3a", "h_fta", "h_p2m",
    "h_p3m", "h_ftm", "h_oreb", "h_dreb", "h_tov", "h_poss", "a_p2a", "a_p3a", "a_fta", "a_p2m",
    "a_p3m", "a_ftm", "a_oreb", "a_dreb", "a_tov", "a_poss",
];

pub fn load_matches(path: impl AsRef<Path>) -> Result<Dataset, DataError> {
    read_matches(File::open(path)?)
}

/// Parses the match CSV. Columns are located by header name, so extra
/// columns and any column order are accepted.
pub fn read_matches<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut positions = [0usize; MATCH_COLUMNS.len()];
    let mut missing = Vec::new();
    for (slot, name) in positions.iter_mut().zip(MATCH_COLUMNS) {
        match headers.iter().position(|h| h == name) {
            Some(p) => *slot = p,
            None => missing.push(name.to_string()),
        }
    }
    if !missing.is_empty() {
        return Err(DataError::MissingColumns(missing));
    }

    let mut matches = Vec::new();
    let mut seen = HashSet::new();
    for result in rdr.records() {
        let record = result?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(positions[i]).unwrap_or("");
        let row_err = |message: String| DataError::Row { line, message };

        let date = NaiveDate::parse_from_str(field(1), "%Y-%m-%d")
            .map_err(|e| row_err(format!("bad date {:?}: {e}", field(1))))?;
        let home_win = match field(4) {
            "1" => true,
            "0" => false,
            other => return Err(row_err(format!("home_win must be 0 or 1, got {other:?}"))),
        };
        let home_box = parse_box(|i| field(5 + i)).map_err(|m| row_err(format!("home {m}")))?;
        let away_box = parse_box(|i| field(15 + i)).map_err(|m| row_err(format!("away {m}")))?;
        let (season, home, away) = (field(0), field(2), field(3));
        if season.is_empty() || home.is_empty() || away.is_empty() {
            return Err(row_err("season and team names must be non-empty".into()));
        }
        if home == away {
            return Err(row_err(format!("team {home:?} plays itself")));
        }
        if !seen.insert((date, home.to_string(), away.to_string())) {
            return Err(DataError::Duplicate {
                line,
                date,
                home: home.to_string(),
                away: away.to_string(),
            });
        }
        matches.push(MatchRecord {
            season: season.to_string(),
            match_index: 0,
            date,
            home_team: home.to_string(),
            away_team: away.to_string(),
            home_win,
            home_box,
            away_box,
        });
    }
    Dataset::new(matches)
}

fn parse_box<'a>(field: impl Fn(usize) -> &'a str) -> Result<BoxScore, String> {
    let mut counts = [0u32; 9];
    for (i, c) in counts.iter_mut().enumerate() {
        let raw = field(i);
        *c = raw
            .parse()
            .map_err(|_| format!("{}: expected a non-negative integer, got {raw:?}", BOX_FIELDS[i]))?;
    }
    let raw_poss = field(9);
    let poss = if raw_poss.is_empty() {
        None
    } else {
        Some(
            raw_poss
                .parse::<f64>()
                .map_err(|_| format!("poss: expected a number, got {raw_poss:?}"))?,
        )
    };
    let [p2a, p3a, fta, p2m, p3m, ftm, oreb, dreb, tov] = counts;
    let b = BoxScore {
        p2a,
        p3a,
        fta,
        p2m,
        p3m,
        ftm,
        oreb,
        dreb,
        tov,
        poss,
    };
    b.validate()?;
    Ok(b)
}

fn box_fields(b: &BoxScore) -> impl Iterator<Item = String> {
    [b.p2a, b.p3a, b.fta, b.p2m, b.p3m, b.ftm, b.oreb, b.dreb, b.tov]
        .into_iter()
        .map(|c| c.to_string())
        .chain(std::iter::once(b.poss.map(|p| p.to_string()).unwrap_or_default()))
}

/// Writes matches in the same schema [`read_matches`] consumes.
pub fn write_matches<W: Write>(d: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(MATCH_COLUMNS)?;
    for m in d.matches() {
        let head = [
            m.season.clone(),
            m.date.format("%Y-%m-%d").to_string(),
            m.home_team.clone(),
            m.away_team.clone(),
            m.label().to_string(),
        ];
        w.write_record(
            head.into_iter()
                .chain(box_fields(&m.home_box))
                .chain(box_fields(&m.away_box)),
        )?;
    }
    w.flush()?;
    Ok(())
}
