use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;
use std::path::Path;

use super::{DataError, Dataset, MatchRecord};

/// Current NBA franchise names.
pub const NBA_TEAMS: [&str; 30] = [
    "Atlanta Hawks",
    "Boston Celtics",
    "Brooklyn Nets",
    "Charlotte Hornets",
    "Chicago Bulls",
    "Cleveland Cavaliers",
    "Dallas Mavericks",
    "Denver Nuggets",
    "Detroit Pistons",
    "Golden State Warriors",
    "Houston Rockets",
    "Indiana Pacers",
    "Los Angeles Clippers",
    "Los Angeles Lakers",
    "Memphis Grizzlies",
    "Miami Heat",
    "Milwaukee Bucks",
    "Minnesota Timberwolves",
    "New Orleans Pelicans",
    "New York Knicks",
    "Oklahoma City Thunder",
    "Orlando Magic",
    "Philadelphia 76ers",
    "Phoenix Suns",
    "Portland Trail Blazers",
    "Sacramento Kings",
    "San Antonio Spurs",
    "Toronto Raptors",
    "Utah Jazz",
    "Washington Wizards",
];

/// Names used between 2004-05 and 2019-20 that were later retired.
pub const NBA_RENAMES: [(&str, &str); 4] = [
    ("New Jersey Nets", "Brooklyn Nets"),
    ("New Orleans Hornets", "New Orleans Pelicans"),
    ("New Orleans/Oklahoma City Hornets", "New Orleans Pelicans"),
    ("Seattle SuperSonics", "Oklahoma City Thunder"),
];

/// Maps historical team names onto canonical ones.
///
/// Every name a dataset uses must be either an alias or canonical. The
/// canonical set is the set of alias targets plus any names registered with
/// [`FranchiseMap::with_canonical`]; an alias file can declare a canonical
/// name with an identity row (`Utah Jazz,Utah Jazz`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FranchiseMap {
    aliases: BTreeMap<String, String>,
    canonical: BTreeSet<String>,
}

impl FranchiseMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// The 30 current franchises plus the renames needed for 2004-2020 data.
    pub fn nba() -> Self {
        let mut map = Self::new().with_canonical(NBA_TEAMS);
        for (old, new) in NBA_RENAMES {
            map.insert(old, new);
        }
        map
    }

    pub fn with_canonical<I, S>(mut self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.canonical.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn insert(&mut self, old: impl Into<String>, canonical: impl Into<String>) {
        let (old, canonical) = (old.into(), canonical.into());
        self.canonical.insert(canonical.clone());
        if old != canonical {
            self.aliases.insert(old, canonical);
        }
    }

    /// Reads a headerless or headed two-column CSV `old_name,canonical_name`.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut map = Self::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != 2 {
                return Err(DataError::Row {
                    line,
                    message: format!("alias rows need 2 fields, found {}", rec.len()),
                });
            }
            if i == 0 && &rec[0] == "old_name" && &rec[1] == "canonical_name" {
                continue;
            }
            map.insert(&rec[0], &rec[1]);
        }
        Ok(map)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DataError> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn canonical_name<'a>(&'a self, name: &'a str) -> Result<&'a str, DataError> {
        if let Some(c) = self.aliases.get(name) {
            Ok(c)
        } else if self.canonical.contains(name) {
            Ok(name)
        } else {
            Err(DataError::UnknownTeam(name.to_string()))
        }
    }
}

/// Rewrites every team identifier to its canonical name.
pub fn normalize_franchises(d: Dataset, map: &FranchiseMap) -> Result<Dataset, DataError> {
    let matches = d
        .into_matches()
        .into_iter()
        .map(|m| {
            Ok(MatchRecord {
                home_team: map.canonical_name(&m.home_team)?.to_string(),
                away_team: map.canonical_name(&m.away_team)?.to_string(),
                ..m
            })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    Dataset::new(matches)
}
