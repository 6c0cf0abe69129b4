use std::collections::{HashMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;

use crate::dataset::Fixture;
use crate::error::{Error, Result};

/// Canonical field names the parser understands, in file column order.
pub const CANONICAL_FIELDS: [&str; 24] = [
    "fixture_id",
    "season",
    "league",
    "round",
    "date",
    "home_team",
    "away_team",
    "home_formation",
    "away_formation",
    "home_goals",
    "away_goals",
    "home_corners",
    "away_corners",
    "home_possession",
    "away_possession",
    "home_yellow_cards",
    "away_yellow_cards",
    "home_red_cards",
    "away_red_cards",
    "home_cl",
    "away_cl",
    "temperature",
    "humidity",
    "stage",
];

/// Fields that may be absent from the source file.
const OPTIONAL_FIELDS: [&str; 5] = ["home_cl", "away_cl", "temperature", "humidity", "stage"];

/// Maps canonical field names to the source file's column names.
///
/// Loaded from a `key=value` file (key = canonical field, value = source
/// column). Unlisted fields default to their canonical name.
#[derive(Debug, Clone, Default)]
pub struct ColumnMapping {
    overrides: HashMap<String, String>,
}

impl ColumnMapping {
    pub fn from_pairs<I: IntoIterator<Item = (String, String)>>(pairs: I) -> Result<ColumnMapping> {
        let mut overrides = HashMap::new();
        for (k, v) in pairs {
            if !CANONICAL_FIELDS.contains(&k.as_str()) {
                return Err(Error::Config(format!("unknown canonical field '{k}'")));
            }
            overrides.insert(k, v);
        }
        Ok(ColumnMapping { overrides })
    }

    pub fn from_file(path: &Path) -> Result<ColumnMapping> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got '{line}'")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        ColumnMapping::from_pairs(pairs)
    }

    fn source_column<'a>(&'a self, canonical: &'a str) -> &'a str {
        self.overrides
            .get(canonical)
            .map(|s| s.as_str())
            .unwrap_or(canonical)
    }
}

/// One rejected input row and the rule it violated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectEntry {
    pub fixture_id: String,
    pub rule: String,
}

/// Rows that failed validation, kept instead of silently dropped.
#[derive(Debug, Clone, Default)]
pub struct RejectReport {
    pub entries: Vec<RejectEntry>,
}

impl RejectReport {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    fn push(&mut self, fixture_id: &str, rule: String) {
        self.entries.push(RejectEntry {
            fixture_id: fixture_id.to_string(),
            rule,
        });
    }
}

struct FieldIndex<'a> {
    indices: HashMap<&'a str, usize>,
}

impl<'a> FieldIndex<'a> {
    fn get(&self, record: &csv::StringRecord, field: &str) -> Option<String> {
        self.indices
            .get(field)
            .and_then(|&i| record.get(i))
            .map(|s| s.trim().to_string())
    }
}

/// Parse a delimiter-separated fixture table.
///
/// Every row either yields a validated [`Fixture`] or lands in the reject
/// report with the rule it violated. Missing required columns are a schema
/// error; optional columns (CL flags, weather, stage) may be absent.
pub fn parse_fixture_table(
    path: &Path,
    mapping: &ColumnMapping,
) -> Result<(Vec<Fixture>, RejectReport)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers()?.clone();

    let mut indices = HashMap::new();
    for canonical in CANONICAL_FIELDS {
        let source = mapping.source_column(canonical);
        match headers.iter().position(|h| h == source) {
            Some(i) => {
                indices.insert(canonical, i);
            }
            None if OPTIONAL_FIELDS.contains(&canonical) => {}
            None => return Err(Error::MissingColumn(source.to_string())),
        }
    }
    let index = FieldIndex { indices };

    let mut fixtures = Vec::new();
    let mut rejects = RejectReport::default();
    let mut seen_ids = HashSet::new();

    for record in reader.records() {
        let record = record?;
        let id = index
            .get(&record, "fixture_id")
            .unwrap_or_default();
        if id.is_empty() {
            rejects.push("<missing>", "empty fixture_id".into());
            continue;
        }
        match parse_record(&index, &record, &id) {
            Ok(fx) => {
                if !seen_ids.insert(fx.fixture_id.clone()) {
                    rejects.push(&id, "duplicate fixture_id".into());
                    continue;
                }
                match fx.validate() {
                    Ok(()) => fixtures.push(fx),
                    Err(rule) => rejects.push(&id, rule),
                }
            }
            Err(rule) => rejects.push(&id, rule),
        }
    }
    Ok((fixtures, rejects))
}

fn parse_record(
    index: &FieldIndex<'_>,
    record: &csv::StringRecord,
    id: &str,
) -> std::result::Result<Fixture, String> {
    let req = |field: &str| -> std::result::Result<String, String> {
        match index.get(record, field) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(format!("empty value for '{field}'")),
        }
    };
    let num = |field: &str| -> std::result::Result<f64, String> {
        let v = req(field)?;
        v.parse::<f64>()
            .map_err(|_| format!("unparseable numeric '{v}' in '{field}'"))
    };
    let count = |field: &str| -> std::result::Result<u32, String> {
        let v = req(field)?;
        v.parse::<u32>()
            .map_err(|_| format!("unparseable count '{v}' in '{field}'"))
    };
    let flag = |field: &str| -> std::result::Result<bool, String> {
        match index.get(record, field) {
            None => Ok(false),
            Some(v) if v.is_empty() => Ok(false),
            Some(v) => parse_bool(&v).ok_or_else(|| format!("unparseable flag '{v}' in '{field}'")),
        }
    };
    let opt_num = |field: &str| -> std::result::Result<Option<f64>, String> {
        match index.get(record, field) {
            None => Ok(None),
            Some(v) if v.is_empty() => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| format!("unparseable numeric '{v}' in '{field}'")),
        }
    };

    let date_str = req("date")?;
    let date = NaiveDate::parse_from_str(&date_str, "%Y-%m-%d")
        .map_err(|_| format!("unparseable date '{date_str}' (expected YYYY-MM-DD)"))?;

    Ok(Fixture {
        fixture_id: id.to_string(),
        season: req("season")?,
        league: req("league")?,
        round: count("round")?,
        date,
        home_team: req("home_team")?,
        away_team: req("away_team")?,
        home_formation_raw: req("home_formation")?,
        away_formation_raw: req("away_formation")?,
        home_goals: count("home_goals")?,
        away_goals: count("away_goals")?,
        home_corners: num("home_corners")?,
        away_corners: num("away_corners")?,
        home_possession: num("home_possession")?,
        away_possession: num("away_possession")?,
        home_yellow_cards: num("home_yellow_cards")?,
        away_yellow_cards: num("away_yellow_cards")?,
        home_red_cards: num("home_red_cards")?,
        away_red_cards: num("away_red_cards")?,
        home_cl_flag: flag("home_cl")?,
        away_cl_flag: flag("away_cl")?,
        temperature: opt_num("temperature")?,
        humidity: opt_num("humidity")?,
        stage: index.get(record, "stage").filter(|s| !s.is_empty()),
    })
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

fn fmt_stat(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Write fixtures in the canonical column layout `parse_fixture_table` reads.
pub fn write_fixture_table(path: &Path, fixtures: &[Fixture]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(CANONICAL_FIELDS)?;
    for fx in fixtures {
        writer.write_record([
            fx.fixture_id.as_str(),
            fx.season.as_str(),
            fx.league.as_str(),
            &fx.round.to_string(),
            &fx.date.format("%Y-%m-%d").to_string(),
            fx.home_team.as_str(),
            fx.away_team.as_str(),
            fx.home_formation_raw.as_str(),
            fx.away_formation_raw.as_str(),
            &fx.home_goals.to_string(),
            &fx.away_goals.to_string(),
            &fmt_stat(fx.home_corners),
            &fmt_stat(fx.away_corners),
            &fmt_stat(fx.home_possession),
            &fmt_stat(fx.away_possession),
            &fmt_stat(fx.home_yellow_cards),
            &fmt_stat(fx.away_yellow_cards),
            &fmt_stat(fx.home_red_cards),
            &fmt_stat(fx.away_red_cards),
            if fx.home_cl_flag { "1" } else { "0" },
            if fx.away_cl_flag { "1" } else { "0" },
            &fx.temperature.map(fmt_stat).unwrap_or_default(),
            &fx.humidity.map(fmt_stat).unwrap_or_default(),
            fx.stage.as_deref().unwrap_or(""),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
