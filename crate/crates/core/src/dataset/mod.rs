//! Fixture ingestion and feature engineering.
//!
//! Turns raw match tables into analysis rows: validates fixtures, engineers
//! pre-match team-strength confounders, filters unstable rounds, groups raw
//! formations into the six canonical categories and expands every fixture
//! into the two per-team perspectives.

mod analysis;
mod formation;
mod parse;
pub(crate) mod strength;

pub use analysis::{
    build_analysis_rows, check_perspective_pairing, expand_perspectives, filter_rounds,
    filter_stage, AnalysisRow, AnalysisTable, ConfounderSchema, FixtureSet,
};
pub use formation::{group_formation, FormationGroup, FormationMap};
pub use parse::{parse_fixture_table, write_fixture_table, ColumnMapping, RejectEntry, RejectReport};
pub use strength::{compute_strength_features, StrengthFeatures};

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// One match as ingested: both teams, both formations, full box score.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub fixture_id: String,
    pub season: String,
    pub league: String,
    pub round: u32,
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    pub home_formation_raw: String,
    pub away_formation_raw: String,
    pub home_goals: u32,
    pub away_goals: u32,
    pub home_corners: f64,
    pub away_corners: f64,
    pub home_possession: f64,
    pub away_possession: f64,
    pub home_yellow_cards: f64,
    pub away_yellow_cards: f64,
    pub home_red_cards: f64,
    pub away_red_cards: f64,
    pub home_cl_flag: bool,
    pub away_cl_flag: bool,
    pub temperature: Option<f64>,
    pub humidity: Option<f64>,
    /// Competition stage label when the source provides one (e.g. play-offs).
    pub stage: Option<String>,
}

impl Fixture {
    /// Checks the row-level invariants and returns the first violated rule.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.round < 1 {
            return Err("round must be >= 1".into());
        }
        let pos_sum = self.home_possession + self.away_possession;
        if (pos_sum - 100.0).abs() > 0.5 {
            return Err(format!(
                "possession sum {pos_sum:.1} outside 100 +/- 0.5"
            ));
        }
        for raw in [&self.home_formation_raw, &self.away_formation_raw] {
            validate_formation_string(raw)?;
        }
        for v in [
            self.home_corners,
            self.away_corners,
            self.home_possession,
            self.away_possession,
            self.home_yellow_cards,
            self.away_yellow_cards,
            self.home_red_cards,
            self.away_red_cards,
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("negative or non-finite statistic {v}"));
            }
        }
        Ok(())
    }

    /// Group key for per-competition operations.
    pub(crate) fn group_key(&self) -> (String, String) {
        (self.league.clone(), self.season.clone())
    }
}

/// A raw formation string must split on hyphens into 2..=4 positive
/// integers summing to the ten outfield players.
pub fn validate_formation_string(raw: &str) -> std::result::Result<(), String> {
    let parts: Vec<&str> = raw.split('-').collect();
    if !(2..=4).contains(&parts.len()) {
        return Err(format!("formation '{raw}' must have 2-4 lines"));
    }
    let mut sum = 0u32;
    for p in &parts {
        match p.parse::<u32>() {
            Ok(n) if n >= 1 => sum += n,
            _ => return Err(format!("formation '{raw}' has a non-positive line")),
        }
    }
    if sum != 10 {
        return Err(format!("formation '{raw}' outfielders sum to {sum}, expected 10"));
    }
    Ok(())
}

/// The outcome the pipeline estimates effects on, always as the
/// main-minus-rival difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TargetVar {
    Goals,
    RedCards,
    YellowCards,
    Possession,
    Corners,
}

impl TargetVar {
    pub const ALL: [TargetVar; 5] = [
        TargetVar::Goals,
        TargetVar::RedCards,
        TargetVar::YellowCards,
        TargetVar::Possession,
        TargetVar::Corners,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TargetVar::Goals => "goals",
            TargetVar::RedCards => "red_cards",
            TargetVar::YellowCards => "yellow_cards",
            TargetVar::Possession => "possession",
            TargetVar::Corners => "corners",
        }
    }

    pub fn parse(s: &str) -> Result<TargetVar> {
        match s {
            "goals" => Ok(TargetVar::Goals),
            "red_cards" => Ok(TargetVar::RedCards),
            "yellow_cards" => Ok(TargetVar::YellowCards),
            "possession" => Ok(TargetVar::Possession),
            "corners" => Ok(TargetVar::Corners),
            other => Err(Error::Config(format!("unknown target '{other}'"))),
        }
    }

    /// Home-minus-away difference of this target for a fixture.
    pub fn home_difference(&self, fx: &Fixture) -> f64 {
        match self {
            TargetVar::Goals => fx.home_goals as f64 - fx.away_goals as f64,
            TargetVar::RedCards => fx.home_red_cards - fx.away_red_cards,
            TargetVar::YellowCards => fx.home_yellow_cards - fx.away_yellow_cards,
            TargetVar::Possession => fx.home_possession - fx.away_possession,
            TargetVar::Corners => fx.home_corners - fx.away_corners,
        }
    }

    /// Level of this target for one side (main-team perspective).
    pub fn side_level(&self, fx: &Fixture, home: bool) -> f64 {
        match (self, home) {
            (TargetVar::Goals, true) => fx.home_goals as f64,
            (TargetVar::Goals, false) => fx.away_goals as f64,
            (TargetVar::RedCards, true) => fx.home_red_cards,
            (TargetVar::RedCards, false) => fx.away_red_cards,
            (TargetVar::YellowCards, true) => fx.home_yellow_cards,
            (TargetVar::YellowCards, false) => fx.away_yellow_cards,
            (TargetVar::Possession, true) => fx.home_possession,
            (TargetVar::Possession, false) => fx.away_possession,
            (TargetVar::Corners, true) => fx.home_corners,
            (TargetVar::Corners, false) => fx.away_corners,
        }
    }
}
