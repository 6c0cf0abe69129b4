use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::Datelike;

use crate::dataset::formation::{FormationGroup, FormationMap};
use crate::dataset::strength::{date_order, StandingsTracker, StrengthFeatures};
use crate::dataset::{Fixture, TargetVar};
use crate::encoding::TreatmentCell;
use crate::error::{Error, Result};

/// One fixture seen from one team's perspective.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisRow {
    pub fixture_id: String,
    /// (main formation group, rival formation group).
    pub cell: TreatmentCell,
    /// Main-minus-rival difference of the selected target.
    pub outcome: f64,
    pub is_home: bool,
    /// Fixed-width numeric confounder vector; layout in [`ConfounderSchema`].
    pub confounders: Vec<f64>,
}

/// Analysis rows plus the confounder layout they were built with.
#[derive(Debug, Clone)]
pub struct AnalysisTable {
    pub schema: ConfounderSchema,
    pub rows: Vec<AnalysisRow>,
}

/// Fixtures plus the schedule length of every season-league partition.
///
/// The schedule bounds are captured once at construction and survive
/// filtering, which is what makes `filter_rounds` idempotent: re-applying
/// the filter re-evaluates the same per-partition bounds instead of the
/// shrunken maximum of the surviving rows.
#[derive(Debug, Clone)]
pub struct FixtureSet {
    fixtures: Vec<Fixture>,
    max_rounds: BTreeMap<(String, String), u32>,
}

impl FixtureSet {
    pub fn new(fixtures: Vec<Fixture>) -> FixtureSet {
        let mut max_rounds = BTreeMap::new();
        for f in &fixtures {
            let entry = max_rounds.entry(f.group_key()).or_insert(0);
            *entry = (*entry).max(f.round);
        }
        FixtureSet { fixtures, max_rounds }
    }

    pub fn fixtures(&self) -> &[Fixture] {
        &self.fixtures
    }

    pub fn into_fixtures(self) -> Vec<Fixture> {
        self.fixtures
    }

    pub fn len(&self) -> usize {
        self.fixtures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixtures.is_empty()
    }

    /// Drop the first `drop_first` and final `drop_last` rounds of every
    /// season-league partition.
    pub fn filter_rounds(&self, drop_first: u32, drop_last: u32) -> FixtureSet {
        let fixtures = self
            .fixtures
            .iter()
            .filter(|f| {
                let max = self.max_rounds.get(&f.group_key()).copied().unwrap_or(0);
                f.round > drop_first && f.round + drop_last <= max
            })
            .cloned()
            .collect();
        FixtureSet {
            fixtures,
            max_rounds: self.max_rounds.clone(),
        }
    }
}

/// Convenience wrapper over [`FixtureSet::filter_rounds`] for plain slices.
pub fn filter_rounds(fixtures: &[Fixture], drop_first: u32, drop_last: u32) -> Vec<Fixture> {
    FixtureSet::new(fixtures.to_vec())
        .filter_rounds(drop_first, drop_last)
        .into_fixtures()
}

/// Remove fixtures whose stage label differs from `keep` (case-insensitive).
/// Fixtures without a stage label pass. Returns survivors and removed count.
pub fn filter_stage(fixtures: &[Fixture], keep: &str) -> (Vec<Fixture>, usize) {
    let keep_lower = keep.to_ascii_lowercase();
    let before = fixtures.len();
    let survivors: Vec<Fixture> = fixtures
        .iter()
        .filter(|f| match &f.stage {
            None => true,
            Some(s) => s.to_ascii_lowercase() == keep_lower,
        })
        .cloned()
        .collect();
    let removed = before - survivors.len();
    (survivors, removed)
}

const DOW_NAMES: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];
const STRENGTH_NAMES: [&str; 5] = ["points_ratio_overall", "points_ratio_side", "ranking", "streak", "cl"];

/// Fixed confounder layout for one dataset: one-hot season, league and
/// day-of-week, the home indicator, both teams' strength features and any
/// weather columns present (median-imputed, with a missingness indicator).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfounderSchema {
    names: Vec<String>,
    seasons: Vec<String>,
    leagues: Vec<String>,
    temperature: Option<f64>,
    humidity: Option<f64>,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl ConfounderSchema {
    pub fn build(fixtures: &[Fixture]) -> ConfounderSchema {
        let mut seasons: Vec<String> = fixtures.iter().map(|f| f.season.clone()).collect();
        seasons.sort();
        seasons.dedup();
        let mut leagues: Vec<String> = fixtures.iter().map(|f| f.league.clone()).collect();
        leagues.sort();
        leagues.dedup();

        let temps: Vec<f64> = fixtures.iter().filter_map(|f| f.temperature).collect();
        let hums: Vec<f64> = fixtures.iter().filter_map(|f| f.humidity).collect();
        let temperature = (!temps.is_empty()).then(|| median(temps));
        let humidity = (!hums.is_empty()).then(|| median(hums));

        let mut names = Vec::new();
        names.extend(seasons.iter().map(|s| format!("season_{s}")));
        names.extend(leagues.iter().map(|l| format!("league_{l}")));
        names.extend(DOW_NAMES.iter().map(|d| format!("dow_{d}")));
        names.push("is_home".into());
        for side in ["main", "rival"] {
            names.extend(STRENGTH_NAMES.iter().map(|n| format!("{side}_{n}")));
        }
        if temperature.is_some() {
            names.push("temperature".into());
            names.push("temperature_missing".into());
        }
        if humidity.is_some() {
            names.push("humidity".into());
            names.push("humidity_missing".into());
        }
        ConfounderSchema {
            names,
            seasons,
            leagues,
            temperature,
            humidity,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Reconstruct a schema from stored column names (analysis table files).
    pub fn from_names(names: Vec<String>) -> ConfounderSchema {
        let seasons = names
            .iter()
            .filter_map(|n| n.strip_prefix("season_").map(String::from))
            .collect();
        let leagues = names
            .iter()
            .filter_map(|n| n.strip_prefix("league_").map(String::from))
            .collect();
        let temperature = names.iter().any(|n| n == "temperature").then_some(0.0);
        let humidity = names.iter().any(|n| n == "humidity").then_some(0.0);
        ConfounderSchema {
            names,
            seasons,
            leagues,
            temperature,
            humidity,
        }
    }

    /// Build the confounder vector for one perspective of a fixture.
    pub fn vector(
        &self,
        fixture: &Fixture,
        is_home: bool,
        main: &StrengthFeatures,
        rival: &StrengthFeatures,
    ) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.names.len());
        for s in &self.seasons {
            v.push(if *s == fixture.season { 1.0 } else { 0.0 });
        }
        for l in &self.leagues {
            v.push(if *l == fixture.league { 1.0 } else { 0.0 });
        }
        let dow = fixture.date.weekday().num_days_from_monday() as usize;
        for i in 0..7 {
            v.push(if i == dow { 1.0 } else { 0.0 });
        }
        v.push(if is_home { 1.0 } else { 0.0 });
        for s in [main, rival] {
            v.push(s.points_ratio_overall);
            v.push(s.points_ratio_side);
            v.push(s.ranking as f64);
            v.push(s.streak as f64);
            v.push(if s.cl_flag { 1.0 } else { 0.0 });
        }
        if let Some(med) = self.temperature {
            match fixture.temperature {
                Some(t) => {
                    v.push(t);
                    v.push(0.0);
                }
                None => {
                    v.push(med);
                    v.push(1.0);
                }
            }
        }
        if let Some(med) = self.humidity {
            match fixture.humidity {
                Some(h) => {
                    v.push(h);
                    v.push(0.0);
                }
                None => {
                    v.push(med);
                    v.push(1.0);
                }
            }
        }
        debug_assert_eq!(v.len(), self.names.len());
        v
    }
}

/// Expand one fixture into its two perspective rows.
///
/// The home row carries the home-minus-away outcome and cell
/// (home group, away group); the away row negates the outcome, transposes
/// the cell and swaps the strength features.
#[allow(clippy::too_many_arguments)]
pub fn expand_perspectives(
    fixture: &Fixture,
    target: TargetVar,
    home_group: FormationGroup,
    away_group: FormationGroup,
    home_strength: &StrengthFeatures,
    away_strength: &StrengthFeatures,
    schema: &ConfounderSchema,
) -> [AnalysisRow; 2] {
    let diff = target.home_difference(fixture);
    let home_cell = TreatmentCell::new(home_group.index(), away_group.index());
    let home_row = AnalysisRow {
        fixture_id: fixture.fixture_id.clone(),
        cell: home_cell,
        outcome: diff,
        is_home: true,
        confounders: schema.vector(fixture, true, home_strength, away_strength),
    };
    let away_row = AnalysisRow {
        fixture_id: fixture.fixture_id.clone(),
        cell: home_cell.transpose(),
        outcome: -diff,
        is_home: false,
        confounders: schema.vector(fixture, false, away_strength, home_strength),
    };
    [home_row, away_row]
}

/// Build the full analysis table for `analysis_fixtures`.
///
/// `history_fixtures` supplies the standings context and must contain every
/// analysis fixture; it is normally the unfiltered season so round filtering
/// never distorts the strength features.
pub fn build_analysis_rows(
    analysis_fixtures: &[Fixture],
    history_fixtures: &[Fixture],
    target: TargetVar,
    mapping: &FormationMap,
) -> Result<AnalysisTable> {
    let schema = ConfounderSchema::build(analysis_fixtures);
    let wanted: HashSet<&str> = analysis_fixtures
        .iter()
        .map(|f| f.fixture_id.as_str())
        .collect();

    let mut by_group: BTreeMap<(String, String), Vec<&Fixture>> = BTreeMap::new();
    for f in history_fixtures {
        by_group.entry(f.group_key()).or_default().push(f);
    }

    let mut rows = Vec::with_capacity(2 * analysis_fixtures.len());
    let mut emitted = 0usize;
    for group in by_group.values_mut() {
        group.sort_by(|a, b| date_order(a, b));
        let teams: HashSet<String> = group
            .iter()
            .flat_map(|f| [f.home_team.clone(), f.away_team.clone()])
            .collect();
        let mut tracker = StandingsTracker::new(teams);
        let mut i = 0;
        while i < group.len() {
            let date = group[i].date;
            let mut j = i;
            while j < group.len() && group[j].date == date {
                j += 1;
            }
            for f in &group[i..j] {
                if !wanted.contains(f.fixture_id.as_str()) {
                    continue;
                }
                let home_strength = tracker.features(&f.home_team, true, f.home_cl_flag);
                let away_strength = tracker.features(&f.away_team, false, f.away_cl_flag);
                let home_group = mapping.lookup(&f.home_formation_raw)?;
                let away_group = mapping.lookup(&f.away_formation_raw)?;
                rows.extend(expand_perspectives(
                    f,
                    target,
                    home_group,
                    away_group,
                    &home_strength,
                    &away_strength,
                    &schema,
                ));
                emitted += 1;
            }
            for f in &group[i..j] {
                tracker.record(&f.home_team, &f.away_team, f.home_goals, f.away_goals);
            }
            tracker.finish_date();
            i = j;
        }
    }
    if emitted != analysis_fixtures.len() {
        return Err(Error::InvalidParameter(format!(
            "{} analysis fixtures missing from the history set",
            analysis_fixtures.len() - emitted
        )));
    }
    Ok(AnalysisTable { schema, rows })
}

/// Per-fixture-id pairing check: every fixture id appears in exactly two rows.
pub fn check_perspective_pairing(rows: &[AnalysisRow]) -> bool {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for r in rows {
        *counts.entry(r.fixture_id.as_str()).or_insert(0) += 1;
    }
    counts.values().all(|&c| c == 2)
}
