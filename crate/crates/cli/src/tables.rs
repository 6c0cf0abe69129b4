use std::collections::HashMap;
use std::path::Path;

use formdml::dataset::{AnalysisRow, AnalysisTable, ConfounderSchema, Fixture, FormationGroup, TargetVar};
use formdml::encoding::TreatmentCell;
use formdml::RejectReport;

use crate::error::{CliError, CliResult};

/// One row of the normalized analysis table: both outcome differences and
/// the main team's raw levels, so reports can be built without the fixtures.
#[derive(Debug, Clone)]
pub struct ParsedRow {
    pub fixture_id: String,
    pub league: String,
    pub is_home: bool,
    pub main: FormationGroup,
    pub rival: FormationGroup,
    /// Differences in `TargetVar::ALL` order.
    pub outcomes: [f64; 5],
    /// Main-team levels in `TargetVar::ALL` order.
    pub levels: [f64; 5],
    pub confounders: Vec<f64>,
}

impl ParsedRow {
    pub fn to_analysis_row(&self, target: TargetVar) -> AnalysisRow {
        let ix = TargetVar::ALL.iter().position(|t| *t == target).unwrap();
        AnalysisRow {
            fixture_id: self.fixture_id.clone(),
            cell: TreatmentCell::new(self.main.index(), self.rival.index()),
            outcome: self.outcomes[ix],
            is_home: self.is_home,
            confounders: self.confounders.clone(),
        }
    }
}

fn base_header() -> Vec<String> {
    let mut header = vec![
        "fixture_id".to_string(),
        "league".to_string(),
        "season".to_string(),
        "is_home".to_string(),
        "main_formation".to_string(),
        "rival_formation".to_string(),
    ];
    for t in TargetVar::ALL {
        header.push(format!("{}_diff", t.name()));
    }
    for t in TargetVar::ALL {
        header.push(format!("main_{}", t.name()));
    }
    header
}

/// Write the analysis table produced by the ingest pipeline. `fixtures`
/// supplies the per-target differences and levels for each row.
pub fn write_analysis_table(
    path: &Path,
    table: &AnalysisTable,
    fixtures: &HashMap<&str, &Fixture>,
) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = base_header();
    header.extend(table.schema.names().iter().map(|n| format!("x_{n}")));
    writer.write_record(&header)?;

    for row in &table.rows {
        let fx = fixtures
            .get(row.fixture_id.as_str())
            .ok_or_else(|| CliError::data(format!("row references unknown fixture '{}'", row.fixture_id)))?;
        let main = FormationGroup::from_index(row.cell.main).expect("valid index");
        let rival = FormationGroup::from_index(row.cell.rival).expect("valid index");
        let sign = if row.is_home { 1.0 } else { -1.0 };
        let mut record: Vec<String> = vec![
            row.fixture_id.clone(),
            fx.league.clone(),
            fx.season.clone(),
            if row.is_home { "1".into() } else { "0".into() },
            main.label().to_string(),
            rival.label().to_string(),
        ];
        for t in TargetVar::ALL {
            record.push(format!("{}", sign * t.home_difference(fx)));
        }
        for t in TargetVar::ALL {
            record.push(format!("{}", t.side_level(fx, row.is_home)));
        }
        for v in &row.confounders {
            record.push(format!("{v}"));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read an analysis table back into rows plus the confounder schema.
pub fn read_analysis_table(path: &Path) -> CliResult<(Vec<ParsedRow>, ConfounderSchema)> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| {
        CliError::io(format!("cannot read analysis table '{}': {e}", path.display()))
    })?;
    let headers = reader.headers()?.clone();
    let expected = base_header();
    for (i, name) in expected.iter().enumerate() {
        if headers.get(i) != Some(name.as_str()) {
            return Err(CliError::data(format!(
                "analysis table column {} should be '{name}', found '{}'",
                i + 1,
                headers.get(i).unwrap_or("<none>")
            )));
        }
    }
    let confounder_names: Vec<String> = headers
        .iter()
        .skip(expected.len())
        .map(|h| {
            h.strip_prefix("x_")
                .map(String::from)
                .ok_or_else(|| CliError::data(format!("confounder column '{h}' lacks the x_ prefix")))
        })
        .collect::<CliResult<Vec<String>>>()?;
    let schema = ConfounderSchema::from_names(confounder_names);

    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |ix: usize| -> CliResult<&str> {
            record
                .get(ix)
                .ok_or_else(|| CliError::data(format!("row {}: missing field {ix}", line + 2)))
        };
        let num = |ix: usize| -> CliResult<f64> {
            field(ix)?.parse::<f64>().map_err(|_| {
                CliError::data(format!("row {}: unparseable numeric '{}'", line + 2, record.get(ix).unwrap_or("")))
            })
        };
        let group = |ix: usize| -> CliResult<FormationGroup> {
            let label = field(ix)?;
            FormationGroup::from_label(label)
                .ok_or_else(|| CliError::data(format!("row {}: unknown group '{label}'", line + 2)))
        };
        let mut outcomes = [0.0; 5];
        let mut levels = [0.0; 5];
        for i in 0..5 {
            outcomes[i] = num(6 + i)?;
            levels[i] = num(11 + i)?;
        }
        let confounders: Vec<f64> = (expected.len()..record.len())
            .map(num)
            .collect::<CliResult<Vec<f64>>>()?;
        if confounders.len() != schema.len() {
            return Err(CliError::data(format!(
                "row {}: {} confounders, schema has {}",
                line + 2,
                confounders.len(),
                schema.len()
            )));
        }
        rows.push(ParsedRow {
            fixture_id: field(0)?.to_string(),
            league: field(1)?.to_string(),
            is_home: field(3)? == "1",
            main: group(4)?,
            rival: group(5)?,
            outcomes,
            levels,
            confounders,
        });
    }
    if rows.is_empty() {
        return Err(CliError::data("analysis table has no rows"));
    }
    Ok((rows, schema))
}

/// One line per rejected row: fixture_id, rule violated.
pub fn write_reject_report(path: &Path, report: &RejectReport) -> CliResult<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["fixture_id", "rule"])?;
    for entry in &report.entries {
        writer.write_record([entry.fixture_id.as_str(), entry.rule.as_str()])?;
    }
    writer.flush()?;
    Ok(())
}

/// Write a k x k grid with group labels on both axes.
pub fn write_grid<F: Fn(usize, usize) -> String>(
    path: &Path,
    k: usize,
    cell: F,
) -> CliResult<()> {
    let labels: Vec<String> = group_labels(k);
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["main\\rival".to_string()];
    header.extend(labels.iter().cloned());
    writer.write_record(&header)?;
    for i in 0..k {
        let mut record = vec![labels[i].clone()];
        for j in 0..k {
            record.push(cell(i, j));
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Read a grid written by [`write_grid`]; returns labels and values.
pub fn read_grid(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new().from_path(path).map_err(|e| {
        CliError::io(format!("cannot read grid '{}': {e}", path.display()))
    })?;
    let headers = reader.headers()?.clone();
    let labels: Vec<String> = headers.iter().skip(1).map(String::from).collect();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record?;
        values.push(record.iter().skip(1).map(String::from).collect());
    }
    if values.len() != labels.len() {
        return Err(CliError::data(format!(
            "grid '{}' is not square",
            path.display()
        )));
    }
    Ok((labels, values))
}

pub fn group_labels(k: usize) -> Vec<String> {
    if k == 6 {
        FormationGroup::ALL.iter().map(|g| g.label().to_string()).collect()
    } else {
        (1..=k).map(|i| format!("g{i}")).collect()
    }
}
