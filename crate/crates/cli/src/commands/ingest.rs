use std::collections::HashMap;
use std::path::PathBuf;

use clap::Args;
use formdml::dataset::{
    build_analysis_rows, filter_stage, parse_fixture_table, ColumnMapping, FixtureSet,
    FormationMap, TargetVar,
};

use crate::config::{resolve_output_dir, KvConfig};
use crate::error::{CliError, CliResult};
use crate::tables::{write_analysis_table, write_reject_report};

/// Normalize a fixture table into analysis rows plus a reject report.
#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Delimiter-separated fixture table with a header row.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Where analysis.csv and rejects.csv are written.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Formation mapping file (raw,group); defaults to the built-in table.
    #[arg(long)]
    pub mapping: Option<PathBuf>,
    /// Column mapping file (canonical_field=source_column).
    #[arg(long)]
    pub columns: Option<PathBuf>,
    /// Rounds dropped at the start of each season.
    #[arg(long, default_value_t = 2)]
    pub drop_first: u32,
    /// Rounds dropped at the end of each season.
    #[arg(long, default_value_t = 4)]
    pub drop_last: u32,
    /// Stage label to keep when the source has a stage column.
    #[arg(long, default_value = "Regular Season")]
    pub stage_keep: String,
    /// key=value config file; its values override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(mut args: IngestArgs) -> CliResult<()> {
    if let Some(path) = &args.config {
        let kv = KvConfig::load(path)?;
        kv.override_path("input", &mut args.input);
        kv.override_path("output-dir", &mut args.output_dir);
        kv.override_path("mapping", &mut args.mapping);
        kv.override_path("columns", &mut args.columns);
        kv.override_parse("drop-first", &mut args.drop_first)?;
        kv.override_parse("drop-last", &mut args.drop_last)?;
        kv.override_string("stage-keep", &mut args.stage_keep);
    }
    let input = args
        .input
        .ok_or_else(|| CliError::config("ingest needs --input"))?;
    let out_dir = resolve_output_dir(args.output_dir)?;
    std::fs::create_dir_all(&out_dir)?;

    let mapping = match &args.mapping {
        Some(path) => FormationMap::from_file(path)?,
        None => FormationMap::default(),
    };
    let columns = match &args.columns {
        Some(path) => ColumnMapping::from_file(path)?,
        None => ColumnMapping::default(),
    };

    let (fixtures, rejects) = parse_fixture_table(&input, &columns)?;
    println!(
        "parsed {} fixtures ({} rejected)",
        fixtures.len(),
        rejects.len()
    );

    let (staged, stage_removed) = filter_stage(&fixtures, &args.stage_keep);
    println!(
        "stage filter: {} -> {} fixtures ({} non-'{}' removed)",
        fixtures.len(),
        staged.len(),
        stage_removed,
        args.stage_keep
    );

    let set = FixtureSet::new(staged.clone());
    let filtered = set.filter_rounds(args.drop_first, args.drop_last);
    println!(
        "round filter (drop first {}, last {}): {} -> {} fixtures",
        args.drop_first,
        args.drop_last,
        staged.len(),
        filtered.len()
    );
    if filtered.is_empty() {
        return Err(CliError::data("no fixtures left after filtering"));
    }

    // strength features are computed against the unfiltered season history
    let table = build_analysis_rows(
        filtered.fixtures(),
        &staged,
        TargetVar::Goals,
        &mapping,
    )?;

    let by_id: HashMap<&str, &formdml::Fixture> = staged
        .iter()
        .map(|f| (f.fixture_id.as_str(), f))
        .collect();
    let analysis_path = out_dir.join("analysis.csv");
    write_analysis_table(&analysis_path, &table, &by_id)?;
    let rejects_path = out_dir.join("rejects.csv");
    write_reject_report(&rejects_path, &rejects)?;

    println!(
        "wrote {} analysis rows ({} confounders) to {}",
        table.rows.len(),
        table.schema.len(),
        analysis_path.display()
    );
    println!("wrote {} rejects to {}", rejects.len(), rejects_path.display());
    Ok(())
}
