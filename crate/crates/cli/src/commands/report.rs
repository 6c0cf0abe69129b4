use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use formdml::dataset::TargetVar;

use crate::config::{resolve_output_dir, KvConfig};
use crate::error::{CliError, CliResult};
use crate::heatmap;
use crate::tables::{group_labels, read_analysis_table, read_grid};

/// Descriptive tables (formation usage, per-formation averages) and the
/// heatmap rendering of an estimated beta grid.
#[derive(Args, Debug)]
pub struct ReportArgs {
    /// analysis.csv produced by `ingest`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// An `estimate` artifact directory; renders its beta grid as heatmap.svg.
    #[arg(long)]
    pub grid_dir: Option<PathBuf>,
    /// key=value config file; its values override the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(mut args: ReportArgs) -> CliResult<()> {
    if let Some(path) = &args.config {
        let kv = KvConfig::load(path)?;
        kv.override_path("input", &mut args.input);
        kv.override_path("output-dir", &mut args.output_dir);
        kv.override_path("grid-dir", &mut args.grid_dir);
    }
    let input = args
        .input
        .ok_or_else(|| CliError::config("report needs --input"))?;
    let out_dir = resolve_output_dir(args.output_dir)?;
    std::fs::create_dir_all(&out_dir)?;

    let (rows, _schema) = read_analysis_table(&input)?;
    let labels = group_labels(6);

    // per-league formation usage percentages (rows sum to 100)
    let mut usage: BTreeMap<String, [usize; 6]> = BTreeMap::new();
    for row in &rows {
        usage.entry(row.league.clone()).or_insert([0; 6])[row.main.index() - 1] += 1;
    }
    let usage_path = out_dir.join("formation_usage.csv");
    {
        let mut writer = csv::Writer::from_path(&usage_path)?;
        let mut header = vec!["league".to_string()];
        header.extend(labels.iter().cloned());
        writer.write_record(&header)?;
        for (league, counts) in &usage {
            let total: usize = counts.iter().sum();
            let mut record = vec![league.clone()];
            for c in counts {
                record.push(format!("{:.2}", 100.0 * *c as f64 / total as f64));
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
    }

    // per-formation averages of the main team's levels
    let mut sums = [[0.0f64; 6]; 5];
    let mut counts = [0usize; 6];
    for row in &rows {
        let g = row.main.index() - 1;
        counts[g] += 1;
        for (s, stat) in sums.iter_mut().enumerate() {
            stat[g] += row.levels[s];
        }
    }
    let stats_path = out_dir.join("formation_stats.csv");
    {
        let mut writer = csv::Writer::from_path(&stats_path)?;
        let mut header = vec!["statistic".to_string()];
        header.extend(labels.iter().cloned());
        writer.write_record(&header)?;
        for (s, target) in TargetVar::ALL.iter().enumerate() {
            let mut record = vec![target.name().to_string()];
            for g in 0..6 {
                let mean = if counts[g] > 0 {
                    sums[s][g] / counts[g] as f64
                } else {
                    f64::NAN
                };
                record.push(format!("{mean:.3}"));
            }
            writer.write_record(&record)?;
        }
        writer.flush()?;
    }
    println!(
        "wrote {} and {}",
        usage_path.display(),
        stats_path.display()
    );

    if let Some(grid_dir) = &args.grid_dir {
        let (grid_labels, beta_text) = read_grid(&grid_dir.join("beta.csv"))?;
        let (_, stars_text) = read_grid(&grid_dir.join("stars.csv"))?;
        let k = grid_labels.len();
        let mut values = vec![vec![0.0f64; k]; k];
        let mut stars = vec![vec![String::new(); k]; k];
        for i in 0..k {
            for j in 0..k {
                values[i][j] = beta_text[i][j].parse::<f64>().map_err(|_| {
                    CliError::data(format!("bad beta value '{}'", beta_text[i][j]))
                })?;
                if i != j {
                    stars[i][j] = stars_text[i][j].clone();
                }
            }
        }
        let svg = heatmap::render("estimated formation effects", &grid_labels, &values, &stars);
        let heatmap_path = out_dir.join("heatmap.svg");
        std::fs::write(&heatmap_path, svg)?;
        println!("wrote {}", heatmap_path.display());
    }
    Ok(())
}
