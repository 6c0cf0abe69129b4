use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use formdml::dataset::TargetVar;
use formdml::dml::{run_pipeline, side_adjust, RunConfig, SandwichKind};
use formdml::encoding::TreatmentCell;
use formdml::learners::{FitReport, LearnerKind, LearnerParams, RegressorSpec};

use crate::config::{resolve_output_dir, KvConfig};
use crate::error::{CliError, CliResult};
use crate::tables::{read_analysis_table, write_grid};

/// Estimate the formation-effect matrix from an analysis table.
#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// analysis.csv produced by `ingest` (or an equivalent table).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Run-artifact directory (fixed file names, see README).
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, default_value = "goals")]
    pub target: String,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First-stage learner: boosted | ridge.
    #[arg(long, default_value = "boosted")]
    pub learner: String,
    /// Also write beta_side.csv and render the side-adjusted matrix.
    #[arg(long)]
    pub side_adjusted: bool,
    /// key=value config file; overrides flags. Extra keys: depth, stages,
    /// learning-rate, min-leaf, subsample, lambda, se-variant, serial.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn fit_line(report: &FitReport) -> String {
    match report.r2 {
        Some(r2) => format!("mse {:.4}, r2 {:.4}", report.mse, r2),
        None => format!("mse {:.4}, r2 undefined", report.mse),
    }
}

pub fn run(mut args: EstimateArgs) -> CliResult<()> {
    let kv = match &args.config {
        Some(path) => KvConfig::load(path)?,
        None => KvConfig::default(),
    };
    kv.override_path("input", &mut args.input);
    kv.override_path("output-dir", &mut args.output_dir);
    kv.override_string("target", &mut args.target);
    kv.override_parse("folds", &mut args.folds)?;
    kv.override_parse("seed", &mut args.seed)?;
    kv.override_string("learner", &mut args.learner);
    kv.override_flag("side-adjusted", &mut args.side_adjusted)?;

    let mut params = LearnerParams::default();
    kv.override_parse("depth", &mut params.max_depth)?;
    kv.override_parse("stages", &mut params.n_stages)?;
    kv.override_parse("learning-rate", &mut params.learning_rate)?;
    kv.override_parse("min-leaf", &mut params.min_samples_leaf)?;
    kv.override_parse("subsample", &mut params.subsample_fraction)?;
    kv.override_parse("lambda", &mut params.ridge_lambda)?;
    let mut se_variant = "hc1".to_string();
    kv.override_string("se-variant", &mut se_variant);
    let mut serial = false;
    kv.override_flag("serial", &mut serial)?;

    let input = args
        .input
        .ok_or_else(|| CliError::config("estimate needs --input"))?;
    let out_dir = resolve_output_dir(args.output_dir)?;
    std::fs::create_dir_all(&out_dir)?;

    let target = TargetVar::parse(&args.target)?;
    let kind = LearnerKind::parse(&args.learner)?;
    let config = RunConfig {
        target,
        k: 6,
        n_folds: args.folds,
        seed: args.seed,
        learner: RegressorSpec { kind, params },
        se_variant: SandwichKind::parse(&se_variant)?,
        parallel: !serial,
    };

    let (parsed, _schema) = read_analysis_table(&input)?;
    let rows: Vec<formdml::AnalysisRow> =
        parsed.iter().map(|r| r.to_analysis_row(target)).collect();
    println!(
        "estimating {} effects on {} rows ({} folds, {} learner, seed {})",
        target.name(),
        rows.len(),
        config.n_folds,
        kind.name(),
        config.seed
    );

    let output = run_pipeline(&rows, &config)?;
    let matrix = &output.matrix;
    let diagnostics = &output.diagnostics;
    let k = matrix.k;

    // config echo
    let mut echo = String::new();
    let _ = writeln!(echo, "input={}", input.display());
    let _ = writeln!(echo, "target={}", target.name());
    let _ = writeln!(echo, "folds={}", config.n_folds);
    let _ = writeln!(echo, "seed={}", config.seed);
    let _ = writeln!(echo, "learner={}", kind.name());
    let _ = writeln!(echo, "depth={}", config.learner.params.max_depth);
    let _ = writeln!(echo, "stages={}", config.learner.params.n_stages);
    let _ = writeln!(echo, "learning-rate={}", config.learner.params.learning_rate);
    let _ = writeln!(echo, "min-leaf={}", config.learner.params.min_samples_leaf);
    let _ = writeln!(echo, "subsample={}", config.learner.params.subsample_fraction);
    let _ = writeln!(echo, "lambda={}", config.learner.params.ridge_lambda);
    let _ = writeln!(echo, "se-variant={}", config.se_variant.name());
    let _ = writeln!(echo, "side-adjusted={}", args.side_adjusted);
    std::fs::write(out_dir.join("config.txt"), echo)?;

    // grids: displayed values (diagonal zero); raw diagonal in diagnostics
    let cell = |i: usize, j: usize| TreatmentCell::new(i + 1, j + 1);
    write_grid(&out_dir.join("beta.csv"), k, |i, j| {
        format!("{}", matrix.display_value(cell(i, j)))
    })?;
    write_grid(&out_dir.join("se.csv"), k, |i, j| {
        format!("{}", matrix.se_at(cell(i, j)))
    })?;
    write_grid(&out_dir.join("pvalues.csv"), k, |i, j| {
        format!("{}", matrix.p_at(cell(i, j)))
    })?;
    write_grid(&out_dir.join("stars.csv"), k, |i, j| {
        matrix.stars_at(cell(i, j)).as_str().to_string()
    })?;
    write_grid(&out_dir.join("counts.csv"), k, |i, j| {
        format!("{}", matrix.cell_counts[(i, j)])
    })?;
    if args.side_adjusted {
        let adjusted = side_adjust(matrix);
        write_grid(&out_dir.join("beta_side.csv"), k, |i, j| {
            format!("{}", adjusted[(i, j)])
        })?;
    }

    // residual summary
    let residuals = &output.residuals;
    let n = residuals.r_y.len() as f64;
    let ry_sd = (residuals.r_y.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let rd_mean_abs =
        residuals.r_d.iter().map(|v| v.abs()).sum::<f64>() / residuals.r_d.len() as f64;
    let mut summary = String::new();
    let _ = writeln!(summary, "rows={}", residuals.r_y.len());
    let _ = writeln!(summary, "fold_sizes={:?}", diagnostics.fold_sizes);
    let _ = writeln!(summary, "r_y_sd={ry_sd:.6}");
    let _ = writeln!(summary, "r_d_mean_abs={rd_mean_abs:.6}");
    let _ = writeln!(summary, "outcome_first_stage: {}", fit_line(&diagnostics.outcome_fit));
    let _ = writeln!(
        summary,
        "treatment_first_stage_mean: {}",
        fit_line(&diagnostics.treatment_fit_mean)
    );
    std::fs::write(out_dir.join("residual_summary.txt"), summary)?;

    // diagnostics report
    let mut diag = String::new();
    let _ = writeln!(diag, "home_effect={}", matrix.home_effect);
    let _ = writeln!(
        diag,
        "antisymmetry_gap={:.6} (worst pair {} / {})",
        diagnostics.antisymmetry_gap,
        diagnostics.antisymmetry_worst_pair,
        diagnostics.antisymmetry_worst_pair.transpose()
    );
    let _ = writeln!(
        diag,
        "raw_diagonal={:?}",
        diagnostics
            .raw_diagonal
            .iter()
            .map(|v| (v * 1e6).round() / 1e6)
            .collect::<Vec<f64>>()
    );
    let _ = writeln!(
        diag,
        "max_orthogonality_corr={:.6}",
        diagnostics.max_orthogonality_corr
    );
    let _ = writeln!(diag, "per-residual max |corr(confounder, residual)|:");
    for entry in &diagnostics.orthogonality {
        let _ = writeln!(
            diag,
            "  {}: {:.6} (confounder #{})",
            entry.residual, entry.max_abs_corr, entry.worst_confounder
        );
    }
    std::fs::write(out_dir.join("diagnostics.txt"), diag)?;

    // rendered matrix
    let mut rendered = matrix.render_text(false);
    if args.side_adjusted {
        rendered.push('\n');
        rendered.push_str(&matrix.render_text(true));
    }
    std::fs::write(out_dir.join("matrix.txt"), &rendered)?;

    let significant: Vec<String> = TreatmentCell::grid(k)
        .into_iter()
        .filter(|c| !c.is_diagonal() && matrix.stars_at(*c).is_significant())
        .map(|c| format!("{c} {}", matrix.format_cell(c)))
        .collect();
    println!(
        "home effect {:.3}; {} significant cells{}",
        matrix.home_effect,
        significant.len(),
        if significant.is_empty() {
            String::new()
        } else {
            format!(": {}", significant.join(", "))
        }
    );
    println!("artifacts in {}", out_dir.display());
    Ok(())
}
