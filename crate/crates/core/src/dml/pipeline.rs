use std::collections::HashSet;

use ndarray::Array2;

use crate::dataset::AnalysisRow;
use crate::dml::crossfit::{cross_fit_residuals, ResidualSet};
use crate::dml::matrix::{assemble_matrix, count_cells, estimate_home_effect, BetaMatrix};
use crate::dml::ols::final_stage_ols;
use crate::dml::RunConfig;
use crate::encoding::{build_effect_coded_matrix, TreatmentCell};
use crate::error::{Error, Result};
use crate::learners::FitReport;

/// Max |corr(confounder, residual)| for one residual vector.
#[derive(Debug, Clone)]
pub struct OrthogonalityEntry {
    /// "r_Y" or the treatment cell.
    pub residual: String,
    pub max_abs_corr: f64,
    pub worst_confounder: usize,
}

/// Everything worth inspecting about a run besides the matrix itself.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub cell_counts: Array2<usize>,
    pub fold_sizes: Vec<usize>,
    /// Held-out fit of the outcome first stage (MSE / R-squared analogue of
    /// the first-stage performance table).
    pub outcome_fit: FitReport,
    /// Mean held-out fit over the treatment first stages.
    pub treatment_fit_mean: FitReport,
    /// max |beta_ij + beta_ji| over i != j and the worst pair.
    pub antisymmetry_gap: f64,
    pub antisymmetry_worst_pair: TreatmentCell,
    /// Raw diagonal estimates (displayed as zero).
    pub raw_diagonal: Vec<f64>,
    /// Per-residual orthogonality diagnostics.
    pub orthogonality: Vec<OrthogonalityEntry>,
    pub max_orthogonality_corr: f64,
}

/// A completed run: the effect matrix, diagnostics and the residual set.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub matrix: BetaMatrix,
    pub diagnostics: Diagnostics,
    pub residuals: ResidualSet,
}

fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

fn orthogonality_diagnostics(
    rows: &[AnalysisRow],
    residuals: &ResidualSet,
) -> (Vec<OrthogonalityEntry>, f64) {
    let n = rows.len();
    let width = rows[0].confounders.len();
    let confounders: Vec<Vec<f64>> = (0..width)
        .map(|j| rows.iter().map(|r| r.confounders[j]).collect())
        .collect();

    let mut entries = Vec::with_capacity(1 + residuals.columns.len());
    let mut overall: f64 = 0.0;
    let mut check = |label: String, values: &[f64]| {
        let mut max_abs = 0.0f64;
        let mut worst = 0;
        for (j, col) in confounders.iter().enumerate() {
            let c = correlation(col, values).abs();
            if c > max_abs {
                max_abs = c;
                worst = j;
            }
        }
        overall = overall.max(max_abs);
        entries.push(OrthogonalityEntry {
            residual: label,
            max_abs_corr: max_abs,
            worst_confounder: worst,
        });
    };

    let r_y: Vec<f64> = residuals.r_y.iter().copied().collect();
    check("r_Y".into(), &r_y);
    let mut buf = vec![0.0; n];
    for (c, cell) in residuals.columns.iter().enumerate() {
        for i in 0..n {
            buf[i] = residuals.r_d[(i, c)];
        }
        check(format!("r_D{cell}"), &buf);
    }
    (entries, overall)
}

/// Run the full estimation chain: effect coding, cross-fitted
/// residualization, final-stage OLS and matrix assembly, with diagnostics.
pub fn run_pipeline(rows: &[AnalysisRow], config: &RunConfig) -> Result<PipelineOutput> {
    if rows.is_empty() {
        return Err(Error::Data("no analysis rows".into()));
    }
    if config.n_folds < 2 {
        return Err(Error::InvalidParameter(
            "cross-fitting requires n_folds >= 2".into(),
        ));
    }
    let distinct: HashSet<TreatmentCell> = rows.iter().map(|r| r.cell).collect();
    if distinct.len() < 2 {
        return Err(Error::Data(
            "need at least 2 distinct treatment cells".into(),
        ));
    }

    let design = build_effect_coded_matrix(rows, config.k)?;
    let residuals = cross_fit_residuals(rows, &design, config)?;
    let fit = final_stage_ols(&residuals, config.se_variant)?;
    let home_effect = estimate_home_effect(rows)?;
    let cell_counts = count_cells(rows, config.k);
    let matrix = assemble_matrix(&fit, config.k, home_effect, cell_counts.clone())?;

    let (orthogonality, max_corr) = orthogonality_diagnostics(rows, &residuals);
    let (gap, worst_pair) = matrix.antisymmetry_gap();
    let diagnostics = Diagnostics {
        cell_counts,
        fold_sizes: residuals.fold_sizes(),
        outcome_fit: residuals.outcome_fit(),
        treatment_fit_mean: residuals.treatment_fit_mean(),
        antisymmetry_gap: gap,
        antisymmetry_worst_pair: worst_pair,
        raw_diagonal: matrix.raw_diagonal(),
        orthogonality,
        max_orthogonality_corr: max_corr,
    };

    Ok(PipelineOutput {
        matrix,
        diagnostics,
        residuals,
    })
}
