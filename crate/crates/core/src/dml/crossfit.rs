use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::dataset::AnalysisRow;
use crate::derive_seed;
use crate::dml::RunConfig;
use crate::encoding::{EffectCodedMatrix, TreatmentCell};
use crate::error::{Error, Result};
use crate::learners::{fit_regressor, score_predictions, FitReport};

/// Cross-fitted residuals of the outcome and of every treatment column.
#[derive(Debug, Clone)]
pub struct ResidualSet {
    pub r_y: Array1<f64>,
    pub r_d: Array2<f64>,
    pub fold_assignment: Vec<usize>,
    /// Design columns, aligned with `r_d`.
    pub columns: Vec<TreatmentCell>,
    /// Treatment cell of each row, for count reporting.
    pub row_cells: Vec<TreatmentCell>,
    /// Held-out fit of the outcome model, one report per fold.
    pub outcome_reports: Vec<FitReport>,
    /// Held-out fit per treatment column per fold.
    pub treatment_reports: Vec<Vec<FitReport>>,
}

fn mean_report(reports: &[FitReport]) -> FitReport {
    let n = reports.len().max(1) as f64;
    let mse = reports.iter().map(|r| r.mse).sum::<f64>() / n;
    let r2s: Vec<f64> = reports.iter().filter_map(|r| r.r2).collect();
    let r2 = if r2s.is_empty() {
        None
    } else {
        Some(r2s.iter().sum::<f64>() / r2s.len() as f64)
    };
    FitReport { mse, r2 }
}

impl ResidualSet {
    /// Mean held-out outcome fit across folds.
    pub fn outcome_fit(&self) -> FitReport {
        mean_report(&self.outcome_reports)
    }

    /// Mean held-out fit of one treatment column across folds.
    pub fn treatment_fit(&self, column: usize) -> FitReport {
        mean_report(&self.treatment_reports[column])
    }

    /// Grand mean of the treatment fits.
    pub fn treatment_fit_mean(&self) -> FitReport {
        let per_column: Vec<FitReport> = (0..self.treatment_reports.len())
            .map(|c| self.treatment_fit(c))
            .collect();
        mean_report(&per_column)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let n_folds = self.fold_assignment.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; n_folds];
        for &f in &self.fold_assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Assign folds to rows, keeping the two perspective rows of one fixture in
/// the same fold. Fixture counts per fold differ by at most one.
pub(crate) fn grouped_fold_assignment(
    rows: &[AnalysisRow],
    n_folds: usize,
    seed: u64,
) -> Vec<usize> {
    let mut group_ids: Vec<&str> = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for row in rows {
        seen.entry(row.fixture_id.as_str()).or_insert_with(|| {
            group_ids.push(row.fixture_id.as_str());
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    group_ids.shuffle(&mut rng);
    let fold_of: std::collections::HashMap<&str, usize> = group_ids
        .iter()
        .enumerate()
        .map(|(pos, id)| (*id, pos % n_folds))
        .collect();
    rows.iter()
        .map(|r| fold_of[r.fixture_id.as_str()])
        .collect()
}

struct TaskResult {
    fold: usize,
    /// 0 = outcome, 1.. = treatment column + 1.
    target: usize,
    predictions: Vec<f64>,
    report: FitReport,
}

/// Cross-fit the outcome and all treatment columns against the confounders.
///
/// For each fold, models are trained on the rows outside it and predict the
/// rows inside it; residual = actual - prediction. Rows sharing a fixture id
/// stay in one fold. Residuals are mean-centered at the end. Each
/// (fold, target) task derives its own seed from the run seed, so the
/// parallel and serial schedules produce bit-identical results.
pub fn cross_fit_residuals(
    rows: &[AnalysisRow],
    design: &EffectCodedMatrix,
    config: &RunConfig,
) -> Result<ResidualSet> {
    let n = rows.len();
    if design.n_rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows vs {} design rows",
            design.n_rows()
        )));
    }
    if config.n_folds < 2 {
        return Err(Error::InvalidParameter(
            "cross-fitting requires n_folds >= 2".into(),
        ));
    }
    // leave-one-out (n_folds == n) is allowed; anything between needs
    // enough rows per fold to train on
    if n < config.n_folds * 10 && config.n_folds != n {
        return Err(Error::InvalidParameter(format!(
            "need at least {} rows for {} folds (or leave-one-out), got {n}",
            config.n_folds * 10,
            config.n_folds
        )));
    }
    config.learner.validate()?;
    let width = rows[0].confounders.len();
    if width == 0 || rows.iter().any(|r| r.confounders.len() != width) {
        return Err(Error::DimensionMismatch(
            "confounder vectors must share a fixed nonzero length".into(),
        ));
    }

    let folds = grouped_fold_assignment(rows, config.n_folds, config.seed);
    let x = Array2::from_shape_fn((n, width), |(i, j)| rows[i].confounders[j]);
    let y: Vec<f64> = rows.iter().map(|r| r.outcome).collect();
    let n_cols = design.n_columns();

    // a column constant in every training split cannot be residualized
    for c in 0..n_cols {
        let col = design.values.column(c);
        let constant_everywhere = (0..config.n_folds).all(|f| {
            let mut iter = (0..n).filter(|&i| folds[i] != f).map(|i| col[i]);
            match iter.next() {
                None => true,
                Some(first) => iter.all(|v| v == first),
            }
        });
        if constant_everywhere {
            let cell = design.columns[c];
            return Err(Error::DegenerateColumn {
                main: cell.main,
                rival: cell.rival,
            });
        }
    }

    // per-fold train/validation index sets and matrices, shared by targets
    let mut fold_data = Vec::with_capacity(config.n_folds);
    for f in 0..config.n_folds {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
        let val: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
        if train.is_empty() || val.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "fold {f} is empty; reduce n_folds"
            )));
        }
        let x_train = x.select(Axis(0), &train);
        let x_val = x.select(Axis(0), &val);
        fold_data.push((train, val, x_train, x_val));
    }

    let n_targets = 1 + n_cols;
    let tasks: Vec<(usize, usize)> = (0..config.n_folds)
        .flat_map(|f| (0..n_targets).map(move |t| (f, t)))
        .collect();

    let run_task = |&(fold, target): &(usize, usize)| -> Result<TaskResult> {
        let (train, val, x_train, x_val) = &fold_data[fold];
        let target_values = |i: usize| -> f64 {
            if target == 0 {
                y[i]
            } else {
                design.values[(i, target - 1)]
            }
        };
        let y_train: Vec<f64> = train.iter().map(|&i| target_values(i)).collect();
        let y_val: Vec<f64> = val.iter().map(|&i| target_values(i)).collect();
        let seed = derive_seed(config.seed, (fold * n_targets + target) as u64);
        let model = fit_regressor(&config.learner, x_train.view(), &y_train, seed)?;
        let predictions = model.predict(x_val.view());
        let report = score_predictions(&predictions, &y_val)?;
        Ok(TaskResult {
            fold,
            target,
            predictions,
            report,
        })
    };

    let results: Vec<TaskResult> = if config.parallel {
        tasks.par_iter().map(run_task).collect::<Result<Vec<_>>>()?
    } else {
        tasks.iter().map(run_task).collect::<Result<Vec<_>>>()?
    };

    let mut r_y = Array1::zeros(n);
    let mut r_d = Array2::zeros((n, n_cols));
    let mut outcome_reports = vec![FitReport { mse: 0.0, r2: None }; config.n_folds];
    let mut treatment_reports =
        vec![vec![FitReport { mse: 0.0, r2: None }; config.n_folds]; n_cols];
    for res in results {
        let val = &fold_data[res.fold].1;
        if res.target == 0 {
            for (&i, &p) in val.iter().zip(&res.predictions) {
                r_y[i] = y[i] - p;
            }
            outcome_reports[res.fold] = res.report;
        } else {
            let c = res.target - 1;
            for (&i, &p) in val.iter().zip(&res.predictions) {
                r_d[(i, c)] = design.values[(i, c)] - p;
            }
            treatment_reports[c][res.fold] = res.report;
        }
    }

    // final centering pass so the intercept-free final stage is exact
    let ry_mean = r_y.sum() / n as f64;
    r_y.mapv_inplace(|v| v - ry_mean);
    for c in 0..n_cols {
        let mean = r_d.column(c).sum() / n as f64;
        r_d.column_mut(c).mapv_inplace(|v| v - mean);
    }

    Ok(ResidualSet {
        r_y,
        r_d,
        fold_assignment: folds,
        columns: design.columns.clone(),
        row_cells: design.row_cells.clone(),
        outcome_reports,
        treatment_reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::build_effect_coded_matrix;
    use crate::learners::{LearnerParams, RegressorSpec};
    use rand::Rng;

    fn toy_rows(n: usize, seed: u64) -> Vec<AnalysisRow> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let x0: f64 = rng.random::<f64>();
                let x1: f64 = rng.random::<f64>();
                let cell = TreatmentCell::new(1 + (i % 2), 1 + ((i / 2) % 2));
                AnalysisRow {
                    fixture_id: format!("f{i}"),
                    cell,
                    outcome: if x0 > 0.5 { 1.0 } else { -1.0 } + if x1 > 0.3 { 0.5 } else { 0.0 },
                    is_home: i % 2 == 0,
                    confounders: vec![x0, x1],
                }
            })
            .collect()
    }

    fn config(n_folds: usize, seed: u64) -> RunConfig {
        RunConfig {
            k: 2,
            n_folds,
            seed,
            learner: RegressorSpec::boosted(LearnerParams {
                max_depth: 3,
                n_stages: 60,
                learning_rate: 0.3,
                min_samples_leaf: 2,
                subsample_fraction: 1.0,
                ridge_lambda: 0.0,
                seed: 0,
            }),
            ..RunConfig::default()
        }
    }

    /// Leave-one-out on a small set must match a brute-force refit loop.
    /// subsample_fraction = 1 makes every fit seed-independent, so the
    /// oracle loop needs no seed coordination.
    #[test]
    fn leave_one_out_matches_brute_force() {
        let rows = toy_rows(20, 3);
        let design = build_effect_coded_matrix(&rows, 2).unwrap();
        let cfg = config(20, 9);
        let rs = cross_fit_residuals(&rows, &design, &cfg).unwrap();

        let x = Array2::from_shape_fn((20, 2), |(i, j)| rows[i].confounders[j]);
        let oracle_raw: Vec<f64> = (0..20)
            .map(|i| {
                let train: Vec<usize> = (0..20).filter(|&j| j != i).collect();
                let xt = x.select(Axis(0), &train);
                let yt: Vec<f64> = train.iter().map(|&j| rows[j].outcome).collect();
                let model = fit_regressor(&cfg.learner, xt.view(), &yt, 0).unwrap();
                rows[i].outcome - model.predict(x.select(Axis(0), &[i]).view())[0]
            })
            .collect();
        // the implementation applies one final centering shift to all rows
        let shift = oracle_raw.iter().sum::<f64>() / 20.0;
        for i in 0..20 {
            let expected = oracle_raw[i] - shift;
            assert!(
                (rs.r_y[i] - expected).abs() < 1e-10,
                "row {i}: {} vs {expected}",
                rs.r_y[i]
            );
        }
    }

    /// Outcome that is a pure function of the confounders residualizes to
    /// near zero.
    #[test]
    fn zero_noise_outcome_residualizes_to_near_zero() {
        let rows = toy_rows(500, 4);
        let design = build_effect_coded_matrix(&rows, 2).unwrap();
        let rs = cross_fit_residuals(&rows, &design, &config(5, 2)).unwrap();
        let mean_abs = rs.r_y.iter().map(|v| v.abs()).sum::<f64>() / 500.0;
        assert!(mean_abs < 0.05, "mean |r_Y| = {mean_abs}");
    }

    #[test]
    fn identical_seed_reproduces_residuals_exactly() {
        let rows = toy_rows(120, 5);
        let design = build_effect_coded_matrix(&rows, 2).unwrap();
        let a = cross_fit_residuals(&rows, &design, &config(4, 7)).unwrap();
        let b = cross_fit_residuals(&rows, &design, &config(4, 7)).unwrap();
        assert_eq!(a.r_y, b.r_y);
        assert_eq!(a.r_d, b.r_d);
        let c = cross_fit_residuals(&rows, &design, &config(4, 8)).unwrap();
        assert_ne!(a.fold_assignment, c.fold_assignment);
    }

    #[test]
    fn serial_and_parallel_schedules_agree_bitwise() {
        let rows = toy_rows(150, 6);
        let design = build_effect_coded_matrix(&rows, 2).unwrap();
        let mut cfg = config(3, 11);
        cfg.learner.params.subsample_fraction = 0.7;
        cfg.parallel = true;
        let par = cross_fit_residuals(&rows, &design, &cfg).unwrap();
        cfg.parallel = false;
        let ser = cross_fit_residuals(&rows, &design, &cfg).unwrap();
        assert_eq!(par.r_y, ser.r_y);
        assert_eq!(par.r_d, ser.r_d);
    }

    #[test]
    fn perspective_pairs_share_a_fold() {
        let mut rows = toy_rows(100, 8);
        for i in 0..100 {
            rows[i].fixture_id = format!("fx{}", i / 2);
        }
        let folds = grouped_fold_assignment(&rows, 5, 1);
        for i in (0..100).step_by(2) {
            assert_eq!(folds[i], folds[i + 1]);
        }
        let mut sizes = vec![0usize; 5];
        for &f in &folds {
            sizes[f] += 1;
        }
        // 50 fixtures over 5 folds: exactly 10 fixtures = 20 rows each
        assert!(sizes.iter().all(|&s| s == 20));
    }

    #[test]
    fn degenerate_column_is_reported_with_its_cell() {
        // all rows share one cell and the omitted cell never occurs, so the
        // other columns are constant zero in every split
        let mut rows = toy_rows(60, 9);
        for r in rows.iter_mut() {
            r.cell = TreatmentCell::new(1, 1);
        }
        let design = build_effect_coded_matrix(&rows, 2).unwrap();
        let err = cross_fit_residuals(&rows, &design, &config(3, 1)).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn { .. }));
    }

    #[test]
    fn single_fold_is_rejected() {
        let rows = toy_rows(40, 10);
        let design = build_effect_coded_matrix(&rows, 2).unwrap();
        let err = cross_fit_residuals(&rows, &design, &config(1, 1)).unwrap_err();
        assert!(err.to_string().contains("n_folds"));
    }

    #[test]
    fn too_few_rows_for_folds_is_rejected() {
        let rows = toy_rows(30, 11);
        let design = build_effect_coded_matrix(&rows, 2).unwrap();
        assert!(cross_fit_residuals(&rows, &design, &config(4, 1)).is_err());
    }
}
