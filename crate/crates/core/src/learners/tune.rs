use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::learners::{
    fit_regressor, population_variance, FitReport, LearnerKind, LearnerParams, RegressorSpec,
};

/// Deterministic shuffled round-robin fold assignment.
pub(crate) fn fold_assignment(n: usize, n_folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut folds = vec![0usize; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % n_folds;
    }
    folds
}

fn take_rows(x: ArrayView2<'_, f64>, y: &[f64], rows: &[usize]) -> (Array2<f64>, Vec<f64>) {
    let sub = x.select(Axis(0), rows);
    let suby = rows.iter().map(|&i| y[i]).collect();
    (sub, suby)
}

/// Grid search maximizing cross-validated negative MSE.
///
/// Every candidate is validated (including the depth cap) before any model
/// is fit. Ties on the score break toward fewer stages, then shallower
/// trees, then grid order. Folds are fixed across candidates via `seed`.
pub fn tune(
    grid: &[LearnerParams],
    x: ArrayView2<'_, f64>,
    y: &[f64],
    n_folds: usize,
    seed: u64,
) -> Result<(LearnerParams, FitReport)> {
    tune_spec(grid, LearnerKind::BoostedTrees, x, y, n_folds, seed)
}

/// `tune` for an arbitrary learner kind.
pub fn tune_spec(
    grid: &[LearnerParams],
    kind: LearnerKind,
    x: ArrayView2<'_, f64>,
    y: &[f64],
    n_folds: usize,
    seed: u64,
) -> Result<(LearnerParams, FitReport)> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty tuning grid".into()));
    }
    if n_folds < 2 || n_folds > y.len() {
        return Err(Error::InvalidParameter(format!(
            "n_folds must be in 2..={}, got {n_folds}",
            y.len()
        )));
    }
    for candidate in grid {
        candidate.validate()?;
    }

    let folds = fold_assignment(y.len(), n_folds, seed);
    let mut splits = Vec::with_capacity(n_folds);
    for f in 0..n_folds {
        let train: Vec<usize> = (0..y.len()).filter(|&i| folds[i] != f).collect();
        let val: Vec<usize> = (0..y.len()).filter(|&i| folds[i] == f).collect();
        splits.push((train, val));
    }

    let mut best: Option<(usize, f64)> = None;
    let mut scores = Vec::with_capacity(grid.len());
    for (ix, candidate) in grid.iter().enumerate() {
        let spec = RegressorSpec {
            kind,
            params: candidate.clone(),
        };
        let mut fold_mse = 0.0;
        for (train, val) in &splits {
            let (xt, yt) = take_rows(x, y, train);
            let (xv, yv) = take_rows(x, y, val);
            let model = fit_regressor(&spec, xt.view(), &yt, candidate.seed)?;
            let preds = model.predict(xv.view());
            fold_mse += preds
                .iter()
                .zip(&yv)
                .map(|(p, t)| (p - t) * (p - t))
                .sum::<f64>()
                / yv.len() as f64;
        }
        let mse = fold_mse / n_folds as f64;
        scores.push(mse);
        let better = match best {
            None => true,
            Some((best_ix, best_mse)) => {
                let b = &grid[best_ix];
                mse < best_mse
                    || (mse == best_mse
                        && (candidate.n_stages < b.n_stages
                            || (candidate.n_stages == b.n_stages
                                && candidate.max_depth < b.max_depth)))
            }
        };
        if better {
            best = Some((ix, mse));
        }
    }

    let (best_ix, best_mse) = best.expect("non-empty grid");
    let var = population_variance(y);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let r2 = if var <= 1e-24 * mean.mul_add(mean, 1.0) {
        None
    } else {
        Some(1.0 - best_mse / var)
    };
    Ok((
        grid[best_ix].clone(),
        FitReport {
            mse: best_mse,
            r2,
        },
    ))
}
