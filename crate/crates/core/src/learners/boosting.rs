use ndarray::ArrayView2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::learners::tree::{
    fit_tree_in_workspace, ColumnData, FitWorkspace, Presorted, RegressionTree,
};
use crate::learners::LearnerParams;

/// Squared-error gradient-boosted tree ensemble.
///
/// Prediction is the training mean plus `learning_rate` times the sum of the
/// stage trees, each fit to the current residuals on a seeded subsample.
#[derive(Debug, Clone)]
pub struct GradientBoosting {
    pub base: f64,
    pub learning_rate: f64,
    trees: Vec<RegressionTree>,
    staged_train_mse: Vec<f64>,
}

impl GradientBoosting {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut v = self.base;
        for tree in &self.trees {
            v += self.learning_rate * tree.predict_row(row);
        }
        v
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let mut buf = Vec::with_capacity(x.ncols());
        (0..x.nrows())
            .map(|i| {
                buf.clear();
                buf.extend(x.row(i).iter().copied());
                self.predict_row(&buf)
            })
            .collect()
    }

    pub fn n_stages(&self) -> usize {
        self.trees.len()
    }

    /// Training MSE recorded after each stage (stage 0 = mean predictor).
    pub fn staged_train_mse(&self) -> &[f64] {
        &self.staged_train_mse
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }
}

/// Draw `amount` distinct row indices, returned as a membership mask.
fn subsample_mask(rng: &mut ChaCha12Rng, n: usize, amount: usize) -> Vec<bool> {
    let mut mask = vec![false; n];
    for ix in rand::seq::index::sample(rng, n, amount) {
        mask[ix] = true;
    }
    mask
}

/// Fit the boosted ensemble. With `subsample_fraction = 1` the fit consumes
/// no randomness and the training MSE is non-increasing in the stage count.
pub fn fit_gradient_boosting(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    params: &LearnerParams,
) -> Result<GradientBoosting> {
    params.validate()?;
    let n = y.len();
    if x.nrows() != n || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows vs {} targets",
            x.nrows(),
            n
        )));
    }

    let data = ColumnData::from_view(x);
    let presorted = Presorted::build(&data);
    let base = y.iter().sum::<f64>() / n as f64;
    let mut predictions = vec![base; n];
    let mut residuals = vec![0.0; n];
    let mut rng = ChaCha12Rng::seed_from_u64(params.seed);
    let full_sample = params.subsample_fraction >= 1.0;
    let sample_size = if full_sample {
        n
    } else {
        ((params.subsample_fraction * n as f64).floor() as usize).max(1)
    };

    let train_mse = |preds: &[f64]| -> f64 {
        preds
            .iter()
            .zip(y)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n as f64
    };

    let mut trees = Vec::with_capacity(params.n_stages);
    let mut staged = Vec::with_capacity(params.n_stages + 1);
    staged.push(train_mse(&predictions));

    let mut ws = FitWorkspace::new(data.cols.len(), n);
    for _ in 0..params.n_stages {
        for i in 0..n {
            residuals[i] = y[i] - predictions[i];
        }
        let n_sample = if full_sample {
            ws.fill_full(&presorted)
        } else {
            let mask = subsample_mask(&mut rng, n, sample_size);
            ws.fill_masked(&presorted, &mask)
        };
        let tree = fit_tree_in_workspace(&data, &residuals, &mut ws, n_sample, params);
        for (i, pred) in predictions.iter_mut().enumerate() {
            *pred += params.learning_rate * tree.predict_by_columns(&data.cols, i);
        }
        trees.push(tree);
        staged.push(train_mse(&predictions));
    }

    Ok(GradientBoosting {
        base,
        learning_rate: params.learning_rate,
        trees,
        staged_train_mse: staged,
    })
}
