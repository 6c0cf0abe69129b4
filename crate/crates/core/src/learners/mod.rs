//! First-stage regression machinery: depth-capped regression trees,
//! squared-error gradient boosting, a ridge baseline, grid-search tuning on
//! negative MSE and MSE/R-squared evaluation.

mod boosting;
mod ridge;
mod tree;
mod tune;

pub use boosting::{fit_gradient_boosting, GradientBoosting};
pub use ridge::{fit_ridge, RidgeModel};
pub use tree::{fit_regression_tree, RegressionTree};
pub use tune::tune;

use ndarray::ArrayView2;

use crate::error::{Error, Result};

/// Hard cap on tree depth; deeper first stages make overly specific
/// approximations and break the symmetry of the final estimates.
pub const MAX_TREE_DEPTH: usize = 5;

/// Hyperparameters shared by the tree-based learners and the ridge baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerParams {
    /// Maximum edges on any root-to-leaf path, 1..=5.
    pub max_depth: usize,
    /// Boosting stages; 0 yields the training-mean predictor.
    pub n_stages: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    /// Fraction of rows drawn (without replacement) per stage.
    pub subsample_fraction: f64,
    /// Ridge penalty; only read by the ridge learner.
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            max_depth: 3,
            n_stages: 100,
            learning_rate: 0.1,
            min_samples_leaf: 20,
            subsample_fraction: 0.8,
            ridge_lambda: 1.0,
            seed: 0,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be at least 1".into()));
        }
        if self.max_depth > MAX_TREE_DEPTH {
            return Err(Error::InvalidParameter(format!(
                "max_depth {} exceeds the cap of {MAX_TREE_DEPTH}",
                self.max_depth
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidParameter(
                "learning_rate must be in (0, 1]".into(),
            ));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::InvalidParameter(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::InvalidParameter(
                "subsample_fraction must be in (0, 1]".into(),
            ));
        }
        if !(self.ridge_lambda >= 0.0 && self.ridge_lambda.is_finite()) {
            return Err(Error::InvalidParameter(
                "ridge_lambda must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Default tuning grid: depth {2,3,5} x learning rate {0.05,0.1} x
    /// stages {100,300}.
    pub fn default_grid(seed: u64) -> Vec<LearnerParams> {
        let mut grid = Vec::new();
        for &max_depth in &[2usize, 3, 5] {
            for &learning_rate in &[0.05f64, 0.1] {
                for &n_stages in &[100usize, 300] {
                    grid.push(LearnerParams {
                        max_depth,
                        n_stages,
                        learning_rate,
                        min_samples_leaf: 20,
                        subsample_fraction: 0.8,
                        ridge_lambda: 1.0,
                        seed,
                    });
                }
            }
        }
        grid
    }
}

/// Which first-stage regressor to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerKind {
    BoostedTrees,
    Ridge,
}

impl LearnerKind {
    pub fn parse(s: &str) -> Result<LearnerKind> {
        match s {
            "boosted" => Ok(LearnerKind::BoostedTrees),
            "ridge" => Ok(LearnerKind::Ridge),
            other => Err(Error::Config(format!("unknown learner '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::BoostedTrees => "boosted",
            LearnerKind::Ridge => "ridge",
        }
    }
}

/// A learner kind plus its validated hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressorSpec {
    pub kind: LearnerKind,
    pub params: LearnerParams,
}

impl RegressorSpec {
    pub fn boosted(params: LearnerParams) -> RegressorSpec {
        RegressorSpec {
            kind: LearnerKind::BoostedTrees,
            params,
        }
    }

    pub fn ridge(params: LearnerParams) -> RegressorSpec {
        RegressorSpec {
            kind: LearnerKind::Ridge,
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()
    }
}

/// A fitted first-stage model of either kind.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Boosted(GradientBoosting),
    Ridge(RidgeModel),
}

impl FittedModel {
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        match self {
            FittedModel::Boosted(m) => m.predict(x),
            FittedModel::Ridge(m) => m.predict(x),
        }
    }
}

/// Fit the regressor described by `spec`, with `seed` replacing the
/// parameter seed (cross-fitting derives one seed per task).
pub fn fit_regressor(
    spec: &RegressorSpec,
    x: ArrayView2<'_, f64>,
    y: &[f64],
    seed: u64,
) -> Result<FittedModel> {
    let params = spec.params.clone().with_seed(seed);
    match spec.kind {
        LearnerKind::BoostedTrees => Ok(FittedModel::Boosted(fit_gradient_boosting(x, y, &params)?)),
        LearnerKind::Ridge => Ok(FittedModel::Ridge(fit_ridge(x, y, &params)?)),
    }
}

/// Mean squared error plus the explained-variance ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub mse: f64,
    /// `None` when the target is constant and R-squared is undefined.
    pub r2: Option<f64>,
}

pub(crate) fn population_variance(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// Score predictions against targets: `mse` is the mean squared residual and
/// `r2 = 1 - mse / var(y)`.
pub fn score_predictions(predictions: &[f64], y: &[f64]) -> Result<FitReport> {
    if predictions.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} targets",
            predictions.len(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::DimensionMismatch("empty target vector".into()));
    }
    let n = y.len() as f64;
    let mse = predictions
        .iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n;
    let var = population_variance(y);
    let mean = y.iter().sum::<f64>() / n;
    let r2 = if var <= 1e-24 * mean.mul_add(mean, 1.0) {
        None
    } else {
        Some(1.0 - mse / var)
    };
    Ok(FitReport { mse, r2 })
}

/// Evaluate a fitted model on a dataset.
pub fn evaluate(model: &FittedModel, x: ArrayView2<'_, f64>, y: &[f64]) -> Result<FitReport> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows vs {} targets",
            x.nrows(),
            y.len()
        )));
    }
    score_predictions(&model.predict(x), y)
}
