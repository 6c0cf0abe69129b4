use nalgebra::{DMatrix, DVector};
use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::learners::LearnerParams;

/// Ridge baseline: centered normal equations with an unpenalized intercept.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl RidgeModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(x, c)| x * c)
                .sum::<f64>()
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                self.intercept
                    + x.row(i)
                        .iter()
                        .zip(&self.coefficients)
                        .map(|(x, c)| x * c)
                        .sum::<f64>()
            })
            .collect()
    }
}

/// Fit `(Xc' Xc + lambda I) beta = Xc' yc` on centered data. At lambda = 0
/// this is ordinary least squares and requires full column rank.
pub fn fit_ridge(x: ArrayView2<'_, f64>, y: &[f64], params: &LearnerParams) -> Result<RidgeModel> {
    params.validate()?;
    let n = y.len();
    let p = x.ncols();
    if x.nrows() != n || n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows vs {} targets",
            x.nrows(),
            n
        )));
    }

    let y_mean = y.iter().sum::<f64>() / n as f64;
    let col_means: Vec<f64> = (0..p).map(|j| x.column(j).sum() / n as f64).collect();

    let mut xc = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            xc[(i, j)] = x[(i, j)] - col_means[j];
        }
    }
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let mut gram = xc.transpose() * &xc;
    for j in 0..p {
        gram[(j, j)] += params.ridge_lambda;
    }
    let rhs = xc.transpose() * yc;
    let coefficients = gram
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .ok_or_else(|| Error::Data("singular ridge system (lambda = 0 on collinear columns?)".into()))?;

    let intercept = y_mean
        - col_means
            .iter()
            .zip(coefficients.iter())
            .map(|(m, c)| m * c)
            .sum::<f64>();
    Ok(RidgeModel {
        intercept,
        coefficients: coefficients.iter().copied().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn params(lambda: f64) -> LearnerParams {
        LearnerParams {
            ridge_lambda: lambda,
            ..LearnerParams::default()
        }
    }

    /// Closed-form least squares on a small full-rank instance, solved here
    /// independently by Cramer's rule on the 2x2 centered system.
    #[test]
    fn lambda_zero_matches_closed_form_least_squares() {
        let x = Array2::from_shape_vec(
            (5, 2),
            vec![1.0, 2.0, 2.0, 1.0, 3.0, 4.0, 4.0, 3.0, 5.0, 7.0],
        )
        .unwrap();
        let y = vec![3.1, 2.9, 7.2, 6.8, 12.3];

        let n = 5.0;
        let mx: Vec<f64> = (0..2).map(|j| x.column(j).sum() / n).collect();
        let my = y.iter().sum::<f64>() / n;
        let mut s = [[0.0f64; 2]; 2];
        let mut b = [0.0f64; 2];
        for i in 0..5 {
            let xi = [x[(i, 0)] - mx[0], x[(i, 1)] - mx[1]];
            let yi = y[i] - my;
            for a in 0..2 {
                for c in 0..2 {
                    s[a][c] += xi[a] * xi[c];
                }
                b[a] += xi[a] * yi;
            }
        }
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let beta = [
            (b[0] * s[1][1] - b[1] * s[0][1]) / det,
            (s[0][0] * b[1] - s[1][0] * b[0]) / det,
        ];

        let model = fit_ridge(x.view(), &y, &params(0.0)).unwrap();
        for j in 0..2 {
            let rel = (model.coefficients[j] - beta[j]).abs() / beta[j].abs().max(1e-12);
            assert!(rel < 1e-8, "coefficient {j}: {} vs {}", model.coefficients[j], beta[j]);
        }
    }

    #[test]
    fn penalty_shrinks_coefficients() {
        let x = Array2::from_shape_fn((20, 1), |(i, _)| i as f64);
        let y: Vec<f64> = (0..20).map(|i| 2.0 * i as f64 + 1.0).collect();
        let loose = fit_ridge(x.view(), &y, &params(0.0)).unwrap();
        let tight = fit_ridge(x.view(), &y, &params(100.0)).unwrap();
        assert!(tight.coefficients[0].abs() < loose.coefficients[0].abs());
        assert!((loose.coefficients[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn collinear_columns_need_a_positive_lambda() {
        let x = Array2::from_shape_fn((10, 2), |(i, _)| i as f64);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(fit_ridge(x.view(), &y, &params(0.0)).is_err());
        assert!(fit_ridge(x.view(), &y, &params(0.1)).is_ok());
    }
}
