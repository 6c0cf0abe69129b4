use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dml::crossfit::ResidualSet;
use crate::error::{Error, Result};

/// Heteroskedasticity-consistent sandwich flavor.
///
/// All variants are `(X'X)^-1 X' diag(w) X (X'X)^-1` with per-row weights
/// built from the squared residuals; HC1 applies the n/(n-p) small-sample
/// correction, HC2/HC3 rescale by leverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SandwichKind {
    Hc0,
    #[default]
    Hc1,
    Hc2,
    Hc3,
}

impl SandwichKind {
    pub fn parse(s: &str) -> Result<SandwichKind> {
        match s.to_ascii_lowercase().as_str() {
            "hc0" => Ok(SandwichKind::Hc0),
            "hc1" => Ok(SandwichKind::Hc1),
            "hc2" => Ok(SandwichKind::Hc2),
            "hc3" => Ok(SandwichKind::Hc3),
            other => Err(Error::Config(format!("unknown sandwich variant '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SandwichKind::Hc0 => "hc0",
            SandwichKind::Hc1 => "hc1",
            SandwichKind::Hc2 => "hc2",
            SandwichKind::Hc3 => "hc3",
        }
    }
}

/// Coefficients with robust covariance and normal-reference inference.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub covariance: Array2<f64>,
    pub standard_errors: Vec<f64>,
    pub t_values: Vec<f64>,
    pub p_values: Vec<f64>,
}

/// Two-sided p-value of a t statistic under the standard normal reference.
pub fn two_sided_p(t: f64) -> f64 {
    if !t.is_finite() {
        return if t.is_nan() { 1.0 } else { 0.0 };
    }
    let normal = Normal::new(0.0, 1.0).unwrap();
    (2.0 * (1.0 - normal.cdf(t.abs()))).clamp(0.0, 1.0)
}

/// Intercept-free OLS with a sandwich covariance. `x` is used exactly as
/// given; the final stage centers residuals before calling this.
pub fn ols_with_sandwich(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    kind: SandwichKind,
) -> Result<OlsFit> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{n} design rows vs {} outcomes",
            y.len()
        )));
    }
    if n <= p {
        return Err(Error::InvalidParameter(format!(
            "need more rows than columns: n={n}, p={p}"
        )));
    }

    let xm = DMatrix::from_fn(n, p, |i, j| x[(i, j)]);
    let yv = DVector::from_column_slice(y);
    let xtx = xm.transpose() * &xm;
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("X'X is not positive definite".into()))?;
    let bread = chol.inverse();
    let xty = xm.transpose() * &yv;
    let beta = &bread * &xty;

    let fitted = &xm * &beta;
    let residuals = &yv - &fitted;

    // leverage only needed for HC2/HC3
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let e2 = residuals[i] * residuals[i];
            match kind {
                SandwichKind::Hc0 => e2,
                SandwichKind::Hc1 => e2 * n as f64 / (n - p) as f64,
                SandwichKind::Hc2 | SandwichKind::Hc3 => {
                    let xi = xm.row(i).transpose();
                    let h = (xi.transpose() * &bread * &xi)[(0, 0)];
                    let denom = (1.0 - h).max(1e-12);
                    if kind == SandwichKind::Hc2 {
                        e2 / denom
                    } else {
                        e2 / (denom * denom)
                    }
                }
            }
        })
        .collect();

    let mut meat = DMatrix::zeros(p, p);
    for i in 0..n {
        let xi = xm.row(i);
        for a in 0..p {
            let wa = weights[i] * xi[a];
            for b in 0..p {
                meat[(a, b)] += wa * xi[b];
            }
        }
    }
    let cov = &bread * meat * &bread;

    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let standard_errors: Vec<f64> = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let t_values: Vec<f64> = coefficients
        .iter()
        .zip(&standard_errors)
        .map(|(&b, &se)| {
            if se > 0.0 {
                b / se
            } else if b.abs() < 1e-300 {
                0.0
            } else {
                f64::INFINITY.copysign(b)
            }
        })
        .collect();
    let p_values: Vec<f64> = t_values.iter().map(|&t| two_sided_p(t)).collect();

    let covariance = Array2::from_shape_fn((p, p), |(a, b)| cov[(a, b)]);
    Ok(OlsFit {
        coefficients,
        covariance,
        standard_errors,
        t_values,
        p_values,
    })
}

/// Detect (near-)linearly-dependent columns by modified Gram-Schmidt.
/// Returns indices whose norm collapses after projection on earlier columns.
fn dependent_columns(x: &Array2<f64>) -> Vec<usize> {
    let n = x.nrows();
    let p = x.ncols();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dependent = Vec::new();
    for j in 0..p {
        let mut v: Vec<f64> = x.column(j).to_vec();
        let orig_norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(a, c)| a * c).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < 1e-10 * orig_norm.max(1.0) * (n as f64).sqrt() {
            dependent.push(j);
        } else {
            for vi in v.iter_mut() {
                *vi /= norm;
            }
            basis.push(v);
        }
    }
    dependent
}

/// Final-stage regression of outcome residuals on treatment residuals.
///
/// Both sides are mean-centered first (the stage has no intercept), the
/// design is checked for full column rank, and inference uses the requested
/// sandwich covariance with normal-reference two-sided p-values.
pub fn final_stage_ols(residuals: &ResidualSet, kind: SandwichKind) -> Result<OlsFit> {
    let n = residuals.r_d.nrows();
    let p = residuals.r_d.ncols();
    let mut x = residuals.r_d.clone();
    for j in 0..p {
        let mean = x.column(j).sum() / n as f64;
        x.column_mut(j).mapv_inplace(|v| v - mean);
    }
    let y_mean = residuals.r_y.sum() / n as f64;
    let y: Vec<f64> = residuals.r_y.iter().map(|v| v - y_mean).collect();

    let dependent = dependent_columns(&x);
    if !dependent.is_empty() {
        let described: Vec<String> = dependent
            .iter()
            .map(|&j| {
                let cell = residuals.columns[j];
                let count = residuals.row_cells.iter().filter(|&&c| c == cell).count();
                format!("{cell} ({count} rows)")
            })
            .collect();
        return Err(Error::RankDeficient(described.join(", ")));
    }

    ols_with_sandwich(x.view(), &y, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::TreatmentCell;
    use ndarray::Array1;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn residual_set(x: Array2<f64>, y: Vec<f64>) -> ResidualSet {
        let n = x.nrows();
        let cols = x.ncols();
        ResidualSet {
            r_y: Array1::from_vec(y),
            r_d: x,
            fold_assignment: vec![0; n],
            columns: (0..cols).map(|j| TreatmentCell::new(1, j + 1)).collect(),
            row_cells: vec![TreatmentCell::new(1, 1); n],
            outcome_reports: vec![],
            treatment_reports: vec![],
        }
    }

    /// r_Y = 0.7 * one column, other columns orthogonal noise.
    #[test]
    fn recovers_a_pure_projection() {
        let n = 400;
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut x = Array2::zeros((n, 3));
        for i in 0..n {
            for j in 0..3 {
                x[(i, j)] = rng.random::<f64>() - 0.5;
            }
        }
        let y: Vec<f64> = (0..n).map(|i| 0.7 * x[(i, 0)]).collect();
        let fit = final_stage_ols(&residual_set(x, y), SandwichKind::Hc1).unwrap();
        assert!((fit.coefficients[0] - 0.7).abs() < 1e-6);
        assert!(fit.coefficients[1].abs() < 1e-6);
        assert!(fit.coefficients[2].abs() < 1e-6);
    }

    #[test]
    fn zero_outcome_gives_zero_coefficients_and_unit_p() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let x = Array2::from_shape_fn((50, 3), |_| rng.random::<f64>() - 0.5);
        let y = vec![0.0; 50];
        let fit = final_stage_ols(&residual_set(x, y), SandwichKind::Hc1).unwrap();
        for j in 0..3 {
            assert!(fit.coefficients[j].abs() < 1e-12);
            assert_eq!(fit.p_values[j], 1.0);
        }
    }

    /// Independent normal-equation solve via Cramer's rule on 3 columns.
    #[test]
    fn matches_closed_form_on_a_three_column_instance() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let n = 60;
        let x = Array2::from_shape_fn((n, 3), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> =
            (0..n).map(|i| 1.5 * x[(i, 0)] - 0.5 * x[(i, 1)] + 0.25 * x[(i, 2)] + 0.01 * ((i % 7) as f64 - 3.0)).collect();

        // 3x3 normal equations solved by explicit inverse
        let mut a = [[0.0f64; 3]; 3];
        let mut b = [0.0f64; 3];
        for i in 0..n {
            for r in 0..3 {
                for c in 0..3 {
                    a[r][c] += x[(i, r)] * x[(i, c)];
                }
                b[r] += x[(i, r)] * y[i];
            }
        }
        let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
        let inv = |r: usize, c: usize| -> f64 {
            let m = |i: usize, j: usize| a[i][j];
            let (i1, i2) = match r {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (j1, j2) = match c {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m(i1, j1) * m(i2, j2) - m(i1, j2) * m(i2, j1);
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            sign * minor / det
        };
        let expected: Vec<f64> = (0..3)
            .map(|r| (0..3).map(|c| inv(c, r) * b[c]).sum())
            .collect();

        let fit = ols_with_sandwich(x.view(), &y, SandwichKind::Hc1).unwrap();
        for j in 0..3 {
            let rel = (fit.coefficients[j] - expected[j]).abs() / expected[j].abs().max(1e-12);
            assert!(rel < 1e-8, "{} vs {}", fit.coefficients[j], expected[j]);
        }
    }

    #[test]
    fn rank_deficiency_names_cells_and_counts() {
        let n = 30;
        let mut x = Array2::zeros((n, 2));
        for i in 0..n {
            let v = (i % 5) as f64 - 2.0;
            x[(i, 0)] = v;
            x[(i, 1)] = 2.0 * v; // exact multiple
        }
        let y: Vec<f64> = (0..n).map(|i| i as f64 * 0.1).collect();
        let err = final_stage_ols(&residual_set(x, y), SandwichKind::Hc1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("(1,2)"), "{msg}");
        assert!(msg.contains("rows"), "{msg}");
    }

    #[test]
    fn p_values_are_valid_and_monotone_in_t() {
        let ts = [0.0, 0.5, 1.0, 1.96, 2.58, 3.3, 5.0, 10.0];
        let ps: Vec<f64> = ts.iter().map(|&t| two_sided_p(t)).collect();
        for p in &ps {
            assert!((0.0..=1.0).contains(p));
        }
        for w in ps.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!((two_sided_p(1.959964) - 0.05).abs() < 1e-4);
        assert_eq!(two_sided_p(-2.0), two_sided_p(2.0));
    }

    #[test]
    fn hc_variants_order_se_magnitudes_sensibly() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 80;
        let x = Array2::from_shape_fn((n, 2), |_| rng.random::<f64>() - 0.5);
        let y: Vec<f64> = (0..n)
            .map(|i| x[(i, 0)] + (1.0 + x[(i, 1)].abs()) * (rng.random::<f64>() - 0.5))
            .collect();
        let se = |kind| {
            ols_with_sandwich(x.view(), &y, kind)
                .unwrap()
                .standard_errors[0]
        };
        let (hc0, hc1, hc3) = (se(SandwichKind::Hc0), se(SandwichKind::Hc1), se(SandwichKind::Hc3));
        assert!(hc1 > hc0);
        assert!(hc3 > hc0);
    }
}
