use std::fmt;

use ndarray::Array2;

use crate::dataset::{AnalysisRow, FormationGroup};
use crate::dml::ols::{two_sided_p, OlsFit};
use crate::encoding::{recover_omitted_beta, TreatmentCell};
use crate::error::{Error, Result};

/// Four-level significance annotation with strict thresholds:
/// `***` p < 0.001, `**` p < 0.01, `*` p < 0.05, `ns` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stars {
    Three,
    Two,
    One,
    NotSignificant,
}

impl Stars {
    pub fn from_p(p: f64) -> Stars {
        if p < 0.001 {
            Stars::Three
        } else if p < 0.01 {
            Stars::Two
        } else if p < 0.05 {
            Stars::One
        } else {
            Stars::NotSignificant
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Stars::Three => "***",
            Stars::Two => "**",
            Stars::One => "*",
            Stars::NotSignificant => "ns",
        }
    }

    pub fn is_significant(&self) -> bool {
        !matches!(self, Stars::NotSignificant)
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The K x K causal-effect grid with inference and the recovered omitted cell.
///
/// `beta` stores the raw estimates, including the diagonal and the recovered
/// (K,K) entry; rendering zeroes the displayed diagonal while the raw values
/// stay available as diagnostics.
#[derive(Debug, Clone)]
pub struct BetaMatrix {
    pub k: usize,
    pub beta: Array2<f64>,
    pub se: Array2<f64>,
    pub p: Array2<f64>,
    pub stars: Vec<Vec<Stars>>,
    pub cell_counts: Array2<usize>,
    /// The cell recovered as the negative sum of the others.
    pub omitted: TreatmentCell,
    /// Estimated average home-team effect on the target.
    pub home_effect: f64,
}

impl BetaMatrix {
    fn ix(&self, cell: TreatmentCell) -> (usize, usize) {
        (cell.main - 1, cell.rival - 1)
    }

    pub fn beta_at(&self, cell: TreatmentCell) -> f64 {
        self.beta[self.ix(cell)]
    }

    pub fn se_at(&self, cell: TreatmentCell) -> f64 {
        self.se[self.ix(cell)]
    }

    pub fn p_at(&self, cell: TreatmentCell) -> f64 {
        self.p[self.ix(cell)]
    }

    pub fn stars_at(&self, cell: TreatmentCell) -> Stars {
        self.stars[cell.main - 1][cell.rival - 1]
    }

    /// Displayed value: the diagonal is defined as zero.
    pub fn display_value(&self, cell: TreatmentCell) -> f64 {
        if cell.is_diagonal() {
            0.0
        } else {
            self.beta_at(cell)
        }
    }

    /// Raw diagonal estimates (theoretically zero; kept as a diagnostic).
    pub fn raw_diagonal(&self) -> Vec<f64> {
        (0..self.k).map(|i| self.beta[(i, i)]).collect()
    }

    /// Largest |beta_ij + beta_ji| over off-diagonal pairs, with the pair.
    pub fn antisymmetry_gap(&self) -> (f64, TreatmentCell) {
        let mut worst = (0.0, TreatmentCell::new(1, 2));
        for i in 1..=self.k {
            for j in (i + 1)..=self.k {
                let a = TreatmentCell::new(i, j);
                let b = TreatmentCell::new(j, i);
                let gap = (self.beta_at(a) + self.beta_at(b)).abs();
                if gap > worst.0 {
                    worst = (gap, a);
                }
            }
        }
        worst
    }

    /// One rendered cell, e.g. `0.16***`; diagonals render as `0`.
    pub fn format_cell(&self, cell: TreatmentCell) -> String {
        if cell.is_diagonal() {
            "0".to_string()
        } else {
            format!("{:.2}{}", self.beta_at(cell), self.stars_at(cell))
        }
    }

    /// Text table of the grid; the omitted cell is marked with `+`.
    /// With `side_adjusted` every displayed value is shifted by the home
    /// effect (stars unchanged).
    pub fn render_text(&self, side_adjusted: bool) -> String {
        let labels: Vec<&str> = FormationGroup::ALL
            .iter()
            .take(self.k)
            .map(|g| g.label())
            .collect();
        let fallback: Vec<String> = (1..=self.k).map(|i| format!("g{i}")).collect();
        let label = |i: usize| -> &str {
            if self.k == 6 {
                labels[i]
            } else {
                &fallback[i]
            }
        };
        let shift = if side_adjusted { self.home_effect } else { 0.0 };
        let mut out = String::new();
        let title = if side_adjusted {
            format!("side-adjusted effects (home effect {:+.3})", self.home_effect)
        } else {
            "estimated effects (main formation in rows, rival in columns)".to_string()
        };
        out.push_str(&title);
        out.push('\n');
        out.push_str(&format!("{:>10}", ""));
        for j in 0..self.k {
            out.push_str(&format!("{:>12}", label(j)));
        }
        out.push('\n');
        for i in 0..self.k {
            out.push_str(&format!("{:>10}", label(i)));
            for j in 0..self.k {
                let cell = TreatmentCell::new(i + 1, j + 1);
                let value = self.display_value(cell) + shift;
                let mut text = if cell.is_diagonal() && !side_adjusted {
                    "0".to_string()
                } else {
                    format!(
                        "{value:.2}{}",
                        if cell.is_diagonal() { "" } else { self.stars_at(cell).as_str() }
                    )
                };
                if cell == self.omitted {
                    text.push('+');
                }
                out.push_str(&format!("{text:>12}"));
            }
            out.push('\n');
        }
        out.push_str("significance: *** p<0.001, ** p<0.01, * p<0.05, ns otherwise; + recovered omitted cell\n");
        out
    }
}

/// Assemble the K x K grid from the final-stage fit.
///
/// Coefficients fill the grid in column order; the omitted (K,K) cell is the
/// negative sum of the others with a delta-method standard error from the
/// full covariance.
pub fn assemble_matrix(
    fit: &OlsFit,
    k: usize,
    home_effect: f64,
    cell_counts: Array2<usize>,
) -> Result<BetaMatrix> {
    let n_cols = k * k - 1;
    if fit.coefficients.len() != n_cols {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients for a k={k} grid (need {n_cols})",
            fit.coefficients.len()
        )));
    }
    if cell_counts.dim() != (k, k) {
        return Err(Error::DimensionMismatch("cell_counts must be k x k".into()));
    }

    let mut beta = Array2::zeros((k, k));
    let mut se = Array2::zeros((k, k));
    let mut p = Array2::zeros((k, k));
    for (ix, cell) in TreatmentCell::columns(k).into_iter().enumerate() {
        let (i, j) = (cell.main - 1, cell.rival - 1);
        beta[(i, j)] = fit.coefficients[ix];
        se[(i, j)] = fit.standard_errors[ix];
        p[(i, j)] = fit.p_values[ix];
    }

    let recovered = recover_omitted_beta(&fit.coefficients);
    // Var(-sum(beta)) = 1' Cov 1
    let var: f64 = fit.covariance.iter().sum();
    let rec_se = var.max(0.0).sqrt();
    let rec_t = if rec_se > 0.0 {
        recovered / rec_se
    } else if recovered.abs() < 1e-300 {
        0.0
    } else {
        f64::INFINITY.copysign(recovered)
    };
    beta[(k - 1, k - 1)] = recovered;
    se[(k - 1, k - 1)] = rec_se;
    p[(k - 1, k - 1)] = two_sided_p(rec_t);

    let stars = (0..k)
        .map(|i| (0..k).map(|j| Stars::from_p(p[(i, j)])).collect())
        .collect();

    Ok(BetaMatrix {
        k,
        beta,
        se,
        p,
        stars,
        cell_counts,
        omitted: TreatmentCell::new(k, k),
        home_effect,
    })
}

/// Sample mean of the outcome over home-perspective rows.
pub fn estimate_home_effect(rows: &[AnalysisRow]) -> Result<f64> {
    let (sum, count) = rows
        .iter()
        .filter(|r| r.is_home)
        .fold((0.0, 0usize), |(s, c), r| (s + r.outcome, c + 1));
    if count == 0 {
        return Err(Error::NoHomeRows);
    }
    Ok(sum / count as f64)
}

/// Shift every displayed cell (including the recovered one) by the home
/// effect. Inference pertains to beta, so stars are untouched.
pub fn side_adjust(matrix: &BetaMatrix) -> Array2<f64> {
    Array2::from_shape_fn((matrix.k, matrix.k), |(i, j)| {
        matrix.display_value(TreatmentCell::new(i + 1, j + 1)) + matrix.home_effect
    })
}

/// Per-cell row counts for a dataset.
pub fn count_cells(rows: &[AnalysisRow], k: usize) -> Array2<usize> {
    let mut counts = Array2::zeros((k, k));
    for r in rows {
        if (1..=k).contains(&r.cell.main) && (1..=k).contains(&r.cell.rival) {
            counts[(r.cell.main - 1, r.cell.rival - 1)] += 1;
        }
    }
    counts
}
