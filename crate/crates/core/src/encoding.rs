//! Effect coding of formation-pair treatment cells.
//!
//! Every ordered pair (main group, rival group) of a K-group configuration
//! is one treatment level. The design matrix carries one column per cell in
//! row-major order with the last diagonal cell (K,K) omitted; a row whose
//! cell is (K,K) codes as -1 in every column, any other row as +1 in its own
//! column. The omitted coefficient is recovered as the negative sum of the
//! others.

use std::fmt;

use ndarray::Array2;

use crate::dataset::AnalysisRow;
use crate::error::{Error, Result};

/// Ordered (main, rival) formation-group pair, 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreatmentCell {
    pub main: usize,
    pub rival: usize,
}

impl TreatmentCell {
    pub fn new(main: usize, rival: usize) -> TreatmentCell {
        TreatmentCell { main, rival }
    }

    pub fn transpose(&self) -> TreatmentCell {
        TreatmentCell {
            main: self.rival,
            rival: self.main,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.main == self.rival
    }

    /// All K*K cells in row-major order.
    pub fn grid(k: usize) -> Vec<TreatmentCell> {
        let mut cells = Vec::with_capacity(k * k);
        for main in 1..=k {
            for rival in 1..=k {
                cells.push(TreatmentCell::new(main, rival));
            }
        }
        cells
    }

    /// The K*K-1 design columns: the grid without the omitted (K,K) cell.
    pub fn columns(k: usize) -> Vec<TreatmentCell> {
        let mut cells = TreatmentCell::grid(k);
        cells.pop();
        cells
    }

    /// Column index of this cell in the design, `None` for the omitted cell.
    pub fn column_index(&self, k: usize) -> Option<usize> {
        if self.main == k && self.rival == k {
            None
        } else {
            Some((self.main - 1) * k + (self.rival - 1))
        }
    }
}

impl fmt::Display for TreatmentCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.main, self.rival)
    }
}

/// N x (K*K-1) effect-coded treatment design.
#[derive(Debug, Clone)]
pub struct EffectCodedMatrix {
    pub k: usize,
    /// Column order: row-major cells, omitted (K,K) absent.
    pub columns: Vec<TreatmentCell>,
    /// Entries in {-1, 0, +1}.
    pub values: Array2<f64>,
    /// The treatment cell of each input row.
    pub row_cells: Vec<TreatmentCell>,
}

impl EffectCodedMatrix {
    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_columns(&self) -> usize {
        self.values.ncols()
    }

    /// Code vector for one cell.
    pub fn code_for(cell: TreatmentCell, k: usize) -> Vec<f64> {
        let n_cols = k * k - 1;
        if cell.main == k && cell.rival == k {
            return vec![-1.0; n_cols];
        }
        let mut code = vec![0.0; n_cols];
        code[cell.column_index(k).expect("non-omitted cell")] = 1.0;
        code
    }

    /// Recover the cell from a code vector: the +1 column, or the omitted
    /// cell when every entry is -1.
    pub fn decode_row(&self, row: usize) -> TreatmentCell {
        let r = self.values.row(row);
        if let Some(ix) = r.iter().position(|&v| v == 1.0) {
            self.columns[ix]
        } else {
            TreatmentCell::new(self.k, self.k)
        }
    }
}

/// Build the effect-coded design matrix for the rows' treatment cells.
pub fn build_effect_coded_matrix(rows: &[AnalysisRow], k: usize) -> Result<EffectCodedMatrix> {
    if k < 2 {
        return Err(Error::Config(format!(
            "group count k must be at least 2, got {k}"
        )));
    }
    let columns = TreatmentCell::columns(k);
    let mut values = Array2::zeros((rows.len(), columns.len()));
    let mut row_cells = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let cell = row.cell;
        if !(1..=k).contains(&cell.main) || !(1..=k).contains(&cell.rival) {
            return Err(Error::Data(format!(
                "row {i}: cell {cell} outside the 1..={k} grid"
            )));
        }
        let code = EffectCodedMatrix::code_for(cell, k);
        for (j, v) in code.into_iter().enumerate() {
            values[(i, j)] = v;
        }
        row_cells.push(cell);
    }
    Ok(EffectCodedMatrix {
        k,
        columns,
        values,
        row_cells,
    })
}

/// The omitted coefficient is the negative sum of all estimated ones.
pub fn recover_omitted_beta(betas: &[f64]) -> f64 {
    -betas.iter().sum::<f64>()
}
