use ndarray::ArrayView2;

use crate::error::{Error, Result};
use crate::learners::LearnerParams;

/// Axis-aligned binary regression tree; leaves predict training means.
#[derive(Debug, Clone)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

impl RegressionTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut ix = 0;
        loop {
            match &self.nodes[ix] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    ix = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Predict training row `i` straight from column storage.
    pub(crate) fn predict_by_columns(&self, cols: &[Vec<f64>], i: usize) -> f64 {
        let mut ix = 0;
        loop {
            match &self.nodes[ix] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    ix = if cols[*feature][i] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Longest root-to-leaf path in edges (depth-cap audits).
    pub fn max_path_edges(&self) -> usize {
        fn walk(nodes: &[Node], ix: usize) -> usize {
            match &nodes[ix] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// (feature, threshold) of every split, in node order. Used by tests
    /// comparing split structure across shifted inputs.
    pub fn split_structure(&self) -> Vec<(usize, f64)> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, threshold, .. } => Some((*feature, *threshold)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

/// Column-major copy of the feature matrix; tree fitting walks single
/// features over row-index lists, so contiguous columns matter.
pub(crate) struct ColumnData {
    pub cols: Vec<Vec<f64>>,
    pub n_rows: usize,
}

impl ColumnData {
    pub fn from_view(x: ArrayView2<'_, f64>) -> ColumnData {
        let n_rows = x.nrows();
        let cols = (0..x.ncols())
            .map(|j| x.column(j).iter().copied().collect())
            .collect();
        ColumnData { cols, n_rows }
    }
}

/// Per-feature row indices sorted by feature value (ties by row index).
/// Built once per ensemble fit and filtered per stage.
pub(crate) struct Presorted {
    pub lists: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn build(data: &ColumnData) -> Presorted {
        let lists = data
            .cols
            .iter()
            .map(|col| {
                let mut ix: Vec<u32> = (0..data.n_rows as u32).collect();
                ix.sort_by(|&a, &b| {
                    col[a as usize]
                        .partial_cmp(&col[b as usize])
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.cmp(&b))
                });
                ix
            })
            .collect();
        Presorted { lists }
    }
}

/// Reusable buffers for one ensemble fit: the per-feature index segments the
/// tree grower partitions in place, a stamp array for membership tests and a
/// scratch buffer for stable partitioning.
pub(crate) struct FitWorkspace {
    lists: Vec<Vec<u32>>,
    marks: Vec<u32>,
    stamp: u32,
    temp: Vec<u32>,
}

impl FitWorkspace {
    pub fn new(n_features: usize, n_rows: usize) -> FitWorkspace {
        FitWorkspace {
            lists: vec![Vec::with_capacity(n_rows); n_features],
            marks: vec![0; n_rows],
            stamp: 0,
            temp: Vec::with_capacity(n_rows),
        }
    }

    /// Load the full presorted lists (no subsampling).
    pub fn fill_full(&mut self, presorted: &Presorted) -> usize {
        for (dst, src) in self.lists.iter_mut().zip(&presorted.lists) {
            dst.clear();
            dst.extend_from_slice(src);
        }
        self.lists[0].len()
    }

    /// Load only rows flagged in `mask`, preserving sort order.
    pub fn fill_masked(&mut self, presorted: &Presorted, mask: &[bool]) -> usize {
        for (dst, src) in self.lists.iter_mut().zip(&presorted.lists) {
            dst.clear();
            dst.extend(src.iter().copied().filter(|&i| mask[i as usize]));
        }
        self.lists[0].len()
    }
}

struct Grower<'a> {
    cols: &'a [Vec<f64>],
    y: &'a [f64],
    max_depth: usize,
    min_samples_leaf: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    /// Left child size within the segment.
    n_left: usize,
}

impl<'a> Grower<'a> {
    /// Grow the node covering segment [lo, hi) of every list in `ws`.
    fn grow(&mut self, ws: &mut FitWorkspace, lo: usize, hi: usize, depth: usize) -> usize {
        let n = hi - lo;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for &i in &ws.lists[0][lo..hi] {
            let v = self.y[i as usize];
            sum += v;
            sum_sq += v * v;
        }
        let mean = sum / n as f64;
        let variance = (sum_sq / n as f64 - mean * mean).max(0.0);

        if depth >= self.max_depth
            || n < 2 * self.min_samples_leaf
            || variance <= 1e-12 * mean.mul_add(mean, 1.0)
        {
            self.nodes.push(Node::Leaf { value: mean });
            return self.nodes.len() - 1;
        }

        let parent_score = sum * sum / n as f64;
        let Some(best) = self.best_split(ws, lo, hi, sum, parent_score) else {
            self.nodes.push(Node::Leaf { value: mean });
            return self.nodes.len() - 1;
        };

        // stamp the left rows of the winning feature, then stably partition
        // every feature segment by membership
        ws.stamp += 1;
        let stamp = ws.stamp;
        for &i in &ws.lists[best.feature][lo..lo + best.n_left] {
            ws.marks[i as usize] = stamp;
        }
        let marks = &ws.marks;
        let temp = &mut ws.temp;
        for list in ws.lists.iter_mut() {
            temp.clear();
            let segment = &mut list[lo..hi];
            temp.extend(segment.iter().copied().filter(|&i| marks[i as usize] != stamp));
            let mut write = 0;
            for read in 0..segment.len() {
                let i = segment[read];
                if marks[i as usize] == stamp {
                    segment[write] = i;
                    write += 1;
                }
            }
            segment[write..].copy_from_slice(temp);
        }

        let ix = self.nodes.len();
        self.nodes.push(Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: 0,
            right: 0,
        });
        let left = self.grow(ws, lo, lo + best.n_left, depth + 1);
        let right = self.grow(ws, lo + best.n_left, hi, depth + 1);
        if let Node::Split { left: l, right: r, .. } = &mut self.nodes[ix] {
            *l = left;
            *r = right;
        }
        ix
    }

    /// Exhaustive scan over features and boundaries between distinct values,
    /// maximizing sum_l^2/n_l + sum_r^2/n_r. First feature and boundary win
    /// ties, so fits are deterministic.
    fn best_split(
        &self,
        ws: &FitWorkspace,
        lo: usize,
        hi: usize,
        total: f64,
        parent_score: f64,
    ) -> Option<BestSplit> {
        let n = hi - lo;
        let min_leaf = self.min_samples_leaf;
        let mut best: Option<BestSplit> = None;
        let mut best_score = parent_score;
        for (f, list) in ws.lists.iter().enumerate() {
            let col = &self.cols[f];
            let segment = &list[lo..hi];
            let mut left_sum = 0.0;
            let mut prev = col[segment[0] as usize];
            for (pos, &ix) in segment.iter().enumerate().skip(1) {
                left_sum += self.y[segment[pos - 1] as usize];
                let here = col[ix as usize];
                if prev < here {
                    if pos >= min_leaf && n - pos >= min_leaf {
                        let right_sum = total - left_sum;
                        let score = left_sum * left_sum / pos as f64
                            + right_sum * right_sum / (n - pos) as f64;
                        if score > best_score {
                            best_score = score;
                            best = Some(BestSplit {
                                feature: f,
                                threshold: 0.5 * (prev + here),
                                n_left: pos,
                            });
                        }
                    }
                    prev = here;
                }
            }
        }
        best
    }
}

/// Fit a tree over the rows currently loaded in the workspace.
pub(crate) fn fit_tree_in_workspace(
    data: &ColumnData,
    y: &[f64],
    ws: &mut FitWorkspace,
    n_sample: usize,
    params: &LearnerParams,
) -> RegressionTree {
    let mut grower = Grower {
        cols: &data.cols,
        y,
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        nodes: Vec::new(),
    };
    grower.grow(ws, 0, n_sample, 0);
    RegressionTree { nodes: grower.nodes }
}

/// Fit a depth-capped regression tree on the full dataset.
pub fn fit_regression_tree(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    params: &LearnerParams,
) -> Result<RegressionTree> {
    params.validate()?;
    if x.nrows() != y.len() || y.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature rows vs {} targets",
            x.nrows(),
            y.len()
        )));
    }
    let data = ColumnData::from_view(x);
    let presorted = Presorted::build(&data);
    let mut ws = FitWorkspace::new(data.cols.len(), data.n_rows);
    let n = ws.fill_full(&presorted);
    Ok(fit_tree_in_workspace(&data, y, &mut ws, n, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn params(max_depth: usize, min_leaf: usize) -> LearnerParams {
        LearnerParams {
            max_depth,
            min_samples_leaf: min_leaf,
            ..LearnerParams::default()
        }
    }

    #[test]
    fn constant_target_yields_single_leaf() {
        let x = Array2::from_shape_fn((8, 2), |(i, j)| (i * 2 + j) as f64);
        let y = vec![3.5; 8];
        let tree = fit_regression_tree(x.view(), &y, &params(3, 1)).unwrap();
        assert_eq!(tree.n_leaves(), 1);
        assert_eq!(tree.predict_row(&[0.0, 0.0]), 3.5);
    }

    #[test]
    fn step_function_splits_between_one_and_two() {
        // X = (0,1,2,3), y = (0,0,1,1), depth 1: threshold 1.5, leaves 0 and 1
        let x = Array2::from_shape_vec((4, 1), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let y = vec![0.0, 0.0, 1.0, 1.0];
        let tree = fit_regression_tree(x.view(), &y, &params(1, 1)).unwrap();
        assert_eq!(tree.split_structure(), vec![(0, 1.5)]);
        assert_eq!(tree.predict_row(&[1.0]), 0.0);
        assert_eq!(tree.predict_row(&[2.0]), 1.0);
        let mse: f64 = y
            .iter()
            .enumerate()
            .map(|(i, &t)| (tree.predict_row(&[i as f64]) - t).powi(2))
            .sum();
        assert_eq!(mse, 0.0);
    }

    #[test]
    fn depth_zero_is_a_validation_error() {
        let x = Array2::from_shape_vec((2, 1), vec![0.0, 1.0]).unwrap();
        assert!(fit_regression_tree(x.view(), &[0.0, 1.0], &params(0, 1)).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = Array2::from_shape_vec((2, 1), vec![0.0, 1.0]).unwrap();
        assert!(fit_regression_tree(x.view(), &[0.0], &params(2, 1)).is_err());
    }

    #[test]
    fn min_samples_leaf_blocks_small_children() {
        let x = Array2::from_shape_vec((4, 1), vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let y = vec![0.0, 0.0, 0.0, 10.0];
        // min leaf 2 forbids the 3|1 split; best allowed boundary is 2|2
        let tree = fit_regression_tree(x.view(), &y, &params(3, 2)).unwrap();
        for (_, t) in tree.split_structure() {
            assert_eq!(t, 1.5);
        }
    }

    #[test]
    fn depth_cap_is_respected() {
        let x = Array2::from_shape_fn((64, 1), |(i, _)| i as f64);
        let y: Vec<f64> = (0..64).map(|i| (i % 7) as f64).collect();
        for depth in 1..=5 {
            let tree = fit_regression_tree(x.view(), &y, &params(depth, 1)).unwrap();
            assert!(tree.max_path_edges() <= depth);
        }
    }

    #[test]
    fn column_prediction_agrees_with_row_prediction() {
        let x = Array2::from_shape_fn((40, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let y: Vec<f64> = (0..40).map(|i| ((i * 5) % 13) as f64).collect();
        let tree = fit_regression_tree(x.view(), &y, &params(4, 2)).unwrap();
        let data = ColumnData::from_view(x.view());
        for i in 0..40 {
            let row: Vec<f64> = x.row(i).to_vec();
            assert_eq!(tree.predict_row(&row), tree.predict_by_columns(&data.cols, i));
        }
    }

    #[test]
    fn shifting_a_feature_shifts_thresholds_not_structure() {
        let x = Array2::from_shape_fn((32, 2), |(i, j)| {
            if j == 0 {
                (i as f64 * 0.37).sin()
            } else {
                (i as f64 * 0.11).cos()
            }
        });
        let y: Vec<f64> = (0..32).map(|i| ((i * 13) % 5) as f64).collect();
        let tree = fit_regression_tree(x.view(), &y, &params(4, 2)).unwrap();
        let mut shifted = x.clone();
        shifted.column_mut(0).mapv_inplace(|v| v + 100.0);
        let tree2 = fit_regression_tree(shifted.view(), &y, &params(4, 2)).unwrap();
        let s1 = tree.split_structure();
        let s2 = tree2.split_structure();
        assert_eq!(s1.len(), s2.len());
        for ((f1, t1), (f2, t2)) in s1.iter().zip(&s2) {
            assert_eq!(f1, f2);
            let expected = if *f1 == 0 { t1 + 100.0 } else { *t1 };
            assert!((t2 - expected).abs() < 1e-9);
        }
    }
}
