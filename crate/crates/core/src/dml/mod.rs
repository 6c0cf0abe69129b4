//! Cross-fitted residualization, final-stage inference and matrix assembly.

mod crossfit;
mod matrix;
mod ols;
mod pipeline;

pub use crossfit::{cross_fit_residuals, ResidualSet};
pub use matrix::{assemble_matrix, estimate_home_effect, side_adjust, BetaMatrix, Stars};
pub use ols::{final_stage_ols, ols_with_sandwich, two_sided_p, OlsFit, SandwichKind};
pub use pipeline::{run_pipeline, Diagnostics, OrthogonalityEntry, PipelineOutput};

use crate::dataset::TargetVar;
use crate::learners::{LearnerParams, RegressorSpec};

/// Everything one estimation run needs beyond the data itself.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub target: TargetVar,
    /// Formation-group count; the grid is k x k.
    pub k: usize,
    /// Cross-fitting folds (>= 2).
    pub n_folds: usize,
    pub seed: u64,
    pub learner: RegressorSpec,
    pub se_variant: SandwichKind,
    /// Fit first-stage models in parallel; results are identical either way.
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            target: TargetVar::Goals,
            k: 6,
            n_folds: 5,
            seed: 0,
            learner: RegressorSpec::boosted(LearnerParams::default()),
            se_variant: SandwichKind::Hc1,
            parallel: true,
        }
    }
}
