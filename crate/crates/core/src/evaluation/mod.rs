//! Intrinsic evaluation: word similarity, syntactic analogy, nearest
//! neighbours, PCA projection and parameter sweeps.

mod analogy;
mod neighbors;
mod pca;
mod similarity;
mod sweep;

pub use analogy::{eval_analogy, AnalogyDataset, AnalogyQuestion};
pub use neighbors::n_nearest;
pub use pca::{pca_project, symmetric_eigen, PcaProjection};
pub use similarity::{eval_word_similarity, spearman_rho, SimilarityDataset};
pub use sweep::{run_sweep, SweepAxis, SweepRow, SweepTable};

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, Real};

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine<F: Real>(u: &[F], v: &[F]) -> Result<F> {
    let denom = norm(u) * norm(v);
    if !(denom > F::zero()) {
        return Err(Error::UndefinedCosine);
    }
    Ok((dot(u, v) / denom).max(-F::one()).min(F::one()))
}

/// Outcome of evaluating one dataset. `metric` is a percentage: Spearman's
/// rho for similarity, accuracy for analogies.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub dataset: String,
    pub metric: f64,
    pub covered: usize,
    pub skipped: usize,
}

impl EvalReport {
    pub const TSV_HEADER: &'static str = "dataset\tmetric\tcovered\tskipped";
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:.2}\t{}\t{}",
            self.dataset, self.metric, self.covered, self.skipped
        )
    }
}
