//! Katz-index scoring: plain (KI), distance-weighted adjacency (WKI) and
//! distance-decayed pair scores (EWKI), plus normalization and fusion of
//! score tables.

mod engine;
mod spectral;
mod table;

use serde::{Deserialize, Serialize};

use crate::geo::WeightTransform;

pub use engine::{
    apply_distance_decay, edge_weighted_katz_scores, effective_beta, katz_scores, weighted_katz_scores,
    KatzScorer,
};
pub use spectral::{spectral_radius, SpectralEstimate};
pub use table::{combine, combine_raw, read_scores, write_scores, CombineRule, ScoreTable};

/// How the damping factor is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BetaMode {
    Explicit { beta: f64 },
    /// `beta = alpha / spectral_radius(A)` for the matrix being scored.
    FractionOfBound { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KatzMethod {
    TruncatedSeries,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KatzConfig {
    pub beta_mode: BetaMode,
    /// Longest walk summed by the truncated series.
    pub max_walk_length: usize,
    /// The series stops early once a term's max-norm falls below this.
    pub series_tolerance: f64,
    pub method: KatzMethod,
    /// Closed form falls back to the series above this many active nodes.
    pub closed_form_max_nodes: usize,
    pub spectral_tolerance: f64,
    pub spectral_max_iter: usize,
    /// Distance decay rate per kilometer for EWKI.
    pub gamma: f64,
    pub wki_transform: WeightTransform,
}

impl Default for KatzConfig {
    fn default() -> Self {
        KatzConfig {
            beta_mode: BetaMode::FractionOfBound { alpha: 0.5 },
            max_walk_length: 6,
            series_tolerance: 1e-10,
            method: KatzMethod::ClosedForm,
            closed_form_max_nodes: 4000,
            spectral_tolerance: 1e-10,
            spectral_max_iter: 10_000,
            gamma: 0.01,
            wki_transform: WeightTransform::Raw,
        }
    }
}
