use std::sync::Arc;

use nalgebra::{DMatrix, LU};
use rayon::prelude::*;

use super::spectral::{spectral_radius, SpectralEstimate};
use super::table::ScoreTable;
use super::{BetaMode, KatzConfig, KatzMethod};
use crate::error::{Error, Result};
use crate::geo::DistanceMatrix;
use crate::graph::{CandidateUniverse, SparseMatrix};

/// Right-hand sides solved together against the LU factors. Fixed so the
/// result never depends on how many threads run.
const SOLVE_CHUNK: usize = 32;

/// Damping factor for `matrix` under `cfg`, with the radius estimate used.
///
/// A nilpotent matrix (radius zero) admits any damping; the fractional mode
/// then uses `alpha` itself.
pub fn effective_beta(matrix: &SparseMatrix, cfg: &KatzConfig) -> Result<(f64, SpectralEstimate)> {
    let est = spectral_radius(matrix, cfg.spectral_tolerance, cfg.spectral_max_iter);
    let beta = match cfg.beta_mode {
        BetaMode::Explicit { beta } => beta,
        BetaMode::FractionOfBound { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "beta fraction alpha must lie in (0, 1), got {alpha}"
                )));
            }
            if est.value > 0.0 {
                alpha / est.value
            } else {
                alpha
            }
        }
    };
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
    }
    if beta * est.value >= 1.0 {
        return Err(Error::Convergence {
            beta,
            radius: est.value,
            bound: 1.0 / est.value,
        });
    }
    Ok((beta, est))
}

enum Solver {
    Series,
    Lu {
        /// Global index → position among active nodes.
        local: Vec<Option<usize>>,
        active: Vec<usize>,
        lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    },
}

/// Katz scores `Σ_{l≥1} β^l (A^l)_{uv}` for one matrix.
///
/// Construction fixes the damping factor and, for the closed form, factors
/// `I - βAᵀ` once; any number of universes can then be scored against it.
pub struct KatzScorer<'a> {
    matrix: &'a SparseMatrix,
    beta: f64,
    radius: SpectralEstimate,
    max_walk_length: usize,
    series_tolerance: f64,
    solver: Solver,
}

impl<'a> KatzScorer<'a> {
    pub fn new(matrix: &'a SparseMatrix, cfg: &KatzConfig) -> Result<Self> {
        if cfg.max_walk_length == 0 {
            return Err(Error::InvalidArgument("max_walk_length must be at least 1".into()));
        }
        if !(cfg.series_tolerance > 0.0) {
            return Err(Error::InvalidArgument("series_tolerance must be positive".into()));
        }
        let (beta, radius) = effective_beta(matrix, cfg)?;
        let active = matrix.active_nodes();
        let solver = match cfg.method {
            // An edgeless matrix scores zero everywhere; the series returns that directly.
            KatzMethod::ClosedForm if active.is_empty() => Solver::Series,
            KatzMethod::ClosedForm if active.len() <= cfg.closed_form_max_nodes => {
                Self::factor(matrix, beta, active)?
            }
            KatzMethod::ClosedForm => {
                log::info!(
                    "{} active nodes exceed the closed-form limit {}; using truncated series",
                    active.len(),
                    cfg.closed_form_max_nodes
                );
                Solver::Series
            }
            KatzMethod::TruncatedSeries => Solver::Series,
        };
        Ok(KatzScorer {
            matrix,
            beta,
            radius,
            max_walk_length: cfg.max_walk_length,
            series_tolerance: cfg.series_tolerance,
            solver,
        })
    }

    fn factor(matrix: &SparseMatrix, beta: f64, active: Vec<usize>) -> Result<Solver> {
        let m = active.len();
        let mut local = vec![None; matrix.dim()];
        for (k, &g) in active.iter().enumerate() {
            local[g] = Some(k);
        }
        // Row u of (I - βA)^{-1} solves (I - βAᵀ) x = e_u.
        let mut system = DMatrix::<f64>::identity(m, m);
        for (r, c, v) in matrix.entries() {
            if let (Some(lr), Some(lc)) = (local[r], local[c]) {
                system[(lc, lr)] -= beta * v;
            }
        }
        let lu = system.lu();
        if !lu.is_invertible() {
            return Err(Error::Singular);
        }
        Ok(Solver::Lu { local, active, lu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn radius(&self) -> SpectralEstimate {
        self.radius
    }

    pub fn uses_closed_form(&self) -> bool {
        matches!(self.solver, Solver::Lu { .. })
    }

    /// Truncated series for the walks leaving `source`: the dense row
    /// `Σ_{l=1}^{L} β^l (A^l)_{source,·}`.
    fn series_row(&self, source: usize) -> Vec<f64> {
        let n = self.matrix.dim();
        let mut acc = vec![0.0; n];
        let mut term = vec![0.0; n];
        let (cols, vals) = self.matrix.row(source);
        for (&c, &v) in cols.iter().zip(vals) {
            term[c] = self.beta * v;
        }
        let mut next = vec![0.0; n];
        for l in 1..=self.max_walk_length {
            let mut max_norm: f64 = 0.0;
            for (a, &t) in acc.iter_mut().zip(&term) {
                *a += t;
                max_norm = max_norm.max(t.abs());
            }
            if l == self.max_walk_length || max_norm < self.series_tolerance {
                break;
            }
            next.iter_mut().for_each(|x| *x = 0.0);
            for (r, &t) in term.iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                let (cols, vals) = self.matrix.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    next[c] += self.beta * t * v;
                }
            }
            std::mem::swap(&mut term, &mut next);
        }
        acc
    }

    /// Scores for every pair of `universe`, in universe order.
    pub fn scores(&self, model: &str, universe: &Arc<CandidateUniverse>) -> Result<ScoreTable> {
        if universe.registry().len() != self.matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.dim(),
                found: universe.registry().len(),
            });
        }
        let nodes = universe.nodes();
        let extract = |source: usize, row: &dyn Fn(usize) -> f64| -> Vec<f64> {
            nodes.iter().filter(|&&v| v != source).map(|&v| row(v)).collect()
        };

        let rows: Vec<Vec<f64>> = match &self.solver {
            Solver::Series => nodes
                .par_iter()
                .map(|&u| {
                    let row = self.series_row(u);
                    extract(u, &|v| row[v])
                })
                .collect(),
            Solver::Lu { local, active, lu } => {
                let m = active.len();
                let chunks: Vec<&[usize]> = nodes.chunks(SOLVE_CHUNK).collect();
                let solved: Vec<Vec<Vec<f64>>> = chunks
                    .par_iter()
                    .map(|chunk| {
                        let mut rhs = DMatrix::<f64>::zeros(m, chunk.len());
                        for (j, &u) in chunk.iter().enumerate() {
                            if let Some(lu_idx) = local[u] {
                                rhs[(lu_idx, j)] = 1.0;
                            }
                        }
                        let x = lu.solve(&rhs).ok_or(Error::Singular)?;
                        Ok(chunk
                            .iter()
                            .enumerate()
                            .map(|(j, &u)| {
                                if local[u].is_none() {
                                    // No walks leave an isolated node.
                                    return vec![0.0; nodes.len() - 1];
                                }
                                extract(u, &|v| local[v].map_or(0.0, |k| x[(k, j)]))
                            })
                            .collect())
                    })
                    .collect::<Result<_>>()?;
                solved.into_iter().flatten().collect()
            }
        };
        ScoreTable::new(model, Arc::clone(universe), rows.concat())
    }
}

/// Katz index over the (binary) adjacency matrix.
pub fn katz_scores(adjacency: &SparseMatrix, cfg: &KatzConfig, universe: &Arc<CandidateUniverse>) -> Result<ScoreTable> {
    KatzScorer::new(adjacency, cfg)?.scores("KI", universe)
}

/// Katz machinery applied to a distance-weighted adjacency matrix.
pub fn weighted_katz_scores(
    weighted: &SparseMatrix,
    cfg: &KatzConfig,
    universe: &Arc<CandidateUniverse>,
) -> Result<ScoreTable> {
    KatzScorer::new(weighted, cfg)?.scores("WKI", universe)
}

/// Multiplies each pair score by `exp(-gamma * d(u, v))`.
pub fn apply_distance_decay(
    table: &ScoreTable,
    distances: &DistanceMatrix,
    gamma: f64,
    model: &str,
) -> Result<ScoreTable> {
    crate::geo::decay_weight(0.0, gamma)?;
    let universe = table.universe();
    if universe.registry().len() != distances.dim() {
        return Err(Error::DimensionMismatch {
            expected: universe.registry().len(),
            found: distances.dim(),
        });
    }
    let scores = universe
        .pairs()
        .zip(table.scores())
        .map(|((u, v), &s)| if s == 0.0 { 0.0 } else { s * (-gamma * distances.get(u, v)).exp() })
        .collect();
    ScoreTable::new(model, Arc::clone(universe), scores)
}

/// Edge-weighted Katz index: the Katz score of each pair damped by the
/// distance between its endpoints.
pub fn edge_weighted_katz_scores(
    adjacency: &SparseMatrix,
    distances: &DistanceMatrix,
    cfg: &KatzConfig,
    universe: &Arc<CandidateUniverse>,
) -> Result<ScoreTable> {
    let ki = katz_scores(adjacency, cfg, universe)?;
    apply_distance_decay(&ki, distances, cfg.gamma, "EWKI")
}
