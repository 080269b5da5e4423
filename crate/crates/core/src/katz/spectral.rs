use crate::graph::SparseMatrix;

/// Result of a spectral radius estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralEstimate {
    /// Upper Collatz–Wielandt bound on the spectral radius at termination.
    /// Within `tol` (relative) of the true value when `converged`.
    pub value: f64,
    /// Lower bound matching `value`.
    pub lower: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Strongly connected components of the nonzero pattern (Kosaraju,
/// iterative).
fn strongly_connected_components(m: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = m.dim();
    let t = m.transpose();
    let has_edge = |v: f64| v != 0.0;

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if visited[root] {
            continue;
        }
        visited[root] = true;
        let mut stack = vec![(root, 0usize)];
        while let Some((node, next)) = stack.last_mut() {
            let (cols, vals) = m.row(*node);
            if let Some(k) = (*next..cols.len()).find(|&k| has_edge(vals[k]) && !visited[cols[k]]) {
                *next = k + 1;
                visited[cols[k]] = true;
                stack.push((cols[k], 0));
            } else {
                order.push(*node);
                stack.pop();
            }
        }
    }

    let mut comp = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for &root in order.iter().rev() {
        if comp[root] != usize::MAX {
            continue;
        }
        let id = comps.len();
        comp[root] = id;
        let mut members = vec![root];
        let mut stack = vec![root];
        while let Some(node) = stack.pop() {
            let (cols, vals) = t.row(node);
            for (&c, &v) in cols.iter().zip(vals) {
                if has_edge(v) && comp[c] == usize::MAX {
                    comp[c] = id;
                    members.push(c);
                    stack.push(c);
                }
            }
        }
        members.sort_unstable();
        comps.push(members);
    }
    comps
}

/// Power iteration on one irreducible block of `|A|`, shifted by `s·I` so
/// the block is primitive and the iteration cannot cycle.
fn block_radius(m: &SparseMatrix, members: &[usize], tol: f64, max_iter: usize) -> SpectralEstimate {
    let local = |g: usize| members.binary_search(&g).ok();
    let rows: Vec<Vec<(usize, f64)>> = members
        .iter()
        .map(|&g| {
            let (cols, vals) = m.row(g);
            cols.iter()
                .zip(vals)
                .filter_map(|(&c, &v)| local(c).map(|l| (l, v.abs())))
                .collect()
        })
        .collect();
    let shift = rows
        .iter()
        .map(|r| r.iter().map(|&(_, v)| v).sum::<f64>())
        .fold(0.0, f64::max);

    // All-ones start; every iterate stays strictly positive.
    let mut x = vec![1.0; members.len()];
    let mut y = vec![0.0; members.len()];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for it in 1..=max_iter {
        for (yi, row) in y.iter_mut().zip(&rows) {
            *yi = row.iter().map(|&(c, v)| v * x[c]).sum::<f64>();
        }
        lo = f64::INFINITY;
        hi = 0.0;
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += shift * xi;
            let ratio = *yi / xi;
            lo = f64::min(lo, ratio);
            hi = f64::max(hi, ratio);
        }
        if hi - lo <= tol * hi {
            return SpectralEstimate {
                value: (hi - shift).max(0.0),
                lower: (lo - shift).max(0.0),
                iterations: it,
                converged: true,
            };
        }
        let norm = y.iter().copied().fold(0.0, f64::max);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    SpectralEstimate {
        value: (hi - shift).max(0.0),
        lower: (lo - shift).max(0.0),
        iterations: max_iter,
        converged: false,
    }
}

/// Largest-magnitude eigenvalue of `|A|` by power iteration from the
/// all-ones vector.
///
/// The radius of a nonnegative matrix is the maximum over its strongly
/// connected blocks, so each block is iterated separately; a block without a
/// cycle contributes zero. The estimate is an upper bound at every step,
/// which keeps damping factors derived from it safe even without
/// convergence.
pub fn spectral_radius(m: &SparseMatrix, tol: f64, max_iter: usize) -> SpectralEstimate {
    let mut best = SpectralEstimate {
        value: 0.0,
        lower: 0.0,
        iterations: 0,
        converged: true,
    };
    for members in strongly_connected_components(m) {
        let est = if members.len() == 1 {
            let v = m.get(members[0], members[0]).unwrap_or(0.0).abs();
            SpectralEstimate {
                value: v,
                lower: v,
                iterations: 0,
                converged: true,
            }
        } else {
            block_radius(m, &members, tol, max_iter)
        };
        best.converged &= est.converged;
        best.iterations = best.iterations.max(est.iterations);
        if est.value > best.value {
            best.value = est.value;
            best.lower = est.lower;
        }
    }
    if !best.converged {
        log::warn!(
            "spectral radius iteration did not converge in {max_iter} steps; bounds [{}, {}]",
            best.lower,
            best.value
        );
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_edges(n: usize, edges: &[(usize, usize)]) -> SparseMatrix {
        SparseMatrix::from_triplets(n, edges.iter().map(|&(u, v)| (u, v, 1.0)).collect()).unwrap()
    }

    #[test]
    fn complete_graph_k4() {
        let edges: Vec<_> = (0..4)
            .flat_map(|u| (0..4).filter(move |&v| v != u).map(move |v| (u, v)))
            .collect();
        let est = spectral_radius(&from_edges(4, &edges), 1e-12, 1000);
        assert!(est.converged);
        assert!((est.value - 3.0).abs() < 1e-10, "{est:?}");
    }

    #[test]
    fn directed_four_cycle() {
        let est = spectral_radius(&from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), 1e-12, 1000);
        assert!((est.value - 1.0).abs() < 1e-10, "{est:?}");
    }

    #[test]
    fn acyclic_and_empty_graphs_have_zero_radius() {
        let dag = from_edges(4, &[(0, 1), (1, 2), (0, 2), (2, 3)]);
        assert_eq!(spectral_radius(&dag, 1e-12, 10).value, 0.0);
        assert_eq!(spectral_radius(&SparseMatrix::zeros(3), 1e-12, 10).value, 0.0);
    }

    #[test]
    fn bipartite_block_does_not_oscillate() {
        // Undirected star K_{1,3}: radius sqrt(3), eigenvalue -sqrt(3) also present.
        let est = spectral_radius(
            &from_edges(4, &[(0, 1), (1, 0), (0, 2), (2, 0), (0, 3), (3, 0)]),
            1e-13,
            10_000,
        );
        assert!(est.converged);
        assert!((est.value - 3f64.sqrt()).abs() < 1e-9, "{est:?}");
    }

    #[test]
    fn components_are_found() {
        let m = from_edges(5, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 2), (4, 4)]);
        let mut comps = strongly_connected_components(&m);
        comps.sort();
        assert_eq!(comps, vec![vec![0, 1], vec![2, 3], vec![4]]);
    }
}
