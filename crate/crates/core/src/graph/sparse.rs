use crate::error::{Error, Result};

/// Square sparse matrix in compressed sparse row layout.
///
/// Entries are structural: an entry stored with value `0.0` still counts as a
/// nonzero of the pattern. Column indices within each row are strictly
/// increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn zeros(n: usize) -> Self {
        SparseMatrix {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets.
    ///
    /// Duplicate coordinates, out-of-range indices and non-finite values are
    /// rejected.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(r, c, v) in &triplets {
            if r >= n || c >= n {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) outside {n}x{n} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "entry ({r}, {c}) has non-finite value {v}"
                )));
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        if let Some(w) = triplets.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidArgument(format!(
                "duplicate entry ({}, {})",
                w[0].0, w[0].1
            )));
        }

        let mut row_ptr = vec![0usize; n + 1];
        for &(r, _, _) in &triplets {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let (col_idx, values) = triplets.into_iter().map(|(_, c, v)| (c, v)).unzip();
        Ok(SparseMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).ok().map(|i| vals[i])
    }

    /// Iterates over stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    /// Same sparsity pattern with every value replaced by `f(row, col, value)`.
    pub fn map_values(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Result<Self> {
        let mut out = self.clone();
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = f(r, self.col_idx[k], self.values[k]);
                if !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({r}, {}) mapped to non-finite value",
                        self.col_idx[k]
                    )));
                }
                out.values[k] = v;
            }
        }
        Ok(out)
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|r| {
                let (cols, vals) = self.row(r);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// `y = Aᵀ x`, i.e. the row vector `xᵀ A`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (r, &xr) in x.iter().enumerate() {
            if xr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += xr * v;
            }
        }
        y
    }

    pub fn transpose(&self) -> Self {
        let triplets = self.entries().map(|(r, c, v)| (c, r, v)).collect();
        // Transposing a valid matrix cannot create duplicates.
        Self::from_triplets(self.n, triplets).expect("transpose of a valid matrix")
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(r, c, v)| self.get(c, r) == Some(v))
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// Rows or columns with at least one stored entry of nonzero value.
    pub fn active_nodes(&self) -> Vec<usize> {
        let mut active = vec![false; self.n];
        for (r, c, v) in self.entries() {
            if v != 0.0 {
                active[r] = true;
                active[c] = true;
            }
        }
        (0..self.n).filter(|&i| active[i]).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.n]; self.n];
        for (r, c, v) in self.entries() {
            dense[r][c] = v;
        }
        dense
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> SparseMatrix {
        SparseMatrix::from_triplets(3, vec![(1, 2, 2.0), (0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn triplets_are_sorted_into_rows() {
        let m = path3();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), Some(1.0));
        assert_eq!(m.get(1, 2), Some(2.0));
        assert_eq!(m.get(2, 0), None);
        let e: Vec<_> = m.entries().collect();
        assert_eq!(e, vec![(0, 1, 1.0), (1, 2, 2.0)]);
    }

    #[test]
    fn rejects_duplicates_and_out_of_range() {
        assert!(SparseMatrix::from_triplets(2, vec![(0, 1, 1.0), (0, 1, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, vec![(0, 2, 1.0)]).is_err());
        assert!(SparseMatrix::from_triplets(2, vec![(0, 1, f64::NAN)]).is_err());
    }

    #[test]
    fn products() {
        let m = path3();
        assert_eq!(m.mul_vec(&[1.0, 1.0, 1.0]), vec![1.0, 2.0, 0.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0, 1.0]), vec![0.0, 1.0, 2.0]);
        assert_eq!(m.transpose().mul_vec(&[1.0, 1.0, 1.0]), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn active_nodes_skip_isolated() {
        let m = SparseMatrix::from_triplets(4, vec![(0, 2, 1.0)]).unwrap();
        assert_eq!(m.active_nodes(), vec![0, 2]);
    }
}
