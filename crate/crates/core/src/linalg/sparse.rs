use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row; explicitly stored zeros are allowed and count toward
/// [`CsrMatrix::nnz`].
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 || *row_ptr.last().unwrap() != col_idx.len() {
            return Err(Error::DimensionMismatch("row pointer does not match entries".into()));
        }
        if col_idx.len() != values.len() {
            return Err(Error::DimensionMismatch("column and value arrays differ in length".into()));
        }
        for i in 0..nrows {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.last().is_some_and(|&c| c >= ncols) {
                return Err(Error::InvalidArgument(format!("row {i} columns not strictly increasing or out of range")));
            }
        }
        Ok(CsrMatrix { nrows, ncols, row_ptr, col_idx, values })
    }

    /// Sums duplicate entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    /// Zero-valued matrix with the given sorted, deduplicated row patterns.
    pub fn from_pattern(ncols: usize, pattern: Vec<Vec<usize>>) -> Self {
        let nrows = pattern.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        row_ptr.push(0);
        let total = pattern.iter().map(Vec::len).sum();
        let mut col_idx = Vec::with_capacity(total);
        for row in pattern {
            debug_assert!(row.windows(2).all(|w| w[0] < w[1]));
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, row_ptr: vec![0; nrows + 1], col_idx: Vec::new(), values: Vec::new() }
    }

    pub fn from_dense(d: &DenseMatrix, drop_tol: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v.abs() > drop_tol {
                    t.push((i, j, v));
                }
            }
        }
        CsrMatrix::from_triplets(d.nrows(), d.ncols(), &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e].binary_search(&j).ok().map(|p| s + p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |p| self.values[p])
    }

    /// Adds into a stored entry; panics if `(i, j)` is outside the pattern.
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let p = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) is not in the sparsity pattern"));
        self.values[p] += v;
    }

    /// `y = A x`
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "spmv: x has wrong length");
        assert_eq!(y.len(), self.nrows, "spmv: y has wrong length");
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for p in s..e {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.spmv(x, &mut y);
        y
    }

    /// `y += alpha A x`
    pub fn spmv_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut acc = 0.0;
            for p in s..e {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi += alpha * acc;
        }
    }

    /// `r = b - A x`
    pub fn residual(&self, b: &[f64], x: &[f64], r: &mut [f64]) {
        self.spmv(x, r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let q = next[j];
                col_idx[q] = i;
                values[q] = self.values[p];
                next[j] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, row_ptr, col_idx, values }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows, "matmul: inner dimensions differ");
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            let (ac, av) = self.row(i);
            for (&k, &a) in ac.iter().zip(av) {
                let (bc, bv) = other.row(k);
                for (&j, &b) in bc.iter().zip(bv) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: other.ncols, row_ptr, col_idx, values }
    }

    /// Copy of the block `rows x cols` (half-open ranges).
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in rows.clone() {
            let (c, v) = self.row(i);
            let lo = c.partition_point(|&j| j < cols.start);
            let hi = c.partition_point(|&j| j < cols.end);
            col_idx.extend(c[lo..hi].iter().map(|&j| j - cols.start));
            values.extend_from_slice(&v[lo..hi]);
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: cols.len(), row_ptr, col_idx, values }
    }

    /// Block-diagonal arrangement `[a 0; 0 b]`.
    pub fn block_diag(a: &CsrMatrix, b: &CsrMatrix) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(a.nrows + b.nrows + 1);
        let mut col_idx = Vec::with_capacity(a.nnz() + b.nnz());
        let mut values = Vec::with_capacity(a.nnz() + b.nnz());
        row_ptr.extend_from_slice(&a.row_ptr);
        col_idx.extend_from_slice(&a.col_idx);
        values.extend_from_slice(&a.values);
        row_ptr.extend(b.row_ptr[1..].iter().map(|&p| p + a.nnz()));
        col_idx.extend(b.col_idx.iter().map(|&j| j + a.ncols));
        values.extend_from_slice(&b.values);
        CsrMatrix { nrows: a.nrows + b.nrows, ncols: a.ncols + b.ncols, row_ptr, col_idx, values }
    }

    /// Zeroes the values of row `i`, keeping its pattern.
    pub fn zero_row(&mut self, i: usize) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.values[s..e].iter_mut().for_each(|v| *v = 0.0);
    }

    /// Zeroes the listed rows and columns (values only).
    pub fn zero_rows_and_cols(&mut self, rows: &[bool], cols: &[bool]) {
        assert_eq!(rows.len(), self.nrows);
        assert_eq!(cols.len(), self.ncols);
        for i in 0..self.nrows {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                if rows[i] || cols[self.col_idx[p]] {
                    self.values[p] = 0.0;
                }
            }
        }
    }

    /// Drops stored entries with `|v| <= tol`.
    pub fn prune(&self, tol: f64) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if x.abs() > tol {
                    col_idx.push(j);
                    values.push(x);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, row_ptr, col_idx, values }
    }

    /// Dense gather of the submatrix at `indices x indices`.
    /// `indices` must be sorted.
    pub fn gather_dense(&self, indices: &[usize]) -> DenseMatrix {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let n = indices.len();
        let mut out = DenseMatrix::zeros(n, n);
        for (li, &gi) in indices.iter().enumerate() {
            let (cols, vals) = self.row(gi);
            // merge two sorted lists
            let (mut a, mut b) = (0, 0);
            while a < cols.len() && b < n {
                match cols[a].cmp(&indices[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        out[(li, b)] = vals[a];
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &x) in c.iter().zip(v) {
                d[(i, j)] = x;
            }
        }
        d
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sparse(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if rng.gen::<f64>() < density {
                    t.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        CsrMatrix::from_triplets(n, m, &t)
    }

    #[test]
    fn identity_and_zero_products() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(CsrMatrix::identity(3).mul_vec(&x), x);
        assert_eq!(CsrMatrix::zeros(3, 3).mul_vec(&x), vec![0.0; 3]);
    }

    #[test]
    fn spmv_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_sparse(&mut rng, 5, 5, 0.6);
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = a.mul_vec(&x);
        let d = a.to_dense();
        for i in 0..5 {
            let mut s = 0.0;
            for j in 0..5 {
                s += d[(i, j)] * x[j];
            }
            assert!((s - y[i]).abs() <= 1e-14);
        }
    }

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 3.0);
    }

    #[test]
    fn transpose_and_matmul_match_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_sparse(&mut rng, 7, 4, 0.5);
        let b = random_sparse(&mut rng, 4, 6, 0.5);
        let c = a.matmul(&b).to_dense();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        for i in 0..7 {
            for j in 0..6 {
                let s: f64 = (0..4).map(|k| ad[(i, k)] * bd[(k, j)]).sum();
                assert!((s - c[(i, j)]).abs() < 1e-14);
            }
        }
        let at = a.transpose().to_dense();
        for i in 0..7 {
            for j in 0..4 {
                assert_eq!(at[(j, i)], ad[(i, j)]);
            }
        }
    }

    #[test]
    fn block_and_gather() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sparse(&mut rng, 6, 6, 0.7);
        let blk = a.block(2..5, 1..4);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(blk.get(i, j), a.get(i + 2, j + 1));
            }
        }
        let idx = [0, 3, 5];
        let g = a.gather_dense(&idx);
        for (li, &gi) in idx.iter().enumerate() {
            for (lj, &gj) in idx.iter().enumerate() {
                assert_eq!(g[(li, lj)], a.get(gi, gj));
            }
        }
        let bd = CsrMatrix::block_diag(&a, &CsrMatrix::identity(2));
        assert_eq!((bd.nrows(), bd.ncols()), (8, 8));
        assert_eq!(bd.get(7, 7), 1.0);
        assert_eq!(bd.get(7, 0), 0.0);
    }

    #[test]
    fn from_parts_validates() {
        assert!(CsrMatrix::from_parts(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::from_parts(1, 3, vec![0, 2], vec![0, 2], vec![1.0, 1.0]).is_ok());
    }
}
