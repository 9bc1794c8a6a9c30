use crate::error::{Error, Result};

/// Compressed sparse rows with full storage; `symmetric` records that the
/// stored pattern and values are symmetric.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    /// Validates sorted, unique, in-bounds column indices per row.
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
        symmetric: bool,
    ) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || indptr[nrows] != indices.len() || indices.len() != data.len() {
            return Err(Error::Dimension("inconsistent CSR arrays".into()));
        }
        if symmetric && nrows != ncols {
            return Err(Error::Dimension("symmetric matrix must be square".into()));
        }
        for r in 0..nrows {
            if indptr[r] > indptr[r + 1] {
                return Err(Error::Dimension(format!("row pointer decreases at row {r}")));
            }
            let row = &indices[indptr[r]..indptr[r + 1]];
            for (k, &c) in row.iter().enumerate() {
                if c >= ncols {
                    return Err(Error::Dimension(format!("column {c} out of bounds in row {r}")));
                }
                if k > 0 && row[k - 1] >= c {
                    return Err(Error::Dimension(format!("unsorted or duplicate column in row {r}")));
                }
            }
        }
        Ok(CsrMatrix { nrows, ncols, indptr, indices, data, symmetric })
    }

    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Result<Self> {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::Dimension(format!("triplet ({r},{c}) out of bounds")));
            }
            counts[r + 1] += 1;
        }
        for r in 0..nrows {
            counts[r + 1] += counts[r];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for r in 0..nrows {
            order.clear();
            order.extend(counts[r]..counts[r + 1]);
            order.sort_by_key(|&k| cols[k]);
            for &k in &order {
                if indices.len() > indptr[r] && *indices.last().unwrap() == cols[k] {
                    *data.last_mut().unwrap() += vals[k];
                } else {
                    indices.push(cols[k]);
                    data.push(vals[k]);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix::new(nrows, ncols, indptr, indices, data, symmetric)
    }

    /// Row-major dense input; zeros are not stored.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[f64], symmetric: bool) -> Result<Self> {
        if dense.len() != nrows * ncols {
            return Err(Error::Dimension("dense buffer has wrong length".into()));
        }
        let mut t = Vec::new();
        for r in 0..nrows {
            for c in 0..ncols {
                if dense[r * ncols + c] != 0.0 {
                    t.push((r, c, dense[r * ncols + c]));
                }
            }
        }
        CsrMatrix::from_triplets(nrows, ncols, &t, symmetric)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![1.0; n],
            symmetric: true,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            data: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }
    pub fn nnz(&self) -> usize {
        self.data.len()
    }
    pub fn is_symmetric_flagged(&self) -> bool {
        self.symmetric
    }
    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.data[a..b])
    }

    /// Storage position of `(r, c)`, if present.
    #[inline]
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b].binary_search(&c).ok().map(|k| a + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.data[k])
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols, "matvec input length");
        assert_eq!(y.len(), self.nrows, "matvec output length");
        for r in 0..self.nrows {
            let mut s = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            y[r] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y += Aᵀ x`.
    pub fn mul_vec_transpose_add(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.nrows);
        assert_eq!(y.len(), self.ncols);
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                y[self.indices[k]] += self.data[k] * xr;
            }
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|r| self.get(r, r)).collect()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let mut next = counts.clone();
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                indices[next[c]] = r;
                data[next[c]] = self.data[k];
                next[c] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, indptr: counts, indices, data, symmetric: self.symmetric }
    }

    /// Extracts rows `rows` and columns `cols` (given as index lists into this matrix).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize], symmetric: bool) -> CsrMatrix {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            map[c] = k;
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for &r in rows {
            buf.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                let m = map[self.indices[k]];
                if m != usize::MAX {
                    buf.push((m, self.data[k]));
                }
            }
            buf.sort_by_key(|e| e.0);
            for &(c, v) in &buf {
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: cols.len(), indptr, indices, data, symmetric }
    }

    /// Drops stored zeros except on the diagonal.
    pub fn prune_zeros(&mut self) {
        let mut w = 0;
        let mut indptr = Vec::with_capacity(self.nrows + 1);
        indptr.push(0);
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                if self.data[k] != 0.0 || c == r {
                    self.indices[w] = c;
                    self.data[w] = self.data[k];
                    w += 1;
                }
            }
            indptr.push(w);
        }
        self.indices.truncate(w);
        self.data.truncate(w);
        self.indptr = indptr;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij − A_ji|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                let t = if c < self.nrows && r < self.ncols { self.get(c, r) } else { 0.0 };
                worst = worst.max((self.data[k] - t).abs());
            }
        }
        worst
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.nrows * self.ncols];
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                d[r * self.ncols + self.indices[k]] = self.data[k];
            }
        }
        d
    }

    /// Copy with rows and columns in `pinned` replaced by unit vectors.
    pub fn with_pinned(&self, pinned: &[usize]) -> CsrMatrix {
        let mut is_pinned = vec![false; self.nrows.max(self.ncols)];
        for &p in pinned {
            is_pinned[p] = true;
        }
        let mut out = self.clone();
        for r in 0..self.nrows {
            for k in out.indptr[r]..out.indptr[r + 1] {
                let c = out.indices[k];
                if is_pinned[r] || is_pinned[c] {
                    out.data[k] = if r == c { 1.0 } else { 0.0 };
                }
            }
        }
        for &p in pinned {
            assert!(out.position(p, p).is_some(), "pinned dof {p} lacks a diagonal entry");
        }
        out
    }
}
