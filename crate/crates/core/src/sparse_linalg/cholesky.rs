//! Up-looking sparse Cholesky `P A Pᵀ = L Lᵀ` with an approximate minimum
//! degree ordering.

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    /// Column-compressed `L`, diagonal stored first in each column.
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    pinned: Vec<usize>,
}

fn amd_order(a: &CsrMatrix) -> Result<Vec<usize>> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let ap: Vec<i64> = a.indptr().iter().map(|&v| v as i64).collect();
    let ai: Vec<i64> = a.indices().iter().map(|&v| v as i64).collect();
    let (p, _pinv, _info) = amd::order::<i64>(n as i64, &ap, &ai, &amd::Control::default())
        .map_err(|s| Error::Singular(format!("ordering failed: {s:?}")))?;
    Ok(p.into_iter().map(|v| v as usize).collect())
}

/// Nonzero pattern of row `k` of `L` in topological order, written to `s[top..]`.
fn ereach(
    cp: &[usize],
    ci: &[usize],
    k: usize,
    parent: &[usize],
    s: &mut [usize],
    mark: &mut [usize],
    stamp: usize,
) -> usize {
    let n = parent.len();
    let mut top = n;
    mark[k] = stamp;
    for p in cp[k]..cp[k + 1] {
        let mut i = ci[p];
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != stamp {
            s[len] = i;
            len += 1;
            mark[i] = stamp;
            i = parent[i];
            if i == usize::MAX {
                break;
            }
        }
        while len > 0 {
            top -= 1;
            len -= 1;
            s[top] = s[len];
        }
    }
    top
}

impl CholeskyFactor {
    pub fn factorize(a: &CsrMatrix) -> Result<Self> {
        Self::factorize_pinned(a, &[])
    }

    /// Factorizes `A` with the listed dofs replaced by unit rows and columns.
    pub fn factorize_pinned(a: &CsrMatrix, pinned: &[usize]) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension("Cholesky needs a square matrix".into()));
        }
        if pinned.iter().any(|&p| p >= n) {
            return Err(Error::Dimension("pinned dof out of range".into()));
        }
        let owned;
        let a = if pinned.is_empty() {
            a
        } else {
            owned = a.with_pinned(pinned);
            &owned
        };
        let perm = amd_order(a)?;
        let mut pinv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            pinv[old] = new;
        }
        // Upper triangle of C = P A Pᵀ by columns: column j holds rows i ≤ j.
        let mut counts = vec![0usize; n + 1];
        for r in 0..n {
            let (cols, _) = a.row(r);
            for &c in cols {
                let (i, j) = (pinv[r], pinv[c]);
                if i <= j {
                    counts[j + 1] += 1;
                }
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let cp = counts.clone();
        let mut next = counts;
        let mut ci = vec![0usize; cp[n]];
        let mut cx = vec![0.0; cp[n]];
        for r in 0..n {
            let (cols, vals) = a.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let (i, j) = (pinv[r], pinv[c]);
                if i <= j {
                    ci[next[j]] = i;
                    cx[next[j]] = v;
                    next[j] += 1;
                }
            }
        }
        // Elimination tree.
        let mut parent = vec![usize::MAX; n];
        let mut ancestor = vec![usize::MAX; n];
        for k in 0..n {
            for p in cp[k]..cp[k + 1] {
                let mut i = ci[p];
                while i != usize::MAX && i < k {
                    let inext = ancestor[i];
                    ancestor[i] = k;
                    if inext == usize::MAX {
                        parent[i] = k;
                    }
                    i = inext;
                }
            }
        }
        // Column counts from the row patterns.
        let mut s = vec![0usize; n];
        let mut mark = vec![usize::MAX; n];
        let mut colcount = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&cp, &ci, k, &parent, &mut s, &mut mark, k);
            for &i in &s[top..n] {
                colcount[i] += 1;
            }
        }
        let mut lp = vec![0usize; n + 1];
        for j in 0..n {
            lp[j + 1] = lp[j] + colcount[j];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut c: Vec<usize> = lp[..n].to_vec();
        let mut x = vec![0.0; n];
        mark.iter_mut().for_each(|m| *m = usize::MAX);
        for k in 0..n {
            let top = ereach(&cp, &ci, k, &parent, &mut s, &mut mark, k);
            x[k] = 0.0;
            for p in cp[k]..cp[k + 1] {
                x[ci[p]] = cx[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &s[top..n] {
                let lki = x[i] / lx[lp[i]];
                x[i] = 0.0;
                for p in lp[i] + 1..c[i] {
                    x[li[p]] -= lx[p] * lki;
                }
                d -= lki * lki;
                let p = c[i];
                c[i] += 1;
                li[p] = k;
                lx[p] = lki;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: perm[k], value: d });
            }
            let p = c[k];
            c[k] += 1;
            li[p] = k;
            lx[p] = d.sqrt();
        }
        Ok(CholeskyFactor { n, perm, lp, li, lx, pinned: pinned.to_vec() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    pub fn pinned(&self) -> &[usize] {
        &self.pinned
    }

    /// Solves in place; pinned dofs of the right-hand side are treated as zero.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "solve: right-hand side length");
        for &p in &self.pinned {
            b[p] = 0.0;
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for j in 0..self.n {
            y[j] /= self.lx[self.lp[j]];
            let yj = y[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                y[self.li[p]] -= self.lx[p] * yj;
            }
        }
        for j in (0..self.n).rev() {
            let mut s = y[j];
            for p in self.lp[j] + 1..self.lp[j + 1] {
                s -= self.lx[p] * y[self.li[p]];
            }
            y[j] = s / self.lx[self.lp[j]];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = y[new];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
