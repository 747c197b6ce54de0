//! Sparse LDLᵀ factorization without pivoting (up-looking, elimination-tree
//! driven). Works for SPD matrices and for quasi-definite saddle systems
//! `[A+δI, Bᵀ; B, -δI]` under any symmetric ordering.

use super::CsrMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

const NONE: usize = usize::MAX;

/// Fill-reducing approximate-minimum-degree ordering of a square pattern.
///
/// Returns `perm` with `perm[k]` = original index eliminated at step `k`.
pub fn amd_ordering(n: usize, indptr: &[usize], indices: &[usize]) -> Result<Vec<usize>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let (p, _pinv, _info) = amd::order::<usize>(n, indptr, indices, &amd::Control::default())
        .map_err(|s| Error::Singular(format!("AMD ordering failed: {s:?}")))?;
    Ok(p)
}

/// Factorization `P A Pᵀ = L D Lᵀ` with unit lower-triangular `L`.
#[derive(Debug, Clone)]
pub struct Ldlt<T> {
    n: usize,
    perm: Vec<usize>,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<T>,
    d: Vec<T>,
    dinv: Vec<T>,
}

impl<T: Real> Ldlt<T> {
    /// Factors a symmetric matrix given in full (both triangles) storage.
    /// When `perm` is `None` an AMD ordering of the pattern is used.
    pub fn factor(a: &CsrMatrix<T>, perm: Option<Vec<usize>>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::InvalidArgument("LDLT needs a square matrix".into()));
        }
        let perm = match perm {
            Some(p) => {
                if p.len() != n {
                    return Err(Error::InvalidArgument("permutation length mismatch".into()));
                }
                p
            }
            None => amd_ordering(n, a.indptr(), a.indices())?,
        };
        let mut iperm = vec![NONE; n];
        for (k, &i) in perm.iter().enumerate() {
            if i >= n || iperm[i] != NONE {
                return Err(Error::InvalidArgument("invalid permutation".into()));
            }
            iperm[i] = k;
        }

        // Upper triangle of the permuted matrix in compressed-column form.
        let mut colcount = vec![0usize; n + 1];
        for (r, c, _) in a.triplets() {
            let (pr, pc) = (iperm[r], iperm[c]);
            if pr <= pc {
                colcount[pc + 1] += 1;
            }
        }
        for j in 0..n {
            colcount[j + 1] += colcount[j];
        }
        let ap = colcount.clone();
        let mut next = colcount;
        let mut ai = vec![0usize; ap[n]];
        let mut ax = vec![T::zero(); ap[n]];
        for (r, c, v) in a.triplets() {
            let (pr, pc) = (iperm[r], iperm[c]);
            if pr <= pc {
                ai[next[pc]] = pr;
                ax[next[pc]] = v;
                next[pc] += 1;
            }
        }

        // Elimination tree and column counts of L.
        let mut etree = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let mut work = vec![NONE; n];
        for j in 0..n {
            work[j] = j;
            for &row in &ai[ap[j]..ap[j + 1]] {
                let mut i = row;
                while work[i] != j {
                    if etree[i] == NONE {
                        etree[i] = j;
                    }
                    lnz[i] += 1;
                    work[i] = j;
                    i = etree[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let mut li = vec![0usize; lp[n]];
        let mut lx = vec![T::zero(); lp[n]];
        let mut d = vec![T::zero(); n];
        let mut dinv = vec![T::zero(); n];

        let mut y_vals = vec![T::zero(); n];
        let mut y_used = vec![false; n];
        let mut y_idx = vec![0usize; n];
        let mut elim = vec![0usize; n];
        let mut next_in_col: Vec<usize> = lp[..n].to_vec();

        for k in 0..n {
            let mut nnz_y = 0usize;
            d[k] = T::zero();
            for p in ap[k]..ap[k + 1] {
                let b = ai[p];
                if b == k {
                    d[k] += ax[p];
                    continue;
                }
                y_vals[b] += ax[p];
                if !y_used[b] {
                    y_used[b] = true;
                    elim[0] = b;
                    let mut ne = 1usize;
                    let mut nx = etree[b];
                    while nx != NONE && nx < k {
                        if y_used[nx] {
                            break;
                        }
                        y_used[nx] = true;
                        elim[ne] = nx;
                        ne += 1;
                        nx = etree[nx];
                    }
                    while ne > 0 {
                        ne -= 1;
                        y_idx[nnz_y] = elim[ne];
                        nnz_y += 1;
                    }
                }
            }
            for t in (0..nnz_y).rev() {
                let c = y_idx[t];
                let end = next_in_col[c];
                let yc = y_vals[c];
                for q in lp[c]..end {
                    y_vals[li[q]] -= lx[q] * yc;
                }
                li[end] = k;
                lx[end] = yc * dinv[c];
                d[k] -= yc * lx[end];
                next_in_col[c] += 1;
                y_vals[c] = T::zero();
                y_used[c] = false;
            }
            if d[k] == T::zero() || !d[k].is_finite() {
                return Err(Error::Singular(format!("zero or non-finite pivot at step {k}")));
            }
            dinv[k] = T::one() / d[k];
        }
        Ok(Self {
            n,
            perm,
            lp,
            li,
            lx,
            d,
            dinv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz_l(&self) -> usize {
        self.lx.len()
    }

    /// Number of positive and negative pivots.
    pub fn inertia(&self) -> (usize, usize) {
        let pos = self.d.iter().filter(|&&x| x > T::zero()).count();
        (pos, self.n - pos)
    }

    pub fn min_pivot(&self) -> T {
        self.d.iter().fold(T::infinity(), |m, &x| m.min(x))
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut x: Vec<T> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..self.n {
            let xi = x[i];
            for q in self.lp[i]..self.lp[i + 1] {
                x[self.li[q]] -= self.lx[q] * xi;
            }
        }
        for (xi, &di) in x.iter_mut().zip(&self.dinv) {
            *xi *= di;
        }
        for i in (0..self.n).rev() {
            let mut acc = x[i];
            for q in self.lp[i]..self.lp[i + 1] {
                acc -= self.lx[q] * x[self.li[q]];
            }
            x[i] = acc;
        }
        let mut out = vec![T::zero(); self.n];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = x[k];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn laplacian_1d(n: usize) -> CsrMatrix<f64> {
        let mut b = TripletBuilder::new(n, n);
        for i in 0..n {
            b.push(i, i, 2.0);
            if i + 1 < n {
                b.push(i, i + 1, -1.0);
                b.push(i + 1, i, -1.0);
            }
        }
        b.build()
    }

    #[test]
    fn spd_solve_matches_rhs() {
        let a = laplacian_1d(50);
        let f = Ldlt::factor(&a, None).unwrap();
        assert_eq!(f.inertia(), (50, 0));
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-12);
        }
    }

    #[test]
    fn quasi_definite_inertia() {
        // [2 1; 1 -1] has one positive and one negative eigenvalue.
        let mut b = TripletBuilder::<f64>::new(2, 2);
        b.push(0, 0, 2.0);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        b.push(1, 1, -1.0);
        let a = b.build();
        for perm in [vec![0, 1], vec![1, 0]] {
            let f = Ldlt::factor(&a, Some(perm)).unwrap();
            assert_eq!(f.inertia(), (1, 1));
            let x = f.solve(&[3.0, 0.0]);
            assert!((2.0 * x[0] + x[1] - 3.0).abs() < 1e-14);
            assert!((x[0] - x[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        let a = b.build();
        assert!(Ldlt::factor(&a, Some(vec![0, 1])).is_err());
    }
}
