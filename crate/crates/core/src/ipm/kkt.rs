//! Symmetric indefinite factorization of KKT systems.
//!
//! [`SparseLdl`] wraps faer's sparse LDLᵀ (AMD ordering, supernodal when
//! profitable). The symbolic analysis is done once per sparsity pattern;
//! every numeric factorization reports the inertia read off the diagonal
//! factor. [`DenseLdl`] is a small reference implementation with the same
//! contract, used to cross-check the sparse path.

use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
use faer::linalg::cholesky::ldlt::factor::{LdltParams, LdltRegularization};
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, supernodal::SupernodalLdltRef, CholeskySymbolicParams, LdltRef, SymbolicCholesky,
    SymbolicCholeskyRaw, SymmetricOrdering,
};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Side, Spec};

use crate::error::{Error, Result};

/// Counts of positive, negative and zero pivots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Only exact zeros and non-finite pivots count as zero: with a regularized
/// constraint block, legitimately tiny pivots of either sign do occur.
fn inertia_of(diag: impl Iterator<Item = f64>) -> Inertia {
    let mut out = Inertia::default();
    for v in diag {
        if !v.is_finite() || v == 0.0 {
            out.zero += 1;
        } else if v > 0.0 {
            out.positive += 1;
        } else {
            out.negative += 1;
        }
    }
    out
}

/// Sparse LDLᵀ of a symmetric matrix given by lower-triangle triplets.
pub struct SparseLdl {
    dim: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    /// CSC position of every input triplet (duplicates are summed).
    slot: Vec<usize>,
    values: Vec<f64>,
    symbolic: SymbolicCholesky<usize>,
    l_values: Vec<f64>,
    factored: bool,
    mem: MemBuffer,
}

impl SparseLdl {
    /// Analyzes the pattern of the lower-triangle triplets `(rows, cols)`.
    /// Entries above the diagonal are mirrored into the lower triangle.
    pub fn analyze(dim: usize, rows: &[usize], cols: &[usize]) -> Result<Self> {
        assert_eq!(rows.len(), cols.len());
        let mut keyed: Vec<(usize, usize, usize)> = rows
            .iter()
            .zip(cols)
            .enumerate()
            .map(|(k, (&r, &c))| (r.min(c), r.max(c), k))
            .collect();
        // every diagonal entry is present so that regularization always has
        // a place to go
        let extra = rows.len();
        keyed.extend((0..dim).map(|i| (i, i, extra)));
        keyed.sort_unstable();

        let mut col_ptr = vec![0usize; dim + 1];
        let mut row_idx = Vec::with_capacity(keyed.len());
        let mut slot = vec![0usize; rows.len()];
        let mut last: Option<(usize, usize)> = None;
        for &(c, r, k) in &keyed {
            if last != Some((c, r)) {
                row_idx.push(r);
                col_ptr[c + 1] += 1;
                last = Some((c, r));
            }
            if k < extra {
                slot[k] = row_idx.len() - 1;
            }
        }
        for c in 0..dim {
            col_ptr[c + 1] += col_ptr[c];
        }

        let pattern = SymbolicSparseColMatRef::new_checked(dim, dim, &col_ptr, None, &row_idx);
        let symbolic = factorize_symbolic_cholesky(pattern, Side::Lower, SymmetricOrdering::Amd, CholeskySymbolicParams::default())
            .map_err(|e| Error::Linear(format!("symbolic analysis failed: {e:?}")))?;
        let req = StackReq::any_of(&[
            symbolic.factorize_numeric_ldlt_scratch::<f64>(Par::Seq, Spec::<LdltParams, f64>::default()),
            symbolic.solve_in_place_scratch::<f64>(1, Par::Seq),
        ]);
        let l_values = vec![0.0; symbolic.len_val()];
        let nnz = row_idx.len();
        Ok(SparseLdl {
            dim,
            col_ptr,
            row_idx,
            slot,
            values: vec![0.0; nnz],
            symbolic,
            l_values,
            factored: false,
            mem: MemBuffer::new(req),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_values.len()
    }

    /// Factors the matrix with triplet values `vals` plus `diag_shift[i]`
    /// added to diagonal `i`, and returns its inertia.
    pub fn factor(&mut self, vals: &[f64], diag_shift: &[f64]) -> Inertia {
        assert_eq!(vals.len(), self.slot.len());
        assert_eq!(diag_shift.len(), self.dim);
        self.values.fill(0.0);
        for (k, &v) in vals.iter().enumerate() {
            self.values[self.slot[k]] += v;
        }
        for c in 0..self.dim {
            // the diagonal is the first entry of each sorted lower column
            let p = self.col_ptr[c];
            debug_assert_eq!(self.row_idx[p], c);
            self.values[p] += diag_shift[c];
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            self.factored = false;
            return Inertia { zero: self.dim, ..Default::default() };
        }
        let a = SparseColMatRef::new(
            SymbolicSparseColMatRef::new_checked(self.dim, self.dim, &self.col_ptr, None, &self.row_idx),
            &self.values,
        );
        let stack = MemStack::new(&mut self.mem);
        let res = self.symbolic.factorize_numeric_ldlt(
            &mut self.l_values,
            a,
            Side::Lower,
            LdltRegularization::default(),
            Par::Seq,
            stack,
            Spec::default(),
        );
        if res.is_err() {
            self.factored = false;
            return Inertia { zero: self.dim, ..Default::default() };
        }
        self.factored = true;
        self.inertia()
    }

    fn inertia(&self) -> Inertia {
        match self.symbolic.raw() {
            SymbolicCholeskyRaw::Simplicial(s) => {
                let f = s.factor();
                let (cp, ri) = (f.col_ptr(), f.row_idx());
                inertia_of((0..self.dim).map(|c| {
                    (cp[c]..cp[c + 1])
                        .find(|&p| ri[p] == c)
                        .map_or(0.0, |p| self.l_values[p])
                }))
            }
            SymbolicCholeskyRaw::Supernodal(s) => {
                let ldlt = SupernodalLdltRef::new(s, &self.l_values);
                let mut d = Vec::with_capacity(self.dim);
                for k in 0..s.n_supernodes() {
                    let m = ldlt.supernode(k).val();
                    for i in 0..m.ncols() {
                        d.push(m[(i, i)]);
                    }
                }
                inertia_of(d.into_iter())
            }
        }
    }

    /// Solves in place with the last successful factorization.
    pub fn solve(&mut self, rhs: &mut [f64]) {
        assert!(self.factored, "solve called without a valid factorization");
        let ldlt = LdltRef::<usize, f64>::new(&self.symbolic, &self.l_values);
        let stack = MemStack::new(&mut self.mem);
        let n = rhs.len();
        let m = MatMut::from_column_major_slice_mut(rhs, n, 1);
        ldlt.solve_in_place_with_conj(Conj::No, m, Par::Seq, stack);
    }

    /// `y = A x` with the assembled (shifted) matrix of the last factor call.
    pub fn multiply(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for c in 0..self.dim {
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row_idx[p];
                let v = self.values[p];
                y[r] += v * x[c];
                if r != c {
                    y[c] += v * x[r];
                }
            }
        }
    }
}

/// Dense LDLᵀ without pivoting; reference for small systems.
pub struct DenseLdl {
    n: usize,
    l: Vec<f64>,
    d: Vec<f64>,
}

impl DenseLdl {
    /// Factors the symmetric matrix `a` (row-major, full storage).
    pub fn factor(a: &[f64], n: usize) -> Result<(Self, Inertia)> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        let mut d = vec![0.0; n];
        for j in 0..n {
            let mut djj = a[j * n + j];
            for k in 0..j {
                djj -= l[j * n + k] * l[j * n + k] * d[k];
            }
            if djj == 0.0 {
                return Err(Error::Linear(format!("zero pivot at {j}")));
            }
            d[j] = djj;
            l[j * n + j] = 1.0;
            for i in j + 1..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= l[i * n + k] * l[j * n + k] * d[k];
                }
                l[i * n + j] = v / djj;
            }
        }
        let inertia = inertia_of(d.iter().copied());
        Ok((DenseLdl { n, l, d }, inertia))
    }

    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for k in 0..i {
                b[i] -= self.l[i * n + k] * b[k];
            }
        }
        for i in 0..n {
            b[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                b[i] -= self.l[k * n + i] * b[k];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lower_triplets(a: &[f64], n: usize) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let (mut r, mut c, mut v) = (vec![], vec![], vec![]);
        for i in 0..n {
            for j in 0..=i {
                if a[i * n + j] != 0.0 {
                    r.push(i);
                    c.push(j);
                    v.push(a[i * n + j]);
                }
            }
        }
        (r, c, v)
    }

    #[test]
    fn saddle_system_matches_dense_oracle() {
        // [[2, 0, 1], [0, 3, 1], [1, 1, 0]]
        let a = [2.0, 0.0, 1.0, 0.0, 3.0, 1.0, 1.0, 1.0, 0.0];
        let (r, c, v) = lower_triplets(&a, 3);
        let mut sp = SparseLdl::analyze(3, &r, &c).unwrap();
        let inertia = sp.factor(&v, &[0.0; 3]);
        assert_eq!(inertia, Inertia { positive: 2, negative: 1, zero: 0 });
        let mut x = vec![1.0, -2.0, 0.5];
        sp.solve(&mut x);
        let (dense, di) = DenseLdl::factor(&a, 3).unwrap();
        assert_eq!(di, inertia);
        let mut y = vec![1.0, -2.0, 0.5];
        dense.solve(&mut y);
        for i in 0..3 {
            assert_relative_eq!(x[i], y[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn identity_returns_rhs() {
        let mut sp = SparseLdl::analyze(4, &[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap();
        assert_eq!(sp.factor(&[1.0; 4], &[0.0; 4]).positive, 4);
        let mut b = vec![3.0, -1.0, 2.0, 0.5];
        sp.solve(&mut b);
        assert_eq!(b, vec![3.0, -1.0, 2.0, 0.5]);
    }

    #[test]
    fn random_quasidefinite_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..20 {
            let (n, m) = (3 + trial % 7, 1 + trial % 4);
            let dim = n + m;
            let mut a = vec![0.0; dim * dim];
            for i in 0..n {
                a[i * dim + i] = rng.gen_range(1.0..4.0);
            }
            for i in 0..m {
                a[(n + i) * dim + n + i] = -1e-3;
                for j in 0..n {
                    if rng.gen_bool(0.5) {
                        let v = rng.gen_range(-2.0..2.0);
                        a[(n + i) * dim + j] = v;
                        a[j * dim + n + i] = v;
                    }
                }
            }
            let (r, c, v) = lower_triplets(&a, dim);
            let mut sp = SparseLdl::analyze(dim, &r, &c).unwrap();
            let inertia = sp.factor(&v, &vec![0.0; dim]);
            assert_eq!((inertia.positive, inertia.negative), (n, m));
            let b: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut x = b.clone();
            sp.solve(&mut x);
            let mut ax = vec![0.0; dim];
            sp.multiply(&x, &mut ax);
            for i in 0..dim {
                assert!((ax[i] - b[i]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn singular_matrix_reports_zero_pivot() {
        // rank-deficient constraint block: two identical rows
        let a = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        let (r, c, v) = lower_triplets(&a, 4);
        let mut sp = SparseLdl::analyze(4, &r, &c).unwrap();
        let inertia = sp.factor(&v, &[0.0; 4]);
        assert!(inertia.zero > 0 || inertia.negative + inertia.positive < 4 || inertia.negative != 2);
        // regularizing the constraint block restores the expected inertia
        let inertia = sp.factor(&v, &[0.0, 0.0, -1e-8, -1e-8]);
        assert_eq!((inertia.positive, inertia.negative), (2, 2));
    }
}
