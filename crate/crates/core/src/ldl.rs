//! Sparse LDLᵀ factorization without pivoting for symmetric matrices.
//!
//! Works for real symmetric definite matrices and for complex symmetric
//! (not Hermitian) matrices whose real part is definite, such as
//! `iωE - A(μ)`. No conjugation is applied anywhere.
//!
//! The ordering is a nested dissection built from breadth-first level
//! structures; the numeric phase is the up-looking algorithm driven by the
//! elimination tree. Symbolic analysis depends only on the sparsity pattern
//! and can be shared between factorizations of matrices with equal patterns.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::{norm2, CsrMatrix, Scalar};

const NONE: usize = usize::MAX;

/// Subgraphs at most this large are not dissected further.
const LEAF_SIZE: usize = 48;

struct Graph {
    ptr: Vec<usize>,
    adj: Vec<usize>,
}

impl Graph {
    /// Adjacency of the symmetrized pattern, without self loops.
    fn from_pattern<T>(m: &CsrMatrix<T>) -> Self
    where
        T: Scalar,
    {
        let n = m.n_rows();
        let mut deg = vec![0usize; n];
        for r in 0..n {
            for &c in m.row(r).0 {
                if c != r {
                    deg[r] += 1;
                    deg[c] += 1;
                }
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + deg[i];
        }
        let mut fill = ptr.clone();
        let mut adj = vec![0usize; ptr[n]];
        for r in 0..n {
            for &c in m.row(r).0 {
                if c != r {
                    adj[fill[r]] = c;
                    fill[r] += 1;
                    adj[fill[c]] = r;
                    fill[c] += 1;
                }
            }
        }
        for i in 0..n {
            let nb = &mut adj[ptr[i]..ptr[i + 1]];
            nb.sort_unstable();
        }
        // drop duplicates introduced by symmetric storage
        let mut out_ptr = vec![0usize; n + 1];
        let mut out_adj = Vec::with_capacity(adj.len() / 2 + 1);
        for i in 0..n {
            let mut last = NONE;
            for &j in &adj[ptr[i]..ptr[i + 1]] {
                if j != last {
                    out_adj.push(j);
                    last = j;
                }
            }
            out_ptr[i + 1] = out_adj.len();
        }
        Graph {
            ptr: out_ptr,
            adj: out_adj,
        }
    }

    fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[self.ptr[v]..self.ptr[v + 1]]
    }
}

enum Task {
    Split(Vec<usize>),
    Emit(Vec<usize>),
}

struct Dissector<'g> {
    g: &'g Graph,
    stamp: Vec<usize>,
    level: Vec<usize>,
    visit: Vec<usize>,
    current: usize,
    bfs: usize,
}

impl<'g> Dissector<'g> {
    /// BFS restricted to vertices stamped with `self.current`. Returns the
    /// level sets.
    fn levels(&mut self, root: usize) -> Vec<Vec<usize>> {
        let cur = self.current;
        self.bfs += 1;
        let bfs = self.bfs;
        let mut sets = vec![vec![root]];
        self.level[root] = 0;
        self.visit[root] = bfs;
        loop {
            let depth = sets.len();
            let mut next = Vec::new();
            for &v in &sets[depth - 1] {
                for &w in self.g.neighbors(v) {
                    if self.stamp[w] == cur && self.visit[w] != bfs {
                        self.visit[w] = bfs;
                        self.level[w] = depth;
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            sets.push(next);
        }
        sets
    }

    fn degree_in(&self, v: usize) -> usize {
        self.g
            .neighbors(v)
            .iter()
            .filter(|&&w| self.stamp[w] == self.current)
            .count()
    }

    fn split(&mut self, nodes: Vec<usize>, stack: &mut Vec<Task>) {
        if nodes.len() <= LEAF_SIZE {
            stack.push(Task::Emit(nodes));
            return;
        }
        self.current += 1;
        for &v in &nodes {
            self.stamp[v] = self.current;
        }

        let mut sets = self.levels(nodes[0]);
        let reached: usize = sets.iter().map(Vec::len).sum();
        if reached < nodes.len() {
            // disconnected: peel off the component just found
            let bfs = self.bfs;
            let (comp, rest): (Vec<usize>, Vec<usize>) = nodes.iter().partition(|&&v| self.visit[v] == bfs);
            stack.push(Task::Split(rest));
            stack.push(Task::Split(comp));
            return;
        }

        // pseudo-peripheral root
        for _ in 0..8 {
            let last = sets.last().unwrap();
            let cand = *last
                .iter()
                .min_by_key(|&&v| (self.degree_in(v), v))
                .unwrap();
            let trial = self.levels(cand);
            if trial.len() > sets.len() {
                sets = trial;
            } else {
                break;
            }
        }
        if sets.len() < 3 {
            stack.push(Task::Emit(nodes));
            return;
        }
        // a rejected trial BFS may have overwritten the levels
        for (l, s) in sets.iter().enumerate() {
            for &v in s {
                self.level[v] = l;
            }
        }

        // level splitting the vertex count in half
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut mid = 1;
        for (l, s) in sets.iter().enumerate() {
            acc += s.len();
            if acc >= half {
                mid = l.clamp(1, sets.len() - 2);
                break;
            }
        }
        let mut sep = Vec::new();
        let mut lower = Vec::new();
        for &v in &sets[mid] {
            let touches_upper = self
                .g
                .neighbors(v)
                .iter()
                .any(|&w| self.stamp[w] == self.current && self.level[w] == mid + 1);
            if touches_upper {
                sep.push(v);
            } else {
                lower.push(v);
            }
        }
        for s in &sets[..mid] {
            lower.extend_from_slice(s);
        }
        let upper: Vec<usize> = sets[mid + 1..].iter().flatten().copied().collect();
        stack.push(Task::Emit(sep));
        stack.push(Task::Split(upper));
        stack.push(Task::Split(lower));
    }
}

/// Fill-reducing permutation; `perm[new] = old`.
fn nested_dissection(g: &Graph) -> Vec<usize> {
    let n = g.ptr.len() - 1;
    let mut d = Dissector {
        g,
        stamp: vec![0; n],
        level: vec![0; n],
        visit: vec![0; n],
        current: 0,
        bfs: 0,
    };
    let mut perm = Vec::with_capacity(n);
    let mut stack = vec![Task::Split((0..n).collect())];
    while let Some(task) = stack.pop() {
        match task {
            Task::Emit(nodes) => perm.extend(nodes),
            Task::Split(nodes) if nodes.is_empty() => {}
            Task::Split(nodes) => d.split(nodes, &mut stack),
        }
    }
    perm
}

/// Pattern-only part of the factorization.
#[derive(Debug, Clone)]
pub struct LdlSymbolic {
    n: usize,
    perm: Vec<usize>,
    pinv: Vec<usize>,
    parent: Vec<usize>,
    l_ptr: Vec<usize>,
    pattern_ptr: Vec<usize>,
    pattern_idx: Vec<usize>,
}

impl LdlSymbolic {
    /// Orders and analyzes a square matrix with symmetric pattern.
    pub fn analyze<T: Scalar>(m: &CsrMatrix<T>) -> Result<Arc<Self>> {
        let perm = nested_dissection(&Graph::from_pattern(m));
        Self::analyze_with_ordering(m, perm)
    }

    /// Analysis with a caller-supplied permutation (`perm[new] = old`).
    pub fn analyze_with_ordering<T: Scalar>(m: &CsrMatrix<T>, perm: Vec<usize>) -> Result<Arc<Self>> {
        let n = m.n_rows();
        if m.n_cols() != n {
            return Err(Error::Dimension(format!(
                "LDL requires a square matrix, got {}x{}",
                n,
                m.n_cols()
            )));
        }
        if perm.len() != n {
            return Err(Error::Dimension("permutation length differs from matrix size".into()));
        }
        let mut pinv = vec![NONE; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || pinv[old] != NONE {
                return Err(Error::InvalidArgument("ordering is not a permutation".into()));
            }
            pinv[old] = new;
        }
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &j in m.row(perm[k]).0 {
                let mut i = pinv[j];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == NONE {
                            parent[i] = k;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i];
                    }
                }
            }
        }
        let mut l_ptr = vec![0usize; n + 1];
        for k in 0..n {
            l_ptr[k + 1] = l_ptr[k] + lnz[k];
        }
        Ok(Arc::new(LdlSymbolic {
            n,
            perm,
            pinv,
            parent,
            l_ptr,
            pattern_ptr: m.row_ptr().to_vec(),
            pattern_idx: m.col_idx().to_vec(),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Nonzeros of the strictly lower factor.
    pub fn nnz_l(&self) -> usize {
        self.l_ptr[self.n]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Numeric factorization of a matrix with exactly the analyzed pattern.
    pub fn factor<T: Scalar>(self: &Arc<Self>, m: &CsrMatrix<T>) -> Result<LdlFactor<T>> {
        if m.n_rows() != self.n
            || m.n_cols() != self.n
            || m.row_ptr() != self.pattern_ptr.as_slice()
            || m.col_idx() != self.pattern_idx.as_slice()
        {
            return Err(Error::Dimension(
                "matrix pattern differs from the analyzed pattern".into(),
            ));
        }
        let n = self.n;
        let nnz = self.nnz_l();
        let mut l_idx = vec![0usize; nnz];
        let mut l_val = vec![T::zero(); nnz];
        let mut d = vec![T::zero(); n];
        let mut y = vec![T::zero(); n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        let scale = m.max_abs();

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            let (cols, vals) = m.row(self.perm[k]);
            for (&j, &v) in cols.iter().zip(vals) {
                let mut i = self.pinv[j];
                if i <= k {
                    y[i] += v;
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = self.parent[i];
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = T::zero();
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = T::zero();
                let start = self.l_ptr[i];
                let end = start + lnz[i];
                for p in start..end {
                    let r = l_idx[p];
                    y[r] -= l_val[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                l_idx[end] = k;
                l_val[end] = l_ki;
                lnz[i] += 1;
            }
            let dk = d[k];
            if !dk.is_finite() || dk.modulus() <= f64::EPSILON * 1e-6 * scale {
                return Err(Error::Singular { row: self.perm[k] });
            }
        }
        Ok(LdlFactor {
            symbolic: Arc::clone(self),
            l_idx,
            l_val,
            d,
        })
    }
}

/// Numeric LDLᵀ factor of a permuted matrix.
#[derive(Debug, Clone)]
pub struct LdlFactor<T> {
    symbolic: Arc<LdlSymbolic>,
    l_idx: Vec<usize>,
    l_val: Vec<T>,
    d: Vec<T>,
}

impl<T: Scalar> LdlFactor<T> {
    /// Analyze and factor in one go.
    pub fn new(m: &CsrMatrix<T>) -> Result<Self> {
        LdlSymbolic::analyze(m)?.factor(m)
    }

    pub fn diagonal(&self) -> &[T] {
        &self.d
    }

    pub fn symbolic(&self) -> &Arc<LdlSymbolic> {
        &self.symbolic
    }

    /// Solves `M x = b` with the stored factor.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let s = &*self.symbolic;
        assert_eq!(b.len(), s.n, "right-hand side length");
        let mut x: Vec<T> = s.perm.iter().map(|&old| b[old]).collect();
        for j in 0..s.n {
            let xj = x[j];
            for p in s.l_ptr[j]..s.l_ptr[j + 1] {
                x[self.l_idx[p]] -= self.l_val[p] * xj;
            }
        }
        for j in 0..s.n {
            x[j] = x[j] / self.d[j];
        }
        for j in (0..s.n).rev() {
            let mut acc = x[j];
            for p in s.l_ptr[j]..s.l_ptr[j + 1] {
                acc -= self.l_val[p] * x[self.l_idx[p]];
            }
            x[j] = acc;
        }
        let mut out = vec![T::zero(); s.n];
        for (new, &old) in s.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }

    /// Solves `M x = b` and enforces `‖b - Mx‖ ≤ tol ‖b‖`, applying up to
    /// three steps of iterative refinement.
    pub fn solve_checked(&self, m: &CsrMatrix<T>, b: &[T], tol: f64) -> Result<Vec<T>> {
        let bnorm = norm2(b);
        let mut x = self.solve(b);
        if bnorm == 0.0 {
            return Ok(x);
        }
        let mut rel = f64::INFINITY;
        for attempt in 0..4 {
            let mx = m.mul_vec(&x);
            let r: Vec<T> = b.iter().zip(&mx).map(|(&bi, &mi)| bi - mi).collect();
            rel = norm2(&r) / bnorm;
            if !rel.is_finite() {
                break;
            }
            if rel <= tol {
                return Ok(x);
            }
            if attempt < 3 {
                let dx = self.solve(&r);
                for (xi, di) in x.iter_mut().zip(dx) {
                    *xi += di;
                }
            }
        }
        Err(Error::Residual { residual: rel, tol })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::SparseMatrix;
    use nalgebra::{DMatrix, DVector};
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// 5-point Laplacian on an `nx`×`ny` grid plus `shift` on the diagonal.
    fn grid_laplacian(nx: usize, ny: usize, shift: f64) -> SparseMatrix {
        let idx = |i: usize, j: usize| j * nx + i;
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                let k = idx(i, j);
                t.push((k, k, 4.0 + shift));
                if i > 0 {
                    t.push((k, idx(i - 1, j), -1.0));
                }
                if i + 1 < nx {
                    t.push((k, idx(i + 1, j), -1.0));
                }
                if j > 0 {
                    t.push((k, idx(i, j - 1), -1.0));
                }
                if j + 1 < ny {
                    t.push((k, idx(i, j + 1), -1.0));
                }
            }
        }
        SparseMatrix::from_triplets(nx * ny, nx * ny, &t).unwrap()
    }

    fn dense_solve(m: &SparseMatrix, b: &[f64]) -> Vec<f64> {
        let n = m.n_rows();
        let d = DMatrix::from_fn(n, n, |r, c| m.at(r, c));
        d.lu().solve(&DVector::from_column_slice(b)).unwrap().as_slice().to_vec()
    }

    #[test]
    fn ordering_is_permutation() {
        let m = grid_laplacian(37, 23, 0.0);
        let perm = nested_dissection(&Graph::from_pattern(&m));
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..m.n_rows()).collect::<Vec<_>>());
    }

    #[test]
    fn nested_dissection_reduces_fill() {
        let m = grid_laplacian(60, 60, 0.0);
        let natural = LdlSymbolic::analyze_with_ordering(&m, (0..m.n_rows()).collect()).unwrap();
        let nd = LdlSymbolic::analyze(&m).unwrap();
        assert!(nd.nnz_l() < natural.nnz_l(), "{} vs {}", nd.nnz_l(), natural.nnz_l());
    }

    #[test]
    fn real_solve_matches_dense() {
        let m = grid_laplacian(17, 11, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b: Vec<f64> = (0..m.n_rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = LdlFactor::new(&m).unwrap();
        let x = f.solve_checked(&m, &b, 1e-12).unwrap();
        let oracle = dense_solve(&m, &b);
        for (a, o) in x.iter().zip(&oracle) {
            assert!((a - o).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_without_pivot_need() {
        // negative definite still factors without pivoting
        let m = grid_laplacian(9, 9, 0.0).scale(-1.0);
        let b = vec![1.0; m.n_rows()];
        let f = LdlFactor::new(&m).unwrap();
        assert!(f.diagonal().iter().all(|&d| d < 0.0));
        f.solve_checked(&m, &b, 1e-12).unwrap();
    }

    #[test]
    fn complex_symmetric_solve_matches_dense() {
        let k = grid_laplacian(12, 9, 0.0);
        let e = SparseMatrix::identity(k.n_rows());
        let omega = 3.7;
        // i*omega*E + K, complex symmetric with definite real part
        let m = CsrMatrix::<Complex64>::linear_combination(
            &[&e.map(Complex64::from_real), &k.map(Complex64::from_real)],
            &[Complex64::new(0.0, omega), Complex64::new(1.0, 0.0)],
        )
        .unwrap();
        let b: Vec<Complex64> = (0..m.n_rows()).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = LdlFactor::new(&m).unwrap().solve_checked(&m, &b, 1e-12).unwrap();
        let n = m.n_rows();
        let d = DMatrix::from_fn(n, n, |r, c| m.at(r, c));
        let oracle = d.lu().solve(&DVector::from_column_slice(&b)).unwrap();
        for (a, o) in x.iter().zip(oracle.iter()) {
            assert!((a - o).norm() < 1e-10);
        }
    }

    #[test]
    fn shared_symbolic_and_pattern_guard() {
        let a = grid_laplacian(8, 8, 0.0);
        let sym = LdlSymbolic::analyze(&a).unwrap();
        let b = a.scale(2.0);
        let fa = sym.factor(&a).unwrap();
        let fb = sym.factor(&b).unwrap();
        let rhs = vec![1.0; a.n_rows()];
        let (xa, xb) = (fa.solve(&rhs), fb.solve(&rhs));
        for (p, q) in xa.iter().zip(&xb) {
            assert!((p - 2.0 * q).abs() < 1e-12);
        }
        let other = grid_laplacian(8, 8, 0.0).transpose();
        assert!(sym.factor(&other).is_ok());
        assert!(sym.factor(&grid_laplacian(7, 9, 0.0)).is_err());
    }

    #[test]
    fn singular_reported() {
        let m = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(LdlFactor::new(&m), Err(Error::Singular { .. })));
    }

    #[test]
    fn zero_rhs_gives_exact_zero() {
        let m = grid_laplacian(5, 5, 0.0);
        let f = LdlFactor::new(&m).unwrap();
        let x = f.solve_checked(&m, &vec![0.0; 25], 1e-12).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn disconnected_and_diagonal_blocks() {
        let mut t = Vec::new();
        for i in 0..200 {
            t.push((i, i, 2.0 + i as f64));
        }
        let m = SparseMatrix::from_triplets(200, 200, &t).unwrap();
        let f = LdlFactor::new(&m).unwrap();
        assert_eq!(f.symbolic().nnz_l(), 0);
        let x = f.solve(&vec![1.0; 200]);
        assert!((x[10] - 1.0 / 12.0).abs() < 1e-15);
    }
}
