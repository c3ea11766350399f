//! Sparse symmetric matrices, sparse Cholesky, and preconditioned conjugate gradients.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Par, Side};
use std::sync::Once;

/// Symmetric matrix in compressed row form; both triangles are stored.
#[derive(Debug, Clone)]
pub struct SymCsr {
    pub n: usize,
    pub diag: Vec<f64>,
    pub offsets: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SymCsr {
    /// Weighted Laplacian-type matrix: each `(i, j, w)` adds `w` to both
    /// diagonals and `-w` off the diagonal; `shift` is added to the diagonal.
    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize)], weights: &[f64], shift: &[f64]) -> SymCsr {
        let mut count = vec![0usize; n + 1];
        for &(i, j) in edges {
            count[i] += 1;
            count[j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + count[i];
        }
        let mut fill = offsets.clone();
        let mut cols = vec![0usize; offsets[n]];
        let mut vals = vec![0.0; offsets[n]];
        let mut diag = shift.to_vec();
        for (&(i, j), &w) in edges.iter().zip(weights) {
            diag[i] += w;
            diag[j] += w;
            cols[fill[i]] = j;
            vals[fill[i]] = -w;
            fill[i] += 1;
            cols[fill[j]] = i;
            vals[fill[j]] = -w;
            fill[j] += 1;
        }
        SymCsr { n, diag, offsets, cols, vals }
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = self.diag[i] * x[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.offsets[i]..self.offsets[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Symmetric Gauss-Seidel sweep pair used as a preconditioner:
/// `z = (D+L)^{-T} D (D+L)^{-1} r`.
fn sgs_apply(a: &SymCsr, r: &[f64], z: &mut [f64]) {
    let n = a.n;
    for i in 0..n {
        let mut s = r[i];
        for k in a.offsets[i]..a.offsets[i + 1] {
            let j = a.cols[k];
            if j < i {
                s -= a.vals[k] * z[j];
            }
        }
        z[i] = s / a.diag[i];
    }
    for i in 0..n {
        z[i] *= a.diag[i];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in a.offsets[i]..a.offsets[i + 1] {
            let j = a.cols[k];
            if j > i {
                s -= a.vals[k] * z[j];
            }
        }
        z[i] = s / a.diag[i];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precond {
    Jacobi,
    SymGaussSeidel,
}

#[derive(Debug, Clone, Copy)]
pub struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
}

/// Solves `A x = b` starting from `x`, stopping at `||r|| <= tol ||b||`.
pub fn pcg(a: &SymCsr, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize, pre: Precond) -> CgOutcome {
    let n = a.n;
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return CgOutcome { iterations: 0, rel_residual: 0.0 };
    }
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    let apply = |r: &[f64], z: &mut [f64]| match pre {
        Precond::Jacobi => {
            for i in 0..n {
                z[i] = r[i] / a.diag[i];
            }
        }
        Precond::SymGaussSeidel => sgs_apply(a, r, z),
    };
    apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = norm2(&r) / bnorm;
    let mut it = 0;
    while it < max_iter && rel > tol {
        a.mul(&p, &mut q);
        let pq = dot(&p, &q);
        if pq <= 0.0 {
            break;
        }
        let alpha = rz / pq;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        it += 1;
        rel = norm2(&r) / bnorm;
        if rel <= tol {
            break;
        }
        apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome { iterations: it, rel_residual: rel }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_shifted_path_laplacian() {
        let n = 50;
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        let w = vec![1.0; n - 1];
        let mut shift = vec![0.0; n];
        shift[0] = 1.0;
        let a = SymCsr::from_weighted_edges(n, &edges, &w, &shift);
        let xtrue: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let mut b = vec![0.0; n];
        a.mul(&xtrue, &mut b);
        for pre in [Precond::Jacobi, Precond::SymGaussSeidel] {
            let mut x = vec![0.0; n];
            let out = pcg(&a, &b, &mut x, 1e-13, 1000, pre);
            assert!(out.rel_residual <= 1e-13);
            for i in 0..n {
                assert!((x[i] - xtrue[i]).abs() < 1e-8);
            }
        }
    }
}

/// Sparse Cholesky solver that keeps its symbolic analysis between calls
/// with the same sparsity pattern.
#[derive(Default)]
pub struct Cholesky {
    symbolic: Option<(usize, usize, SymbolicLlt<usize>)>,
}

impl Cholesky {
    pub fn new() -> Self {
        Cholesky { symbolic: None }
    }

    /// Solves `a x = b`; `None` when the matrix is not numerically positive
    /// definite.
    pub fn solve(&mut self, a: &SymCsr, b: &[f64]) -> Option<Vec<f64>> {
        static SEQUENTIAL: Once = Once::new();
        SEQUENTIAL.call_once(|| faer::set_global_parallelism(Par::Seq));
        let n = a.n;
        let mut trip = Vec::with_capacity(n + a.cols.len() / 2);
        for i in 0..n {
            trip.push(Triplet::new(i, i, a.diag[i]));
            for (j, v) in a.row(i) {
                if j > i {
                    trip.push(Triplet::new(i, j, v));
                }
            }
        }
        let m = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip).ok()?;
        let key = (n, m.compute_nnz());
        let sym = match &self.symbolic {
            Some((kn, knz, s)) if (*kn, *knz) == key => s.clone(),
            _ => {
                let s = SymbolicLlt::try_new(m.symbolic(), Side::Upper).ok()?;
                self.symbolic = Some((key.0, key.1, s.clone()));
                s
            }
        };
        let llt = Llt::try_new_with_symbolic(sym, m.as_ref(), Side::Upper).ok()?;
        let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        llt.solve_in_place(x.as_mut());
        let x: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        x.iter().all(|v| v.is_finite()).then_some(x)
    }
}
