//! Sparse LDLᵀ factorization for symmetric positive definite systems.
//!
//! Symbolic analysis reuses the graph module's minimum-degree symbolic
//! elimination: the filled column patterns of the permuted matrix are known
//! before any numeric work, so the numeric phase is a straightforward
//! up-looking factorization. Intended for the Schur complement S = A D⁻¹ Aᵀ,
//! which is positive definite whenever A has full row rank.

use crate::graph::{min_degree_elimination, SparsityGraph};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LdlError {
    /// A pivot collapsed to zero (or went negative): the matrix is not
    /// positive definite, i.e. the constraint rows are linearly dependent.
    #[error("matrix is rank deficient (pivot {pivot} failed)")]
    RankDeficient { pivot: usize },
}

/// Cached LDLᵀ factors of a sparse SPD matrix under a fill-reducing
/// permutation.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    /// position -> original index
    perm: Vec<usize>,
    /// Unit-lower columns in permuted indices: `cols[j]` holds `(i, L[i,j])`
    /// with `i > j`, rows ascending.
    cols: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl LdlFactor {
    /// Factors the SPD matrix given by its upper-triangular entries
    /// `(i, j, value)` with `i ≤ j` (duplicates must be pre-merged).
    pub fn new(n: usize, upper: &[(usize, usize, f64)]) -> Result<Self, LdlError> {
        let mut graph = SparsityGraph::new(n);
        for &(i, j, _) in upper {
            if i != j {
                graph.add_edge(i, j);
            }
        }
        let sym = min_degree_elimination(&graph);
        let inv: Vec<usize> = {
            let mut inv = vec![0usize; n];
            for pos in 0..n {
                inv[sym.order.vertex_at(pos)] = pos;
            }
            inv
        };

        // Column patterns of L in permuted indices, and their transpose
        // (the structural row patterns needed by the up-looking sweep).
        let col_pattern: Vec<Vec<usize>> = sym
            .higher
            .iter()
            .map(|set| set.iter().map(|&v| inv[v]).collect())
            .collect();
        let mut row_pattern: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (j, rows) in col_pattern.iter().enumerate() {
            for &i in rows {
                row_pattern[i].push(j);
            }
        }

        // Permuted numeric input: strict upper part by column, plus diagonal.
        let mut scol: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut diag_in = vec![0.0f64; n];
        for &(i, j, v) in upper {
            let (pi, pj) = (inv[i], inv[j]);
            if pi == pj {
                diag_in[pi] += v;
            } else {
                let (a, b) = if pi < pj { (pi, pj) } else { (pj, pi) };
                scol[b].push((a, v));
            }
        }

        let scale = diag_in.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
        let pivot_tol = if scale > 0.0 { scale * 1e-13 } else { f64::MIN_POSITIVE };

        let mut cols: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|j| Vec::with_capacity(col_pattern[j].len()))
            .collect();
        let mut diag = vec![0.0f64; n];
        let mut work = vec![0.0f64; n];
        for k in 0..n {
            for &(i, v) in &scol[k] {
                work[i] += v;
            }
            let mut dk = diag_in[k];
            for &j in &row_pattern[k] {
                let yj = work[j];
                work[j] = 0.0;
                for &(i, lij) in &cols[j] {
                    work[i] -= lij * yj;
                }
                let lkj = yj / diag[j];
                dk -= lkj * yj;
                cols[j].push((k, lkj));
            }
            if !dk.is_finite() || dk <= pivot_tol {
                return Err(LdlError::RankDeficient { pivot: k });
            }
            diag[k] = dk;
        }

        Ok(Self {
            n,
            perm: sym.order.as_slice().to_vec(),
            cols,
            diag,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves `S x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut z: Vec<f64> = (0..self.n).map(|pos| b[self.perm[pos]]).collect();
        // L z' = b
        for j in 0..self.n {
            let zj = z[j];
            if zj != 0.0 {
                for &(i, lij) in &self.cols[j] {
                    z[i] -= lij * zj;
                }
            }
        }
        for (zj, dj) in z.iter_mut().zip(&self.diag) {
            *zj /= dj;
        }
        // Lᵀ x' = z
        for j in (0..self.n).rev() {
            let mut acc = z[j];
            for &(i, lij) in &self.cols[j] {
                acc -= lij * z[i];
            }
            z[j] = acc;
        }
        let mut x = vec![0.0; self.n];
        for pos in 0..self.n {
            x[self.perm[pos]] = z[pos];
        }
        x
    }
}
