//! Scaled symmetric vectorization over a sparsity pattern, clique selectors,
//! and projection onto the PSD cone.
//!
//! Symmetric matrices are stored as coordinate vectors over the upper
//! triangle of a pattern, with off-diagonal entries scaled by √2 so that
//! matrix inner products equal coordinate dot products. Clique selectors are
//! 0/1 maps with orthonormal rows: gathering pulls the clique-local
//! coordinates out of a global vector, scattering is the adjoint.

use nalgebra::{DMatrix, SymmetricEigen};
use std::collections::HashMap;
use std::f64::consts::SQRT_2;

use crate::graph::SparsityGraph;
use thiserror::Error;

/// Relative eigenvalue threshold below which projected eigenvalues are
/// clipped to zero, avoiding spurious tiny negative output entries.
pub const PSD_PROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("matrix entry ({i}, {j}) = {value} lies outside the pattern")]
    PatternViolation { i: usize, j: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("eigendecomposition failed to converge")]
    EigenFailure,
}

/// Upper-triangular entries of a sparsity pattern in column-major order:
/// `(0,0), (0,1), (1,1), (0,2), ...` restricted to the pattern. All diagonal
/// entries are present (self-loops).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternIndex {
    n: usize,
    entries: Vec<(usize, usize)>,
    position: HashMap<(usize, usize), usize>,
}

impl PatternIndex {
    pub fn from_graph(g: &SparsityGraph) -> Self {
        let n = g.n();
        let mut entries = Vec::new();
        for j in 0..n {
            for i in 0..=j {
                if i == j || g.has_edge(i, j) {
                    entries.push((i, j));
                }
            }
        }
        Self::from_entries(n, entries)
    }

    /// Full upper triangle of an `n × n` matrix.
    pub fn full(n: usize) -> Self {
        let mut entries = Vec::with_capacity(n * (n + 1) / 2);
        for j in 0..n {
            for i in 0..=j {
                entries.push((i, j));
            }
        }
        Self::from_entries(n, entries)
    }

    fn from_entries(n: usize, entries: Vec<(usize, usize)>) -> Self {
        let position = entries
            .iter()
            .enumerate()
            .map(|(k, &e)| (e, k))
            .collect();
        Self {
            n,
            entries,
            position,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Coordinate of entry `(i, j)`; order of the indices is irrelevant.
    pub fn coordinate(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.position.get(&key).copied()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.coordinate(i, j).is_some()
    }

    /// Scaled symmetric vectorization of `m` over this pattern.
    ///
    /// Off-diagonal coordinates carry a factor √2, which preserves inner
    /// products: ⟨M, N⟩ = svec(M)·svec(N).
    pub fn svec(&self, m: &DenseSym) -> Result<PatternVector, KernelError> {
        if m.side() != self.n {
            return Err(KernelError::DimensionMismatch {
                expected: self.n,
                got: m.side(),
            });
        }
        for j in 0..self.n {
            for i in 0..=j {
                let value = m.get(i, j);
                if value != 0.0 && !self.contains(i, j) {
                    return Err(KernelError::PatternViolation { i, j, value });
                }
            }
        }
        let values = self
            .entries
            .iter()
            .map(|&(i, j)| {
                let v = m.get(i, j);
                if i == j {
                    v
                } else {
                    v * SQRT_2
                }
            })
            .collect();
        Ok(PatternVector::from_vec(values))
    }

    /// Inverse of [`Self::svec`].
    pub fn smat(&self, v: &PatternVector) -> Result<DenseSym, KernelError> {
        if v.len() != self.nnz() {
            return Err(KernelError::DimensionMismatch {
                expected: self.nnz(),
                got: v.len(),
            });
        }
        let mut m = DenseSym::zeros(self.n);
        for (&(i, j), &value) in self.entries.iter().zip(v.iter()) {
            if i == j {
                m.set(i, j, value);
            } else {
                m.set(i, j, value / SQRT_2);
            }
        }
        Ok(m)
    }

    /// Vectorizes sparse upper-triangular triplets `(i, j, value)` with
    /// `i ≤ j`, summing duplicates. Zero values are accepted anywhere; a
    /// nonzero outside the pattern is a violation.
    pub fn svec_from_triplets(
        &self,
        triplets: &[(usize, usize, f64)],
    ) -> Result<PatternVector, KernelError> {
        let mut out = PatternVector::zeros(self.nnz());
        for &(i, j, value) in triplets {
            match self.coordinate(i, j) {
                Some(c) => {
                    let scale = if i == j { 1.0 } else { SQRT_2 };
                    out.values[c] += value * scale;
                }
                None if value == 0.0 => {}
                None => return Err(KernelError::PatternViolation { i, j, value }),
            }
        }
        Ok(out)
    }
}

/// Coordinate vector over a [`PatternIndex`] (or over the full triangle of a
/// clique block), in the scaled symmetric convention.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternVector {
    values: Vec<f64>,
}

impl PatternVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            values: vec![0.0; len],
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn fill(&mut self, value: f64) {
        self.values.fill(value);
    }

    pub fn dot(&self, other: &PatternVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &PatternVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.values {
            *v *= alpha;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for PatternVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for PatternVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

/// Dense symmetric matrix; symmetry is maintained by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSym {
    m: DMatrix<f64>,
}

impl DenseSym {
    pub fn zeros(side: usize) -> Self {
        Self {
            m: DMatrix::zeros(side, side),
        }
    }

    pub fn identity(side: usize) -> Self {
        Self {
            m: DMatrix::identity(side, side),
        }
    }

    /// Symmetrizes an arbitrary square matrix as `(M + Mᵀ)/2`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let sym = (m + m.transpose()).scale(0.5);
        Self { m: sym }
    }

    pub fn side(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.m[(i, j)] = value;
        self.m[(j, i)] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.set(i, j, self.get(i, j) + value);
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// ⟨A, B⟩ = trace(AB) for symmetric matrices.
    pub fn inner(&self, other: &DenseSym) -> f64 {
        debug_assert_eq!(self.side(), other.side());
        self.m.iter().zip(other.m.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.side() == 0 {
            return 0.0;
        }
        SymmetricEigen::new(self.m.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|v| v.is_finite())
    }
}

/// Scaled symmetric vectorization over the full upper triangle.
pub fn svec_full(m: &DenseSym) -> PatternVector {
    let d = m.side();
    let mut values = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in 0..=j {
            let v = m.get(i, j);
            values.push(if i == j { v } else { v * SQRT_2 });
        }
    }
    PatternVector::from_vec(values)
}

/// Inverse of [`svec_full`]; the matrix side is recovered from the length.
pub fn smat_full(v: &PatternVector) -> DenseSym {
    let len = v.len();
    let d = ((((8 * len + 1) as f64).sqrt() as usize) - 1) / 2;
    assert_eq!(d * (d + 1) / 2, len, "not a triangular length");
    let mut m = DenseSym::zeros(d);
    let mut k = 0;
    for j in 0..d {
        for i in 0..=j {
            let value = v[k];
            k += 1;
            if i == j {
                m.set(i, j, value);
            } else {
                m.set(i, j, value / SQRT_2);
            }
        }
    }
    m
}

/// Entry-selector for one clique: a 0/1 map with orthonormal rows that pulls
/// the clique-local coordinates out of a global pattern vector.
///
/// Because the clique vertices are sorted and the √2 scaling matches between
/// global and local coordinates, the map is a pure index selection.
#[derive(Debug, Clone)]
pub struct CliqueSelector {
    clique_index: usize,
    block_dim: usize,
    global: Vec<usize>,
}

impl CliqueSelector {
    /// Builds the selector for `clique` (sorted ascending) over `index`.
    ///
    /// Every within-clique pair must be present in the pattern.
    pub fn new(
        clique_index: usize,
        clique: &[usize],
        index: &PatternIndex,
    ) -> Result<Self, KernelError> {
        debug_assert!(clique.windows(2).all(|w| w[0] < w[1]));
        let d = clique.len();
        let mut global = Vec::with_capacity(d * (d + 1) / 2);
        for b in 0..d {
            for a in 0..=b {
                let coord = index.coordinate(clique[a], clique[b]).ok_or(
                    KernelError::PatternViolation {
                        i: clique[a],
                        j: clique[b],
                        value: f64::NAN,
                    },
                )?;
                global.push(coord);
            }
        }
        Ok(Self {
            clique_index,
            block_dim: d,
            global,
        })
    }

    pub fn clique_index(&self) -> usize {
        self.clique_index
    }

    /// Side length of the clique block.
    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Length of the clique-local coordinate vector.
    pub fn local_len(&self) -> usize {
        self.global.len()
    }

    pub fn global_coordinates(&self) -> &[usize] {
        &self.global
    }

    /// Clique-local coordinates of `x`.
    pub fn gather(&self, x: &PatternVector) -> PatternVector {
        PatternVector::from_vec(self.global.iter().map(|&g| x[g]).collect())
    }

    pub fn gather_into(&self, x: &PatternVector, out: &mut PatternVector) {
        debug_assert_eq!(out.len(), self.local_len());
        for (o, &g) in out.as_mut_slice().iter_mut().zip(&self.global) {
            *o = x[g];
        }
    }

    /// `accum += Hᵀ · local` (adjoint of [`Self::gather`]).
    pub fn scatter_add(&self, local: &PatternVector, accum: &mut PatternVector) {
        debug_assert_eq!(local.len(), self.local_len());
        for (&g, &v) in self.global.iter().zip(local.iter()) {
            accum[g] += v;
        }
    }
}

/// Euclidean projection onto the PSD cone.
///
/// Eigendecomposes, clips eigenvalues below `tol · max|λ|` to zero, and
/// reassembles; the result is re-symmetrized exactly.
pub fn project_psd(m: &DenseSym, tol: f64) -> Result<DenseSym, KernelError> {
    if !m.is_finite() {
        return Err(KernelError::EigenFailure);
    }
    let d = m.side();
    if d == 0 {
        return Ok(m.clone());
    }
    let eig = SymmetricEigen::try_new(m.matrix().clone(), f64::EPSILON, 100 * d + 1000)
        .ok_or(KernelError::EigenFailure)?;
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let clip = tol * max_abs;
    let clipped = eig.eigenvalues.map(|l| if l < clip { 0.0 } else { l });
    let mut rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped);
    rebuilt *= eig.eigenvectors.transpose();
    Ok(DenseSym::from_matrix(&rebuilt))
}
