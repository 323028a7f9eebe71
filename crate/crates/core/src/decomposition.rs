//! Problem assembly and chordal decomposition.
//!
//! An [`SdpProblem`] holds vectorized data (c, A, b) over its aggregate
//! sparsity pattern. [`decompose`] chordal-extends the pattern, enumerates
//! maximal cliques, builds the entry selectors and the diagonal D (counting
//! how many cliques touch each coordinate), and prepares the KKT system
//!
//! ```text
//! [ D  Aᵀ ] [x]   [rhs₁]
//! [ A  0  ] [y] = [rhs₂]
//! ```
//!
//! solved by block elimination: the Schur complement S = A D⁻¹ Aᵀ is
//! factored once and cached — the coefficient matrix does not depend on the
//! penalty parameter, so one factorization serves an entire solver run.

use nalgebra::DMatrix;
use std::collections::HashMap;

use crate::graph::{
    chordal_extend, maximal_cliques, CliqueSet, GraphError, SparsityGraph,
};
use crate::kernel::{CliqueSelector, KernelError, PatternIndex, PatternVector};
use crate::ldl::{LdlError, LdlFactor};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DecompositionError {
    #[error("data matrix {name} is not symmetric at ({i}, {j})")]
    AsymmetricData { name: String, i: usize, j: usize },
    #[error("constraint matrix does not have full row rank")]
    RankDeficient,
    #[error("KKT system is not factored; call factor_kkt first")]
    NotFactored,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl From<LdlError> for DecompositionError {
    fn from(_: LdlError) -> Self {
        DecompositionError::RankDeficient
    }
}

/// Sparse constraint matrix: row `i` is svec(A_i) over a pattern.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ConstraintMatrix {
    pub fn new(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        Self { ncols, rows }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    /// `A x`
    pub fn mul(&self, x: &PatternVector) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `out += Aᵀ y`
    pub fn tr_mul_add(&self, y: &[f64], out: &mut PatternVector) {
        for (row, &yi) in self.rows.iter().zip(y) {
            for &(c, v) in row {
                out[c] += v * yi;
            }
        }
    }

    /// Remaps column indices through `map` (old coordinate -> new coordinate).
    fn remap(&self, map: &[usize], new_ncols: usize) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| (map[c], v)).collect())
            .collect();
        Self {
            ncols: new_ncols,
            rows,
        }
    }
}

/// Vectorized SDP data over the aggregate sparsity pattern.
///
/// The same data set serves the standard primal form (min ⟨c,x⟩ s.t. Ax = b,
/// X ⪰ 0) and the standard dual form (max ⟨b,y⟩ s.t. Aᵀy + svec(Z) = c,
/// Z ⪰ 0).
#[derive(Debug, Clone)]
pub struct SdpProblem {
    n: usize,
    graph: SparsityGraph,
    pattern: PatternIndex,
    c: PatternVector,
    a: ConstraintMatrix,
    b: Vec<f64>,
}

impl SdpProblem {
    /// Builds a problem from dense data matrices.
    ///
    /// Each matrix must be symmetric within 1e-12; the aggregate pattern is
    /// the union of the nonzero supports plus the diagonal.
    pub fn from_dense(
        c: &DMatrix<f64>,
        constraints: &[DMatrix<f64>],
        b: Vec<f64>,
    ) -> Result<Self, DecompositionError> {
        assert_eq!(constraints.len(), b.len(), "one b entry per constraint");
        let graph = aggregate_pattern(c, constraints)?;
        let pattern = PatternIndex::from_graph(&graph);
        let n = graph.n();
        let sym_triplets = |m: &DMatrix<f64>| -> Vec<(usize, usize, f64)> {
            let mut out = Vec::new();
            for j in 0..n {
                for i in 0..=j {
                    let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                    if v != 0.0 {
                        out.push((i, j, v));
                    }
                }
            }
            out
        };
        let c_vec = pattern.svec_from_triplets(&sym_triplets(c))?;
        let mut rows = Vec::with_capacity(constraints.len());
        for a_i in constraints {
            let row = pattern.svec_from_triplets(&sym_triplets(a_i))?;
            rows.push(sparsify(&row));
        }
        let nnz = pattern.nnz();
        Ok(Self {
            n,
            graph,
            pattern,
            c: c_vec,
            a: ConstraintMatrix::new(nnz, rows),
            b,
        })
    }

    /// Builds a problem from upper-triangular triplets, one list per matrix.
    ///
    /// Triplet indices are 0-based with `i ≤ j`; duplicates are summed.
    pub fn from_triplets(
        n: usize,
        c: &[(usize, usize, f64)],
        constraints: &[Vec<(usize, usize, f64)>],
        b: Vec<f64>,
    ) -> Result<Self, DecompositionError> {
        assert_eq!(constraints.len(), b.len(), "one b entry per constraint");
        let mut graph = SparsityGraph::new(n);
        let mark = |trips: &[(usize, usize, f64)], graph: &mut SparsityGraph| {
            for &(i, j, v) in trips {
                if v != 0.0 && i != j {
                    graph.add_edge(i, j);
                }
            }
        };
        mark(c, &mut graph);
        for a_i in constraints {
            mark(a_i, &mut graph);
        }
        let pattern = PatternIndex::from_graph(&graph);
        let c_vec = pattern.svec_from_triplets(c)?;
        let mut rows = Vec::with_capacity(constraints.len());
        for a_i in constraints {
            rows.push(sparsify(&pattern.svec_from_triplets(a_i)?));
        }
        let nnz = pattern.nnz();
        Ok(Self {
            n,
            graph,
            pattern,
            c: c_vec,
            a: ConstraintMatrix::new(nnz, rows),
            b,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn pattern_graph(&self) -> &SparsityGraph {
        &self.graph
    }

    pub fn pattern(&self) -> &PatternIndex {
        &self.pattern
    }

    pub fn c(&self) -> &PatternVector {
        &self.c
    }

    pub fn a(&self) -> &ConstraintMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }
}

fn sparsify(v: &PatternVector) -> Vec<(usize, f64)> {
    v.iter()
        .enumerate()
        .filter(|&(_, &x)| x != 0.0)
        .map(|(c, &x)| (c, x))
        .collect()
}

/// Aggregate sparsity pattern of the data matrices: `(i, j)` is an edge iff
/// the entry is nonzero in C or any A_i; self-loops are always present.
pub fn aggregate_pattern(
    c: &DMatrix<f64>,
    constraints: &[DMatrix<f64>],
) -> Result<SparsityGraph, DecompositionError> {
    let n = c.nrows();
    let check = |m: &DMatrix<f64>, name: String| -> Result<(), DecompositionError> {
        if m.nrows() != n || m.ncols() != n {
            return Err(DecompositionError::AsymmetricData { name, i: 0, j: 0 });
        }
        for j in 0..n {
            for i in 0..j {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 {
                    return Err(DecompositionError::AsymmetricData { name, i, j });
                }
            }
        }
        Ok(())
    };
    check(c, "C".to_string())?;
    for (k, a_i) in constraints.iter().enumerate() {
        check(a_i, format!("A_{}", k + 1))?;
    }
    let mut graph = SparsityGraph::new(n);
    let mark = |m: &DMatrix<f64>, graph: &mut SparsityGraph| {
        for j in 0..n {
            for i in 0..j {
                if 0.5 * (m[(i, j)] + m[(j, i)]) != 0.0 {
                    graph.add_edge(i, j);
                }
            }
        }
    };
    mark(c, &mut graph);
    for a_i in constraints {
        mark(a_i, &mut graph);
    }
    Ok(graph)
}

/// Right-hand side of the KKT system: a pattern-vector part and an m-vector
/// part.
#[derive(Debug, Clone)]
pub struct KktRhs {
    pub primal: PatternVector,
    pub dual: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KktSolution {
    pub x: PatternVector,
    pub y: Vec<f64>,
}

/// Clique statistics reported alongside results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CliqueStats {
    pub count: usize,
    pub max_size: usize,
    pub min_size: usize,
}

/// Clique-decomposed problem with selectors, the diagonal D, and the cached
/// KKT factorization.
///
/// Immutable once factored; [`DecomposedProblem::solve_kkt`] is read-only and
/// safe to call from multiple threads.
#[derive(Debug, Clone)]
pub struct DecomposedProblem {
    problem: SdpProblem,
    graph: SparsityGraph,
    pattern: PatternIndex,
    cliques: CliqueSet,
    selectors: Vec<CliqueSelector>,
    d: Vec<f64>,
    c: PatternVector,
    a: ConstraintMatrix,
    kkt: Option<LdlFactor>,
    factor_count: u64,
}

/// Chordal decomposition of `problem`.
///
/// Extends the aggregate pattern to a chordal graph, enumerates its maximal
/// cliques, and remaps the data onto the extended pattern (added coordinates
/// are cost-free and unconstrained). A dense pattern yields a single clique
/// with the identity selector and D = I, reproducing the undecomposed
/// problem.
pub fn decompose(problem: SdpProblem) -> Result<DecomposedProblem, DecompositionError> {
    let (ext_graph, ordering) = chordal_extend(problem.pattern_graph());
    let cliques = maximal_cliques(&ext_graph, &ordering)?;
    let pattern = PatternIndex::from_graph(&ext_graph);
    build_decomposition(problem, ext_graph, pattern, cliques)
}

/// Single-clique decomposition over the full dense pattern.
///
/// This is the undecomposed reference formulation: one clique covering all
/// vertices, H₁ = identity, D = identity.
pub fn decompose_dense(problem: SdpProblem) -> Result<DecomposedProblem, DecompositionError> {
    let n = problem.n();
    let graph = SparsityGraph::complete(n);
    let pattern = PatternIndex::full(n);
    let ordering = crate::graph::perfect_elimination_ordering(&graph).expect("complete graph");
    let cliques = maximal_cliques(&graph, &ordering)?;
    build_decomposition(problem, graph, pattern, cliques)
}

fn build_decomposition(
    problem: SdpProblem,
    graph: SparsityGraph,
    pattern: PatternIndex,
    cliques: CliqueSet,
) -> Result<DecomposedProblem, DecompositionError> {
    let mut selectors = Vec::with_capacity(cliques.p());
    for (k, clique) in cliques.iter().enumerate() {
        selectors.push(CliqueSelector::new(k, clique, &pattern)?);
    }

    let mut d = vec![0.0f64; pattern.nnz()];
    for sel in &selectors {
        for &g in sel.global_coordinates() {
            d[g] += 1.0;
        }
    }
    assert!(
        d.iter().all(|&v| v >= 1.0),
        "every pattern coordinate must belong to at least one clique"
    );

    // Remap the data from the aggregate pattern onto the extended pattern.
    let map: Vec<usize> = problem
        .pattern()
        .entries()
        .iter()
        .map(|&(i, j)| {
            pattern
                .coordinate(i, j)
                .expect("extension contains the aggregate pattern")
        })
        .collect();
    let mut c = PatternVector::zeros(pattern.nnz());
    for (old, &new) in map.iter().enumerate() {
        c[new] += problem.c()[old];
    }
    let a = problem.a().remap(&map, pattern.nnz());

    Ok(DecomposedProblem {
        problem,
        graph,
        pattern,
        cliques,
        selectors,
        d,
        c,
        a,
        kkt: None,
        factor_count: 0,
    })
}

impl DecomposedProblem {
    pub fn base(&self) -> &SdpProblem {
        &self.problem
    }

    pub fn n(&self) -> usize {
        self.problem.n()
    }

    pub fn m(&self) -> usize {
        self.problem.m()
    }

    pub fn p(&self) -> usize {
        self.cliques.p()
    }

    pub fn pattern(&self) -> &PatternIndex {
        &self.pattern
    }

    pub fn pattern_graph(&self) -> &SparsityGraph {
        &self.graph
    }

    pub fn cliques(&self) -> &CliqueSet {
        &self.cliques
    }

    pub fn selectors(&self) -> &[CliqueSelector] {
        &self.selectors
    }

    /// Diagonal of D: clique-cover multiplicity of each coordinate.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// Cost vector over the extended pattern.
    pub fn c(&self) -> &PatternVector {
        &self.c
    }

    /// Constraint matrix over the extended pattern.
    pub fn a(&self) -> &ConstraintMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        self.problem.b()
    }

    pub fn clique_stats(&self) -> CliqueStats {
        CliqueStats {
            count: self.cliques.p(),
            max_size: self.cliques.max_size(),
            min_size: self.cliques.min_size(),
        }
    }

    pub fn is_factored(&self) -> bool {
        self.kkt.is_some()
    }

    /// Number of times the KKT factorization has been computed.
    pub fn factor_count(&self) -> u64 {
        self.factor_count
    }

    /// Computes and caches the KKT factorization.
    ///
    /// Forms the Schur complement S = A D⁻¹ Aᵀ and factors it once. The
    /// coefficient matrix contains no penalty parameter, so the factors stay
    /// valid for a whole solver run even when ρ adapts.
    pub fn factor_kkt(&mut self) -> Result<(), DecompositionError> {
        let m = self.m();
        // Column buckets: which rows touch each coordinate.
        let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.pattern.nnz()];
        for (r, row) in self.a.rows().iter().enumerate() {
            for &(c, v) in row {
                buckets[c].push((r, v));
            }
        }
        // A dense upper-triangular accumulator beats hashing whenever it
        // fits; the hash map only pays off for very large, very sparse S.
        let upper = if m <= 2048 {
            let mut dense = vec![0.0f64; m * m];
            for (c, bucket) in buckets.iter().enumerate() {
                let w = 1.0 / self.d[c];
                for (s, &(r1, v1)) in bucket.iter().enumerate() {
                    let v1w = v1 * w;
                    for &(r2, v2) in &bucket[s..] {
                        let (a, b) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
                        dense[a * m + b] += v1w * v2;
                    }
                }
            }
            let mut upper = Vec::new();
            for j in 0..m {
                for i in 0..=j {
                    let v = dense[i * m + j];
                    if v != 0.0 {
                        upper.push((i, j, v));
                    }
                }
            }
            upper
        } else {
            let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
            for (c, bucket) in buckets.iter().enumerate() {
                let w = 1.0 / self.d[c];
                for (s, &(r1, v1)) in bucket.iter().enumerate() {
                    for &(r2, v2) in &bucket[s..] {
                        let key = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
                        *entries.entry(key).or_insert(0.0) += v1 * v2 * w;
                    }
                }
            }
            let mut upper: Vec<(usize, usize, f64)> = entries
                .into_iter()
                .map(|((i, j), v)| (i, j, v))
                .collect();
            upper.sort_by_key(|&(i, j, _)| (j, i));
            upper
        };
        self.kkt = Some(LdlFactor::new(m, &upper)?);
        self.factor_count += 1;
        Ok(())
    }

    /// Solves the KKT system by block elimination:
    /// `y = S⁻¹(A D⁻¹ rhs₁ − rhs₂)`, then `x = D⁻¹(rhs₁ − Aᵀ y)`.
    pub fn solve_kkt(&self, rhs: &KktRhs) -> Result<KktSolution, DecompositionError> {
        let kkt = self.kkt.as_ref().ok_or(DecompositionError::NotFactored)?;
        debug_assert_eq!(rhs.primal.len(), self.pattern.nnz());
        debug_assert_eq!(rhs.dual.len(), self.m());

        let mut t = rhs.primal.clone();
        for (v, &d) in t.as_mut_slice().iter_mut().zip(&self.d) {
            *v /= d;
        }
        let mut u = self.a.mul(&t);
        for (ui, &r) in u.iter_mut().zip(&rhs.dual) {
            *ui -= r;
        }
        let y = kkt.solve(&u);

        let mut x = rhs.primal.clone();
        let mut aty = PatternVector::zeros(x.len());
        self.a.tr_mul_add(&y, &mut aty);
        x.axpy(-1.0, &aty);
        for (v, &d) in x.as_mut_slice().iter_mut().zip(&self.d) {
            *v /= d;
        }
        Ok(KktSolution { x, y })
    }

    /// Relative residual of a KKT solution: both block equations against
    /// their right-hand sides.
    pub fn kkt_residual(&self, rhs: &KktRhs, sol: &KktSolution) -> f64 {
        let mut r1 = PatternVector::zeros(rhs.primal.len());
        for ((r, &x), (&d, &b)) in r1
            .as_mut_slice()
            .iter_mut()
            .zip(sol.x.iter())
            .zip(self.d.iter().zip(rhs.primal.iter()))
        {
            *r = d * x - b;
        }
        self.a.tr_mul_add(&sol.y, &mut r1);
        let ax = self.a.mul(&sol.x);
        let r2: f64 = ax
            .iter()
            .zip(&rhs.dual)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let num = (r1.dot(&r1) + r2).sqrt();
        let den = (rhs.primal.dot(&rhs.primal)
            + rhs.dual.iter().map(|v| v * v).sum::<f64>())
        .sqrt()
        .max(1.0);
        num / den
    }
}
