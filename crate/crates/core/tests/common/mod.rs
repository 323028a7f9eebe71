//! Shared brute-force oracles for the integration suites.
//!
//! Everything here is deliberately independent of the library's algorithmic
//! paths: chordality is checked by enumerating induced cycles, cliques by
//! subset enumeration, selectors and KKT systems by dense matrix assembly,
//! and PSD completability by alternating projections with a direct
//! eigendecomposition.

#![allow(dead_code)]

use chordal_sdp::{
    chordal_extend, CliqueSet, DenseSym, EliminationOrdering, PatternIndex, PatternVector,
    SdpProblem, SparsityGraph,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::rngs::StdRng;
use rand::Rng;

/// Chordality by definition: no induced cycle of length four or more.
///
/// A subset of vertices witnesses non-chordality iff its induced subgraph is
/// a cycle (every vertex of degree exactly two, connected); such a cycle is
/// chordless by construction. Exponential — for n ≤ 8 only.
pub fn is_chordal_bruteforce(g: &SparsityGraph) -> bool {
    let n = g.n();
    assert!(n <= 16, "oracle is exponential");
    'subset: for mask in 0u32..(1 << n) {
        let verts: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        if verts.len() < 4 {
            continue;
        }
        let mut degrees = Vec::with_capacity(verts.len());
        for &v in &verts {
            let d = verts.iter().filter(|&&u| u != v && g.has_edge(u, v)).count();
            if d != 2 {
                continue 'subset;
            }
            degrees.push(d);
        }
        // All degrees are two; connectivity decides cycle vs disjoint cycles.
        let mut seen = vec![false; verts.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(a) = stack.pop() {
            for (bi, &b) in verts.iter().enumerate() {
                if !seen[bi] && g.has_edge(verts[a], b) {
                    seen[bi] = true;
                    count += 1;
                    stack.push(bi);
                }
            }
        }
        if count == verts.len() {
            return false;
        }
    }
    true
}

/// All maximal cliques by subset enumeration, sorted like [`CliqueSet`].
pub fn maximal_cliques_bruteforce(g: &SparsityGraph) -> Vec<Vec<usize>> {
    let n = g.n();
    assert!(n <= 16, "oracle is exponential");
    let mut cliques: Vec<u32> = Vec::new();
    for mask in 1u32..(1 << n) {
        let verts: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
        if g.is_clique(&verts) {
            cliques.push(mask);
        }
    }
    let mut maximal: Vec<Vec<usize>> = cliques
        .iter()
        .filter(|&&c| !cliques.iter().any(|&other| other != c && c & other == c))
        .map(|&c| (0..n).filter(|&v| c >> v & 1 == 1).collect())
        .collect();
    maximal.sort();
    maximal
}

pub fn random_graph(n: usize, edge_prob: f64, rng: &mut StdRng) -> SparsityGraph {
    let mut g = SparsityGraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < edge_prob {
                g.add_edge(i, j);
            }
        }
    }
    g
}

pub fn random_chordal_graph(n: usize, edge_prob: f64, rng: &mut StdRng) -> SparsityGraph {
    let (ext, _) = chordal_extend(&random_graph(n, edge_prob, rng));
    ext
}

/// Dense 0/1 matrix of a clique selector over `nnz` global coordinates.
pub fn dense_selector(sel: &chordal_sdp::CliqueSelector, nnz: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(sel.local_len(), nnz);
    for (row, &col) in sel.global_coordinates().iter().enumerate() {
        h[(row, col)] = 1.0;
    }
    h
}

/// Solves the full KKT block system densely with LU.
pub fn dense_kkt_solve(
    d: &[f64],
    a_rows: &[Vec<(usize, f64)>],
    rhs1: &[f64],
    rhs2: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let nnz = d.len();
    let m = a_rows.len();
    let size = nnz + m;
    let mut kkt = DMatrix::<f64>::zeros(size, size);
    for (i, &di) in d.iter().enumerate() {
        kkt[(i, i)] = di;
    }
    for (r, row) in a_rows.iter().enumerate() {
        for &(c, v) in row {
            kkt[(nnz + r, c)] = v;
            kkt[(c, nnz + r)] = v;
        }
    }
    let mut rhs = DVector::<f64>::zeros(size);
    rhs.as_mut_slice()[..nnz].copy_from_slice(rhs1);
    rhs.as_mut_slice()[nnz..].copy_from_slice(rhs2);
    let sol = kkt.lu().solve(&rhs).expect("dense KKT system is regular");
    (
        sol.as_slice()[..nnz].to_vec(),
        sol.as_slice()[nnz..].to_vec(),
    )
}

/// Random strictly feasible instance on an arbitrary pattern graph.
///
/// X₀ = I gives b = A(X₀); C = A*(y₀) + Σ Eₖᵀ Wₖ Eₖ over the maximal
/// cliques of the chordal extension, with Wₖ positive definite — both forms
/// attain their common optimum.
pub fn random_feasible_instance(
    graph: &SparsityGraph,
    m: usize,
    rng: &mut StdRng,
) -> SdpProblem {
    let pattern = PatternIndex::from_graph(graph);
    let mut a = Vec::with_capacity(m);
    let mut b = Vec::with_capacity(m);
    for _ in 0..m {
        let mut trips = Vec::with_capacity(pattern.nnz());
        let mut trace = 0.0;
        for &(i, j) in pattern.entries() {
            let v: f64 = rng.gen_range(-1.0..=1.0);
            if i == j {
                trace += v;
            }
            trips.push((i, j, v));
        }
        a.push(trips);
        b.push(trace);
    }

    let (ext, ordering) = chordal_extend(graph);
    let cliques = chordal_sdp::maximal_cliques(&ext, &ordering).unwrap();
    let mut c_map: std::collections::HashMap<(usize, usize), f64> = Default::default();
    for clique in cliques.iter() {
        let d = clique.len();
        let g: Vec<Vec<f64>> = (0..d)
            .map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect())
            .collect();
        for x in 0..d {
            for y in x..d {
                let mut w: f64 = (0..d).map(|t| g[x][t] * g[y][t]).sum();
                if x == y {
                    w += 0.1;
                }
                *c_map.entry((clique[x], clique[y])).or_insert(0.0) += w;
            }
        }
    }
    for trips in &a {
        let y: f64 = rng.gen_range(-1.0..=1.0);
        for &(i, j, v) in trips {
            *c_map.entry((i, j)).or_insert(0.0) += y * v;
        }
    }
    let mut c: Vec<(usize, usize, f64)> = c_map.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    c.sort_by_key(|&(i, j, _)| (j, i));
    SdpProblem::from_triplets(graph.n(), &c, &a, b).unwrap()
}

fn project_psd_direct(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

/// Feasibility oracle for PSD completion: does the partial matrix `x`
/// (given on the pattern of `graph`) admit a PSD completion?
///
/// Runs Dykstra's alternating projections between the PSD cone and the
/// affine set of matrices matching `x` on the pattern. Returns the
/// completion when the iteration converges to the intersection.
pub fn psd_completion_oracle(
    graph: &SparsityGraph,
    x: &DenseSym,
    max_iter: usize,
    tol: f64,
) -> Option<DMatrix<f64>> {
    let n = graph.n();
    let fix = |m: &mut DMatrix<f64>| {
        for i in 0..n {
            for j in 0..n {
                if graph.has_edge(i, j) || i == j {
                    m[(i, j)] = x.get(i, j);
                }
            }
        }
    };
    let mut current = DMatrix::<f64>::zeros(n, n);
    fix(&mut current);
    let mut increment = DMatrix::<f64>::zeros(n, n);
    for _ in 0..max_iter {
        let projected = project_psd_direct(&(&current + &increment));
        increment = &current + &increment - &projected;
        current = projected.clone();
        fix(&mut current);
        let drift = (&current - &projected).norm();
        let scale = current.norm().max(1.0);
        if drift <= tol * scale {
            let eig = SymmetricEigen::new(current.clone());
            let min = eig.eigenvalues.min();
            if min >= -tol * scale {
                return Some(current);
            }
        }
    }
    None
}

/// Assembles Z = Σ Eₖᵀ Zₖ Eₖ from clique blocks over a pattern.
pub fn assemble_from_blocks(
    pattern: &PatternIndex,
    selectors: &[chordal_sdp::CliqueSelector],
    blocks: &[DenseSym],
) -> DenseSym {
    let mut acc = PatternVector::zeros(pattern.nnz());
    for (sel, block) in selectors.iter().zip(blocks) {
        sel.scatter_add(&chordal_sdp::svec_full(block), &mut acc);
    }
    pattern.smat(&acc).unwrap()
}

pub fn clique_sets_equal(set: &CliqueSet, expected: &[Vec<usize>]) -> bool {
    set.p() == expected.len() && set.iter().zip(expected).all(|(a, b)| a == b.as_slice())
}

pub fn peo_positions(ordering: &EliminationOrdering) -> Vec<usize> {
    ordering.as_slice().to_vec()
}
