//! Sparsity graphs, chordality, and maximal clique enumeration.
//!
//! A [`SparsityGraph`] encodes the aggregate sparsity pattern of a symmetric
//! matrix: vertices are row/column indices and every vertex carries an
//! implicit self-loop (diagonal entries are always structurally present).
//! Chordality is tested with maximum cardinality search followed by a
//! zero-fill check of the resulting ordering; non-chordal graphs are extended
//! by symbolic elimination under a greedy minimum-degree ordering.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    /// The supplied ordering is not a perfect elimination ordering for the graph.
    #[error("ordering is not a perfect elimination ordering: graph is not chordal under it")]
    NotChordal,
}

/// Undirected graph over vertices `0..n` with implicit self-loops.
///
/// Only off-diagonal adjacency is stored; `has_edge(v, v)` is always true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityGraph {
    n: usize,
    adj: Vec<BTreeSet<usize>>,
}

impl SparsityGraph {
    /// Empty graph (self-loops only) on `n` vertices.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            adj: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(n: usize, edges: I) -> Self {
        let mut g = Self::new(n);
        for (i, j) in edges {
            g.add_edge(i, j);
        }
        g
    }

    /// Complete graph on `n` vertices.
    pub fn complete(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.add_edge(i, j);
            }
        }
        g
    }

    /// Inserts the undirected edge `(i, j)`. Self-loops are implicit and ignored.
    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i < self.n && j < self.n, "vertex out of range");
        if i == j {
            return;
        }
        self.adj[i].insert(j);
        self.adj[j].insert(i);
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i == j || self.adj[i].contains(&j)
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[v].iter().copied()
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of off-diagonal undirected edges.
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|s| s.len()).sum::<usize>() / 2
    }

    /// Off-diagonal edges as pairs `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for i in 0..self.n {
            for &j in &self.adj[i] {
                if i < j {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// True if `g` contains every edge of `self`.
    pub fn is_subgraph_of(&self, g: &SparsityGraph) -> bool {
        self.n == g.n && self.edges().iter().all(|&(i, j)| g.has_edge(i, j))
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        for (a, &u) in vertices.iter().enumerate() {
            for &v in &vertices[a + 1..] {
                if !self.has_edge(u, v) {
                    return false;
                }
            }
        }
        true
    }

    /// Fraction of structurally present upper-triangular entries
    /// (diagonal included).
    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let nnz = (self.n + self.edge_count()) as f64;
        nnz / (self.n * (self.n + 1) / 2) as f64
    }
}

/// A bijection `position -> vertex` used as an elimination order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrdering {
    order: Vec<usize>,
    position: Vec<usize>,
}

impl EliminationOrdering {
    /// Builds an ordering from a `position -> vertex` permutation.
    ///
    /// Panics if `order` is not a permutation of `0..order.len()`.
    pub fn new(order: Vec<usize>) -> Self {
        let n = order.len();
        let mut position = vec![usize::MAX; n];
        for (pos, &v) in order.iter().enumerate() {
            assert!(v < n && position[v] == usize::MAX, "not a permutation");
            position[v] = pos;
        }
        Self { order, position }
    }

    pub fn identity(n: usize) -> Self {
        Self::new((0..n).collect())
    }

    pub fn vertex_at(&self, pos: usize) -> usize {
        self.order[pos]
    }

    pub fn position_of(&self, v: usize) -> usize {
        self.position[v]
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.order
    }
}

/// Ordered maximal cliques of a chordal graph.
///
/// Each clique is sorted ascending; the list is sorted lexicographically,
/// so cliques appear in order of their smallest vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueSet {
    cliques: Vec<Vec<usize>>,
}

impl CliqueSet {
    pub fn p(&self) -> usize {
        self.cliques.len()
    }

    pub fn clique(&self, k: usize) -> &[usize] {
        &self.cliques[k]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[usize]> {
        self.cliques.iter().map(|c| c.as_slice())
    }

    pub fn max_size(&self) -> usize {
        self.cliques.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    pub fn min_size(&self) -> usize {
        self.cliques.iter().map(|c| c.len()).min().unwrap_or(0)
    }
}

/// Fixed-width bitset used for elimination and subset tests.
#[derive(Clone, PartialEq, Eq)]
struct Bitset {
    words: Vec<u64>,
}

impl Bitset {
    fn new(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn clear(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn or_assign(&mut self, other: &Bitset) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    fn count_and(&self, other: &Bitset) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    fn is_subset_of(&self, other: &Bitset) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    fn ones(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&i| self.get(i)).collect()
    }
}

/// Maximum cardinality search.
///
/// Repeatedly assigns the highest remaining position to an unvisited vertex
/// with the most already-visited neighbors; ties go to the lowest vertex
/// index. For a chordal graph the result is a perfect elimination ordering.
pub fn maximum_cardinality_search(g: &SparsityGraph) -> EliminationOrdering {
    let n = g.n();
    let mut weight = vec![0usize; n];
    let mut visited = vec![false; n];
    let mut order = vec![0usize; n];
    for pos in (0..n).rev() {
        let v = (0..n)
            .filter(|&u| !visited[u])
            .max_by(|&a, &b| weight[a].cmp(&weight[b]).then(b.cmp(&a)))
            .expect("unvisited vertex exists");
        order[pos] = v;
        visited[v] = true;
        for u in g.neighbors(v) {
            if !visited[u] {
                weight[u] += 1;
            }
        }
    }
    EliminationOrdering::new(order)
}

/// Zero-fill check: is `ordering` a perfect elimination ordering of `g`?
///
/// For each vertex, its later neighbors minus the earliest of them must be
/// adjacent to that earliest one.
pub fn is_perfect_elimination_ordering(g: &SparsityGraph, ordering: &EliminationOrdering) -> bool {
    let n = g.n();
    assert_eq!(ordering.len(), n, "ordering size mismatch");
    for pos in 0..n {
        let v = ordering.vertex_at(pos);
        let later: Vec<usize> = g
            .neighbors(v)
            .filter(|&u| ordering.position_of(u) > pos)
            .collect();
        if let Some(&parent) = later.iter().min_by_key(|&&u| ordering.position_of(u)) {
            for &u in &later {
                if u != parent && !g.has_edge(parent, u) {
                    return false;
                }
            }
        }
    }
    true
}

/// Returns a perfect elimination ordering when `g` is chordal.
pub fn perfect_elimination_ordering(g: &SparsityGraph) -> Option<EliminationOrdering> {
    let ordering = maximum_cardinality_search(g);
    is_perfect_elimination_ordering(g, &ordering).then_some(ordering)
}

pub fn is_chordal(g: &SparsityGraph) -> bool {
    perfect_elimination_ordering(g).is_some()
}

/// Result of symbolic Gaussian elimination on a graph.
pub(crate) struct SymbolicElimination {
    pub order: EliminationOrdering,
    /// For each position `k`, the vertices adjacent to `order[k]` in the
    /// filled graph that are eliminated after it, sorted by position.
    pub higher: Vec<Vec<usize>>,
}

/// Symbolic elimination under a greedy minimum-degree ordering.
///
/// Degrees are recomputed on the partially eliminated (filled) graph; ties
/// are broken by lowest vertex index for determinism. The returned ordering
/// is a perfect elimination ordering of the filled graph.
pub(crate) fn min_degree_elimination(g: &SparsityGraph) -> SymbolicElimination {
    let n = g.n();
    let mut rows: Vec<Bitset> = (0..n)
        .map(|v| {
            let mut b = Bitset::new(n);
            for u in g.neighbors(v) {
                b.set(u);
            }
            b
        })
        .collect();
    let mut alive = Bitset::new(n);
    for v in 0..n {
        alive.set(v);
    }

    let mut order = Vec::with_capacity(n);
    let mut higher = Vec::with_capacity(n);
    let mut eliminated = vec![false; n];
    for _ in 0..n {
        let v = (0..n)
            .filter(|&u| !eliminated[u])
            .min_by_key(|&u| (rows[u].count_and(&alive), u))
            .expect("vertex remains");
        eliminated[v] = true;
        alive.clear(v);

        let mut reach = rows[v].clone();
        for (w, a) in reach.words.iter_mut().zip(&alive.words) {
            *w &= a;
        }
        let neigh = reach.ones(n);
        // Connect the remaining neighbors into a clique (fill edges).
        for &u in &neigh {
            rows[u].or_assign(&reach);
            rows[u].clear(u);
        }
        order.push(v);
        higher.push(neigh);
    }

    let order = EliminationOrdering::new(order);
    let mut higher_sorted = higher;
    for set in &mut higher_sorted {
        set.sort_by_key(|&u| order.position_of(u));
    }
    SymbolicElimination {
        order,
        higher: higher_sorted,
    }
}

/// Chordal extension.
///
/// Returns the input unchanged (with an MCS witness ordering) when it is
/// already chordal; otherwise adds the fill edges of a minimum-degree
/// symbolic elimination, which makes the returned ordering perfect for the
/// extended graph.
pub fn chordal_extend(g: &SparsityGraph) -> (SparsityGraph, EliminationOrdering) {
    if let Some(ordering) = perfect_elimination_ordering(g) {
        return (g.clone(), ordering);
    }
    let sym = min_degree_elimination(g);
    let mut ext = g.clone();
    for (pos, set) in sym.higher.iter().enumerate() {
        let v = sym.order.vertex_at(pos);
        for &u in set {
            ext.add_edge(v, u);
        }
    }
    debug_assert!(is_perfect_elimination_ordering(&ext, &sym.order));
    (ext, sym.order)
}

/// Maximal cliques of a chordal graph.
///
/// Candidates are `{v} ∪ {later neighbors of v}` for each vertex in the
/// elimination order, filtered for maximality.
pub fn maximal_cliques(
    g: &SparsityGraph,
    ordering: &EliminationOrdering,
) -> Result<CliqueSet, GraphError> {
    if !is_perfect_elimination_ordering(g, ordering) {
        return Err(GraphError::NotChordal);
    }
    let n = g.n();
    let mut candidates: Vec<Bitset> = Vec::with_capacity(n);
    for pos in 0..n {
        let v = ordering.vertex_at(pos);
        let mut b = Bitset::new(n);
        b.set(v);
        for u in g.neighbors(v) {
            if ordering.position_of(u) > pos {
                b.set(u);
            }
        }
        candidates.push(b);
    }
    // Distinct candidates: subset implies strict containment.
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates
            .iter()
            .enumerate()
            .any(|(j, other)| j != i && c.is_subset_of(other));
        if !dominated {
            cliques.push(c.ones(n));
        }
    }
    cliques.sort();
    Ok(CliqueSet { cliques })
}
