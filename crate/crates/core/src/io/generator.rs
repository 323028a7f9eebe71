//! Random block-arrow SDP generator.
//!
//! Instances are strictly feasible by construction: X₀ = I fixes
//! b = A(X₀), and C = A*(y₀) + Z₀ with Z₀ a sum of clique-lifted positive
//! definite blocks, so both the primal and the dual problem attain their
//! (equal) optima. Identical spec and seed reproduce the instance exactly.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::collections::HashMap;

use crate::decomposition::SdpProblem;
use crate::graph::{maximal_cliques, perfect_elimination_ordering, SparsityGraph};
use crate::io::sdpa::{SdpaEntry, SdpaFile};
use crate::kernel::PatternIndex;

/// Parameters of the block-arrow family: `blocks` diagonal blocks of side
/// `block_size` coupled through an `arrow_head`-wide border, with
/// `constraints` random affine constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockArrowSpec {
    pub blocks: usize,
    pub block_size: usize,
    pub arrow_head: usize,
    pub constraints: usize,
    pub seed: u64,
}

impl BlockArrowSpec {
    pub fn n(&self) -> usize {
        self.blocks * self.block_size + self.arrow_head
    }

    fn assert_valid(&self) {
        assert!(
            self.blocks >= 1
                && self.block_size >= 1
                && self.arrow_head >= 1
                && self.constraints >= 1,
            "block-arrow parameters must all be at least 1"
        );
    }
}

/// The block-arrow sparsity graph: `l` diagonal d×d blocks plus `h`
/// arrow-head rows/columns coupled to every vertex. Chordal by construction.
pub fn block_arrow_graph(blocks: usize, block_size: usize, arrow_head: usize) -> SparsityGraph {
    let n = blocks * block_size + arrow_head;
    let mut g = SparsityGraph::new(n);
    for b in 0..blocks {
        let start = b * block_size;
        for i in start..start + block_size {
            for j in i + 1..start + block_size {
                g.add_edge(i, j);
            }
        }
    }
    for head in blocks * block_size..n {
        for v in 0..n {
            if v != head {
                g.add_edge(v, head);
            }
        }
    }
    g
}

struct RawInstance {
    n: usize,
    c: Vec<(usize, usize, f64)>,
    a: Vec<Vec<(usize, usize, f64)>>,
    b: Vec<f64>,
}

fn sample(spec: &BlockArrowSpec) -> RawInstance {
    spec.assert_valid();
    let n = spec.n();
    let graph = block_arrow_graph(spec.blocks, spec.block_size, spec.arrow_head);
    let pattern = PatternIndex::from_graph(&graph);
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let draw = |rng: &mut ChaCha20Rng| rng.gen_range(-1.0..=1.0);

    // Constraint matrices supported on the pattern, entries sampled i.i.d.
    // and symmetrized; b = A(I) plants X₀ = I as a strictly feasible point.
    let mut a = Vec::with_capacity(spec.constraints);
    let mut b = Vec::with_capacity(spec.constraints);
    for _ in 0..spec.constraints {
        let mut trips = Vec::with_capacity(pattern.nnz());
        let mut trace = 0.0;
        for &(i, j) in pattern.entries() {
            let v = if i == j {
                draw(&mut rng)
            } else {
                0.5 * (draw(&mut rng) + draw(&mut rng))
            };
            if i == j {
                trace += v;
            }
            trips.push((i, j, v));
        }
        a.push(trips);
        b.push(trace);
    }

    // Z₀ = Σ Eₖᵀ Wₖ Eₖ with Wₖ = Gₖ Gₖᵀ + 0.1·I positive definite.
    let ordering = perfect_elimination_ordering(&graph).expect("block-arrow graphs are chordal");
    let cliques = maximal_cliques(&graph, &ordering).expect("ordering is perfect");
    let mut c_acc: HashMap<(usize, usize), f64> = HashMap::new();
    for clique in cliques.iter() {
        let d = clique.len();
        let mut g = vec![vec![0.0f64; d]; d];
        for row in &mut g {
            for v in row.iter_mut() {
                *v = draw(&mut rng);
            }
        }
        for a_local in 0..d {
            for b_local in a_local..d {
                let mut w: f64 = (0..d).map(|t| g[a_local][t] * g[b_local][t]).sum();
                if a_local == b_local {
                    w += 0.1;
                }
                *c_acc
                    .entry((clique[a_local], clique[b_local]))
                    .or_insert(0.0) += w;
            }
        }
    }

    // C = A*(y₀) + Z₀ keeps the dual strictly feasible at (y₀, Z₀).
    let y0: Vec<f64> = (0..spec.constraints).map(|_| draw(&mut rng)).collect();
    for (trips, &y) in a.iter().zip(&y0) {
        for &(i, j, v) in trips {
            *c_acc.entry((i, j)).or_insert(0.0) += y * v;
        }
    }
    let mut c: Vec<(usize, usize, f64)> = c_acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    c.sort_by_key(|&(i, j, _)| (j, i));

    RawInstance { n, c, a, b }
}

/// Generates the strictly feasible random instance described by `spec`.
pub fn generate_block_arrow(spec: &BlockArrowSpec) -> SdpProblem {
    let raw = sample(spec);
    SdpProblem::from_triplets(raw.n, &raw.c, &raw.a, raw.b)
        .expect("generated data lies on the block-arrow pattern")
}

/// Same instance as [`generate_block_arrow`] in the SDPA container
/// (single PSD block, signs inverted per the format mapping).
pub fn generate_block_arrow_sdpa(spec: &BlockArrowSpec) -> SdpaFile {
    let raw = sample(spec);
    let mut entries = Vec::new();
    let mut push = |mat: usize, trips: &[(usize, usize, f64)]| {
        for &(i, j, v) in trips {
            if v != 0.0 {
                entries.push(SdpaEntry {
                    mat,
                    block: 1,
                    i: i + 1,
                    j: j + 1,
                    value: -v,
                });
            }
        }
    };
    push(0, &raw.c);
    for (t, trips) in raw.a.iter().enumerate() {
        push(t + 1, trips);
    }
    SdpaFile {
        num_constraints: raw.a.len(),
        block_sizes: vec![raw.n as i64],
        objective: raw.b.iter().map(|&v| -v).collect(),
        entries,
    }
}
