//! Chordal-decomposition ADMM solver for large sparse semidefinite programs.
//!
//! When the aggregate sparsity pattern of an SDP is chordal (or is extended
//! to a chordal pattern), the single large PSD cone splits into coupled
//! small cones, one per maximal clique. Both the primal and the dual
//! standard form then admit an ADMM iteration whose expensive pieces are a
//! linear solve with a cached factorization and a batch of independent
//! small-cone projections.
//!
//! Module map:
//! - [`graph`]: sparsity graphs, chordality testing, chordal extension,
//!   maximal cliques;
//! - [`kernel`]: scaled symmetric vectorization, clique selectors, PSD
//!   projection;
//! - [`decomposition`]: problem data, the decomposed form, and the cached
//!   KKT factorization;
//! - [`solver`]: the two ADMM algorithms, a dense reference oracle,
//!   residuals and stopping;
//! - [`io`]: SDPA sparse files, the block-arrow generator, result writers.
//!
//! # Example
//!
//! ```
//! use chordal_sdp::{decompose, solve_dual, SdpProblem, SolverConfig, SolverStatus};
//!
//! // min X11 + X22  s.t.  X11 + X22 = 1,  X PSD (diagonal 2x2 data).
//! let c = vec![(0, 0, 1.0), (1, 1, 1.0)];
//! let a1 = vec![(0, 0, 1.0), (1, 1, 1.0)];
//! let problem = SdpProblem::from_triplets(2, &c, &[a1], vec![1.0])?;
//!
//! let mut decomposed = decompose(problem)?;
//! decomposed.factor_kkt()?;
//! let result = solve_dual(&decomposed, &SolverConfig::default())?;
//!
//! assert_eq!(result.status, SolverStatus::Solved);
//! assert!((result.objective - 1.0).abs() < 1e-3);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod decomposition;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod ldl;
pub mod solver;

pub use decomposition::{
    aggregate_pattern, decompose, decompose_dense, CliqueStats, ConstraintMatrix,
    DecomposedProblem, DecompositionError, KktRhs, KktSolution, SdpProblem,
};
pub use graph::{
    chordal_extend, is_chordal, maximal_cliques, perfect_elimination_ordering, CliqueSet,
    EliminationOrdering, GraphError, SparsityGraph,
};
pub use io::{
    generate_block_arrow, generate_block_arrow_sdpa, parse_sdpa, write_result, write_trace_csv,
    BlockArrowSpec, ResultFormat, SdpaError, SdpaFile,
};
pub use kernel::{
    project_psd, smat_full, svec_full, CliqueSelector, DenseSym, KernelError, PatternIndex,
    PatternVector,
};
pub use solver::{
    adapt_rho, residuals_dual, residuals_primal, solve_dense_reference, solve_dual,
    solve_dual_with, solve_primal, solve_primal_with, DualState, PrimalState, ProgressRecord,
    Residuals, SolveCounters, SolverConfig, SolverError, SolverResult, SolverStatus, Timings,
};
