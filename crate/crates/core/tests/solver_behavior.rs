//! Solver-level behavior: oracle agreement, per-iterate invariants,
//! instrumentation, and the dual-block PSD reconstruction.

mod common;

use chordal_sdp::{
    decompose, generate_block_arrow, solve_dense_reference, solve_dual, solve_primal,
    BlockArrowSpec, DecomposedProblem, SolverConfig, SolverStatus,
};
use common::{assemble_from_blocks, random_feasible_instance, random_graph};
use rand::rngs::StdRng;
use rand::SeedableRng;

fn factored(spec: &BlockArrowSpec) -> DecomposedProblem {
    let mut dp = decompose(generate_block_arrow(spec)).unwrap();
    dp.factor_kkt().unwrap();
    dp
}

fn tight_cfg() -> SolverConfig {
    SolverConfig {
        eps_tol: 1e-5,
        max_iter: 50_000,
        adaptive_rho: true,
        ..Default::default()
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn block_arrow_objectives_agree_with_dense_oracle() {
    let spec = BlockArrowSpec {
        blocks: 4,
        block_size: 3,
        arrow_head: 2,
        constraints: 10,
        seed: 1234,
    };
    let dp = factored(&spec);
    let cfg = tight_cfg();
    let primal = solve_primal(&dp, &cfg).unwrap();
    let dual = solve_dual(&dp, &cfg).unwrap();
    let reference = solve_dense_reference(&generate_block_arrow(&spec), &cfg).unwrap();
    assert_eq!(primal.status, SolverStatus::Solved);
    assert_eq!(dual.status, SolverStatus::Solved);
    assert_eq!(reference.status, SolverStatus::Solved);
    assert!(rel_close(primal.objective, reference.objective, 1e-3));
    assert!(rel_close(dual.objective, reference.objective, 1e-3));
    assert!(rel_close(primal.objective, dual.objective, 1e-3));
}

#[test]
fn counters_show_one_kkt_solve_and_p_projections_per_iteration() {
    for seed in [1, 2, 3] {
        let spec = BlockArrowSpec {
            blocks: 3,
            block_size: 2,
            arrow_head: 2,
            constraints: 6,
            seed,
        };
        let dp = factored(&spec);
        let p = dp.p() as u64;
        let cfg = SolverConfig {
            eps_tol: 1e-4,
            max_iter: 10_000,
            ..Default::default()
        };
        for result in [solve_primal(&dp, &cfg).unwrap(), solve_dual(&dp, &cfg).unwrap()] {
            let iters = result.iterations as u64;
            assert_eq!(result.counters.kkt_solves, iters);
            assert_eq!(result.counters.projections, iters * p);
        }
    }
}

#[test]
fn every_iterate_satisfies_the_affine_constraint() {
    let spec = BlockArrowSpec {
        blocks: 3,
        block_size: 3,
        arrow_head: 1,
        constraints: 8,
        seed: 55,
    };
    let dp = factored(&spec);
    let cfg = SolverConfig {
        eps_tol: 1e-5,
        max_iter: 20_000,
        ..Default::default()
    };
    let primal = solve_primal(&dp, &cfg).unwrap();
    assert!(!primal.trace.is_empty());
    for record in &primal.trace {
        assert!(
            record.affine_residual <= 1e-8,
            "primal iterate {} violates Ax = b: {}",
            record.iter,
            record.affine_residual
        );
    }
    let dual = solve_dual(&dp, &cfg).unwrap();
    for record in &dual.trace {
        assert!(
            record.affine_residual <= 1e-8,
            "dual iterate {} violates the equality constraint: {}",
            record.iter,
            record.affine_residual
        );
    }
}

#[test]
fn projected_blocks_stay_numerically_psd() {
    let spec = BlockArrowSpec {
        blocks: 2,
        block_size: 3,
        arrow_head: 2,
        constraints: 5,
        seed: 8,
    };
    let dp = factored(&spec);
    let dual = solve_dual(&dp, &tight_cfg()).unwrap();
    for block in &dual.z_blocks {
        let scale = block.frobenius_norm().max(1.0);
        assert!(block.min_eigenvalue() >= -1e-8 * scale);
    }
}

#[test]
fn dual_blocks_assemble_to_a_psd_matrix() {
    for seed in [10, 20, 30] {
        let spec = BlockArrowSpec {
            blocks: 3,
            block_size: 2,
            arrow_head: 2,
            constraints: 7,
            seed,
        };
        let dp = factored(&spec);
        let dual = solve_dual(&dp, &tight_cfg()).unwrap();
        let z = assemble_from_blocks(dp.pattern(), dp.selectors(), &dual.z_blocks);
        let scale = z.frobenius_norm().max(1.0);
        assert!(
            z.min_eigenvalue() >= -1e-6 * scale,
            "assembled Z has eigenvalue {}",
            z.min_eigenvalue()
        );
    }
}

#[test]
fn strictly_feasible_instances_converge_within_budget() {
    let mut rng = StdRng::seed_from_u64(606);
    for trial in 0..6 {
        let n = 6 + trial * 2; // n ≤ 16 ≤ 20
        let g = random_graph(n, 0.35, &mut rng);
        let p = random_feasible_instance(&g, 4 + trial, &mut rng);
        let mut dp = decompose(p).unwrap();
        if dp.factor_kkt().is_err() {
            continue;
        }
        let cfg = SolverConfig {
            eps_tol: 1e-5,
            max_iter: 5000,
            adaptive_rho: true,
            ..Default::default()
        };
        let primal = solve_primal(&dp, &cfg).unwrap();
        assert_eq!(
            primal.status,
            SolverStatus::Solved,
            "primal stalled at eps ({}, {})",
            primal.eps_p,
            primal.eps_d
        );
        let dual = solve_dual(&dp, &cfg).unwrap();
        assert_eq!(dual.status, SolverStatus::Solved);
        assert!(primal.eps_p.max(primal.eps_d) < 1e-5);
        assert!(dual.eps_p.max(dual.eps_d) < 1e-5);
    }
}

#[test]
fn adaptation_reaches_the_same_objective() {
    let spec = BlockArrowSpec {
        blocks: 3,
        block_size: 2,
        arrow_head: 1,
        constraints: 6,
        seed: 99,
    };
    let dp = factored(&spec);
    let fixed = SolverConfig {
        eps_tol: 1e-6,
        max_iter: 50_000,
        adaptive_rho: false,
        ..Default::default()
    };
    let adaptive = SolverConfig {
        adaptive_rho: true,
        ..fixed.clone()
    };
    let a = solve_primal(&dp, &fixed).unwrap();
    let b = solve_primal(&dp, &adaptive).unwrap();
    assert!(rel_close(a.objective, b.objective, 1e-3));
}

#[test]
fn kkt_oracle_holds_at_the_dense_reference_solution() {
    // Stationarity, feasibility, cone membership, and complementarity of
    // the standard-form optimality conditions at the reference output.
    let mut rng = StdRng::seed_from_u64(3030);
    let g = chordal_sdp::SparsityGraph::complete(6);
    let p = random_feasible_instance(&g, 5, &mut rng);
    let cfg = SolverConfig {
        eps_tol: 1e-8,
        max_iter: 100_000,
        adaptive_rho: true,
        ..Default::default()
    };
    let result = solve_dense_reference(&p, &cfg).unwrap();
    assert_eq!(result.status, SolverStatus::Solved);
    let pattern = chordal_sdp::PatternIndex::full(p.n());

    // Primal feasibility: Ax = b and X ⪰ 0 (up to tolerance).
    let x_mat = pattern.smat(&result.x).unwrap();
    assert!(x_mat.min_eigenvalue() >= -1e-4 * x_mat.frobenius_norm().max(1.0));
    let ax = p.a().mul(&result.x);
    for (got, want) in ax.iter().zip(p.b()) {
        assert!((got - want).abs() <= 1e-6 * (1.0 + want.abs()));
    }

    // Dual feasibility: Z = C − A*(y) ⪰ 0 (up to tolerance).
    let mut z = p.c().clone();
    let mut aty = chordal_sdp::PatternVector::zeros(pattern.nnz());
    p.a().tr_mul_add(&result.y, &mut aty);
    z.axpy(-1.0, &aty);
    let z_mat = pattern.smat(&z).unwrap();
    assert!(z_mat.min_eigenvalue() >= -1e-4 * z_mat.frobenius_norm().max(1.0));

    // Complementarity: ⟨X, Z⟩ ≈ 0, i.e. the duality gap closes.
    let gap = (result.objective - result.y.iter().zip(p.b()).map(|(y, b)| y * b).sum::<f64>())
        .abs();
    assert!(gap <= 1e-4 * (1.0 + result.objective.abs()));
}

#[test]
fn max_iter_reached_returns_last_iterate() {
    let spec = BlockArrowSpec {
        blocks: 2,
        block_size: 2,
        arrow_head: 1,
        constraints: 4,
        seed: 7,
    };
    let dp = factored(&spec);
    let cfg = SolverConfig {
        eps_tol: 1e-12,
        max_iter: 5,
        ..Default::default()
    };
    let result = solve_primal(&dp, &cfg).unwrap();
    assert_eq!(result.status, SolverStatus::MaxIterReached);
    assert_eq!(result.iterations, 5);
    assert_eq!(result.trace.len(), 5);
    assert!(result.objective.is_finite());
}
