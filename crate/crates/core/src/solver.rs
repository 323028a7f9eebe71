//! ADMM solvers for the decomposed primal and dual standard forms.
//!
//! Both algorithms iterate three phases: one cached-factorization KKT solve
//! (affine step), p independent projections onto small PSD cones (one per
//! clique), and a multiplier scaling/ascent step. The two forms are scaled
//! versions of each other and have identical per-iteration leading-order
//! cost — the instrumented counters make this checkable.
//!
//! Per-iteration work on the primal form:
//!
//! ```text
//! (1)  [D Aᵀ; A 0][x; y] = [Σ Hₖᵀ(xₖ + ρ⁻¹λₖ) − ρ⁻¹c;  b]
//! (2)  xₖ = P_psd(Hₖx − ρ⁻¹λₖ)           for each clique k
//! (3)  λₖ += ρ(xₖ − Hₖx)
//! ```
//!
//! and on the dual form (projection first, multiplier update is a scaling):
//!
//! ```text
//! (1)  zₖ = P_psd(vₖ − ρ⁻¹λₖ)            for each clique k
//! (2)  [D Aᵀ; A 0][x; y] = [c − Σ Hₖᵀ(zₖ + ρ⁻¹λₖ);  −ρ⁻¹b]
//! (3)  vₖ = zₖ + ρ⁻¹λₖ + Hₖx
//! (4)  λₖ = −ρHₖx
//! ```

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::decomposition::{
    decompose_dense, CliqueStats, DecomposedProblem, DecompositionError, KktRhs, SdpProblem,
};
use crate::kernel::{
    project_psd, smat_full, svec_full, DenseSym, KernelError, PatternVector, PSD_PROJECTION_TOL,
};

/// Largest cone size accepted by the dense reference solver.
pub const DENSE_REFERENCE_MAX_N: usize = 200;

/// Environment variable capping the number of projection worker threads.
pub const THREADS_ENV_VAR: &str = "CHORDAL_SDP_THREADS";

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("decomposed problem is not factored; call factor_kkt first")]
    NotFactored,
    #[error("instance too large for the dense reference solver: n = {n} > {max}")]
    InstanceTooLarge { n: usize, max: usize },
    #[error("numerical breakdown at iteration {iter}: {message}")]
    Numerical { iter: usize, message: String },
    #[error(transparent)]
    Decomposition(#[from] DecompositionError),
}

/// Penalty, stopping, and parallelism knobs.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// ADMM penalty parameter ρ.
    pub rho: f64,
    /// Termination tolerance on max(ε_p, ε_d).
    pub eps_tol: f64,
    pub max_iter: usize,
    /// Residual-balancing ρ adaptation (off by default for reproducible
    /// fixed-ρ behavior).
    pub adaptive_rho: bool,
    /// Balancing threshold μ.
    pub rho_mu: f64,
    /// Balancing factor τ.
    pub rho_tau: f64,
    /// Apply the balancing rule every this many iterations; a period above 1
    /// keeps ρ from flapping between the two residuals.
    pub rho_period: usize,
    /// Run the p clique projections on a rayon pool, capped by
    /// `CHORDAL_SDP_THREADS`.
    pub parallel_projections: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            eps_tol: 1e-3,
            max_iter: 2000,
            adaptive_rho: false,
            rho_mu: 5.0,
            rho_tau: 2.0,
            rho_period: 10,
            parallel_projections: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: &str| Err(SolverError::InvalidConfig(msg.to_string()));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive and finite");
        }
        if self.eps_tol <= 0.0 || self.eps_tol.is_nan() {
            return bad("eps_tol must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1");
        }
        if self.rho_mu <= 1.0 || self.rho_mu.is_nan() {
            return bad("rho_mu must exceed 1");
        }
        if self.rho_tau <= 1.0 || self.rho_tau.is_nan() {
            return bad("rho_tau must exceed 1");
        }
        if self.rho_period == 0 {
            return bad("rho_period must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Solved,
    MaxIterReached,
    NumericalError,
}

/// Per-iteration progress record passed to callbacks and kept as the trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProgressRecord {
    pub iter: usize,
    pub eps_p: f64,
    pub eps_d: f64,
    pub objective: f64,
    pub rho: f64,
    /// Relative violation of the form's affine constraint at this iterate.
    pub affine_residual: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct SolveCounters {
    pub kkt_solves: u64,
    pub projections: u64,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct Timings {
    /// Parse/decompose/factor time, filled in by the orchestrating caller.
    pub setup_s: f64,
    pub solve_s: f64,
    pub kkt_s: f64,
    pub projection_s: f64,
}

/// Final iterate, diagnostics, and instrumentation of one solver run.
#[derive(Debug, Clone)]
pub struct SolverResult {
    /// ⟨c,x⟩ for the primal form, ⟨b,y⟩ for the dual form.
    pub objective: f64,
    pub status: SolverStatus,
    pub iterations: usize,
    pub eps_p: f64,
    pub eps_d: f64,
    pub affine_residual: f64,
    /// Primal estimate over the decomposition's pattern coordinates.
    pub x: PatternVector,
    /// Dual estimate for the affine constraints.
    pub y: Vec<f64>,
    /// Clique blocks of the dual PSD variable.
    pub z_blocks: Vec<DenseSym>,
    pub counters: SolveCounters,
    pub timings: Timings,
    pub clique_stats: CliqueStats,
    pub trace: Vec<ProgressRecord>,
}

/// Iterates of the primal-form algorithm.
#[derive(Debug, Clone)]
pub struct PrimalState {
    pub x: PatternVector,
    pub xk: Vec<PatternVector>,
    pub xk_prev: Vec<PatternVector>,
    pub lam: Vec<PatternVector>,
    pub iter: usize,
}

impl PrimalState {
    pub fn zeros(dp: &DecomposedProblem) -> Self {
        let locals: Vec<PatternVector> = dp
            .selectors()
            .iter()
            .map(|s| PatternVector::zeros(s.local_len()))
            .collect();
        Self {
            x: PatternVector::zeros(dp.pattern().nnz()),
            xk: locals.clone(),
            xk_prev: locals.clone(),
            lam: locals,
            iter: 0,
        }
    }

    fn check(&self, dp: &DecomposedProblem) -> Result<(), SolverError> {
        let ok = self.x.len() == dp.pattern().nnz()
            && [&self.xk, &self.xk_prev, &self.lam].iter().all(|vs| {
                vs.len() == dp.p()
                    && vs
                        .iter()
                        .zip(dp.selectors())
                        .all(|(v, s)| v.len() == s.local_len())
            });
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig(
                "initial state dimensions do not match the decomposition".into(),
            ))
        }
    }
}

/// Iterates of the dual-form algorithm. `x` is the (scaled) multiplier of
/// the KKT step; the primal matrix estimate is −ρx.
#[derive(Debug, Clone)]
pub struct DualState {
    pub y: Vec<f64>,
    pub x: PatternVector,
    pub zk: Vec<PatternVector>,
    pub zk_prev: Vec<PatternVector>,
    pub vk: Vec<PatternVector>,
    pub lam: Vec<PatternVector>,
    pub iter: usize,
}

impl DualState {
    pub fn zeros(dp: &DecomposedProblem) -> Self {
        let locals: Vec<PatternVector> = dp
            .selectors()
            .iter()
            .map(|s| PatternVector::zeros(s.local_len()))
            .collect();
        Self {
            y: vec![0.0; dp.m()],
            x: PatternVector::zeros(dp.pattern().nnz()),
            zk: locals.clone(),
            zk_prev: locals.clone(),
            vk: locals.clone(),
            lam: locals,
            iter: 0,
        }
    }

    fn check(&self, dp: &DecomposedProblem) -> Result<(), SolverError> {
        let ok = self.x.len() == dp.pattern().nnz()
            && self.y.len() == dp.m()
            && [&self.zk, &self.zk_prev, &self.vk, &self.lam].iter().all(|vs| {
                vs.len() == dp.p()
                    && vs
                        .iter()
                        .zip(dp.selectors())
                        .all(|(v, s)| v.len() == s.local_len())
            });
        if ok {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig(
                "initial state dimensions do not match the decomposition".into(),
            ))
        }
    }
}

/// Relative and absolute stopping residuals.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub eps_p: f64,
    pub eps_d: f64,
    pub eps_p_abs: f64,
    pub eps_d_abs: f64,
}

/// Primal-form residuals.
///
/// ε_p = ‖stack(xₖ − Hₖx)‖ / max(‖stack(xₖ)‖, ‖stack(Hₖx)‖, 1) and
/// ε_d = ρ‖Σ Hₖᵀ(xₖ − xₖ_prev)‖ / max(‖Σ Hₖᵀλₖ‖, 1).
pub fn residuals_primal(dp: &DecomposedProblem, state: &PrimalState, rho: f64) -> Residuals {
    let nnz = dp.pattern().nnz();
    let mut gap_sq = 0.0;
    let mut xk_sq = 0.0;
    let mut hx_sq = 0.0;
    let mut diff_acc = PatternVector::zeros(nnz);
    let mut lam_acc = PatternVector::zeros(nnz);
    for (k, sel) in dp.selectors().iter().enumerate() {
        let hx = sel.gather(&state.x);
        for (a, b) in state.xk[k].iter().zip(hx.iter()) {
            gap_sq += (a - b) * (a - b);
        }
        xk_sq += state.xk[k].dot(&state.xk[k]);
        hx_sq += hx.dot(&hx);
        let mut diff = state.xk[k].clone();
        diff.axpy(-1.0, &state.xk_prev[k]);
        sel.scatter_add(&diff, &mut diff_acc);
        sel.scatter_add(&state.lam[k], &mut lam_acc);
    }
    let eps_p_abs = gap_sq.sqrt();
    let eps_d_abs = rho * diff_acc.norm();
    Residuals {
        eps_p: eps_p_abs / xk_sq.sqrt().max(hx_sq.sqrt()).max(1.0),
        eps_d: eps_d_abs / lam_acc.norm().max(1.0),
        eps_p_abs,
        eps_d_abs,
    }
}

/// Dual-form residuals: the same formulas with (zₖ, vₖ) in place of
/// (xₖ, Hₖx).
pub fn residuals_dual(dp: &DecomposedProblem, state: &DualState, rho: f64) -> Residuals {
    let nnz = dp.pattern().nnz();
    let mut gap_sq = 0.0;
    let mut zk_sq = 0.0;
    let mut vk_sq = 0.0;
    let mut diff_acc = PatternVector::zeros(nnz);
    let mut lam_acc = PatternVector::zeros(nnz);
    for (k, sel) in dp.selectors().iter().enumerate() {
        for (a, b) in state.zk[k].iter().zip(state.vk[k].iter()) {
            gap_sq += (a - b) * (a - b);
        }
        zk_sq += state.zk[k].dot(&state.zk[k]);
        vk_sq += state.vk[k].dot(&state.vk[k]);
        let mut diff = state.zk[k].clone();
        diff.axpy(-1.0, &state.zk_prev[k]);
        sel.scatter_add(&diff, &mut diff_acc);
        sel.scatter_add(&state.lam[k], &mut lam_acc);
    }
    let eps_p_abs = gap_sq.sqrt();
    let eps_d_abs = rho * diff_acc.norm();
    Residuals {
        eps_p: eps_p_abs / zk_sq.sqrt().max(vk_sq.sqrt()).max(1.0),
        eps_d: eps_d_abs / lam_acc.norm().max(1.0),
        eps_p_abs,
        eps_d_abs,
    }
}

/// Residual-balancing update of ρ.
///
/// Doubles (by τ) when the primal residual dominates by more than μ, shrinks
/// when the dual residual dominates. Multipliers are stored unscaled, so no
/// rescaling is required. ρ is clamped to [1e-8, 1e8]. The cached KKT
/// factorization stays valid: only right-hand sides contain ρ.
pub fn adapt_rho(rho: f64, eps_p_abs: f64, eps_d_abs: f64, cfg: &SolverConfig) -> f64 {
    let next = if eps_p_abs > cfg.rho_mu * eps_d_abs {
        rho * cfg.rho_tau
    } else if eps_d_abs > cfg.rho_mu * eps_p_abs {
        rho / cfg.rho_tau
    } else {
        rho
    };
    next.clamp(1e-8, 1e8)
}

fn projection_pool(cfg: &SolverConfig) -> Result<Option<rayon::ThreadPool>, SolverError> {
    if !cfg.parallel_projections {
        return Ok(None);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV_VAR) {
        let threads: usize = value.parse().map_err(|_| {
            SolverError::InvalidConfig(format!("{THREADS_ENV_VAR} must be a positive integer"))
        })?;
        if threads == 0 {
            return Err(SolverError::InvalidConfig(format!(
                "{THREADS_ENV_VAR} must be a positive integer"
            )));
        }
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map(Some)
        .map_err(|e| SolverError::InvalidConfig(format!("projection thread pool: {e}")))
}

fn project_block(input: &PatternVector) -> Result<PatternVector, KernelError> {
    let projected = project_psd(&smat_full(input), PSD_PROJECTION_TOL)?;
    Ok(svec_full(&projected))
}

/// Projects every clique block, in parallel when a pool is given. The blocks
/// are independent, so the result does not depend on the schedule.
fn project_blocks(
    inputs: &[PatternVector],
    outputs: &mut [PatternVector],
    pool: Option<&rayon::ThreadPool>,
    iter: usize,
) -> Result<(), SolverError> {
    let projected: Result<Vec<PatternVector>, KernelError> = match pool {
        Some(pool) => pool.install(|| {
            use rayon::prelude::*;
            inputs.par_iter().map(project_block).collect()
        }),
        None => inputs.iter().map(project_block).collect(),
    };
    match projected {
        Ok(blocks) => {
            for (out, block) in outputs.iter_mut().zip(blocks) {
                *out = block;
            }
            Ok(())
        }
        Err(e) => Err(SolverError::Numerical {
            iter,
            message: e.to_string(),
        }),
    }
}

fn norm(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Solves the decomposed primal form; see the module docs for the iteration.
pub fn solve_primal(
    dp: &DecomposedProblem,
    cfg: &SolverConfig,
) -> Result<SolverResult, SolverError> {
    solve_primal_with(dp, cfg, None, |_| {})
}

/// [`solve_primal`] with an initial state and a per-iteration callback.
pub fn solve_primal_with<F>(
    dp: &DecomposedProblem,
    cfg: &SolverConfig,
    init: Option<PrimalState>,
    mut on_iter: F,
) -> Result<SolverResult, SolverError>
where
    F: FnMut(&ProgressRecord),
{
    cfg.validate()?;
    if !dp.is_factored() {
        return Err(SolverError::NotFactored);
    }
    let start = Instant::now();
    let p = dp.p();
    let nnz = dp.pattern().nnz();
    let pool = projection_pool(cfg)?;

    let mut state = init.unwrap_or_else(|| PrimalState::zeros(dp));
    state.check(dp)?;
    let mut rho = cfg.rho;
    let b_scale = norm(dp.b()).max(1.0);

    let mut timings = Timings::default();
    let mut counters = SolveCounters::default();
    let mut trace: Vec<ProgressRecord> = Vec::new();
    let mut status = SolverStatus::MaxIterReached;
    let mut last = Residuals {
        eps_p: f64::INFINITY,
        eps_d: f64::INFINITY,
        eps_p_abs: f64::INFINITY,
        eps_d_abs: f64::INFINITY,
    };
    let mut objective = f64::NAN;
    let mut affine = f64::NAN;
    let mut y_kkt: Vec<f64> = vec![0.0; dp.m()];
    let mut rho_at_solve = rho;
    let mut hx: Vec<PatternVector> = dp
        .selectors()
        .iter()
        .map(|s| PatternVector::zeros(s.local_len()))
        .collect();

    for iter in 1..=cfg.max_iter {
        state.iter = iter;
        let rho_inv = 1.0 / rho;

        // (1) Affine step: rhs = (Σ Hₖᵀ(xₖ + ρ⁻¹λₖ) − ρ⁻¹c, b).
        let t = Instant::now();
        let mut rhs1 = PatternVector::zeros(nnz);
        for (k, sel) in dp.selectors().iter().enumerate() {
            let mut local = state.xk[k].clone();
            local.axpy(rho_inv, &state.lam[k]);
            sel.scatter_add(&local, &mut rhs1);
        }
        rhs1.axpy(-rho_inv, dp.c());
        let rhs = KktRhs {
            primal: rhs1,
            dual: dp.b().to_vec(),
        };
        let sol = dp.solve_kkt(&rhs)?;
        state.x = sol.x;
        y_kkt = sol.y;
        rho_at_solve = rho;
        counters.kkt_solves += 1;
        timings.kkt_s += t.elapsed().as_secs_f64();

        // (2) Clique projections: xₖ = P(Hₖx − ρ⁻¹λₖ).
        let t = Instant::now();
        std::mem::swap(&mut state.xk, &mut state.xk_prev);
        let inputs: Vec<PatternVector> = dp
            .selectors()
            .iter()
            .enumerate()
            .map(|(k, sel)| {
                sel.gather_into(&state.x, &mut hx[k]);
                let mut input = hx[k].clone();
                input.axpy(-rho_inv, &state.lam[k]);
                input
            })
            .collect();
        project_blocks(&inputs, &mut state.xk, pool.as_ref(), iter)?;
        counters.projections += p as u64;
        timings.projection_s += t.elapsed().as_secs_f64();

        // (3) Multiplier ascent: λₖ += ρ(xₖ − Hₖx).
        for ((lam, xk), h) in state.lam.iter_mut().zip(&state.xk).zip(&hx) {
            for ((l, &x_local), &h_local) in
                lam.as_mut_slice().iter_mut().zip(xk.iter()).zip(h.iter())
            {
                *l += rho * (x_local - h_local);
            }
        }

        // (4) Residuals and bookkeeping.
        last = residuals_primal(dp, &state, rho);
        objective = dp.c().dot(&state.x);
        let ax = dp.a().mul(&state.x);
        let ax_gap: f64 = ax
            .iter()
            .zip(dp.b())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        affine = ax_gap / b_scale;

        if !(objective.is_finite() && last.eps_p.is_finite() && last.eps_d.is_finite()) {
            return Err(SolverError::Numerical {
                iter,
                message: "iterates are no longer finite".into(),
            });
        }

        let record = ProgressRecord {
            iter,
            eps_p: last.eps_p,
            eps_d: last.eps_d,
            objective,
            rho,
            affine_residual: affine,
        };
        trace.push(record);
        on_iter(&record);

        if last.eps_p.max(last.eps_d) < cfg.eps_tol {
            status = SolverStatus::Solved;
            break;
        }
        if cfg.adaptive_rho && iter % cfg.rho_period == 0 {
            rho = adapt_rho(rho, last.eps_p_abs, last.eps_d_abs, cfg);
        }
    }

    timings.solve_s = start.elapsed().as_secs_f64();
    let z_blocks = state.lam.iter().map(smat_full).collect();
    let y = y_kkt.iter().map(|&v| -rho_at_solve * v).collect();
    Ok(SolverResult {
        objective,
        status,
        iterations: state.iter,
        eps_p: last.eps_p,
        eps_d: last.eps_d,
        affine_residual: affine,
        x: state.x,
        y,
        z_blocks,
        counters,
        timings,
        clique_stats: dp.clique_stats(),
        trace,
    })
}

/// Solves the decomposed dual form; see the module docs for the iteration.
pub fn solve_dual(dp: &DecomposedProblem, cfg: &SolverConfig) -> Result<SolverResult, SolverError> {
    solve_dual_with(dp, cfg, None, |_| {})
}

/// [`solve_dual`] with an initial state and a per-iteration callback.
pub fn solve_dual_with<F>(
    dp: &DecomposedProblem,
    cfg: &SolverConfig,
    init: Option<DualState>,
    mut on_iter: F,
) -> Result<SolverResult, SolverError>
where
    F: FnMut(&ProgressRecord),
{
    cfg.validate()?;
    if !dp.is_factored() {
        return Err(SolverError::NotFactored);
    }
    let start = Instant::now();
    let p = dp.p();
    let nnz = dp.pattern().nnz();
    let pool = projection_pool(cfg)?;

    let mut state = init.unwrap_or_else(|| DualState::zeros(dp));
    state.check(dp)?;
    let mut rho = cfg.rho;
    let c_scale = dp.c().norm().max(1.0);

    let mut timings = Timings::default();
    let mut counters = SolveCounters::default();
    let mut trace: Vec<ProgressRecord> = Vec::new();
    let mut status = SolverStatus::MaxIterReached;
    let mut last = Residuals {
        eps_p: f64::INFINITY,
        eps_d: f64::INFINITY,
        eps_p_abs: f64::INFINITY,
        eps_d_abs: f64::INFINITY,
    };
    let mut objective = f64::NAN;
    let mut affine = f64::NAN;
    let mut rho_at_solve = rho;

    for iter in 1..=cfg.max_iter {
        state.iter = iter;
        let rho_inv = 1.0 / rho;

        // (1) Clique projections: zₖ = P(vₖ − ρ⁻¹λₖ).
        let t = Instant::now();
        std::mem::swap(&mut state.zk, &mut state.zk_prev);
        let inputs: Vec<PatternVector> = (0..p)
            .map(|k| {
                let mut input = state.vk[k].clone();
                input.axpy(-rho_inv, &state.lam[k]);
                input
            })
            .collect();
        project_blocks(&inputs, &mut state.zk, pool.as_ref(), iter)?;
        counters.projections += p as u64;
        timings.projection_s += t.elapsed().as_secs_f64();

        // (2) Affine step: rhs = (c − Σ Hₖᵀ(zₖ + ρ⁻¹λₖ), −ρ⁻¹b).
        let t = Instant::now();
        let mut rhs1 = dp.c().clone();
        for (k, sel) in dp.selectors().iter().enumerate() {
            let mut local = state.zk[k].clone();
            local.axpy(rho_inv, &state.lam[k]);
            let mut neg = PatternVector::zeros(nnz);
            sel.scatter_add(&local, &mut neg);
            rhs1.axpy(-1.0, &neg);
        }
        let rhs = KktRhs {
            primal: rhs1,
            dual: dp.b().iter().map(|&v| -rho_inv * v).collect(),
        };
        let sol = dp.solve_kkt(&rhs)?;
        state.x = sol.x;
        state.y = sol.y;
        rho_at_solve = rho;
        counters.kkt_solves += 1;
        timings.kkt_s += t.elapsed().as_secs_f64();

        // (3) vₖ = zₖ + ρ⁻¹λₖ + Hₖx, then (4) the multiplier becomes the
        // free scaling λₖ = −ρHₖx (v must read the old λ first).
        for (k, sel) in dp.selectors().iter().enumerate() {
            let hx = sel.gather(&state.x);
            let mut v = state.zk[k].clone();
            v.axpy(rho_inv, &state.lam[k]);
            v.axpy(1.0, &hx);
            state.vk[k] = v;
            state.lam[k] = {
                let mut l = hx;
                l.scale(-rho);
                l
            };
        }

        // (5) Residuals and bookkeeping.
        last = residuals_dual(dp, &state, rho);
        objective = state.y.iter().zip(dp.b()).map(|(y, b)| y * b).sum();
        let mut eq = dp.c().clone();
        let mut aty = PatternVector::zeros(nnz);
        dp.a().tr_mul_add(&state.y, &mut aty);
        eq.axpy(-1.0, &aty);
        for (k, sel) in dp.selectors().iter().enumerate() {
            let mut scattered = PatternVector::zeros(nnz);
            sel.scatter_add(&state.vk[k], &mut scattered);
            eq.axpy(-1.0, &scattered);
        }
        affine = eq.norm() / c_scale;

        if !(objective.is_finite() && last.eps_p.is_finite() && last.eps_d.is_finite()) {
            return Err(SolverError::Numerical {
                iter,
                message: "iterates are no longer finite".into(),
            });
        }

        let record = ProgressRecord {
            iter,
            eps_p: last.eps_p,
            eps_d: last.eps_d,
            objective,
            rho,
            affine_residual: affine,
        };
        trace.push(record);
        on_iter(&record);

        if last.eps_p.max(last.eps_d) < cfg.eps_tol {
            status = SolverStatus::Solved;
            break;
        }
        if cfg.adaptive_rho && iter % cfg.rho_period == 0 {
            rho = adapt_rho(rho, last.eps_p_abs, last.eps_d_abs, cfg);
        }
    }

    timings.solve_s = start.elapsed().as_secs_f64();
    let z_blocks = state.zk.iter().map(smat_full).collect();
    let mut x = state.x;
    x.scale(-rho_at_solve);
    Ok(SolverResult {
        objective,
        status,
        iterations: state.iter,
        eps_p: last.eps_p,
        eps_d: last.eps_d,
        affine_residual: affine,
        x,
        y: state.y,
        z_blocks,
        counters,
        timings,
        clique_stats: dp.clique_stats(),
        trace,
    })
}

/// ADMM on the undecomposed cone: the primal algorithm run on the
/// single-clique dense decomposition. Serves as the ground-truth oracle for
/// the decomposed solvers on small instances.
pub fn solve_dense_reference(
    problem: &SdpProblem,
    cfg: &SolverConfig,
) -> Result<SolverResult, SolverError> {
    if problem.n() > DENSE_REFERENCE_MAX_N {
        return Err(SolverError::InstanceTooLarge {
            n: problem.n(),
            max: DENSE_REFERENCE_MAX_N,
        });
    }
    let mut dp = decompose_dense(problem.clone())?;
    dp.factor_kkt()?;
    solve_primal(&dp, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::decompose;

    fn scalar_problem() -> SdpProblem {
        // min X₁₁ s.t. X₁₁ = 2, X ⪰ 0; the dual reads max 2y s.t. y + z = 1.
        SdpProblem::from_triplets(1, &[(0, 0, 1.0)], &[vec![(0, 0, 1.0)]], vec![2.0]).unwrap()
    }

    fn solve_both(problem: SdpProblem, cfg: &SolverConfig) -> (SolverResult, SolverResult) {
        let mut dp = decompose(problem).unwrap();
        dp.factor_kkt().unwrap();
        (
            solve_primal(&dp, cfg).unwrap(),
            solve_dual(&dp, cfg).unwrap(),
        )
    }

    #[test]
    fn scalar_primal_reaches_feasible_point() {
        let cfg = SolverConfig {
            eps_tol: 1e-9,
            ..Default::default()
        };
        let (primal, dual) = solve_both(scalar_problem(), &cfg);
        assert_eq!(primal.status, SolverStatus::Solved);
        assert!((primal.objective - 2.0).abs() < 1e-6);
        assert!((primal.x[0] - 2.0).abs() < 1e-6);
        assert_eq!(dual.status, SolverStatus::Solved);
        assert!((dual.objective - 2.0).abs() < 1e-6);
        assert!((dual.y[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scalar_dual_recovers_primal_variable() {
        let cfg = SolverConfig {
            eps_tol: 1e-10,
            ..Default::default()
        };
        let (_, dual) = solve_both(scalar_problem(), &cfg);
        assert!((dual.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn diagonal_sdp_objective_equals_budget() {
        // min X₁₁ + X₂₂ s.t. X₁₁ + X₂₂ = 1, X ⪰ 0.
        let c = vec![(0, 0, 1.0), (1, 1, 1.0)];
        let a1 = vec![(0, 0, 1.0), (1, 1, 1.0)];
        let p = SdpProblem::from_triplets(2, &c, &[a1], vec![1.0]).unwrap();
        let cfg = SolverConfig {
            eps_tol: 1e-8,
            ..Default::default()
        };
        let (primal, dual) = solve_both(p, &cfg);
        assert!((primal.objective - 1.0).abs() < 1e-6);
        assert!((dual.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn scalar_first_iteration_residuals_match_hand_simulation() {
        // From zero init on the scalar problem: the KKT row Ax = b pins
        // x = 2, the projection of 2 is 2, so ε_p = 0 while
        // ε_d = ρ·|x₁ − 0| / max(|λ|, 1) = 2ρ; the second iteration is
        // stationary and both residuals vanish.
        let mut dp = decompose(scalar_problem()).unwrap();
        dp.factor_kkt().unwrap();
        let cfg = SolverConfig::default();
        let result = solve_primal(&dp, &cfg).unwrap();
        let first = result.trace[0];
        assert_eq!(first.eps_p, 0.0);
        assert!((first.eps_d - 2.0 * cfg.rho).abs() < 1e-12);
        let second = result.trace[1];
        assert_eq!(second.eps_p, 0.0);
        assert_eq!(second.eps_d, 0.0);
        assert_eq!(result.iterations, 2);
    }

    #[test]
    fn residuals_are_zero_at_exact_consensus() {
        let mut dp = decompose(scalar_problem()).unwrap();
        dp.factor_kkt().unwrap();
        let mut state = PrimalState::zeros(&dp);
        state.x[0] = 2.0;
        state.xk[0][0] = 2.0;
        state.xk_prev[0][0] = 2.0;
        let r = residuals_primal(&dp, &state, 1.0);
        assert_eq!(r.eps_p, 0.0);
        assert_eq!(r.eps_d, 0.0);
    }

    #[test]
    fn adapt_rho_follows_balancing_rule() {
        let cfg = SolverConfig {
            rho_mu: 10.0,
            rho_tau: 2.0,
            ..Default::default()
        };
        assert_eq!(adapt_rho(1.0, 1.0, 1.0, &cfg), 1.0);
        // Primal residual 100x the dual one doubles rho.
        assert_eq!(adapt_rho(1.0, 100.0, 1.0, &cfg), 2.0);
        assert_eq!(adapt_rho(1.0, 1.0, 100.0, &cfg), 0.5);
        // Inside the mu-band nothing changes.
        assert_eq!(adapt_rho(4.0, 5.0, 1.0, &cfg), 4.0);
    }

    #[test]
    fn explicit_zero_init_matches_the_default() {
        let mut dp = decompose(scalar_problem()).unwrap();
        dp.factor_kkt().unwrap();
        let cfg = SolverConfig::default();
        let default_run = solve_primal(&dp, &cfg).unwrap();
        let explicit = solve_primal_with(&dp, &cfg, Some(PrimalState::zeros(&dp)), |_| {}).unwrap();
        assert_eq!(default_run.objective, explicit.objective);
        assert_eq!(default_run.iterations, explicit.iterations);
    }

    #[test]
    fn mismatched_init_is_rejected() {
        let mut dp = decompose(scalar_problem()).unwrap();
        dp.factor_kkt().unwrap();
        let mut bad = PrimalState::zeros(&dp);
        bad.xk.push(PatternVector::zeros(3));
        assert!(matches!(
            solve_primal_with(&dp, &SolverConfig::default(), Some(bad), |_| {}).unwrap_err(),
            SolverError::InvalidConfig(_)
        ));
    }

    #[test]
    fn dense_reference_solves_the_scalar_problem() {
        let cfg = SolverConfig {
            eps_tol: 1e-8,
            ..Default::default()
        };
        let result = solve_dense_reference(&scalar_problem(), &cfg).unwrap();
        assert_eq!(result.status, SolverStatus::Solved);
        assert!((result.objective - 2.0).abs() < 1e-6);
        assert_eq!(result.clique_stats.count, 1);
    }

    #[test]
    fn callback_fires_once_per_iteration() {
        let mut dp = decompose(scalar_problem()).unwrap();
        dp.factor_kkt().unwrap();
        let cfg = SolverConfig::default();
        let mut seen = Vec::new();
        let result = solve_primal_with(&dp, &cfg, None, |r| seen.push((r.iter, r.rho))).unwrap();
        assert_eq!(seen.len(), result.iterations);
        assert_eq!(seen.first().map(|&(i, _)| i), Some(1));
        assert!(seen.iter().all(|&(_, rho)| rho == cfg.rho));
    }

    #[test]
    fn dense_reference_rejects_large_instances() {
        let n = DENSE_REFERENCE_MAX_N + 1;
        let c: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        let a1: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, 1.0)).collect();
        let p = SdpProblem::from_triplets(n, &c, &[a1], vec![1.0]).unwrap();
        assert!(matches!(
            solve_dense_reference(&p, &SolverConfig::default()).unwrap_err(),
            SolverError::InstanceTooLarge { .. }
        ));
    }

    #[test]
    fn unfactored_problem_is_rejected() {
        let dp = decompose(scalar_problem()).unwrap();
        assert!(matches!(
            solve_primal(&dp, &SolverConfig::default()).unwrap_err(),
            SolverError::NotFactored
        ));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut dp = decompose(scalar_problem()).unwrap();
        dp.factor_kkt().unwrap();
        let cfg = SolverConfig {
            rho: -1.0,
            ..Default::default()
        };
        assert!(matches!(
            solve_primal(&dp, &cfg).unwrap_err(),
            SolverError::InvalidConfig(_)
        ));
    }

    #[test]
    fn primal_dual_estimates_close_the_gap() {
        // The primal solver's y is a dual feasible estimate: its objective
        // ⟨b,y⟩ must approach ⟨c,x⟩.
        let c = vec![(0, 0, 2.0), (1, 1, 1.0), (0, 1, 0.25)];
        let a1 = vec![(0, 0, 1.0), (1, 1, 1.0)];
        let a2 = vec![(0, 1, 0.5)];
        let p = SdpProblem::from_triplets(2, &c, &[a1, a2], vec![1.0, 0.1]).unwrap();
        let cfg = SolverConfig {
            eps_tol: 1e-9,
            max_iter: 20000,
            ..Default::default()
        };
        let (primal, dual) = solve_both(p, &cfg);
        let gap = (primal.objective
            - primal.y.iter().zip([1.0, 0.1]).map(|(y, b)| y * b).sum::<f64>())
        .abs();
        assert!(gap < 1e-5, "duality gap {gap}");
        assert!((primal.objective - dual.objective).abs() < 1e-5);
    }
}
