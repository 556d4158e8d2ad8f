//! The global-in-time optimized Schwarz method with Ventcell-to-Robin
//! transmission. Two space-time unknowns live on the fracture time grid:
//! `theta1` is the Robin data consumed by subdomain 1 (produced by subdomain
//! 2's sweep) and `theta2` the reverse. The fixed point satisfies
//! `theta1 = R2(theta2)`, `theta2 = R1(theta1)` where `R_i` is the full
//! (affine) Ventcell-to-Robin sweep of subdomain `i`, projected between the
//! fracture and subdomain grids.
//!
//! The normal orientation is fixed to `n_1` (pointing from subdomain 1 into
//! the fracture), making the exchanged quantity `u_i.n_i + alpha p_{i,gamma}`
//! for both sides.

use crate::discretize::{Closure, FracturedDomain, SubdomainId};
use crate::error::{Error, Result};
use crate::linalg::{gmres, GmresOptions, MonitorFlow};
use crate::monolithic::SpaceTimeSolution;
use crate::schur::{IterationRecord, StopRule};
use crate::subsolve::{run_pair, sweep_full, sweep_norms, SubdomainOperator};
use crate::timegrid::{projection_pair, Projection, TimeGrid, TraceFunction};

pub struct OswrContext {
    pub domain: FracturedDomain,
    pub op1: SubdomainOperator,
    pub op2: SubdomainOperator,
    pub grid_frac: TimeGrid,
    pub alpha: f64,
    proj_to1: Projection,
    proj_from1: Projection,
    proj_to2: Projection,
    proj_from2: Projection,
    pub parallel: bool,
}

impl OswrContext {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: FracturedDomain,
        grid_sub: TimeGrid,
        grid_frac: TimeGrid,
        alpha: f64,
        q1: Vec<f64>,
        q2: Vec<f64>,
        p0_1: Vec<f64>,
        p0_2: Vec<f64>,
        p0_gamma: Vec<f64>,
        parallel: bool,
    ) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Invalid(format!(
                "Robin parameter alpha must be positive, got {alpha}"
            )));
        }
        let closure = Closure::Ventcell { alpha };
        let op1 = SubdomainOperator::new(
            &domain,
            SubdomainId::One,
            grid_sub,
            closure,
            q1,
            p0_1,
            p0_gamma.clone(),
        )?;
        let op2 = SubdomainOperator::new(
            &domain,
            SubdomainId::Two,
            grid_sub,
            closure,
            q2,
            p0_2,
            p0_gamma,
        )?;
        let (proj_to1, proj_from1) = projection_pair(grid_frac, grid_sub)?;
        let (proj_to2, proj_from2) = projection_pair(grid_frac, grid_sub)?;
        Ok(OswrContext {
            domain,
            op1,
            op2,
            grid_frac,
            alpha,
            proj_to1,
            proj_from1,
            proj_to2,
            proj_from2,
            parallel,
        })
    }

    pub fn ny(&self) -> usize {
        self.domain.ny()
    }

    fn check(&self, th: &TraceFunction) -> Result<()> {
        if th.grid != self.grid_frac {
            return Err(Error::GridMismatch(format!(
                "theta must live on the fracture grid (M={}), got M={}",
                self.grid_frac.slabs, th.grid.slabs
            )));
        }
        Ok(())
    }
}

/// Homogeneous residual operator of the interface system:
/// `(theta1 - P(R2^0 theta2), theta2 - P(R1^0 theta1))`.
pub fn oswr_apply(
    ctx: &OswrContext,
    theta1: &TraceFunction,
    theta2: &TraceFunction,
) -> Result<(TraceFunction, TraceFunction)> {
    ctx.check(theta1)?;
    ctx.check(theta2)?;
    let d1 = ctx.proj_to1.apply(theta1);
    let d2 = ctx.proj_to2.apply(theta2);
    let (o1, o2) = run_pair(
        ctx.parallel,
        || ctx.op1.sweep(Some(&d1), false),
        || ctx.op2.sweep(Some(&d2), false),
    );
    let r2 = ctx.proj_from2.apply(&o2?);
    let r1 = ctx.proj_from1.apply(&o1?);
    let mut out1 = theta1.clone();
    out1.axpy(-1.0, &r2);
    let mut out2 = theta2.clone();
    out2.axpy(-1.0, &r1);
    Ok((out1, out2))
}

/// Affine right-hand side `(P(R2(0; q2, p0)), P(R1(0; q1, p0)))`.
pub fn oswr_rhs(ctx: &OswrContext) -> Result<(TraceFunction, TraceFunction)> {
    let (o1, o2) = run_pair(
        ctx.parallel,
        || ctx.op1.sweep(None, true),
        || ctx.op2.sweep(None, true),
    );
    Ok((ctx.proj_from2.apply(&o2?), ctx.proj_from1.apply(&o1?)))
}

#[derive(Debug, Clone)]
pub struct JacobiOptions {
    pub tol: f64,
    pub max_iters: usize,
    /// Relaxation factor for the update; 1 is the plain Jacobi exchange.
    pub damping: f64,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        JacobiOptions {
            tol: 1e-6,
            max_iters: 200,
            damping: 1.0,
        }
    }
}

pub struct OswrSolve {
    pub theta1: TraceFunction,
    pub theta2: TraceFunction,
    pub history: Vec<IterationRecord>,
    pub iterations: usize,
    pub converged: bool,
    pub solution: SpaceTimeSolution,
}

struct SweptIterate {
    out1: TraceFunction,
    out2: TraceFunction,
    err_p: f64,
    err_u: f64,
    err_pg: f64,
}

/// One full (affine) sweep of both subdomains with the current data,
/// returning the projected Robin outputs and the iterate's solution norms.
fn sweep_pair(ctx: &OswrContext, theta1: &TraceFunction, theta2: &TraceFunction) -> Result<SweptIterate> {
    let d1 = ctx.proj_to1.apply(theta1);
    let d2 = ctx.proj_to2.apply(theta2);
    let (r1, r2) = run_pair(
        ctx.parallel,
        || sweep_norms(&ctx.op1, Some(&d1), true),
        || sweep_norms(&ctx.op2, Some(&d2), true),
    );
    let (o1, n1) = r1?;
    let (o2, n2) = r2?;
    let mut pg = ctx.proj_from1.apply(&n1.trace);
    let pg2 = ctx.proj_from2.apply(&n2.trace);
    pg.axpy(1.0, &pg2);
    pg.scale(0.5);
    Ok(SweptIterate {
        out1: ctx.proj_from2.apply(&o2),
        out2: ctx.proj_from1.apply(&o1),
        err_p: (n1.p_sq + n2.p_sq).sqrt(),
        err_u: (n1.u_sq + n2.u_sq).sqrt(),
        err_pg: pg.space_time_norm(ctx.domain.frac.hy),
    })
}

/// Reconstruct the volume solution from converged interface data. The
/// fracture pressure is the average of the two subdomain traces projected to
/// the fracture grid (they agree at convergence).
pub fn reconstruct(
    ctx: &OswrContext,
    theta1: &TraceFunction,
    theta2: &TraceFunction,
) -> Result<SpaceTimeSolution> {
    let d1 = ctx.proj_to1.apply(theta1);
    let d2 = ctx.proj_to2.apply(theta2);
    let (r1, r2) = run_pair(
        ctx.parallel,
        || sweep_full(&ctx.op1, Some(&d1), true),
        || sweep_full(&ctx.op2, Some(&d2), true),
    );
    let (_, p1, trace1) = r1?;
    let (_, p2, trace2) = r2?;
    let grid_sub = ctx.op1.grid;
    let t1 = TraceFunction::from_rows(grid_sub, ctx.ny(), trace1.concat())?;
    let t2 = TraceFunction::from_rows(grid_sub, ctx.ny(), trace2.concat())?;
    let mut pg = ctx.proj_from1.apply(&t1);
    let pg2 = ctx.proj_from2.apply(&t2);
    pg.axpy(1.0, &pg2);
    pg.scale(0.5);
    Ok(SpaceTimeSolution {
        grid_sub,
        grid_frac: ctx.grid_frac,
        p1,
        p2,
        trace1,
        trace2,
        p_gamma: pg,
    })
}

fn pair_norm(a: &TraceFunction, b: &TraceFunction) -> f64 {
    let sa: f64 = a.flat().iter().map(|v| v * v).sum();
    let sb: f64 = b.flat().iter().map(|v| v * v).sum();
    (sa + sb).sqrt()
}

/// Flags divergence once the monitored quantity has grown for
/// `DIVERGENCE_STREAK` consecutive observations. A badly chosen Robin
/// parameter can make the Jacobi exchange blow up in floating point; it must
/// fail loudly rather than loop to `max_iters`.
pub(crate) struct DivergenceGuard {
    last: f64,
    streak: usize,
}

pub(crate) const DIVERGENCE_STREAK: usize = 5;

impl DivergenceGuard {
    pub(crate) fn new() -> Self {
        DivergenceGuard {
            last: f64::INFINITY,
            streak: 0,
        }
    }

    /// Returns true when the growth streak reaches the threshold.
    pub(crate) fn observe(&mut self, value: f64) -> bool {
        if value > self.last {
            self.streak += 1;
        } else {
            self.streak = 0;
        }
        self.last = value;
        self.streak >= DIVERGENCE_STREAK
    }
}

/// Jacobi waveform relaxation: at each iteration both subdomains are solved
/// over the whole window with the previous exchanged data, then the Robin
/// outputs are swapped. Divergence (five consecutive growth steps of the
/// monitored quantity) is reported as an error.
pub fn solve_oswr_jacobi(
    ctx: &OswrContext,
    opts: &JacobiOptions,
    initial_guess: Option<(&TraceFunction, &TraceFunction)>,
    stop: StopRule,
) -> Result<OswrSolve> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::Invalid(format!(
            "Jacobi damping must lie in (0,1], got {}",
            opts.damping
        )));
    }
    let ny = ctx.ny();
    let (mut th1, mut th2) = match initial_guess {
        Some((a, b)) => {
            ctx.check(a)?;
            ctx.check(b)?;
            (a.clone(), b.clone())
        }
        None => (
            TraceFunction::zeros(ctx.grid_frac, ny),
            TraceFunction::zeros(ctx.grid_frac, ny),
        ),
    };
    let mut history = Vec::new();
    let mut e_ref: Option<f64> = None;
    let mut guard = DivergenceGuard::new();
    let mut converged = false;
    let mut iterations = 0usize;
    for it in 1..=opts.max_iters {
        let swept = sweep_pair(ctx, &th1, &th2)?;
        let mut new1 = swept.out1.clone();
        let mut new2 = swept.out2.clone();
        if opts.damping != 1.0 {
            new1.scale(opts.damping);
            new1.axpy(1.0 - opts.damping, &th1);
            new2.scale(opts.damping);
            new2.axpy(1.0 - opts.damping, &th2);
        }
        let mut upd1 = new1.clone();
        upd1.axpy(-1.0, &th1);
        let mut upd2 = new2.clone();
        upd2.axpy(-1.0, &th2);
        let update = pair_norm(&upd1, &upd2) / pair_norm(&new1, &new2).max(1e-300);
        th1 = new1;
        th2 = new2;
        iterations = it;

        let (monitored, rec) = match stop {
            StopRule::Residual => (
                update,
                IterationRecord {
                    iter: it,
                    rel_residual: update,
                    err_p_matrix: None,
                    err_u_matrix: None,
                    err_p_fracture: None,
                    err_rel: None,
                },
            ),
            StopRule::ErrorToZero { .. } => {
                let e = (swept.err_p * swept.err_p + swept.err_u * swept.err_u).sqrt();
                let e0 = *e_ref.get_or_insert(e.max(1e-300));
                (
                    e / e0,
                    IterationRecord {
                        iter: it,
                        rel_residual: update,
                        err_p_matrix: Some(swept.err_p),
                        err_u_matrix: Some(swept.err_u),
                        err_p_fracture: Some(swept.err_pg),
                        err_rel: Some(e / e0),
                    },
                )
            }
        };
        history.push(rec);
        let tol = match stop {
            StopRule::Residual => opts.tol,
            StopRule::ErrorToZero { tol } => tol,
        };
        if monitored <= tol {
            converged = true;
            break;
        }
        if guard.observe(monitored) {
            return Err(Error::Divergence(format!(
                "OSWR Jacobi grew for {DIVERGENCE_STREAK} consecutive iterations (at iteration {it}, measure {monitored:.3e})"
            )));
        }
    }
    let solution = reconstruct(ctx, &th1, &th2)?;
    Ok(OswrSolve {
        theta1: th1,
        theta2: th2,
        history,
        iterations,
        converged,
        solution,
    })
}

/// GMRES acceleration of the same interface problem on the stacked vector
/// `[theta1; theta2]`.
pub fn solve_oswr_gmres(
    ctx: &OswrContext,
    opts: &GmresOptions,
    initial_guess: Option<(&TraceFunction, &TraceFunction)>,
    stop: StopRule,
) -> Result<OswrSolve> {
    let ny = ctx.ny();
    let len = ctx.grid_frac.slabs * ny;
    let (b1, b2) = oswr_rhs(ctx)?;
    let mut b = Vec::with_capacity(2 * len);
    b.extend_from_slice(b1.flat());
    b.extend_from_slice(b2.flat());
    let split = |v: &[f64]| -> (TraceFunction, TraceFunction) {
        (
            TraceFunction::from_rows(ctx.grid_frac, ny, v[..len].to_vec()).unwrap(),
            TraceFunction::from_rows(ctx.grid_frac, ny, v[len..].to_vec()).unwrap(),
        )
    };
    let mut apply = |v: &[f64]| -> Vec<f64> {
        let (t1, t2) = split(v);
        let (r1, r2) = oswr_apply(ctx, &t1, &t2).unwrap();
        let mut out = r1.into_flat();
        out.extend_from_slice(r2.flat());
        out
    };
    let x0: Option<Vec<f64>> = match initial_guess {
        Some((a, b)) => {
            ctx.check(a)?;
            ctx.check(b)?;
            let mut v = a.flat().to_vec();
            v.extend_from_slice(b.flat());
            Some(v)
        }
        None => None,
    };

    let mut history = Vec::new();
    let outcome = match stop {
        StopRule::Residual => {
            let out = gmres(&mut apply, &b, x0.as_deref(), None, opts, None)?;
            for (i, r) in out.history.iter().enumerate() {
                history.push(IterationRecord {
                    iter: i + 1,
                    rel_residual: *r,
                    err_p_matrix: None,
                    err_u_matrix: None,
                    err_p_fracture: None,
                    err_rel: None,
                });
            }
            out
        }
        StopRule::ErrorToZero { tol } => {
            let (g1, g2) = match initial_guess {
                Some((a, b)) => (a.clone(), b.clone()),
                None => (
                    TraceFunction::zeros(ctx.grid_frac, ny),
                    TraceFunction::zeros(ctx.grid_frac, ny),
                ),
            };
            let s0 = sweep_pair(ctx, &g1, &g2)?;
            let e0 = (s0.err_p * s0.err_p + s0.err_u * s0.err_u).sqrt().max(1e-300);
            history.push(IterationRecord {
                iter: 0,
                rel_residual: 1.0,
                err_p_matrix: Some(s0.err_p),
                err_u_matrix: Some(s0.err_u),
                err_p_fracture: Some(s0.err_pg),
                err_rel: Some(1.0),
            });
            let mut reached = None;
            let mut monitor = |it: usize, x: &[f64], rel: f64| -> MonitorFlow {
                let (t1, t2) = split(x);
                let s = sweep_pair(ctx, &t1, &t2).unwrap();
                let e_rel = (s.err_p * s.err_p + s.err_u * s.err_u).sqrt() / e0;
                history.push(IterationRecord {
                    iter: it,
                    rel_residual: rel,
                    err_p_matrix: Some(s.err_p),
                    err_u_matrix: Some(s.err_u),
                    err_p_fracture: Some(s.err_pg),
                    err_rel: Some(e_rel),
                });
                reached = Some(e_rel <= tol);
                if e_rel <= tol {
                    MonitorFlow::Stop
                } else {
                    MonitorFlow::Continue
                }
            };
            let error_opts = GmresOptions {
                rel_tol: 1e-300,
                ..opts.clone()
            };
            let mut out = gmres(&mut apply, &b, x0.as_deref(), None, &error_opts, Some(&mut monitor))?;
            out.converged = reached.unwrap_or(out.converged);
            out
        }
    };
    let (th1, th2) = split(&outcome.x);
    let solution = reconstruct(ctx, &th1, &th2)?;
    Ok(OswrSolve {
        theta1: th1,
        theta2: th2,
        history,
        iterations: outcome.iterations,
        converged: outcome.converged,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::PhysicalData;
    use crate::geometry::{build_meshes, DomainSpec};
    use crate::monolithic::{solve_monolithic, CoupledProblem};

    fn small_domain(n: usize) -> FracturedDomain {
        let spec = DomainSpec {
            lx: 2.0,
            ly: 1.0,
            fracture_x: 1.0,
            nx1: n,
            nx2: n,
            ny: n,
        };
        let (m1, m2, f) = build_meshes(&spec).unwrap();
        let f = f.with_endpoint_values(0.4, -0.1);
        let phys = PhysicalData {
            s1: 1.0,
            s2: 1.5,
            k1: 1.0,
            k2: 2.0,
            s_gamma: 1e-3,
            kf_delta: 1.0,
            delta: 1e-3,
        };
        FracturedDomain::new(m1, m2, f, phys).unwrap()
    }

    fn smooth_problem(d: &FracturedDomain, grid: TimeGrid) -> CoupledProblem {
        let mut prob = CoupledProblem::homogeneous(d.clone(), grid);
        for (c, v) in prob.q1.iter_mut().enumerate() {
            let (x, y) = d.mesh1.cell_center(c);
            *v = (2.0 * x).sin() + 0.3 * y;
        }
        for (c, v) in prob.q2.iter_mut().enumerate() {
            let (x, y) = d.mesh2.cell_center(c);
            *v = 0.5 * x * y - 0.3;
        }
        for (k, v) in prob.p0_gamma.iter_mut().enumerate() {
            *v = 0.2 * (d.frac.segment_center(k) - 0.5);
        }
        // compatible initial condition: p0_i = p0_gamma on gamma is not
        // required cell-wise, keep volume initial data smooth
        for (c, v) in prob.p0_1.iter_mut().enumerate() {
            let (x, y) = d.mesh1.cell_center(c);
            *v = 0.1 * x * (1.0 - y);
        }
        for (c, v) in prob.p0_2.iter_mut().enumerate() {
            let (x, _) = d.mesh2.cell_center(c);
            *v = 0.05 * (2.0 - x);
        }
        prob
    }

    fn context(d: &FracturedDomain, prob: &CoupledProblem, grid_sub: TimeGrid, grid_frac: TimeGrid, alpha: f64) -> OswrContext {
        OswrContext::new(
            d.clone(),
            grid_sub,
            grid_frac,
            alpha,
            prob.q1.clone(),
            prob.q2.clone(),
            prob.p0_1.clone(),
            prob.p0_2.clone(),
            prob.p0_gamma.clone(),
            false,
        )
        .unwrap()
    }

    #[test]
    fn zero_theta_maps_to_zero() {
        let d = small_domain(4);
        let grid = TimeGrid::new(0.5, 4).unwrap();
        let prob = CoupledProblem::homogeneous(d.clone(), grid);
        let ctx = context(&d, &prob, grid, grid, 1.0);
        let z = TraceFunction::zeros(grid, 4);
        let (r1, r2) = oswr_apply(&ctx, &z, &z).unwrap();
        assert!(r1.flat().iter().all(|&v| v == 0.0));
        assert!(r2.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn swap_symmetry_on_identical_subdomains() {
        let spec = DomainSpec {
            lx: 2.0,
            ly: 1.0,
            fracture_x: 1.0,
            nx1: 3,
            nx2: 3,
            ny: 4,
        };
        let (m1, m2, f) = build_meshes(&spec).unwrap();
        let phys = PhysicalData {
            s1: 1.0,
            s2: 1.0,
            k1: 1.0,
            k2: 1.0,
            s_gamma: 1e-3,
            kf_delta: 1.0,
            delta: 1e-3,
        };
        let d = FracturedDomain::new(m1, m2, f, phys).unwrap();
        let grid = TimeGrid::new(1.0, 3).unwrap();
        let prob = CoupledProblem::homogeneous(d.clone(), grid);
        let ctx = context(&d, &prob, grid, grid, 1.5);
        let mut a = TraceFunction::zeros(grid, 4);
        let mut b = TraceFunction::zeros(grid, 4);
        for (i, (x, y)) in a.flat_mut().iter_mut().zip(b.flat_mut()).enumerate() {
            *x = (i as f64 * 0.61).sin();
            *y = (i as f64 * 0.23).cos();
        }
        let (r1, r2) = oswr_apply(&ctx, &a, &b).unwrap();
        let (s1, s2) = oswr_apply(&ctx, &b, &a).unwrap();
        for (x, y) in r1.flat().iter().zip(s2.flat()) {
            assert!((x - y).abs() < 1e-13);
        }
        for (x, y) in r2.flat().iter().zip(s1.flat()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    // Monolithic-derived theta satisfies the interface system on conforming
    // grids.
    #[test]
    fn monolithic_theta_is_the_fixed_point() {
        let d = small_domain(8);
        let grid = TimeGrid::new(0.5, 6).unwrap();
        let prob = smooth_problem(&d, grid);
        let mono = solve_monolithic(&prob).unwrap();
        let alpha = 3.0;
        let ctx = context(&d, &prob, grid, grid, alpha);
        let ny = d.ny();
        let mut th1 = TraceFunction::zeros(grid, ny);
        let mut th2 = TraceFunction::zeros(grid, ny);
        let t1 = 2.0 * d.phys.k1 * d.frac.hy / d.mesh1.hx;
        let t2 = 2.0 * d.phys.k2 * d.frac.hy / d.mesh2.hx;
        for m in 0..grid.slabs {
            let pg = mono.p_gamma.slab(m);
            for k in 0..ny {
                let c1 = d.mesh1.interface_cell(k);
                let c2 = d.mesh2.interface_cell(k);
                // theta1 = robin output of subdomain 2, theta2 of subdomain 1
                th1.slab_mut(m)[k] =
                    t2 * (mono.p2[m][c2] - pg[k]) / d.frac.hy + alpha * pg[k];
                th2.slab_mut(m)[k] =
                    t1 * (mono.p1[m][c1] - pg[k]) / d.frac.hy + alpha * pg[k];
            }
        }
        let (r1, r2) = oswr_apply(&ctx, &th1, &th2).unwrap();
        let (b1, b2) = oswr_rhs(&ctx).unwrap();
        let scale = b1
            .flat()
            .iter()
            .chain(b2.flat())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in r1.flat().iter().zip(b1.flat()) {
            assert!((a - b).abs() <= 1e-10 * scale.max(1.0), "{a} vs {b}");
        }
        for (a, b) in r2.flat().iter().zip(b2.flat()) {
            assert!((a - b).abs() <= 1e-10 * scale.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn jacobi_fixed_point_matches_monolithic() {
        let d = small_domain(6);
        let grid = TimeGrid::new(0.5, 5).unwrap();
        let prob = smooth_problem(&d, grid);
        let mono = solve_monolithic(&prob).unwrap();
        let ctx = context(&d, &prob, grid, grid, 5.0);
        let opts = JacobiOptions {
            tol: 1e-12,
            max_iters: 300,
            damping: 1.0,
        };
        let out = solve_oswr_jacobi(&ctx, &opts, None, StopRule::Residual).unwrap();
        assert!(out.converged, "Jacobi did not converge");
        let scale = mono
            .p_gamma
            .flat()
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in out.solution.p_gamma.flat().iter().zip(mono.p_gamma.flat()) {
            assert!(
                (a - b).abs() <= 1e-8 * scale.max(1.0),
                "fracture pressure off: {a} vs {b}"
            );
        }
        for m in 0..grid.slabs {
            for c in 0..d.mesh1.n_cells() {
                assert!((out.solution.p1[m][c] - mono.p1[m][c]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn converged_solution_is_independent_of_alpha() {
        let d = small_domain(5);
        let grid = TimeGrid::new(0.5, 4).unwrap();
        let prob = smooth_problem(&d, grid);
        let opts = GmresOptions {
            rel_tol: 1e-12,
            max_iters: 200,
            ..Default::default()
        };
        let ctx_a = context(&d, &prob, grid, grid, 2.0);
        let ctx_b = context(&d, &prob, grid, grid, 40.0);
        let a = solve_oswr_gmres(&ctx_a, &opts, None, StopRule::Residual).unwrap();
        let b = solve_oswr_gmres(&ctx_b, &opts, None, StopRule::Residual).unwrap();
        assert!(a.converged && b.converged);
        for m in 0..grid.slabs {
            for c in 0..d.mesh1.n_cells() {
                assert!(
                    (a.solution.p1[m][c] - b.solution.p1[m][c]).abs() < 1e-7,
                    "alpha-dependent solution at slab {m}"
                );
            }
        }
        assert_ne!(a.iterations, 0);
    }

    #[test]
    fn gmres_needs_no_more_iterations_than_jacobi() {
        let d = small_domain(6);
        let grid = TimeGrid::new(0.5, 5).unwrap();
        let prob = smooth_problem(&d, grid);
        let alpha = 8.0;
        let ctx = context(&d, &prob, grid, grid, alpha);
        let jac = solve_oswr_jacobi(
            &ctx,
            &JacobiOptions {
                tol: 1e-8,
                max_iters: 500,
                damping: 1.0,
            },
            None,
            StopRule::Residual,
        )
        .unwrap();
        let gm = solve_oswr_gmres(
            &ctx,
            &GmresOptions {
                rel_tol: 1e-8,
                max_iters: 500,
                ..Default::default()
            },
            None,
            StopRule::Residual,
        )
        .unwrap();
        assert!(jac.converged && gm.converged);
        assert!(
            gm.iterations <= jac.iterations,
            "GMRES {} vs Jacobi {}",
            gm.iterations,
            jac.iterations
        );
    }

    #[test]
    fn zero_data_zero_guess_is_a_fixed_point() {
        let d = small_domain(3);
        let grid = TimeGrid::new(0.5, 3).unwrap();
        let mut d0 = d.clone();
        d0.frac = std::sync::Arc::new(d.frac.as_ref().clone().with_zeroed_endpoints());
        let prob = CoupledProblem::homogeneous(d0.clone(), grid);
        let ctx = context(&d0, &prob, grid, grid, 1.0);
        let out = solve_oswr_jacobi(
            &ctx,
            &JacobiOptions::default(),
            None,
            StopRule::Residual,
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1); // first exchange already has zero update
        assert!(out.theta1.flat().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn divergence_guard_needs_five_consecutive_increases() {
        let mut g = DivergenceGuard::new();
        for v in [9.0, 5.0, 6.0, 7.0, 8.0, 9.0] {
            assert!(!g.observe(v), "tripped early at {v}");
        }
        assert!(g.observe(10.0), "five consecutive increases must trip");
        let mut g = DivergenceGuard::new();
        // a reset in between keeps it quiet
        for v in [1.0, 2.0, 3.0, 4.0, 3.5, 4.0, 5.0, 6.0, 7.0] {
            assert!(!g.observe(v));
        }
    }

    #[test]
    fn rejects_nonpositive_alpha_and_grid_mismatch() {
        let d = small_domain(3);
        let grid = TimeGrid::new(0.5, 3).unwrap();
        let prob = CoupledProblem::homogeneous(d.clone(), grid);
        assert!(OswrContext::new(
            d.clone(),
            grid,
            grid,
            0.0,
            prob.q1.clone(),
            prob.q2.clone(),
            prob.p0_1.clone(),
            prob.p0_2.clone(),
            prob.p0_gamma.clone(),
            false,
        )
        .is_err());
        let ctx = context(&d, &prob, grid, grid, 1.0);
        let wrong = TraceFunction::zeros(TimeGrid::new(0.5, 4).unwrap(), 3);
        let ok = TraceFunction::zeros(grid, 3);
        assert!(oswr_apply(&ctx, &wrong, &ok).is_err());
    }
}
