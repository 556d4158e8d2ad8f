//! Scenario execution: build meshes and operators from a config, run the
//! chosen solver, compute errors, and emit artifacts.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretize::FracturedDomain;
use crate::error::{Error, Result};
use crate::geometry::{build_meshes, BoundarySegment, Side};
use crate::harness::config::{AlphaMode, GuessKind, Method, ScenarioConfig};
use crate::harness::errors::{compute_errors, ErrorReport};
use crate::harness::io;
use crate::linalg::GmresOptions;
use crate::monolithic::{solve_monolithic, CoupledProblem, SpaceTimeSolution};
use crate::oswr::{solve_oswr_gmres, solve_oswr_jacobi, JacobiOptions, OswrContext};
use crate::schur::{solve_gtp, SchurContext, SchurPrecond, StopRule};
use crate::symbol::{optimize_alpha, AlphaSearch, FreqBox, SymbolParams};
use crate::timegrid::{TimeGrid, TraceFunction};

/// Meshes, grids and per-cell data of one scenario.
pub struct ScenarioSetup {
    pub domain: FracturedDomain,
    pub grid_sub: TimeGrid,
    pub grid_frac: TimeGrid,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub p0_1: Vec<f64>,
    pub p0_2: Vec<f64>,
    pub p0_gamma: Vec<f64>,
}

impl ScenarioSetup {
    pub fn coupled_problem(&self) -> CoupledProblem {
        CoupledProblem {
            domain: self.domain.clone(),
            grid: self.grid_sub,
            q1: self.q1.clone(),
            q2: self.q2.clone(),
            p0_1: self.p0_1.clone(),
            p0_2: self.p0_2.clone(),
            p0_gamma: self.p0_gamma.clone(),
        }
    }
}

/// Route config boundary segments to the two meshes: lateral sides belong to
/// one subdomain each, bottom/top spans are clipped at the fracture.
fn route_segments(
    segments: &[BoundarySegment],
    fracture_x: f64,
    lx: f64,
) -> (Vec<BoundarySegment>, Vec<BoundarySegment>) {
    let mut s1 = Vec::new();
    let mut s2 = Vec::new();
    for seg in segments {
        match seg.side {
            Side::Left => s1.push(*seg),
            Side::Right => s2.push(*seg),
            Side::Bottom | Side::Top => {
                let eps = 1e-12 * lx;
                if seg.lo < fracture_x - eps {
                    s1.push(BoundarySegment {
                        hi: seg.hi.min(fracture_x),
                        ..*seg
                    });
                }
                if seg.hi > fracture_x + eps {
                    s2.push(BoundarySegment {
                        lo: seg.lo.max(fracture_x),
                        ..*seg
                    });
                }
            }
        }
    }
    (s1, s2)
}

/// Build the meshes, time grids and data vectors for a config.
pub fn build_setup(cfg: &ScenarioConfig) -> Result<ScenarioSetup> {
    cfg.validate()?;
    if cfg.error_to_zero && cfg.method == Method::Monolithic {
        return Err(Error::Config(
            "[method] error_to_zero needs an iterative method".into(),
        ));
    }
    let (m1, m2, frac) = build_meshes(&cfg.domain)?;
    let (segs1, segs2) = route_segments(&cfg.segments, cfg.domain.fracture_x, cfg.domain.lx);
    let mut m1 = m1.with_boundary_segments(&segs1).map_err(cfg_err)?;
    let mut m2 = m2.with_boundary_segments(&segs2).map_err(cfg_err)?;
    let mut frac = frac.with_endpoint_values(cfg.fracture_bottom, cfg.fracture_top);
    let (mut q, mut p0, mut p0_gamma) = (cfg.q, cfg.p0, cfg.p0_gamma);
    if cfg.error_to_zero {
        m1 = m1.with_zeroed_boundary_values();
        m2 = m2.with_zeroed_boundary_values();
        frac = frac.with_zeroed_endpoints();
        q = (0.0, 0.0);
        p0 = (0.0, 0.0);
        p0_gamma = 0.0;
    }
    let domain = FracturedDomain::new(m1, m2, frac, cfg.phys)?;
    let grid_sub = TimeGrid::new(cfg.t_final, cfg.m_sub)?;
    let grid_frac = TimeGrid::new(cfg.t_final, cfg.m_frac)?;
    let nc1 = domain.mesh1.n_cells();
    let nc2 = domain.mesh2.n_cells();
    Ok(ScenarioSetup {
        q1: vec![q.0; nc1],
        q2: vec![q.1; nc2],
        p0_1: vec![p0.0; nc1],
        p0_2: vec![p0.1; nc2],
        p0_gamma: vec![p0_gamma; domain.ny()],
        domain,
        grid_sub,
        grid_frac,
    })
}

fn cfg_err(e: Error) -> Error {
    Error::Config(e.to_string())
}

/// Resolve the Robin parameter: explicit value, or the min-max optimization
/// over the frequency box of the discretization (fracture length, mesh size
/// along the fracture, time window, largest time step).
pub fn resolve_alpha(cfg: &ScenarioConfig, setup: &ScenarioSetup) -> Result<f64> {
    match cfg.alpha {
        AlphaMode::Explicit(a) => Ok(a),
        AlphaMode::Optimized => {
            let p = symbol_params(cfg, 0.0);
            let hy = setup.domain.frac.hy;
            let l = setup.domain.ny() as f64 * hy;
            let dt = setup.grid_sub.dt().max(setup.grid_frac.dt());
            let b = FreqBox::from_discretization(l, hy, cfg.t_final, dt)?;
            let search = alpha_search(cfg, &p, l, hy);
            let (alpha, _) = optimize_alpha(&p, &b, &search)?;
            Ok(alpha)
        }
    }
}

/// The alpha search bracket of a scenario (config overrides applied).
pub fn alpha_search(cfg: &ScenarioConfig, p: &SymbolParams, l: f64, h: f64) -> AlphaSearch {
    let mut search = AlphaSearch::default_range(p, l, h);
    if let Some(lo) = cfg.alpha_lo {
        search.alpha_lo = lo;
    }
    if let Some(hi) = cfg.alpha_hi {
        search.alpha_hi = hi;
    }
    search
}

/// The two-half-space symbol parameters matching a scenario.
pub fn symbol_params(cfg: &ScenarioConfig, alpha: f64) -> SymbolParams {
    SymbolParams {
        s_minus: cfg.phys.s1,
        k_minus: cfg.phys.k1,
        s_plus: cfg.phys.s2,
        k_plus: cfg.phys.k2,
        s_gamma: cfg.phys.s_gamma,
        kf_delta: cfg.phys.kf_delta,
        alpha,
    }
}

pub struct RunArtifacts {
    pub report: ErrorReport,
    pub iterations: usize,
    pub converged: bool,
    pub alpha: Option<f64>,
    pub wall_seconds: f64,
    pub solution: SpaceTimeSolution,
}

fn random_trace(grid: TimeGrid, ny: usize, rng: &mut ChaCha8Rng) -> TraceFunction {
    let mut f = TraceFunction::zeros(grid, ny);
    for v in f.flat_mut() {
        *v = rng.gen_range(-1.0..=1.0);
    }
    f
}

/// Execute the scenario (no artifact files; see [`run`] for that).
pub fn run_with(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    let setup = build_setup(cfg)?;
    let started = Instant::now();
    let parallel = cfg.threads > 1;
    let ny = setup.domain.ny();
    let stop = if cfg.error_to_zero {
        StopRule::ErrorToZero { tol: cfg.tol }
    } else {
        StopRule::Residual
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alpha_used = None;

    let (solution, iterations, converged, history) = match cfg.method {
        Method::Monolithic => {
            let sol = solve_monolithic(&setup.coupled_problem())?;
            (sol, 0, true, Vec::new())
        }
        Method::GtpNone | Method::GtpLocal | Method::GtpNn => {
            let precond = match cfg.method {
                Method::GtpNone => SchurPrecond::None,
                Method::GtpLocal => SchurPrecond::Local,
                _ => SchurPrecond::NeumannNeumann,
            };
            let ctx = SchurContext::new(
                setup.domain.clone(),
                setup.grid_sub,
                setup.grid_frac,
                setup.q1.clone(),
                setup.q2.clone(),
                setup.p0_1.clone(),
                setup.p0_2.clone(),
                setup.p0_gamma.clone(),
                precond,
                parallel,
            )?;
            let guess = match cfg.initial_guess {
                GuessKind::Zero => None,
                GuessKind::Random => Some(random_trace(setup.grid_frac, ny, &mut rng)),
            };
            let opts = GmresOptions {
                rel_tol: cfg.tol,
                max_iters: cfg.max_iters,
                ..Default::default()
            };
            let out = solve_gtp(&ctx, &opts, guess.as_ref(), stop)?;
            (out.solution, out.iterations, out.converged, out.history)
        }
        Method::GtoJacobi | Method::GtoGmres => {
            let alpha = resolve_alpha(cfg, &setup)?;
            alpha_used = Some(alpha);
            let ctx = OswrContext::new(
                setup.domain.clone(),
                setup.grid_sub,
                setup.grid_frac,
                alpha,
                setup.q1.clone(),
                setup.q2.clone(),
                setup.p0_1.clone(),
                setup.p0_2.clone(),
                setup.p0_gamma.clone(),
                parallel,
            )?;
            let guess = match cfg.initial_guess {
                GuessKind::Zero => None,
                GuessKind::Random => Some((
                    random_trace(setup.grid_frac, ny, &mut rng),
                    random_trace(setup.grid_frac, ny, &mut rng),
                )),
            };
            let guess_refs = guess.as_ref().map(|(a, b)| (a, b));
            let out = if cfg.method == Method::GtoJacobi {
                let opts = JacobiOptions {
                    tol: cfg.tol,
                    max_iters: cfg.max_iters,
                    damping: cfg.damping,
                };
                solve_oswr_jacobi(&ctx, &opts, guess_refs, stop)?
            } else {
                let opts = GmresOptions {
                    rel_tol: cfg.tol,
                    max_iters: cfg.max_iters,
                    ..Default::default()
                };
                solve_oswr_gmres(&ctx, &opts, guess_refs, stop)?
            };
            (out.solution, out.iterations, out.converged, out.history)
        }
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    let mut report = ErrorReport {
        history,
        ..Default::default()
    };
    if let Some(ref_path) = &cfg.reference_path {
        let reference = io::read_reference(ref_path)?;
        let errs = compute_errors(&solution, &reference, &setup.domain)?;
        report.err_p_matrix = errs.err_p_matrix;
        report.err_u_matrix = errs.err_u_matrix;
        report.err_p_fracture = errs.err_p_fracture;
    } else if let Some(last) = report.history.last() {
        report.err_p_matrix = last.err_p_matrix.unwrap_or(0.0);
        report.err_u_matrix = last.err_u_matrix.unwrap_or(0.0);
        report.err_p_fracture = last.err_p_fracture.unwrap_or(0.0);
    }

    Ok(RunArtifacts {
        report,
        iterations,
        converged,
        alpha: alpha_used,
        wall_seconds,
        solution,
    })
}

/// Execute the scenario and write artifacts into `out_dir` when configured:
/// `history.csv`, `summary.csv` and, when requested, field snapshots
/// `snap<i>_{p1,p2}.dat`, flux tables `snap<i>_flux.csv` and the fracture
/// pressure series `fracture.csv`.
pub fn run(cfg: &ScenarioConfig) -> Result<RunArtifacts> {
    let art = run_with(cfg)?;
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        io::write_history_csv(&dir.join("history.csv"), &art.report.history, art.alpha)?;
        let summary = io::RunSummary {
            method: cfg.method.name(),
            m_sub: cfg.m_sub,
            m_frac: cfg.m_frac,
            iterations: art.iterations,
            converged: art.converged,
            err_p_matrix: Some(art.report.err_p_matrix),
            err_u_matrix: Some(art.report.err_u_matrix),
            err_p_fracture: Some(art.report.err_p_fracture),
            alpha: art.alpha,
            wall_seconds: art.wall_seconds,
        };
        std::fs::write(dir.join("summary.csv"), io::summary_csv(&summary))?;
        if cfg.write_fields || !cfg.snapshots.is_empty() {
            let setup = build_setup(cfg)?;
            for (i, &t) in cfg.snapshots.iter().enumerate() {
                let ms = art.solution.grid_sub.slab_containing(t);
                let mf = art.solution.grid_frac.slab_containing(t);
                io::write_field_snapshot(
                    &dir.join(format!("snap{i}_p1.dat")),
                    &setup.domain.mesh1,
                    &art.solution.p1[ms],
                    t,
                )?;
                io::write_field_snapshot(
                    &dir.join(format!("snap{i}_p2.dat")),
                    &setup.domain.mesh2,
                    &art.solution.p2[ms],
                    t,
                )?;
                io::write_flux_csv(
                    &dir.join(format!("snap{i}_flux.csv")),
                    &setup.domain,
                    &art.solution,
                    ms,
                    mf,
                    t,
                )?;
            }
        }
    }
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(method: Method) -> ScenarioConfig {
        // ny divisible by 5 so the default Dirichlet strips (lower fifth)
        // land on mesh nodes
        ScenarioConfig {
            domain: crate::geometry::DomainSpec {
                lx: 2.0,
                ly: 1.0,
                fracture_x: 1.0,
                nx1: 6,
                nx2: 6,
                ny: 10,
            },
            m_sub: 8,
            m_frac: 8,
            method,
            alpha: if method.is_gto() {
                AlphaMode::Optimized
            } else {
                AlphaMode::Optimized // ignored for non-gto
            },
            ..Default::default()
        }
    }

    #[test]
    fn monolithic_run_completes() {
        let cfg = tiny_cfg(Method::Monolithic);
        let art = run_with(&cfg).unwrap();
        assert!(art.converged);
        assert_eq!(art.solution.p1.len(), 8);
    }

    #[test]
    fn all_iterative_methods_agree_with_monolithic() {
        let mono = run_with(&tiny_cfg(Method::Monolithic)).unwrap();
        for method in [
            Method::GtpNone,
            Method::GtpLocal,
            Method::GtpNn,
            Method::GtoJacobi,
            Method::GtoGmres,
        ] {
            let mut cfg = tiny_cfg(method);
            cfg.tol = 1e-11;
            cfg.max_iters = 400;
            let art = run_with(&cfg).unwrap();
            assert!(art.converged, "{} did not converge", method.name());
            let mut worst = 0.0f64;
            for m in 0..8 {
                for (a, b) in art.solution.p1[m].iter().zip(&mono.solution.p1[m]) {
                    worst = worst.max((a - b).abs());
                }
            }
            assert!(worst < 1e-7, "{}: off from monolithic by {worst}", method.name());
        }
    }

    #[test]
    fn zero_data_error_to_zero_run_is_trivial() {
        let mut cfg = tiny_cfg(Method::GtpLocal);
        cfg.error_to_zero = true;
        cfg.initial_guess = GuessKind::Zero;
        let art = run_with(&cfg).unwrap();
        assert!(art.converged);
        assert_eq!(art.iterations, 0);
        assert_eq!(art.report.err_p_matrix, 0.0);
    }

    #[test]
    fn error_to_zero_with_random_guess_converges() {
        let mut cfg = tiny_cfg(Method::GtoGmres);
        cfg.error_to_zero = true;
        cfg.initial_guess = GuessKind::Random;
        cfg.tol = 1e-6;
        let art = run_with(&cfg).unwrap();
        assert!(art.converged);
        assert!(art.iterations > 0);
        let last = art.report.history.last().unwrap();
        assert!(last.err_rel.unwrap() <= 1e-6);
    }

    #[test]
    fn bottom_segments_are_split_at_the_fracture() {
        let segs = [BoundarySegment {
            side: Side::Bottom,
            lo: 0.5,
            hi: 1.5,
            bc: crate::geometry::BcKind::Dirichlet(2.0),
        }];
        let (s1, s2) = route_segments(&segs, 1.0, 2.0);
        assert_eq!(s1.len(), 1);
        assert_eq!(s2.len(), 1);
        assert_eq!(s1[0].hi, 1.0);
        assert_eq!(s2[0].lo, 1.0);
    }

    #[test]
    fn deterministic_history_bytes() {
        let mut cfg = tiny_cfg(Method::GtoGmres);
        cfg.error_to_zero = true;
        cfg.initial_guess = GuessKind::Random;
        cfg.seed = 7;
        let a = run_with(&cfg).unwrap();
        let b = run_with(&cfg).unwrap();
        let csv_a = crate::harness::io::history_csv(&a.report.history, a.alpha);
        let csv_b = crate::harness::io::history_csv(&b.report.history, b.alpha);
        assert_eq!(csv_a, csv_b);
    }
}
