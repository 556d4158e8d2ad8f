//! The time-grid comparison study: three time grids (conforming coarse,
//! nonconforming, conforming fine) crossed with the three fast solvers, all
//! measured against one fine-grid monolithic reference.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::config::{Method, ScenarioConfig};
use crate::harness::errors::compute_errors;
use crate::harness::run::{build_setup, run_with};
use crate::monolithic::{solve_monolithic, SpaceTimeSolution};

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub method: Method,
    pub grid_label: &'static str,
    pub m_sub: usize,
    pub m_frac: usize,
    pub iterations: usize,
    pub converged: bool,
    pub err_p_matrix: f64,
    pub err_u_matrix: f64,
    pub err_p_fracture: f64,
    pub alpha: Option<f64>,
}

pub struct StudyOutcome {
    pub rows: Vec<StudyRow>,
    pub reference: SpaceTimeSolution,
}

/// Run the study on top of a base configuration (geometry, physics and
/// boundary data are taken from it). `coarse`/`fine` are the subdomain and
/// fracture slab counts of the three grids; the reference is a monolithic
/// solve with `ref_slabs` slabs.
pub fn time_grid_study(
    base: &ScenarioConfig,
    coarse: usize,
    fine: usize,
    ref_slabs: usize,
) -> Result<StudyOutcome> {
    if coarse == 0 || fine % coarse != 0 || ref_slabs % fine != 0 {
        return Err(Error::Config(format!(
            "study grids must nest: coarse={coarse}, fine={fine}, reference={ref_slabs}"
        )));
    }
    // reference: conforming monolithic on the fine reference grid
    let mut ref_cfg = base.clone();
    ref_cfg.method = Method::Monolithic;
    ref_cfg.error_to_zero = false;
    ref_cfg.m_sub = ref_slabs;
    ref_cfg.m_frac = ref_slabs;
    let ref_setup = build_setup(&ref_cfg)?;
    let reference = solve_monolithic(&ref_setup.coupled_problem())?;

    let grids: [(&'static str, usize, usize); 3] = [
        ("conforming-coarse", coarse, coarse),
        ("nonconforming", coarse, fine),
        ("conforming-fine", fine, fine),
    ];
    let methods = [Method::GtpLocal, Method::GtpNn, Method::GtoGmres];
    let mut rows = Vec::with_capacity(9);
    for (label, m_sub, m_frac) in grids {
        for method in methods {
            let mut cfg = base.clone();
            cfg.method = method;
            cfg.m_sub = m_sub;
            cfg.m_frac = m_frac;
            cfg.error_to_zero = false;
            cfg.initial_guess = crate::harness::config::GuessKind::Zero;
            let art = run_with(&cfg)?;
            let errs = compute_errors(&art.solution, &reference, &ref_setup.domain)?;
            rows.push(StudyRow {
                method,
                grid_label: label,
                m_sub,
                m_frac,
                iterations: art.iterations,
                converged: art.converged,
                err_p_matrix: errs.err_p_matrix,
                err_u_matrix: errs.err_u_matrix,
                err_p_fracture: errs.err_p_fracture,
                alpha: art.alpha,
            });
        }
    }
    Ok(StudyOutcome { rows, reference })
}

pub fn study_csv(rows: &[StudyRow]) -> String {
    let mut out = String::from(
        "method,grid,m_sub,m_frac,iterations,converged,err_p_matrix,err_u_matrix,err_p_fracture,alpha\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:e},{:e},{:e},{}",
            r.method.name(),
            r.grid_label,
            r.m_sub,
            r.m_frac,
            r.iterations,
            r.converged,
            r.err_p_matrix,
            r.err_u_matrix,
            r.err_p_fracture,
            r.alpha.map(|a| format!("{a:e}")).unwrap_or_default(),
        );
    }
    out
}
