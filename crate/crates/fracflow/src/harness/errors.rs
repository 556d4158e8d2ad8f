//! Space-time error metrics between a computed and a reference solution.
//!
//! Both runs share the spatial meshes; the time grids may differ. Piecewise
//! constants in time are compared exactly on the merged breakpoint partition
//! (P0 injection to the common refinement is exact), so no quadrature error
//! enters: per merged interval the squared spatial norms of the differences
//! are accumulated with the interval length.

use crate::discretize::{cell_norm_sq, edge_fluxes, flux_norm_sq, FracturedDomain, SubdomainId};
use crate::error::{Error, Result};
use crate::monolithic::SpaceTimeSolution;
use crate::schur::IterationRecord;
use crate::timegrid::TimeGrid;

#[derive(Debug, Clone, Default)]
pub struct ErrorReport {
    /// L2(0,T; L2(Omega1 u Omega2)) pressure error.
    pub err_p_matrix: f64,
    /// Space-time error of the recovered fluxes (lumped RT0 measure).
    pub err_u_matrix: f64,
    /// L2(0,T; L2(gamma)) fracture pressure error.
    pub err_p_fracture: f64,
    pub history: Vec<IterationRecord>,
}

/// Merged refinement of two uniform grids: (interval length, slab in a,
/// slab in b) triples covering (0,T).
pub fn merged_intervals(a: TimeGrid, b: TimeGrid) -> Vec<(f64, usize, usize)> {
    let ma = a.slabs as u64;
    let mb = b.slabs as u64;
    // breakpoints live on the lattice of unit T/(ma*mb)
    let unit = a.t_final / (ma * mb) as f64;
    let mut out = Vec::with_capacity((ma + mb) as usize);
    let mut t = 0u64; // lattice position
    let end = ma * mb;
    while t < end {
        let ia = t / mb; // current slab in a
        let ib = t / ma;
        let next = ((ia + 1) * mb).min((ib + 1) * ma);
        out.push(((next - t) as f64 * unit, ia as usize, ib as usize));
        t = next;
    }
    out
}

/// L2-in-space-and-time errors between two runs on the same meshes.
pub fn compute_errors(
    sol: &SpaceTimeSolution,
    reference: &SpaceTimeSolution,
    domain: &FracturedDomain,
) -> Result<ErrorReport> {
    for (id, a, b) in [
        (SubdomainId::One, &sol.p1, &reference.p1),
        (SubdomainId::Two, &sol.p2, &reference.p2),
    ] {
        let nc = domain.mesh(id).n_cells();
        if a[0].len() != nc || b[0].len() != nc {
            return Err(Error::Dimension(format!(
                "solutions live on different meshes ({} vs {} vs {} cells)",
                a[0].len(),
                b[0].len(),
                nc
            )));
        }
    }
    if (sol.grid_sub.t_final - reference.grid_sub.t_final).abs()
        > 1e-12 * sol.grid_sub.t_final
    {
        return Err(Error::GridMismatch(
            "solutions cover different time windows".into(),
        ));
    }

    let mut p_sq = 0.0;
    let mut u_sq = 0.0;
    let ny = domain.ny();
    let mut dp = Vec::new();
    let mut dtrace = vec![0.0; ny];
    for (len, ma, mb) in merged_intervals(sol.grid_sub, reference.grid_sub) {
        for id in [SubdomainId::One, SubdomainId::Two] {
            let mesh = domain.mesh(id);
            let a = sol.p_sub(id, ma);
            let b = reference.p_sub(id, mb);
            dp.clear();
            dp.extend(a.iter().zip(b).map(|(x, y)| x - y));
            for k in 0..ny {
                dtrace[k] = sol.trace_sub(id, ma)[k] - reference.trace_sub(id, mb)[k];
            }
            p_sq += len * cell_norm_sq(mesh, &dp);
            let df = edge_fluxes(
                mesh,
                domain.phys.permeability(id),
                &dp,
                &dtrace,
                true, // boundary data cancels in the difference
            );
            u_sq += len * flux_norm_sq(mesh, &df);
        }
    }

    let mut g_sq = 0.0;
    for (len, ma, mb) in merged_intervals(sol.grid_frac, reference.grid_frac) {
        let a = sol.p_gamma.slab(ma);
        let b = reference.p_gamma.slab(mb);
        let s: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum();
        g_sq += len * s * domain.frac.hy;
    }

    Ok(ErrorReport {
        err_p_matrix: p_sq.sqrt(),
        err_u_matrix: u_sq.sqrt(),
        err_p_fracture: g_sq.sqrt(),
        history: Vec::new(),
    })
}
