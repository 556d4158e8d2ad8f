//! Monolithic solver of the coupled reduced model: both subdomains and the
//! fracture assembled as one SPD system per time slab. Serves as the
//! convergence oracle for the domain decomposition solvers and produces the
//! fine-time reference solution.

use crate::discretize::{
    edge_fluxes, fracture_node_fluxes, FracturedDomain, SubdomainId,
};
use crate::error::Result;
use crate::linalg::{factorize, SparseMatrix};
use crate::timegrid::{TimeGrid, TraceFunction};

/// Full coupled problem data. Monolithic solves are time-conforming: one
/// shared grid for subdomains and fracture.
#[derive(Debug, Clone)]
pub struct CoupledProblem {
    pub domain: FracturedDomain,
    pub grid: TimeGrid,
    /// Source densities per cell (constant in time).
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub p0_1: Vec<f64>,
    pub p0_2: Vec<f64>,
    pub p0_gamma: Vec<f64>,
}

impl CoupledProblem {
    /// Zero sources and initial state for the given domain and grid.
    pub fn homogeneous(domain: FracturedDomain, grid: TimeGrid) -> Self {
        let nc1 = domain.mesh1.n_cells();
        let nc2 = domain.mesh2.n_cells();
        let ny = domain.ny();
        CoupledProblem {
            domain,
            grid,
            q1: vec![0.0; nc1],
            q2: vec![0.0; nc2],
            p0_1: vec![0.0; nc1],
            p0_2: vec![0.0; nc2],
            p0_gamma: vec![0.0; ny],
        }
    }
}

/// Pressures of a space-time run: per-slab cell pressures for both
/// subdomains (with the interface trace each subdomain was coupled to) and
/// the fracture pressure. Edge and fracture fluxes are recovered on demand
/// from these fields, which keeps fine reference solutions storable.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    pub grid_sub: TimeGrid,
    pub grid_frac: TimeGrid,
    pub p1: Vec<Vec<f64>>,
    pub p2: Vec<Vec<f64>>,
    /// Interface pressure seen by each subdomain, per subdomain slab.
    pub trace1: Vec<Vec<f64>>,
    pub trace2: Vec<Vec<f64>>,
    pub p_gamma: TraceFunction,
}

impl SpaceTimeSolution {
    pub fn p_sub(&self, id: SubdomainId, m: usize) -> &[f64] {
        match id {
            SubdomainId::One => &self.p1[m],
            SubdomainId::Two => &self.p2[m],
        }
    }

    pub fn trace_sub(&self, id: SubdomainId, m: usize) -> &[f64] {
        match id {
            SubdomainId::One => &self.trace1[m],
            SubdomainId::Two => &self.trace2[m],
        }
    }
}

/// Assembled per-slab coupled matrix with the unknown layout
/// `[cells of omega1 | cells of omega2 | fracture segments]`.
struct CoupledSystem {
    nc1: usize,
    nc2: usize,
    ny: usize,
    factor: crate::linalg::Factorization,
    mass1: f64,
    mass2: f64,
    mass_g: f64,
    rhs_bc: Vec<f64>,
}

fn assemble_coupled(domain: &FracturedDomain, dt: f64) -> Result<CoupledSystem> {
    let (m1, m2, frac, phys) = (&domain.mesh1, &domain.mesh2, &domain.frac, &domain.phys);
    let nc1 = m1.n_cells();
    let nc2 = m2.n_cells();
    let ny = frac.ny;
    let n = nc1 + nc2 + ny;
    let hy = frac.hy;
    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(6 * n);
    let mut rhs_bc = vec![0.0; n];

    let add_subdomain = |mesh: &crate::geometry::SubdomainMesh,
                             k_sub: f64,
                             s_sub: f64,
                             base: usize,
                             trip: &mut Vec<(usize, usize, f64)>,
                             rhs_bc: &mut Vec<f64>| {
        let t_v = k_sub * mesh.hy / mesh.hx;
        let t_h = k_sub * mesh.hx / mesh.hy;
        let mass = s_sub * mesh.cell_area() / dt;
        for c in 0..mesh.n_cells() {
            trip.push((base + c, base + c, mass));
        }
        for e in 0..mesh.n_edges() {
            let (t_full, t_half) = if mesh.is_vertical(e) {
                (t_v, 2.0 * t_v)
            } else {
                (t_h, 2.0 * t_h)
            };
            match mesh.edge_kind(e) {
                crate::geometry::EdgeKind::Interior => {
                    let (a, b) = mesh.edge_cells(e);
                    let (a, b) = (base + a.unwrap(), base + b.unwrap());
                    trip.push((a, a, t_full));
                    trip.push((b, b, t_full));
                    trip.push((a, b, -t_full));
                    trip.push((b, a, -t_full));
                }
                crate::geometry::EdgeKind::Dirichlet(g) => {
                    let (a, b) = mesh.edge_cells(e);
                    let c = base + a.or(b).unwrap();
                    trip.push((c, c, t_half));
                    rhs_bc[c] += t_half * g;
                }
                crate::geometry::EdgeKind::Neumann(v) => {
                    let (a, b) = mesh.edge_cells(e);
                    let c = base + a.or(b).unwrap();
                    rhs_bc[c] -= v * mesh.edge_length(e);
                }
                crate::geometry::EdgeKind::Interface => {}
            }
        }
        mass
    };

    let mass1 = add_subdomain(m1, phys.k1, phys.s1, 0, &mut trip, &mut rhs_bc);
    let mass2 = add_subdomain(m2, phys.k2, phys.s2, nc1, &mut trip, &mut rhs_bc);

    // fracture rows + interface coupling
    let gbase = nc1 + nc2;
    let mass_g = phys.s_gamma * hy / dt;
    let t1 = 2.0 * phys.k1 * hy / m1.hx;
    let t2 = 2.0 * phys.k2 * hy / m2.hx;
    let t = phys.kf_delta / hy;
    let t_end = 2.0 * t;
    let iface_cell1: Vec<usize> = (0..ny).map(|k| m1.interface_cell(k)).collect();
    let iface_cell2: Vec<usize> = (0..ny).map(|k| m2.interface_cell(k)).collect();
    for k in 0..ny {
        let g = gbase + k;
        trip.push((g, g, mass_g));
        for (cell, te) in [(iface_cell1[k], t1), (nc1 + iface_cell2[k], t2)] {
            trip.push((cell, cell, te));
            trip.push((cell, g, -te));
            trip.push((g, cell, -te));
            trip.push((g, g, te));
        }
        if k + 1 < ny {
            trip.push((g, g, t));
            trip.push((g + 1, g + 1, t));
            trip.push((g, g + 1, -t));
            trip.push((g + 1, g, -t));
        }
    }
    trip.push((gbase, gbase, t_end));
    trip.push((n - 1, n - 1, t_end));
    rhs_bc[gbase] += t_end * frac.bottom_value;
    rhs_bc[n - 1] += t_end * frac.top_value;

    let matrix = SparseMatrix::from_triplets(n, n, &trip)?;
    let factor = factorize(&matrix, true)?;
    Ok(CoupledSystem {
        nc1,
        nc2,
        ny,
        factor,
        mass1,
        mass2,
        mass_g,
        rhs_bc,
    })
}

/// Solve the coupled problem over all slabs with backward Euler.
pub fn solve_monolithic(prob: &CoupledProblem) -> Result<SpaceTimeSolution> {
    let sys = assemble_coupled(&prob.domain, prob.grid.dt())?;
    let n = sys.nc1 + sys.nc2 + sys.ny;
    let area1 = prob.domain.mesh1.cell_area();
    let area2 = prob.domain.mesh2.cell_area();
    let mut state = Vec::with_capacity(n);
    state.extend_from_slice(&prob.p0_1);
    state.extend_from_slice(&prob.p0_2);
    state.extend_from_slice(&prob.p0_gamma);

    let m = prob.grid.slabs;
    let mut p1 = Vec::with_capacity(m);
    let mut p2 = Vec::with_capacity(m);
    let mut trace = Vec::with_capacity(m);
    let mut p_gamma = TraceFunction::zeros(prob.grid, sys.ny);
    let mut rhs = vec![0.0; n];
    let mut sol = Vec::new();
    for slab in 0..m {
        for c in 0..sys.nc1 {
            rhs[c] = sys.mass1 * state[c] + prob.q1[c] * area1 + sys.rhs_bc[c];
        }
        for c in 0..sys.nc2 {
            let i = sys.nc1 + c;
            rhs[i] = sys.mass2 * state[i] + prob.q2[c] * area2 + sys.rhs_bc[i];
        }
        for k in 0..sys.ny {
            let i = sys.nc1 + sys.nc2 + k;
            rhs[i] = sys.mass_g * state[i] + sys.rhs_bc[i];
        }
        sys.factor.solve_into(&rhs, &mut sol);
        p1.push(sol[..sys.nc1].to_vec());
        p2.push(sol[sys.nc1..sys.nc1 + sys.nc2].to_vec());
        let gam = &sol[sys.nc1 + sys.nc2..];
        trace.push(gam.to_vec());
        p_gamma.slab_mut(slab).copy_from_slice(gam);
        state.copy_from_slice(&sol);
    }
    Ok(SpaceTimeSolution {
        grid_sub: prob.grid,
        grid_frac: prob.grid,
        p1,
        p2,
        trace1: trace.clone(),
        trace2: trace,
        p_gamma,
    })
}

/// Weighted squared-storage norms `E_m = sum s |cell| p_m^2 + s_gamma hy
/// lambda_m^2` per slab. For homogeneous data backward Euler makes this
/// sequence nonincreasing; callers assert that.
pub fn energy_diagnostic(sol: &SpaceTimeSolution, domain: &FracturedDomain) -> Vec<f64> {
    assert_eq!(sol.grid_sub, sol.grid_frac, "energy needs a conforming run");
    let a1 = domain.mesh1.cell_area() * domain.phys.s1;
    let a2 = domain.mesh2.cell_area() * domain.phys.s2;
    let ag = domain.frac.hy * domain.phys.s_gamma;
    (0..sol.grid_sub.slabs)
        .map(|m| {
            let e1: f64 = sol.p1[m].iter().map(|v| a1 * v * v).sum();
            let e2: f64 = sol.p2[m].iter().map(|v| a2 * v * v).sum();
            let eg: f64 = sol.p_gamma.slab(m).iter().map(|v| ag * v * v).sum();
            e1 + e2 + eg
        })
        .collect()
}

/// Relative global balance residual over the whole run: storage change plus
/// time-integrated boundary outflux (exterior edges and fracture endpoints)
/// minus time-integrated sources, scaled by the largest term.
pub fn global_balance_residual(sol: &SpaceTimeSolution, prob: &CoupledProblem) -> f64 {
    let domain = &prob.domain;
    let dt = sol.grid_sub.dt();
    assert_eq!(sol.grid_sub, sol.grid_frac);
    let mut storage = 0.0;
    let mut outflux = 0.0;
    let mut source = 0.0;
    for (id, q, p, p0) in [
        (SubdomainId::One, &prob.q1, &sol.p1, &prob.p0_1),
        (SubdomainId::Two, &prob.q2, &sol.p2, &prob.p0_2),
    ] {
        let mesh = domain.mesh(id);
        let s = domain.phys.storage(id);
        let k = domain.phys.permeability(id);
        let area = mesh.cell_area();
        let last = p.last().unwrap();
        for c in 0..mesh.n_cells() {
            storage += s * area * (last[c] - p0[c]);
        }
        source += q.iter().sum::<f64>() * area * sol.grid_sub.t_final;
        for m in 0..sol.grid_sub.slabs {
            let fluxes = edge_fluxes(mesh, k, &p[m], sol.trace_sub(id, m), false);
            for e in 0..mesh.n_edges() {
                let out_sign = match mesh.edge_kind(e) {
                    crate::geometry::EdgeKind::Dirichlet(_) | crate::geometry::EdgeKind::Neumann(_) => {
                        let (a, _) = mesh.edge_cells(e);
                        if a.is_some() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                    _ => continue,
                };
                outflux += dt * out_sign * fluxes[e] * mesh.edge_length(e);
            }
        }
    }
    let hy = domain.frac.hy;
    let sg = domain.phys.s_gamma;
    let last = sol.p_gamma.slab(sol.grid_frac.slabs - 1);
    for k in 0..domain.ny() {
        storage += sg * hy * (last[k] - prob.p0_gamma[k]);
    }
    for m in 0..sol.grid_frac.slabs {
        let nf = fracture_node_fluxes(&domain.frac, domain.phys.kf_delta, sol.p_gamma.slab(m), false);
        outflux += dt * (nf[domain.ny()] - nf[0]);
    }
    let scale = storage.abs().max(outflux.abs()).max(source.abs()).max(1e-300);
    (storage + outflux - source).abs() / scale
}
