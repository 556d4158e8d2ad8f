//! Space-time subdomain solution operators: Dirichlet-to-Neumann, its
//! Neumann-to-Dirichlet inverse, and Ventcell-to-Robin, each sweeping a full
//! time grid with one factorized step system.
//!
//! Every operator splits into an affine part (true sources, initial state and
//! boundary values, zero interface data) and a linear part (zero data,
//! interface input only); the interface problems apply the linear part inside
//! GMRES and add the affine sweep once. The two subdomain operators are
//! independent and may be evaluated concurrently; a single operator instance
//! is not reentrant (it owns no state, but sweeps allocate scratch per call).

use std::sync::Arc;

use crate::discretize::{
    assemble_subdomain, Closure, FracturedDomain, StepScratch, StepSystem, SubdomainId,
    SubdomainState,
};
use crate::error::{Error, Result};
use crate::geometry::SubdomainMesh;
use crate::timegrid::{TimeGrid, TraceFunction};

/// View of one completed slab inside a sweep, for norm accumulation or
/// solution capture.
pub struct SlabView<'a> {
    pub slab: usize,
    pub p: &'a [f64],
    pub p_gamma: &'a [f64],
    pub iface_out: &'a [f64],
    /// Interface pressure this slab was coupled to (Dirichlet data or the
    /// Ventcell trace; for the Neumann closure, the reconstructed trace).
    pub trace: &'a [f64],
}

/// One subdomain over one time grid with one interface closure.
#[derive(Debug, Clone)]
pub struct SubdomainOperator {
    pub id: SubdomainId,
    pub grid: TimeGrid,
    pub sys: StepSystem,
    pub mesh: Arc<SubdomainMesh>,
    /// Source density per cell, constant in time.
    q: Vec<f64>,
    p0: Vec<f64>,
    p0_gamma: Vec<f64>,
}

impl SubdomainOperator {
    pub fn new(
        domain: &FracturedDomain,
        id: SubdomainId,
        grid: TimeGrid,
        closure: Closure,
        q: Vec<f64>,
        p0: Vec<f64>,
        p0_gamma: Vec<f64>,
    ) -> Result<Self> {
        let mesh = domain.mesh_arc(id);
        if q.len() != mesh.n_cells() || p0.len() != mesh.n_cells() {
            return Err(Error::Dimension(format!(
                "subdomain {:?}: q/p0 must have {} entries",
                id,
                mesh.n_cells()
            )));
        }
        if p0_gamma.len() != mesh.ny {
            return Err(Error::Dimension(format!(
                "subdomain {:?}: p0_gamma must have {} entries",
                id, mesh.ny
            )));
        }
        let sys = assemble_subdomain(domain, id, grid.dt(), closure)?;
        Ok(SubdomainOperator {
            id,
            grid,
            sys,
            mesh,
            q,
            p0,
            p0_gamma,
        })
    }

    pub fn closure(&self) -> Closure {
        self.sys.closure
    }

    fn check_grid(&self, f: &TraceFunction) -> Result<()> {
        if f.grid != self.grid {
            return Err(Error::GridMismatch(format!(
                "operator grid M={} vs data grid M={}",
                self.grid.slabs, f.grid.slabs
            )));
        }
        if f.n_space != self.sys.ny {
            return Err(Error::Dimension(format!(
                "trace has {} segments, interface has {}",
                f.n_space, self.sys.ny
            )));
        }
        Ok(())
    }

    /// Sweep all slabs. `data` supplies the interface input per slab (`None`
    /// means zero), `affine` selects real sources/initial state/boundary
    /// values. Returns the interface output trace; `visit` sees every slab.
    pub fn sweep_with(
        &self,
        data: Option<&TraceFunction>,
        affine: bool,
        visit: &mut dyn FnMut(SlabView<'_>),
    ) -> Result<TraceFunction> {
        if let Some(d) = data {
            self.check_grid(d)?;
        }
        let ny = self.sys.ny;
        let mut state = if affine {
            SubdomainState::from_initial(&self.sys, &self.p0, &self.p0_gamma)
        } else {
            SubdomainState::zeros(&self.sys)
        };
        let q = if affine { Some(&self.q[..]) } else { None };
        let zero_row = vec![0.0; ny];
        let mut out = TraceFunction::zeros(self.grid, ny);
        let mut scratch = StepScratch::default();
        let mut iface = vec![0.0; ny];
        let mut trace_buf = vec![0.0; ny];
        for m in 0..self.grid.slabs {
            let row: &[f64] = match data {
                Some(d) => d.slab(m),
                None => &zero_row,
            };
            self.sys
                .step_into(&mut state, q, row, affine, &mut scratch, &mut iface);
            out.slab_mut(m).copy_from_slice(&iface);
            let trace: &[f64] = match self.sys.closure {
                Closure::Dirichlet => row,
                Closure::Neumann => &iface, // output IS the trace
                Closure::Ventcell { .. } => {
                    trace_buf.copy_from_slice(&state.p_gamma);
                    &trace_buf
                }
            };
            visit(SlabView {
                slab: m,
                p: &state.p,
                p_gamma: &state.p_gamma,
                iface_out: &iface,
                trace,
            });
        }
        Ok(out)
    }

    pub fn sweep(&self, data: Option<&TraceFunction>, affine: bool) -> Result<TraceFunction> {
        self.sweep_with(data, affine, &mut |_| {})
    }
}

/// Dirichlet data in, integrated normal flux `u.n_i` out (one value per slab
/// and fracture segment). Linear part only; the affine flux is
/// [`SubdomainOperator::sweep`] with `data = None, affine = true`.
pub fn dtn_apply(op: &SubdomainOperator, lam: &TraceFunction) -> Result<TraceFunction> {
    expect_closure(op, Closure::Dirichlet)?;
    op.sweep(Some(lam), false)
}

/// Prescribed-flux data in (`-u.n_i = phi`, integrated per edge), pressure
/// trace out.
pub fn ntd_apply(op: &SubdomainOperator, phi: &TraceFunction) -> Result<TraceFunction> {
    expect_closure(op, Closure::Neumann)?;
    op.sweep(Some(phi), false)
}

/// Ventcell data in, Robin output `u.n_i + alpha p_{i,gamma}` (per unit
/// length) out.
pub fn vtr_apply(op: &SubdomainOperator, theta: &TraceFunction) -> Result<TraceFunction> {
    match op.closure() {
        Closure::Ventcell { .. } => op.sweep(Some(theta), false),
        other => Err(Error::Invalid(format!(
            "vtr_apply needs a Ventcell operator, got {other:?}"
        ))),
    }
}

fn expect_closure(op: &SubdomainOperator, want: Closure) -> Result<()> {
    if op.closure() != want {
        return Err(Error::Invalid(format!(
            "operator closure {:?} does not match {:?}",
            op.closure(),
            want
        )));
    }
    Ok(())
}

/// Space-time norms accumulated over one sweep, plus the interface pressure
/// trace per slab (used for the fracture-pressure error of the methods whose
/// fracture unknowns live on the subdomain grid).
#[derive(Debug, Clone)]
pub struct SweepNorms {
    /// Integral over time of the squared L2 norm of the cell pressures.
    pub p_sq: f64,
    /// Same for the recovered edge fluxes (lumped RT0 measure).
    pub u_sq: f64,
    pub trace: TraceFunction,
}

/// Sweep and accumulate space-time norms of the volume solution.
pub fn sweep_norms(
    op: &SubdomainOperator,
    data: Option<&TraceFunction>,
    affine: bool,
) -> Result<(TraceFunction, SweepNorms)> {
    let dt = op.grid.dt();
    let mesh = op.mesh.as_ref();
    let k_sub = op.sys.k_sub;
    let mut p_sq = 0.0;
    let mut u_sq = 0.0;
    let mut trace = TraceFunction::zeros(op.grid, op.sys.ny);
    let out = op.sweep_with(data, affine, &mut |sv: SlabView<'_>| {
        p_sq += dt * crate::discretize::cell_norm_sq(mesh, sv.p);
        let fl = crate::discretize::edge_fluxes(mesh, k_sub, sv.p, sv.trace, !affine);
        u_sq += dt * crate::discretize::flux_norm_sq(mesh, &fl);
        trace.slab_mut(sv.slab).copy_from_slice(sv.trace);
    })?;
    Ok((
        out,
        SweepNorms {
            p_sq,
            u_sq,
            trace,
        },
    ))
}

/// Sweep and keep the full volume solution (per-slab cell pressures and
/// interface traces).
pub fn sweep_full(
    op: &SubdomainOperator,
    data: Option<&TraceFunction>,
    affine: bool,
) -> Result<(TraceFunction, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let mut p = Vec::with_capacity(op.grid.slabs);
    let mut trace = Vec::with_capacity(op.grid.slabs);
    let out = op.sweep_with(data, affine, &mut |sv: SlabView<'_>| {
        p.push(sv.p.to_vec());
        trace.push(sv.trace.to_vec());
    })?;
    Ok((out, p, trace))
}

/// Run the two subdomain closures, concurrently when `parallel` (the sweeps
/// are independent; results are combined in a fixed order either way).
pub fn run_pair<R1, R2>(
    parallel: bool,
    f1: impl FnOnce() -> R1 + Send,
    f2: impl FnOnce() -> R2 + Send,
) -> (R1, R2)
where
    R1: Send,
    R2: Send,
{
    if parallel {
        std::thread::scope(|s| {
            let h = s.spawn(f2);
            let r1 = f1();
            (r1, h.join().expect("subdomain sweep thread panicked"))
        })
    } else {
        (f1(), f2())
    }
}
