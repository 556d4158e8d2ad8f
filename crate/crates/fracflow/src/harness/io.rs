//! Artifact emitters: per-iteration history CSV, run summary CSV, field
//! snapshots (plain-text grids), flux tables, and the portable text format
//! for reference solutions. All output is plain text with deterministic
//! formatting, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::discretize::{edge_fluxes, fracture_node_fluxes, FracturedDomain, SubdomainId};
use crate::error::{Error, Result};
use crate::geometry::SubdomainMesh;
use crate::monolithic::SpaceTimeSolution;
use crate::schur::IterationRecord;
use crate::timegrid::{TimeGrid, TraceFunction};

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// `iter,rel_residual,err_p_matrix,err_u_matrix,err_p_fracture,err_rel[,alpha]`
/// with empty error fields when no reference was tracked.
pub fn history_csv(records: &[IterationRecord], alpha: Option<f64>) -> String {
    let mut out = String::new();
    out.push_str("iter,rel_residual,err_p_matrix,err_u_matrix,err_p_fracture,err_rel");
    if alpha.is_some() {
        out.push_str(",alpha");
    }
    out.push('\n');
    for r in records {
        let _ = write!(
            out,
            "{},{:e},{},{},{},{}",
            r.iter,
            r.rel_residual,
            fmt_opt(r.err_p_matrix),
            fmt_opt(r.err_u_matrix),
            fmt_opt(r.err_p_fracture),
            fmt_opt(r.err_rel),
        );
        if let Some(a) = alpha {
            let _ = write!(out, ",{a:e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_history_csv(
    path: &Path,
    records: &[IterationRecord],
    alpha: Option<f64>,
) -> Result<()> {
    std::fs::write(path, history_csv(records, alpha))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub method: &'static str,
    pub m_sub: usize,
    pub m_frac: usize,
    pub iterations: usize,
    pub converged: bool,
    pub err_p_matrix: Option<f64>,
    pub err_u_matrix: Option<f64>,
    pub err_p_fracture: Option<f64>,
    pub alpha: Option<f64>,
    pub wall_seconds: f64,
}

pub fn summary_csv(s: &RunSummary) -> String {
    format!(
        "method,m_sub,m_frac,iterations,converged,err_p_matrix,err_u_matrix,err_p_fracture,alpha,wall_seconds\n{},{},{},{},{},{},{},{},{},{:.3}\n",
        s.method,
        s.m_sub,
        s.m_frac,
        s.iterations,
        s.converged,
        fmt_opt(s.err_p_matrix),
        fmt_opt(s.err_u_matrix),
        fmt_opt(s.err_p_fracture),
        fmt_opt(s.alpha),
        s.wall_seconds,
    )
}

/// Plain-text cell field: header `nx ny hx hy t`, then `ny` rows (bottom to
/// top) of `nx` values (left to right).
pub fn write_field_snapshot(
    path: &Path,
    mesh: &SubdomainMesh,
    p: &[f64],
    t: f64,
) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{} {} {:e} {:e} {:e}", mesh.nx, mesh.ny, mesh.hx, mesh.hy, t)?;
    for iy in 0..mesh.ny {
        let mut line = String::new();
        for ix in 0..mesh.nx {
            if ix > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{:e}", p[mesh.cell_id(ix, iy)]);
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Flux table: `x,y,orientation,flux` per edge (orientation v = +x normal,
/// h = +y normal), plus fracture node rows with orientation f.
pub fn write_flux_csv(
    path: &Path,
    domain: &FracturedDomain,
    sol: &SpaceTimeSolution,
    slab_sub: usize,
    slab_frac: usize,
    t: f64,
) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    writeln!(w, "# t = {t:e}")?;
    writeln!(w, "x,y,orientation,flux")?;
    for id in [SubdomainId::One, SubdomainId::Two] {
        let mesh = domain.mesh(id);
        let fluxes = edge_fluxes(
            mesh,
            domain.phys.permeability(id),
            sol.p_sub(id, slab_sub),
            sol.trace_sub(id, slab_sub),
            false,
        );
        for e in 0..mesh.n_edges() {
            let (x, y) = mesh.edge_midpoint(e);
            let o = if mesh.is_vertical(e) { 'v' } else { 'h' };
            writeln!(w, "{x:e},{y:e},{o},{:e}", fluxes[e])?;
        }
    }
    let nf = fracture_node_fluxes(
        &domain.frac,
        domain.phys.kf_delta,
        sol.p_gamma.slab(slab_frac),
        false,
    );
    for (j, v) in nf.iter().enumerate() {
        let y = j as f64 * domain.frac.hy;
        writeln!(w, "{:e},{y:e},f,{v:e}", domain.frac.x)?;
    }
    Ok(())
}

const REFERENCE_MAGIC: &str = "fracflow-reference 1";

/// Portable text format for reference solutions: a magic line, one header
/// line `nx1 nx2 ny m_sub m_frac lx ly fracture_x t_final`, then row-major
/// float blocks (one slab per line): p1, p2, trace1, trace2 over the
/// subdomain grid and p_gamma over the fracture grid.
pub fn write_reference(path: &Path, sol: &SpaceTimeSolution, domain: &FracturedDomain) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    writeln!(w, "{REFERENCE_MAGIC}")?;
    writeln!(
        w,
        "{} {} {} {} {} {:e} {:e} {:e} {:e}",
        domain.mesh1.nx,
        domain.mesh2.nx,
        domain.ny(),
        sol.grid_sub.slabs,
        sol.grid_frac.slabs,
        domain.mesh1.nx as f64 * domain.mesh1.hx + domain.mesh2.nx as f64 * domain.mesh2.hx,
        domain.ny() as f64 * domain.frac.hy,
        domain.frac.x,
        sol.grid_sub.t_final
    )?;
    let mut dump = |rows: &[Vec<f64>]| -> Result<()> {
        for row in rows {
            let mut line = String::with_capacity(row.len() * 20);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{v:e}");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    };
    dump(&sol.p1)?;
    dump(&sol.p2)?;
    dump(&sol.trace1)?;
    dump(&sol.trace2)?;
    for m in 0..sol.grid_frac.slabs {
        let row = sol.p_gamma.slab(m);
        let mut line = String::with_capacity(row.len() * 20);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v:e}");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_reference(path: &Path) -> Result<SpaceTimeSolution> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open reference {}: {e}", path.display())))?;
    let mut lines = std::io::BufReader::new(f).lines();
    let mut next_line = || -> Result<String> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| Error::Config("reference file truncated".into()))
    };
    let magic = next_line()?;
    if magic.trim() != REFERENCE_MAGIC {
        return Err(Error::Config(format!(
            "not a reference file (bad magic '{magic}')"
        )));
    }
    let header = next_line()?;
    let h: Vec<f64> = header
        .split_whitespace()
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("bad reference header field '{v}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    if h.len() != 9 {
        return Err(Error::Config(format!(
            "reference header needs 9 fields, got {}",
            h.len()
        )));
    }
    let (nx1, nx2, ny) = (h[0] as usize, h[1] as usize, h[2] as usize);
    let (m_sub, m_frac) = (h[3] as usize, h[4] as usize);
    let t_final = h[8];
    let grid_sub = TimeGrid::new(t_final, m_sub)?;
    let grid_frac = TimeGrid::new(t_final, m_frac)?;
    let mut block = |count: usize, width: usize| -> Result<Vec<Vec<f64>>> {
        let mut rows = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next_line()?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad reference value '{v}'")))
                })
                .collect::<Result<Vec<_>>>()?;
            if row.len() != width {
                return Err(Error::Config(format!(
                    "reference row has {} values, expected {width}",
                    row.len()
                )));
            }
            rows.push(row);
        }
        Ok(rows)
    };
    let p1 = block(m_sub, nx1 * ny)?;
    let p2 = block(m_sub, nx2 * ny)?;
    let trace1 = block(m_sub, ny)?;
    let trace2 = block(m_sub, ny)?;
    let pg_rows = block(m_frac, ny)?;
    let p_gamma = TraceFunction::from_rows(grid_frac, ny, pg_rows.concat())?;
    Ok(SpaceTimeSolution {
        grid_sub,
        grid_frac,
        p1,
        p2,
        trace1,
        trace2,
        p_gamma,
    })
}
