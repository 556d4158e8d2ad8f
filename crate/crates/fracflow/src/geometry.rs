//! Rectangular two-subdomain geometry with a vertical interface fracture.
//!
//! The domain `(0,Lx) x (0,Ly)` is split by the vertical line `x =
//! fracture_x` into two uniform rectangular cell meshes, plus a 1D chain of
//! fracture segments along the line. Only vertical fractures lying exactly on
//! a mesh line are supported; the interface is spatially conforming, so
//! interface edge `k` of either subdomain and fracture segment `k` share the
//! same endpoints.
//!
//! Edge indexing is lexicographic and stable: vertical edges first
//! (column-major, `ie*ny + iy` for `ie in 0..=nx`), then horizontal edges
//! (row-major, `nv + je*nx + ix` for `je in 0..=ny`). Every edge carries a
//! global orientation (+x for vertical edges, +y for horizontal); the
//! incidence sign `sigma(c,e)` is +1 where that direction points out of the
//! cell.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Classification of a mesh edge. `Dirichlet`/`Neumann` carry the boundary
/// value (pressure, resp. outward normal flux per unit length).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeKind {
    Interior,
    Dirichlet(f64),
    Neumann(f64),
    Interface,
}

/// Boundary condition requested on part of an exterior side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    Dirichlet(f64),
    Neumann(f64),
}

/// A span `[lo, hi]` of an exterior side (y-range for Left/Right, absolute
/// x-range for Bottom/Top) with the condition to impose there.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySegment {
    pub side: Side,
    pub lo: f64,
    pub hi: f64,
    pub bc: BcKind,
}

#[derive(Debug, Clone, Copy)]
pub struct DomainSpec {
    pub lx: f64,
    pub ly: f64,
    pub fracture_x: f64,
    pub nx1: usize,
    pub nx2: usize,
    pub ny: usize,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lx > 0.0 && self.ly > 0.0) {
            return Err(Error::Geometry(format!(
                "domain extents must be positive, got lx={} ly={}",
                self.lx, self.ly
            )));
        }
        if self.nx1 == 0 || self.nx2 == 0 || self.ny == 0 {
            return Err(Error::Geometry(format!(
                "cell counts must be >= 1, got nx1={} nx2={} ny={}",
                self.nx1, self.nx2, self.ny
            )));
        }
        if !(self.fracture_x > 0.0 && self.fracture_x < self.lx) {
            return Err(Error::Geometry(format!(
                "fracture_x={} must lie strictly inside (0,{})",
                self.fracture_x, self.lx
            )));
        }
        let on_line = self.lx * self.nx1 as f64 / (self.nx1 + self.nx2) as f64;
        if (self.fracture_x - on_line).abs() > 1e-12 * self.lx {
            return Err(Error::Geometry(format!(
                "fracture_x={} is not on a mesh line (expected {} for nx1={}, nx2={})",
                self.fracture_x, on_line, self.nx1, self.nx2
            )));
        }
        Ok(())
    }
}

/// Uniform rectangular cell mesh of one subdomain.
///
/// Cells are indexed column-major: `cell = ix*ny + iy`.
#[derive(Debug, Clone)]
pub struct SubdomainMesh {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// x coordinate of the left mesh boundary.
    pub x0: f64,
    /// Which side of this mesh touches the fracture.
    pub interface_side: Side,
    edge_kind: Vec<EdgeKind>,
}

impl SubdomainMesh {
    fn new(nx: usize, ny: usize, hx: f64, hy: f64, x0: f64, interface_side: Side) -> Self {
        assert!(matches!(interface_side, Side::Left | Side::Right));
        let n_edges = (nx + 1) * ny + (ny + 1) * nx;
        let mut mesh = SubdomainMesh {
            nx,
            ny,
            hx,
            hy,
            x0,
            interface_side,
            edge_kind: vec![EdgeKind::Interior; n_edges],
        };
        for e in 0..n_edges {
            if mesh.is_interface_edge(e) {
                mesh.edge_kind[e] = EdgeKind::Interface;
            } else if mesh.edge_cells(e).0.is_none() || mesh.edge_cells(e).1.is_none() {
                mesh.edge_kind[e] = EdgeKind::Neumann(0.0); // no-flow default
            }
        }
        mesh
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_edges(&self) -> usize {
        self.edge_kind.len()
    }

    fn n_vertical(&self) -> usize {
        (self.nx + 1) * self.ny
    }

    pub fn cell_id(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        ix * self.ny + iy
    }

    pub fn cell_center(&self, c: usize) -> (f64, f64) {
        let ix = c / self.ny;
        let iy = c % self.ny;
        (
            self.x0 + (ix as f64 + 0.5) * self.hx,
            (iy as f64 + 0.5) * self.hy,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn vertical_edge(&self, ie: usize, iy: usize) -> usize {
        debug_assert!(ie <= self.nx && iy < self.ny);
        ie * self.ny + iy
    }

    pub fn horizontal_edge(&self, ix: usize, je: usize) -> usize {
        debug_assert!(ix < self.nx && je <= self.ny);
        self.n_vertical() + je * self.nx + ix
    }

    pub fn is_vertical(&self, e: usize) -> bool {
        e < self.n_vertical()
    }

    /// Length of the edge (hy for vertical edges, hx for horizontal).
    pub fn edge_length(&self, e: usize) -> f64 {
        if self.is_vertical(e) {
            self.hy
        } else {
            self.hx
        }
    }

    pub fn edge_kind(&self, e: usize) -> EdgeKind {
        self.edge_kind[e]
    }

    /// Cells on the (negative, positive) side of the edge's global normal.
    pub fn edge_cells(&self, e: usize) -> (Option<usize>, Option<usize>) {
        if self.is_vertical(e) {
            let ie = e / self.ny;
            let iy = e % self.ny;
            let lo = if ie > 0 {
                Some(self.cell_id(ie - 1, iy))
            } else {
                None
            };
            let hi = if ie < self.nx {
                Some(self.cell_id(ie, iy))
            } else {
                None
            };
            (lo, hi)
        } else {
            let k = e - self.n_vertical();
            let je = k / self.nx;
            let ix = k % self.nx;
            let lo = if je > 0 {
                Some(self.cell_id(ix, je - 1))
            } else {
                None
            };
            let hi = if je < self.ny {
                Some(self.cell_id(ix, je))
            } else {
                None
            };
            (lo, hi)
        }
    }

    /// The four edges of a cell with incidence signs sigma(c,e).
    pub fn cell_edges(&self, c: usize) -> [(usize, i8); 4] {
        let ix = c / self.ny;
        let iy = c % self.ny;
        [
            (self.vertical_edge(ix, iy), -1),
            (self.vertical_edge(ix + 1, iy), 1),
            (self.horizontal_edge(ix, iy), -1),
            (self.horizontal_edge(ix, iy + 1), 1),
        ]
    }

    pub fn edge_midpoint(&self, e: usize) -> (f64, f64) {
        if self.is_vertical(e) {
            let ie = e / self.ny;
            let iy = e % self.ny;
            (self.x0 + ie as f64 * self.hx, (iy as f64 + 0.5) * self.hy)
        } else {
            let k = e - self.n_vertical();
            let je = k / self.nx;
            let ix = k % self.nx;
            (
                self.x0 + (ix as f64 + 0.5) * self.hx,
                je as f64 * self.hy,
            )
        }
    }

    pub fn is_interface_edge(&self, e: usize) -> bool {
        if !self.is_vertical(e) {
            return false;
        }
        let ie = e / self.ny;
        match self.interface_side {
            Side::Left => ie == 0,
            Side::Right => ie == self.nx,
            _ => unreachable!(),
        }
    }

    /// Interface edge ids ordered bottom to top (`k = 0..ny`).
    pub fn interface_edge(&self, k: usize) -> usize {
        debug_assert!(k < self.ny);
        match self.interface_side {
            Side::Left => self.vertical_edge(0, k),
            Side::Right => self.vertical_edge(self.nx, k),
            _ => unreachable!(),
        }
    }

    /// Cell adjacent to interface edge `k`.
    pub fn interface_cell(&self, k: usize) -> usize {
        debug_assert!(k < self.ny);
        match self.interface_side {
            Side::Left => self.cell_id(0, k),
            Side::Right => self.cell_id(self.nx - 1, k),
            _ => unreachable!(),
        }
    }

    /// Sign of the global edge normal (+x) relative to the outward normal of
    /// this subdomain on the interface: +1 for the left subdomain, -1 for the
    /// right one.
    pub fn interface_outward_sign(&self) -> f64 {
        match self.interface_side {
            Side::Right => 1.0,
            Side::Left => -1.0,
            _ => unreachable!(),
        }
    }

    /// Classify exterior boundary edges. Unlisted exterior edges keep their
    /// current classification (no-flow by default). Segments must align with
    /// mesh nodes; overlapping segments that disagree are rejected.
    pub fn with_boundary_segments(mut self, segments: &[BoundarySegment]) -> Result<Self> {
        let mut assigned: Vec<Option<BcKind>> = vec![None; self.n_edges()];
        for (si, seg) in segments.iter().enumerate() {
            if seg.side == self.interface_side {
                return Err(Error::Geometry(format!(
                    "segment {si}: side {:?} is the fracture interface, not an exterior boundary",
                    seg.side
                )));
            }
            if !(seg.lo < seg.hi) {
                return Err(Error::Geometry(format!(
                    "segment {si}: empty range [{}, {}]",
                    seg.lo, seg.hi
                )));
            }
            let (h, offset, count, extent) = match seg.side {
                Side::Left | Side::Right => (self.hy, 0.0, self.ny, self.ny as f64 * self.hy),
                Side::Bottom | Side::Top => (self.hx, self.x0, self.nx, self.nx as f64 * self.hx),
            };
            let snap = |v: f64, what: &str| -> Result<usize> {
                let t = (v - offset) / h;
                let j = t.round();
                if (t - j).abs() > 1e-9 * count as f64 || j < 0.0 || j > count as f64 {
                    return Err(Error::Geometry(format!(
                        "segment {si}: {what}={v} does not align with a mesh node (spacing {h})"
                    )));
                }
                Ok(j as usize)
            };
            let _ = extent;
            let j_lo = snap(seg.lo, "lo")?;
            let j_hi = snap(seg.hi, "hi")?;
            for j in j_lo..j_hi {
                let e = match seg.side {
                    Side::Left => self.vertical_edge(0, j),
                    Side::Right => self.vertical_edge(self.nx, j),
                    Side::Bottom => self.horizontal_edge(j, 0),
                    Side::Top => self.horizontal_edge(j, self.ny),
                };
                if let Some(prev) = assigned[e] {
                    if prev != seg.bc {
                        return Err(Error::Geometry(format!(
                            "segment {si}: contradicts an earlier segment on edge {e} ({prev:?} vs {:?})",
                            seg.bc
                        )));
                    }
                }
                assigned[e] = Some(seg.bc);
                self.edge_kind[e] = match seg.bc {
                    BcKind::Dirichlet(v) => EdgeKind::Dirichlet(v),
                    BcKind::Neumann(v) => EdgeKind::Neumann(v),
                };
            }
        }
        Ok(self)
    }

    /// Replace every boundary value by zero, keeping the classification.
    /// Used to build the homogeneous problem that drives error-to-zero runs.
    pub fn with_zeroed_boundary_values(mut self) -> Self {
        for kind in self.edge_kind.iter_mut() {
            *kind = match *kind {
                EdgeKind::Dirichlet(_) => EdgeKind::Dirichlet(0.0),
                EdgeKind::Neumann(_) => EdgeKind::Neumann(0.0),
                other => other,
            };
        }
        self
    }
}

/// The 1D fracture mesh: `ny` segments of length `hy` along the interface,
/// with Dirichlet pressure values at the two endpoints (the reduced model
/// prescribes zero there; experiments may impose a pressure drop).
#[derive(Debug, Clone)]
pub struct FractureMesh {
    pub ny: usize,
    pub hy: f64,
    pub x: f64,
    pub bottom_value: f64,
    pub top_value: f64,
}

impl FractureMesh {
    pub fn n_segments(&self) -> usize {
        self.ny
    }

    pub fn segment_center(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.hy
    }

    pub fn with_endpoint_values(mut self, bottom: f64, top: f64) -> Self {
        self.bottom_value = bottom;
        self.top_value = top;
        self
    }

    pub fn with_zeroed_endpoints(self) -> Self {
        self.with_endpoint_values(0.0, 0.0)
    }
}

/// Build the two subdomain meshes and the fracture mesh from a domain spec.
///
/// Subdomain 1 is left of the fracture, subdomain 2 right of it; interface
/// edge `k` of either mesh and fracture segment `k` have identical endpoints.
pub fn build_meshes(spec: &DomainSpec) -> Result<(SubdomainMesh, SubdomainMesh, FractureMesh)> {
    spec.validate()?;
    let hx = spec.lx / (spec.nx1 + spec.nx2) as f64;
    let hy = spec.ly / spec.ny as f64;
    let mesh1 = SubdomainMesh::new(spec.nx1, spec.ny, hx, hy, 0.0, Side::Right);
    let mesh2 = SubdomainMesh::new(spec.nx2, spec.ny, hx, hy, spec.fracture_x, Side::Left);
    let frac = FractureMesh {
        ny: spec.ny,
        hy,
        x: spec.fracture_x,
        bottom_value: 0.0,
        top_value: 0.0,
    };
    Ok((mesh1, mesh2, frac))
}
