//! Uniform time partitions, piecewise-constant space-time trace functions on
//! the fracture, and the L2 projections between two time grids.
//!
//! Slab `m` of a grid with `slabs = M` is the interval `(t_{m-1}, t_m]` with
//! `t_m = m*T/M`. All interface unknowns are piecewise constant in time and
//! piecewise constant per fracture segment, stored slab-major.
//!
//! Projection weights are computed from integer slab overlaps on the common
//! lattice of granularity `T/(M_src*M_dst)`, so averaging is exact up to one
//! final floating multiply and conservation holds to rounding.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_final: f64,
    pub slabs: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, slabs: usize) -> Result<Self> {
        if !(t_final > 0.0) || slabs == 0 {
            return Err(Error::Invalid(format!(
                "time grid needs t_final > 0 and at least one slab, got T={t_final}, M={slabs}"
            )));
        }
        Ok(TimeGrid { t_final, slabs })
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.slabs as f64
    }

    /// End time of slab `m` (1-based in the math, 0-based here: slab index
    /// `m` in `0..slabs` ends at `(m+1)*dt`).
    pub fn t_end(&self, m: usize) -> f64 {
        (m + 1) as f64 * self.dt()
    }

    /// Index of the slab containing time `t` (clamped to the grid).
    pub fn slab_containing(&self, t: f64) -> usize {
        let m = (t / self.dt()).ceil() as isize - 1;
        m.clamp(0, self.slabs as isize - 1) as usize
    }

    fn same_horizon(&self, other: &TimeGrid) -> Result<()> {
        if (self.t_final - other.t_final).abs() > 1e-12 * self.t_final.abs() {
            return Err(Error::GridMismatch(format!(
                "final times differ: {} vs {}",
                self.t_final, other.t_final
            )));
        }
        Ok(())
    }
}

/// A function on the space-time interface: one value per (time slab,
/// fracture segment), constant on each.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFunction {
    pub grid: TimeGrid,
    pub n_space: usize,
    values: Vec<f64>,
}

impl TraceFunction {
    pub fn zeros(grid: TimeGrid, n_space: usize) -> Self {
        TraceFunction {
            grid,
            n_space,
            values: vec![0.0; grid.slabs * n_space],
        }
    }

    pub fn from_rows(grid: TimeGrid, n_space: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.slabs * n_space {
            return Err(Error::Dimension(format!(
                "trace needs {}x{} = {} values, got {}",
                grid.slabs,
                n_space,
                grid.slabs * n_space,
                values.len()
            )));
        }
        Ok(TraceFunction {
            grid,
            n_space,
            values,
        })
    }

    pub fn slab(&self, m: usize) -> &[f64] {
        &self.values[m * self.n_space..(m + 1) * self.n_space]
    }

    pub fn slab_mut(&mut self, m: usize) -> &mut [f64] {
        &mut self.values[m * self.n_space..(m + 1) * self.n_space]
    }

    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    /// Integral over (0,T) per fracture segment.
    pub fn time_integral(&self) -> Vec<f64> {
        let dt = self.grid.dt();
        let mut out = vec![0.0; self.n_space];
        for m in 0..self.grid.slabs {
            for (o, v) in out.iter_mut().zip(self.slab(m)) {
                *o += dt * v;
            }
        }
        out
    }

    /// Space-time L2 norm with segment measure `h_space`.
    pub fn space_time_norm(&self, h_space: f64) -> f64 {
        let dt = self.grid.dt();
        let sq: f64 = self.values.iter().map(|v| v * v).sum();
        (sq * dt * h_space).sqrt()
    }

    pub fn axpy(&mut self, a: f64, x: &TraceFunction) {
        debug_assert_eq!(self.values.len(), x.values.len());
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    pub fn scale(&mut self, a: f64) {
        for v in self.values.iter_mut() {
            *v *= a;
        }
    }
}

/// Precomputed L2 projection from one uniform grid onto another, applied to
/// every fracture segment independently. Row `m` lists the source slabs that
/// overlap destination slab `m` with weights that sum to 1.
#[derive(Debug, Clone)]
pub struct Projection {
    pub src: TimeGrid,
    pub dst: TimeGrid,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl Projection {
    pub fn build(src: TimeGrid, dst: TimeGrid) -> Result<Self> {
        src.same_horizon(&dst)?;
        let ms = src.slabs as u64;
        let md = dst.slabs as u64;
        let mut row_ptr = Vec::with_capacity(dst.slabs + 1);
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        row_ptr.push(0);
        // Destination slab m spans [m*ms, (m+1)*ms), source slab n spans
        // [n*md, (n+1)*md) on the lattice of unit T/(ms*md).
        for m in 0..md {
            let lo = m * ms;
            let hi = (m + 1) * ms;
            let n_first = lo / md;
            let n_last = (hi - 1) / md;
            for n in n_first..=n_last {
                let o = hi.min((n + 1) * md) - lo.max(n * md);
                cols.push(n as usize);
                weights.push(o as f64 / ms as f64);
            }
            row_ptr.push(cols.len());
        }
        Ok(Projection {
            src,
            dst,
            row_ptr,
            cols,
            weights,
        })
    }

    /// Weights of destination row `m` as (source slab, weight) pairs.
    pub fn row(&self, m: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[m];
        let hi = self.row_ptr[m + 1];
        self.cols[lo..hi]
            .iter()
            .copied()
            .zip(self.weights[lo..hi].iter().copied())
    }

    pub fn apply(&self, f: &TraceFunction) -> TraceFunction {
        assert_eq!(
            f.grid, self.src,
            "trace lives on a different grid than the projection source"
        );
        let mut out = TraceFunction::zeros(self.dst, f.n_space);
        for m in 0..self.dst.slabs {
            let lo = self.row_ptr[m];
            let hi = self.row_ptr[m + 1];
            let row = out.slab_mut(m);
            for idx in lo..hi {
                let w = self.weights[idx];
                let src_row = f.slab(self.cols[idx]);
                for (o, v) in row.iter_mut().zip(src_row) {
                    *o += w * v;
                }
            }
        }
        out
    }
}

/// Project `src` onto `dst_grid` (the average of `src` over each destination
/// slab). One-shot convenience over [`Projection::build`] + apply.
pub fn project(src: &TraceFunction, dst_grid: TimeGrid) -> Result<TraceFunction> {
    Ok(Projection::build(src.grid, dst_grid)?.apply(src))
}

/// The pair (`a -> b`, `b -> a`) of precomputed projections.
pub fn projection_pair(a: TimeGrid, b: TimeGrid) -> Result<(Projection, Projection)> {
    Ok((Projection::build(a, b)?, Projection::build(b, a)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize) -> TimeGrid {
        TimeGrid::new(1.0, m).unwrap()
    }

    fn trace(m: usize, vals: &[f64]) -> TraceFunction {
        TraceFunction::from_rows(grid(m), 1, vals.to_vec()).unwrap()
    }

    #[test]
    fn nested_refinement_copies_values() {
        let f = trace(2, &[3.0, 7.0]);
        let p = project(&f, grid(4)).unwrap();
        assert_eq!(p.flat(), &[3.0, 3.0, 7.0, 7.0]);
    }

    #[test]
    fn pair_averaging() {
        let f = trace(4, &[1.0, 2.0, 3.0, 4.0]);
        let p = project(&f, grid(2)).unwrap();
        assert_eq!(p.flat(), &[1.5, 3.5]);
    }

    #[test]
    fn two_to_three_overlap_fractions() {
        let (a, b) = (0.25, -1.5);
        let f = trace(2, &[a, b]);
        let p = project(&f, grid(3)).unwrap();
        assert_eq!(p.flat(), &[a, (a + b) / 2.0, b]);
    }

    // Quadrature oracle: sample the piecewise-constant function at 1e6
    // midpoints and average per destination slab.
    #[test]
    fn random_projection_matches_quadrature() {
        let dst = grid(5);
        let vals = [0.6, -1.2, 3.4, 0.1, -0.7, 2.2, 5.5];
        let f = trace(7, &vals);
        let p = project(&f, dst).unwrap();
        let n = 1_000_000usize;
        let mut sums = vec![0.0f64; 5];
        let mut counts = vec![0usize; 5];
        for j in 0..n {
            let t = (j as f64 + 0.5) / n as f64;
            let s = ((t * 7.0).ceil() as usize).clamp(1, 7) - 1;
            let d = ((t * 5.0).ceil() as usize).clamp(1, 5) - 1;
            sums[d] += vals[s];
            counts[d] += 1;
        }
        for m in 0..5 {
            let avg = sums[m] / counts[m] as f64;
            assert!(
                (avg - p.flat()[m]).abs() < 1e-5,
                "slab {m}: quadrature {avg} vs projection {}",
                p.flat()[m]
            );
        }
    }

    #[test]
    fn refinement_rows_are_unit_vectors() {
        let p = Projection::build(grid(2), grid(4)).unwrap();
        for m in 0..4 {
            let row: Vec<_> = p.row(m).collect();
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].1, 1.0);
        }
        let p = Projection::build(grid(4), grid(2)).unwrap();
        for m in 0..2 {
            let row: Vec<_> = p.row(m).collect();
            assert_eq!(row.len(), 2);
            assert_eq!(row[0].1, 0.5);
            assert_eq!(row[1].1, 0.5);
        }
    }

    // Paper's Time grid 2 pairing: each fine slab maps from exactly one
    // coarse slab.
    #[test]
    fn coarse_to_fine_100_500() {
        let g_coarse = TimeGrid::new(0.5, 100).unwrap();
        let g_fine = TimeGrid::new(0.5, 500).unwrap();
        let p = Projection::build(g_coarse, g_fine).unwrap();
        for m in 0..500 {
            let row: Vec<_> = p.row(m).collect();
            assert_eq!(row.len(), 1, "fine slab {m}");
            assert_eq!(row[0].0, m / 5);
            assert_eq!(row[0].1, 1.0);
        }
    }

    #[test]
    fn mismatched_final_times_rejected() {
        let a = TimeGrid::new(1.0, 4).unwrap();
        let b = TimeGrid::new(0.5, 4).unwrap();
        assert!(Projection::build(a, b).is_err());
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

        #[test]
        fn conserves_time_integral(
            ms in 1usize..50,
            md in 1usize..50,
            seed in 0u64..1000,
        ) {
            let vals: Vec<f64> = (0..ms)
                .map(|i| {
                    let x = (i as u64 + 1).wrapping_mul(seed.wrapping_add(17)) % 1000;
                    x as f64 / 250.0 - 2.0
                })
                .collect();
            let f = trace(ms, &vals);
            let p = project(&f, grid(md)).unwrap();
            let a = f.time_integral()[0];
            let b = p.time_integral()[0];
            prop_assert!((a - b).abs() <= 1e-14 * (1.0 + a.abs()),
                "integral drift: {a} vs {b}");
        }

        #[test]
        fn weights_sum_to_one(ms in 1usize..50, md in 1usize..50) {
            // constants are preserved by every projection row (weights sum
            // to 1) up to summation rounding
            let f = trace(ms, &vec![3.25; ms]);
            let p = project(&f, grid(md)).unwrap();
            for v in p.flat() {
                prop_assert!((v - 3.25).abs() < 1e-13);
            }
        }

        #[test]
        fn identity_on_same_grid(ms in 1usize..50, seed in 0u64..1000) {
            let vals: Vec<f64> = (0..ms).map(|i| ((i as u64 * 37 + seed) % 100) as f64).collect();
            let f = trace(ms, &vals);
            let p = project(&f, grid(ms)).unwrap();
            prop_assert_eq!(p.flat(), f.flat());
        }

        #[test]
        fn nested_round_trip_is_identity(ms in 1usize..20, c in 1usize..8, seed in 0u64..1000) {
            let vals: Vec<f64> = (0..ms).map(|i| ((i as u64 * 91 + seed) % 100) as f64 - 50.0).collect();
            let f = trace(ms, &vals);
            let fine = project(&f, grid(ms * c)).unwrap();
            let back = project(&fine, grid(ms)).unwrap();
            for (a, b) in back.flat().iter().zip(f.flat()) {
                prop_assert!((a - b).abs() <= 1e-13 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn l2_contraction(ms in 1usize..50, md in 1usize..50, seed in 0u64..1000) {
            let vals: Vec<f64> = (0..ms).map(|i| ((i as u64 * 53 + seed) % 100) as f64 / 10.0 - 5.0).collect();
            let f = trace(ms, &vals);
            let p = project(&f, grid(md)).unwrap();
            prop_assert!(p.space_time_norm(1.0) <= f.space_time_norm(1.0) * (1.0 + 1e-13));
        }
    }
}
