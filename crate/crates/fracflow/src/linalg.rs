//! Sparse matrices, a direct factorization for the per-step systems, and a
//! matrix-free GMRES for the space-time interface problems.
//!
//! The direct solver stores an envelope (variable-band) factorization under a
//! reverse Cuthill-McKee ordering: LDL^T for matrices flagged symmetric (all
//! production step systems are SPD), banded LU with partial pivoting
//! otherwise. Step systems are factorized once and reused for every time slab
//! and every outer iteration, so the triangular solves are the hot path; both
//! sweeps run over contiguous row segments.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Sparse matrix (CSR)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub n_rows: usize,
    pub n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Build from (row, col, value) triplets; duplicates are summed.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Dimension("matrix dimensions must be positive".into()));
        }
        let mut counts = vec![0usize; n_rows + 1];
        for &(i, j, _) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Dimension(format!(
                    "entry ({i},{j}) outside {n_rows}x{n_cols} matrix"
                )));
            }
            counts[i + 1] += 1;
        }
        for i in 0..n_rows {
            counts[i + 1] += counts[i];
        }
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        let mut next = counts.clone();
        for &(i, j, v) in triplets {
            let p = next[i];
            cols[p] = j;
            vals[p] = v;
            next[i] += 1;
        }
        // sort each row, merge duplicates
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut out_cols = Vec::with_capacity(triplets.len());
        let mut out_vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut idx: Vec<usize> = Vec::new();
        for i in 0..n_rows {
            let lo = counts[i];
            let hi = counts[i + 1];
            idx.clear();
            idx.extend(lo..hi);
            idx.sort_by_key(|&p| cols[p]);
            let mut last_col = usize::MAX;
            for &p in &idx {
                if cols[p] == last_col {
                    *out_vals.last_mut().unwrap() += vals[p];
                } else {
                    out_cols.push(cols[p]);
                    out_vals.push(vals[p]);
                    last_col = cols[p];
                }
            }
            row_ptr.push(out_cols.len());
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx: out_cols,
            vals: out_vals,
        })
    }

    pub fn identity(n: usize) -> Self {
        SparseMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        (&self.col_idx[lo..hi], &self.vals[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(p) => vals[p],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for i in 0..self.n_rows {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (c, v) in cols.iter().zip(vals) {
                s += v * x[*c];
            }
            y[i] = s;
        }
    }

    pub fn matvec_alloc(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n_rows];
        self.matvec(x, &mut y);
        y
    }
}

// ---------------------------------------------------------------------------
// Reverse Cuthill-McKee ordering
// ---------------------------------------------------------------------------

/// Bandwidth-reducing permutation of the symmetrized pattern.
/// Returns `perm` with `perm[new] = old`.
fn reverse_cuthill_mckee(a: &SparseMatrix) -> Vec<usize> {
    let n = a.n_rows;
    // symmetrized adjacency, diagonal dropped
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, _) = a.row(i);
        for &j in cols {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let degree: Vec<usize> = adj.iter().map(|l| l.len()).collect();

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut frontier = Vec::new();
    let mut next_frontier = Vec::new();
    while order.len() < n {
        // pseudo-peripheral start: min degree among unvisited, then push the
        // BFS level structure as far as it goes
        let mut start = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .unwrap();
        loop {
            let mut seen = vec![false; n];
            seen[start] = true;
            frontier.clear();
            frontier.push(start);
            let mut last_level = frontier.clone();
            let mut depth = 0usize;
            loop {
                next_frontier.clear();
                for &u in frontier.iter() {
                    for &v in &adj[u] {
                        if !seen[v] && !visited[v] {
                            seen[v] = true;
                            next_frontier.push(v);
                        }
                    }
                }
                if next_frontier.is_empty() {
                    break;
                }
                depth += 1;
                last_level.clone_from(&next_frontier);
                std::mem::swap(&mut frontier, &mut next_frontier);
            }
            let candidate = *last_level
                .iter()
                .min_by_key(|&&i| (degree[i], i))
                .unwrap();
            if candidate == start || depth == 0 {
                break;
            }
            // one improvement round is enough in practice
            start = candidate;
            let mut seen2 = vec![false; n];
            seen2[start] = true;
            frontier.clear();
            frontier.push(start);
            let mut depth2 = 0usize;
            loop {
                next_frontier.clear();
                for &u in frontier.iter() {
                    for &v in &adj[u] {
                        if !seen2[v] && !visited[v] {
                            seen2[v] = true;
                            next_frontier.push(v);
                        }
                    }
                }
                if next_frontier.is_empty() {
                    break;
                }
                depth2 += 1;
                std::mem::swap(&mut frontier, &mut next_frontier);
            }
            if depth2 <= depth {
                break;
            }
        }
        // Cuthill-McKee BFS from `start`
        let base = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = base;
        while head < order.len() {
            let u = order[head];
            head += 1;
            let mut nbrs: Vec<usize> = adj[u].iter().copied().filter(|&v| !visited[v]).collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                visited[v] = true;
                order.push(v);
            }
        }
    }
    order.reverse();
    order
}

// ---------------------------------------------------------------------------
// Factorization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
enum Factors {
    /// Envelope LDL^T: strictly-lower row segments `first[i]..i` stored
    /// contiguously, plus the diagonal of D.
    Ldlt {
        first: Vec<usize>,
        offset: Vec<usize>,
        lvals: Vec<f64>,
        diag: Vec<f64>,
    },
    /// Banded LU with partial pivoting, LAPACK-style storage with `kl` extra
    /// rows for pivot fill; `band[r][j]` holds A(r + j - kl - ku, j).
    BandLu {
        kl: usize,
        ku: usize,
        band: Vec<f64>, // (2*kl + ku + 1) x n, column-major by diagonal row
        pivots: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    perm: Vec<usize>, // perm[new] = old
    factors: Factors,
}

/// Factorize a square sparse matrix. With `symmetric` the matrix must be
/// symmetric positive definite (only the given entries are used; both
/// triangles are expected) and an envelope LDL^T is computed; otherwise a
/// banded LU with partial pivoting is used. Row indices in errors refer to
/// the original ordering.
pub fn factorize(a: &SparseMatrix, symmetric: bool) -> Result<Factorization> {
    if a.n_rows != a.n_cols {
        return Err(Error::Dimension(format!(
            "cannot factorize a {}x{} matrix",
            a.n_rows, a.n_cols
        )));
    }
    let n = a.n_rows;
    let perm = reverse_cuthill_mckee(a);
    let mut perm_inv = vec![0usize; n];
    for (new, &old) in perm.iter().enumerate() {
        perm_inv[old] = new;
    }
    let factors = if symmetric {
        factor_ldlt(a, &perm, &perm_inv)?
    } else {
        factor_band_lu(a, &perm, &perm_inv)?
    };
    Ok(Factorization { n, perm, factors })
}

fn factor_ldlt(a: &SparseMatrix, perm: &[usize], perm_inv: &[usize]) -> Result<Factors> {
    let n = a.n_rows;
    // envelope of the permuted matrix
    let mut first: Vec<usize> = (0..n).collect();
    for old_i in 0..n {
        let (cols, _) = a.row(old_i);
        let i = perm_inv[old_i];
        for &old_j in cols {
            let j = perm_inv[old_j];
            let (r, c) = if j <= i { (i, j) } else { (j, i) };
            if c < first[r] {
                first[r] = c;
            }
        }
    }
    let mut offset = vec![0usize; n + 1];
    for i in 0..n {
        offset[i + 1] = offset[i] + (i - first[i]);
    }
    let mut lvals = vec![0.0f64; offset[n]];
    let mut diag = vec![0.0f64; n];
    // scatter A into the envelope (lower triangle of the permuted matrix)
    for old_i in 0..n {
        let (cols, vals) = a.row(old_i);
        let i = perm_inv[old_i];
        for (&old_j, &v) in cols.iter().zip(vals) {
            let j = perm_inv[old_j];
            if j == i {
                diag[i] += v;
            } else {
                let (r, c) = if j < i { (i, j) } else { (j, i) };
                // symmetric input carries both triangles; keep the lower copy
                if j < i {
                    lvals[offset[r] + (c - first[r])] += v;
                }
            }
        }
    }
    // row-by-row factorization; v_j = L_ij * D_j kept unnormalized in place
    for i in 0..n {
        let fi = first[i];
        let (done, row_i) = lvals.split_at_mut(offset[i]);
        let row_i = &mut row_i[..i - fi];
        for j in fi..i {
            let fj = first[j];
            let lo = fi.max(fj);
            let lj = &done[offset[j] + (lo - fj)..offset[j] + (j - fj)];
            let vi = &row_i[lo - fi..j - fi];
            let mut s = 0.0;
            for (a, b) in vi.iter().zip(lj) {
                s += a * b;
            }
            row_i[j - fi] -= s;
        }
        let mut d = diag[i];
        for j in fi..i {
            let v = row_i[j - fi];
            let l = v / diag[j];
            d -= l * v;
            row_i[j - fi] = l;
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NonPositivePivot(perm[i]));
        }
        diag[i] = d;
    }
    Ok(Factors::Ldlt {
        first,
        offset,
        lvals,
        diag,
    })
}

fn factor_band_lu(a: &SparseMatrix, perm: &[usize], perm_inv: &[usize]) -> Result<Factors> {
    let n = a.n_rows;
    let mut kl = 0usize;
    let mut ku = 0usize;
    for old_i in 0..n {
        let (cols, _) = a.row(old_i);
        let i = perm_inv[old_i];
        for &old_j in cols {
            let j = perm_inv[old_j];
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
    }
    let rows = 2 * kl + ku + 1;
    let mut band = vec![0.0f64; rows * n];
    let at = |r: usize, c: usize| r * n + c; // r = kl + ku + i - j
    for old_i in 0..n {
        let (cols, vals) = a.row(old_i);
        let i = perm_inv[old_i];
        for (&old_j, &v) in cols.iter().zip(vals) {
            let j = perm_inv[old_j];
            band[at(kl + ku + i - j, j)] += v;
        }
    }
    let mut pivots = vec![0usize; n];
    let scale: f64 = band.iter().fold(0.0, |m, v| m.max(v.abs()));
    let tiny = f64::EPSILON * scale.max(1.0) * 16.0;
    for j in 0..n {
        // pivot among rows j..=j+kl
        let reach = kl.min(n - 1 - j);
        let mut p = 0usize;
        let mut best = 0.0f64;
        for r in 0..=reach {
            let v = band[at(kl + ku + r, j)].abs();
            if v > best {
                best = v;
                p = r;
            }
        }
        if best <= tiny {
            return Err(Error::SingularPivot(perm[j]));
        }
        pivots[j] = j + p;
        let width = (kl + ku).min(n - 1 - j);
        if p != 0 {
            for c in 0..=width {
                band.swap(at(kl + ku + p - c, j + c), at(kl + ku - c, j + c));
            }
        }
        let pivot = band[at(kl + ku, j)];
        for r in 1..=reach {
            let m = band[at(kl + ku + r, j)] / pivot;
            band[at(kl + ku + r, j)] = m;
            for c in 1..=width {
                let u = band[at(kl + ku - c, j + c)];
                if u != 0.0 {
                    band[at(kl + ku + r - c, j + c)] -= m * u;
                }
            }
        }
    }
    Ok(Factors::BandLu {
        kl,
        ku,
        band,
        pivots,
    })
}

impl Factorization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    /// Solve A x = b into the supplied buffer (no allocation).
    pub fn solve_into(&self, b: &[f64], x: &mut Vec<f64>) {
        assert_eq!(b.len(), self.n);
        x.clear();
        x.extend(self.perm.iter().map(|&old| b[old]));
        match &self.factors {
            Factors::Ldlt {
                first,
                offset,
                lvals,
                diag,
            } => {
                let n = self.n;
                for i in 0..n {
                    let fi = first[i];
                    let row = &lvals[offset[i]..offset[i + 1]];
                    let mut s = 0.0;
                    for (l, v) in row.iter().zip(&x[fi..i]) {
                        s += l * v;
                    }
                    x[i] -= s;
                }
                for i in 0..n {
                    x[i] /= diag[i];
                }
                for i in (0..n).rev() {
                    let xi = x[i];
                    if xi != 0.0 {
                        let fi = first[i];
                        let row = &lvals[offset[i]..offset[i + 1]];
                        for (l, v) in row.iter().zip(x[fi..i].iter_mut()) {
                            *v -= l * xi;
                        }
                    }
                }
            }
            Factors::BandLu {
                kl,
                ku,
                band,
                pivots,
            } => {
                let (kl, ku) = (*kl, *ku);
                let n = self.n;
                let at = |r: usize, c: usize| r * n + c;
                for j in 0..n {
                    let p = pivots[j];
                    if p != j {
                        x.swap(j, p);
                    }
                    let xj = x[j];
                    if xj != 0.0 {
                        let reach = kl.min(n - 1 - j);
                        for r in 1..=reach {
                            x[j + r] -= band[at(kl + ku + r, j)] * xj;
                        }
                    }
                }
                for i in (0..n).rev() {
                    let mut s = x[i];
                    let width = (kl + ku).min(n - 1 - i);
                    for c in 1..=width {
                        s -= band[at(kl + ku - c, i + c)] * x[i + c];
                    }
                    x[i] = s / band[at(kl + ku, i)];
                }
            }
        }
        // undo the permutation
        let mut out = vec![0.0; self.n];
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = x[new];
        }
        *x = out;
    }
}

// ---------------------------------------------------------------------------
// GMRES
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GmresOptions {
    pub rel_tol: f64,
    pub max_iters: usize,
    /// `None` = full GMRES (the default: interface vectors are small and
    /// iteration counts stay comparable across runs).
    pub restart: Option<usize>,
    pub record_history: bool,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            rel_tol: 1e-6,
            max_iters: 500,
            restart: None,
            record_history: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorFlow {
    Continue,
    Stop,
}

/// Called once per iteration with (iteration number, current iterate,
/// relative residual); may stop the solve early (error-based stopping).
pub type GmresMonitor<'a> = &'a mut dyn FnMut(usize, &[f64], f64) -> MonitorFlow;

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// Relative (preconditioned) residual after each iteration.
    pub history: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

/// Matrix-free GMRES with optional left preconditioning, modified
/// Gram-Schmidt with one reorthogonalization pass, and full (non-restarted)
/// Krylov space by default. Reaching `max_iters` is reported through
/// `converged = false`, not an error.
pub fn gmres(
    apply: &mut dyn FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    mut m_inv: Option<&mut dyn FnMut(&[f64]) -> Vec<f64>>,
    opts: &GmresOptions,
    mut monitor: Option<GmresMonitor<'_>>,
) -> Result<GmresOutcome> {
    let n = b.len();
    if opts.rel_tol <= 0.0 {
        return Err(Error::Invalid("gmres rel_tol must be positive".into()));
    }
    let mut prec = |v: &[f64]| -> Vec<f64> {
        match m_inv.as_mut() {
            Some(p) => {
                let out = p(v);
                assert_eq!(out.len(), n, "preconditioner changed the dimension");
                out
            }
            None => v.to_vec(),
        }
    };

    let mut x = match x0 {
        Some(x0) => {
            assert_eq!(x0.len(), n);
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let bt = prec(b);
    let bnorm = norm(&bt);

    let mut history = Vec::new();
    let mut total_iters = 0usize;
    let cycle_len = opts.restart.unwrap_or(opts.max_iters).max(1);
    // Residuals are measured against ||M^-1 b||; a zero right-hand side
    // (error-to-zero runs) falls back to the initial residual norm.
    let mut denom = bnorm;

    loop {
        let ax = check_dim(apply(&x), n)?;
        let mut r = vec![0.0; n];
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let r = prec(&r);
        let beta = norm(&r);
        if denom == 0.0 {
            denom = beta;
        }
        if beta == 0.0 || beta / denom <= opts.rel_tol {
            return Ok(GmresOutcome {
                x,
                history,
                converged: true,
                iterations: total_iters,
            });
        }

        let m = cycle_len.min(opts.max_iters - total_iters);
        if m == 0 {
            return Ok(GmresOutcome {
                x,
                history,
                converged: false,
                iterations: total_iters,
            });
        }
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut scaled = r;
        scal(&mut scaled, 1.0 / beta);
        basis.push(scaled);
        let mut h_cols: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;

        let mut cycle_converged = false;
        let mut k_used = 0usize;
        for k in 0..m {
            let mut w = prec(&check_dim(apply(&basis[k]), n)?);
            let mut h = vec![0.0; k + 2];
            for j in 0..=k {
                let c = dot(&w, &basis[j]);
                h[j] = c;
                axpy(&mut w, -c, &basis[j]);
            }
            // one reorthogonalization pass
            for j in 0..=k {
                let c = dot(&w, &basis[j]);
                h[j] += c;
                axpy(&mut w, -c, &basis[j]);
            }
            let hk1 = norm(&w);
            h[k + 1] = hk1;
            let happy = hk1 <= 1e-14 * g[0].abs().max(1.0);
            if !happy {
                scal(&mut w, 1.0 / hk1);
                basis.push(w);
            }
            // apply previous rotations, then create the new one
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j] * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            let denom_g = (h[k] * h[k] + h[k + 1] * h[k + 1]).sqrt();
            let (c, s) = if denom_g == 0.0 {
                (1.0, 0.0)
            } else {
                (h[k] / denom_g, h[k + 1] / denom_g)
            };
            cs.push(c);
            sn.push(s);
            h[k] = c * h[k] + s * h[k + 1];
            h[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h_cols.push(h);
            k_used = k + 1;
            total_iters += 1;

            let rel = g[k + 1].abs() / denom;
            if opts.record_history {
                history.push(rel);
            }

            let stop = happy || rel <= opts.rel_tol || total_iters >= opts.max_iters;
            if let Some(mon) = monitor.as_mut() {
                let xk = assemble(&x, &basis, &h_cols, &g, k_used);
                if mon(total_iters, &xk, rel) == MonitorFlow::Stop {
                    return Ok(GmresOutcome {
                        x: xk,
                        history,
                        converged: true,
                        iterations: total_iters,
                    });
                }
            }
            if stop {
                cycle_converged = happy || rel <= opts.rel_tol;
                break;
            }
        }
        x = assemble(&x, &basis, &h_cols, &g, k_used);
        if cycle_converged {
            return Ok(GmresOutcome {
                x,
                history,
                converged: true,
                iterations: total_iters,
            });
        }
        if total_iters >= opts.max_iters {
            return Ok(GmresOutcome {
                x,
                history,
                converged: false,
                iterations: total_iters,
            });
        }
        // otherwise: restart cycle
    }
}

fn check_dim(v: Vec<f64>, n: usize) -> Result<Vec<f64>> {
    if v.len() != n {
        return Err(Error::Dimension(format!(
            "operator returned a vector of length {} on input of length {n}",
            v.len()
        )));
    }
    Ok(v)
}

/// x + V_k y where R y = g (R upper triangular from the Givens sweep).
fn assemble(x: &[f64], basis: &[Vec<f64>], h_cols: &[Vec<f64>], g: &[f64], k: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for j in i + 1..k {
            s -= h_cols[j][i] * y[j];
        }
        y[i] = s / h_cols[i][i];
    }
    let mut out = x.to_vec();
    for j in 0..k {
        axpy(&mut out, y[j], &basis[j]);
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for i in 0..y.len() {
        y[i] += a * x[i];
    }
}

pub fn scal(y: &mut [f64], a: f64) {
    for v in y.iter_mut() {
        *v *= a;
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
pub(crate) mod testutil {
    /// Dense Gaussian elimination with partial pivoting; the independent
    /// oracle for the sparse and iterative paths.
    pub fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut x = b.to_vec();
        for j in 0..n {
            let p = (j..n).max_by(|&r, &s| m[r][j].abs().total_cmp(&m[s][j].abs())).unwrap();
            m.swap(j, p);
            x.swap(j, p);
            assert!(m[j][j].abs() > 1e-300, "oracle: singular at column {j}");
            for r in j + 1..n {
                let f = m[r][j] / m[j][j];
                if f != 0.0 {
                    for c in j..n {
                        m[r][c] -= f * m[j][c];
                    }
                    x[r] -= f * x[j];
                }
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for c in i + 1..n {
                s -= m[i][c] * x[c];
            }
            x[i] = s / m[i][i];
        }
        x
    }
}
