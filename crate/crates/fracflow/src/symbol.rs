//! Fourier convergence factor of the two-half-space OSWR iteration with the
//! fracture-augmented Robin transmission, and the min-max optimization of
//! the Robin parameter over a frequency box.
//!
//! With `z_pm = sqrt(K_pm (s_pm i w + K_pm eta^2))` (principal square root,
//! positive real part) and `zeta = s_gamma i w + Kf delta eta^2`, one double
//! iteration contracts by
//!
//! ```text
//! rho_f = |(alpha - z_plus)(alpha - z_minus)|
//!       / |(alpha + zeta + z_minus)(alpha + zeta + z_plus)|
//! ```
//!
//! which stays below one for positive parameters because the imaginary parts
//! of `z_pm` and `zeta` share the sign of `w`.

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct SymbolParams {
    pub s_minus: f64,
    pub k_minus: f64,
    pub s_plus: f64,
    pub k_plus: f64,
    pub s_gamma: f64,
    pub kf_delta: f64,
    pub alpha: f64,
}

impl SymbolParams {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// Frequency box `|eta| in [pi/L, pi/h]`, `|omega| in [pi/T, pi/dt]` with
/// log-spaced sample counts.
#[derive(Debug, Clone, Copy)]
pub struct FreqBox {
    pub eta_min: f64,
    pub eta_max: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_eta: usize,
    pub n_omega: usize,
}

impl FreqBox {
    /// Box from the discretization: fracture length `l`, mesh size `h` along
    /// the fracture, time window `t_final`, largest time step `dt`.
    pub fn from_discretization(l: f64, h: f64, t_final: f64, dt: f64) -> Result<Self> {
        let b = FreqBox {
            eta_min: std::f64::consts::PI / l,
            eta_max: std::f64::consts::PI / h,
            omega_min: std::f64::consts::PI / t_final,
            omega_max: std::f64::consts::PI / dt,
            n_eta: 64,
            n_omega: 64,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_min > 0.0 && self.omega_min > 0.0) {
            return Err(Error::Invalid("frequency bounds must be positive".into()));
        }
        if self.eta_min > self.eta_max || self.omega_min > self.omega_max {
            return Err(Error::Invalid(
                "frequency box needs min <= max in both axes".into(),
            ));
        }
        if self.n_eta < 2 || self.n_omega < 2 {
            return Err(Error::Invalid("need at least 2 samples per axis".into()));
        }
        Ok(())
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()
        }
    })
}

fn half_space_root(s: f64, k: f64, eta: f64, omega: f64) -> Complex64 {
    Complex64::new(k * k * eta * eta, k * s * omega).sqrt()
}

/// Convergence factor modulus at one frequency pair.
pub fn rho_f(p: &SymbolParams, eta: f64, omega: f64) -> f64 {
    let z_m = half_space_root(p.s_minus, p.k_minus, eta, omega);
    let z_p = half_space_root(p.s_plus, p.k_plus, eta, omega);
    let zeta = Complex64::new(p.kf_delta * eta * eta, p.s_gamma * omega);
    let a = Complex64::new(p.alpha, 0.0);
    let num = (a - z_p) * (a - z_m);
    let den = (a + zeta + z_m) * (a + zeta + z_p);
    (num / den).norm()
}

/// Max of `rho_f` over the log-spaced sample grid of the box.
pub fn max_rho_on_box(p: &SymbolParams, b: &FreqBox) -> f64 {
    let omegas: Vec<f64> = log_space(b.omega_min, b.omega_max, b.n_omega).collect();
    let mut worst = 0.0f64;
    for eta in log_space(b.eta_min, b.eta_max, b.n_eta) {
        for &omega in &omegas {
            let r = rho_f(p, eta, omega);
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy)]
pub struct AlphaSearch {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub scan_points: usize,
}

impl AlphaSearch {
    /// Default bracket spanning the classical single-frequency optima with
    /// three decades of margin on each side.
    pub fn default_range(p: &SymbolParams, l: f64, h: f64) -> Self {
        let pi = std::f64::consts::PI;
        let lo = 1e-3 * (p.k_minus * pi / l * (p.k_plus * pi / l)).sqrt();
        let hi = 1e3 * (p.k_minus * pi / h * (p.k_plus * pi / h)).sqrt();
        AlphaSearch {
            alpha_lo: lo,
            alpha_hi: hi,
            scan_points: 64,
        }
    }
}

/// Minimize the box maximum of `rho_f` over `alpha`: a log-spaced scan
/// followed by golden-section refinement on the bracketing triple. Returns
/// the minimizer and the achieved max factor.
pub fn optimize_alpha(p: &SymbolParams, b: &FreqBox, search: &AlphaSearch) -> Result<(f64, f64)> {
    b.validate()?;
    if !(search.alpha_lo > 0.0 && search.alpha_lo < search.alpha_hi) {
        return Err(Error::Invalid(format!(
            "alpha search range [{}, {}] is empty or nonpositive",
            search.alpha_lo, search.alpha_hi
        )));
    }
    let n = search.scan_points.max(4);
    let objective = |alpha: f64| max_rho_on_box(&p.with_alpha(alpha), b);
    let alphas: Vec<f64> = log_space(search.alpha_lo, search.alpha_hi, n).collect();
    let values: Vec<f64> = alphas.iter().map(|&a| objective(a)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let mut lo = alphas[best.saturating_sub(1)].ln();
    let mut hi = alphas[(best + 1).min(n - 1)].ln();
    if lo == hi {
        return Ok((alphas[best], values[best]));
    }
    // golden-section in log(alpha)
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1.exp());
    let mut f2 = objective(x2.exp());
    for _ in 0..200 {
        if (hi - lo).abs() < 1e-10 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2.exp());
        }
    }
    let (la, lv) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if lv <= values[best] {
        Ok((la.exp(), lv))
    } else {
        Ok((alphas[best], values[best]))
    }
}

/// (alpha, max rho) samples for plotting the parameter sweep.
pub fn alpha_scan(p: &SymbolParams, b: &FreqBox, search: &AlphaSearch) -> Vec<(f64, f64)> {
    log_space(search.alpha_lo, search.alpha_hi, search.scan_points.max(2))
        .map(|a| (a, max_rho_on_box(&p.with_alpha(a), b)))
        .collect()
}
