//! Flat INI-style scenario configuration.
//!
//! Sections `[domain]`, `[physics]`, `[bc]`, `[source]`, `[initial]`,
//! `[time]`, `[method]`, `[output]`; `key = value` lines; `#` and `;` start
//! comments. Boundary segments are keys beginning with `seg` inside `[bc]`,
//! each holding `side lo hi kind value` (side in left/right/bottom/top, kind
//! in dirichlet/neumann; coordinates are y-ranges for lateral sides and
//! absolute x-ranges for bottom/top). Unlisted boundary is no-flow. The full
//! schema with defaults is documented in the README.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::discretize::PhysicalData;
use crate::error::{Error, Result};
use crate::geometry::{BcKind, BoundarySegment, DomainSpec, Side};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Monolithic,
    GtpNone,
    GtpLocal,
    GtpNn,
    GtoJacobi,
    GtoGmres,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "monolithic" => Method::Monolithic,
            "gtp_none" => Method::GtpNone,
            "gtp_local" => Method::GtpLocal,
            "gtp_nn" => Method::GtpNn,
            "gto_jacobi" => Method::GtoJacobi,
            "gto_gmres" => Method::GtoGmres,
            other => {
                return Err(Error::Config(format!(
                    "[method] method: unknown method '{other}' (expected monolithic, gtp_none, gtp_local, gtp_nn, gto_jacobi or gto_gmres)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Monolithic => "monolithic",
            Method::GtpNone => "gtp_none",
            Method::GtpLocal => "gtp_local",
            Method::GtpNn => "gtp_nn",
            Method::GtoJacobi => "gto_jacobi",
            Method::GtoGmres => "gto_gmres",
        }
    }

    pub fn is_gto(&self) -> bool {
        matches!(self, Method::GtoJacobi | Method::GtoGmres)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Explicit(f64),
    Optimized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuessKind {
    Zero,
    Random,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub domain: DomainSpec,
    pub phys: PhysicalData,
    pub segments: Vec<BoundarySegment>,
    pub fracture_bottom: f64,
    pub fracture_top: f64,
    /// Constant source density per subdomain.
    pub q: (f64, f64),
    /// Uniform initial pressures (subdomains, fracture).
    pub p0: (f64, f64),
    pub p0_gamma: f64,
    pub t_final: f64,
    /// Subdomain slabs (both subdomains share one grid).
    pub m_sub: usize,
    pub m_frac: usize,
    pub method: Method,
    pub alpha: AlphaMode,
    /// Overrides for the Robin-parameter search bracket (defaults bracket
    /// the classical single-frequency optima with three decades of margin).
    pub alpha_lo: Option<f64>,
    pub alpha_hi: Option<f64>,
    pub tol: f64,
    pub max_iters: usize,
    /// Error-to-zero study: all data is zeroed, a random interface guess is
    /// used and the iteration stops when the solution norm has dropped by
    /// `tol` relative to the initial reconstruction.
    pub error_to_zero: bool,
    pub initial_guess: GuessKind,
    pub seed: u64,
    pub damping: f64,
    pub threads: usize,
    pub out_dir: Option<PathBuf>,
    pub snapshots: Vec<f64>,
    pub write_fields: bool,
    pub reference_path: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    /// The driven experiment configuration: 2x1 domain, fracture in the
    /// middle, Dirichlet strips on the lower fifth of the lateral sides,
    /// pressure drop of 1 along the fracture, conforming slabs T/300.
    fn default() -> Self {
        ScenarioConfig {
            domain: DomainSpec {
                lx: 2.0,
                ly: 1.0,
                fracture_x: 1.0,
                nx1: 100,
                nx2: 100,
                ny: 100,
            },
            phys: PhysicalData {
                s1: 1.0,
                s2: 1.0,
                k1: 1.0,
                k2: 1.0,
                s_gamma: 1e-3,
                kf_delta: 1.0,
                delta: 1e-3,
            },
            segments: vec![
                BoundarySegment {
                    side: Side::Left,
                    lo: 0.0,
                    hi: 0.2,
                    bc: BcKind::Dirichlet(0.0),
                },
                BoundarySegment {
                    side: Side::Right,
                    lo: 0.0,
                    hi: 0.2,
                    bc: BcKind::Dirichlet(1.0),
                },
            ],
            fracture_bottom: 1.0,
            fracture_top: 0.0,
            q: (0.0, 0.0),
            p0: (0.0, 0.0),
            p0_gamma: 0.0,
            t_final: 0.5,
            m_sub: 300,
            m_frac: 300,
            method: Method::Monolithic,
            alpha: AlphaMode::Optimized,
            alpha_lo: None,
            alpha_hi: None,
            tol: 1e-6,
            max_iters: 500,
            error_to_zero: false,
            initial_guess: GuessKind::Zero,
            seed: 42,
            damping: 1.0,
            threads: 1,
            out_dir: None,
            snapshots: Vec::new(),
            write_fields: false,
            reference_path: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate().map_err(reclass)?;
        self.phys.validate().map_err(reclass)?;
        if !(self.t_final > 0.0) {
            return Err(Error::Config(format!(
                "[time] t_final must be positive, got {}",
                self.t_final
            )));
        }
        if self.m_sub == 0 || self.m_frac == 0 {
            return Err(Error::Config(
                "[time] m_sub and m_frac must be at least 1".into(),
            ));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!(
                "[method] tol must be positive, got {}",
                self.tol
            )));
        }
        if let AlphaMode::Explicit(a) = self.alpha {
            if !(a > 0.0) {
                return Err(Error::Config(format!(
                    "[method] alpha must be positive, got {a}"
                )));
            }
        }
        if let (Some(lo), Some(hi)) = (self.alpha_lo, self.alpha_hi) {
            if !(lo > 0.0 && lo < hi) {
                return Err(Error::Config(format!(
                    "[method] alpha search range [{lo}, {hi}] is empty or nonpositive"
                )));
            }
        }
        if !self.method.is_gto() && matches!(self.alpha, AlphaMode::Explicit(_)) {
            return Err(Error::Config(format!(
                "[method] alpha is only meaningful for gto_* methods, not {}",
                self.method.name()
            )));
        }
        if self.method == Method::Monolithic && self.m_sub != self.m_frac {
            return Err(Error::Config(format!(
                "[time] the monolithic solver is time-conforming: m_sub={} must equal m_frac={}",
                self.m_sub, self.m_frac
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Config(format!(
                "[method] damping must lie in (0,1], got {}",
                self.damping
            )));
        }
        for t in &self.snapshots {
            if !(*t >= 0.0 && *t <= self.t_final) {
                return Err(Error::Config(format!(
                    "[output] snapshot time {t} outside [0, {}]",
                    self.t_final
                )));
            }
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let raw = RawIni::parse(text)?;
        let mut cfg = ScenarioConfig::default();
        let mut seen_segments = false;
        for (section, key, value) in raw.entries() {
            let ctx = format!("[{section}] {key}");
            match (section, key) {
                ("domain", "lx") => cfg.domain.lx = num(&ctx, value)?,
                ("domain", "ly") => cfg.domain.ly = num(&ctx, value)?,
                ("domain", "fracture_x") => cfg.domain.fracture_x = num(&ctx, value)?,
                ("domain", "nx1") => cfg.domain.nx1 = int(&ctx, value)?,
                ("domain", "nx2") => cfg.domain.nx2 = int(&ctx, value)?,
                ("domain", "ny") => cfg.domain.ny = int(&ctx, value)?,
                ("physics", "k1") => cfg.phys.k1 = num(&ctx, value)?,
                ("physics", "k2") => cfg.phys.k2 = num(&ctx, value)?,
                ("physics", "kf") => {
                    let kf: f64 = num(&ctx, value)?;
                    cfg.phys.kf_delta = kf * cfg.phys.delta;
                }
                ("physics", "kf_delta") => cfg.phys.kf_delta = num(&ctx, value)?,
                ("physics", "delta") => cfg.phys.delta = num(&ctx, value)?,
                ("physics", "s1") => cfg.phys.s1 = num(&ctx, value)?,
                ("physics", "s2") => cfg.phys.s2 = num(&ctx, value)?,
                ("physics", "s_gamma") => cfg.phys.s_gamma = num(&ctx, value)?,
                ("bc", "fracture_bottom") => cfg.fracture_bottom = num(&ctx, value)?,
                ("bc", "fracture_top") => cfg.fracture_top = num(&ctx, value)?,
                ("bc", k) if k.starts_with("seg") => {
                    if !seen_segments {
                        cfg.segments.clear(); // explicit segments replace the defaults
                        seen_segments = true;
                    }
                    cfg.segments.push(parse_segment(&ctx, value)?);
                }
                ("bc", "none") => {
                    cfg.segments.clear();
                    seen_segments = true;
                }
                ("source", "q1") => cfg.q.0 = num(&ctx, value)?,
                ("source", "q2") => cfg.q.1 = num(&ctx, value)?,
                ("initial", "p0") => {
                    let v = num(&ctx, value)?;
                    cfg.p0 = (v, v);
                }
                ("initial", "p0_1") => cfg.p0.0 = num(&ctx, value)?,
                ("initial", "p0_2") => cfg.p0.1 = num(&ctx, value)?,
                ("initial", "p0_gamma") => cfg.p0_gamma = num(&ctx, value)?,
                ("time", "t_final") => cfg.t_final = num(&ctx, value)?,
                ("time", "m_sub") => cfg.m_sub = int(&ctx, value)?,
                ("time", "m_frac") => cfg.m_frac = int(&ctx, value)?,
                ("method", "method") => cfg.method = Method::parse(value)?,
                ("method", "alpha") => {
                    cfg.alpha = if value == "optimized" {
                        AlphaMode::Optimized
                    } else {
                        AlphaMode::Explicit(num(&ctx, value)?)
                    }
                }
                ("method", "alpha_lo") => cfg.alpha_lo = Some(num(&ctx, value)?),
                ("method", "alpha_hi") => cfg.alpha_hi = Some(num(&ctx, value)?),
                ("method", "tol") => cfg.tol = num(&ctx, value)?,
                ("method", "max_iters") => cfg.max_iters = int(&ctx, value)?,
                ("method", "error_to_zero") => cfg.error_to_zero = boolean(&ctx, value)?,
                ("method", "initial_guess") => {
                    cfg.initial_guess = match value {
                        "zero" => GuessKind::Zero,
                        "random" => GuessKind::Random,
                        other => {
                            return Err(Error::Config(format!(
                                "{ctx}: expected zero or random, got '{other}'"
                            )))
                        }
                    }
                }
                ("method", "seed") => cfg.seed = int(&ctx, value)? as u64,
                ("method", "damping") => cfg.damping = num(&ctx, value)?,
                ("method", "threads") => cfg.threads = int(&ctx, value)?,
                ("output", "dir") => cfg.out_dir = Some(PathBuf::from(value)),
                ("output", "snapshots") => {
                    cfg.snapshots = value
                        .split_whitespace()
                        .map(|v| num(&ctx, v))
                        .collect::<Result<Vec<_>>>()?;
                }
                ("output", "write_fields") => cfg.write_fields = boolean(&ctx, value)?,
                ("output", "reference") => cfg.reference_path = Some(PathBuf::from(value)),
                (s, k) => {
                    return Err(Error::Config(format!("unknown key '{k}' in section [{s}]")))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::parse_str(&text)
    }
}

fn reclass(e: Error) -> Error {
    Error::Config(e.to_string())
}

fn num(ctx: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::Config(format!("{ctx}: '{v}' is not a number")))
}

fn int(ctx: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Config(format!("{ctx}: '{v}' is not a nonnegative integer")))
}

fn boolean(ctx: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::Config(format!("{ctx}: '{other}' is not a boolean"))),
    }
}

fn parse_segment(ctx: &str, v: &str) -> Result<BoundarySegment> {
    let parts: Vec<&str> = v.split_whitespace().collect();
    if parts.len() != 5 {
        return Err(Error::Config(format!(
            "{ctx}: expected 'side lo hi kind value', got '{v}'"
        )));
    }
    let side = match parts[0] {
        "left" => Side::Left,
        "right" => Side::Right,
        "bottom" => Side::Bottom,
        "top" => Side::Top,
        other => {
            return Err(Error::Config(format!(
                "{ctx}: unknown side '{other}'"
            )))
        }
    };
    let lo = num(ctx, parts[1])?;
    let hi = num(ctx, parts[2])?;
    let value = num(ctx, parts[4])?;
    let bc = match parts[3] {
        "dirichlet" => BcKind::Dirichlet(value),
        "neumann" => BcKind::Neumann(value),
        other => {
            return Err(Error::Config(format!(
                "{ctx}: unknown boundary kind '{other}'"
            )))
        }
    };
    Ok(BoundarySegment { side, lo, hi, bc })
}

struct RawIni {
    // (section, key) -> value, insertion-ordered per section via the Vec
    items: Vec<(String, String, String)>,
}

impl RawIni {
    fn parse(text: &str) -> Result<Self> {
        let mut items = Vec::new();
        let mut section = String::new();
        let mut dup_guard: BTreeMap<(String, String), usize> = BTreeMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line
                .split(['#', ';'])
                .next()
                .unwrap_or("")
                .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {}: malformed section '{line}'", lineno + 1))
                })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                ))
            })?;
            if section.is_empty() {
                return Err(Error::Config(format!(
                    "line {}: key '{}' outside any [section]",
                    lineno + 1,
                    key.trim()
                )));
            }
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if let Some(prev) = dup_guard.insert((section.clone(), key.clone()), lineno + 1) {
                return Err(Error::Config(format!(
                    "line {}: duplicate key '{key}' in [{section}] (first on line {prev})",
                    lineno + 1
                )));
            }
            items.push((section.clone(), key, value));
        }
        Ok(RawIni { items })
    }

    fn entries(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.items
            .iter()
            .map(|(s, k, v)| (s.as_str(), k.as_str(), v.as_str()))
    }
}
