//! Boundary sources on the circle at infinity and the bulk-to-boundary
//! propagator
//!
//! ```text
//! (H₊h)(z,ζ) = ∫ z^Δ / (z² + (ζ−η)²)^Δ h(η) dη = z^{1−Δ} ∫ (1+u²)^{−Δ} h(ζ + zu) du
//! ```
//!
//! in the half-plane chart. Sources live on the disk boundary angle `β` and
//! are carried to `η = tan(β/2)` as scalars (no density factor).

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::geometry::{boundary_angle_to_eta, GeometryError, Point, Sector};
use crate::greens::ModelParams;
use crate::quad::{self, QuadError, QuadOptions};
use crate::tessellation::{Tessellation, Tile};

#[derive(Debug, Error)]
pub enum BoundaryError {
    #[error("invalid source: {0}")]
    Source(String),
    #[error("propagator needs z > 0, got {0}")]
    Domain(f64),
    #[error(transparent)]
    Chart(#[from] GeometryError),
    #[error("propagator quadrature failed: {0}")]
    Precision(#[from] QuadError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// `C^∞` bump `A·exp(s/(w/2)² − s/((β−β₀)(β₁−β)))` on `(β₀, β₁)`, scaled so
/// its peak value is the amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub beta0: f64,
    pub beta1: f64,
    pub amplitude: f64,
    pub smoothness: f64,
}

/// Samples on an increasing angle grid covering less than one turn,
/// interpolated periodically by cubic Hermite segments with centered slopes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tabulated {
    pub angles: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundarySource {
    Bump(Bump),
    Tabulated(Tabulated),
    /// Linear combination `Σ cᵢ hᵢ`.
    Combination(Vec<(f64, BoundarySource)>),
}

impl Bump {
    pub fn new(beta0: f64, beta1: f64, amplitude: f64, smoothness: f64) -> Result<Self, BoundaryError> {
        if !(beta1 > beta0) || beta1 - beta0 >= TAU {
            return Err(BoundaryError::Source(format!("bad arc ({beta0}, {beta1})")));
        }
        if !(smoothness > 0.0) {
            return Err(BoundaryError::Source(format!("smoothness must be positive, got {smoothness}")));
        }
        Ok(Bump { beta0, beta1, amplitude, smoothness })
    }

    /// Offset of `beta` from `β₀` in `[0, 2π)`.
    fn offset(&self, beta: f64) -> f64 {
        (beta - self.beta0).rem_euclid(TAU)
    }

    pub fn contains(&self, beta: f64) -> bool {
        let t = self.offset(beta);
        t > 0.0 && t < self.beta1 - self.beta0
    }

    pub fn eval(&self, beta: f64) -> f64 {
        let t = self.offset(beta);
        let w = self.beta1 - self.beta0;
        if !(t > 0.0 && t < w) {
            return 0.0;
        }
        let half = 0.5 * w;
        self.amplitude * (self.smoothness / (half * half) - self.smoothness / (t * (w - t))).exp()
    }
}

impl Tabulated {
    pub fn new(angles: Vec<f64>, values: Vec<f64>) -> Result<Self, BoundaryError> {
        if angles.len() != values.len() || angles.len() < 3 {
            return Err(BoundaryError::Source("need ≥ 3 matching angles and values".into()));
        }
        if angles.windows(2).any(|w| !(w[1] > w[0])) || angles[angles.len() - 1] - angles[0] >= TAU {
            return Err(BoundaryError::Source("angles must increase within one turn".into()));
        }
        Ok(Tabulated { angles, values })
    }

    /// Node `i` (any integer) with its angle unwrapped past the ends.
    fn node(&self, i: isize) -> (f64, f64) {
        let n = self.angles.len() as isize;
        let k = i.rem_euclid(n) as usize;
        let turns = i.div_euclid(n) as f64;
        (self.angles[k] + turns * TAU, self.values[k])
    }

    fn slope(&self, i: isize) -> f64 {
        let (t0, v0) = self.node(i - 1);
        let (t1, v1) = self.node(i + 1);
        (v1 - v0) / (t1 - t0)
    }

    pub fn eval(&self, beta: f64) -> f64 {
        let a0 = self.angles[0];
        let b = a0 + (beta - a0).rem_euclid(TAU);
        let i = self.angles.partition_point(|&a| a <= b) as isize - 1;
        let (t0, v0) = self.node(i);
        let (t1, v1) = self.node(i + 1);
        let h = t1 - t0;
        let s = (b - t0) / h;
        let (m0, m1) = (self.slope(i) * h, self.slope(i + 1) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * v0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * v1 + (s3 - s2) * m1
    }
}

impl BoundarySource {
    /// The default bump: amplitude 1, smoothness 1.
    pub fn bump(beta0: f64, beta1: f64) -> Result<Self, BoundaryError> {
        Ok(BoundarySource::Bump(Bump::new(beta0, beta1, 1.0, 1.0)?))
    }

    /// The constant function on the whole circle.
    pub fn constant(c: f64) -> Self {
        let angles: Vec<f64> = (0..8).map(|i| i as f64 * TAU / 8.0).collect();
        BoundarySource::Tabulated(Tabulated { values: vec![c; angles.len()], angles })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn eval(&self, beta: f64) -> f64 {
        match self {
            BoundarySource::Bump(b) => b.eval(beta),
            BoundarySource::Tabulated(t) => t.eval(beta),
            BoundarySource::Combination(terms) => terms.iter().map(|(c, h)| c * h.eval(beta)).sum(),
        }
    }

    /// Value at the half-plane boundary coordinate `η`.
    pub fn eval_eta(&self, eta: f64) -> f64 {
        self.eval(2.0 * eta.atan())
    }

    /// Angles in `(−π, π)` where the source may be non-smooth or start
    /// vanishing.
    fn breakpoints(&self) -> Vec<f64> {
        let wrap = |b: f64| (b + PI).rem_euclid(TAU) - PI;
        match self {
            BoundarySource::Bump(b) => vec![wrap(b.beta0), wrap(b.beta1)],
            BoundarySource::Tabulated(_) => Vec::new(),
            BoundarySource::Combination(terms) => terms.iter().flat_map(|(_, h)| h.breakpoints()).collect(),
        }
    }

    /// True if the source is identically zero on an interval between
    /// consecutive breakpoints containing `beta`.
    fn vanishes_near(&self, beta: f64) -> bool {
        match self {
            BoundarySource::Bump(b) => !b.contains(beta) || b.amplitude == 0.0,
            BoundarySource::Tabulated(t) => t.values.iter().all(|&v| v == 0.0),
            BoundarySource::Combination(terms) => terms.iter().all(|(c, h)| *c == 0.0 || h.vanishes_near(beta)),
        }
    }

    /// Bounds `(min, max)` of the source, for sign checks.
    pub fn range(&self) -> (f64, f64) {
        match self {
            BoundarySource::Bump(b) => (b.amplitude.min(0.0), b.amplitude.max(0.0)),
            _ => {
                let vals: Vec<f64> = (0..4096).map(|i| self.eval(i as f64 * TAU / 4096.0)).collect();
                (vals.iter().cloned().fold(f64::INFINITY, f64::min), vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    /// Whether `h ≥ 0` everywhere and `h > 0` on a non-degenerate arc.
    pub fn is_sign_definite(&self) -> bool {
        let (lo, hi) = self.range();
        lo >= 0.0 && hi > 0.0
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_intervals: 20_000 }
}

fn integrate_pieces<F: Fn(f64) -> f64 + Copy>(
    f: F,
    mut breaks: Vec<f64>,
    skip: impl Fn(f64) -> bool,
) -> Result<f64, BoundaryError> {
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        if w[1] - w[0] <= 0.0 || skip(0.5 * (w[0] + w[1])) {
            continue;
        }
        total += quad::integrate(f, w[0], w[1], quad_opts())?.value;
    }
    Ok(total)
}

fn check_z(z: f64) -> Result<(), BoundaryError> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(BoundaryError::Domain(z))
    }
}

/// Direct kernel form, integrated over the boundary angle
/// (`dη = dβ / (2cos²(β/2))`).
pub fn h_plus_direct(mp: &ModelParams, h: &BoundarySource, z: f64, zeta: f64) -> Result<f64, BoundaryError> {
    check_z(z)?;
    let dl = mp.delta_plus;
    // z^Δ c^{2Δ−2} / (2 (z²c² + (ζc − s)²)^Δ) with c = cos(β/2), s = sin(β/2).
    let f = move |beta: f64| {
        let hb = h.eval(beta);
        if hb == 0.0 {
            return 0.0;
        }
        let (s, c) = (0.5 * beta).sin_cos();
        let den = z * z * c * c + (zeta * c - s).powi(2);
        let num = if dl == 1.0 { 1.0 } else { c.abs().powf(2.0 * dl - 2.0) };
        z.powf(dl) * num / (2.0 * den.powf(dl)) * hb
    };
    let mut breaks = vec![-PI, PI];
    for e in [zeta - z, zeta - 0.1 * z, zeta, zeta + 0.1 * z, zeta + z] {
        breaks.push(2.0 * e.atan());
    }
    breaks.extend(h.breakpoints());
    integrate_pieces(f, breaks, |b| h.vanishes_near(b))
}

/// Substituted form `z^{1−Δ} ∫ (1+u²)^{−Δ} h(ζ+zu) du` with `u = tan θ`.
pub fn h_plus_substituted(mp: &ModelParams, h: &BoundarySource, z: f64, zeta: f64) -> Result<f64, BoundaryError> {
    check_z(z)?;
    let dl = mp.delta_plus;
    let beta_of = move |theta: f64| {
        // β = 2 atan(ζ + z tan θ); θ → ±π/2 is the point β = π.
        2.0 * (zeta + z * theta.tan()).atan()
    };
    let f = move |theta: f64| {
        let hb = h.eval(beta_of(theta));
        if hb == 0.0 {
            return 0.0;
        }
        let c = theta.cos();
        let w = if dl == 1.0 { 1.0 } else { c.powf(2.0 * dl - 2.0) };
        w * hb
    };
    let mut breaks = vec![-FRAC_PI_2, -0.5, -0.05, 0.0, 0.05, 0.5, FRAC_PI_2];
    for b in h.breakpoints() {
        breaks.push(((boundary_angle_to_eta(b) - zeta) / z).atan());
    }
    let integral = integrate_pieces(f, breaks, |t| h.vanishes_near(beta_of(t)))?;
    Ok(z.powf(1.0 - dl) * integral)
}

/// `H₊h` at `(z, ζ)`.
pub fn h_plus(mp: &ModelParams, h: &BoundarySource, z: f64, zeta: f64) -> Result<f64, BoundaryError> {
    h_plus_direct(mp, h, z, zeta)
}

/// `H₊h` at a point of the plane.
pub fn h_plus_at(mp: &ModelParams, h: &BoundarySource, x: &Point) -> Result<f64, BoundaryError> {
    let hp = x.to_half_plane()?;
    h_plus(mp, h, hp.z, hp.zeta)
}

/// `∫ (1+η²)^{−Δ} dη = √π Γ(Δ−½)/Γ(Δ)`; `H₊1 = z^{1−Δ}` times this.
pub fn beta_constant(mp: &ModelParams) -> f64 {
    let dl = mp.delta_plus;
    PI.sqrt() * (ln_gamma(dl - 0.5) - ln_gamma(dl)).exp()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SectorReport {
    pub n: usize,
    /// `min H₊h·z^{Δ−1}` over `n` samples.
    pub min_product: Option<f64>,
    /// The same over an independent draw of `2n` samples.
    pub min_product_doubled: Option<f64>,
    /// Sector angles not inside the support arc of the source.
    pub inconclusive: bool,
    pub positive: bool,
    /// `|min₂ₙ/minₙ − 1|`.
    pub doubling_change: Option<f64>,
}

/// Lower bound of `H₊h·z^{Δ₊−1}` on a sector: min over `n` random sector
/// points, repeated with `2n`.
pub fn sector_lower_bound_audit(
    mp: &ModelParams,
    h: &BoundarySource,
    sector: &Sector,
    n: usize,
    extra_rho: f64,
    seed: u64,
) -> Result<SectorReport, BoundaryError> {
    let inconclusive = {
        let probes = 64;
        !(0..=probes).all(|i| {
            let b = sector.beta0 + (sector.beta1 - sector.beta0) * i as f64 / probes as f64;
            h.eval(b) > 0.0
        })
    };
    if n == 0 {
        return Ok(SectorReport { n, min_product: None, min_product_doubled: None, inconclusive, positive: false, doubling_change: None });
    }
    let min_over = |count: usize, stream: u64| -> Result<f64, BoundaryError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let pts = sector.sample(count, extra_rho, &mut rng);
        let vals: Vec<Result<f64, BoundaryError>> = pts
            .par_iter()
            .map(|p| {
                let hp = p.to_half_plane()?;
                Ok(h_plus(mp, h, hp.z, hp.zeta)? * hp.z.powf(mp.delta_plus - 1.0))
            })
            .collect();
        let mut m = f64::INFINITY;
        for v in vals {
            m = m.min(v?);
        }
        Ok(m)
    };
    let a = min_over(n, 0)?;
    let b = min_over(2 * n, 1)?;
    Ok(SectorReport {
        n,
        min_product: Some(a),
        min_product_doubled: Some(b),
        inconclusive,
        positive: a > 0.0 && b > 0.0,
        doubling_change: Some((b / a - 1.0).abs()),
    })
}

/// Per-tile constant `k = min_{x∈T} e^{αH₊h(x)}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KConstant {
    pub tile_id: usize,
    /// `min H₊h` on the tile for `α > 0`, `max` for `α < 0`.
    pub h_extreme: f64,
    pub log_k: f64,
    pub argmin: Point,
}

impl KConstant {
    pub fn k(&self) -> f64 {
        self.log_k.exp()
    }
}

fn tile_point(tile: &Tile, u: f64, v: f64) -> Point {
    let k = |p: &Point| p.coords() / p.x3();
    let q = (1.0 - u - v) * k(&tile.vertices[0]) + u * k(&tile.vertices[1]) + v * k(&tile.vertices[2]);
    Point::normalize(q).expect("inside the Klein disk")
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden_section<F: FnMut(f64) -> Result<f64, BoundaryError>>(mut f: F, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64), BoundaryError> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// `k_j` by a barycentric grid of `grid` steps per side, refined by golden
/// sections along both barycentric directions around the best node.
pub fn k_constant(mp: &ModelParams, h: &BoundarySource, alpha: f64, tile: &Tile, grid: usize) -> Result<KConstant, BoundaryError> {
    let grid = grid.max(1);
    let sign = if alpha >= 0.0 { 1.0 } else { -1.0 };
    let objective = |u: f64, v: f64| -> Result<f64, BoundaryError> { Ok(sign * h_plus_at(mp, h, &tile_point(tile, u, v))?) };
    let mut best = (0.0, 0.0, f64::INFINITY);
    for i in 0..=grid {
        for j in 0..=grid - i {
            let (u, v) = (i as f64 / grid as f64, j as f64 / grid as f64);
            let val = objective(u, v)?;
            if val < best.2 {
                best = (u, v, val);
            }
        }
    }
    let step = 1.0 / grid as f64;
    let (mut u, mut v, mut val) = best;
    // Along u with v fixed, then along v with u fixed, inside the simplex.
    let (lo, hi) = ((u - step).max(0.0), (u + step).min(1.0 - v));
    if hi > lo {
        let (uu, fu) = golden_section(|t| objective(t, v), lo, hi, 40)?;
        if fu < val {
            u = uu;
            val = fu;
        }
    }
    let (lo, hi) = ((v - step).max(0.0), (v + step).min(1.0 - u));
    if hi > lo {
        let (vv, fv) = golden_section(|t| objective(u, t), lo, hi, 40)?;
        if fv < val {
            v = vv;
            val = fv;
        }
    }
    let h_extreme = sign * val;
    Ok(KConstant { tile_id: tile.id, h_extreme, log_k: alpha * h_extreme, argmin: tile_point(tile, u, v) })
}

/// `k_j` for a list of tiles, in the given order.
pub fn k_table(
    mp: &ModelParams,
    h: &BoundarySource,
    alpha: f64,
    tess: &Tessellation,
    tile_ids: &[usize],
    grid: usize,
) -> Result<Vec<KConstant>, BoundaryError> {
    tile_ids.par_iter().map(|&id| k_constant(mp, h, alpha, &tess.tiles[id], grid)).collect()
}

/// CSV: `tile_id, rho_centroid, z_centroid, Hmin_or_max, k_j`.
pub fn write_k_table<W: Write>(mut out: W, tess: &Tessellation, table: &[KConstant]) -> Result<(), BoundaryError> {
    writeln!(out, "tile_id,rho_centroid,z_centroid,Hmin_or_max,k_j")?;
    for k in table {
        let c = tess.tiles[k.tile_id].centroid;
        let z = c.to_half_plane().map(|h| h.z).unwrap_or(f64::INFINITY);
        writeln!(out, "{},{:.16e},{:.16e},{:.16e},{:.16e}", k.tile_id, c.dist_to_origin(), z, k.h_extreme, k.k())?;
    }
    Ok(())
}
