//! Free and Neumann Green's functions of `−Δ + m²` on the hyperbolic plane.
//!
//! `G₊` depends only on geodesic distance and is evaluated from its
//! hypergeometric closed forms. The Neumann function for a tessellation is
//! the image sum of `G₊` over the reflection group, restricted to pairs in
//! the same tile; it is truncated by orbit radius with an explicit tail
//! bound.

pub mod hyp2f1;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{digamma, gamma};
use thiserror::Error;

use crate::geometry::{dist, Geodesic, Point};
use crate::quad::{self, QuadError, QuadOptions};
use crate::tessellation::{Cell, Tessellation, Tile};

pub use hyp2f1::{hyp2f1, hyp2f1_complement, Hyp2f1Error};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Error)]
pub enum GreensError {
    #[error("invalid model parameters: {0}")]
    Params(String),
    #[error("G₊ needs ρ > 0, got {0}")]
    Domain(f64),
    #[error("x = y: the Green's function is singular on the diagonal")]
    DiagonalSingularity,
    #[error("Neumann sums need Δ₊ > 1, got {0}")]
    DeltaTooSmall(f64),
    #[error("truncation needs enumeration radius {needed:.3}, tessellation has {have:.3}")]
    Truncation { needed: f64, have: f64 },
    #[error("point outside the enumerated tessellation")]
    OutsideEnumeration,
    #[error("|α| = {alpha} at or above the integrability threshold √(4π)")]
    Threshold { alpha: f64 },
    #[error("Δ₊·k·q = {0} ≤ 1: the norm integral diverges at infinity")]
    DivergentTail(f64),
    #[error(transparent)]
    Hyp2f1(#[from] Hyp2f1Error),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Dimension, mass and the derived conformal weight and normalization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: u32,
    pub m2: f64,
    pub delta_plus: f64,
    pub gamma_plus: f64,
}

impl ModelParams {
    pub fn new(d: u32, m2: f64) -> Result<Self, GreensError> {
        if d < 2 {
            return Err(GreensError::Params(format!("dimension {d} < 2")));
        }
        if !(m2 > 0.0) || !m2.is_finite() {
            return Err(GreensError::Params(format!("m² must be positive, got {m2}")));
        }
        Ok(Self::from_delta(d, m2, Self::delta_for(d, m2)))
    }

    /// The `m² → 0⁺` limit `Δ₊ = d − 1`; used for comparisons with the
    /// massless propagator only (Neumann sums reject it in `d = 2`).
    pub fn massless(d: u32) -> Self {
        Self::from_delta(d, 0.0, (d - 1) as f64)
    }

    fn from_delta(d: u32, m2: f64, delta: f64) -> Self {
        let h = (d as f64 - 1.0) / 2.0;
        let gamma_plus = gamma(delta) / (2.0 * PI.powf(h) * gamma(delta + 1.0 - h));
        ModelParams { d, m2, delta_plus: delta, gamma_plus }
    }

    pub fn delta_for(d: u32, m2: f64) -> f64 {
        let dm1 = d as f64 - 1.0;
        0.5 * dm1 + 0.5 * (dm1 * dm1 + 4.0 * m2).sqrt()
    }

    /// Constant term of the short-distance expansion in `d = 2`:
    /// `G₊(ρ) = −(1/2π) log ρ + c₀ + o(1)`.
    pub fn log_constant(&self) -> f64 {
        (std::f64::consts::LN_2 - EULER_GAMMA - digamma(self.delta_plus)) / (2.0 * PI)
    }

    fn hyp_params(&self) -> (f64, f64, f64) {
        let dl = self.delta_plus;
        let b = dl + (2.0 - self.d as f64) / 2.0;
        let c = 2.0 * dl + 2.0 - self.d as f64;
        (dl, b, c)
    }
}

/// `G₊(ρ)` from the `sinh(ρ/2)` closed form (any `d`).
pub fn g_plus(mp: &ModelParams, rho: f64) -> Result<f64, GreensError> {
    Ok(ln_g_plus(mp, rho)?.exp())
}

/// `log G₊(ρ)`; stays finite where `G₊` itself underflows.
pub fn ln_g_plus(mp: &ModelParams, rho: f64) -> Result<f64, GreensError> {
    if !(rho > 0.0) {
        return Err(GreensError::Domain(rho));
    }
    let (a, b, c) = mp.hyp_params();
    let s = (0.5 * rho).sinh();
    let ch = (0.5 * rho).cosh();
    // Argument −1/sinh²(ρ/2); its complement cosh²/sinh² is passed exactly.
    let z = -1.0 / (s * s);
    let w = (ch / s) * (ch / s);
    let f = hyp2f1_complement(a, b, c, z, w)?;
    Ok(mp.gamma_plus.ln() - a * (4.0 * s * s).ln() + f.ln())
}

/// `G₊(ρ)` from the `w = (1 + cosh ρ)/2` form, evaluated through the
/// quadratic transformation as `γ₊ (2 cosh ρ)^{−Δ} ₂F₁(Δ/2, (Δ+1)/2; Δ+½;
/// sech²ρ)`. Only valid in `d = 2`; serves as an independent cross-check.
pub fn g_plus_w_form(mp: &ModelParams, rho: f64) -> Result<f64, GreensError> {
    if !(rho > 0.0) {
        return Err(GreensError::Domain(rho));
    }
    if mp.d != 2 {
        return Err(GreensError::Params("the w-form holds in d = 2 only".into()));
    }
    let dl = mp.delta_plus;
    let sech = 1.0 / rho.cosh();
    let th = rho.tanh();
    let f = hyp2f1_complement(0.5 * dl, 0.5 * (dl + 1.0), dl + 0.5, sech * sech, th * th)?;
    Ok((mp.gamma_plus.ln() - dl * (2.0 * rho.cosh()).ln() + f.ln()).exp())
}

/// Upper bound `γ₊ e^{−Δ₊ρ} ≥ G₊(ρ)` for `ρ` beyond a few units (the ratio
/// tends to 1 from below).
pub fn g_plus_envelope(mp: &ModelParams, rho: f64) -> f64 {
    mp.gamma_plus * (-mp.delta_plus * rho).exp()
}

/// Image-sum truncation of the Neumann function.
#[derive(Clone, Debug)]
pub struct NeumannTruncation<'a> {
    pub tess: &'a Tessellation,
    pub max_orbit_radius: f64,
    pub tail_tol: f64,
    /// Empirical orbit-growth constant `A` with `N(θ,x,y) ≤ A e^θ` for
    /// `x, y ∈ T₁`.
    pub orbit_constant: f64,
}

impl<'a> NeumannTruncation<'a> {
    pub fn new(tess: &'a Tessellation, max_orbit_radius: f64, tail_tol: f64) -> Result<Self, GreensError> {
        let c = tess.fundamental().centroid;
        let reach = tess.fundamental().vertices.iter().map(|v| dist(v, &c)).fold(0.0, f64::max);
        let have = tess.orbit_complete_radius(&c, &c);
        if have < 1.0 {
            return Err(GreensError::Truncation { needed: 1.0 + tess.radius - have, have: tess.radius });
        }
        let sup = tess
            .orbital_sup(&c, &c, 0.0, have)
            .map_err(|_| GreensError::Truncation { needed: have, have: tess.radius })?;
        // ρ(x, γy) ≥ ρ(c, γc) − 2·reach for x, y in T₁.
        let orbit_constant = sup * (2.0 * reach).exp();
        Ok(NeumannTruncation { tess, max_orbit_radius, tail_tol, orbit_constant })
    }

    /// Bound on the omitted images: with `G₊ ≤ γ₊e^{−Δρ}` and
    /// `N(θ) ≤ A e^θ`, `Σ_{ρ>R} G₊ ≤ Δ γ₊ A e^{(1−Δ)R}/(Δ−1)`.
    pub fn tail_bound(&self, mp: &ModelParams) -> f64 {
        let dl = mp.delta_plus;
        dl * mp.gamma_plus * self.orbit_constant * ((1.0 - dl) * self.max_orbit_radius).exp() / (dl - 1.0)
    }

    /// Same truncation with a different orbit radius.
    pub fn with_radius(&self, max_orbit_radius: f64) -> Self {
        NeumannTruncation { max_orbit_radius, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeumannValue {
    pub value: f64,
    pub tail_bound: f64,
    /// Number of images summed.
    pub images: usize,
}

fn require_neumann(mp: &ModelParams) -> Result<(), GreensError> {
    if mp.delta_plus > 1.0 {
        Ok(())
    } else {
        Err(GreensError::DeltaTooSmall(mp.delta_plus))
    }
}

/// Sum of `G₊(ρ(x, γy))` over enumerated `γ` with `ρ ≤ R`, for `x, y ∈ T₁`
/// (callers pull points back first); `skip_identity` drops `γ = e`.
/// Returns the sum and the number of images.
pub fn image_sum(mp: &ModelParams, nt: &NeumannTruncation, x: &Point, y: &Point, skip_identity: bool) -> Result<(f64, usize), GreensError> {
    let tess = nt.tess;
    let o = Point::origin();
    let c1 = tess.fundamental().centroid;
    let reach = dist(&o, x) + nt.max_orbit_radius + dist(y, &c1);
    if reach > tess.radius {
        return Err(GreensError::Truncation { needed: reach, have: tess.radius });
    }
    let mut sum = 0.0;
    let mut images = 0;
    for tile in &tess.tiles {
        if dist(&o, &tile.centroid) > reach {
            break;
        }
        if skip_identity && tile.id == 0 {
            continue;
        }
        let r = dist(x, &tile.g.apply(y));
        if r <= nt.max_orbit_radius {
            sum += g_plus(mp, r)?;
            images += 1;
        }
    }
    Ok((sum, images))
}

/// The Neumann function: the image sum if `x` and `y` share a tile,
/// exactly zero otherwise.
pub fn g_neumann(mp: &ModelParams, nt: &NeumannTruncation, x: &Point, y: &Point) -> Result<NeumannValue, GreensError> {
    require_neumann(mp)?;
    let tx = nt.tess.locate(x).ok_or(GreensError::OutsideEnumeration)?;
    let ty = nt.tess.locate(y).ok_or(GreensError::OutsideEnumeration)?;
    if tx != ty {
        return Ok(NeumannValue { value: 0.0, tail_bound: 0.0, images: 0 });
    }
    if dist(x, y) == 0.0 {
        return Err(GreensError::DiagonalSingularity);
    }
    let back = nt.tess.tiles[tx].g.inverse();
    let (value, images) = image_sum(mp, nt, &back.apply(x), &back.apply(y), false)?;
    Ok(NeumannValue { value, tail_bound: nt.tail_bound(mp), images })
}

/// `ΔG(x) = G_N(x,x) − G₊(x,x)`: the image sum without the identity.
pub fn delta_g(mp: &ModelParams, nt: &NeumannTruncation, x: &Point) -> Result<NeumannValue, GreensError> {
    require_neumann(mp)?;
    let t = nt.tess.locate(x).ok_or(GreensError::OutsideEnumeration)?;
    let back = nt.tess.tiles[t].g.inverse();
    let xb = back.apply(x);
    let edge = nt.tess.fundamental().sides.iter().map(|s| s.distance_to(&xb)).fold(f64::INFINITY, f64::min);
    if edge < 1e-9 {
        log::warn!("ΔG evaluated {edge:e} from a tile side; value is near-singular");
    }
    let (value, images) = image_sum(mp, nt, &xb, &xb, true)?;
    Ok(NeumannValue { value, tail_bound: nt.tail_bound(mp), images })
}

/// JSON audit record shared by the analytic audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub audit_name: String,
    pub params: serde_json::Value,
    pub n_samples: usize,
    pub max_violation: f64,
    pub tail_bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryReport {
    /// `max_t |f(t) − f(−t)|` over the grid `t = t₀ i/k`.
    pub max_asymmetry: f64,
    /// Central difference `(f(h) − f(−h))/2h` with `h = t₀/k`.
    pub derivative_at_zero: f64,
    /// Rounding floor of that difference quotient.
    pub derivative_noise_floor: f64,
    /// `f(±t)` on the grid, `t > 0`.
    pub samples: Vec<(f64, f64, f64)>,
    pub tail_bound: f64,
}

/// Point at signed distance `t` from `side` along the perpendicular through
/// `foot` (negative `t` on the side opposite the normal).
fn perpendicular(side: &Geodesic, foot: &Point, t: f64) -> Point {
    Point::normalize(t.cosh() * foot.coords() + t.sinh() * side.normal()).expect("timelike")
}

/// Evenness check of `f(t) = G_N(x, y(t))` (`t ≤ 0`), `G_N(γ̃x, y(t))`
/// (`t > 0`) along the perpendicular geodesic `y(t)` through the foot of `x`
/// on `side`, with `γ̃` the reflection in `side`.
pub fn neumann_symmetry_audit(
    mp: &ModelParams,
    nt: &NeumannTruncation,
    side: &Geodesic,
    x: &Point,
    t0: f64,
    k: usize,
) -> Result<SymmetryReport, GreensError> {
    let side = if side.side(x) > 0.0 { side.flipped() } else { *side };
    let foot = side.foot(x);
    let refl = side.reflection();
    let rx = refl.apply(x);
    let f = |t: f64| -> Result<f64, GreensError> {
        let y = perpendicular(&side, &foot, t);
        let src = if t <= 0.0 { x } else { &rx };
        Ok(g_neumann(mp, nt, src, &y)?.value)
    };
    symmetry_report(f, t0, k, nt.tail_bound(mp))
}

/// The same evenness check with `Γ` replaced by `{e, γ̃}`.
pub fn two_element_symmetry_audit(mp: &ModelParams, side: &Geodesic, x: &Point, t0: f64, k: usize) -> Result<SymmetryReport, GreensError> {
    let side = if side.side(x) > 0.0 { side.flipped() } else { *side };
    let foot = side.foot(x);
    let refl = side.reflection();
    let rx = refl.apply(x);
    let f = |t: f64| -> Result<f64, GreensError> {
        let y = perpendicular(&side, &foot, t);
        let src = if t <= 0.0 { *x } else { rx };
        Ok(g_plus(mp, dist(&src, &y))? + g_plus(mp, dist(&src, &refl.apply(&y)))?)
    };
    symmetry_report(f, t0, k, 0.0)
}

fn symmetry_report<F>(f: F, t0: f64, k: usize, tail_bound: f64) -> Result<SymmetryReport, GreensError>
where
    F: Fn(f64) -> Result<f64, GreensError>,
{
    let k = k.max(1);
    let mut samples = Vec::with_capacity(k);
    let mut max_asymmetry: f64 = 0.0;
    for i in 1..=k {
        let t = t0 * i as f64 / k as f64;
        let (fp, fm) = (f(t)?, f(-t)?);
        max_asymmetry = max_asymmetry.max((fp - fm).abs());
        samples.push((t, fm, fp));
    }
    let (h, fm, fp) = samples[0];
    let derivative_at_zero = (fp - fm) / (2.0 * h);
    // Each value is a sum of O(10³–10⁵) terms; allow that many ulps.
    let derivative_noise_floor = 1e3 * f64::EPSILON * fp.abs().max(fm.abs()) / h;
    Ok(SymmetryReport { max_asymmetry, derivative_at_zero, derivative_noise_floor, samples, tail_bound })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DominationReport {
    pub n_pairs: usize,
    pub violations: usize,
    pub max_violation: f64,
    /// Empirical `sup G_N/G₊` over the sampled pairs.
    pub c_estimate: f64,
    pub tail_bound: f64,
    pub passed: bool,
}

impl DominationReport {
    pub fn record(&self, mp: &ModelParams) -> AuditRecord {
        AuditRecord {
            audit_name: "domination".into(),
            params: serde_json::json!({ "d": mp.d, "m2": mp.m2, "delta_plus": mp.delta_plus, "c_estimate": self.c_estimate }),
            n_samples: self.n_pairs,
            max_violation: self.max_violation,
            tail_bound: self.tail_bound,
            passed: self.passed,
        }
    }
}

/// Uniform-in-Klein sample of a point inside a tile.
pub fn sample_in_tile<R: Rng>(tile: &Tile, rng: &mut R) -> Point {
    let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
    if u + v > 1.0 {
        u = 1.0 - u;
        v = 1.0 - v;
    }
    let k = |p: &Point| p.coords() / p.x3();
    let q = (1.0 - u - v) * k(&tile.vertices[0]) + u * k(&tile.vertices[1]) + v * k(&tile.vertices[2]);
    Point::normalize(q).expect("inside the Klein disk")
}

/// Checks `G₊(ρ(x,y)) ≤ G_N(x,y)` on random same-tile pairs in `T₁`.
pub fn domination_audit(mp: &ModelParams, nt: &NeumannTruncation, n_pairs: usize, seed: u64) -> Result<DominationReport, GreensError> {
    require_neumann(mp)?;
    let tile = nt.tess.fundamental();
    let results: Vec<Result<(f64, f64), GreensError>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (x, y) = loop {
                let x = sample_in_tile(tile, &mut rng);
                let y = sample_in_tile(tile, &mut rng);
                if dist(&x, &y) >= 1e-3 && nt.tess.locate(&x) == Some(0) && nt.tess.locate(&y) == Some(0) {
                    break (x, y);
                }
            };
            let gp = g_plus(mp, dist(&x, &y))?;
            let gn = g_neumann(mp, nt, &x, &y)?.value;
            Ok((gp, gn))
        })
        .collect();
    let mut violations = 0;
    let mut max_violation: f64 = 0.0;
    let mut c_estimate: f64 = 0.0;
    for r in results {
        let (gp, gn) = r?;
        let excess = gp - gn;
        if excess > 1e-10 {
            violations += 1;
        }
        max_violation = max_violation.max(excess.max(0.0));
        c_estimate = c_estimate.max(gn / gp);
    }
    Ok(DominationReport {
        n_pairs,
        violations,
        max_violation,
        c_estimate,
        tail_bound: nt.tail_bound(mp),
        passed: violations == 0,
    })
}

/// `(2π ∫₀^∞ G₊(ρ)^{kq} sinh ρ dρ)^{1/q}`, the `L^q` norm of `G₊ᵏ`.
pub fn gk_norm(mp: &ModelParams, k: u32, q: f64) -> Result<f64, GreensError> {
    Ok(gk_integral(mp, k, q)?.powf(1.0 / q))
}

/// `2π ∫₀^∞ G₊^{kq} sinh ρ dρ`, split at `ρ = 1`.
pub fn gk_integral(mp: &ModelParams, k: u32, q: f64) -> Result<f64, GreensError> {
    let p = k as f64 * q;
    if !(k >= 1 && q > 1.0) {
        return Err(GreensError::Params(format!("need k ≥ 1 and q > 1, got k = {k}, q = {q}")));
    }
    if mp.delta_plus * p <= 1.0 {
        return Err(GreensError::DivergentTail(mp.delta_plus * p));
    }
    let opts = QuadOptions::tol(0.0, 1e-12);
    let g = |r: f64| g_plus(mp, r).unwrap_or(f64::NAN);
    // ρ = e^{−s} on (0, 1]: the log singularity becomes polynomial in s.
    let head = quad::integrate_to_infinity(
        |s| {
            let r = (-s).exp();
            if r == 0.0 {
                return 0.0;
            }
            g(r).powf(p) * r.sinh() * r
        },
        0.0,
        opts,
    )?;
    let tail = quad::integrate_to_infinity(|r| { let v = g(r); if v == 0.0 { 0.0 } else { v.powf(p) * r.sinh() } }, 1.0, opts)?;
    Ok(2.0 * PI * (head.value + tail.value))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ExpKernelIntegral {
    /// Cell-pair sum over pairs at least `mesh` apart.
    pub off_band: f64,
    /// Estimate of the pairs within `mesh` from the log singularity.
    pub band: f64,
    pub total: f64,
    pub area: f64,
}

/// `∫_Λ∫_Λ exp(α² G₊(ρ(x,y))) dx dy` on quadrature cells. Pairs closer than
/// `mesh` are replaced by the band estimate: there `e^{α²G₊} ≈ e^{α²c₀}
/// ρ^{−a}` with `a = α²/2π`, whose disk average over radius `mesh` is
/// `e^{α²c₀} mesh^{−a}·2/(2−a)`; integrable iff `a < 2`, i.e. `α² < 4π`.
pub fn exp_kernel_integral(mp: &ModelParams, alpha: f64, cells: &[Cell], mesh: f64) -> Result<ExpKernelIntegral, GreensError> {
    let a = alpha * alpha / (2.0 * PI);
    // α² can round just below 4π at α = √(4π); compare α too.
    if a >= 2.0 || alpha.abs() >= (4.0 * PI).sqrt() {
        return Err(GreensError::Threshold { alpha: alpha.abs() });
    }
    if !(mesh > 0.0) {
        return Err(GreensError::Params(format!("mesh must be positive, got {mesh}")));
    }
    if mp.d != 2 {
        return Err(GreensError::Params("the band estimate uses the d = 2 singularity".into()));
    }
    let band_factor = (alpha * alpha * mp.log_constant()).exp() * mesh.powf(-a) * 2.0 / (2.0 - a);
    let rows: Vec<Result<(f64, f64), GreensError>> = cells
        .par_iter()
        .map(|ci| {
            let (mut off, mut band) = (0.0, 0.0);
            for cj in cells {
                let r = dist(&ci.point, &cj.point);
                let ww = ci.weight * cj.weight;
                if r >= mesh {
                    off += ww * if alpha == 0.0 { 1.0 } else { (alpha * alpha * g_plus(mp, r)?).exp() };
                } else {
                    band += ww * band_factor;
                }
            }
            Ok((off, band))
        })
        .collect();
    let (mut off_band, mut band) = (0.0, 0.0);
    for r in rows {
        let (o, b) = r?;
        off_band += o;
        band += b;
    }
    let area = cells.iter().map(|c| c.weight).sum();
    Ok(ExpKernelIntegral { off_band, band, total: off_band + band, area })
}
