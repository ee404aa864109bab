//! Hyperbolic plane geometry on the Lorentz hyperboloid.
//!
//! Points live on the upper sheet `x1² + x2² − x3² = −1`, `x3 > 0`. The
//! Poincaré disk and the upper half-plane are charts over the same points.
//! The half-plane chart is fixed once and for all by the Cayley map
//!
//! ```text
//! w = i (1 − ζ) / (1 + ζ),        ζ in the unit disk, w = ζ_hp + i z
//! ```
//!
//! which sends the disk origin to `(z, ζ) = (1, 0)`, the boundary angle `β`
//! to `η = tan(β/2)` and the boundary point at angle `π` to infinity. In
//! Lorentz coordinates this is `z = 1/(x1 + x3)`, `ζ = x2/(x1 + x3)`.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed residual of the hyperboloid equation for a stored point.
pub const SHEET_TOL: f64 = 1e-12;

/// Compositions between two projections back onto the Lorentz group.
pub const REORTHOGONALIZE_EVERY: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point lies at numerical infinity of the {chart} chart")]
    ChartOverflow { chart: &'static str },
    #[error("normal vector is not spacelike: (v,v)_L = {0}")]
    InvalidNormal(f64),
    #[error("points coincide; no unique geodesic through them")]
    DegenerateGeodesic,
    #[error("vector is not on the upper sheet of the hyperboloid")]
    OffSheet,
}

/// Lorentz bilinear form `(a,b)_L = a1 b1 + a2 b2 − a3 b3`.
#[inline]
pub fn lorentz_dot(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.x * b.x + a.y * b.y - a.z * b.z
}

fn eta() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))
}

/// A point of the hyperbolic plane in the Lorentz model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(Vector3<f64>);

impl Point {
    pub fn origin() -> Self {
        Point(Vector3::new(0.0, 0.0, 1.0))
    }

    /// Builds a point from Lorentz coordinates, rejecting anything off the
    /// upper sheet by more than [`SHEET_TOL`] (relative to `x3²`).
    pub fn from_lorentz(x1: f64, x2: f64, x3: f64) -> Result<Self, GeometryError> {
        let v = Vector3::new(x1, x2, x3);
        let residual = lorentz_dot(&v, &v) + 1.0;
        if !(x3 > 0.0) || residual.abs() > SHEET_TOL * x3 * x3.max(1.0) {
            return Err(GeometryError::OffSheet);
        }
        Ok(Point(v))
    }

    /// Projects a timelike vector onto the upper sheet along its ray.
    pub fn normalize(v: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = -lorentz_dot(&v, &v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(GeometryError::OffSheet);
        }
        let p = v / n.sqrt();
        Ok(Point(if p.z < 0.0 { -p } else { p }))
    }

    /// Point at geodesic distance `rho` from the origin in direction `angle`.
    pub fn from_polar(rho: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Point(Vector3::new(rho.sinh() * c, rho.sinh() * s, rho.cosh()))
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.0
    }

    pub fn x1(&self) -> f64 {
        self.0.x
    }

    pub fn x2(&self) -> f64 {
        self.0.y
    }

    pub fn x3(&self) -> f64 {
        self.0.z
    }

    /// `|(x,x)_L + 1|`.
    pub fn sheet_residual(&self) -> f64 {
        (lorentz_dot(&self.0, &self.0) + 1.0).abs()
    }

    pub fn to_disk(&self) -> DiskPoint {
        let d = 1.0 + self.0.z;
        DiskPoint { x: self.0.x / d, y: self.0.y / d }
    }

    pub fn to_half_plane(&self) -> Result<HalfPlanePoint, GeometryError> {
        let s = self.0.x + self.0.z;
        if !(s > 0.0) || !s.is_finite() {
            return Err(GeometryError::ChartOverflow { chart: "half-plane" });
        }
        Ok(HalfPlanePoint { z: 1.0 / s, zeta: self.0.y / s })
    }

    /// Angle of the point as seen from the origin, in `(−π, π]`.
    pub fn polar_angle(&self) -> f64 {
        self.0.y.atan2(self.0.x)
    }

    pub fn dist_to_origin(&self) -> f64 {
        dist(self, &Point::origin())
    }
}

/// Geodesic distance. Uses `sinh(ρ/2) = ½ √((a−b, a−b)_L)`, which stays
/// accurate for nearby points where `arccosh(−(a,b)_L)` loses digits.
pub fn dist(a: &Point, b: &Point) -> f64 {
    let d = a.0 - b.0;
    let q = lorentz_dot(&d, &d).max(0.0);
    let near = 2.0 * (0.5 * q.sqrt()).asinh();
    if near < 1.0 {
        near
    } else {
        (-lorentz_dot(&a.0, &b.0)).max(1.0).acosh()
    }
}

/// Point in the Poincaré disk chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !(x * x + y * y < 1.0) {
            return Err(GeometryError::ChartOverflow { chart: "disk" });
        }
        Ok(DiskPoint { x, y })
    }

    pub fn from_polar(r: f64, beta: f64) -> Result<Self, GeometryError> {
        Self::new(r * beta.cos(), r * beta.sin())
    }

    pub fn r(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn beta(&self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn to_lorentz(&self) -> Result<Point, GeometryError> {
        let r2 = self.x * self.x + self.y * self.y;
        let d = 1.0 - r2;
        if !(d > 0.0) {
            return Err(GeometryError::ChartOverflow { chart: "disk" });
        }
        Ok(Point(Vector3::new(2.0 * self.x / d, 2.0 * self.y / d, (1.0 + r2) / d)))
    }
}

/// Point in the upper half-plane chart, `z > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfPlanePoint {
    pub z: f64,
    pub zeta: f64,
}

impl HalfPlanePoint {
    pub fn new(z: f64, zeta: f64) -> Result<Self, GeometryError> {
        if !(z > 0.0) || !zeta.is_finite() {
            return Err(GeometryError::ChartOverflow { chart: "half-plane" });
        }
        Ok(HalfPlanePoint { z, zeta })
    }

    pub fn to_lorentz(&self) -> Result<Point, GeometryError> {
        if !(self.z > 0.0) {
            return Err(GeometryError::ChartOverflow { chart: "half-plane" });
        }
        let s = self.z * self.z + self.zeta * self.zeta;
        let two_z = 2.0 * self.z;
        Ok(Point(Vector3::new((1.0 - s) / two_z, self.zeta / self.z, (1.0 + s) / two_z)))
    }
}

/// Boundary angle `β` of the disk mapped to the real boundary coordinate of
/// the half-plane chart.
pub fn boundary_angle_to_eta(beta: f64) -> f64 {
    (0.5 * beta).tan()
}

/// Inverse of [`boundary_angle_to_eta`], with values in `(−π, π)`.
pub fn eta_to_boundary_angle(eta: f64) -> f64 {
    2.0 * eta.atan()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Model {
    Lorentz,
    Disk,
    HalfPlane,
}

/// A point expressed in one of the three models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelPoint {
    Lorentz(Point),
    Disk(DiskPoint),
    HalfPlane(HalfPlanePoint),
}

impl ModelPoint {
    pub fn to_lorentz(&self) -> Result<Point, GeometryError> {
        match self {
            ModelPoint::Lorentz(p) => Ok(*p),
            ModelPoint::Disk(d) => d.to_lorentz(),
            ModelPoint::HalfPlane(h) => h.to_lorentz(),
        }
    }

    pub fn convert(&self, target: Model) -> Result<ModelPoint, GeometryError> {
        let p = self.to_lorentz()?;
        Ok(match target {
            Model::Lorentz => ModelPoint::Lorentz(p),
            Model::Disk => {
                let d = p.to_disk();
                ModelPoint::Disk(DiskPoint::new(d.x, d.y)?)
            }
            Model::HalfPlane => ModelPoint::HalfPlane(p.to_half_plane()?),
        })
    }
}

/// An element of O⁺(2,1) acting linearly on the hyperboloid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    m: Matrix3<f64>,
    det_sign: i8,
    #[serde(skip)]
    compositions: u32,
}

impl Isometry {
    pub fn identity() -> Self {
        Isometry { m: Matrix3::identity(), det_sign: 1, compositions: 0 }
    }

    /// Wraps a matrix after checking `mᵀ η m = η` (to `tol`) and `m₃₃ > 0`.
    pub fn from_matrix(m: Matrix3<f64>, tol: f64) -> Option<Self> {
        let res = (m.transpose() * eta() * m - eta()).abs().max();
        if res > tol || !(m[(2, 2)] > 0.0) {
            return None;
        }
        let det_sign = if m.determinant() > 0.0 { 1 } else { -1 };
        Some(Isometry { m, det_sign, compositions: 0 })
    }

    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let m = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
        Isometry { m, det_sign: 1, compositions: 0 }
    }

    /// Hyperbolic translation by `d` along the geodesic through the origin
    /// with direction `angle`.
    pub fn translation(d: f64, angle: f64) -> Self {
        let (ch, sh) = (d.cosh(), d.sinh());
        let boost = Matrix3::new(ch, 0.0, sh, 0.0, 1.0, 0.0, sh, 0.0, ch);
        let r = Isometry::rotation(angle);
        let m = r.m * boost * r.m.transpose();
        Isometry { m, det_sign: 1, compositions: 0 }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn det_sign(&self) -> i8 {
        self.det_sign
    }

    /// Maximum entry of `|mᵀ η m − η|`.
    pub fn lorentz_residual(&self) -> f64 {
        (self.m.transpose() * eta() * self.m - eta()).abs().max()
    }

    pub fn apply(&self, p: &Point) -> Point {
        let v = self.m * p.0;
        // Renormalize; the matrix is Lorentz up to rounding.
        Point::normalize(v).unwrap_or(Point(v))
    }

    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.m * v
    }

    /// `self ∘ other`, re-projected onto the Lorentz group every
    /// [`REORTHOGONALIZE_EVERY`] compositions.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let mut out = Isometry {
            m: self.m * other.m,
            det_sign: self.det_sign * other.det_sign,
            compositions: self.compositions.max(other.compositions) + 1,
        };
        if out.compositions % REORTHOGONALIZE_EVERY == 0 {
            out.reorthogonalize();
        }
        out
    }

    /// Exact inverse `η mᵀ η` (exact for Lorentz matrices).
    pub fn inverse(&self) -> Isometry {
        let e = eta();
        Isometry { m: e * self.m.transpose() * e, det_sign: self.det_sign, compositions: self.compositions }
    }

    /// Newton–Schulz step `m ← m(3I − η mᵀ η m)/2` towards the Lorentz
    /// group. Skipped while the residual is at the rounding floor of the
    /// product, where a correction would only inject noise of size
    /// `ε‖m‖²`.
    pub fn reorthogonalize(&mut self) {
        let e = eta();
        let scale = self.m.abs().max().powi(2);
        for _ in 0..3 {
            if self.lorentz_residual() <= 64.0 * f64::EPSILON * scale {
                break;
            }
            let gram = e * self.m.transpose() * e * self.m;
            self.m = 0.5 * self.m * (3.0 * Matrix3::identity() - gram);
        }
    }
}

/// An oriented geodesic `{x : (x,v)_L = 0}` with unit spacelike normal `v`.
/// The side with `(x,v)_L > 0` is called the positive (outer) side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    v: Vector3<f64>,
}

impl Geodesic {
    pub fn from_normal(v: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = lorentz_dot(&v, &v);
        if !(n > 1e-300) || !n.is_finite() {
            return Err(GeometryError::InvalidNormal(n));
        }
        Ok(Geodesic { v: v / n.sqrt() })
    }

    /// Geodesic through two distinct points.
    pub fn through(a: &Point, b: &Point) -> Result<Self, GeometryError> {
        if dist(a, b) < 1e-12 {
            return Err(GeometryError::DegenerateGeodesic);
        }
        let c = a.0.cross(&b.0);
        let mut g = Self::from_normal(Vector3::new(c.x, c.y, -c.z))?;
        // Cancellation in the cross product leaves a small component along a and b.
        for p in [a, b] {
            let t = lorentz_dot(&p.0, &g.v);
            g.v += t * p.0;
        }
        Self::from_normal(g.v)
    }

    pub fn normal(&self) -> &Vector3<f64> {
        &self.v
    }

    pub fn flipped(&self) -> Self {
        Geodesic { v: -self.v }
    }

    /// Signed side test `(p,v)_L`; `sinh` of the signed distance.
    pub fn side(&self, p: &Point) -> f64 {
        lorentz_dot(&p.0, &self.v)
    }

    pub fn distance_to(&self, p: &Point) -> f64 {
        self.side(p).abs().asinh()
    }

    /// Orthogonal projection of `p` onto the geodesic.
    pub fn foot(&self, p: &Point) -> Point {
        let t = self.side(p);
        Point::normalize(p.0 - t * self.v).expect("projection of a point is timelike")
    }

    pub fn reflection(&self) -> Isometry {
        let m = Matrix3::identity() - 2.0 * self.v * (eta() * self.v).transpose();
        Isometry { m, det_sign: -1, compositions: 0 }
    }

    /// Image of the geodesic under an isometry.
    pub fn transformed(&self, g: &Isometry) -> Geodesic {
        // Isometries preserve the Lorentz form, so normals map linearly.
        Geodesic::from_normal(g.m * self.v).unwrap_or(*self)
    }
}

/// Reflection in the geodesic with unit normal `v`; rejects lightlike or
/// timelike normals.
pub fn reflect_in(geo: &Geodesic) -> Isometry {
    geo.reflection()
}

/// Geodesic midpoint.
pub fn midpoint(a: &Point, b: &Point) -> Point {
    Point::normalize(a.0 + b.0).expect("sum of future timelike vectors is timelike")
}

/// Lorentz barycenter of a set of points (normalized sum).
pub fn barycenter(points: &[Point]) -> Point {
    let s = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.0);
    Point::normalize(s).expect("sum of future timelike vectors is timelike")
}

/// Unit tangent at `at` pointing along the geodesic towards `to`.
pub fn unit_tangent(at: &Point, to: &Point) -> Vector3<f64> {
    let t = to.0 + lorentz_dot(&to.0, &at.0) * at.0;
    t / lorentz_dot(&t, &t).max(0.0).sqrt()
}

/// Interior angle at vertex `v` of the geodesic triangle `(v, p, q)`, measured
/// between tangent vectors.
pub fn angle_at(v: &Point, p: &Point, q: &Point) -> f64 {
    let tp = unit_tangent(v, p);
    let tq = unit_tangent(v, q);
    let c = lorentz_dot(&tp, &tq).clamp(-1.0, 1.0);
    // atan2 form keeps accuracy for small angles.
    let cross = (1.0 - c * c).max(0.0).sqrt();
    cross.atan2(c)
}

/// Area by Gauss–Bonnet: `π −` angle sum.
pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    PI - angle_at(a, b, c) - angle_at(b, c, a) - angle_at(c, a, b)
}

/// Incenter of a geodesic triangle: barycentric weights `sinh` of the
/// opposite side lengths.
pub fn incenter(a: &Point, b: &Point, c: &Point) -> Point {
    let la = dist(b, c).sinh();
    let lb = dist(c, a).sinh();
    let lc = dist(a, b).sinh();
    Point::normalize(la * a.0 + lb * b.0 + lc * c.0).expect("positive combination is timelike")
}

/// `S(r0) = {x : r(x) ≥ r0, β(x) ∈ (β0, β1)}` in disk polar coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub r0: f64,
    pub beta0: f64,
    pub beta1: f64,
}

/// Result of checking `z(x) e^{ρ(o,x)} ≤ C` over sector samples.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZBoundReport {
    pub n_in_sector: usize,
    pub max_product: f64,
}

impl Sector {
    pub fn new(r0: f64, beta0: f64, beta1: f64) -> Option<Self> {
        (r0 > 0.0 && r0 < 1.0 && beta0 < beta1 && beta1 - beta0 < TAU).then_some(Sector { r0, beta0, beta1 })
    }

    pub fn contains_angle(&self, beta: f64) -> bool {
        let d = (beta - self.beta0).rem_euclid(TAU);
        d > 0.0 && d < self.beta1 - self.beta0
    }

    pub fn contains(&self, p: &Point) -> bool {
        let d = p.to_disk();
        d.r() >= self.r0 * (1.0 - 1e-12) && self.contains_angle(d.beta())
    }

    /// Draws points uniformly in angle and in geodesic radius from the
    /// sector's inner edge out to `extra_rho` beyond it.
    pub fn sample<R: Rng>(&self, n: usize, extra_rho: f64, rng: &mut R) -> Vec<Point> {
        let rho0 = 2.0 * self.r0.atanh();
        (0..n)
            .map(|_| {
                let beta = self.beta0 + (self.beta1 - self.beta0) * rng.random::<f64>();
                let rho = rho0 + extra_rho * rng.random::<f64>();
                Point::from_polar(rho, beta)
            })
            .collect()
    }

    pub fn z_bound_check(&self, samples: &[Point]) -> ZBoundReport {
        let mut n = 0;
        let mut max_product: f64 = 0.0;
        for p in samples.iter().filter(|p| self.contains(p)) {
            if let Ok(h) = p.to_half_plane() {
                n += 1;
                max_product = max_product.max(h.z * p.dist_to_origin().exp());
            }
        }
        ZBoundReport { n_in_sector: n, max_product }
    }
}

pub fn in_sector(s: &Sector, p: &Point) -> bool {
    s.contains(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_point<R: Rng>(rng: &mut R, max_rho: f64) -> Point {
        Point::from_polar(max_rho * rng.random::<f64>(), TAU * rng.random::<f64>())
    }

    fn random_isometry<R: Rng>(rng: &mut R) -> Isometry {
        let t = Isometry::translation(3.0 * rng.random::<f64>(), TAU * rng.random::<f64>());
        let r = Isometry::rotation(TAU * rng.random::<f64>());
        if rng.random::<bool>() {
            t.compose(&r)
        } else {
            t.compose(&r).compose(&Geodesic::from_normal(Vector3::new(0.0, 1.0, 0.0)).unwrap().reflection())
        }
    }

    #[test]
    fn distance_identity_and_half_plane_value() {
        assert_eq!(dist(&Point::origin(), &Point::origin()), 0.0);
        let a = HalfPlanePoint::new(1.0, 0.0).unwrap().to_lorentz().unwrap();
        let b = HalfPlanePoint::new(1.0, 1.0).unwrap().to_lorentz().unwrap();
        // u = ((z−z')² + (ζ−ζ')²)/(2zz') = 1/2
        assert_abs_diff_eq!(dist(&a, &b), 1.5f64.acosh(), epsilon = 1e-14);
        assert_abs_diff_eq!(dist(&a, &b), 0.962_423_650_119_206_9, epsilon = 1e-12);
    }

    #[test]
    fn isometry_invariance_of_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let (a, b) = (random_point(&mut rng, 4.0), random_point(&mut rng, 4.0));
            let g = random_isometry(&mut rng);
            assert!((dist(&g.apply(&a), &g.apply(&b)) - dist(&a, &b)).abs() < 1e-10);
        }
    }

    #[test]
    fn chart_examples() {
        let o = ModelPoint::Lorentz(Point::origin());
        match o.convert(Model::Disk).unwrap() {
            ModelPoint::Disk(d) => assert_eq!((d.x, d.y), (0.0, 0.0)),
            _ => unreachable!(),
        }
        match ModelPoint::Disk(DiskPoint::new(0.0, 0.0).unwrap()).convert(Model::HalfPlane).unwrap() {
            ModelPoint::HalfPlane(h) => {
                assert_abs_diff_eq!(h.z, 1.0, epsilon = 1e-15);
                assert_abs_diff_eq!(h.zeta, 0.0, epsilon = 1e-15);
            }
            _ => unreachable!(),
        }
        // Distance between disk (0,0) and (0.5,0) is 2 artanh(0.5) in every chart.
        let p = DiskPoint::new(0.0, 0.0).unwrap();
        let q = DiskPoint::new(0.5, 0.0).unwrap();
        let expected = 2.0 * 0.5f64.atanh();
        let lp = p.to_lorentz().unwrap();
        let lq = q.to_lorentz().unwrap();
        let hp = lp.to_half_plane().unwrap().to_lorentz().unwrap();
        let hq = lq.to_half_plane().unwrap().to_lorentz().unwrap();
        assert_abs_diff_eq!(dist(&lp, &lq), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(dist(&hp, &hq), expected, epsilon = 1e-10);
    }

    #[test]
    fn chart_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let p = random_point(&mut rng, 3.0);
            let d = p.to_disk();
            let back = DiskPoint::new(d.x, d.y).unwrap().to_lorentz().unwrap();
            let h = p.to_half_plane().unwrap();
            let back_h = h.to_lorentz().unwrap();
            let dd = back.to_disk();
            let hh = back_h.to_half_plane().unwrap();
            worst = worst.max((dd.x - d.x).abs()).max((dd.y - d.y).abs());
            worst = worst.max((hh.z - h.z).abs()).max((hh.zeta - h.zeta).abs());
        }
        assert!(worst < 1e-12, "round-trip deviation {worst}");
    }

    #[test]
    fn chart_overflow() {
        assert!(DiskPoint::new(1.0, 0.0).is_err());
        assert!(HalfPlanePoint::new(0.0, 1.0).is_err());
        assert!(HalfPlanePoint::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn boundary_angle_maps_to_tangent_of_half_angle() {
        let beta = 0.7;
        let far = Point::from_polar(30.0, beta).to_half_plane().unwrap();
        assert!(far.z < 1e-10);
        assert_abs_diff_eq!(far.zeta, boundary_angle_to_eta(beta), epsilon = 1e-10);
        assert_abs_diff_eq!(eta_to_boundary_angle(boundary_angle_to_eta(beta)), beta, epsilon = 1e-15);
    }

    #[test]
    fn reflection_basics() {
        let axis = Geodesic::from_normal(Vector3::new(0.0, 1.0, 0.0)).unwrap();
        let r = reflect_in(&axis);
        let p = DiskPoint::new(0.3, 0.4).unwrap().to_lorentz().unwrap();
        let q = r.apply(&p).to_disk();
        assert_abs_diff_eq!(q.x, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(q.y, -0.4, epsilon = 1e-14);
        assert_eq!(r.det_sign(), -1);
        assert!(r.apply(&Point::origin()).sheet_residual() < 1e-15);
        assert!(Geodesic::from_normal(Vector3::new(0.0, 0.0, 1.0)).is_err());
        assert!(Geodesic::from_normal(Vector3::new(1.0, 0.0, 1.0)).is_err());
    }

    #[test]
    fn reflections_are_involutions_fixing_their_mirror() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (a, b) = (random_point(&mut rng, 3.0), random_point(&mut rng, 3.0));
            let g = Geodesic::through(&a, &b).unwrap();
            assert!(g.side(&a).abs() < 1e-12 && g.side(&b).abs() < 1e-12);
            assert_abs_diff_eq!(lorentz_dot(g.normal(), g.normal()), 1.0, epsilon = 1e-14);
            let r = g.reflection();
            let rr = r.compose(&r);
            assert!((rr.matrix() - Matrix3::identity()).abs().max() < 1e-12);
            assert!(dist(&r.apply(&a), &a) < 1e-10);
            assert!(dist(&r.apply(&b), &b) < 1e-10);
            let p = random_point(&mut rng, 3.0);
            assert!(dist(&r.apply(&r.apply(&p)), &p) < 1e-12 * p.x3().max(1.0));
        }
    }

    #[test]
    fn midpoint_of_point_and_mirror_image_lies_on_mirror() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let g = Geodesic::through(&random_point(&mut rng, 2.0), &random_point(&mut rng, 2.0)).unwrap();
            let p = random_point(&mut rng, 2.0);
            let m = midpoint(&p, &g.reflection().apply(&p));
            assert!(g.side(&m).abs() < 1e-10);
            // Oracle: golden-section minimization of the distance along the
            // arc-length parametrized geodesic.
            let base = g.foot(&Point::origin());
            let c = base.coords().cross(g.normal());
            let t = Vector3::new(c.x, c.y, -c.z);
            let t = t / lorentz_dot(&t, &t).sqrt();
            let at = |s: f64| Point::normalize(s.cosh() * base.coords() + s.sinh() * t).unwrap();
            let (mut lo, mut hi) = (-12.0f64, 12.0f64);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let a = hi - phi * (hi - lo);
                let b = lo + phi * (hi - lo);
                if dist(&p, &at(a)) < dist(&p, &at(b)) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            assert!(dist(&m, &at(0.5 * (lo + hi))) < 1e-6);
        }
    }

    #[test]
    fn geodesic_through_diameter() {
        let a = DiskPoint::new(0.0, 0.0).unwrap().to_lorentz().unwrap();
        let b = DiskPoint::new(0.5, 0.0).unwrap().to_lorentz().unwrap();
        let g = Geodesic::through(&a, &b).unwrap();
        // Real axis: normal ∝ (0, ±1, 0).
        assert_abs_diff_eq!(g.normal().y.abs(), 1.0, epsilon = 1e-14);
        assert_eq!(Geodesic::through(&a, &a), Err(GeometryError::DegenerateGeodesic));
    }

    #[test]
    fn long_composition_chain_stays_on_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mirrors: Vec<_> = (0..3)
            .map(|_| Geodesic::through(&random_point(&mut rng, 1.0), &random_point(&mut rng, 1.0)).unwrap())
            .collect();
        let mut g = Isometry::identity();
        let mut p = Point::from_polar(0.3, 0.2);
        for i in 0..100 {
            let r = mirrors[i % 3].reflection();
            g = g.compose(&r);
            p = r.apply(&p);
            assert!(p.sheet_residual() < 1e-12 * p.x3() * p.x3());
        }
        assert!(g.lorentz_residual() < 1e-10 * g.matrix().abs().max().powi(2));
    }

    #[test]
    fn triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let (a, b, c) = (random_point(&mut rng, 4.0), random_point(&mut rng, 4.0), random_point(&mut rng, 4.0));
            assert!(dist(&a, &c) <= dist(&a, &b) + dist(&b, &c) + 1e-10);
        }
    }

    #[test]
    fn incenter_is_equidistant_from_sides() {
        let (a, b, c) = (Point::origin(), Point::from_polar(1.2, 0.0), Point::from_polar(0.8, 1.0));
        let i = incenter(&a, &b, &c);
        let d: Vec<f64> = [(a, b), (b, c), (c, a)]
            .iter()
            .map(|(p, q)| Geodesic::through(p, q).unwrap().distance_to(&i))
            .collect();
        assert_abs_diff_eq!(d[0], d[1], epsilon = 1e-12);
        assert_abs_diff_eq!(d[1], d[2], epsilon = 1e-12);
    }

    #[test]
    fn sector_membership_and_z_bound() {
        let s = Sector::new(0.5, 0.0, PI / 2.0).unwrap();
        assert!(!s.contains(&Point::origin()));
        let edge = DiskPoint::from_polar(0.5, PI / 4.0).unwrap().to_lorentz().unwrap();
        assert!(s.contains(&edge));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let small = s.z_bound_check(&s.sample(10_000, 15.0, &mut rng));
        let large = s.z_bound_check(&s.sample(20_000, 15.0, &mut rng));
        assert_eq!(small.n_in_sector, 10_000);
        assert!(small.max_product.is_finite() && small.max_product <= 4.0 + 1e-9);
        assert!((large.max_product - small.max_product).abs() < 0.05 * small.max_product);
    }
}
