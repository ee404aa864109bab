//! Regular tessellations of the hyperbolic plane by a triangle reflection
//! group.
//!
//! The fundamental triangle `T₁` has angles `π/p, π/q, π/r`, its first
//! vertex at the origin and its first side on the positive real axis. The
//! group is enumerated breadth-first over reflection words, with the frontier
//! ordered by distance of tile centroids from the origin, so a run truncated
//! at `radius` holds exactly the tiles whose centroid lies in the closed ball
//! of that radius. Tile `0` is the fundamental triangle.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, dist, Geodesic, Isometry, Point};

pub const DEFAULT_TILE_CAP: usize = 200_000;
pub const DEFAULT_DEDUP_TOL: f64 = 1e-9;

/// Slack of the side test used by point location (in units of `sinh` of
/// distance).
pub const LOCATE_SLACK: f64 = 1e-12;

// Hash cell in the (x1, x2) Lorentz coordinates. Distinct centroids are at
// least one inradius apart in these coordinates, far above this cell size's
// neighbor search radius.
const HASH_CELL: f64 = 0.05;

#[derive(Debug, Error)]
pub enum TessellationError {
    #[error("angles π/{p}, π/{q}, π/{r} do not form a hyperbolic triangle")]
    NotHyperbolic { p: u32, q: u32, r: u32 },
    #[error("radius must be nonnegative and finite, got {0}")]
    BadRadius(f64),
    #[error("tile cap of {cap} exceeded; partial tessellation attached")]
    Capacity { cap: usize, partial: Box<Tessellation> },
    #[error("orbit of radius {theta} is not covered by the enumeration (needs {needed:.3}, have {have:.3})")]
    IncompleteOrbit { theta: f64, needed: f64, have: f64 },
    #[error("enumeration exhausted after {found} of {wanted} conical tiles")]
    EnumerationTooSmall { found: usize, wanted: usize },
    #[error("bad cone parameter: {0}")]
    BadCone(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangleParams {
    pub p: u32,
    pub q: u32,
    pub r: u32,
}

impl TriangleParams {
    pub fn new(p: u32, q: u32, r: u32) -> Result<Self, TessellationError> {
        let ok = p >= 2 && q >= 2 && r >= 2 && {
            // 1/p + 1/q + 1/r < 1  ⇔  qr + pr + pq < pqr
            let (p, q, r) = (p as u64, q as u64, r as u64);
            q * r + p * r + p * q < p * q * r
        };
        if ok {
            Ok(TriangleParams { p, q, r })
        } else {
            Err(TessellationError::NotHyperbolic { p, q, r })
        }
    }

    /// Interior angles at the three vertices.
    pub fn angles(&self) -> [f64; 3] {
        [PI / self.p as f64, PI / self.q as f64, PI / self.r as f64]
    }

    /// Gauss–Bonnet area `π − π/p − π/q − π/r`.
    pub fn area(&self) -> f64 {
        PI - self.angles().iter().sum::<f64>()
    }
}

/// One tile `g(T₁)` of the tessellation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tile {
    pub id: usize,
    /// Generator indices `w` with `g = s_{w0} s_{w1} ⋯`; side `i` of `T₁` is
    /// opposite vertex `i`.
    pub word: Vec<u8>,
    pub g: Isometry,
    pub vertices: [Point; 3],
    /// Sides with outward normals; `sides[i]` is opposite `vertices[i]`.
    pub sides: [Geodesic; 3],
    pub centroid: Point,
}

impl Tile {
    fn from_isometry(id: usize, word: Vec<u8>, g: Isometry, base: &Tile) -> Tile {
        let vertices = base.vertices.map(|v| g.apply(&v));
        let sides = base.sides.map(|s| s.transformed(&g));
        let centroid = g.apply(&base.centroid);
        Tile { id, word, g, vertices, sides, centroid }
    }

    /// Largest outward side test; `≤ 0` means inside.
    pub fn max_side_test(&self, x: &Point) -> f64 {
        self.sides.iter().map(|s| s.side(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &Point, slack: f64) -> bool {
        self.max_side_test(x) <= slack
    }

    /// Interior angles measured from tangent vectors at the vertices.
    pub fn angles(&self) -> [f64; 3] {
        let [a, b, c] = &self.vertices;
        [geometry::angle_at(a, b, c), geometry::angle_at(b, c, a), geometry::angle_at(c, a, b)]
    }

    pub fn incenter(&self) -> Point {
        let [a, b, c] = &self.vertices;
        geometry::incenter(a, b, c)
    }

    /// Geodesic diameter (longest side).
    pub fn diameter(&self) -> f64 {
        let [a, b, c] = &self.vertices;
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    /// Euclidean diameter in the disk chart, sampled along the sides.
    pub fn disk_diameter(&self) -> f64 {
        let mut pts = Vec::with_capacity(48);
        for i in 0..3 {
            let (a, b) = (&self.vertices[i], &self.vertices[(i + 1) % 3]);
            for k in 0..16 {
                let t = k as f64 / 16.0;
                let v = (1.0 - t) * a.coords() + t * b.coords();
                pts.push(Point::normalize(v).expect("chord of timelike points").to_disk());
            }
        }
        let mut best: f64 = 0.0;
        for (i, p) in pts.iter().enumerate() {
            for q in &pts[i + 1..] {
                best = best.max((p.x - q.x).hypot(p.y - q.y));
            }
        }
        best
    }
}

/// Area of a tile by Gauss–Bonnet on its measured angles.
pub fn tile_area(tile: &Tile) -> f64 {
    PI - tile.angles().iter().sum::<f64>()
}

/// The fundamental triangle in canonical placement.
pub fn fundamental_triangle(tp: TriangleParams) -> Tile {
    let [alpha, beta, gamma] = tp.angles();
    // Hyperbolic law of cosines for angles; side c = |AB| is opposite C.
    let side_c = ((gamma.cos() + alpha.cos() * beta.cos()) / (alpha.sin() * beta.sin())).acosh();
    let side_b = ((beta.cos() + alpha.cos() * gamma.cos()) / (alpha.sin() * gamma.sin())).acosh();
    let a = Point::origin();
    let b = Point::from_polar(side_c, 0.0);
    let c = Point::from_polar(side_b, alpha);
    let centroid = geometry::barycenter(&[a, b, c]);
    let vertices = [a, b, c];
    let sides = [0, 1, 2].map(|i| {
        let g = Geodesic::through(&vertices[(i + 1) % 3], &vertices[(i + 2) % 3]).expect("distinct vertices");
        if g.side(&centroid) > 0.0 {
            g.flipped()
        } else {
            g
        }
    });
    Tile { id: 0, word: Vec::new(), g: Isometry::identity(), vertices, sides, centroid }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GenerateOptions {
    pub radius: f64,
    pub dedup_tol: f64,
    pub tile_cap: usize,
}

impl GenerateOptions {
    pub fn new(radius: f64) -> Self {
        GenerateOptions { radius, dedup_tol: DEFAULT_DEDUP_TOL, tile_cap: DEFAULT_TILE_CAP }
    }

    pub fn with_tile_cap(mut self, cap: usize) -> Self {
        self.tile_cap = cap;
        self
    }
}

#[derive(Clone, Serialize, Deserialize)]
pub struct Tessellation {
    pub params: TriangleParams,
    pub tiles: Vec<Tile>,
    /// `adjacency[t][i]`: tile across side `i` of tile `t`, if enumerated.
    pub adjacency: Vec<[Option<usize>; 3]>,
    pub radius: f64,
    pub dedup_tol: f64,
    /// Set when generation stopped at the tile cap.
    pub truncated: bool,
    generators: [Isometry; 3],
    #[serde(skip)]
    index: CentroidIndex,
}

impl std::fmt::Debug for Tessellation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tessellation")
            .field("params", &self.params)
            .field("tiles", &self.tiles.len())
            .field("radius", &self.radius)
            .field("truncated", &self.truncated)
            .finish()
    }
}

/// Spatial hash over tile centroids.
#[derive(Clone, Debug, Default)]
struct CentroidIndex {
    cells: HashMap<(i64, i64), Vec<(Point, usize)>>,
}

impl CentroidIndex {
    fn key(p: &Point) -> (i64, i64) {
        ((p.x1() / HASH_CELL).floor() as i64, (p.x2() / HASH_CELL).floor() as i64)
    }

    fn find(&self, p: &Point, tol: f64) -> Option<usize> {
        let tol = effective_tol(p, tol);
        let (kx, ky) = Self::key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = self.cells.get(&(kx + dx, ky + dy)) {
                    if let Some(&(_, id)) = list.iter().find(|(c, _)| dist(c, p) < tol) {
                        return Some(id);
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, p: Point, id: usize) {
        self.cells.entry(Self::key(&p)).or_default().push((p, id));
    }
}

/// Centroid match tolerance at `p`. Matrix products for tiles at distance
/// `ρ` carry rounding of order `ε cosh²ρ` (times word-length growth), so the configured geodesic
/// tolerance is floored by that; distinct centroids are at least half a unit
/// apart, far above the floor at any enumerable radius.
fn effective_tol(p: &Point, tol: f64) -> f64 {
    tol.max(1e-11 * p.x3() * p.x3()).min(0.1)
}

struct Frontier {
    key: f64,
    seq: usize,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Frontier {}
impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Frontier {
    // Min-heap on (distance, discovery order).
    fn cmp(&self, other: &Self) -> Ordering {
        other.key.total_cmp(&self.key).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Enumerates all tiles whose centroid lies within `radius` of the origin.
pub fn generate(tp: TriangleParams, radius: f64) -> Result<Tessellation, TessellationError> {
    generate_with(tp, GenerateOptions::new(radius))
}

pub fn generate_with(tp: TriangleParams, opts: GenerateOptions) -> Result<Tessellation, TessellationError> {
    if !(opts.radius >= 0.0) || !opts.radius.is_finite() {
        return Err(TessellationError::BadRadius(opts.radius));
    }
    let base = fundamental_triangle(tp);
    let generators = base.sides.map(|s| s.reflection());
    let o = Point::origin();
    // Tiles meeting the segment from c₁ to any centroid in the ball have
    // centroids within one diameter of it.
    let explore = opts.radius + base.diameter() + 1e-9;

    struct Cand {
        word: Vec<u8>,
        g: Isometry,
        dist: f64,
    }
    let mut cands: Vec<Cand> = Vec::new();
    let mut seen = CentroidIndex::default();
    let mut heap = BinaryHeap::new();
    let mut accepted: Vec<usize> = Vec::new();
    let mut truncated = false;

    let c0 = base.centroid;
    cands.push(Cand { word: Vec::new(), g: Isometry::identity(), dist: dist(&o, &c0) });
    seen.insert(c0, 0);
    heap.push(Frontier { key: cands[0].dist, seq: 0 });

    while let Some(Frontier { seq, .. }) = heap.pop() {
        if seq == 0 || cands[seq].dist <= opts.radius {
            if accepted.len() >= opts.tile_cap {
                truncated = true;
                break;
            }
            accepted.push(seq);
        }
        for (i, s) in generators.iter().enumerate() {
            let g = cands[seq].g.compose(s);
            let c = g.apply(&c0);
            let d = dist(&o, &c);
            if d > explore || seen.find(&c, opts.dedup_tol).is_some() {
                continue;
            }
            let mut word = cands[seq].word.clone();
            word.push(i as u8);
            let id = cands.len();
            seen.insert(c, id);
            cands.push(Cand { word, g, dist: d });
            heap.push(Frontier { key: d, seq: id });
        }
        if cands.len() > opts.tile_cap.saturating_mul(8).max(64) {
            truncated = true;
            break;
        }
    }

    // Fundamental tile first, then by distance (stable in discovery order).
    accepted[1..].sort_by(|&a, &b| cands[a].dist.total_cmp(&cands[b].dist).then(a.cmp(&b)));
    let mut index = CentroidIndex::default();
    let mut tiles = Vec::with_capacity(accepted.len());
    for (id, &ci) in accepted.iter().enumerate() {
        let cand = &cands[ci];
        let tile = if ci == 0 {
            base.clone()
        } else {
            Tile::from_isometry(id, cand.word.clone(), cand.g.clone(), &base)
        };
        index.insert(tile.centroid, id);
        tiles.push(tile);
    }
    let adjacency = tiles
        .iter()
        .map(|t| {
            [0, 1, 2].map(|i| {
                let c = t.g.compose(&generators[i]).apply(&c0);
                index.find(&c, opts.dedup_tol.max(1e-7))
            })
        })
        .collect();

    let tess = Tessellation {
        params: tp,
        tiles,
        adjacency,
        radius: opts.radius,
        dedup_tol: opts.dedup_tol,
        truncated,
        generators,
        index,
    };
    if truncated {
        return Err(TessellationError::Capacity { cap: opts.tile_cap, partial: Box::new(tess) });
    }
    Ok(tess)
}

impl Tessellation {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    pub fn fundamental(&self) -> &Tile {
        &self.tiles[0]
    }

    pub fn tile(&self, id: usize) -> &Tile {
        &self.tiles[id]
    }

    /// Reflections in the sides of the fundamental triangle.
    pub fn generators(&self) -> &[Isometry; 3] {
        &self.generators
    }

    /// Tile whose centroid coincides with `c` (to the dedup tolerance).
    pub fn tile_with_centroid(&self, c: &Point) -> Option<usize> {
        if self.index.cells.is_empty() {
            return self.tiles.iter().position(|t| dist(&t.centroid, c) < self.dedup_tol.max(1e-7));
        }
        self.index.find(c, self.dedup_tol.max(1e-7))
    }

    /// Evaluates a generator word as an isometry.
    pub fn word_isometry(&self, word: &[u8]) -> Isometry {
        word.iter().fold(Isometry::identity(), |g, &i| g.compose(&self.generators[i as usize]))
    }

    /// Tile containing `x`, or `None` outside the enumerated region. Points on
    /// shared sides resolve to the smallest tile id.
    pub fn locate(&self, x: &Point) -> Option<usize> {
        let found = self.walk(x).or_else(|| self.tiles.iter().position(|t| t.contains(x, LOCATE_SLACK)))?;
        // Tie-break among all tiles claiming x.
        let mut best = found;
        let mut stack = vec![found];
        let mut visited = vec![found];
        while let Some(t) = stack.pop() {
            for n in self.adjacency[t].iter().flatten() {
                if !visited.contains(n) && self.tiles[*n].contains(x, LOCATE_SLACK) {
                    visited.push(*n);
                    stack.push(*n);
                    best = best.min(*n);
                }
            }
        }
        Some(best)
    }

    fn walk(&self, x: &Point) -> Option<usize> {
        let mut cur = 0;
        for _ in 0..=self.tiles.len() {
            let tile = &self.tiles[cur];
            let (side, worst) = tile
                .sides
                .iter()
                .enumerate()
                .map(|(i, s)| (i, s.side(x)))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("three sides");
            if worst <= LOCATE_SLACK {
                return Some(cur);
            }
            cur = self.adjacency[cur][side]?;
        }
        None
    }

    /// Distances `ρ(x, γ y)` over all enumerated group elements, sorted.
    pub fn orbit_distances(&self, x: &Point, y: &Point) -> Vec<f64> {
        let mut d: Vec<f64> = self.tiles.iter().map(|t| dist(x, &t.g.apply(y))).collect();
        d.sort_by(f64::total_cmp);
        d
    }

    /// Largest `θ` for which every `γ` with `ρ(x, γy) < θ` is enumerated.
    pub fn orbit_complete_radius(&self, x: &Point, y: &Point) -> f64 {
        let o = Point::origin();
        self.radius - dist(&o, x) - dist(y, &self.fundamental().centroid)
    }

    /// Orbital counting function `N(θ,x,y) = #{γ : ρ(x, γy) < θ}`.
    pub fn orbital_count(&self, theta: f64, x: &Point, y: &Point) -> Result<usize, TessellationError> {
        let have = self.orbit_complete_radius(x, y);
        if theta > have {
            return Err(TessellationError::IncompleteOrbit { theta, needed: theta, have });
        }
        Ok(self.tiles.iter().filter(|t| dist(x, &t.g.apply(y)) < theta).count())
    }

    /// `sup_{θ ∈ [θ₀, θ₁]} N(θ,x,y) e^{−θ}`.
    pub fn orbital_sup(&self, x: &Point, y: &Point, theta0: f64, theta1: f64) -> Result<f64, TessellationError> {
        let have = self.orbit_complete_radius(x, y);
        if theta1 > have {
            return Err(TessellationError::IncompleteOrbit { theta: theta1, needed: theta1, have });
        }
        let d = self.orbit_distances(x, y);
        let below = d.iter().filter(|&&v| v < theta0).count();
        let mut best = below as f64 * (-theta0).exp();
        // Just past each orbit distance the count has jumped and e^{−θ} is
        // as large as it gets on that step.
        for (k, &v) in d.iter().enumerate() {
            if v >= theta1 {
                break;
            }
            if v >= theta0 {
                let n = d[k..].iter().take_while(|&&w| w <= v).count() + k;
                best = best.max(n as f64 * (-v).exp());
            }
        }
        Ok(best)
    }

    /// Tiles `γ_i(T_a)` approaching the boundary point at disk angle
    /// `p_angle`, with `γ_i(a)` inside the `c`-tube of the ray from the
    /// origin and strictly increasing in `ρ(o, ·)`.
    pub fn conical_sequence(&self, p_angle: f64, a: &Point, n: usize, c: f64) -> Result<Vec<usize>, TessellationError> {
        self.conical_sequence_spaced(p_angle, a, n, c, 0.0)
    }

    /// As [`Tessellation::conical_sequence`], with consecutive anchor images
    /// at least `min_step` further from the origin.
    pub fn conical_sequence_spaced(
        &self,
        p_angle: f64,
        a: &Point,
        n: usize,
        c: f64,
        min_step: f64,
    ) -> Result<Vec<usize>, TessellationError> {
        if !(c > 0.0) {
            return Err(TessellationError::BadCone("tube width must be positive"));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        let anchor_tile = self.locate(a).ok_or(TessellationError::BadCone("anchor outside the enumeration"))?;
        let to_fundamental = self.tiles[anchor_tile].g.inverse();
        let ray = RayTube::new(p_angle);
        let o = Point::origin();
        // γ_j = g_j g_a⁻¹ maps T_a onto T_j.
        let mut cands: Vec<(f64, usize)> = self
            .tiles
            .iter()
            .filter_map(|t| {
                let img = t.g.compose(&to_fundamental).apply(a);
                (ray.distance(&img) <= c && ray.ahead(&img)).then(|| (dist(&o, &img), t.id))
            })
            .collect();
        cands.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut out: Vec<usize> = Vec::with_capacity(n);
        let mut last = f64::NEG_INFINITY;
        for (d, id) in cands {
            if d > last + min_step.max(0.0) && (d > last) {
                out.push(id);
                last = d;
                if out.len() == n {
                    return Ok(out);
                }
            }
        }
        Err(TessellationError::EnumerationTooSmall { found: out.len(), wanted: n })
    }
}

/// A quadrature cell: a geodesic sub-triangle of a tile.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Cell {
    /// Incenter of the sub-triangle.
    pub point: Point,
    /// Hyperbolic area.
    pub weight: f64,
    pub vertices: [Point; 3],
}

impl Cell {
    /// Radius of the geodesic disk with the same area.
    pub fn effective_radius(&self) -> f64 {
        // Disk area 2π(cosh r − 1) = w.
        2.0 * (self.weight / (4.0 * PI)).sqrt().asinh()
    }
}

/// Splits a tile into `n²` geodesic triangles. Geodesics are straight in
/// the Klein chart, so the uniform barycentric grid there subdivides the
/// tile exactly and the cell areas sum to the tile area.
pub fn subdivide(tile: &Tile, n: usize) -> Vec<Cell> {
    assert!(n >= 1, "subdivision level must be positive");
    let klein = tile.vertices.map(|v| nalgebra::Vector3::new(v.x1() / v.x3(), v.x2() / v.x3(), 1.0));
    let node = |i: usize, j: usize| {
        let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
        let k = (1.0 - u - v) * klein[0] + u * klein[1] + v * klein[2];
        Point::normalize(k).expect("Klein point inside the disk")
    };
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n - i {
            let tri = [node(i, j), node(i + 1, j), node(i, j + 1)];
            cells.push(make_cell(tri));
            if i + j + 1 < n {
                cells.push(make_cell([node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)]));
            }
        }
    }
    cells
}

fn make_cell(vertices: [Point; 3]) -> Cell {
    let [a, b, c] = &vertices;
    Cell { point: geometry::incenter(a, b, c), weight: geometry::triangle_area(a, b, c), vertices }
}

/// The geodesic ray from the origin at a given disk angle.
#[derive(Clone, Copy, Debug)]
pub struct RayTube {
    dir: (f64, f64),
    normal: Geodesic,
}

impl RayTube {
    pub fn new(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let normal = Geodesic::from_normal(nalgebra::Vector3::new(-s, c, 0.0)).expect("spacelike");
        RayTube { dir: (c, s), normal }
    }

    /// Distance to the full geodesic line containing the ray.
    pub fn distance(&self, p: &Point) -> f64 {
        self.normal.distance_to(p)
    }

    pub fn ahead(&self, p: &Point) -> bool {
        p.x1() * self.dir.0 + p.x2() * self.dir.1 > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn t344() -> TriangleParams {
        TriangleParams::new(3, 4, 4).unwrap()
    }

    #[test]
    fn rejects_non_hyperbolic() {
        assert!(TriangleParams::new(3, 3, 3).is_err());
        assert!(TriangleParams::new(2, 3, 6).is_err());
        assert!(TriangleParams::new(2, 4, 4).is_err());
        assert!(TriangleParams::new(1, 9, 9).is_err());
        assert!(TriangleParams::new(2, 3, 7).is_ok());
    }

    #[test]
    fn fundamental_angles_and_area() {
        for (p, q, r) in [(3, 4, 4), (2, 3, 7), (4, 4, 4), (3, 3, 4)] {
            let tp = TriangleParams::new(p, q, r).unwrap();
            let t = fundamental_triangle(tp);
            let want = tp.angles();
            for (got, want) in t.angles().iter().zip(want) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
            }
            assert_abs_diff_eq!(tile_area(&t), tp.area(), epsilon = 1e-10);
            assert!(t.vertices[0].dist_to_origin() == 0.0);
            assert_abs_diff_eq!(t.vertices[1].x2(), 0.0);
            assert!(t.vertices[1].x1() > 0.0);
            // Outward normals.
            for s in &t.sides {
                assert!(s.side(&t.centroid) < 0.0);
            }
            for (i, v) in t.vertices.iter().enumerate() {
                assert!(t.sides[(i + 1) % 3].side(v).abs() < 1e-12);
                assert!(t.sides[(i + 2) % 3].side(v).abs() < 1e-12);
            }
        }
        assert_abs_diff_eq!(tile_area(&fundamental_triangle(t344())), PI / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            tile_area(&fundamental_triangle(TriangleParams::new(2, 3, 7).unwrap())),
            PI / 42.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn equilateral_sides() {
        let t = fundamental_triangle(TriangleParams::new(4, 4, 4).unwrap());
        let [a, b, c] = &t.vertices;
        assert_abs_diff_eq!(dist(a, b), dist(b, c), epsilon = 1e-12);
        assert_abs_diff_eq!(dist(b, c), dist(c, a), epsilon = 1e-12);
    }

    #[test]
    fn radius_zero_is_just_the_fundamental_tile() {
        let t = generate(t344(), 0.0).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.adjacency[0], [None, None, None]);
    }

    #[test]
    fn words_reproduce_tiles_and_stay_lorentz() {
        let t = generate(t344(), 3.0).unwrap();
        let base = t.fundamental();
        for tile in &t.tiles {
            let g = t.word_isometry(&tile.word);
            assert!(g.lorentz_residual() < 1e-10);
            for (v, w) in tile.vertices.iter().zip(&base.vertices) {
                assert!(dist(v, &g.apply(w)) < 1e-10);
            }
            assert_abs_diff_eq!(tile_area(tile), PI / 6.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        let t = generate(t344(), 3.0).unwrap();
        for (id, nbrs) in t.adjacency.iter().enumerate() {
            for (side, n) in nbrs.iter().enumerate() {
                if let Some(n) = n {
                    assert!(t.adjacency[*n].contains(&Some(id)));
                    // Shared side: both endpoints on the neighbor's boundary.
                    let tile = &t.tiles[id];
                    let v1 = tile.vertices[(side + 1) % 3];
                    assert!(t.tiles[*n].contains(&v1, 1e-9));
                }
            }
        }
    }

    #[test]
    fn congruence_between_random_tiles() {
        let t = generate(t344(), 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let j = rng.random_range(0..t.len());
            let k = rng.random_range(0..t.len());
            let map = t.tiles[k].g.compose(&t.tiles[j].g.inverse());
            for (vj, vk) in t.tiles[j].vertices.iter().zip(&t.tiles[k].vertices) {
                assert!(dist(&map.apply(vj), vk) < 1e-9);
            }
        }
    }

    #[test]
    fn locate_centroids_and_outside() {
        let t = generate(t344(), 3.0).unwrap();
        for tile in &t.tiles {
            assert_eq!(t.locate(&tile.centroid), Some(tile.id));
        }
        assert_eq!(t.locate(&Point::from_polar(7.0, 0.3)), None);
        // The origin is a vertex shared by 2p = 6 tiles: smallest id wins.
        assert_eq!(t.locate(&Point::origin()), Some(0));
    }

    #[test]
    fn orbital_count_small_theta_and_monotone() {
        let t = generate(t344(), 5.0).unwrap();
        let x = t.fundamental().incenter();
        assert_eq!(t.orbital_count(1e-6, &x, &x).unwrap(), 1);
        let mut last = 0;
        for k in 1..30 {
            let n = t.orbital_count(0.1 * k as f64, &x, &x).unwrap();
            assert!(n >= last);
            last = n;
        }
        assert!(matches!(t.orbital_count(6.0, &x, &x), Err(TessellationError::IncompleteOrbit { .. })));
    }

    #[test]
    fn capacity_error_carries_partial_result() {
        match generate_with(t344(), GenerateOptions::new(6.0).with_tile_cap(100)) {
            Err(TessellationError::Capacity { cap, partial }) => {
                assert_eq!(cap, 100);
                assert!(partial.truncated);
                assert_eq!(partial.len(), 100);
            }
            other => panic!("expected capacity error, got {:?}", other.map(|t| t.len())),
        }
    }

    #[test]
    fn conical_sequence_properties() {
        let t = generate(t344(), 7.0).unwrap();
        let a = t.fundamental().centroid;
        assert!(t.conical_sequence(0.7, &a, 0, 1.0).unwrap().is_empty());
        let seq = t.conical_sequence(0.7, &a, 12, 1.0).unwrap();
        let ray = RayTube::new(0.7);
        let o = Point::origin();
        let mut last = -1.0;
        for &id in &seq {
            let img = t.tiles[id].g.apply(&a);
            assert!(ray.distance(&img) <= 1.0);
            let d = dist(&o, &img);
            assert!(d > last);
            last = d;
        }
        // Euclidean diameters shrink towards the boundary.
        let spaced = t.conical_sequence_spaced(0.7, &a, 6, 1.0, 1.0).unwrap();
        let diam: Vec<f64> = spaced.iter().map(|&id| t.tiles[id].disk_diameter()).collect();
        assert!(diam.windows(2).skip(1).all(|w| w[1] < w[0]), "{diam:?}");
        assert!(matches!(
            t.conical_sequence(0.7, &a, 10_000, 1.0),
            Err(TessellationError::EnumerationTooSmall { .. })
        ));
    }

    #[test]
    fn count_matches_brute_force_words() {
        let tp = t344();
        let t = generate(tp, 1.5).unwrap();
        let base = fundamental_triangle(tp);
        let gens = base.sides.map(|s| s.reflection());
        let o = Point::origin();
        // All words up to length L, dedup by matrix entries.
        let mut level: Vec<Isometry> = vec![Isometry::identity()];
        let mut all: Vec<Isometry> = level.clone();
        let mut counts = Vec::new();
        for _ in 0..14 {
            let mut next = Vec::new();
            for g in &level {
                for s in &gens {
                    let h = g.compose(s);
                    let dup = all.iter().chain(next.iter()).any(|k: &Isometry| (k.matrix() - h.matrix()).amax() < 1e-8);
                    if !dup && dist(&o, &h.apply(&base.centroid)) < 6.0 {
                        next.push(h);
                    }
                }
            }
            all.extend(next.iter().cloned());
            level = next;
            counts.push(all.iter().filter(|g| dist(&o, &g.apply(&base.centroid)) <= 1.5).count());
        }
        let n = counts.len();
        assert_eq!(counts[n - 1], counts[n - 4], "oracle not saturated: {counts:?}");
        assert_eq!(t.len(), counts[n - 1]);
    }

    #[test]
    fn random_points_have_unique_tile() {
        let t = generate(t344(), 3.0).unwrap();
        let inner = 3.0 - t.fundamental().diameter();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let rho = inner * rng.random::<f64>().sqrt();
            let x = Point::from_polar(rho, rng.random_range(0.0..2.0 * PI));
            let claims: Vec<usize> = t.tiles.iter().filter(|tile| tile.contains(&x, 0.0)).map(|t| t.id).collect();
            assert_eq!(claims.len(), 1, "{x:?}");
            assert_eq!(t.locate(&x), Some(claims[0]));
        }
    }

    #[test]
    fn subdivision_preserves_area() {
        let t = generate(t344(), 2.0).unwrap();
        for n in [1, 2, 5] {
            for tile in t.tiles.iter().take(5) {
                let cells = subdivide(tile, n);
                assert_eq!(cells.len(), n * n);
                let total: f64 = cells.iter().map(|c| c.weight).sum();
                assert_abs_diff_eq!(total, PI / 6.0, epsilon = 1e-12);
                for c in &cells {
                    assert!(c.weight > 0.0);
                    assert!(tile.contains(&c.point, 1e-12));
                }
            }
        }
    }

    #[test]
    fn tile_areas_fill_the_region() {
        // Monte Carlo area of the union against the sum of tile areas.
        let t = generate(t344(), 2.5).unwrap();
        let total: f64 = t.tiles.iter().map(tile_area).sum();
        let r_max = 2.5 + t.fundamental().diameter();
        let ball = 2.0 * PI * (r_max.cosh() - 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 200_000;
        let mut hits = 0usize;
        for _ in 0..n {
            // Uniform in the hyperbolic ball: cosh ρ uniform on [1, cosh r_max].
            let rho = (1.0 + rng.random::<f64>() * (r_max.cosh() - 1.0)).acosh();
            let x = Point::from_polar(rho, rng.random_range(0.0..2.0 * PI));
            if t.tiles.iter().any(|tile| tile.contains(&x, 0.0)) {
                hits += 1;
            }
        }
        let mc = ball * hits as f64 / n as f64;
        assert!((mc - total).abs() / total < 0.01, "mc {mc} vs {total}");
    }
}
