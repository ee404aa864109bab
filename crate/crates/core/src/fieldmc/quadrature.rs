use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::tessellation::{subdivide, Tessellation};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct QuadCell {
    pub point: Point,
    pub weight: f64,
    pub tile_id: usize,
    /// Radius of the geodesic disk with the cell's area.
    pub radius: f64,
    /// Index of the congruent cell of the fundamental tile.
    pub local: usize,
}

/// Cells of a union of tiles, grouped tile by tile in the order given.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Quadrature {
    pub cells: Vec<QuadCell>,
    pub resolution: usize,
    pub tiles: Vec<usize>,
    /// The cells of the fundamental tile (the pull-backs).
    pub base: Vec<Point>,
}

impl Quadrature {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells_per_tile(&self) -> usize {
        self.base.len()
    }

    /// Index range of the cells of the `k`-th tile of the list.
    pub fn tile_range(&self, k: usize) -> Range<usize> {
        let m = self.cells_per_tile();
        k * m..(k + 1) * m
    }

    pub fn weights(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.weight).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.cells.iter().map(|c| c.weight).sum()
    }

    /// Multiplier equal to 1 on the `k`-th tile of the list, 0 elsewhere.
    pub fn indicator(&self, k: usize) -> Vec<f64> {
        let r = self.tile_range(k);
        (0..self.len()).map(|i| if r.contains(&i) { 1.0 } else { 0.0 }).collect()
    }
}

/// Subdivides the fundamental tile into `resolution²` geodesic triangles and
/// carries them to each listed tile.
pub fn build_quadrature(tess: &Tessellation, tiles: &[usize], resolution: usize) -> Quadrature {
    let resolution = resolution.max(1);
    let base_cells = subdivide(tess.fundamental(), resolution);
    let mut cells = Vec::with_capacity(tiles.len() * base_cells.len());
    for &id in tiles {
        let g = &tess.tiles[id].g;
        for (local, c) in base_cells.iter().enumerate() {
            cells.push(QuadCell { point: g.apply(&c.point), weight: c.weight, tile_id: id, radius: c.effective_radius(), local });
        }
    }
    Quadrature { cells, resolution, tiles: tiles.to_vec(), base: base_cells.iter().map(|c| c.point).collect() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tessellation::{generate, TriangleParams, LOCATE_SLACK};
    use std::f64::consts::PI;

    #[test]
    fn weights_and_ownership() {
        let tess = generate(TriangleParams::new(3, 4, 4).unwrap(), 2.5).unwrap();
        let ids: Vec<usize> = (0..6).collect();
        let one = build_quadrature(&tess, &ids, 1);
        for c in &one.cells {
            assert!((c.weight - PI / 6.0).abs() < 1e-12);
        }
        let q = build_quadrature(&tess, &ids, 4);
        assert_eq!(q.len(), 6 * 16);
        for k in 0..6 {
            let w: f64 = q.tile_range(k).map(|i| q.cells[i].weight).sum();
            assert!((w - PI / 6.0).abs() < 0.005 * PI / 6.0);
        }
        for c in &q.cells {
            assert_eq!(tess.locate(&c.point), Some(c.tile_id));
            assert!(tess.tiles[c.tile_id].contains(&c.point, -LOCATE_SLACK));
        }
    }
}
