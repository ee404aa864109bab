use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldError, Quadrature};
use crate::geometry::dist;
use crate::greens::{g_plus, image_sum, GreensError, ModelParams, NeumannTruncation};

pub const RIDGE_START: f64 = 1e-12;
pub const RIDGE_MAX: f64 = 1e-8;

/// `G₊` averaged over pairs of points of a small disk of radius `r` equals
/// `G₊(e^{−1/4} r)` to leading order, since the mean of `log|x−y|` over the
/// disk is `log r − 1/4`.
pub const DISK_SELF_AVERAGE: f64 = 0.778_800_783_071_404_9;

/// Below this the cell points are treated as coincident.
const MIN_SEPARATION: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CovKind {
    Free,
    Neumann,
}

#[derive(Clone, Debug)]
pub struct CovarianceModel {
    pub kind: CovKind,
    pub matrix: DMatrix<f64>,
    /// Free variance of each cell: `G₊(e^{−1/4}rᵢ)`.
    pub free_diag: Vec<f64>,
    /// `ΔG` at each cell; zero for the free kind.
    pub delta_g: Vec<f64>,
    /// Effective radius per cell.
    pub radii: Vec<f64>,
    /// Ridge added before factorizing (0 if none was needed).
    pub ridge: f64,
    /// Lower Cholesky factor of `matrix + ridge·I`.
    pub factor: DMatrix<f64>,
    /// Neumann truncation tail bound per entry (0 for the free kind).
    pub tail_bound: f64,
}

impl CovarianceModel {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    /// The diagonal used for Wick ordering in this model.
    pub fn diag(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().copied().collect()
    }
}

/// Covariance of the cell values. Off-diagonal entries are the kernel at the
/// cell points; the diagonal is the disk self-average `G₊(e^{−1/4}rᵢ)` at
/// the effective radius `rᵢ` (plus `ΔG(xᵢ)` for Neumann). Evaluating at
/// `rᵢ` itself undershoots the variance and loses definiteness from four
/// cells per side on. Neumann entries between different tiles are zero, and
/// each same-tile block is computed once on the fundamental tile.
pub fn build_covariance(
    mp: &ModelParams,
    nt: Option<&NeumannTruncation>,
    quad: &Quadrature,
    kind: CovKind,
) -> Result<CovarianceModel, FieldError> {
    let n = quad.len();
    let radii: Vec<f64> = quad.cells.iter().map(|c| c.radius).collect();
    let free_diag = radii.iter().map(|&r| g_plus(mp, DISK_SELF_AVERAGE * r)).collect::<Result<Vec<_>, _>>()?;
    let mut matrix = DMatrix::zeros(n, n);
    let mut delta_g = vec![0.0; n];
    let mut tail_bound = 0.0;
    match kind {
        CovKind::Free => {
            let rows: Vec<Result<Vec<f64>, FieldError>> = (0..n)
                .into_par_iter()
                .map(|i| {
                    (0..i)
                        .map(|j| {
                            let r = dist(&quad.cells[i].point, &quad.cells[j].point);
                            if r < MIN_SEPARATION {
                                return Err(FieldError::CoincidentCells(j, i));
                            }
                            Ok(g_plus(mp, r)?)
                        })
                        .collect()
                })
                .collect();
            for (i, row) in rows.into_iter().enumerate() {
                for (j, v) in row?.into_iter().enumerate() {
                    matrix[(i, j)] = v;
                    matrix[(j, i)] = v;
                }
                matrix[(i, i)] = free_diag[i];
            }
        }
        CovKind::Neumann => {
            let nt = nt.ok_or(FieldError::NeedsNeumann("a Neumann covariance"))?;
            if mp.delta_plus <= 1.0 {
                return Err(GreensError::DeltaTooSmall(mp.delta_plus).into());
            }
            tail_bound = nt.tail_bound(mp);
            let base = &quad.base;
            let m = base.len();
            // Block on the fundamental tile: row i holds entries j ≤ i, the
            // diagonal slot holding ΔG.
            let rows: Vec<Result<Vec<f64>, FieldError>> = (0..m)
                .into_par_iter()
                .map(|i| {
                    (0..=i)
                        .map(|j| {
                            if i != j && dist(&base[i], &base[j]) < MIN_SEPARATION {
                                return Err(FieldError::CoincidentCells(j, i));
                            }
                            Ok(image_sum(mp, nt, &base[i], &base[j], i == j)?.0)
                        })
                        .collect()
                })
                .collect();
            let mut block = DMatrix::zeros(m, m);
            for (i, row) in rows.into_iter().enumerate() {
                for (j, v) in row?.into_iter().enumerate() {
                    block[(i, j)] = v;
                    block[(j, i)] = v;
                }
            }
            for k in 0..quad.tiles.len() {
                let r = quad.tile_range(k);
                for i in r.clone() {
                    let li = quad.cells[i].local;
                    for j in r.clone() {
                        let lj = quad.cells[j].local;
                        matrix[(i, j)] = if i == j { free_diag[i] + block[(li, li)] } else { block[(li, lj)] };
                    }
                    delta_g[i] = block[(li, li)];
                }
            }
        }
    }
    let (factor, ridge) = factorize(&matrix)?;
    Ok(CovarianceModel { kind, matrix, free_diag, delta_g, radii, ridge, factor, tail_bound })
}

/// Cholesky factor, adding a ridge `1e−12, 1e−11, …, 1e−8` if needed.
fn factorize(matrix: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64), FieldError> {
    if let Some(c) = Cholesky::new(matrix.clone()) {
        return Ok((c.l(), 0.0));
    }
    let n = matrix.nrows();
    let mut ridge = RIDGE_START;
    while ridge <= RIDGE_MAX * (1.0 + 1e-9) {
        log::warn!("covariance not positive definite; retrying with ridge {ridge:e}");
        let shifted = matrix + DMatrix::identity(n, n) * ridge;
        if let Some(c) = Cholesky::new(shifted) {
            return Ok((c.l(), ridge));
        }
        ridge *= 10.0;
    }
    Err(FieldError::CovarianceInvalid { ridge: RIDGE_MAX })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldmc::build_quadrature;
    use crate::greens::{delta_g, g_neumann};
    use crate::tessellation::{generate, TriangleParams};

    #[test]
    fn neumann_structure() {
        let tess = generate(TriangleParams::new(3, 4, 4).unwrap(), 6.5).unwrap();
        let nt = NeumannTruncation::new(&tess, 5.0, 1e-3).unwrap();
        let mp = ModelParams::new(2, 2.0).unwrap();
        let quad = build_quadrature(&tess, &[0, 1], 2);
        let cn = build_covariance(&mp, Some(&nt), &quad, CovKind::Neumann).unwrap();
        let cf = build_covariance(&mp, None, &quad, CovKind::Free).unwrap();
        assert_eq!(cn.ridge, 0.0);
        for i in 0..quad.len() {
            for j in 0..quad.len() {
                assert_eq!(cn.matrix[(i, j)], cn.matrix[(j, i)]);
                assert_eq!(cf.matrix[(i, j)], cf.matrix[(j, i)]);
                let same = quad.cells[i].tile_id == quad.cells[j].tile_id;
                if !same {
                    assert_eq!(cn.matrix[(i, j)], 0.0);
                } else if i != j {
                    // Matches the located-point evaluation.
                    let v = g_neumann(&mp, &nt, &quad.cells[i].point, &quad.cells[j].point).unwrap().value;
                    assert!((v - cn.matrix[(i, j)]).abs() < 1e-10 * v);
                }
            }
            let dg = delta_g(&mp, &nt, &quad.cells[i].point).unwrap().value;
            assert!((cn.matrix[(i, i)] - cf.matrix[(i, i)] - dg).abs() < 1e-10);
            assert!((cn.delta_g[i] - dg).abs() < 1e-10);
        }
    }

    #[test]
    fn free_diagonal_dominates_rows() {
        let tess = generate(TriangleParams::new(3, 4, 4).unwrap(), 2.0).unwrap();
        let mp = ModelParams::new(2, 2.0).unwrap();
        let quad = build_quadrature(&tess, &[0], 4);
        let cf = build_covariance(&mp, None, &quad, CovKind::Free).unwrap();
        for i in 0..quad.len() {
            for j in 0..quad.len() {
                if i != j {
                    assert!(cf.matrix[(i, i)] > cf.matrix[(i, j)]);
                }
            }
        }
    }
}
