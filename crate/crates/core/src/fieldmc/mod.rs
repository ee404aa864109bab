//! Discretized Gaussian fields on unions of tiles and Monte Carlo estimates
//! of the Wick-ordered exponential interaction.
//!
//! Cells come from a geodesic subdivision of the fundamental tile carried to
//! every other tile by its group element, so the cells of congruent tiles are
//! congruent. Covariances use the free function `G₊` or the Neumann image
//! sum; the diagonal is regularized at the cell's effective radius.

mod audit;
mod config;
mod covariance;
mod laplace;
mod quadrature;
mod sampling;
mod triviality;
mod wick;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::BoundaryError;
use crate::greens::GreensError;
use crate::tessellation::TessellationError;

pub use audit::{mc_invariants_audit, McAuditReport};
pub use config::{ConfigError, RunConfig};
pub use covariance::{build_covariance, CovKind, CovarianceModel, DISK_SELF_AVERAGE, RIDGE_MAX, RIDGE_START};
pub use laplace::{
    bound_chain_audit, boundary_shift, factorization_check, laplace_transform, log_laplace, partition_estimate, z_ratio,
    BoundChainInput, BoundChainReport, Factorization, LaplacePoint, ZRatio, MIN_ESS,
};
pub use quadrature::{build_quadrature, QuadCell, Quadrature};
pub use sampling::{sample_fields, FieldSamples, BATCH_SIZE};
pub use triviality::{fit_slope, CONE_STEP, triviality_run, write_q_csv, QRecord, TrivialityRun};
pub use wick::{
    check_alpha, hermite_he, reorder_to_plus, shift_audit, tile_functional, wick_exp, wick_power, wick_power_estimate, Ordering,
    WickPowerEstimate, MAX_WICK_ORDER,
};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("|α| = {alpha} at or above the integrability threshold √(4π)")]
    Threshold { alpha: f64 },
    #[error("covariance factorization failed with ridge up to {ridge:e}; check truncation radius and mesh")]
    CovarianceInvalid { ridge: f64 },
    #[error("cells {0} and {1} coincide")]
    CoincidentCells(usize, usize),
    #[error("Wick order {0} above the supported maximum")]
    WickOrder(u32),
    #[error("{0} requires a Neumann covariance")]
    NeedsNeumann(&'static str),
    #[error("vector of length {got} does not match {want} cells")]
    Length { got: usize, want: usize },
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Greens(#[from] GreensError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Tessellation(#[from] TessellationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        Estimate { mean, stderr: (var / n as f64).sqrt(), n }
    }

    /// `|mean − target| ≤ k·stderr`, with exact agreement accepted when the
    /// standard error vanishes.
    pub fn within(&self, target: f64, k: f64) -> bool {
        let gap = (self.mean - target).abs();
        gap <= k * self.stderr || gap <= 1e-12 * target.abs().max(1e-300)
    }

    /// Number of standard errors between the mean and `target`.
    pub fn sigmas(&self, target: f64) -> f64 {
        (self.mean - target).abs() / self.stderr
    }
}
