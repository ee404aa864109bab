use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{CovKind, CovarianceModel, Estimate, FieldError, FieldSamples, Quadrature};

/// Highest Wick power supported; beyond it the Hermite values lose too
/// many digits to cancellation.
pub const MAX_WICK_ORDER: u32 = 8;

/// Which variance the exponential is normalized by.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    /// The model's own diagonal.
    Own,
    /// The free diagonal `G₊(rᵢ)`, whatever the model.
    Plus,
}

/// Rejects `|α| ≥ √(4π)`.
pub fn check_alpha(alpha: f64) -> Result<(), FieldError> {
    if !alpha.is_finite() || alpha.abs() >= (4.0 * PI).sqrt() || alpha * alpha >= 4.0 * PI {
        Err(FieldError::Threshold { alpha: alpha.abs() })
    } else {
        Ok(())
    }
}

fn check_len(got: usize, want: usize) -> Result<(), FieldError> {
    if got == want {
        Ok(())
    } else {
        Err(FieldError::Length { got, want })
    }
}

fn wick_exp_diag(sample: &[f64], diag: &[f64], quad: &Quadrature, alpha: f64, g: &[f64]) -> f64 {
    let half = 0.5 * alpha * alpha;
    quad.cells
        .iter()
        .zip(sample)
        .zip(diag)
        .zip(g)
        .filter(|(_, &gi)| gi != 0.0)
        .map(|(((c, &phi), &cii), &gi)| c.weight * gi * (alpha * phi - half * cii).exp())
        .sum()
}

/// `Σ wᵢ gᵢ exp(αφᵢ − α²Cᵢᵢ/2)`.
pub fn wick_exp(sample: &[f64], cov: &CovarianceModel, quad: &Quadrature, alpha: f64, g: &[f64]) -> Result<f64, FieldError> {
    check_alpha(alpha)?;
    check_len(sample.len(), quad.len())?;
    check_len(g.len(), quad.len())?;
    Ok(wick_exp_diag(sample, cov.matrix.diagonal().as_slice(), quad, alpha, g))
}

/// The exponential on one tile of the quadrature (by list position), with
/// the chosen ordering.
pub fn tile_functional(sample: &[f64], cov: &CovarianceModel, quad: &Quadrature, alpha: f64, tile: usize, ordering: Ordering) -> Result<f64, FieldError> {
    check_alpha(alpha)?;
    check_len(sample.len(), quad.len())?;
    let r = quad.tile_range(tile);
    let own = cov.matrix.diagonal();
    let half = 0.5 * alpha * alpha;
    Ok(r.map(|i| {
        let cii = match ordering {
            Ordering::Own => own[i],
            Ordering::Plus => cov.free_diag[i],
        };
        quad.cells[i].weight * (alpha * sample[i] - half * cii).exp()
    })
    .sum())
}

/// Probabilists' Hermite polynomial `Heₖ(x)` by its three-term recurrence.
pub fn hermite_he(k: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if k == 0 {
        return prev;
    }
    for n in 1..k {
        let next = x * cur - n as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `Σ wᵢ gᵢ Cᵢᵢ^{k/2} Heₖ(φᵢ/√Cᵢᵢ)`.
pub fn wick_power(sample: &[f64], cov: &CovarianceModel, quad: &Quadrature, k: u32, g: &[f64]) -> Result<f64, FieldError> {
    if k > MAX_WICK_ORDER {
        return Err(FieldError::WickOrder(k));
    }
    check_len(sample.len(), quad.len())?;
    check_len(g.len(), quad.len())?;
    let diag = cov.matrix.diagonal();
    Ok(quad
        .cells
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let s = diag[i].sqrt();
            c.weight * g[i] * s.powi(k as i32) * hermite_he(k, sample[i] / s)
        })
        .sum())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WickPowerEstimate {
    pub k: u32,
    pub mean: Estimate,
    pub second_moment: Estimate,
    /// `k!·Σᵢⱼ wᵢwⱼgᵢgⱼ Cᵢⱼᵏ`.
    pub exact_second_moment: f64,
}

pub fn wick_power_estimate(samples: &FieldSamples, cov: &CovarianceModel, quad: &Quadrature, k: u32, g: &[f64]) -> Result<WickPowerEstimate, FieldError> {
    let values = samples.iter().map(|s| wick_power(s, cov, quad, k, g)).collect::<Result<Vec<_>, _>>()?;
    let squares: Vec<f64> = values.iter().map(|v| v * v).collect();
    let fact: f64 = (1..=k).map(f64::from).product();
    let mut exact = 0.0;
    for (i, ci) in quad.cells.iter().enumerate() {
        for (j, cj) in quad.cells.iter().enumerate() {
            exact += ci.weight * cj.weight * g[i] * g[j] * cov.matrix[(i, j)].powi(k as i32);
        }
    }
    Ok(WickPowerEstimate { k, mean: Estimate::from_values(&values), second_moment: Estimate::from_values(&squares), exact_second_moment: fact * exact })
}

/// Both sides of `:exp(α(φ+f)):(g) = :exp(αφ):(e^{αf} g)`.
pub fn shift_audit(sample: &[f64], cov: &CovarianceModel, quad: &Quadrature, alpha: f64, f: &[f64], g: &[f64]) -> Result<(f64, f64), FieldError> {
    check_len(f.len(), quad.len())?;
    let shifted: Vec<f64> = sample.iter().zip(f).map(|(p, fi)| p + fi).collect();
    let lhs = wick_exp(&shifted, cov, quad, alpha, g)?;
    let tilted: Vec<f64> = g.iter().zip(f).map(|(gi, fi)| gi * (alpha * fi).exp()).collect();
    let rhs = wick_exp(sample, cov, quad, alpha, &tilted)?;
    Ok((lhs, rhs))
}

/// A Neumann-field tile functional normalized by the free variance:
/// `Σ_{i∈T} wᵢ exp(αφᵢ − α²C⁺ᵢᵢ/2)`, which is the Neumann-ordered value with
/// the extra multiplier `e^{α²ΔG/2}`.
pub fn reorder_to_plus(sample: &[f64], cov: &CovarianceModel, quad: &Quadrature, alpha: f64, tile: usize) -> Result<f64, FieldError> {
    if cov.kind != CovKind::Neumann {
        return Err(FieldError::NeedsNeumann("reordering to the free diagonal"));
    }
    tile_functional(sample, cov, quad, alpha, tile, Ordering::Plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldmc::{build_covariance, build_quadrature, sample_fields};
    use crate::greens::{ModelParams, NeumannTruncation};
    use crate::tessellation::{generate, TriangleParams};
    use proptest::prelude::*;

    #[test]
    fn hermite_values() {
        // He₃ = x³ − 3x, He₄ = x⁴ − 6x² + 3.
        for x in [-1.7, 0.0, 0.4, 2.5] {
            assert!((hermite_he(3, x) - (x * x * x - 3.0 * x)).abs() < 1e-12);
            assert!((hermite_he(4, x) - (x.powi(4) - 6.0 * x * x + 3.0)).abs() < 1e-12);
        }
        assert_eq!(hermite_he(0, 3.0), 1.0);
    }

    #[test]
    fn trivial_orders_and_threshold() {
        let tess = generate(TriangleParams::new(3, 4, 4).unwrap(), 2.0).unwrap();
        let mp = ModelParams::new(2, 2.0).unwrap();
        let quad = build_quadrature(&tess, &[0], 3);
        let cov = build_covariance(&mp, None, &quad, crate::fieldmc::CovKind::Free).unwrap();
        let samples = sample_fields(&cov, 500, 1);
        let g = vec![1.0; quad.len()];
        let k0 = wick_power_estimate(&samples, &cov, &quad, 0, &g).unwrap();
        assert!((k0.mean.mean - quad.total_weight()).abs() < 1e-12);
        assert!(k0.mean.stderr < 1e-15);
        for s in samples.iter() {
            assert!((wick_exp(s, &cov, &quad, 0.0, &g).unwrap() - quad.total_weight()).abs() < 1e-12);
        }
        let a = (4.0 * PI).sqrt();
        assert!(matches!(wick_exp(samples.sample(0), &cov, &quad, a, &g), Err(FieldError::Threshold { .. })));
        assert!(matches!(wick_exp(samples.sample(0), &cov, &quad, -1.01 * a, &g), Err(FieldError::Threshold { .. })));
        assert!(wick_exp(samples.sample(0), &cov, &quad, 0.99 * a, &g).is_ok());
        assert!(matches!(wick_power(samples.sample(0), &cov, &quad, 9, &g), Err(FieldError::WickOrder(9))));
    }

    #[test]
    fn reordering_dominates_and_has_lognormal_mean() {
        let tess = generate(TriangleParams::new(3, 4, 4).unwrap(), 6.5).unwrap();
        let nt = NeumannTruncation::new(&tess, 5.0, 1e-3).unwrap();
        let mp = ModelParams::new(2, 2.0).unwrap();
        let quad = build_quadrature(&tess, &[0], 3);
        let cov = build_covariance(&mp, Some(&nt), &quad, CovKind::Neumann).unwrap();
        let samples = sample_fields(&cov, 10_000, 3);
        let alpha = 1.0;
        let mut plus = Vec::new();
        for s in samples.iter() {
            let x = reorder_to_plus(s, &cov, &quad, alpha, 0).unwrap();
            let own = tile_functional(s, &cov, &quad, alpha, 0, Ordering::Own).unwrap();
            assert!(x >= own);
            plus.push(x);
        }
        // Per cell E exp(αφ − α²C⁺/2) = exp(α²(Cᴺ − C⁺)/2) = exp(α²ΔG/2).
        let oracle: f64 = quad.cells.iter().zip(&cov.delta_g).map(|(c, dg)| c.weight * (0.5 * alpha * alpha * dg).exp()).sum();
        assert!(Estimate::from_values(&plus).within(oracle, 5.0));
        let free = build_covariance(&mp, None, &quad, CovKind::Free).unwrap();
        assert!(matches!(reorder_to_plus(samples.sample(0), &free, &quad, alpha, 0), Err(FieldError::NeedsNeumann(_))));
    }

    proptest! {
        #[test]
        fn shift_identity_and_positivity(seed in 0u64..1000, alpha in -3.0f64..3.0, fs in proptest::collection::vec(-2.0f64..2.0, 9)) {
            let tess = generate(TriangleParams::new(3, 4, 4).unwrap(), 1.5).unwrap();
            let mp = ModelParams::new(2, 2.0).unwrap();
            let quad = build_quadrature(&tess, &[0], 3);
            let cov = build_covariance(&mp, None, &quad, CovKind::Free).unwrap();
            let samples = sample_fields(&cov, 4, seed);
            let g = vec![1.0; quad.len()];
            for s in samples.iter() {
                let (lhs, rhs) = shift_audit(s, &cov, &quad, alpha, &fs, &g).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs());
                prop_assert!(lhs >= 0.0);
            }
        }
    }
}
