use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::wick::{check_alpha, shift_audit, wick_exp, wick_power_estimate, WickPowerEstimate};
use super::{sample_fields, CovKind, CovarianceModel, Estimate, FieldError, Quadrature};

const SIGMAS: f64 = 5.0;
/// Samples used for the exact shift identity.
const SHIFT_SAMPLES: usize = 100;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct McAuditReport {
    pub kind: CovKind,
    pub n: usize,
    pub alpha: f64,
    /// `:exp(αφ):(1)` against `Σ wᵢ`.
    pub exp_mean: Estimate,
    pub exp_mean_exact: f64,
    /// Second moment against `Σᵢⱼ wᵢwⱼ e^{α²Cᵢⱼ}`.
    pub exp_second: Estimate,
    pub exp_second_exact: f64,
    pub wick: Vec<WickPowerEstimate>,
    /// Largest relative gap in the shift identity.
    pub shift_max_gap: f64,
    pub min_value: f64,
    pub mean_ok: bool,
    pub second_ok: bool,
    pub wick_ok: bool,
    pub shift_ok: bool,
    pub positive_ok: bool,
    pub passed: bool,
}

/// Monte Carlo checks of the exponential and the Wick powers against their
/// exact Gaussian moments, the shift identity and positivity.
pub fn mc_invariants_audit(cov: &CovarianceModel, quad: &Quadrature, alpha: f64, max_k: u32, n: usize, seed: u64) -> Result<McAuditReport, FieldError> {
    check_alpha(alpha)?;
    let samples = sample_fields(cov, n, seed);
    let ones = vec![1.0; quad.len()];
    let xs = samples.iter().map(|s| wick_exp(s, cov, quad, alpha, &ones)).collect::<Result<Vec<_>, _>>()?;
    let exp_mean = Estimate::from_values(&xs);
    let exp_second = Estimate::from_values(&xs.iter().map(|x| x * x).collect::<Vec<_>>());
    let exp_mean_exact = quad.total_weight();
    let mut exp_second_exact = 0.0;
    for (i, ci) in quad.cells.iter().enumerate() {
        for (j, cj) in quad.cells.iter().enumerate() {
            exp_second_exact += ci.weight * cj.weight * (alpha * alpha * cov.matrix[(i, j)]).exp();
        }
    }
    let wick = (1..=max_k).map(|k| wick_power_estimate(&samples, cov, quad, k, &ones)).collect::<Result<Vec<_>, _>>()?;
    let wick_ok = wick.iter().all(|w| w.mean.within(0.0, SIGMAS) && w.second_moment.within(w.exact_second_moment, SIGMAS));

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x5eed));
    let mut shift_max_gap: f64 = 0.0;
    for s in samples.iter().take(SHIFT_SAMPLES) {
        let f: Vec<f64> = (0..quad.len()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (lhs, rhs) = shift_audit(s, cov, quad, alpha, &f, &ones)?;
        shift_max_gap = shift_max_gap.max((lhs - rhs).abs() / lhs.abs());
    }
    let min_value = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let mean_ok = exp_mean.within(exp_mean_exact, SIGMAS);
    let second_ok = exp_second.within(exp_second_exact, SIGMAS);
    let shift_ok = shift_max_gap <= 1e-12;
    let positive_ok = min_value >= 0.0;
    Ok(McAuditReport {
        kind: cov.kind,
        n,
        alpha,
        exp_mean,
        exp_mean_exact,
        exp_second,
        exp_second_exact,
        wick,
        shift_max_gap,
        min_value,
        mean_ok,
        second_ok,
        wick_ok,
        shift_ok,
        positive_ok,
        passed: mean_ok && second_ok && wick_ok && shift_ok && positive_ok,
    })
}
