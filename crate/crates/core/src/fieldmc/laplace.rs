use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::wick::{check_alpha, tile_functional, wick_exp, Ordering};
use super::{build_covariance, build_quadrature, sample_fields, CovKind, CovarianceModel, Estimate, FieldError, FieldSamples, Quadrature};
use crate::boundary::{h_plus_at, k_table, BoundarySource};
use crate::greens::{ModelParams, NeumannTruncation};

/// Effective sample sizes below this flag a ratio estimate as unreliable.
pub const MIN_ESS: f64 = 100.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplacePoint {
    pub s: f64,
    pub value: f64,
    pub stderr: f64,
    /// `log L̂(s)`, computed without underflow.
    pub log_value: f64,
}

/// `log((1/n) Σ e^{−s xₖ})` by log-sum-exp.
pub fn log_laplace(xs: &[f64], s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let m = xs.iter().map(|&x| -s * x).fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let sum: f64 = xs.iter().map(|&x| (-s * x - m).exp()).sum();
    m + sum.ln() - (xs.len() as f64).ln()
}

/// `L̂(s) = (1/n) Σ e^{−s xₖ}` on a grid of `s ≥ 0`.
pub fn laplace_transform(xs: &[f64], s_grid: &[f64]) -> Vec<LaplacePoint> {
    s_grid
        .iter()
        .map(|&s| {
            assert!(s >= 0.0, "Laplace argument must be nonnegative");
            if s == 0.0 {
                return LaplacePoint { s, value: 1.0, stderr: 0.0, log_value: 0.0 };
            }
            let e = Estimate::from_values(&xs.iter().map(|&x| (-s * x).exp()).collect::<Vec<_>>());
            LaplacePoint { s, value: e.mean, stderr: e.stderr, log_value: log_laplace(xs, s) }
        })
        .collect()
}

/// Joint versus product Laplace transform of two tile functionals.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Factorization {
    pub s: f64,
    pub joint: f64,
    pub product: f64,
    /// Standard error of `joint − product` (delta method).
    pub stderr: f64,
}

impl Factorization {
    pub fn within(&self, k: f64) -> bool {
        (self.joint - self.product).abs() <= k * self.stderr
    }
}

pub fn factorization_check(x1: &[f64], x2: &[f64], s: f64) -> Factorization {
    let n = x1.len() as f64;
    let a: Vec<f64> = x1.iter().map(|&x| (-s * x).exp()).collect();
    let b: Vec<f64> = x2.iter().map(|&x| (-s * x).exp()).collect();
    let la = a.iter().sum::<f64>() / n;
    let lb = b.iter().sum::<f64>() / n;
    let joint = a.iter().zip(&b).map(|(p, q)| p * q).sum::<f64>() / n;
    // Influence of each sample on joint − la·lb.
    let infl: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p * q - lb * p - la * q).collect();
    Factorization { s, joint, product: la * lb, stderr: Estimate::from_values(&infl).stderr }
}

/// `H₊h` at every cell point.
pub fn boundary_shift(mp: &ModelParams, h: &BoundarySource, quad: &Quadrature) -> Result<Vec<f64>, FieldError> {
    quad.cells.par_iter().map(|c| Ok(h_plus_at(mp, h, &c.point)?)).collect()
}

/// `Ẑ = mean exp(−λ :exp(α(φ+f)):(1))` over the samples, ordered by the
/// model's own diagonal.
pub fn partition_estimate(
    samples: &FieldSamples,
    cov: &CovarianceModel,
    quad: &Quadrature,
    alpha: f64,
    lambda: f64,
    shift: &[f64],
) -> Result<Estimate, FieldError> {
    let tilt: Vec<f64> = shift.iter().map(|f| (alpha * f).exp()).collect();
    let vals = samples.iter().map(|s| Ok((-lambda * wick_exp(s, cov, quad, alpha, &tilt)?).exp())).collect::<Result<Vec<_>, FieldError>>()?;
    Ok(Estimate::from_values(&vals))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ZRatio {
    pub ratio: f64,
    pub stderr: f64,
    pub numerator: Estimate,
    pub denominator: Estimate,
    /// `(Σaₖ)²/Σaₖ²` for the numerator weights.
    pub ess: f64,
    pub unreliable: bool,
}

/// `Ẑ(h,Λ)/Ẑ(0,Λ)` under the free field, numerator and denominator on the
/// same samples. `shift` holds `H₊h` at the cells.
pub fn z_ratio(cov: &CovarianceModel, quad: &Quadrature, alpha: f64, lambda: f64, shift: &[f64], n: usize, seed: u64) -> Result<ZRatio, FieldError> {
    check_alpha(alpha)?;
    let samples = sample_fields(cov, n, seed);
    let ones = vec![1.0; quad.len()];
    let tilt: Vec<f64> = shift.iter().map(|f| (alpha * f).exp()).collect();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for s in samples.iter() {
        a.push((-lambda * wick_exp(s, cov, quad, alpha, &tilt)?).exp());
        b.push((-lambda * wick_exp(s, cov, quad, alpha, &ones)?).exp());
    }
    let (num, den) = (Estimate::from_values(&a), Estimate::from_values(&b));
    let ratio = if a == b { 1.0 } else { num.mean / den.mean };
    let resid: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p - ratio * q).collect();
    let stderr = Estimate::from_values(&resid).stderr / den.mean;
    let sa: f64 = a.iter().sum();
    let ess = sa * sa / a.iter().map(|p| p * p).sum::<f64>();
    let unreliable = !(ess >= MIN_ESS);
    if unreliable {
        log::warn!("partition ratio has effective sample size {ess:.1}");
    }
    Ok(ZRatio { ratio, stderr, numerator: num, denominator: den, ess, unreliable })
}

/// A small instance of the free/Neumann comparison chain.
#[derive(Clone, Debug)]
pub struct BoundChainInput<'a> {
    pub mp: ModelParams,
    pub nt: &'a NeumannTruncation<'a>,
    /// At most four tiles.
    pub tiles: Vec<usize>,
    pub resolution: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub h: BoundarySource,
    pub n: usize,
    pub seed: u64,
    /// Grid steps for the per-tile `k` search.
    pub k_grid: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundChainReport {
    pub tiles: Vec<usize>,
    pub area: f64,
    pub k: Vec<f64>,
    pub z_free_h: Estimate,
    pub z_free_0: Estimate,
    pub z_neumann_h: Estimate,
    pub z_neumann_0: Estimate,
    /// `Π L̂(λkⱼ)` from one shared fundamental-tile sample set.
    pub product_bound: f64,
    pub product_bound_stderr: f64,
    /// `Ẑ_free(0)·e^{λ|Λ|}` and its standard error.
    pub jensen: f64,
    pub jensen_stderr: f64,
    pub free_below_neumann: bool,
    pub free_below_product: bool,
    pub jensen_holds: bool,
    pub passed: bool,
}

const SIGMAS: f64 = 5.0;

fn below(lo: Estimate, hi_mean: f64, hi_err: f64) -> bool {
    lo.mean <= hi_mean + SIGMAS * (lo.stderr * lo.stderr + hi_err * hi_err).sqrt() + 1e-15
}

/// Checks, within five standard errors: `Ẑ_free(h) ≤ Π L̂(λkⱼ)`,
/// `Ẑ_free(0) ≤ Ẑ_Neumann(0)` and `Ẑ_free(0)·e^{λ|Λ|} ≥ 1`. The Neumann
/// field is normalized by its own diagonal, under which the tile functionals
/// are i.i.d. with mean `|T₁|`.
pub fn bound_chain_audit(input: &BoundChainInput) -> Result<BoundChainReport, FieldError> {
    check_alpha(input.alpha)?;
    if input.tiles.is_empty() || input.tiles.len() > 4 {
        return Err(FieldError::Configuration(format!("bound chain needs 1 to 4 tiles, got {}", input.tiles.len())));
    }
    let tess = input.nt.tess;
    let (mp, alpha, lambda) = (&input.mp, input.alpha, input.lambda);
    let quad = build_quadrature(tess, &input.tiles, input.resolution);
    let area = quad.total_weight();
    let shift = boundary_shift(mp, &input.h, &quad)?;
    let zeros = vec![0.0; quad.len()];

    let free = build_covariance(mp, None, &quad, CovKind::Free)?;
    let neumann = build_covariance(mp, Some(input.nt), &quad, CovKind::Neumann)?;
    let sf = sample_fields(&free, input.n, input.seed);
    let sn = sample_fields(&neumann, input.n, input.seed ^ 0x9e37_79b9_7f4a_7c15);
    let z_free_h = partition_estimate(&sf, &free, &quad, alpha, lambda, &shift)?;
    let z_free_0 = partition_estimate(&sf, &free, &quad, alpha, lambda, &zeros)?;
    let z_neumann_h = partition_estimate(&sn, &neumann, &quad, alpha, lambda, &shift)?;
    let z_neumann_0 = partition_estimate(&sn, &neumann, &quad, alpha, lambda, &zeros)?;

    let k: Vec<f64> = k_table(mp, &input.h, alpha, tess, &input.tiles, input.k_grid)?.iter().map(|kc| kc.k()).collect();
    let q1 = build_quadrature(tess, &[tess.fundamental().id], input.resolution);
    let c1 = build_covariance(mp, Some(input.nt), &q1, CovKind::Neumann)?;
    let s1 = sample_fields(&c1, input.n, input.seed.wrapping_add(1));
    let x1 = s1.iter().map(|s| tile_functional(s, &c1, &q1, alpha, 0, Ordering::Own)).collect::<Result<Vec<_>, _>>()?;
    let mut product_bound = 1.0;
    let mut rel_err = 0.0;
    for &kj in &k {
        let p = laplace_transform(&x1, &[lambda * kj])[0];
        product_bound *= p.value;
        rel_err += p.stderr / p.value;
    }
    let product_bound_stderr = product_bound * rel_err;

    let scale = (lambda * area).exp();
    let jensen = z_free_0.mean * scale;
    let jensen_stderr = z_free_0.stderr * scale;
    let free_below_neumann = below(z_free_0, z_neumann_0.mean, z_neumann_0.stderr);
    let free_below_product = below(z_free_h, product_bound, product_bound_stderr);
    let jensen_holds = jensen >= 1.0 - SIGMAS * jensen_stderr - 1e-15;
    Ok(BoundChainReport {
        tiles: input.tiles.clone(),
        area,
        k,
        z_free_h,
        z_free_0,
        z_neumann_h,
        z_neumann_0,
        product_bound,
        product_bound_stderr,
        jensen,
        jensen_stderr,
        free_below_neumann,
        free_below_product,
        jensen_holds,
        passed: free_below_neumann && free_below_product && jensen_holds,
    })
}
