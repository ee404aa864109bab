use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::laplace::{boundary_shift, log_laplace, z_ratio, ZRatio};
use super::wick::{check_alpha, tile_functional, Ordering};
use super::{build_covariance, build_quadrature, sample_fields, CovKind, Estimate, FieldError, RunConfig};
use crate::boundary::{k_table, Bump, BoundarySource};
use crate::geometry::dist;
use crate::greens::{ModelParams, NeumannTruncation};
use crate::tessellation::{generate, TriangleParams};

const BOOTSTRAP: usize = 400;
const K_GRID: usize = 6;
/// Minimum growth of the anchor distance between consecutive conical
/// tiles. Neighbouring tiles often share the vertex where `H₊h` is
/// smallest and so tie in `k`; spacing the sequence removes the ties.
pub const CONE_STEP: f64 = 0.6;
/// Regions up to this many tiles also get a direct ratio estimate.
const DIRECT_MAX_TILES: usize = 2;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QRecord {
    pub q: usize,
    pub tile_ids: Vec<usize>,
    pub k: Vec<f64>,
    pub log_k: Vec<f64>,
    /// `L̂(λkⱼ)` for the tiles of the region.
    pub laplace: Vec<f64>,
    /// `U(q) = Σⱼ [log L̂(λkⱼ) + λ|T₁|]`, the log of the upper bound on the
    /// partition-function ratio.
    pub log_bound: f64,
    /// Bootstrap standard error of `U(q)`.
    pub log_bound_stderr: f64,
    pub direct_ratio: Option<ZRatio>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrivialityRun {
    pub config: RunConfig,
    pub delta_plus: f64,
    pub tile_area: f64,
    pub tessellation_radius: f64,
    pub neumann_tail_bound: f64,
    pub conical_tiles: Vec<usize>,
    /// Mean of the fundamental-tile functional (expected `|T₁|`).
    pub x1_mean: Estimate,
    pub records: Vec<QRecord>,
    /// `−slope` of `U(q)` against `q`.
    pub epsilon_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `log L̂` at the largest `k`: the empirical plateau standing in for
    /// the mass of `X₁ = 0`, which the discrete model cannot realize.
    pub plateau_log_laplace: f64,
    /// The smallness condition on `λ` is assumed, not checked.
    pub lambda_condition: String,
    pub passed: bool,
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Cumulative `U(q)` for per-tile `log L̂(λkⱼ)`.
fn cumulative(log_l: &[f64], lambda_area: f64) -> Vec<f64> {
    log_l
        .iter()
        .scan(0.0, |acc, l| {
            *acc += l + lambda_area;
            Some(*acc)
        })
        .collect()
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bounds the partition-function ratio on growing unions of conical tiles
/// by `Π L̂(λkⱼ)·e^{λ|Λ|}` and fits the decay rate of its logarithm, with
/// a bootstrap confidence interval over the shared fundamental-tile samples.
pub fn triviality_run(cfg: &RunConfig) -> Result<TrivialityRun, FieldError> {
    check_alpha(cfg.alpha)?;
    if !(cfg.lambda > 0.0) || cfg.q_max < 2 || cfg.n_mc < 2 {
        return Err(FieldError::Configuration("need lambda > 0, q_max ≥ 2 and n_mc ≥ 2".into()));
    }
    let control = cfg.amplitude == 0.0;
    if !control && cfg.alpha * cfg.amplitude <= 0.0 {
        return Err(FieldError::Configuration("h must have the sign of alpha".into()));
    }
    let tp = TriangleParams::new(cfg.p, cfg.q, cfg.r)?;
    let mp = ModelParams::new(2, cfg.m2)?;
    let h = if control { BoundarySource::zero() } else { BoundarySource::Bump(Bump::new(cfg.beta0, cfg.beta1, cfg.amplitude, 1.0)?) };

    let fundamental = crate::tessellation::fundamental_triangle(tp);
    let o = crate::geometry::Point::origin();
    let reach = fundamental.vertices.iter().map(|v| dist(&o, v)).fold(0.0, f64::max);
    let radius = cfg.orbit_radius + 2.0 * reach + 0.1;
    log::info!("generating tessellation to radius {radius:.3}");
    let tess = generate(tp, radius)?;
    let nt = NeumannTruncation::new(&tess, cfg.orbit_radius, 0.0)?;
    let seq = tess.conical_sequence_spaced(cfg.p_angle, &tess.fundamental().centroid, cfg.q_max, cfg.cone_c, CONE_STEP)?;

    let ktab = k_table(&mp, &h, cfg.alpha, &tess, &seq, K_GRID)?;
    let log_k: Vec<f64> = ktab.iter().map(|k| k.log_k).collect();
    if !control && log_k.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FieldError::Configuration(format!("k_j not strictly increasing along the conical sequence: log k = {log_k:?}")));
    }
    let log_s: Vec<f64> = log_k.iter().map(|lk| cfg.lambda.ln() + lk).collect();
    if log_s.iter().any(|&l| l > 700.0) {
        return Err(FieldError::Configuration("λk_j overflows; reduce q_max or the amplitude".into()));
    }
    let s: Vec<f64> = log_s.iter().map(|l| l.exp()).collect();

    // One shared sample set on the fundamental tile; congruent tiles have
    // identically distributed functionals under the Neumann field.
    let q1 = build_quadrature(&tess, &[tess.fundamental().id], cfg.resolution);
    let c1 = build_covariance(&mp, Some(&nt), &q1, CovKind::Neumann)?;
    let samples = sample_fields(&c1, cfg.n_mc, cfg.seed);
    let x1 = samples.iter().map(|x| tile_functional(x, &c1, &q1, cfg.alpha, 0, Ordering::Own)).collect::<Result<Vec<_>, _>>()?;
    let tile_area = q1.total_weight();
    let lambda_area = cfg.lambda * tile_area;

    let log_l: Vec<f64> = s.iter().map(|&sj| log_laplace(&x1, sj)).collect();
    let u = cumulative(&log_l, lambda_area);
    if u.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::Configuration("Laplace transform underflowed at the largest k_j".into()));
    }
    let qs: Vec<f64> = (1..=cfg.q_max).map(|q| q as f64).collect();
    let epsilon_hat = -fit_slope(&qs, &u);

    let boot: Vec<(Vec<f64>, f64)> = (0..BOOTSTRAP)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xb007_57a9);
            rng.set_stream(b as u64);
            let xs: Vec<f64> = (0..x1.len()).map(|_| x1[rng.random_range(0..x1.len())]).collect();
            let ub = cumulative(&s.iter().map(|&sj| log_laplace(&xs, sj)).collect::<Vec<_>>(), lambda_area);
            let e = -fit_slope(&qs, &ub);
            (ub, e)
        })
        .collect();
    let mut eps: Vec<f64> = boot.iter().map(|b| b.1).collect();
    eps.sort_by(f64::total_cmp);
    let (ci_low, ci_high) = (percentile(&eps, 0.025), percentile(&eps, 0.975));

    let mut records = Vec::with_capacity(cfg.q_max);
    for q in 1..=cfg.q_max {
        let ub: Vec<f64> = boot.iter().map(|b| b.0[q - 1]).collect();
        // Scaled so that bounds near the overflow range keep a finite spread.
        let scale = ub.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let scaled: Vec<f64> = ub.iter().map(|v| v / scale).collect();
        let sd = Estimate::from_values(&scaled).stderr * (ub.len() as f64).sqrt() * scale;
        let direct_ratio = if q <= DIRECT_MAX_TILES {
            let quad = build_quadrature(&tess, &seq[..q], cfg.resolution);
            let cov = build_covariance(&mp, None, &quad, CovKind::Free)?;
            let shift = boundary_shift(&mp, &h, &quad)?;
            Some(z_ratio(&cov, &quad, cfg.alpha, cfg.lambda, &shift, cfg.n_mc, cfg.seed.wrapping_add(q as u64))?)
        } else {
            None
        };
        records.push(QRecord {
            q,
            tile_ids: seq[..q].to_vec(),
            k: log_k[..q].iter().map(|l| l.exp()).collect(),
            log_k: log_k[..q].to_vec(),
            laplace: log_l[..q].iter().map(|l| l.exp()).collect(),
            log_bound: u[q - 1],
            log_bound_stderr: sd,
            direct_ratio,
        });
    }
    let passed = ci_low > 0.0;
    log::info!("decay rate {epsilon_hat:.6} with 95% interval [{ci_low:.6}, {ci_high:.6}]");
    Ok(TrivialityRun {
        config: cfg.clone(),
        delta_plus: mp.delta_plus,
        tile_area,
        tessellation_radius: radius,
        neumann_tail_bound: nt.tail_bound(&mp),
        conical_tiles: seq,
        x1_mean: Estimate::from_values(&x1),
        records,
        epsilon_hat,
        ci_low,
        ci_high,
        plateau_log_laplace: *log_l.last().expect("q_max ≥ 2"),
        lambda_condition: "assumed".into(),
        passed,
    })
}

/// `q, n_tiles, min_k, max_k, U_q, U_q_stderr`, 17 significant digits.
pub fn write_q_csv<W: Write>(mut out: W, run: &TrivialityRun) -> std::io::Result<()> {
    writeln!(out, "q,n_tiles,min_k,max_k,U_q,U_q_stderr")?;
    for r in &run.records {
        let min_k = r.k.iter().copied().fold(f64::INFINITY, f64::min);
        let max_k = r.k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        writeln!(out, "{},{},{:.16e},{:.16e},{:.16e},{:.16e}", r.q, r.tile_ids.len(), min_k, max_k, r.log_bound, r.log_bound_stderr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.5 - 0.25 * v).collect();
        assert!((fit_slope(&x, &y) + 0.25).abs() < 1e-14);
        assert_eq!(cumulative(&[-1.0, -2.0], 0.5), vec![-0.5, -2.0]);
    }

    #[test]
    fn rejects_bad_configurations() {
        let cfg = RunConfig { alpha: 4.0, ..RunConfig::default() };
        assert!(matches!(triviality_run(&cfg), Err(FieldError::Threshold { .. })));
        let cfg = RunConfig { amplitude: -1.0, ..RunConfig::default() };
        assert!(matches!(triviality_run(&cfg), Err(FieldError::Configuration(_))));
    }
}
