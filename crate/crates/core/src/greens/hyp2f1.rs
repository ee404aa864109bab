//! Gauss hypergeometric function `₂F₁(a,b;c;z)` for real arguments, `z < 1`.
//!
//! Routes: direct series for `|z| ≤ 0.8`; Pfaff's transformation for
//! `z < 0`; near `z = 1` the connection formulas around `1 − z` (with the
//! logarithmic form when `c = a + b`), or the quadratic transformation when
//! `c = 2b`. Callers that know `1 − z` more accurately than `z` (e.g.
//! `tanh²(ρ/2)`) use [`hyp2f1_complement`].

use statrs::function::gamma::{digamma, gamma, ln_gamma};
use thiserror::Error;

const SERIES_CAP: usize = 200_000;
const NEAR_ONE: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Hyp2f1Error {
    #[error("c = {0} is a nonpositive integer")]
    PoleInC(f64),
    #[error("argument z = {0} outside (−∞, 1)")]
    Domain(f64),
    #[error("series did not converge; partial value {partial:e}")]
    PrecisionLoss { partial: f64 },
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `1/Γ(x)`, zero at the poles.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Gauss series, stopping once the terms fall below `1e−17` relative.
fn series(a: f64, b: f64, c: f64, z: f64) -> Result<f64, Hyp2f1Error> {
    let mut sum = 1.0;
    let mut term = 1.0;
    for k in 0..SERIES_CAP {
        let k = k as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z;
        sum += term;
        if term == 0.0 || (term.abs() <= 1e-17 * sum.abs() && k > 2.0) {
            return Ok(sum);
        }
    }
    Err(Hyp2f1Error::PrecisionLoss { partial: sum })
}

pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64, Hyp2f1Error> {
    hyp2f1_complement(a, b, c, z, 1.0 - z)
}

/// `₂F₁(a,b;c;z)` with `w = 1 − z` supplied separately.
pub fn hyp2f1_complement(a: f64, b: f64, c: f64, z: f64, w: f64) -> Result<f64, Hyp2f1Error> {
    if is_nonpositive_integer(c) {
        return Err(Hyp2f1Error::PoleInC(c));
    }
    // z may round to 1 while the supplied complement is still positive.
    if !(z <= 1.0) || !(w > 0.0) {
        return Err(Hyp2f1Error::Domain(z));
    }
    if z == 0.0 || a == 0.0 || b == 0.0 {
        return Ok(1.0);
    }
    if z < 0.0 {
        if z >= -0.8 && is_nonpositive_integer(a) {
            return series(a, b, c, z);
        }
        // Pfaff: F(a,b;c;z) = (1−z)^{−a} F(a, c−b; c; z/(z−1)).
        let zp = z / (z - 1.0);
        let wp = 1.0 / w;
        return Ok(w.powf(-a) * hyp2f1_complement(a, c - b, c, zp, wp)?);
    }
    if z <= 1.0 - NEAR_ONE || is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return series(a, b, c, z);
    }
    let s = c - a - b;
    let m = s.round();
    if (s - m).abs() > 1e-9 {
        return Ok(connection(a, b, c, w));
    }
    if m == 0.0 {
        return log_connection(a, b, w);
    }
    if (c - 2.0 * b).abs() < 1e-15 * c.abs().max(1.0) || (c - 2.0 * a).abs() < 1e-15 * c.abs().max(1.0) {
        let (a, b) = if (c - 2.0 * b).abs() < 1e-15 * c.abs().max(1.0) { (a, b) } else { (b, a) };
        return quadratic(a, b, z);
    }
    series(a, b, c, z)
}

/// `F(a,b;c;z)` for non-integer `c − a − b` from the two solutions at `z = 1`.
fn connection(a: f64, b: f64, c: f64, w: f64) -> f64 {
    let s = c - a - b;
    let g_c = gamma(c);
    let t1 = g_c * gamma(s) * rgamma(c - a) * rgamma(c - b);
    let t2 = g_c * gamma(-s) * rgamma(a) * rgamma(b);
    let f1 = if t1 == 0.0 { 0.0 } else { series(a, b, 1.0 - s, w).unwrap_or(f64::NAN) };
    let f2 = if t2 == 0.0 { 0.0 } else { series(c - a, c - b, 1.0 + s, w).unwrap_or(f64::NAN) };
    t1 * f1 + w.powf(s) * t2 * f2
}

/// `F(a,b;a+b;z)`: logarithmic expansion in `w = 1 − z`.
fn log_connection(a: f64, b: f64, w: f64) -> Result<f64, Hyp2f1Error> {
    let pref = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)).exp();
    let sign = gamma(a + b).signum() * gamma(a).signum() * gamma(b).signum();
    let lw = w.ln();
    let mut psi1 = digamma(1.0);
    let mut psia = digamma(a);
    let mut psib = digamma(b);
    let mut coef = 1.0;
    let mut sum = 0.0;
    for k in 0..SERIES_CAP {
        let kf = k as f64;
        let term = coef * (2.0 * psi1 - psia - psib - lw);
        sum += term;
        if k > 2 && term.abs() <= 1e-17 * sum.abs() {
            return Ok(sign * pref * sum);
        }
        coef *= (a + kf) * (b + kf) / ((kf + 1.0) * (kf + 1.0)) * w;
        psi1 += 1.0 / (kf + 1.0);
        psia += 1.0 / (a + kf);
        psib += 1.0 / (b + kf);
    }
    Err(Hyp2f1Error::PrecisionLoss { partial: sign * pref * sum })
}

/// `F(a,b;2b;z) = (1 − z/2)^{−a} F(a/2, (a+1)/2; b+½; (z/(2−z))²)`.
pub fn quadratic(a: f64, b: f64, z: f64) -> Result<f64, Hyp2f1Error> {
    let u = z / (2.0 - z);
    // 1 − u² = 4(1−z)/(2−z)², without cancellation.
    let w = 4.0 * (1.0 - z) / ((2.0 - z) * (2.0 - z));
    Ok((1.0 - 0.5 * z).powf(-a) * hyp2f1_complement(0.5 * a, 0.5 * (a + 1.0), b + 0.5, u * u, w)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn trivial_values() {
        assert_eq!(hyp2f1(1.3, 2.2, 3.1, 0.0).unwrap(), 1.0);
        assert!(matches!(hyp2f1(1.0, 1.0, -2.0, 0.5), Err(Hyp2f1Error::PoleInC(_))));
        assert!(matches!(hyp2f1(1.0, 1.0, 2.0, 1.0), Err(Hyp2f1Error::Domain(_))));
        assert!(matches!(hyp2f1(1.0, 1.0, 2.0, 1.5), Err(Hyp2f1Error::Domain(_))));
    }

    #[test]
    fn logarithm_identity() {
        // F(1,1;2;z) = −log(1−z)/z
        for z in [0.5, 0.85, 0.99, 0.999_999, -0.5, -3.0, -1e4] {
            let want = -(-z as f64).ln_1p() / z;
            assert_relative_eq!(hyp2f1(1.0, 1.0, 2.0, z).unwrap(), want, max_relative = 1e-13);
        }
        assert_relative_eq!(hyp2f1(1.0, 1.0, 2.0, 0.5).unwrap(), 1.386_294_361_119_890_6, max_relative = 1e-15);
    }

    #[test]
    fn elementary_closed_forms() {
        // F(a,b;b;z) = (1−z)^{−a}
        for z in [0.3, 0.9, 0.995, -2.0] {
            assert_relative_eq!(hyp2f1(0.7, 1.9, 1.9, z).unwrap(), (1.0 - z).powf(-0.7), max_relative = 1e-12);
        }
        // F(½,1;3/2;z²) = atanh(z)/z
        for x in [0.4, 0.95, 0.9999] {
            assert_relative_eq!(hyp2f1(0.5, 1.0, 1.5, x * x).unwrap(), (x as f64).atanh() / x, max_relative = 1e-12);
        }
        // F(½,½;3/2;z²) = asin(z)/z
        for x in [0.3, 0.97, 0.99999] {
            assert_relative_eq!(hyp2f1(0.5, 0.5, 1.5, x * x).unwrap(), (x as f64).asin() / x, max_relative = 1e-12);
        }
        // Polynomial: F(−2,b;c;z) = 1 − 2bz/c + b(b+1)z²/(c(c+1))
        let (b, c, z) = (1.5, 2.5, 0.93);
        let want = 1.0 - 2.0 * b * z / c + b * (b + 1.0) * z * z / (c * (c + 1.0));
        assert_relative_eq!(hyp2f1(-2.0, b, c, z).unwrap(), want, max_relative = 1e-13);
    }

    #[test]
    fn quadratic_transformation_grid() {
        // Both sides of F(α,β;2β;ω) = (1−ω/2)^{−α} F(α/2,(α+1)/2;β+½;(ω/(ω−2))²),
        // the left side summed directly with a long series.
        for &alpha in &[0.5, 1.0, 1.366, 2.0, 3.0] {
            for &beta in &[0.75, 1.0, 1.7, 3.0] {
                for &omega in &[-0.6, -0.2, 0.1, 0.4, 0.7] {
                    let lhs = series(alpha, beta, 2.0 * beta, omega).unwrap();
                    let rhs = quadratic(alpha, beta, omega).unwrap();
                    assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn connection_matches_series_in_overlap() {
        // Evaluate at z = 0.85 both through the series and through the
        // z = 1 connection (non-integer and zero c−a−b).
        for &(a, b, c) in &[(0.3, 1.1, 2.9), (1.366, 0.866, 1.732), (2.0, 2.0, 4.0), (1.366, 1.366, 2.732), (3.0, 2.5, 4.0)] {
            let z = 0.85;
            let direct = series(a, b, c, z).unwrap();
            let s = c - a - b;
            let via = if (s - s.round()).abs() > 1e-9 { connection(a, b, c, 1.0 - z) } else { log_connection(a, b, 1.0 - z).unwrap() };
            if (s - s.round()).abs() > 1e-9 || s == 0.0 {
                assert_relative_eq!(direct, via, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn complement_route_is_accurate_near_one() {
        // F(1,1;2;z) at z = 1 − 1e−12 with w given exactly.
        let w: f64 = 1e-12;
        let z = 1.0 - w;
        let want = -w.ln() / z;
        assert_relative_eq!(hyp2f1_complement(1.0, 1.0, 2.0, z, w).unwrap(), want, max_relative = 1e-13);
    }
}
