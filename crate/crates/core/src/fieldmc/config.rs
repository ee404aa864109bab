use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{0}` given twice")]
    Duplicate(String),
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error("key `{key}`: cannot parse `{value}`")]
    BadValue { key: &'static str, value: String },
}

/// Parameters of a decay run, read from and written to flat `key=value`
/// text. All keys are required; `#` starts a comment.
///
/// | key | meaning | default |
/// |---|---|---|
/// | `m2` | mass squared | 2 |
/// | `alpha` | exponential coupling, `|α| < √(4π)` | 1 |
/// | `lambda` | interaction strength | 0.1 |
/// | `p`, `q`, `r` | triangle group | 3, 4, 4 |
/// | `beta0`, `beta1` | boundary bump support (disk angles) | π/6, π/3 |
/// | `amplitude` | bump peak; 0 gives the `h = 0` control | 1 |
/// | `p_angle` | conical point (disk angle) | π/4 |
/// | `cone_c` | tube width around the ray to the conical point (consecutive tiles at least `CONE_STEP` further out) | 1 |
/// | `q_max` | number of tiles in the largest region | 8 |
/// | `n_mc` | Monte Carlo samples | 20000 |
/// | `resolution` | cells per tile side | 3 |
/// | `orbit_radius` | Neumann image-sum radius | 6 |
/// | `seed` | RNG seed | 1 |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub m2: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub p: u32,
    pub q: u32,
    pub r: u32,
    pub beta0: f64,
    pub beta1: f64,
    pub amplitude: f64,
    pub p_angle: f64,
    pub cone_c: f64,
    pub q_max: usize,
    pub n_mc: usize,
    pub resolution: usize,
    pub orbit_radius: f64,
    pub seed: u64,
}

pub const KEYS: [&str; 16] = [
    "m2", "alpha", "lambda", "p", "q", "r", "beta0", "beta1", "amplitude", "p_angle", "cone_c", "q_max", "n_mc", "resolution",
    "orbit_radius", "seed",
];

impl Default for RunConfig {
    fn default() -> Self {
        use std::f64::consts::PI;
        RunConfig {
            m2: 2.0,
            alpha: 1.0,
            lambda: 0.1,
            p: 3,
            q: 4,
            r: 4,
            beta0: PI / 6.0,
            beta1: PI / 3.0,
            amplitude: 1.0,
            p_angle: PI / 4.0,
            cone_c: 1.0,
            q_max: 8,
            n_mc: 20_000,
            resolution: 3,
            orbit_radius: 6.0,
            seed: 1,
        }
    }
}

fn parse<T: FromStr>(key: &'static str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::BadValue { key, value: value.to_string() })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut values: [Option<String>; 16] = Default::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            let (k, v) = (k.trim(), v.trim());
            let idx = KEYS.iter().position(|&key| key == k).ok_or_else(|| ConfigError::UnknownKey(k.to_string()))?;
            if values[idx].is_some() {
                return Err(ConfigError::Duplicate(k.to_string()));
            }
            values[idx] = Some(v.to_string());
        }
        let get = |i: usize| values[i].as_deref().ok_or(ConfigError::MissingKey(KEYS[i]));
        Ok(RunConfig {
            m2: parse(KEYS[0], get(0)?)?,
            alpha: parse(KEYS[1], get(1)?)?,
            lambda: parse(KEYS[2], get(2)?)?,
            p: parse(KEYS[3], get(3)?)?,
            q: parse(KEYS[4], get(4)?)?,
            r: parse(KEYS[5], get(5)?)?,
            beta0: parse(KEYS[6], get(6)?)?,
            beta1: parse(KEYS[7], get(7)?)?,
            amplitude: parse(KEYS[8], get(8)?)?,
            p_angle: parse(KEYS[9], get(9)?)?,
            cone_c: parse(KEYS[10], get(10)?)?,
            q_max: parse(KEYS[11], get(11)?)?,
            n_mc: parse(KEYS[12], get(12)?)?,
            resolution: parse(KEYS[13], get(13)?)?,
            orbit_radius: parse(KEYS[14], get(14)?)?,
            seed: parse(KEYS[15], get(15)?)?,
        })
    }
}

/// Canonical form: one `key=value` line per key in schema order, reals in
/// shortest round-trip notation.
impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: [String; 16] = [
            self.m2.to_string(),
            self.alpha.to_string(),
            self.lambda.to_string(),
            self.p.to_string(),
            self.q.to_string(),
            self.r.to_string(),
            self.beta0.to_string(),
            self.beta1.to_string(),
            self.amplitude.to_string(),
            self.p_angle.to_string(),
            self.cone_c.to_string(),
            self.q_max.to_string(),
            self.n_mc.to_string(),
            self.resolution.to_string(),
            self.orbit_radius.to_string(),
            self.seed.to_string(),
        ];
        for (k, v) in KEYS.iter().zip(vals) {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_text_round_trips() {
        let text = RunConfig::default().to_string();
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.to_string(), text);
    }

    #[test]
    fn errors_name_the_key() {
        let text = RunConfig::default().to_string();
        let missing: String = text.lines().filter(|l| !l.starts_with("lambda=")).map(|l| format!("{l}\n")).collect();
        assert_eq!(RunConfig::parse(&missing), Err(ConfigError::MissingKey("lambda")));
        assert_eq!(RunConfig::parse(&format!("{text}bogus=1\n")), Err(ConfigError::UnknownKey("bogus".into())));
        assert_eq!(RunConfig::parse(&format!("{text}seed=2\n")), Err(ConfigError::Duplicate("seed".into())));
        let bad = text.replace("q_max=8", "q_max=eight");
        assert!(matches!(RunConfig::parse(&bad), Err(ConfigError::BadValue { key: "q_max", .. })));
        // Comments and spacing are accepted.
        let loose = text.replace("m2=2", "  m2 = 2   # mass");
        assert_eq!(RunConfig::parse(&loose).unwrap(), RunConfig::default());
    }

    proptest! {
        #[test]
        fn round_trip(m2 in 0.01f64..10.0, alpha in -3.5f64..3.5, lambda in 0.0f64..1.0, seed in any::<u64>(), n in 1usize..1_000_000) {
            let cfg = RunConfig { m2, alpha, lambda, seed, n_mc: n, ..RunConfig::default() };
            let text = cfg.to_string();
            let back = RunConfig::parse(&text).unwrap();
            prop_assert_eq!(&back, &cfg);
            prop_assert_eq!(back.to_string(), text);
        }
    }
}
