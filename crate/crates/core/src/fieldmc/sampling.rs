use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CovarianceModel;

/// Samples per RNG stream.
pub const BATCH_SIZE: usize = 1024;

/// Gaussian cell vectors, stored sample-major. Batch `b` is drawn from the
/// ChaCha8 stream `b` of `seed`, so the contents depend only on
/// `(seed, n)` and not on the thread count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSamples {
    pub n_cells: usize,
    pub values: Vec<f64>,
    pub seed: u64,
    pub batch_size: usize,
}

impl FieldSamples {
    pub fn len(&self) -> usize {
        if self.n_cells == 0 {
            0
        } else {
            self.values.len() / self.n_cells
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.values[k * self.n_cells..(k + 1) * self.n_cells]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_cells.max(1))
    }

    /// Empirical covariance of cells `i` and `j` (mean known to be zero).
    pub fn empirical_cov(&self, i: usize, j: usize) -> super::Estimate {
        let prods: Vec<f64> = self.iter().map(|s| s[i] * s[j]).collect();
        super::Estimate::from_values(&prods)
    }
}

pub fn sample_fields(cov: &CovarianceModel, n: usize, seed: u64) -> FieldSamples {
    let m = cov.n();
    let n_batches = n.div_ceil(BATCH_SIZE);
    let batches: Vec<Vec<f64>> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BATCH_SIZE.min(n - b * BATCH_SIZE);
            let mut out = Vec::with_capacity(count * m);
            for _ in 0..count {
                let xi = DVector::from_fn(m, |_, _| StandardNormal.sample(&mut rng));
                let phi = &cov.factor * xi;
                out.extend(phi.iter());
            }
            out
        })
        .collect();
    FieldSamples { n_cells: m, values: batches.concat(), seed, batch_size: BATCH_SIZE }
}
