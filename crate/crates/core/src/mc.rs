//! Monte Carlo plumbing: seeded substreams and the estimate record.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator for replicate `index` under master `seed`.
///
/// Every replicate draws from its own ChaCha stream, so an estimate does not
/// depend on how replicates are distributed over threads.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√reps`.
    pub stderr: f64,
    pub reps: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Summarizes `samples` in order (sequential reduction, so bit-exact).
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            reps: n,
            seed,
        }
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = McEstimate::from_samples(&[2.0; 10], 7);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.stderr, 0.0);
        assert_eq!(e.reps, 10);
    }

    #[test]
    fn stderr_formula() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 0);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((e.stderr - sd / 2.0).abs() < 1e-15);
    }

    #[test]
    fn substreams_differ_and_repeat() {
        let a: u64 = substream(1, 0).random();
        let b: u64 = substream(1, 1).random();
        let c: u64 = substream(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
