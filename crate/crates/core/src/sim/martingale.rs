use rayon::prelude::*;

use super::path::PathSampler;
use super::stats::mean_and_se;
use super::stream_rng;
use crate::spectral::{perron, MapKernel};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleReport {
    pub theta: f64,
    pub horizon: usize,
    pub mean: f64,
    pub std_err: f64,
    pub replications: u64,
}

impl MartingaleReport {
    /// `|mean - 1|` in standard errors.
    pub fn z_score(&self) -> f64 {
        if self.std_err == 0.0 {
            // a deterministic likelihood ratio differs from 1 only by rounding
            if (self.mean - 1.0).abs() <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - 1.0).abs() / self.std_err
        }
    }
}

/// Monte Carlo mean of `L(T) = h_{J_T} / h_{J_0} exp(theta S(T) - T kappa(theta))`.
pub fn martingale_check(
    kernel: &MapKernel,
    theta: f64,
    horizon: usize,
    replications: u64,
    seed: u64,
) -> Result<MartingaleReport> {
    let sol = perron(kernel, theta)?;
    let sampler = PathSampler::new(kernel);
    let values: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            let start = sampler.initial_state(&mut rng);
            let mut state = start;
            let mut sum = 0.0;
            for _ in 0..horizon {
                let (next, x) = sampler.step(state, &mut rng);
                sum += x;
                state = next;
            }
            if theta == 0.0 {
                return 1.0;
            }
            sol.h[state] / sol.h[start] * (theta * sum - horizon as f64 * sol.kappa).exp()
        })
        .collect();
    let (mean, std_err) = mean_and_se(&values);
    Ok(MartingaleReport {
        theta,
        horizon,
        mean,
        std_err,
        replications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_theta_is_exactly_one() {
        let k = MapKernel::constant(3.0).unwrap();
        let r = martingale_check(&k, 0.0, 20, 100, 1).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_err, 0.0);
    }

    #[test]
    fn constant_kernel_is_exactly_one() {
        let k = MapKernel::constant(0.5).unwrap();
        let r = martingale_check(&k, 0.8, 20, 100, 1).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-12);
    }
}
