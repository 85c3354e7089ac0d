//! Rayleigh-fading channel capacity: kernels for analysis and sample paths
//! driven by dependence-control plans.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::copula::ControlPlan;
use crate::sim::stream_rng;
use crate::special::exp_integral_e1;
use crate::spectral::{exponential_gain, IncrementLaw, MapKernel, Pmf};
use crate::{Error, Result};

/// Bandwidth and per-transition average SNR of a channel whose transmit
/// power follows a finite-state chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSpec {
    bandwidth: f64,
    snr: Vec<Vec<f64>>,
    power_states: Vec<String>,
}

impl ChannelSpec {
    /// `snr[i][j]` applies to slots that move the power state from `i` to `j`.
    pub fn new(bandwidth: f64, snr: Vec<Vec<f64>>, power_states: Vec<String>) -> Result<Self> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        let n = snr.len();
        if n == 0 || snr.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument("SNR matrix must be square".into()));
        }
        if power_states.len() != n {
            return Err(Error::DimensionMismatch {
                left: power_states.len(),
                right: n,
            });
        }
        if snr.iter().flatten().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidArgument("SNR entries must be positive".into()));
        }
        Ok(ChannelSpec {
            bandwidth,
            snr,
            power_states,
        })
    }

    /// Channel whose SNR depends only on the power state entered in a slot.
    pub fn per_state(bandwidth: f64, snr: &[f64]) -> Result<Self> {
        let n = snr.len();
        let labels = (0..n).map(|i| format!("p{i}")).collect();
        ChannelSpec::new(bandwidth, vec![snr.to_vec(); n], labels)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn snr(&self) -> &[Vec<f64>] {
        &self.snr
    }

    pub fn power_states(&self) -> &[String] {
        &self.power_states
    }

    pub fn n_states(&self) -> usize {
        self.snr.len()
    }
}

/// `W log2(1 + snr * g)`.
pub fn instantaneous_capacity(gain_power: f64, snr: f64, bandwidth: f64) -> f64 {
    bandwidth * (snr * gain_power).ln_1p() / LN_2
}

/// Mean Rayleigh capacity `(W / ln 2) e^{1/snr} E1(1/snr)`.
pub fn rayleigh_mean_capacity(bandwidth: f64, snr: f64) -> f64 {
    let x = 1.0 / snr;
    bandwidth / LN_2 * x.exp() * exp_integral_e1(x)
}

/// Service kernel with Rayleigh capacity increments, started in the
/// stationary distribution of `transition`.
pub fn capacity_kernel(transition: Vec<Vec<f64>>, channel: &ChannelSpec) -> Result<MapKernel> {
    let n = channel.n_states();
    if transition.len() != n {
        return Err(Error::DimensionMismatch {
            left: transition.len(),
            right: n,
        });
    }
    let increments = channel
        .snr
        .iter()
        .map(|row| {
            row.iter()
                .map(|s| IncrementLaw::rayleigh(channel.bandwidth, *s))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let uniform = vec![1.0 / n as f64; n];
    let k = MapKernel::new(channel.power_states.clone(), transition, increments, uniform)?;
    let stationary = k.stationary().to_vec();
    k.with_initial(stationary)
}

/// One realisation of a plan-driven capacity process.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityPath {
    /// Power state at the start of each slot and after the last slot.
    pub states: Vec<usize>,
    pub gains: Vec<f64>,
    pub capacity: Vec<f64>,
    /// `S(t) / t` for `t = 1 ..= horizon`.
    pub transient: Vec<f64>,
}

/// Simulate the power chain from the plan's transition sequence (the last
/// matrix is reused beyond the plan horizon), draw i.i.d. unit-mean
/// exponential gains, and emit capacity per slot.
pub fn controlled_capacity_process(
    plan: &ControlPlan,
    channel: &ChannelSpec,
    horizon: usize,
    seed: u64,
    stream: u64,
) -> Result<CapacityPath> {
    let dim = plan
        .dimensions
        .first()
        .ok_or_else(|| Error::InvalidArgument("plan has no dimensions".into()))?;
    let n = channel.n_states();
    if dim.distributions[0].len() != n {
        return Err(Error::DimensionMismatch {
            left: dim.distributions[0].len(),
            right: n,
        });
    }
    if dim.transitions.is_empty() {
        return Err(Error::InvalidArgument("plan has no transitions".into()));
    }
    let mut rng = stream_rng(seed, stream);
    let mut state = draw(&dim.distributions[0], &mut rng);
    let mut path = CapacityPath {
        states: Vec::with_capacity(horizon + 1),
        gains: Vec::with_capacity(horizon),
        capacity: Vec::with_capacity(horizon),
        transient: Vec::with_capacity(horizon),
    };
    path.states.push(state);
    let mut total = 0.0;
    for t in 0..horizon {
        let p = &dim.transitions[t.min(dim.transitions.len() - 1)];
        let next = draw(&p[state], &mut rng);
        let g = exponential_gain(&mut rng);
        let c = instantaneous_capacity(g, channel.snr[state][next], channel.bandwidth);
        total += c;
        path.gains.push(g);
        path.capacity.push(c);
        path.transient.push(total / (t + 1) as f64);
        path.states.push(next);
        state = next;
    }
    Ok(path)
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Equal-mass PMF on the capacity quantiles at levels `(k - 0.5) / n`.
pub fn quantize_capacity(snr: f64, bandwidth: f64, n_points: usize) -> Result<Pmf> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("need at least one point".into()));
    }
    IncrementLaw::rayleigh(bandwidth, snr)?;
    let support: Vec<f64> = (1..=n_points)
        .map(|k| {
            let q = (k as f64 - 0.5) / n_points as f64;
            instantaneous_capacity(-(-q).ln_1p(), snr, bandwidth)
        })
        .collect();
    Pmf::new(support, vec![1.0 / n_points as f64; n_points])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_values() {
        assert_eq!(instantaneous_capacity(0.0, 3.0, 100.0), 0.0);
        let snr = 2.5;
        let c = instantaneous_capacity((1f64.exp() - 1.0) / snr, snr, 20.0);
        assert!((c - 20.0 / LN_2).abs() < 1e-12);
    }

    #[test]
    fn mean_matches_quadrature() {
        let snr = 0.5f64.exp();
        let law = IncrementLaw::rayleigh(20_000.0, snr).unwrap();
        let quad = law.mean().unwrap();
        let closed = rayleigh_mean_capacity(20_000.0, snr);
        assert!((quad - closed).abs() < 1e-8 * closed);
    }

    #[test]
    fn quantized_mean() {
        let snr = 0.5f64.exp();
        let p = quantize_capacity(snr, 20_000.0, 256).unwrap();
        let exact = rayleigh_mean_capacity(20_000.0, snr);
        assert!((p.mean() - exact).abs() < 0.01 * exact);
        let median = quantize_capacity(snr, 20_000.0, 1).unwrap();
        assert!((median.support()[0] - instantaneous_capacity(2f64.ln(), snr, 20_000.0)).abs() < 1e-9);
    }

    #[test]
    fn kernel_starts_stationary() {
        let ch = ChannelSpec::per_state(20.0, &[2.0, 1.0]).unwrap();
        let k = capacity_kernel(vec![vec![0.9, 0.1], vec![0.3, 0.7]], &ch).unwrap();
        assert!((k.initial()[0] - 0.75).abs() < 1e-14);
    }
}
