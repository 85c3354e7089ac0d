use rayon::prelude::*;

use super::path::PathSampler;
use super::queue::final_state;
use super::stream_rng;
use crate::spectral::MapKernel;
use crate::Result;

/// Levels with fewer exceedances than this are too noisy to compare.
pub const MIN_HITS: u64 = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalModel {
    /// `lambda` bits in every slot.
    Constant(f64),
    Kernel(MapKernel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Delay,
    Backlog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationSettings {
    pub replications: u64,
    pub horizon: usize,
    pub seed: u64,
}

/// Empirical tail probability `P(metric > level)` with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub level: f64,
    pub p_hat: f64,
    pub std_err: f64,
    pub hits: u64,
    pub replications: u64,
}

impl TailEstimate {
    pub fn from_counts(level: f64, hits: u64, replications: u64) -> Self {
        let p_hat = hits as f64 / replications as f64;
        TailEstimate {
            level,
            p_hat,
            std_err: (p_hat * (1.0 - p_hat) / replications as f64).sqrt(),
            hits,
            replications,
        }
    }

    /// Enough exceedances for the normal approximation.
    pub fn is_reliable(&self) -> bool {
        self.hits >= MIN_HITS
    }
}

/// Backlog and virtual delay at the final slot of each replication.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueSamples {
    pub backlog: Vec<f64>,
    pub delay: Vec<f64>,
}

impl QueueSamples {
    pub fn metric(&self, metric: Metric) -> &[f64] {
        match metric {
            Metric::Delay => &self.delay,
            Metric::Backlog => &self.backlog,
        }
    }
}

/// Run independent replications of an initially empty queue for `horizon`
/// slots and record the final backlog and virtual delay.
///
/// Arrival and service chains start from their kernels' initial
/// distributions; replication `r` uses random stream `r`.
pub fn simulate_queue(
    arrival: &ArrivalModel,
    service: &MapKernel,
    settings: SimulationSettings,
) -> Result<QueueSamples> {
    let service_sampler = PathSampler::new(service);
    let arrival_sampler = match arrival {
        ArrivalModel::Kernel(k) => Some(PathSampler::new(k)),
        ArrivalModel::Constant(_) => None,
    };
    let horizon = settings.horizon;
    let pairs: Vec<(f64, f64)> = (0..settings.replications)
        .into_par_iter()
        .map_init(
            || (vec![0.0; horizon], vec![0.0; horizon], Vec::with_capacity(horizon + 1)),
            |(a, c, cum), r| {
                let mut rng = stream_rng(settings.seed, r);
                match (&arrival_sampler, arrival) {
                    (Some(s), _) => {
                        let mut state = s.initial_state(&mut rng);
                        for slot in a.iter_mut() {
                            let (next, x) = s.step(state, &mut rng);
                            *slot = x;
                            state = next;
                        }
                    }
                    (None, ArrivalModel::Constant(lambda)) => a.fill(*lambda),
                    (None, ArrivalModel::Kernel(_)) => unreachable!(),
                }
                let mut state = service_sampler.initial_state(&mut rng);
                for slot in c.iter_mut() {
                    let (next, x) = service_sampler.step(state, &mut rng);
                    *slot = x;
                    state = next;
                }
                let (b, d) = final_state(a, c, cum);
                (b, d as f64)
            },
        )
        .collect();
    let (backlog, delay) = pairs.into_iter().unzip();
    Ok(QueueSamples { backlog, delay })
}

/// Count exceedances of each level.
pub fn tail_from_samples(samples: &[f64], levels: &[f64]) -> Vec<TailEstimate> {
    let n = samples.len() as u64;
    levels
        .iter()
        .map(|&level| {
            let hits = samples.iter().filter(|x| **x > level).count() as u64;
            TailEstimate::from_counts(level, hits, n)
        })
        .collect()
}

/// Empirical `P(metric > level)` at each level.
pub fn tail_estimate(
    arrival: &ArrivalModel,
    service: &MapKernel,
    metric: Metric,
    levels: &[f64],
    settings: SimulationSettings,
) -> Result<Vec<TailEstimate>> {
    let samples = simulate_queue(arrival, service, settings)?;
    Ok(tail_from_samples(samples.metric(metric), levels))
}

/// Least-squares line through `(level, ln p_hat)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

impl DecayFit {
    /// Decay rate `-slope`.
    pub fn rate(&self) -> f64 {
        -self.slope
    }
}

/// Fit the log-tail over the estimates with at least `min_hits` exceedances.
/// Returns `None` with fewer than two usable points.
pub fn decay_fit(estimates: &[TailEstimate], min_hits: u64) -> Option<DecayFit> {
    let pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.hits >= min_hits && e.p_hat > 0.0)
        .map(|e| (e.level, e.p_hat.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(DecayFit {
        slope,
        intercept: my - slope * mx,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn underloaded_constant_queue_never_backs_up() {
        let service = MapKernel::constant(2.0).unwrap();
        let settings = SimulationSettings {
            replications: 100,
            horizon: 50,
            seed: 1,
        };
        let t = tail_estimate(&ArrivalModel::Constant(1.0), &service, Metric::Backlog, &[0.0], settings)
            .unwrap();
        assert_eq!(t[0].hits, 0);
        assert_eq!(t[0].p_hat, 0.0);
    }

    #[test]
    fn estimate_fields() {
        let e = TailEstimate::from_counts(1.0, 25, 100);
        assert_eq!(e.p_hat, 0.25);
        assert!((e.std_err - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
        assert!(!e.is_reliable());
    }

    #[test]
    fn fit_recovers_exact_exponential() {
        let est: Vec<TailEstimate> = (0..5)
            .map(|k| TailEstimate {
                level: k as f64,
                p_hat: (-0.7 * k as f64).exp() * 0.3,
                std_err: 0.0,
                hits: 1000,
                replications: 10_000,
            })
            .collect();
        let f = decay_fit(&est, 50).unwrap();
        assert!((f.rate() - 0.7).abs() < 1e-12);
    }
}
