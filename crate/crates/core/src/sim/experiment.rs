use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use super::order::{convex_order_leq, cumulative_pmf, supermodular_battery, OrderReport};
use super::path::PathSampler;
use super::stream_rng;
use super::tail::{decay_fit, tail_estimate, ArrivalModel, DecayFit, Metric, SimulationSettings};
use crate::bounds::{constant_arrival, decay_rates};
use crate::channel::{capacity_kernel, ChannelSpec};
use crate::copula::{transition_from_copula, CopulaSpec};
use crate::spectral::{IncrementLaw, MapKernel, Pmf};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Constant arrivals against a bursty two-state source of equal mean.
    ArrivalVsConstant,
    /// Frechet dependence of the power chain on the Rayleigh channel.
    ServiceDependenceSweep,
    /// Dependence of one of two independent sub-channels.
    SubchannelAggregation,
    /// Dependence of one of several superposed on-off sources.
    DeterministicMultiplexing,
    /// Comonotone against independent batch counts.
    RandomMultiplexing,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::ArrivalVsConstant,
        Experiment::ServiceDependenceSweep,
        Experiment::SubchannelAggregation,
        Experiment::DeterministicMultiplexing,
        Experiment::RandomMultiplexing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ArrivalVsConstant => "arrival-vs-constant",
            Experiment::ServiceDependenceSweep => "service-dependence-sweep",
            Experiment::SubchannelAggregation => "subchannel-aggregation",
            Experiment::DeterministicMultiplexing => "deterministic-multiplexing",
            Experiment::RandomMultiplexing => "random-multiplexing",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub seeds: Vec<u64>,
    pub replications: u64,
    pub horizon: usize,
    /// Sample size per side for the supermodular battery.
    pub battery_samples: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        ExperimentSettings {
            seeds: vec![1, 2, 3],
            replications: 200_000,
            horizon: 200,
            battery_samples: 20_000,
        }
    }
}

/// Empirical and analytic decay rate of one variant under one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    pub variant: String,
    pub seed: u64,
    pub fit: Option<DecayFit>,
    pub analytic: f64,
}

impl DecayEstimate {
    pub fn empirical(&self) -> Option<f64> {
        self.fit.map(|f| f.rate())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCheck {
    pub label: String,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub metric: Metric,
    /// Variant labels in the order the decay rate should not increase.
    pub variants: Vec<String>,
    pub rates: Vec<DecayEstimate>,
    pub convex_checks: Vec<ConvexCheck>,
    pub order: Option<OrderReport>,
}

impl ExperimentReport {
    /// Empirical rates of every seed are non-increasing along `variants`.
    /// Finite-horizon slopes can support the asymptotic ordering but not
    /// prove it.
    pub fn direction_ok(&self) -> bool {
        let mut seeds: Vec<u64> = self.rates.iter().map(|r| r.seed).collect();
        seeds.dedup();
        seeds.iter().all(|&seed| self.seed_direction_ok(seed))
    }

    pub fn seed_direction_ok(&self, seed: u64) -> bool {
        let rates: Vec<Option<f64>> = self
            .variants
            .iter()
            .map(|v| {
                self.rates
                    .iter()
                    .find(|r| r.seed == seed && &r.variant == v)
                    .and_then(|r| r.empirical())
            })
            .collect();
        rates.iter().all(|r| r.is_some())
            && rates.windows(2).all(|w| w[0].unwrap() >= w[1].unwrap())
    }

    /// Analytic rates are non-increasing along `variants`.
    pub fn analytic_direction_ok(&self) -> bool {
        let first_seed = self.rates.first().map(|r| r.seed);
        let analytic: Vec<f64> = self
            .variants
            .iter()
            .filter_map(|v| {
                self.rates
                    .iter()
                    .find(|r| Some(r.seed) == first_seed && &r.variant == v)
                    .map(|r| r.analytic)
            })
            .collect();
        analytic.windows(2).all(|w| w[0] >= w[1])
    }
}

struct Variant {
    label: String,
    arrival: ArrivalModel,
    service: MapKernel,
}

/// Run one of the ordering experiments with matched seeds across variants.
pub fn ordering_experiment(experiment: Experiment, settings: &ExperimentSettings) -> Result<ExperimentReport> {
    if settings.seeds.is_empty() || settings.replications == 0 || settings.horizon == 0 {
        return Err(Error::InvalidArgument(
            "experiment needs seeds, replications and a horizon".into(),
        ));
    }
    let (metric, levels, variants, convex_checks, order) = match experiment {
        Experiment::ArrivalVsConstant => arrival_vs_constant(settings)?,
        Experiment::ServiceDependenceSweep => service_dependence_sweep(settings)?,
        Experiment::SubchannelAggregation => subchannel_aggregation()?,
        Experiment::DeterministicMultiplexing => deterministic_multiplexing()?,
        Experiment::RandomMultiplexing => random_multiplexing(settings)?,
    };
    let mut rates = Vec::new();
    for &seed in &settings.seeds {
        for v in &variants {
            let arrival_kernel = match &v.arrival {
                ArrivalModel::Constant(l) => constant_arrival(*l)?,
                ArrivalModel::Kernel(k) => k.clone(),
            };
            let (delay_rate, backlog_rate) = decay_rates(&arrival_kernel, &v.service)?;
            let analytic = match metric {
                Metric::Delay => delay_rate,
                Metric::Backlog => backlog_rate,
            };
            let sim = SimulationSettings {
                replications: settings.replications,
                horizon: settings.horizon,
                seed,
            };
            let tails = tail_estimate(&v.arrival, &v.service, metric, &levels, sim)?;
            rates.push(DecayEstimate {
                variant: v.label.clone(),
                seed,
                fit: decay_fit(&tails, super::tail::MIN_HITS),
                analytic,
            });
        }
    }
    Ok(ExperimentReport {
        experiment,
        metric,
        variants: variants.into_iter().map(|v| v.label).collect(),
        rates,
        convex_checks,
        order,
    })
}

type Setup = (Metric, Vec<f64>, Vec<Variant>, Vec<ConvexCheck>, Option<OrderReport>);

fn half_levels(count: usize) -> Vec<f64> {
    (1..=count).map(|k| k as f64 - 0.5).collect()
}

fn finite(values: &[f64]) -> Result<IncrementLaw> {
    Ok(IncrementLaw::DiscretePmf(Pmf::uniform(values.to_vec())?))
}

fn two_state(alpha: f64, varpi: &[f64], laws: Vec<IncrementLaw>) -> Result<MapKernel> {
    let (p, _) = transition_from_copula(&CopulaSpec::one_param_frechet(alpha)?, varpi)?;
    MapKernel::with_destination_increments(p, laws, varpi.to_vec())
}

fn finite_law(law: &IncrementLaw) -> Result<Pmf> {
    match law {
        IncrementLaw::Constant(c) => Ok(Pmf::point(*c)),
        IncrementLaw::DiscretePmf(p) => Ok(p.clone()),
        other => Err(Error::InvalidArgument(format!(
            "superposition needs finite increments, got {other:?}"
        ))),
    }
}

/// Kernel of the sum of independent kernels: the product chain with
/// convolved increments.
fn superpose(kernels: &[MapKernel]) -> Result<MapKernel> {
    let mut acc = kernels[0].clone();
    for k in &kernels[1..] {
        let (n, m) = (acc.n_states(), k.n_states());
        let idx = |i: usize, j: usize| i * m + j;
        let mut labels = Vec::with_capacity(n * m);
        let mut initial = vec![0.0; n * m];
        for i in 0..n {
            for j in 0..m {
                labels.push(format!("{}.{}", acc.labels()[i], k.labels()[j]));
                initial[idx(i, j)] = acc.initial()[i] * k.initial()[j];
            }
        }
        let mut transition = vec![vec![0.0; n * m]; n * m];
        let mut increments = Vec::with_capacity(n * m);
        for i in 0..n {
            for j in 0..m {
                let mut row = Vec::with_capacity(n * m);
                for i2 in 0..n {
                    for j2 in 0..m {
                        transition[idx(i, j)][idx(i2, j2)] =
                            acc.transition()[(i, i2)] * k.transition()[(j, j2)];
                        let a = finite_law(acc.increment(i, i2))?;
                        let b = finite_law(k.increment(j, j2))?;
                        row.push(IncrementLaw::DiscretePmf(a.convolve(&b)));
                    }
                }
                increments.push(row);
            }
        }
        acc = MapKernel::new(labels, transition, increments, initial)?;
    }
    Ok(acc)
}

fn arrival_vs_constant(settings: &ExperimentSettings) -> Result<Setup> {
    let service = MapKernel::iid(finite(&[0.0, 1.0, 2.0, 3.0])?)?;
    let bursty = MapKernel::with_destination_increments(
        vec![vec![0.9, 0.1], vec![0.1, 0.9]],
        vec![IncrementLaw::Constant(0.0), IncrementLaw::Constant(2.0)],
        vec![0.5, 0.5],
    )?;
    let convex_checks = (1..=6)
        .map(|t| {
            let a = cumulative_pmf(&bursty, t)?;
            Ok(ConvexCheck {
                label: format!("constant A({t}) <=cx bursty A({t})"),
                holds: convex_order_leq(&Pmf::point(t as f64), &a),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let _ = settings;
    let variants = vec![
        Variant {
            label: "constant".into(),
            arrival: ArrivalModel::Constant(1.0),
            service: service.clone(),
        },
        Variant {
            label: "bursty".into(),
            arrival: ArrivalModel::Kernel(bursty),
            service,
        },
    ];
    Ok((Metric::Backlog, half_levels(30), variants, convex_checks, None))
}

/// Two-state Rayleigh channel with SNR `e^0.5` and `0.7 e^0.5` by source
/// state, 20 kHz bandwidth, stationary law `[0.3, 0.7]`.
pub(crate) fn reference_channel() -> Result<ChannelSpec> {
    let e = 0.5f64.exp();
    ChannelSpec::new(
        20_000.0,
        vec![vec![e, e], vec![0.7 * e, 0.7 * e]],
        vec!["high".into(), "low".into()],
    )
}

fn service_dependence_sweep(settings: &ExperimentSettings) -> Result<Setup> {
    let channel = reference_channel()?;
    let varpi = [0.3, 0.7];
    let mut variants = Vec::new();
    let mut kernels = Vec::new();
    for alpha in [-0.5, 0.0, 0.5] {
        let (p, _) = transition_from_copula(&CopulaSpec::one_param_frechet(alpha)?, &varpi)?;
        let service = capacity_kernel(p, &channel)?;
        kernels.push(service.clone());
        variants.push(Variant {
            label: format!("alpha={alpha}"),
            arrival: ArrivalModel::Constant(10_000.0),
            service,
        });
    }
    let seed = settings.seeds[0];
    let x = capacity_windows(&kernels[1], 4, settings.battery_samples, seed)?;
    let y = capacity_windows(&kernels[2], 4, settings.battery_samples, seed.wrapping_add(1))?;
    let order = supermodular_battery(&x, &y)?;
    let levels = (1..=12).map(|d| d as f64).collect();
    Ok((Metric::Delay, levels, variants, Vec::new(), Some(order)))
}

/// Windows of `len` consecutive increments, each from its own replication
/// started in the kernel's initial law.
fn capacity_windows(kernel: &MapKernel, len: usize, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = PathSampler::new(kernel);
    Ok((0..count as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            sampler.run(len, &mut rng).increments
        })
        .collect())
}

fn subchannel_aggregation() -> Result<Setup> {
    let varpi = [0.5, 0.5];
    let laws = || -> Result<Vec<IncrementLaw>> {
        Ok(vec![finite(&[0.0, 1.0])?, finite(&[2.0, 3.0])?])
    };
    let fixed = two_state(0.0, &varpi, laws()?)?;
    let mut variants = Vec::new();
    for alpha in [-0.9, 0.0, 0.9] {
        let other = two_state(alpha, &varpi, laws()?)?;
        variants.push(Variant {
            label: format!("alpha={alpha}"),
            arrival: ArrivalModel::Constant(2.4),
            service: superpose(&[fixed.clone(), other])?,
        });
    }
    Ok((Metric::Backlog, half_levels(30), variants, Vec::new(), None))
}

fn deterministic_multiplexing() -> Result<Setup> {
    let varpi = [0.5, 0.5];
    let onoff = || vec![IncrementLaw::Constant(0.0), IncrementLaw::Constant(1.0)];
    let iid = two_state(0.0, &varpi, onoff())?;
    let service = MapKernel::constant(1.8)?;
    let mut variants = Vec::new();
    for alpha in [-0.9, 0.0, 0.9] {
        let manipulated = two_state(alpha, &varpi, onoff())?;
        variants.push(Variant {
            label: format!("alpha={alpha}"),
            arrival: ArrivalModel::Kernel(superpose(&[iid.clone(), iid.clone(), manipulated])?),
            service: service.clone(),
        });
    }
    Ok((Metric::Backlog, half_levels(30), variants, Vec::new(), None))
}

const BATCH_SOURCES: usize = 3;
const BATCH_VALUES: [f64; 4] = [0.0, 1.0, 2.0, 3.0];

/// Batch counts uniform on {0, 1, 2, 3} from shared (comonotone) or
/// independent uniforms.
fn batch_vector<R: Rng + ?Sized>(rng: &mut R, comonotone: bool) -> Vec<f64> {
    let shared: f64 = rng.random();
    (0..BATCH_SOURCES)
        .map(|_| {
            let u = if comonotone { shared } else { rng.random() };
            BATCH_VALUES[((u * BATCH_VALUES.len() as f64) as usize).min(BATCH_VALUES.len() - 1)]
        })
        .collect()
}

fn random_multiplexing(settings: &ExperimentSettings) -> Result<Setup> {
    let single = Pmf::uniform(BATCH_VALUES.to_vec())?;
    let mut independent = single.clone();
    for _ in 1..BATCH_SOURCES {
        independent = independent.convolve(&single);
    }
    let comonotone = Pmf::uniform(BATCH_VALUES.iter().map(|v| v * BATCH_SOURCES as f64).collect())?;
    let convex_checks = vec![ConvexCheck {
        label: "independent total <=cx comonotone total".into(),
        holds: convex_order_leq(&independent, &comonotone),
    }];

    let seed = settings.seeds[0];
    let n = settings.battery_samples as u64;
    let x: Vec<Vec<f64>> = (0..n)
        .map(|r| batch_vector(&mut stream_rng(seed, r), false))
        .collect();
    let y: Vec<Vec<f64>> = (0..n)
        .map(|r| batch_vector(&mut stream_rng(seed, n + r), true))
        .collect();
    let order = supermodular_battery(&x, &y)?;

    let service = MapKernel::constant(5.5)?;
    let variants = vec![
        Variant {
            label: "independent".into(),
            arrival: ArrivalModel::Kernel(MapKernel::iid(IncrementLaw::DiscretePmf(independent))?),
            service: service.clone(),
        },
        Variant {
            label: "comonotone".into(),
            arrival: ArrivalModel::Kernel(MapKernel::iid(IncrementLaw::DiscretePmf(comonotone))?),
            service,
        },
    ];
    Ok((Metric::Backlog, half_levels(40), variants, convex_checks, Some(order)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Verdict;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!(matches!(
            "nope".parse::<Experiment>(),
            Err(Error::UnknownExperiment(_))
        ));
    }

    #[test]
    fn superposition_adds_means() {
        let a = MapKernel::iid(finite(&[0.0, 2.0]).unwrap()).unwrap();
        let b = two_state(0.5, &[0.3, 0.7], vec![IncrementLaw::Constant(1.0), IncrementLaw::Constant(3.0)]).unwrap();
        let s = superpose(&[a.clone(), b.clone()]).unwrap();
        let mean = crate::spectral::mean_rate(&s).unwrap();
        let expect = crate::spectral::mean_rate(&a).unwrap() + crate::spectral::mean_rate(&b).unwrap();
        assert!((mean - expect).abs() < 1e-12);
    }

    #[test]
    fn small_random_multiplexing_run() {
        let settings = ExperimentSettings {
            seeds: vec![7],
            replications: 2000,
            horizon: 50,
            battery_samples: 3000,
        };
        let r = ordering_experiment(Experiment::RandomMultiplexing, &settings).unwrap();
        assert!(r.convex_checks.iter().all(|c| c.holds));
        assert_eq!(r.order.as_ref().unwrap().verdict, Verdict::Holds);
        assert!(r.analytic_direction_ok());
    }
}
