//! TOML experiment configuration.
//!
//! ```toml
//! [arrival]
//! constant = 10000.0
//!
//! [service.channel]
//! bandwidth = 20000.0
//! snr = [[1.6487, 1.6487], [1.1541, 1.1541]]
//!
//! [copulas]
//! horizon = 1
//! [[copulas.dimensions]]
//! varpi = [0.3, 0.7]
//! temporal = [{ family = "frechet1", alpha = 0.5 }]
//!
//! [simulation]
//! seed = 7
//! replications = 100000
//! horizon = 1000
//! ```

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::constant_arrival;
use crate::channel::{capacity_kernel, ChannelSpec};
use crate::copula::{dependence_control, transition_from_copula, ControlPlan, CopulaSpec};
use crate::sim::{ArrivalModel, Metric};
use crate::spectral::{IncrementLaw, MapKernel, Pmf};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival: Option<ArrivalConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service: Option<ServiceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub copulas: Option<CopulaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
}

/// Exactly one of `constant` and `kernel`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
}

/// Exactly one of `kernel` and `channel`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channel: Option<ChannelConfig>,
}

/// Markov additive kernel. Increments are given as a full matrix, per
/// destination state, or per source state. `initial` defaults to the
/// stationary law.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub transition: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increments: Option<Vec<Vec<LawSpec>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub destination: Option<Vec<LawSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Vec<LawSpec>>,
}

/// Increment law: a bare number is a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LawSpec {
    Constant(f64),
    Tagged(TaggedLaw),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum TaggedLaw {
    Constant { value: f64 },
    Pmf { support: Vec<f64>, probs: Vec<f64> },
    Uniform { points: Vec<f64> },
    Rayleigh { bandwidth: f64, snr: SnrValue },
    /// Normal law on the lattice `mean + k step`.
    Normal { mean: f64, variance: f64, step: f64 },
    Negated { law: Box<LawSpec> },
    Shifted { law: Box<LawSpec>, offset: f64 },
}

/// Linear SNR or `"db:<value>"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SnrValue {
    Linear(f64),
    Text(String),
}

impl SnrValue {
    pub fn linear(&self) -> Result<f64> {
        match self {
            SnrValue::Linear(x) => Ok(*x),
            SnrValue::Text(s) => {
                let db = s
                    .strip_prefix("db:")
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::Config(format!("bad SNR `{s}`, expected a number or db:<x>")))?;
                Ok(10f64.powf(db / 10.0))
            }
        }
    }
}

impl LawSpec {
    pub fn to_law(&self) -> Result<IncrementLaw> {
        let law = match self {
            LawSpec::Constant(c) => IncrementLaw::Constant(*c),
            LawSpec::Tagged(t) => match t {
                TaggedLaw::Constant { value } => IncrementLaw::Constant(*value),
                TaggedLaw::Pmf { support, probs } => {
                    IncrementLaw::DiscretePmf(Pmf::new(support.clone(), probs.clone())?)
                }
                TaggedLaw::Uniform { points } => IncrementLaw::DiscretePmf(Pmf::uniform(points.clone())?),
                TaggedLaw::Rayleigh { bandwidth, snr } => IncrementLaw::rayleigh(*bandwidth, snr.linear()?)?,
                TaggedLaw::Normal { mean, variance, step } => {
                    IncrementLaw::DiscretePmf(Pmf::discretized_normal(*mean, *variance, *step)?)
                }
                TaggedLaw::Negated { law } => law.to_law()?.negated(),
                TaggedLaw::Shifted { law, offset } => law.to_law()?.shifted(*offset),
            },
        };
        law.validate()?;
        Ok(law)
    }
}

impl KernelConfig {
    pub fn to_kernel(&self) -> Result<MapKernel> {
        let n = self.transition.len();
        let laws = |v: &[LawSpec]| v.iter().map(LawSpec::to_law).collect::<Result<Vec<_>>>();
        let increments: Vec<Vec<IncrementLaw>> =
            match (&self.increments, &self.destination, &self.source) {
                (Some(m), None, None) => m.iter().map(|r| laws(r)).collect::<Result<_>>()?,
                (None, Some(d), None) => {
                    let row = laws(d)?;
                    vec![row; n]
                }
                (None, None, Some(s)) => laws(s)?
                    .into_iter()
                    .map(|l| vec![l; n])
                    .collect(),
                _ => {
                    return Err(Error::Config(
                        "kernel needs exactly one of increments, destination, source".into(),
                    ))
                }
            };
        let labels = self
            .labels
            .clone()
            .unwrap_or_else(|| (0..n).map(|i| format!("s{i}")).collect());
        let uniform = vec![1.0 / n.max(1) as f64; n];
        let k = MapKernel::new(labels, self.transition.clone(), increments, uniform)?;
        let initial = self.initial.clone().unwrap_or_else(|| k.stationary().to_vec());
        k.with_initial(initial)
    }
}

/// Rayleigh channel whose power state follows `transition`, or, when that
/// is absent, the chain extracted from the first temporal copula of the
/// first `[copulas]` dimension.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub bandwidth: f64,
    /// `snr[i][j]` for slots moving the power state from `i` to `j`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr: Option<Vec<Vec<SnrValue>>>,
    /// SNR of the power state entered in a slot.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_snr: Option<Vec<SnrValue>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
}

impl ChannelConfig {
    pub fn to_channel(&self) -> Result<ChannelSpec> {
        let snr: Vec<Vec<f64>> = match (&self.snr, &self.state_snr) {
            (Some(m), None) => m
                .iter()
                .map(|r| r.iter().map(SnrValue::linear).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?,
            (None, Some(s)) => {
                let row = s.iter().map(SnrValue::linear).collect::<Result<Vec<_>>>()?;
                vec![row; s.len()]
            }
            _ => {
                return Err(Error::Config(
                    "channel needs exactly one of snr, state_snr".into(),
                ))
            }
        };
        let n = snr.len();
        let labels = self
            .labels
            .clone()
            .unwrap_or_else(|| (0..n).map(|i| format!("p{i}")).collect());
        ChannelSpec::new(self.bandwidth, snr, labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaConfig {
    pub horizon: usize,
    pub dimensions: Vec<DimensionConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionConfig {
    pub varpi: Vec<f64>,
    /// One copula used at every step, or one per step.
    pub temporal: Vec<CopulaDescriptor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum CopulaDescriptor {
    M,
    W,
    P,
    Frechet { w: f64, p: f64, m: f64 },
    Frechet1 { alpha: f64 },
    Gaussian { rho: f64 },
}

impl CopulaDescriptor {
    pub fn to_copula(&self) -> Result<CopulaSpec> {
        match *self {
            CopulaDescriptor::M => Ok(CopulaSpec::M),
            CopulaDescriptor::W => Ok(CopulaSpec::W),
            CopulaDescriptor::P => Ok(CopulaSpec::P),
            CopulaDescriptor::Frechet { w, p, m } => CopulaSpec::frechet(w, p, m),
            CopulaDescriptor::Frechet1 { alpha } => CopulaSpec::one_param_frechet(alpha),
            CopulaDescriptor::Gaussian { rho } => CopulaSpec::gaussian(rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    /// `delay` (default) or `backlog`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    /// `queue` (default) or `capacity` for plan-driven capacity paths.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    /// Independent capacity paths in `capacity` runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
}

impl SimulationConfig {
    pub fn metric(&self) -> Result<Metric> {
        parse_metric(self.metric.as_deref().unwrap_or("delay"))
    }
}

pub fn parse_metric(s: &str) -> Result<Metric> {
    match s {
        "delay" => Ok(Metric::Delay),
        "backlog" => Ok(Metric::Backlog),
        other => Err(Error::Config(format!("unknown metric `{other}`"))),
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery_samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        ExperimentConfig::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn arrival_model(&self) -> Result<ArrivalModel> {
        let a = self
            .arrival
            .as_ref()
            .ok_or_else(|| Error::Config("missing [arrival] section".into()))?;
        match (a.constant, &a.kernel) {
            (Some(l), None) => {
                if !l.is_finite() || l < 0.0 {
                    return Err(Error::Config(format!("arrival rate must be >= 0, got {l}")));
                }
                Ok(ArrivalModel::Constant(l))
            }
            (None, Some(k)) => Ok(ArrivalModel::Kernel(k.to_kernel()?)),
            _ => Err(Error::Config(
                "[arrival] needs exactly one of constant, kernel".into(),
            )),
        }
    }

    pub fn arrival_kernel(&self) -> Result<MapKernel> {
        match self.arrival_model()? {
            ArrivalModel::Constant(l) => constant_arrival(l),
            ArrivalModel::Kernel(k) => Ok(k),
        }
    }

    fn service_section(&self) -> Result<&ServiceConfig> {
        self.service
            .as_ref()
            .ok_or_else(|| Error::Config("missing [service] section".into()))
    }

    pub fn channel(&self) -> Result<Option<ChannelSpec>> {
        match &self.service_section()?.channel {
            Some(c) => Ok(Some(c.to_channel()?)),
            None => Ok(None),
        }
    }

    /// Time-homogeneous service kernel.
    pub fn service_kernel(&self) -> Result<MapKernel> {
        let s = self.service_section()?;
        match (&s.kernel, &s.channel) {
            (Some(k), None) => k.to_kernel(),
            (None, Some(c)) => {
                let channel = c.to_channel()?;
                let transition = match &c.transition {
                    Some(p) => p.clone(),
                    None => self.homogeneous_transition()?,
                };
                capacity_kernel(transition, &channel)
            }
            _ => Err(Error::Config(
                "[service] needs exactly one of kernel, channel".into(),
            )),
        }
    }

    /// Transition matrix from the first copula of the first dimension over
    /// that dimension's initial law.
    pub fn homogeneous_transition(&self) -> Result<Vec<Vec<f64>>> {
        let c = self.copula_section()?;
        let dim = c
            .dimensions
            .first()
            .ok_or_else(|| Error::Config("[copulas] has no dimensions".into()))?;
        let first = dim
            .temporal
            .first()
            .ok_or_else(|| Error::Config("dimension has no temporal copulas".into()))?;
        Ok(transition_from_copula(&first.to_copula()?, &dim.varpi)?.0)
    }

    fn copula_section(&self) -> Result<&CopulaConfig> {
        self.copulas
            .as_ref()
            .ok_or_else(|| Error::Config("missing [copulas] section".into()))
    }

    pub fn control_plan(&self) -> Result<ControlPlan> {
        let c = self.copula_section()?;
        let temporal = c
            .dimensions
            .iter()
            .map(|d| d.temporal.iter().map(CopulaDescriptor::to_copula).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let varpi: Vec<Vec<f64>> = c.dimensions.iter().map(|d| d.varpi.clone()).collect();
        dependence_control(&temporal, &varpi, c.horizon)
    }

    pub fn simulation(&self) -> SimulationConfig {
        self.simulation.clone().unwrap_or_default()
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.output.as_ref().and_then(|o| o.dir.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = r#"
[arrival]
constant = 10000.0

[service.channel]
bandwidth = 20000.0
snr = [[1.6487212707001282, 1.6487212707001282], [1.1541048894900897, 1.1541048894900897]]

[copulas]
horizon = 1
[[copulas.dimensions]]
varpi = [0.3, 0.7]
temporal = [{ family = "frechet1", alpha = 0.5 }]

[simulation]
seed = 3
"#;

    #[test]
    fn parses_channel_config() {
        let c = ExperimentConfig::from_toml_str(FIG).unwrap();
        let k = c.service_kernel().unwrap();
        assert_eq!(k.n_states(), 2);
        assert!((k.transition()[(0, 0)] - 0.4125).abs() < 1e-12);
        assert!((k.initial()[0] - 0.3).abs() < 1e-12);
        assert_eq!(c.arrival_model().unwrap(), ArrivalModel::Constant(10000.0));
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_toml_str(FIG).unwrap();
        let again = ExperimentConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn laws_and_snr() {
        let text = r#"
[service.kernel]
transition = [[1.0]]
increments = [[{ type = "pmf", support = [0.0, 2.0], probs = [0.5, 0.5] }]]

[arrival.kernel]
transition = [[0.5, 0.5], [0.5, 0.5]]
destination = [0.0, { type = "shifted", law = { type = "uniform", points = [0.0, 1.0] }, offset = 1.0 }]
"#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(c.service_kernel().unwrap().n_states(), 1);
        assert_eq!(c.arrival_kernel().unwrap().n_states(), 2);
        assert!((SnrValue::Text("db:20".into()).linear().unwrap() - 100.0).abs() < 1e-9);
        assert!(SnrValue::Text("20".into()).linear().is_err());
    }

    #[test]
    fn rejects_ambiguous_sections() {
        let text = "[arrival]\nconstant = 1.0\n[arrival.kernel]\ntransition = [[1.0]]\ndestination = [1.0]\n";
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        assert!(matches!(c.arrival_model(), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml_str("[arrival]\nconstnat = 1").is_err());
    }
}
