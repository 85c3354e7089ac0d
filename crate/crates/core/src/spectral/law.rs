use std::f64::consts::LN_2;

use rand::Rng;

use crate::quadrature::{integrate, integrate_to_infinity};
use crate::{Error, Result};

const PMF_SUM_TOL: f64 = 1e-12;
const QUAD_ABS_TOL: f64 = 1e-12;
const QUAD_REL_TOL: f64 = 1e-10;
// exp(700) is close to the largest finite double
const MAX_LOG_MGF: f64 = 700.0;

/// Finite-support probability mass function with strictly increasing support.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    support: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Pmf {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != probs.len() {
            return Err(Error::InvalidLaw(format!(
                "support has {} points but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if support.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidLaw("support must be finite".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidLaw(
                "support must be strictly increasing".into(),
            ));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidLaw("probabilities must be nonnegative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidLaw(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(Pmf {
            support,
            probs,
            cumulative,
        })
    }

    /// Law built from `(value, mass)` atoms in any order. Values that agree
    /// to 1e-9 are merged, zero masses dropped and the total renormalised.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut merged: std::collections::BTreeMap<i64, (f64, f64)> = Default::default();
        for (x, p) in atoms {
            if !x.is_finite() || !(p >= 0.0) {
                return Err(Error::InvalidLaw(format!("bad atom ({x}, {p})")));
            }
            merged.entry((x * 1e9).round() as i64).or_insert((x, 0.0)).1 += p;
        }
        let (support, probs): (Vec<f64>, Vec<f64>) =
            merged.into_values().filter(|a| a.1 > 0.0).unzip();
        let total: f64 = probs.iter().sum();
        Pmf::new(support, probs.into_iter().map(|p| p / total).collect())
    }

    /// Law of the sum of independent draws from `self` and `other`.
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let atoms = self.support.iter().zip(&self.probs).flat_map(|(x, p)| {
            other.support.iter().zip(&other.probs).map(move |(y, q)| (x + y, p * q))
        });
        Pmf::from_atoms(atoms).expect("convolution of valid laws")
    }

    /// Point mass at `x`.
    pub fn point(x: f64) -> Self {
        Pmf::new(vec![x], vec![1.0]).expect("point mass is a valid pmf")
    }

    /// Uniform law on the given (strictly increasing) points.
    pub fn uniform(points: Vec<f64>) -> Result<Self> {
        let n = points.len();
        Pmf::new(points, vec![1.0 / n as f64; n])
    }

    /// Normal law sampled on the lattice `mean + k * step`, truncated at
    /// forty standard deviations and renormalised.
    ///
    /// For `step` well below the standard deviation the lattice law has the
    /// same cumulant generating function as the continuous normal up to
    /// terms of order `exp(-2 pi^2 variance / step^2)`.
    pub fn discretized_normal(mean: f64, variance: f64, step: f64) -> Result<Self> {
        if !(variance > 0.0) || !(step > 0.0) {
            return Err(Error::InvalidLaw(
                "normal quantization needs positive variance and step".into(),
            ));
        }
        let sd = variance.sqrt();
        let half = (40.0 * sd / step).ceil() as i64;
        let mut support = Vec::with_capacity((2 * half + 1) as usize);
        let mut weights = Vec::with_capacity(support.capacity());
        for k in -half..=half {
            let z = k as f64 * step;
            support.push(mean + z);
            weights.push((-0.5 * z * z / variance).exp());
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Pmf::new(support, weights)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }

    /// `E[(X - t)^+]`
    pub fn stop_loss(&self, t: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * (x - t).max(0.0))
            .sum()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.support.iter().rposition(|s| *s <= x) {
            Some(i) => self.cumulative[i],
            None => 0.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|c| *c <= u);
        self.support[i.min(self.support.len() - 1)]
    }

    fn mgf(&self, theta: f64) -> Result<f64> {
        let m: f64 = self
            .support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * (theta * x).exp())
            .sum();
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::MgfDiverged { theta })
        }
    }

    fn tilted_mean(&self, theta: f64) -> Result<f64> {
        let m: f64 = self
            .support
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * x * (theta * x).exp())
            .sum();
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::MgfDiverged { theta })
        }
    }
}

/// Distribution of the increment produced by one transition of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub enum IncrementLaw {
    Constant(f64),
    DiscretePmf(Pmf),
    /// `W log2(1 + snr * g)` with `g` a unit-mean exponential power gain.
    RayleighCapacity { bandwidth: f64, snr: f64 },
    Negated(Box<IncrementLaw>),
    Shifted(Box<IncrementLaw>, f64),
}

impl IncrementLaw {
    pub fn rayleigh(bandwidth: f64, snr: f64) -> Result<Self> {
        if !(bandwidth > 0.0) || !(snr > 0.0) || !bandwidth.is_finite() || !snr.is_finite() {
            return Err(Error::InvalidLaw(format!(
                "Rayleigh capacity needs bandwidth > 0 and snr > 0 (got {bandwidth}, {snr})"
            )));
        }
        Ok(IncrementLaw::RayleighCapacity { bandwidth, snr })
    }

    pub fn negated(self) -> Self {
        IncrementLaw::Negated(Box::new(self))
    }

    pub fn shifted(self, offset: f64) -> Self {
        IncrementLaw::Shifted(Box::new(self), offset)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            IncrementLaw::Constant(c) if !c.is_finite() => {
                Err(Error::InvalidLaw("constant increment must be finite".into()))
            }
            IncrementLaw::RayleighCapacity { bandwidth, snr } => {
                IncrementLaw::rayleigh(*bandwidth, *snr).map(|_| ())
            }
            IncrementLaw::Negated(inner) => inner.validate(),
            IncrementLaw::Shifted(inner, offset) => {
                if !offset.is_finite() {
                    return Err(Error::InvalidLaw("shift must be finite".into()));
                }
                inner.validate()
            }
            _ => Ok(()),
        }
    }

    /// `E[exp(theta X)]`
    pub fn mgf(&self, theta: f64) -> Result<f64> {
        let m = match self {
            IncrementLaw::Constant(c) => (theta * c).exp(),
            IncrementLaw::DiscretePmf(p) => p.mgf(theta)?,
            IncrementLaw::RayleighCapacity { bandwidth, snr } => {
                rayleigh_moment(*bandwidth, *snr, theta, false)?
            }
            IncrementLaw::Negated(inner) => inner.mgf(-theta)?,
            IncrementLaw::Shifted(inner, offset) => (theta * offset).exp() * inner.mgf(theta)?,
        };
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::MgfDiverged { theta })
        }
    }

    /// `E[X exp(theta X)]`, the derivative of the MGF.
    pub fn tilted_mean(&self, theta: f64) -> Result<f64> {
        let m = match self {
            IncrementLaw::Constant(c) => c * (theta * c).exp(),
            IncrementLaw::DiscretePmf(p) => p.tilted_mean(theta)?,
            IncrementLaw::RayleighCapacity { bandwidth, snr } => {
                rayleigh_moment(*bandwidth, *snr, theta, true)?
            }
            IncrementLaw::Negated(inner) => -inner.tilted_mean(-theta)?,
            IncrementLaw::Shifted(inner, offset) => {
                (theta * offset).exp() * (inner.tilted_mean(theta)? + offset * inner.mgf(theta)?)
            }
        };
        if m.is_finite() {
            Ok(m)
        } else {
            Err(Error::MgfDiverged { theta })
        }
    }

    pub fn mean(&self) -> Result<f64> {
        self.tilted_mean(0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            IncrementLaw::Constant(c) => *c,
            IncrementLaw::DiscretePmf(p) => p.sample(rng),
            IncrementLaw::RayleighCapacity { bandwidth, snr } => {
                let gain = exponential_gain(rng);
                bandwidth * (snr * gain).ln_1p() / LN_2
            }
            IncrementLaw::Negated(inner) => -inner.sample(rng),
            IncrementLaw::Shifted(inner, offset) => inner.sample(rng) + offset,
        }
    }
}

/// Unit-mean exponential variate.
pub(crate) fn exponential_gain<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

/// `∫ e^{-g} (1 + snr g)^s w(g) dg` with `s = theta W / ln 2` and
/// `w = 1` (MGF) or `w = W log2(1 + snr g)` (tilted mean).
///
/// The integrand is rescaled by its peak value so that large `s` does not
/// overflow before the final exponentiation; the interval is split at
/// `1/snr` and around the peak.
fn rayleigh_moment(bandwidth: f64, snr: f64, theta: f64, tilted: bool) -> Result<f64> {
    let s = theta * bandwidth / LN_2;
    if s == 0.0 && !tilted {
        return Ok(1.0);
    }
    let log_f = |g: f64| -g + s * (snr * g).ln_1p();
    let peak = if s * snr > 1.0 { s - 1.0 / snr } else { 0.0 };
    let log_peak = log_f(peak);

    let integrand = |g: f64| {
        let base = (log_f(g) - log_peak).exp();
        if tilted {
            base * bandwidth * (snr * g).ln_1p() / LN_2
        } else {
            base
        }
    };

    let mut breaks = vec![0.0, 1.0 / snr];
    if peak > 0.0 {
        let width = s.max(1.0).sqrt();
        breaks.extend([(peak - 10.0 * width).max(0.0), peak, peak + 10.0 * width]);
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    let diverged = |_| Error::MgfDiverged { theta };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += integrate(integrand, w[0], w[1], QUAD_ABS_TOL, QUAD_REL_TOL)
            .map_err(diverged)?
            .value;
    }
    total += integrate_to_infinity(integrand, *breaks.last().unwrap(), QUAD_ABS_TOL, QUAD_REL_TOL)
        .map_err(diverged)?
        .value;

    if total == 0.0 {
        return Ok(0.0);
    }
    let log_value = log_peak + total.abs().ln();
    if !log_value.is_finite() || log_value > MAX_LOG_MGF {
        return Err(Error::MgfDiverged { theta });
    }
    Ok(total.signum() * log_value.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_validation() {
        assert!(Pmf::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(Pmf::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![1.0, 2.0], vec![-0.1, 1.1]).is_err());
        assert!(Pmf::new(vec![1.0, 2.0], vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn constant_and_pmf_moments() {
        let c = IncrementLaw::Constant(3.0);
        assert!((c.mgf(1.0).unwrap() - 3f64.exp()).abs() < 1e-12);
        assert_eq!(c.mean().unwrap(), 3.0);
        let p = IncrementLaw::DiscretePmf(Pmf::uniform(vec![1.0, 3.0]).unwrap());
        let expect = 0.5 * 1f64.exp() + 0.5 * 3f64.exp();
        assert!((p.mgf(1.0).unwrap() - expect).abs() < 1e-12);
        assert_eq!(p.mean().unwrap(), 2.0);
    }

    #[test]
    fn negation_and_shift() {
        let p = IncrementLaw::DiscretePmf(Pmf::uniform(vec![1.0, 3.0]).unwrap());
        let n = p.clone().negated();
        assert!((n.mgf(0.7).unwrap() - p.mgf(-0.7).unwrap()).abs() < 1e-15);
        assert!((n.tilted_mean(0.7).unwrap() + p.tilted_mean(-0.7).unwrap()).abs() < 1e-15);
        let s = p.clone().shifted(-2.0);
        // uniform{-1, 1}: mgf = cosh(theta)
        assert!((s.mgf(0.4).unwrap() - 0.4f64.cosh()).abs() < 1e-14);
        assert!((s.tilted_mean(0.4).unwrap() - 0.4f64.sinh()).abs() < 1e-14);
    }

    #[test]
    fn discretized_normal_matches_gaussian_cgf() {
        let p = Pmf::discretized_normal(3.0, 2.0, 0.1).unwrap();
        for theta in [-2.0, -0.5, 0.5, 1.0] {
            let k = p.mgf(theta).unwrap().ln();
            let exact = 3.0 * theta + theta * theta;
            assert!((k - exact).abs() < 1e-12, "theta={theta}: {k} vs {exact}");
        }
        assert!((p.mean() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn rayleigh_mgf_at_zero_is_one() {
        let r = IncrementLaw::rayleigh(20.0, 1.5).unwrap();
        assert_eq!(r.mgf(0.0).unwrap(), 1.0);
    }

    #[test]
    fn rayleigh_rejects_bad_parameters() {
        assert!(IncrementLaw::rayleigh(0.0, 1.0).is_err());
        assert!(IncrementLaw::rayleigh(1.0, -1.0).is_err());
    }

    #[test]
    fn rayleigh_overflow_is_reported() {
        let r = IncrementLaw::rayleigh(20_000.0, 1.0).unwrap();
        assert!(matches!(r.mgf(1.0), Err(Error::MgfDiverged { .. })));
    }
}
