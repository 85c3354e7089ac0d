//! Analytic tail bounds for queues with Markov additive arrivals and service.
//!
//! Every bound is built from the Perron right eigenvectors `h^A(theta)` of
//! the arrival kernel and `h^{-S}(theta)` of the negated service kernel,
//! evaluated at the stability root unless stated otherwise.

use std::fmt;

use crate::spectral::{
    cgf_derivative_at, find_increasing_root, mean_rate, negate, perron, stability_root,
    IncrementLaw, MapKernel, SpectralSolution, StabilityRoot,
};
use crate::{Error, Result};

const DCC_GRID: usize = 200;
const DCC_GRID_SPAN: f64 = 1e-4;
const GOLDEN_ITER: usize = 100;
const FIXED_POINT_CAP: usize = 10_000;
const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_DAMPING: f64 = 0.5;

/// Which initial states a bound is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conditioning {
    /// Arrival state and service state.
    Pair { arrival: usize, service: usize },
    /// Averaged over the kernels' state distributions.
    Averaged,
}

impl fmt::Display for Conditioning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Conditioning::Pair { arrival, service } => write!(f, "a{arrival}_s{service}"),
            Conditioning::Averaged => write!(f, "averaged"),
        }
    }
}

/// Lower and upper tail bound at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub level: f64,
    /// Bounds clamped to `[0, 1]`.
    pub lower: f64,
    pub upper: f64,
    /// Bounds as evaluated, before clamping.
    pub lower_raw: f64,
    pub upper_raw: f64,
    pub theta_star: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    pub conditioning: Conditioning,
}

impl BoundReport {
    pub fn lower_clamped(&self) -> bool {
        self.lower != self.lower_raw
    }

    pub fn upper_clamped(&self) -> bool {
        self.upper != self.upper_raw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `y < y_gamma`: bounds the probability that the violation happens by time `y * level`.
    ShortHorizon,
    /// `y >= y_gamma`: bounds the probability of a violation after that time.
    LongHorizonRemainder,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::ShortHorizon => "short-horizon",
            Branch::LongHorizonRemainder => "long-horizon-remainder",
        })
    }
}

/// Finite-horizon bound at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonBoundReport {
    pub level: f64,
    pub y: f64,
    /// Stationary point of the exponent map.
    pub theta: f64,
    /// Exponent coefficient at `theta`.
    pub theta_y: f64,
    pub y_gamma: f64,
    pub branch: Branch,
    pub bound: f64,
    pub bound_raw: f64,
}

/// Upper bound on the delay-constrained capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct DccReport {
    pub d: f64,
    pub epsilon: f64,
    /// Minimum of the bound over `theta` in `(0, theta_star]`.
    pub bound: f64,
    /// Minimising `theta`.
    pub theta: f64,
    /// `kappa_A(theta_star) / theta_star`, the limit as `d -> inf, eps -> 0`.
    pub asymptotic_cap: f64,
}

/// Interval of constant rates compatible with a delay target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateInterval {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub theta_lo: f64,
    pub theta_hi: f64,
}

/// `(delay_rate, backlog_rate) = (kappa_A(theta*), theta*)`.
pub fn decay_rates(arrival: &MapKernel, service: &MapKernel) -> Result<(f64, f64)> {
    let r = stability_root(arrival, service)?;
    Ok((r.delay_rate(), r.backlog_rate()))
}

fn stats(h: &[f64]) -> (f64, f64) {
    let min = h.iter().copied().fold(f64::INFINITY, f64::min);
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

fn weighted(h: &[f64], w: &[f64]) -> f64 {
    h.iter().zip(w).map(|(a, b)| a * b).sum()
}

fn delay_constants(a: &SpectralSolution, s: &SpectralSolution) -> (f64, f64) {
    let (a_min, a_max) = stats(&a.h);
    let (s_min, s_max) = stats(&s.h);
    let plus = (a_max / a_min) / s_min;
    let minus = (-a.kappa).exp() * (a_min / a_max).powi(2) / s_max;
    (plus, minus)
}

fn backlog_constants(a: &SpectralSolution, s: &SpectralSolution) -> (f64, f64) {
    let (a_min, a_max) = stats(&a.h);
    let (s_min, s_max) = stats(&s.h);
    let plus = 1.0 / (a_min * s_min);
    let minus = (-a.kappa).exp() * a_min / (a_max * a_max) / s_max;
    (plus, minus)
}

fn report(
    level: f64,
    factor: f64,
    decay: f64,
    root: &StabilityRoot,
    (plus, minus): (f64, f64),
    conditioning: Conditioning,
) -> BoundReport {
    let shared = factor * (-decay).exp();
    let upper_raw = plus * shared;
    let lower_raw = minus * shared;
    BoundReport {
        level,
        lower: lower_raw.clamp(0.0, 1.0),
        upper: upper_raw.clamp(0.0, 1.0),
        lower_raw,
        upper_raw,
        theta_star: root.theta_star,
        h_plus: plus,
        h_minus: minus,
        conditioning,
    }
}

/// Double-sided bounds on `P(D > d)`.
///
/// For each level the output holds one row per (arrival state, service
/// state) pair followed by the row averaged over the arrival distribution
/// at time `d` and the initial service distribution.
pub fn delay_bounds(
    arrival: &MapKernel,
    service: &MapKernel,
    levels: &[f64],
) -> Result<Vec<BoundReport>> {
    let root = stability_root(arrival, service)?;
    let consts = delay_constants(&root.arrival, &root.service);
    let h_s = &root.service.h;
    let averaged = weighted(h_s, service.initial());
    let mut out = Vec::new();
    for &d in levels {
        let decay = d * root.kappa_arrival;
        for ia in 0..arrival.n_states() {
            for (is, h) in h_s.iter().enumerate() {
                let c = Conditioning::Pair {
                    arrival: ia,
                    service: is,
                };
                out.push(report(d, *h, decay, &root, consts, c));
            }
        }
        // the delay factor depends on the service state only, so the arrival
        // distribution at time d integrates out
        out.push(report(d, averaged, decay, &root, consts, Conditioning::Averaged));
    }
    Ok(out)
}

/// Double-sided bounds on `P(B > b)`.
pub fn backlog_bounds(
    arrival: &MapKernel,
    service: &MapKernel,
    levels: &[f64],
) -> Result<Vec<BoundReport>> {
    let root = stability_root(arrival, service)?;
    let consts = backlog_constants(&root.arrival, &root.service);
    let h_a = &root.arrival.h;
    let h_s = &root.service.h;
    let averaged = weighted(h_a, arrival.initial()) * weighted(h_s, service.initial());
    let mut out = Vec::new();
    for &b in levels {
        let decay = b * root.theta_star;
        for (ia, ha) in h_a.iter().enumerate() {
            for (is, hs) in h_s.iter().enumerate() {
                let c = Conditioning::Pair {
                    arrival: ia,
                    service: is,
                };
                out.push(report(b, ha * hs, decay, &root, consts, c));
            }
        }
        out.push(report(b, averaged, decay, &root, consts, Conditioning::Averaged));
    }
    Ok(out)
}

/// Keep only the rows averaged over the state distributions.
pub fn averaged(reports: &[BoundReport]) -> Vec<BoundReport> {
    reports
        .iter()
        .filter(|r| r.conditioning == Conditioning::Averaged)
        .cloned()
        .collect()
}

struct Spectra {
    arrival: SpectralSolution,
    service: SpectralSolution,
    d_arrival: f64,
    d_service: f64,
}

fn spectra(arrival: &MapKernel, neg_service: &MapKernel, theta: f64) -> Result<Spectra> {
    let a = perron(arrival, theta)?;
    let s = perron(neg_service, theta)?;
    Ok(Spectra {
        d_arrival: cgf_derivative_at(arrival, &a)?,
        d_service: cgf_derivative_at(neg_service, &s)?,
        arrival: a,
        service: s,
    })
}

fn derivative_root(f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    find_increasing_root(f).map_err(|e| match e {
        Error::NoRootInDomain => Error::NoDerivativeRoot,
        other => other,
    })
}

/// Finite-horizon delay bound with horizon multiplier `y > 1`.
///
/// `theta` solves `y kappa'_{-S}(theta) + (y - 1) kappa'_A(theta) = 0` and
/// the exponent is `theta_y = -y kappa_{-S}(theta) - (y - 1) kappa_A(theta)`.
pub fn horizon_delay_bound(
    arrival: &MapKernel,
    service: &MapKernel,
    y: f64,
    d: f64,
) -> Result<HorizonBoundReport> {
    if !(y > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delay horizon multiplier must exceed 1, got {y}"
        )));
    }
    let root = stability_root(arrival, service)?;
    let neg = negate(service);
    let theta = derivative_root(|t| {
        let s = spectra(arrival, &neg, t)?;
        Ok(y * s.d_service + (y - 1.0) * s.d_arrival)
    })?;
    let s = spectra(arrival, &neg, theta)?;
    let theta_y = -y * s.service.kappa - (y - 1.0) * s.arrival.kappa;

    let g = spectra(arrival, &neg, root.theta_star)?;
    let y_gamma = g.d_arrival / (g.d_arrival + g.d_service);

    let (plus, _) = delay_constants(&s.arrival, &s.service);
    let bound_raw = plus * weighted(&s.service.h, service.initial()) * (-d * theta_y).exp();
    Ok(HorizonBoundReport {
        level: d,
        y,
        theta,
        theta_y,
        y_gamma,
        branch: branch(y, y_gamma),
        bound: bound_raw.clamp(0.0, 1.0),
        bound_raw,
    })
}

/// Finite-horizon backlog bound with horizon multiplier `y > 0`.
///
/// `theta` solves `y (kappa'_A + kappa'_{-S})(theta) = 1` and the exponent
/// is `theta_y = theta - y (kappa_A + kappa_{-S})(theta)`.
pub fn horizon_backlog_bound(
    arrival: &MapKernel,
    service: &MapKernel,
    y: f64,
    b: f64,
) -> Result<HorizonBoundReport> {
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "backlog horizon multiplier must be positive, got {y}"
        )));
    }
    let root = stability_root(arrival, service)?;
    let neg = negate(service);
    let theta = derivative_root(|t| {
        let s = spectra(arrival, &neg, t)?;
        Ok(y * (s.d_arrival + s.d_service) - 1.0)
    })?;
    let s = spectra(arrival, &neg, theta)?;
    let theta_y = theta - y * (s.arrival.kappa + s.service.kappa);

    let g = spectra(arrival, &neg, root.theta_star)?;
    let y_gamma = 1.0 / (g.d_arrival + g.d_service);

    let (plus, _) = backlog_constants(&s.arrival, &s.service);
    let factor = weighted(&s.arrival.h, arrival.initial()) * weighted(&s.service.h, service.initial());
    let bound_raw = plus * factor * (-b * theta_y).exp();
    Ok(HorizonBoundReport {
        level: b,
        y,
        theta,
        theta_y,
        y_gamma,
        branch: branch(y, y_gamma),
        bound: bound_raw.clamp(0.0, 1.0),
        bound_raw,
    })
}

fn branch(y: f64, y_gamma: f64) -> Branch {
    if y < y_gamma {
        Branch::ShortHorizon
    } else {
        Branch::LongHorizonRemainder
    }
}

/// Kernel of `S(t) - lambda t`.
fn drift_kernel(service: &MapKernel, lambda: f64) -> MapKernel {
    service.map_increments(|law| law.clone().shifted(-lambda))
}

/// Negative root `-theta` of the cgf of `S(t) - lambda t` together with
/// the right eigenvector there. Returns `theta > 0`.
fn negative_root(service: &MapKernel, lambda: f64) -> Result<(f64, SpectralSolution)> {
    let neg = negate(&drift_kernel(service, lambda));
    let theta = find_increasing_root(|t| Ok(perron(&neg, t)?.kappa))?;
    let sol = perron(&neg, theta)?;
    Ok((theta, sol))
}

fn check_constant_rate(lambda: f64, service: &MapKernel) -> Result<f64> {
    let service_rate = mean_rate(service)?;
    if !(lambda < service_rate) {
        return Err(Error::UnstableQueue {
            arrival_rate: lambda,
            service_rate,
        });
    }
    Ok(service_rate)
}

/// Delay bounds for the constant arrival `A(t) = lambda t`, one row per
/// service state plus the row averaged over the initial service distribution.
pub fn constant_arrival_bounds(
    lambda: f64,
    service: &MapKernel,
    levels: &[f64],
) -> Result<Vec<BoundReport>> {
    check_constant_rate(lambda, service)?;
    let (theta, sol) = negative_root(service, lambda)?;
    let (h_min, h_max) = stats(&sol.h);
    let plus = 1.0 / h_min;
    let minus = (-theta * lambda).exp() / h_max;
    let root = StabilityRoot {
        theta_star: theta,
        kappa_arrival: theta * lambda,
        residual: sol.kappa,
        arrival: perron(&MapKernel::constant(lambda)?, theta)?,
        service: sol.clone(),
    };
    let averaged = weighted(&sol.h, service.initial());
    let mut out = Vec::new();
    for &d in levels {
        let decay = theta * lambda * d;
        for (is, h) in sol.h.iter().enumerate() {
            let c = Conditioning::Pair {
                arrival: 0,
                service: is,
            };
            out.push(report(d, *h, decay, &root, (plus, minus), c));
        }
        out.push(report(d, averaged, decay, &root, (plus, minus), Conditioning::Averaged));
    }
    Ok(out)
}

/// Backlog bounds for constant arrivals through `P(B > b) = P(D > b / lambda)`.
pub fn constant_arrival_backlog_bounds(
    lambda: f64,
    service: &MapKernel,
    levels: &[f64],
) -> Result<Vec<BoundReport>> {
    let scaled: Vec<f64> = levels.iter().map(|b| b / lambda).collect();
    let mut out = constant_arrival_bounds(lambda, service, &scaled)?;
    let per_level = out.len() / levels.len().max(1);
    for (k, r) in out.iter_mut().enumerate() {
        r.level = levels[k / per_level];
    }
    Ok(out)
}

/// Upper bound on the delay-constrained capacity `C(d, eps)`.
///
/// The bound `sum_i w_i (-1/(theta d)) log(eps / (H_+ h^{-S}_i(theta)))`
/// is minimised over a log-spaced grid of `theta` in `(0, theta*]`, then
/// refined by golden-section search around the grid minimum.
pub fn dcc_upper(
    arrival: &MapKernel,
    service: &MapKernel,
    d: f64,
    epsilon: f64,
) -> Result<DccReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(d > 0.0) {
        return Err(Error::InvalidArgument(format!("delay must be positive, got {d}")));
    }
    let root = stability_root(arrival, service)?;
    let neg = negate(service);
    let weights = service.initial();
    let objective = |theta: f64| -> Result<f64> {
        let a = perron(arrival, theta)?;
        let s = perron(&neg, theta)?;
        let (plus, _) = delay_constants(&a, &s);
        Ok(s.h
            .iter()
            .zip(weights)
            .map(|(h, w)| w * (epsilon / (plus * h)).ln())
            .sum::<f64>()
            * (-1.0 / (theta * d)))
    };

    let hi = root.theta_star;
    let lo = hi * DCC_GRID_SPAN;
    let grid: Vec<f64> = (0..DCC_GRID)
        .map(|k| lo * (hi / lo).powf(k as f64 / (DCC_GRID - 1) as f64))
        .collect();
    let mut best = (f64::INFINITY, hi);
    let mut best_k = DCC_GRID - 1;
    for (k, &t) in grid.iter().enumerate() {
        let v = objective(t)?;
        if v < best.0 {
            best = (v, t);
            best_k = k;
        }
    }
    let a = grid[best_k.saturating_sub(1)];
    let b = grid[(best_k + 1).min(DCC_GRID - 1)];
    let (v, t) = golden_section(&objective, a, b)?;
    if v < best.0 {
        best = (v, t);
    }
    Ok(DccReport {
        d,
        epsilon,
        bound: best.0.max(0.0),
        theta: best.1,
        asymptotic_cap: root.kappa_arrival / root.theta_star,
    })
}

fn golden_section(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..GOLDEN_ITER {
        if (b - a).abs() <= 1e-12 * b.abs() {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (fc, c) } else { (fd, d) })
}

/// Interval `[lambda_lo, lambda_hi]` of constant rates whose delay bounds
/// straddle the target `P(D > d) = eps`.
///
/// Each endpoint solves its displayed equation at equality by damped
/// fixed-point iteration over `lambda`, since the decay parameter itself
/// depends on `lambda`.
pub fn constant_dcc_interval(
    service: &MapKernel,
    d: f64,
    epsilon: f64,
    varpi: &[f64],
) -> Result<RateInterval> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if varpi.len() != service.n_states() {
        return Err(Error::LengthMismatch {
            left: varpi.len(),
            right: service.n_states(),
        });
    }
    let mu = mean_rate(service)?;
    let ceiling = mu * (1.0 - 1e-6);
    let endpoint = |upper: bool| -> Result<(f64, f64)> {
        let update = |lambda: f64| -> Result<(f64, f64)> {
            let (theta, sol) = negative_root(service, lambda)?;
            let (h_min, h_max) = stats(&sol.h);
            let avg = weighted(&sol.h, varpi);
            let inner = if upper {
                epsilon * h_min / avg
            } else {
                (theta * lambda).exp() * epsilon * h_max / avg
            };
            Ok(((-1.0 / (theta * d)) * inner.ln(), theta))
        };
        let mut lambda = 0.5 * mu;
        for _ in 0..FIXED_POINT_CAP {
            let (target, theta) = update(lambda)?;
            let next = (FIXED_POINT_DAMPING * lambda + (1.0 - FIXED_POINT_DAMPING) * target)
                .clamp(f64::MIN_POSITIVE, ceiling);
            if (next - lambda).abs() <= FIXED_POINT_TOL {
                return Ok((next, theta));
            }
            lambda = next;
        }
        Err(Error::NoFixedPoint {
            iterations: FIXED_POINT_CAP,
        })
    };
    let (lambda_hi, theta_hi) = endpoint(true)?;
    let (lambda_lo, theta_lo) = endpoint(false)?;
    Ok(RateInterval {
        lambda_lo,
        lambda_hi,
        theta_lo,
        theta_hi,
    })
}

/// Constant arrival kernel of rate `lambda`.
pub fn constant_arrival(lambda: f64) -> Result<MapKernel> {
    MapKernel::iid(IncrementLaw::Constant(lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Pmf;

    fn toy() -> (MapKernel, MapKernel) {
        let service =
            MapKernel::iid(IncrementLaw::DiscretePmf(Pmf::discretized_normal(3.0, 2.0, 0.1).unwrap()))
                .unwrap();
        (MapKernel::constant(1.0).unwrap(), service)
    }

    #[test]
    fn toy_delay_bounds() {
        let (a, s) = toy();
        let r = delay_bounds(&a, &s, &[0.0, 1.0, 3.0]).unwrap();
        let avg = averaged(&r);
        for row in &avg {
            let d = row.level;
            assert!((row.upper_raw - (-2.0 * d).exp()).abs() < 1e-8);
            assert!((row.lower_raw - (-2.0 - 2.0 * d).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn toy_backlog_bounds() {
        let (a, s) = toy();
        let r = averaged(&backlog_bounds(&a, &s, &[0.5, 2.0]).unwrap());
        for row in &r {
            let b = row.level;
            assert!((row.upper_raw - (-2.0 * b).exp()).abs() < 1e-8);
            assert!((row.lower_raw - (-2.0f64).exp() * (-2.0 * b).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn toy_horizon_bounds() {
        let (a, s) = toy();
        let r = horizon_delay_bound(&a, &s, 2.0, 1.0).unwrap();
        assert!((r.theta - 1.25).abs() < 1e-9);
        assert!((r.theta_y - 3.125).abs() < 1e-9);
        assert!((r.y_gamma - 0.5).abs() < 1e-9);
        let r = horizon_backlog_bound(&a, &s, 1.0, 1.0).unwrap();
        assert!((r.theta - 1.5).abs() < 1e-9);
        assert!((r.theta_y - 2.25).abs() < 1e-9);
    }

    #[test]
    fn toy_dcc() {
        let (a, s) = toy();
        let r = dcc_upper(&a, &s, 10.0, 1e-3).unwrap();
        let at_root = -(1e-3f64).ln() / 20.0;
        assert!(r.bound <= at_root + 1e-9);
        assert!((r.asymptotic_cap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn toy_constant_interval() {
        let (_, s) = toy();
        let r = constant_dcc_interval(&s, 20.0, 1e-2, &[1.0]).unwrap();
        // theta(lambda) = 3 - lambda for the toy service
        let hi = r.lambda_hi;
        assert!((hi * (3.0 - hi) - 100f64.ln() / 20.0).abs() < 1e-8);
        let lo = r.lambda_lo;
        assert!((lo * (1.0 + 1.0 / 20.0) - 100f64.ln() / ((3.0 - lo) * 20.0)).abs() < 1e-8);
        assert!(lo <= hi);
    }

    #[test]
    fn constant_arrival_matches_general_bounds() {
        let (a, s) = toy();
        let general = averaged(&delay_bounds(&a, &s, &[1.0, 2.0]).unwrap());
        let special = averaged(&constant_arrival_bounds(1.0, &s, &[1.0, 2.0]).unwrap());
        for (g, c) in general.iter().zip(&special) {
            assert!((g.upper_raw - c.upper_raw).abs() < 1e-9);
            assert!((g.lower_raw - c.lower_raw).abs() < 1e-9);
        }
    }
}
