use super::{mean_rate, negate, perron, MapKernel, SpectralSolution};
use crate::{Error, Result};

const START: f64 = 1e-3;
const MAX_DOUBLINGS: usize = 100;
const MAX_HALVINGS: usize = 80;
const F_TOL: f64 = 1e-10;
const MAX_BRENT_ITER: usize = 200;

/// Positive root of the stability equation `kappa_A(theta) + kappa_{-S}(theta) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRoot {
    pub theta_star: f64,
    /// `kappa_A(theta_star)`, the delay decay rate.
    pub kappa_arrival: f64,
    /// `kappa_A + kappa_{-S}` at `theta_star`.
    pub residual: f64,
    /// Spectrum of the arrival kernel at `theta_star`.
    pub arrival: SpectralSolution,
    /// Spectrum of the negated service kernel at `theta_star`.
    pub service: SpectralSolution,
}

impl StabilityRoot {
    pub fn delay_rate(&self) -> f64 {
        self.kappa_arrival
    }

    pub fn backlog_rate(&self) -> f64 {
        self.theta_star
    }
}

pub fn stability_root(arrival: &MapKernel, service: &MapKernel) -> Result<StabilityRoot> {
    let arrival_rate = mean_rate(arrival)?;
    let service_rate = mean_rate(service)?;
    if arrival_rate >= service_rate {
        return Err(Error::UnstableQueue {
            arrival_rate,
            service_rate,
        });
    }
    let neg = negate(service);
    let f = |theta: f64| -> Result<f64> {
        Ok(perron(arrival, theta)?.kappa + perron(&neg, theta)?.kappa)
    };
    let theta_star = find_increasing_root(f)?;
    let a = perron(arrival, theta_star)?;
    let s = perron(&neg, theta_star)?;
    Ok(StabilityRoot {
        theta_star,
        kappa_arrival: a.kappa,
        residual: a.kappa + s.kappa,
        arrival: a,
        service: s,
    })
}

/// Positive zero of a convex function with `f(0) = 0` and `f'(0) < 0`.
///
/// The bracket starts at `1e-3`, shrinks by halving if the function is
/// already nonnegative there, then doubles until the sign changes. An MGF
/// divergence or non-finite value before a sign change means there is no
/// root in the finiteness domain.
pub fn find_increasing_root<F>(f: F) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let eval = |x: f64| -> Result<Option<f64>> {
        match f(x) {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            // overflow or underflow of the transform matrix ends the domain
            Ok(_) | Err(Error::MgfDiverged { .. }) | Err(Error::NoConvergence { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };

    let mut lo = START;
    let mut f_lo = eval(lo)?.ok_or(Error::NoRootInDomain)?;
    let mut halvings = 0;
    while f_lo >= 0.0 {
        if halvings == MAX_HALVINGS {
            return Err(Error::NoRootInDomain);
        }
        lo *= 0.5;
        f_lo = eval(lo)?.ok_or(Error::NoRootInDomain)?;
        halvings += 1;
    }
    if halvings > 0 {
        let hi = 2.0 * lo;
        let f_hi = eval(hi)?.ok_or(Error::NoRootInDomain)?;
        return brent(&f, lo, hi, f_lo, f_hi);
    }

    let mut hi = lo;
    for _ in 0..MAX_DOUBLINGS {
        hi *= 2.0;
        match eval(hi)? {
            None => return Err(Error::NoRootInDomain),
            Some(v) if v > 0.0 => return brent(&f, lo, hi, f_lo, v),
            Some(v) if v == 0.0 => return Ok(hi),
            Some(v) => {
                lo = hi;
                f_lo = v;
            }
        }
    }
    Err(Error::NoRootInDomain)
}

/// Brent's method on a sign-changing bracket, stopping once `|f| <= 1e-10`
/// and the bracket has collapsed to machine precision, or `f` is exactly 0.
pub(crate) fn brent<F>(f: &F, a: f64, b: f64, fa: f64, fb: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    if fa * fb > 0.0 {
        return Err(Error::NoRootInDomain);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..MAX_BRENT_ITER {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs();
        let m = 0.5 * (c - b);
        if fb == 0.0 || (m.abs() <= tol && fb.abs() <= F_TOL) {
            return Ok(b);
        }
        if m.abs() <= tol {
            // bracket exhausted; the function is too flat or noisy here
            return if fb.abs() <= F_TOL {
                Ok(b)
            } else {
                Err(Error::NoConvergence {
                    what: "root bracketing",
                    residual: fb,
                })
            };
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
    }
    if fb.abs() <= F_TOL {
        Ok(b)
    } else {
        Err(Error::NoConvergence {
            what: "root bracketing",
            residual: fb,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{IncrementLaw, Pmf};

    #[test]
    fn quadratic_root() {
        let r = find_increasing_root(|t| Ok(-2.0 * t + t * t)).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }

    #[test]
    fn root_below_start() {
        let r = find_increasing_root(|t| Ok(-1e-5 * t + t * t)).unwrap();
        assert!((r - 1e-5).abs() < 1e-17);
    }

    #[test]
    fn monotone_function_has_no_root() {
        assert_eq!(find_increasing_root(|t| Ok(-t)), Err(Error::NoRootInDomain));
    }

    #[test]
    fn toy_queue_root() {
        let arrival = MapKernel::constant(1.0).unwrap();
        let service =
            MapKernel::iid(IncrementLaw::DiscretePmf(Pmf::discretized_normal(3.0, 2.0, 0.1).unwrap()))
                .unwrap();
        let r = stability_root(&arrival, &service).unwrap();
        assert!((r.theta_star - 2.0).abs() < 1e-9);
        assert!(r.residual.abs() <= 1e-10);
        assert!((r.delay_rate() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_queues() {
        let one = MapKernel::constant(1.0).unwrap();
        let two = MapKernel::constant(2.0).unwrap();
        assert_eq!(stability_root(&one, &two), Err(Error::NoRootInDomain));
        assert!(matches!(
            stability_root(&two, &one),
            Err(Error::UnstableQueue { .. })
        ));
    }
}
