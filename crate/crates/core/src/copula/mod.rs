//! Bivariate copulas, the Darsow star product, and the extraction of Markov
//! transition matrices from temporal copulas.

mod granger;
mod grid;
mod normal;
mod star;
mod transition;

pub use granger::{granger_product_check, GrangerReport, Grid4};
pub use grid::GridCopula;
pub use normal::bvn_cdf;
pub use star::{star, DEFAULT_GRID};
pub use transition::{
    dependence_control, implied_copula, transition_from_copula, ControlPlan, MarginalLadder,
    PlanDimension,
};

use crate::special::norm_inv;
use crate::{Error, Result};

const WEIGHT_TOL: f64 = 1e-12;

/// A bivariate copula.
#[derive(Debug, Clone, PartialEq)]
pub enum CopulaSpec {
    /// Comonotone copula `min(u, v)`.
    M,
    /// Countermonotone copula `max(u + v - 1, 0)`.
    W,
    /// Independence copula `u v`.
    P,
    /// Convex combination of W, P and M.
    Frechet { w: f64, p: f64, m: f64 },
    /// Frechet copula with weights `(a^2(1-a)/2, 1-a^2, a^2(1+a)/2)`.
    OneParamFrechet(f64),
    /// Gaussian copula with correlation `rho`.
    Gaussian2(f64),
    Grid(GridCopula),
}

impl CopulaSpec {
    pub fn frechet(w: f64, p: f64, m: f64) -> Result<Self> {
        let spec = CopulaSpec::Frechet { w, p, m };
        spec.validate()?;
        Ok(spec)
    }

    pub fn one_param_frechet(alpha: f64) -> Result<Self> {
        let spec = CopulaSpec::OneParamFrechet(alpha);
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        let spec = CopulaSpec::Gaussian2(rho);
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CopulaSpec::Frechet { w, p, m } => {
                if [w, p, m].iter().any(|x| !(*x >= 0.0)) {
                    return Err(Error::InvalidCopula(
                        "Frechet weights must be nonnegative".into(),
                    ));
                }
                if (w + p + m - 1.0).abs() > WEIGHT_TOL {
                    return Err(Error::InvalidCopula(format!(
                        "Frechet weights sum to {}",
                        w + p + m
                    )));
                }
                Ok(())
            }
            CopulaSpec::OneParamFrechet(a) if !(-1.0..=1.0).contains(&a) => Err(
                Error::InvalidCopula(format!("Frechet parameter {a} outside [-1, 1]")),
            ),
            CopulaSpec::Gaussian2(rho) if !(rho > -1.0 && rho < 1.0) => Err(
                Error::InvalidCopula(format!("Gaussian correlation {rho} outside (-1, 1)")),
            ),
            _ => Ok(()),
        }
    }

    /// Weights `(w, p, m)` on W, P and M for the Frechet-type families.
    pub fn frechet_weights(&self) -> Option<(f64, f64, f64)> {
        match *self {
            CopulaSpec::M => Some((0.0, 0.0, 1.0)),
            CopulaSpec::W => Some((1.0, 0.0, 0.0)),
            CopulaSpec::P => Some((0.0, 1.0, 0.0)),
            CopulaSpec::Frechet { w, p, m } => Some((w, p, m)),
            CopulaSpec::OneParamFrechet(a) => {
                let a2 = a * a;
                Some((a2 * (1.0 - a) / 2.0, 1.0 - a2, a2 * (1.0 + a) / 2.0))
            }
            _ => None,
        }
    }

    /// `C(u, v)`.
    pub fn eval(&self, u: f64, v: f64) -> Result<f64> {
        for x in [u, v] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::OutOfUnitInterval(x));
            }
        }
        Ok(self.eval_unchecked(u, v))
    }

    pub(crate) fn eval_unchecked(&self, u: f64, v: f64) -> f64 {
        match self {
            CopulaSpec::M => u.min(v),
            CopulaSpec::W => (u + v - 1.0).max(0.0),
            CopulaSpec::P => u * v,
            CopulaSpec::Gaussian2(rho) => {
                if u == 0.0 || v == 0.0 {
                    0.0
                } else if u == 1.0 {
                    v
                } else if v == 1.0 {
                    u
                } else {
                    bvn_cdf(norm_inv(u), norm_inv(v), *rho).clamp(0.0, u.min(v))
                }
            }
            CopulaSpec::Grid(g) => g.eval(u, v),
            _ => {
                let (w, p, m) = self.frechet_weights().expect("Frechet-type family");
                w * (u + v - 1.0).max(0.0) + p * u * v + m * u.min(v)
            }
        }
    }
}

/// Frechet parameters `(alpha, beta)`: the weights on W and M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetParams {
    pub alpha: f64,
    pub beta: f64,
}

impl FrechetParams {
    pub fn to_copula(self) -> CopulaSpec {
        CopulaSpec::Frechet {
            w: self.alpha,
            p: 1.0 - self.alpha - self.beta,
            m: self.beta,
        }
    }
}

/// Frechet parameters of the time-homogeneous Markov family at lag `h`:
/// `alpha(h) = e^{-2h}(1 - e^{-h})/2`, `beta(h) = e^{-2h}(1 + e^{-h})/2`.
pub fn frechet_homogeneous(h: f64) -> Result<FrechetParams> {
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!("lag must be nonnegative, got {h}")));
    }
    let e2 = (-2.0 * h).exp();
    let e1 = (-h).exp();
    Ok(FrechetParams {
        alpha: e2 * (1.0 - e1) / 2.0,
        beta: e2 * (1.0 + e1) / 2.0,
    })
}

/// Parameters of the star product of two Frechet copulas.
pub fn frechet_compose(c1: FrechetParams, c2: FrechetParams) -> FrechetParams {
    FrechetParams {
        alpha: c1.beta * c2.alpha + c1.alpha * c2.beta,
        beta: c1.alpha * c2.alpha + c1.beta * c2.beta,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        assert_eq!(CopulaSpec::P.eval(0.5, 0.5).unwrap(), 0.25);
        let c = CopulaSpec::one_param_frechet(0.5).unwrap();
        assert!((c.eval(0.3, 0.3).unwrap() - 0.12375).abs() < 1e-15);
        assert!(matches!(
            CopulaSpec::M.eval(1.2, 0.3),
            Err(Error::OutOfUnitInterval(_))
        ));
    }

    #[test]
    fn gaussian_comonotone_limit() {
        let c = CopulaSpec::gaussian(0.9999).unwrap();
        for (u, v) in [(0.2, 0.7), (0.45, 0.55), (0.9, 0.4)] {
            assert!((c.eval(u, v).unwrap() - u.min(v)).abs() < 1e-3);
        }
        // on the diagonal the gap closes only like sqrt(1 - rho)
        let gap = 0.5 - c.eval(0.5, 0.5).unwrap();
        assert!((gap - f64::acos(0.9999) / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn frechet_validation() {
        assert!(CopulaSpec::frechet(0.2, 0.3, 0.4).is_err());
        assert!(CopulaSpec::frechet(-0.1, 0.6, 0.5).is_err());
        assert!(CopulaSpec::one_param_frechet(1.5).is_err());
        assert!(CopulaSpec::gaussian(1.0).is_err());
    }

    #[test]
    fn homogeneous_family() {
        let z = frechet_homogeneous(0.0).unwrap();
        assert_eq!((z.alpha, z.beta), (0.0, 1.0));
        let l = frechet_homogeneous(2f64.ln()).unwrap();
        assert!((l.alpha - 1.0 / 16.0).abs() < 1e-15);
        assert!((l.beta - 3.0 / 16.0).abs() < 1e-15);
        let big = frechet_homogeneous(50.0).unwrap();
        assert!(big.alpha < 1e-40 && big.beta < 1e-40);
    }

    #[test]
    fn compose_identities() {
        let m = FrechetParams { alpha: 0.0, beta: 1.0 };
        let w = FrechetParams { alpha: 1.0, beta: 0.0 };
        let x = FrechetParams { alpha: 0.1, beta: 0.3 };
        assert_eq!(frechet_compose(m, x), x);
        assert_eq!(frechet_compose(w, w), m);
        let a = frechet_compose(
            frechet_homogeneous(0.3).unwrap(),
            frechet_homogeneous(0.7).unwrap(),
        );
        let b = frechet_homogeneous(1.0).unwrap();
        assert!((a.alpha - b.alpha).abs() < 1e-12 && (a.beta - b.beta).abs() < 1e-12);
    }
}
