use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::special::{gauss_legendre, norm_cdf};

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Negative half of the Gauss-Legendre rules with 6, 12 and 20 points.
fn rules() -> &'static [Rule; 3] {
    static RULES: OnceLock<[Rule; 3]> = OnceLock::new();
    RULES.get_or_init(|| {
        [6, 12, 20].map(|n| {
            let (x, w) = gauss_legendre(n);
            Rule {
                nodes: x[..n / 2].to_vec(),
                weights: w[..n / 2].to_vec(),
            }
        })
    })
}

/// Bivariate standard normal CDF `P(X <= a, Y <= b)` with correlation `rho`.
///
/// Genz's method: Drezner-Wesolowsky integration over `asin(rho)` for
/// moderate correlation, and an asymptotic expansion plus correction
/// integral near `|rho| = 1`.
pub fn bvn_cdf(a: f64, b: f64, rho: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return 0.0;
    }
    if a == f64::INFINITY {
        return norm_cdf(b);
    }
    if b == f64::INFINITY {
        return norm_cdf(a);
    }
    upper_orthant(-a, -b, rho).clamp(0.0, 1.0)
}

/// `P(X > h, Y > k)`.
fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    let rule = if r.abs() < 0.3 {
        &rules()[0]
    } else if r.abs() < 0.75 {
        &rules()[1]
    } else {
        &rules()[2]
    };
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            for sign in [-1.0, 1.0] {
                let sn = (asr * (sign * x + 1.0) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (4.0 * PI) + norm_cdf(-h) * norm_cdf(-k);
    }
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    if r.abs() < 1.0 {
        let as_ = (1.0 - r) * (1.0 + r);
        let mut a = as_.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        bvn = a
            * (-(bs / as_ + hk) / 2.0).exp()
            * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
        if hk > -160.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp()
                * (2.0 * PI).sqrt()
                * norm_cdf(-b / a)
                * b
                * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            for sign in [-1.0, 1.0] {
                let xs = (a * (sign * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                bvn += a
                    * w
                    * ((-bs / (2.0 * xs) - hk / (1.0 + rs)).exp() / rs
                        - (-(bs / xs + hk) / 2.0).exp() * (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
        bvn = -bvn / (2.0 * PI);
    }
    if r > 0.0 {
        bvn + norm_cdf(-h.max(k))
    } else {
        -bvn + (norm_cdf(-h) - norm_cdf(-k)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_values() {
        assert!((bvn_cdf(0.0, 0.0, 0.0) - 0.25).abs() < 1e-15);
        for rho in [-0.95, -0.5, 0.2, 0.8, 0.99] {
            let expect = 0.25 + f64::asin(rho) / (2.0 * PI);
            assert!((bvn_cdf(0.0, 0.0, rho) - expect).abs() < 1e-12, "rho={rho}");
        }
    }

    #[test]
    fn margins() {
        for rho in [-0.9, 0.0, 0.6, 0.95] {
            assert!((bvn_cdf(0.7, 8.0, rho) - norm_cdf(0.7)).abs() < 1e-7);
            assert!((bvn_cdf(-1.3, f64::INFINITY, rho) - norm_cdf(-1.3)).abs() < 1e-15);
        }
    }

    #[test]
    fn independence_factorises() {
        assert!((bvn_cdf(0.3, -1.1, 0.0) - norm_cdf(0.3) * norm_cdf(-1.1)).abs() < 1e-15);
    }
}
