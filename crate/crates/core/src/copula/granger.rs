use super::grid::locate;
use super::CopulaSpec;
use crate::{Error, Result};

/// Four-dimensional copula `C(u1, v1, u2, v2)` tabulated on a uniform
/// lattice and extended by multilinear interpolation. Coordinates are
/// (dimension 1 at t, dimension 2 at t, dimension 1 at t+1, dimension 2 at t+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid4 {
    n: usize,
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl Grid4 {
    pub fn tabulate(n: usize, f: impl Fn([f64; 4]) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidCopula("grid needs at least one cell".into()));
        }
        let knots: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let m = n + 1;
        let mut values = Vec::with_capacity(m.pow(4));
        for a in 0..m {
            for b in 0..m {
                for c in 0..m {
                    for d in 0..m {
                        values.push(f([knots[a], knots[b], knots[c], knots[d]]));
                    }
                }
            }
        }
        Ok(Grid4 { n, knots, values })
    }

    fn node(&self, idx: [usize; 4]) -> f64 {
        let m = self.n + 1;
        self.values[((idx[0] * m + idx[1]) * m + idx[2]) * m + idx[3]]
    }

    pub fn eval(&self, x: [f64; 4]) -> f64 {
        let cells: Vec<(usize, f64)> = x.iter().map(|v| locate(&self.knots, *v)).collect();
        let mut total = 0.0;
        for corner in 0..16usize {
            let mut weight = 1.0;
            let mut idx = [0usize; 4];
            for k in 0..4 {
                let (i, t) = cells[k];
                if corner >> k & 1 == 1 {
                    idx[k] = i + 1;
                    weight *= t;
                } else {
                    idx[k] = i;
                    weight *= 1.0 - t;
                }
            }
            if weight != 0.0 {
                total += weight * self.node(idx);
            }
        }
        total
    }
}

/// Largest gap between `C(u1, v1, u2, 1)` and `v1 C_X(u1, u2)` over a lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrangerReport {
    pub max_deviation: f64,
    /// `(u1, v1, u2)` where the largest gap occurs.
    pub argmax: [f64; 3],
    pub grid_n: usize,
}

/// Compare a joint copula of two dimensions at two times with the product
/// form implied by no cross-dependence: the first dimension's temporal
/// copula times an independent second coordinate.
pub fn granger_product_check(
    joint: &Grid4,
    temporal_marginal: &CopulaSpec,
    grid_n: usize,
) -> Result<GrangerReport> {
    if grid_n == 0 {
        return Err(Error::InvalidArgument("grid_n must be positive".into()));
    }
    temporal_marginal.validate()?;
    let mut report = GrangerReport {
        max_deviation: 0.0,
        argmax: [0.0; 3],
        grid_n,
    };
    for i in 0..=grid_n {
        let u1 = i as f64 / grid_n as f64;
        for j in 0..=grid_n {
            let v1 = j as f64 / grid_n as f64;
            for k in 0..=grid_n {
                let u2 = k as f64 / grid_n as f64;
                let lhs = joint.eval([u1, v1, u2, 1.0]);
                let rhs = v1 * temporal_marginal.eval_unchecked(u1, u2);
                let gap = (lhs - rhs).abs();
                if gap > report.max_deviation {
                    report.max_deviation = gap;
                    report.argmax = [u1, v1, u2];
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_joint_passes() {
        let g = Grid4::tabulate(8, |x| x.iter().product()).unwrap();
        let r = granger_product_check(&g, &CopulaSpec::P, 8).unwrap();
        assert!(r.max_deviation <= 2.0 / 8.0);
        assert!(r.max_deviation < 1e-12);
    }

    #[test]
    fn cross_dependence_is_detected() {
        let g = Grid4::tabulate(8, |[u1, v1, u2, v2]| u1 * v1.min(u2) * v2).unwrap();
        let r = granger_product_check(&g, &CopulaSpec::P, 8).unwrap();
        assert!((r.max_deviation - 0.25).abs() < 1e-12);
    }
}
