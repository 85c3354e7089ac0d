use crate::{Error, Result};

const AXIOM_TOL: f64 = 1e-9;

/// Copula given by its values on a rectangular lattice and extended by
/// bilinear interpolation (a checkerboard copula).
///
/// `values[i][j]` is the copula at `(u_knots[i], v_knots[j])`. Knots run
/// from 0 to 1 and are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCopula {
    u_knots: Vec<f64>,
    v_knots: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl GridCopula {
    /// Lattice `k / n` on both axes from an `(n + 1) x (n + 1)` array.
    pub fn uniform(values: Vec<Vec<f64>>) -> Result<Self> {
        let n = values.len().saturating_sub(1);
        if n == 0 {
            return Err(Error::InvalidCopula("grid needs at least 2 x 2 nodes".into()));
        }
        let knots: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        GridCopula::with_knots(knots.clone(), knots, values)
    }

    pub fn with_knots(u_knots: Vec<f64>, v_knots: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        for knots in [&u_knots, &v_knots] {
            if knots.len() < 2
                || knots[0] != 0.0
                || *knots.last().unwrap() != 1.0
                || knots.windows(2).any(|w| w[0] >= w[1])
            {
                return Err(Error::InvalidCopula(
                    "grid knots must increase strictly from 0 to 1".into(),
                ));
            }
        }
        if values.len() != u_knots.len() || values.iter().any(|r| r.len() != v_knots.len()) {
            return Err(Error::InvalidCopula(format!(
                "grid values must be {} x {}",
                u_knots.len(),
                v_knots.len()
            )));
        }
        let g = GridCopula {
            u_knots,
            v_knots,
            values,
        };
        g.check_axioms()?;
        Ok(g)
    }

    /// Tabulate `f` on the uniform lattice with `n` cells per axis.
    pub fn tabulate(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = (0..=n)
            .map(|i| {
                (0..=n)
                    .map(|j| f(i as f64 / n as f64, j as f64 / n as f64))
                    .collect()
            })
            .collect();
        GridCopula::uniform(values)
    }

    fn check_axioms(&self) -> Result<()> {
        let (nu, nv) = (self.u_knots.len(), self.v_knots.len());
        for i in 0..nu {
            let u = self.u_knots[i];
            if self.values[i][0].abs() > AXIOM_TOL || (self.values[i][nv - 1] - u).abs() > AXIOM_TOL {
                return Err(Error::InvalidCopula(format!(
                    "grid violates the margin at u = {u}"
                )));
            }
        }
        for j in 0..nv {
            let v = self.v_knots[j];
            if self.values[0][j].abs() > AXIOM_TOL || (self.values[nu - 1][j] - v).abs() > AXIOM_TOL {
                return Err(Error::InvalidCopula(format!(
                    "grid violates the margin at v = {v}"
                )));
            }
        }
        for i in 1..nu {
            for j in 1..nv {
                let mass = self.values[i][j] - self.values[i - 1][j] - self.values[i][j - 1]
                    + self.values[i - 1][j - 1];
                if mass < -AXIOM_TOL {
                    return Err(Error::InvalidCopula(format!(
                        "grid cell ({i}, {j}) has negative mass {mass}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn u_knots(&self) -> &[f64] {
        &self.u_knots
    }

    pub fn v_knots(&self) -> &[f64] {
        &self.v_knots
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let (i, tu) = locate(&self.u_knots, u);
        let (j, tv) = locate(&self.v_knots, v);
        let z = &self.values;
        let lo = z[i][j] * (1.0 - tv) + z[i][j + 1] * tv;
        let hi = z[i + 1][j] * (1.0 - tv) + z[i + 1][j + 1] * tv;
        lo * (1.0 - tu) + hi * tu
    }
}

/// Cell index and local coordinate of `x` among the knots.
pub(super) fn locate(knots: &[f64], x: f64) -> (usize, f64) {
    let last = knots.len() - 2;
    let i = knots.partition_point(|k| *k <= x).saturating_sub(1).min(last);
    let t = (x - knots[i]) / (knots[i + 1] - knots[i]);
    (i, t.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_product_is_exact_on_product() {
        let g = GridCopula::tabulate(4, |u, v| u * v).unwrap();
        // bilinear interpolation reproduces u v exactly
        assert!((g.eval(0.33, 0.71) - 0.33 * 0.71).abs() < 1e-15);
    }

    #[test]
    fn rejects_non_copula() {
        let bad = vec![vec![0.0, 0.0], vec![0.0, 0.5]];
        assert!(GridCopula::uniform(bad).is_err());
    }

    #[test]
    fn nonuniform_knots() {
        let k = vec![0.0, 0.3, 1.0];
        let vals = k
            .iter()
            .map(|u| k.iter().map(|v| u * v).collect())
            .collect();
        let g = GridCopula::with_knots(k.clone(), k, vals).unwrap();
        assert!((g.eval(0.3, 0.3) - 0.09).abs() < 1e-15);
        assert!((g.eval(1.0, 0.42) - 0.42).abs() < 1e-15);
    }
}
