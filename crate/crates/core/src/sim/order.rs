use super::stats::{ks_critical_1pct, ks_statistic, mean_and_se, quantile};
use crate::special::norm_inv;
use crate::spectral::{IncrementLaw, MapKernel, Pmf};
use crate::{Error, Result};

const MEAN_TOL: f64 = 1e-9;
const STOP_LOSS_TOL: f64 = 1e-12;
const FAMILY_LEVEL: f64 = 0.01;
const QUANTILE_COUNT: usize = 8;

/// `X <=cx Y` for finite distributions: equal means and
/// `E(X - t)+ <= E(Y - t)+` at every support point of either law. Both
/// stop-loss transforms are piecewise linear with kinks only there, so the
/// check is exact up to rounding.
pub fn convex_order_leq(x: &Pmf, y: &Pmf) -> bool {
    let scale = 1.0 + x.mean().abs().max(y.mean().abs());
    if (x.mean() - y.mean()).abs() > MEAN_TOL * scale {
        return false;
    }
    x.support()
        .iter()
        .chain(y.support())
        .all(|&t| x.stop_loss(t) <= y.stop_loss(t) + STOP_LOSS_TOL * scale)
}

/// Exact law of the cumulative increment over `t` steps of a kernel whose
/// increments are all constant or finitely supported.
pub fn cumulative_pmf(kernel: &MapKernel, t: usize) -> Result<Pmf> {
    let n = kernel.n_states();
    let mut laws = vec![vec![(Vec::new(), Vec::new()); n]; n];
    for i in 0..n {
        for j in 0..n {
            laws[i][j] = match kernel.increment(i, j) {
                IncrementLaw::Constant(c) => (vec![*c], vec![1.0]),
                IncrementLaw::DiscretePmf(p) => (p.support().to_vec(), p.probs().to_vec()),
                other => {
                    return Err(Error::InvalidArgument(format!(
                        "exact cumulative law needs finite increments, got {other:?}"
                    )))
                }
            };
        }
    }
    // joint mass over (state, cumulative value)
    let mut mass: Vec<Pmf> = Vec::with_capacity(n);
    let mut weight = kernel.initial().to_vec();
    for _ in 0..n {
        mass.push(Pmf::point(0.0));
    }
    let p = kernel.transition();
    for _ in 0..t {
        let mut atoms: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            if weight[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let w = weight[i] * p[(i, j)];
                if w == 0.0 {
                    continue;
                }
                let (xs, ps) = &laws[i][j];
                for (v, m) in mass[i].support().iter().zip(mass[i].probs()) {
                    for (x, q) in xs.iter().zip(ps) {
                        atoms[j].push((v + x, w * m * q));
                    }
                }
            }
        }
        for j in 0..n {
            let total: f64 = atoms[j].iter().map(|a| a.1).sum();
            weight[j] = total;
            if total > 0.0 {
                mass[j] = Pmf::from_atoms(atoms[j].drain(..))?;
            }
        }
    }
    Pmf::from_atoms(
        (0..n)
            .filter(|i| weight[*i] > 0.0)
            .flat_map(|i| {
                let w = weight[i];
                mass[i]
                    .support()
                    .iter()
                    .zip(mass[i].probs())
                    .map(move |(x, p)| (*x, w * p))
                    .collect::<Vec<_>>()
            }),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// No test function is significantly smaller under `Y` and at least one
    /// is significantly larger.
    Holds,
    /// Some test function is significantly smaller under `Y`.
    Fails,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestStatistic {
    pub id: String,
    pub mean_x: f64,
    pub mean_y: f64,
    /// `E phi(Y) - E phi(X)`.
    pub diff: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub verdict: Verdict,
    pub z_critical: f64,
    /// Coordinates whose marginals differ at the 1% level.
    pub marginal_mismatch: Vec<usize>,
    pub statistics: Vec<TestStatistic>,
}

/// Empirical test of `X <=sm Y` from independent samples of random vectors.
///
/// Compares the means of a fixed family of supermodular functions: the sum
/// of pairwise products, the minimum, `prod_k (min(x_k, c) - m)` at pooled
/// marginal quantiles `c` (with `m` the pooled minimum, so every factor is
/// nonnegative), and stop-loss functions of the coordinate sum at pooled
/// quantiles of the sums. This is a necessary-condition check only.
/// Supermodular order needs equal marginals, so a coordinate whose two-sample
/// KS test rejects at 1% makes the verdict inconclusive. Significance uses a
/// Bonferroni-corrected two-sided normal threshold, never below 3. Equal
/// means are allowed under the order (stop-loss below the support is
/// linear, for one), so `Holds` needs no violation plus at least one
/// significant increase.
pub fn supermodular_battery(x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<OrderReport> {
    if x.len() < 2 || y.len() < 2 {
        return Err(Error::InvalidArgument("need at least two samples of each vector".into()));
    }
    let d = x[0].len();
    if d < 2 {
        return Err(Error::InvalidArgument("vectors need at least two coordinates".into()));
    }
    for row in x.iter().chain(y) {
        if row.len() != d {
            return Err(Error::DimensionMismatch { left: row.len(), right: d });
        }
    }

    let marginal_mismatch: Vec<usize> = (0..d)
        .filter(|&k| {
            let a: Vec<f64> = x.iter().map(|r| r[k]).collect();
            let b: Vec<f64> = y.iter().map(|r| r[k]).collect();
            ks_statistic(&a, &b) > ks_critical_1pct(a.len(), b.len())
        })
        .collect();

    let levels: Vec<f64> = (0..QUANTILE_COUNT)
        .map(|k| 0.1 + k as f64 * 0.8 / (QUANTILE_COUNT - 1) as f64)
        .collect();
    let mut pooled: Vec<f64> = x.iter().chain(y).flatten().copied().collect();
    pooled.sort_by(f64::total_cmp);
    let mut sums: Vec<f64> = x.iter().chain(y).map(|r| r.iter().sum()).collect();
    sums.sort_by(f64::total_cmp);

    type TestFn = Box<dyn Fn(&[f64]) -> f64>;
    let mut tests: Vec<(String, TestFn)> = vec![
        (
            "pairwise-product".into(),
            Box::new(|r: &[f64]| {
                let mut s = 0.0;
                for i in 0..r.len() {
                    for j in i + 1..r.len() {
                        s += r[i] * r[j];
                    }
                }
                s
            }),
        ),
        (
            "minimum".into(),
            Box::new(|r: &[f64]| r.iter().copied().fold(f64::INFINITY, f64::min)),
        ),
    ];
    let floor = pooled[0];
    for q in &levels {
        let c = quantile(&pooled, *q);
        tests.push((
            format!("capped-product@{q:.3}"),
            Box::new(move |r: &[f64]| r.iter().map(|v| v.min(c) - floor).product()),
        ));
    }
    for q in &levels {
        let t = quantile(&sums, *q);
        tests.push((
            format!("sum-stop-loss@{q:.3}"),
            Box::new(move |r: &[f64]| (r.iter().sum::<f64>() - t).max(0.0)),
        ));
    }

    let k = tests.len() as f64;
    let z_critical = norm_inv(1.0 - FAMILY_LEVEL / (2.0 * k)).max(3.0);
    let statistics: Vec<TestStatistic> = tests
        .iter()
        .map(|(id, f)| {
            let fx: Vec<f64> = x.iter().map(|r| f(r)).collect();
            let fy: Vec<f64> = y.iter().map(|r| f(r)).collect();
            let (mx, sx) = mean_and_se(&fx);
            let (my, sy) = mean_and_se(&fy);
            TestStatistic {
                id: id.clone(),
                mean_x: mx,
                mean_y: my,
                diff: my - mx,
                std_err: (sx * sx + sy * sy).sqrt(),
            }
        })
        .collect();

    let verdict = if !marginal_mismatch.is_empty() {
        Verdict::Inconclusive
    } else if statistics.iter().any(|s| s.diff < -z_critical * s.std_err) {
        Verdict::Fails
    } else if statistics.iter().any(|s| s.diff > z_critical * s.std_err) {
        Verdict::Holds
    } else {
        Verdict::Inconclusive
    };
    Ok(OrderReport {
        verdict,
        z_critical,
        marginal_mismatch,
        statistics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::stream_rng;
    use rand::Rng;

    #[test]
    fn point_mass_below_spread() {
        let y = Pmf::new(vec![0.0, 2.0], vec![0.5, 0.5]).unwrap();
        assert!(convex_order_leq(&Pmf::point(1.0), &y));
        assert!(!convex_order_leq(&y, &Pmf::point(1.0)));
        assert!(!convex_order_leq(&Pmf::point(1.1), &y));
    }

    #[test]
    fn sticky_chain_spreads_sum() {
        let onoff = MapKernel::with_destination_increments(
            vec![vec![0.9, 0.1], vec![0.1, 0.9]],
            vec![IncrementLaw::Constant(0.0), IncrementLaw::Constant(2.0)],
            vec![0.5, 0.5],
        )
        .unwrap();
        let a3 = cumulative_pmf(&onoff, 3).unwrap();
        assert!((a3.mean() - 3.0).abs() < 1e-12);
        assert!(convex_order_leq(&Pmf::point(3.0), &a3));
    }

    #[test]
    fn comonotone_beats_independent() {
        let mut rng = stream_rng(5, 0);
        let n = 4000;
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let y: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                vec![u, u, u]
            })
            .collect();
        assert_eq!(supermodular_battery(&x, &y).unwrap().verdict, Verdict::Holds);
        assert_eq!(supermodular_battery(&y, &x).unwrap().verdict, Verdict::Fails);
    }

    #[test]
    fn different_marginals_are_inconclusive() {
        let x = vec![vec![0.0, 0.0]; 200];
        let y = vec![vec![1.0, 1.0]; 200];
        let r = supermodular_battery(&x, &y).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert_eq!(r.marginal_mismatch, vec![0, 1]);
    }
}
