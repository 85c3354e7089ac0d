//! Small statistics helpers shared by the simulators.

use crate::special::norm_cdf;

/// Kahan-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mut s = KahanSum::default();
    xs.iter().for_each(|x| s.add(*x));
    let mean = s.value() / n;
    let mut ss = KahanSum::default();
    xs.iter().for_each(|x| ss.add((x - mean) * (x - mean)));
    let var = if xs.len() > 1 { ss.value() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Sample variance with denominator `n - 1`.
pub fn variance(xs: &[f64]) -> f64 {
    let (_, se) = mean_and_se(xs);
    se * se * xs.len() as f64
}

/// Pearson correlation between `x[t]` and `x[t + lag]`.
pub fn lag_correlation(xs: &[f64], lag: usize) -> f64 {
    if xs.len() <= lag + 1 {
        return f64::NAN;
    }
    let a = &xs[..xs.len() - lag];
    let b = &xs[lag..];
    pearson(a, b)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Two-sided normal p-value of a z statistic.
pub fn two_sided_p(z: f64) -> f64 {
    2.0 * norm_cdf(-z.abs())
}

/// Two-sided p-value for zero correlation from `n` pairs (Fisher transform).
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if n <= 3 {
        return 1.0;
    }
    two_sided_p(r.atanh() * ((n - 3) as f64).sqrt())
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> f64 {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value of the two-sample KS test at level 1%.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

/// Empirical quantile by linear interpolation of the sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] * (1.0 - t) + sorted[hi] * t
}
