//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureFailure {
    pub value: f64,
    pub abs_error: f64,
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kron += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

/// Integrate `f` over the finite interval `[a, b]` to within
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate, QuadratureFailure> {
    let mut intervals: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = kronrod15(&f, a, b);
    intervals.push((a, b, v, e));
    loop {
        let (value, err) = intervals
            .iter()
            .fold((0.0, 0.0), |(s, t), iv| (s + iv.2, t + iv.3));
        if !value.is_finite() || !err.is_finite() {
            return Err(QuadratureFailure {
                value,
                abs_error: err,
            });
        }
        if err <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Estimate {
                value,
                abs_error: err,
            });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(QuadratureFailure {
                value,
                abs_error: err,
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval cannot be split further in floating point
            return Err(QuadratureFailure {
                value,
                abs_error: err,
            });
        }
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
}

/// Integrate `f` over `[a, ∞)` through the map `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate, QuadratureFailure> {
    integrate(
        |t| {
            let s = 1.0 - t;
            let x = a + t / s;
            let y = f(x);
            if y == 0.0 {
                0.0
            } else {
                y / (s * s)
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn gamma_function_on_half_line() {
        // Γ(4.5) = 11.631728396567448
        let r = integrate_to_infinity(|x| x.powf(3.5) * (-x).exp(), 0.0, 1e-12, 1e-12).unwrap();
        assert!((r.value - 11.631_728_396_567_448).abs() < 1e-9);
    }

    #[test]
    fn peaked_integrand_converges() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10, 1e-10).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-7 * exact);
    }

    #[test]
    fn divergent_integrand_is_reported() {
        assert!(integrate(|x| 1.0 / x, 0.0, 1.0, 1e-12, 1e-12).is_err());
    }
}
