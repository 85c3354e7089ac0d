use proptest::prelude::*;

use depctl::config::ExperimentConfig;
use depctl::copula::{frechet_compose, transition_from_copula, CopulaSpec, FrechetParams};
use depctl::sim::{convex_order_leq, lindley};
use depctl::spectral::{cgf, cgf_derivative, IncrementLaw, MapKernel, Pmf};

fn normalised(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn prob_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(normalised)
}

fn law() -> impl Strategy<Value = IncrementLaw> {
    prop::collection::vec((-3i32..=3, 0.1f64..1.0), 1..4).prop_map(|atoms| {
        let pmf = Pmf::from_atoms(atoms.into_iter().map(|(x, w)| (x as f64, w))).unwrap();
        IncrementLaw::DiscretePmf(pmf)
    })
}

fn kernel() -> impl Strategy<Value = MapKernel> {
    (1usize..=3).prop_flat_map(|n| {
        (
            prop::collection::vec(prob_vec(n), n),
            prop::collection::vec(prop::collection::vec(law(), n), n),
        )
            .prop_map(move |(p, laws)| {
                let labels = (0..n).map(|i| format!("s{i}")).collect();
                MapKernel::new(labels, p, laws, vec![1.0 / n as f64; n]).unwrap()
            })
    })
}

fn frechet_params() -> impl Strategy<Value = FrechetParams> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b, c)| {
        let s = a + b + c + 1e-9;
        FrechetParams {
            alpha: a / s,
            beta: b / s,
        }
    })
}

fn copula() -> impl Strategy<Value = CopulaSpec> {
    prop_oneof![
        Just(CopulaSpec::M),
        Just(CopulaSpec::W),
        Just(CopulaSpec::P),
        (-0.99f64..0.99).prop_map(|r| CopulaSpec::gaussian(r).unwrap()),
        (-1.0f64..=1.0).prop_map(|a| CopulaSpec::one_param_frechet(a).unwrap()),
        frechet_params().prop_map(FrechetParams::to_copula),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_rows_and_stationary_law_are_distributions(k in kernel()) {
        for row in k.transition_rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        let pi = k.stationary();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let rows = k.transition_rows();
        for j in 0..pi.len() {
            let next: f64 = (0..pi.len()).map(|i| pi[i] * rows[i][j]).sum();
            prop_assert!((next - pi[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn cgf_vanishes_at_zero_and_is_convex(k in kernel(), a in -1.5f64..1.5, b in -1.5f64..1.5) {
        prop_assert!(cgf(&k, 0.0).unwrap().abs() < 1e-12);
        let mid = cgf(&k, 0.5 * (a + b)).unwrap();
        let chord = 0.5 * (cgf(&k, a).unwrap() + cgf(&k, b).unwrap());
        prop_assert!(mid <= chord + 1e-9, "{mid} > {chord}");
    }

    #[test]
    fn cgf_derivative_matches_finite_difference(k in kernel(), theta in -1.0f64..1.0) {
        let h = 1e-5;
        let fd = (cgf(&k, theta + h).unwrap() - cgf(&k, theta - h).unwrap()) / (2.0 * h);
        let exact = cgf_derivative(&k, theta).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "{fd} vs {exact}");
    }

    #[test]
    fn lindley_equals_supremum_of_net_input(
        slots in prop::collection::vec((0.0f64..3.0, 0.0f64..3.0), 1..50),
    ) {
        let (a, c): (Vec<f64>, Vec<f64>) = slots.into_iter().unzip();
        let trace = lindley(&a, &c).unwrap();
        for t in 0..=a.len() {
            let sup = (0..=t)
                .map(|s| (s..t).map(|u| a[u] - c[u]).sum::<f64>())
                .fold(0.0f64, f64::max);
            prop_assert!((trace.backlog[t] - sup).abs() < 1e-9);
        }
    }

    #[test]
    fn copula_axioms(c in copula(), u in 0.0f64..=1.0, v in 0.0f64..=1.0, du in 0.0f64..0.3, dv in 0.0f64..0.3) {
        let at = |x: f64, y: f64| c.eval(x.min(1.0), y.min(1.0)).unwrap();
        prop_assert!(at(u, 0.0).abs() < 1e-12 && at(0.0, v).abs() < 1e-12);
        prop_assert!((at(u, 1.0) - u).abs() < 1e-9 && (at(1.0, v) - v).abs() < 1e-9);
        let value = at(u, v);
        prop_assert!(value >= (u + v - 1.0).max(0.0) - 1e-9 && value <= u.min(v) + 1e-9);
        let volume = at(u + du, v + dv) - at(u, v + dv) - at(u + du, v) + at(u, v);
        prop_assert!(volume >= -1e-9);
    }

    #[test]
    fn frechet_compose_is_associative(a in frechet_params(), b in frechet_params(), c in frechet_params()) {
        let left = frechet_compose(frechet_compose(a, b), c);
        let right = frechet_compose(a, frechet_compose(b, c));
        prop_assert!((left.alpha - right.alpha).abs() < 1e-12);
        prop_assert!((left.beta - right.beta).abs() < 1e-12);
    }

    #[test]
    fn transitions_from_copulas_preserve_varpi(c in copula(), varpi in (2usize..6).prop_flat_map(prob_vec)) {
        let (p, next) = transition_from_copula(&c, &varpi).unwrap();
        for (row, x) in p.iter().zip(&next) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|q| *q >= 0.0) && *x >= 0.0);
        }
        for (a, b) in next.iter().zip(&varpi) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn adding_mean_zero_noise_spreads_in_convex_order(
        atoms in prop::collection::vec((-4i32..=4, 0.1f64..1.0), 1..5),
        width in 1i32..3,
    ) {
        let x = Pmf::from_atoms(atoms.into_iter().map(|(v, w)| (v as f64, w))).unwrap();
        let noise = Pmf::from_atoms([(-width as f64, 0.5), (width as f64, 0.5)]).unwrap();
        let y = x.convolve(&noise);
        prop_assert!(convex_order_leq(&x, &x));
        prop_assert!(convex_order_leq(&x, &y));
        prop_assert!(!convex_order_leq(&y, &x));
    }
}

#[test]
fn config_round_trips_through_toml() {
    let text = r#"
[arrival]
constant = 10000.0

[service.channel]
bandwidth = 20000.0
snr = [[1.5, 1.5], [1.1, 1.1]]

[copulas]
horizon = 2
[[copulas.dimensions]]
varpi = [0.3, 0.7]
temporal = [{ family = "gaussian", rho = -0.5 }, { family = "frechet", w = 0.2, p = 0.3, m = 0.5 }]

[simulation]
seed = 11
replications = 1000
horizon = 50
metric = "backlog"
levels = [0.0, 5000.0]
"#;
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(cfg, again);
    assert!(cfg.control_plan().is_ok());
}
