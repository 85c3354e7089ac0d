//! Python bindings for the `depctl` library.
//!
//! Increment laws are passed as a float (a constant increment) or as a
//! `(values, probs)` pair (a finitely supported law). Matrices are nested
//! lists.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use depctl::bounds::{self, BoundReport};
use depctl::channel::{capacity_kernel, ChannelSpec};
use depctl::copula::{self, CopulaSpec, DEFAULT_GRID};
use depctl::sim::{self, ArrivalModel, Experiment, ExperimentSettings, SimulationSettings};
use depctl::spectral::{self, IncrementLaw, MapKernel, Pmf};

create_exception!(depctl, DepctlError, PyValueError);

fn err(e: depctl::Error) -> PyErr {
    DepctlError::new_err(e.to_string())
}

fn law_from_py(obj: &Bound<'_, PyAny>) -> PyResult<IncrementLaw> {
    if let Ok(x) = obj.extract::<f64>() {
        return Ok(IncrementLaw::Constant(x));
    }
    let (values, probs): (Vec<f64>, Vec<f64>) = obj.extract().map_err(|_| {
        PyValueError::new_err("increment law must be a float or a (values, probs) pair")
    })?;
    Ok(IncrementLaw::DiscretePmf(Pmf::new(values, probs).map_err(err)?))
}

/// Markov additive kernel: a finite modulating chain whose transitions emit
/// increments.
#[pyclass(name = "Kernel", module = "depctl", frozen)]
struct Kernel {
    inner: MapKernel,
}

#[pymethods]
impl Kernel {
    /// `increments[i][j]` is the law emitted on the transition `i -> j`.
    /// The chain starts in `initial`, or in its stationary law if omitted.
    #[new]
    #[pyo3(signature = (transition, increments, initial=None, labels=None))]
    fn new(
        transition: Vec<Vec<f64>>,
        increments: Vec<Vec<Bound<'_, PyAny>>>,
        initial: Option<Vec<f64>>,
        labels: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let n = transition.len();
        let laws = increments
            .iter()
            .map(|row| row.iter().map(law_from_py).collect::<PyResult<Vec<_>>>())
            .collect::<PyResult<Vec<_>>>()?;
        let labels = labels.unwrap_or_else(|| (0..n).map(|i| format!("s{i}")).collect());
        let start = initial.clone().unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
        let mut inner = MapKernel::new(labels, transition, laws, start).map_err(err)?;
        if initial.is_none() {
            inner = inner.with_initial(inner.stationary().to_vec()).map_err(err)?;
        }
        Ok(Kernel { inner })
    }

    /// Deterministic increment `value` per slot.
    #[staticmethod]
    fn constant(value: f64) -> PyResult<Self> {
        Ok(Kernel {
            inner: MapKernel::constant(value).map_err(err)?,
        })
    }

    /// I.i.d. increments with the given finite law.
    #[staticmethod]
    fn iid(values: Vec<f64>, probs: Vec<f64>) -> PyResult<Self> {
        let law = IncrementLaw::DiscretePmf(Pmf::new(values, probs).map_err(err)?);
        Ok(Kernel {
            inner: MapKernel::iid(law).map_err(err)?,
        })
    }

    /// Rayleigh block-fading capacity in bits per slot; `snr[i][j]` applies
    /// on the power-state transition `i -> j`.
    #[staticmethod]
    fn capacity(transition: Vec<Vec<f64>>, bandwidth: f64, snr: Vec<Vec<f64>>) -> PyResult<Self> {
        let labels = (0..snr.len()).map(|i| format!("p{i}")).collect();
        let channel = ChannelSpec::new(bandwidth, snr, labels).map_err(err)?;
        Ok(Kernel {
            inner: capacity_kernel(transition, &channel).map_err(err)?,
        })
    }

    #[getter]
    fn n_states(&self) -> usize {
        self.inner.n_states()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn transition(&self) -> Vec<Vec<f64>> {
        self.inner.transition_rows()
    }

    #[getter]
    fn initial(&self) -> Vec<f64> {
        self.inner.initial().to_vec()
    }

    #[getter]
    fn stationary(&self) -> Vec<f64> {
        self.inner.stationary().to_vec()
    }

    /// Log of the Perron root of the tilted kernel.
    fn cgf(&self, theta: f64) -> PyResult<f64> {
        spectral::cgf(&self.inner, theta).map_err(err)
    }

    fn cgf_derivative(&self, theta: f64) -> PyResult<f64> {
        spectral::cgf_derivative(&self.inner, theta).map_err(err)
    }

    fn mean_rate(&self) -> PyResult<f64> {
        spectral::mean_rate(&self.inner).map_err(err)
    }

    /// Dict with `kappa`, right eigenvector `h`, left eigenvector `v` and
    /// stationary law `pi`.
    fn perron<'py>(&self, py: Python<'py>, theta: f64) -> PyResult<Bound<'py, PyDict>> {
        let s = spectral::perron(&self.inner, theta).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("theta", s.theta)?;
        d.set_item("kappa", s.kappa)?;
        d.set_item("h", s.h)?;
        d.set_item("v", s.v)?;
        d.set_item("pi", s.pi)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Kernel(n_states={})", self.inner.n_states())
    }
}

/// Bivariate copula.
#[pyclass(name = "Copula", module = "depctl", frozen)]
struct Copula {
    inner: CopulaSpec,
}

#[pymethods]
impl Copula {
    #[staticmethod]
    fn comonotone() -> Self {
        Copula { inner: CopulaSpec::M }
    }

    #[staticmethod]
    fn countermonotone() -> Self {
        Copula { inner: CopulaSpec::W }
    }

    #[staticmethod]
    fn product() -> Self {
        Copula { inner: CopulaSpec::P }
    }

    /// Mixture `w W + p P + m M`.
    #[staticmethod]
    fn frechet(w: f64, p: f64, m: f64) -> PyResult<Self> {
        Ok(Copula {
            inner: CopulaSpec::frechet(w, p, m).map_err(err)?,
        })
    }

    /// One-parameter family: `alpha M + (1 - alpha) P` for `alpha >= 0`,
    /// `-alpha W + (1 + alpha) P` otherwise.
    #[staticmethod]
    fn frechet1(alpha: f64) -> PyResult<Self> {
        Ok(Copula {
            inner: CopulaSpec::one_param_frechet(alpha).map_err(err)?,
        })
    }

    #[staticmethod]
    fn gaussian(rho: f64) -> PyResult<Self> {
        Ok(Copula {
            inner: CopulaSpec::gaussian(rho).map_err(err)?,
        })
    }

    fn __call__(&self, u: f64, v: f64) -> PyResult<f64> {
        self.inner.eval(u, v).map_err(err)
    }

    /// Markov product `self * other`, tabulated on a `grid` x `grid` lattice
    /// unless both factors are closed under the product.
    #[pyo3(signature = (other, grid=DEFAULT_GRID))]
    fn star(&self, other: &Copula, grid: usize) -> PyResult<Copula> {
        Ok(Copula {
            inner: copula::star(&self.inner, &other.inner, grid).map_err(err)?,
        })
    }

    fn __repr__(&self) -> String {
        match &self.inner {
            CopulaSpec::Grid(_) => "Copula(grid)".into(),
            other => format!("Copula({other:?})"),
        }
    }
}

/// Transition matrix whose one-step joint law has `copula` over the state
/// ladder of `varpi`, and the next state law.
#[pyfunction]
fn transition_from_copula(copula: &Copula, varpi: Vec<f64>) -> PyResult<(Vec<Vec<f64>>, Vec<f64>)> {
    copula::transition_from_copula(&copula.inner, &varpi).map_err(err)
}

/// `(transitions, state laws)` of one controlled dimension.
type PlanMatrices = (Vec<Vec<Vec<f64>>>, Vec<Vec<f64>>);

/// Transition matrices and state laws of one controlled dimension. A single
/// copula is reused at every step.
#[pyfunction]
fn dependence_control(
    copulas: Vec<PyRef<'_, Copula>>,
    varpi: Vec<f64>,
    horizon: usize,
) -> PyResult<PlanMatrices> {
    let seq = copulas.iter().map(|c| c.inner.clone()).collect();
    let mut plan = copula::dependence_control(&[seq], &[varpi], horizon).map_err(err)?;
    let dim = plan.dimensions.remove(0);
    Ok((dim.transitions, dim.distributions))
}

/// Positive root of `kappa_A(theta) + kappa_S(-theta) = 0`.
#[pyfunction]
fn stability_root(arrival: &Kernel, service: &Kernel) -> PyResult<f64> {
    Ok(spectral::stability_root(&arrival.inner, &service.inner)
        .map_err(err)?
        .theta_star)
}

/// `(delay_rate, backlog_rate)`.
#[pyfunction]
fn decay_rates(arrival: &Kernel, service: &Kernel) -> PyResult<(f64, f64)> {
    bounds::decay_rates(&arrival.inner, &service.inner).map_err(err)
}

fn averaged_rows(reports: Vec<BoundReport>) -> Vec<(f64, f64, f64)> {
    bounds::averaged(&reports)
        .into_iter()
        .map(|r| (r.level, r.lower, r.upper))
        .collect()
}

/// `(level, lower, upper)` bounds on `P(D > d)`, averaged over initial states.
#[pyfunction]
fn delay_bounds(arrival: &Kernel, service: &Kernel, levels: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(averaged_rows(
        bounds::delay_bounds(&arrival.inner, &service.inner, &levels).map_err(err)?,
    ))
}

/// `(level, lower, upper)` bounds on `P(B > b)`, averaged over initial states.
#[pyfunction]
fn backlog_bounds(arrival: &Kernel, service: &Kernel, levels: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(averaged_rows(
        bounds::backlog_bounds(&arrival.inner, &service.inner, &levels).map_err(err)?,
    ))
}

/// Delay bounds for a constant arrival rate `lam`.
#[pyfunction]
fn constant_arrival_bounds(lam: f64, service: &Kernel, levels: Vec<f64>) -> PyResult<Vec<(f64, f64, f64)>> {
    Ok(averaged_rows(
        bounds::constant_arrival_bounds(lam, &service.inner, &levels).map_err(err)?,
    ))
}

/// Finite-horizon delay bound; dict with `theta`, `theta_y`, `y_gamma`,
/// `branch` and `bound`.
#[pyfunction]
fn horizon_delay_bound<'py>(
    py: Python<'py>,
    arrival: &Kernel,
    service: &Kernel,
    y: f64,
    d: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = bounds::horizon_delay_bound(&arrival.inner, &service.inner, y, d).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("theta", r.theta)?;
    out.set_item("theta_y", r.theta_y)?;
    out.set_item("y_gamma", r.y_gamma)?;
    out.set_item("branch", r.branch.to_string())?;
    out.set_item("bound", r.bound)?;
    Ok(out)
}

/// Upper bound on the delay-constrained capacity; dict with `bound`,
/// `theta` and `asymptotic_cap`.
#[pyfunction]
fn dcc_upper<'py>(
    py: Python<'py>,
    arrival: &Kernel,
    service: &Kernel,
    d: f64,
    epsilon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = bounds::dcc_upper(&arrival.inner, &service.inner, d, epsilon).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("bound", r.bound)?;
    out.set_item("theta", r.theta)?;
    out.set_item("asymptotic_cap", r.asymptotic_cap)?;
    Ok(out)
}

/// Backlog and virtual delay at `horizon` for each replication. `arrival`
/// is a constant rate or a `Kernel`.
#[pyfunction]
fn simulate_queue(
    arrival: &Bound<'_, PyAny>,
    service: &Kernel,
    replications: u64,
    horizon: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let model = match arrival.extract::<f64>() {
        Ok(rate) => ArrivalModel::Constant(rate),
        Err(_) => ArrivalModel::Kernel(arrival.extract::<PyRef<'_, Kernel>>()?.inner.clone()),
    };
    let settings = SimulationSettings {
        replications,
        horizon,
        seed,
    };
    let s = py_detach(arrival.py(), || sim::simulate_queue(&model, &service.inner, settings))?;
    Ok((s.backlog, s.delay))
}

fn py_detach<T: Send>(py: Python<'_>, f: impl Send + FnOnce() -> depctl::Result<T>) -> PyResult<T> {
    py.detach(f).map_err(err)
}

/// `(level, p_hat, std_err, hits)` for each level.
#[pyfunction]
fn tail_estimates(samples: Vec<f64>, levels: Vec<f64>) -> Vec<(f64, f64, f64, u64)> {
    sim::tail_from_samples(&samples, &levels)
        .into_iter()
        .map(|e| (e.level, e.p_hat, e.std_err, e.hits))
        .collect()
}

/// Whether `X <=cx Y` for two finite laws.
#[pyfunction]
fn convex_order_leq(x_values: Vec<f64>, x_probs: Vec<f64>, y_values: Vec<f64>, y_probs: Vec<f64>) -> PyResult<bool> {
    let x = Pmf::new(x_values, x_probs).map_err(err)?;
    let y = Pmf::new(y_values, y_probs).map_err(err)?;
    Ok(sim::convex_order_leq(&x, &y))
}

/// `(mean, std_err)` of the exponential martingale at `horizon`.
#[pyfunction]
fn martingale_check(kernel: &Kernel, theta: f64, horizon: usize, replications: u64, seed: u64) -> PyResult<(f64, f64)> {
    let r = sim::martingale_check(&kernel.inner, theta, horizon, replications, seed).map_err(err)?;
    Ok((r.mean, r.std_err))
}

/// Runs a named ordering experiment. Returns a dict with `variants` (in the
/// expected non-increasing rate order), `rates` as `(variant, seed,
/// empirical, analytic)` tuples, and `direction_ok`.
#[pyfunction]
#[pyo3(signature = (name, seeds=vec![1, 2, 3], replications=200_000, horizon=200))]
fn ordering_experiment<'py>(
    py: Python<'py>,
    name: &str,
    seeds: Vec<u64>,
    replications: u64,
    horizon: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let experiment: Experiment = name.parse().map_err(err)?;
    let settings = ExperimentSettings {
        seeds,
        replications,
        horizon,
        ..ExperimentSettings::default()
    };
    let r = py_detach(py, || sim::ordering_experiment(experiment, &settings))?;
    let rates: Vec<(String, u64, Option<f64>, f64)> = r
        .rates
        .iter()
        .map(|e| (e.variant.clone(), e.seed, e.empirical(), e.analytic))
        .collect();
    let out = PyDict::new(py);
    out.set_item("experiment", r.experiment.to_string())?;
    out.set_item("variants", r.variants.clone())?;
    out.set_item("rates", rates)?;
    out.set_item("direction_ok", r.direction_ok())?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "depctl")]
fn depctl_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("DepctlError", m.py().get_type::<DepctlError>())?;
    m.add_class::<Kernel>()?;
    m.add_class::<Copula>()?;
    m.add_function(wrap_pyfunction!(transition_from_copula, m)?)?;
    m.add_function(wrap_pyfunction!(dependence_control, m)?)?;
    m.add_function(wrap_pyfunction!(stability_root, m)?)?;
    m.add_function(wrap_pyfunction!(decay_rates, m)?)?;
    m.add_function(wrap_pyfunction!(delay_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(backlog_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(constant_arrival_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_delay_bound, m)?)?;
    m.add_function(wrap_pyfunction!(dcc_upper, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_queue, m)?)?;
    m.add_function(wrap_pyfunction!(tail_estimates, m)?)?;
    m.add_function(wrap_pyfunction!(convex_order_leq, m)?)?;
    m.add_function(wrap_pyfunction!(martingale_check, m)?)?;
    m.add_function(wrap_pyfunction!(ordering_experiment, m)?)?;
    Ok(())
}
