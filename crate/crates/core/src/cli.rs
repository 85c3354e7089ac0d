//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or input parse error, 3 numeric
//! failure, 4 unstable queue, 5 incompatible copula.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{
    averaged, backlog_bounds, constant_arrival_backlog_bounds, constant_arrival_bounds,
    dcc_upper, delay_bounds, horizon_backlog_bound, horizon_delay_bound, BoundReport,
};
use crate::channel::controlled_capacity_process;
use crate::config::{parse_metric, ExperimentConfig};
use crate::output::{fixed, num, read_numeric_csv, write_file, Table};
use crate::sim::stats::{correlation_p_value, lag_correlation, mean_and_se, two_sided_p};
use crate::sim::{
    convex_order_leq, decay_fit, ordering_experiment, supermodular_battery, tail_estimate,
    ArrivalModel, Experiment, ExperimentReport, ExperimentSettings, Metric, OrderReport,
    SimulationSettings, MIN_HITS,
};
use crate::spectral::{cgf_derivative_at, perron, MapKernel, Pmf};
use crate::Error;

pub const EXIT_PARSE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;
pub const EXIT_COPULA: i32 = 5;

const DEFAULT_REPLICATIONS: u64 = 100_000;
const DEFAULT_HORIZON: usize = 1000;
const DEFAULT_RUNS: u64 = 100;

#[derive(Debug, Parser)]
#[command(name = "depctl", version, about = "Tail bounds, dependence control and simulation for MAP queues")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perron spectra of the arrival and service kernels.
    Spectral {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
        theta: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic delay, backlog, finite-horizon and capacity bounds.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "delay")]
        mode: BoundsMode,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Horizon multiplier for `--mode horizon`.
        #[arg(long)]
        y: Option<f64>,
        /// Violation probability for `--mode dcc`.
        #[arg(long)]
        epsilon: Option<f64>,
        /// `delay` or `backlog` for `--mode horizon`.
        #[arg(long, default_value = "delay")]
        metric: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Transition matrices extracted from the temporal copulas.
    Control {
        #[arg(long)]
        config: PathBuf,
        /// Fixed-point rendering instead of 17 significant digits.
        #[arg(long)]
        decimals: Option<usize>,
        /// Also write a TOML kernel fragment here.
        #[arg(long)]
        fragment: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo tails joined with the analytic bounds, or capacity paths.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convex or supermodular order checks, or a named ordering experiment.
    Ordercheck {
        #[arg(long, requires = "y", conflicts_with = "experiment")]
        x: Option<PathBuf>,
        #[arg(long, requires = "x")]
        y: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "pmf")]
        kind: InputKind,
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundsMode {
    Delay,
    Backlog,
    Horizon,
    Dcc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// Two columns: value, probability.
    Pmf,
    /// One sample vector per row.
    Samples,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_PARSE,
            message: message.into(),
        }
    }

    fn during(what: &str, e: Error) -> Self {
        let mut f = Failure::from(e);
        f.message = format!("{what}: {}", f.message);
        f
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Config(_) | Error::UnknownExperiment(_) | Error::InvalidArgument(_) => EXIT_PARSE,
            Error::InvalidKernel(_) | Error::InvalidLaw(_) | Error::DimensionMismatch { .. } => {
                EXIT_PARSE
            }
            Error::LengthMismatch { .. } => EXIT_PARSE,
            Error::UnstableQueue { .. } => EXIT_UNSTABLE,
            Error::IncompatibleCopula { .. } | Error::InvalidCopula(_) | Error::ZeroMassState(_) => {
                EXIT_COPULA
            }
            _ => EXIT_NUMERIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Parse `args` (program name first) and run, writing results to `out` and
/// diagnostics to `err`. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_PARSE } else { 0 };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match run(cli, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Spectral { config, theta, out: dir } => {
            let cfg = load(&config)?;
            let table = spectral_table(&cfg, &theta)?;
            emit(&table.to_csv(), dir.or(cfg.output_dir()), "spectral.csv", out, err)
        }
        Command::Bounds {
            config,
            mode,
            levels,
            y,
            epsilon,
            metric,
            out: dir,
        } => {
            let cfg = load(&config)?;
            let levels = levels
                .or_else(|| cfg.simulation().levels)
                .unwrap_or_else(|| (1..=10).map(f64::from).collect());
            let table = bounds_table(&cfg, mode, &levels, y, epsilon, &metric)?;
            let name = format!("bounds-{}.csv", mode_name(mode));
            emit(&table.to_csv(), dir.or(cfg.output_dir()), &name, out, err)
        }
        Command::Control {
            config,
            decimals,
            fragment,
            out: dir,
        } => {
            let cfg = load(&config)?;
            let (table, frag) = control_table(&cfg, decimals)?;
            if let Some(path) = fragment {
                write_file(&path, &frag)?;
            }
            emit(&table.to_csv(), dir.or(cfg.output_dir()), "control.csv", out, err)
        }
        Command::Simulate {
            config,
            seed,
            levels,
            out: dir,
        } => {
            let cfg = load(&config)?;
            let (table, summary) = simulate_table(&cfg, seed, levels)?;
            let dir = dir.or(cfg.output_dir());
            let has_dir = dir.is_some();
            emit(&table.to_csv(), dir, "simulate.csv", out, err)?;
            let _ = if has_dir {
                out.write_all(summary.as_bytes())
            } else {
                err.write_all(summary.as_bytes())
            };
            Ok(())
        }
        Command::Ordercheck {
            x,
            y,
            kind,
            experiment,
            config,
            seed,
            out: dir,
        } => {
            let cfg = match &config {
                Some(p) => Some(load(p)?),
                None => None,
            };
            let text = match (x, y, experiment) {
                (Some(x), Some(y), None) => ordercheck_files(&x, &y, kind)?,
                (None, None, name) => {
                    let name = name
                        .or_else(|| cfg.as_ref().and_then(|c| c.experiment.as_ref().map(|e| e.name.clone())))
                        .ok_or_else(|| Failure::parse("ordercheck needs --x/--y or an experiment name"))?;
                    ordercheck_experiment(&name, cfg.as_ref(), seed)?
                }
                _ => return Err(Failure::parse("ordercheck needs both --x and --y")),
            };
            let dir = dir.or(cfg.and_then(|c| c.output_dir()));
            emit(&text, dir, "ordercheck.txt", out, err)
        }
    }
}

fn load(path: &Path) -> CliResult<ExperimentConfig> {
    ExperimentConfig::from_path(path).map_err(Failure::from)
}

fn emit(text: &str, dir: Option<PathBuf>, name: &str, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    match dir {
        Some(d) => {
            let path = d.join(name);
            write_file(&path, text)?;
            let _ = writeln!(err, "wrote {}", path.display());
        }
        None => {
            out.write_all(text.as_bytes())
                .map_err(|e| Failure::parse(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}

fn mode_name(mode: BoundsMode) -> &'static str {
    match mode {
        BoundsMode::Delay => "delay",
        BoundsMode::Backlog => "backlog",
        BoundsMode::Horizon => "horizon",
        BoundsMode::Dcc => "dcc",
    }
}

fn spectrum_columns(prefix: &str, n: usize, header: &mut Vec<String>) {
    header.push(format!("kappa_{prefix}"));
    header.push(format!("dkappa_{prefix}"));
    for field in ["h", "v", "pi"] {
        for i in 0..n {
            header.push(format!("{field}_{prefix}_{i}"));
        }
    }
}

fn spectrum_row(kernel: &MapKernel, theta: f64, what: &str, row: &mut Vec<String>) -> CliResult<f64> {
    let sol = perron(kernel, theta).map_err(|e| Failure::during(&format!("perron({what}, theta={theta})"), e))?;
    let d = cgf_derivative_at(kernel, &sol)
        .map_err(|e| Failure::during(&format!("cgf_derivative({what}, theta={theta})"), e))?;
    row.push(num(sol.kappa));
    row.push(num(d));
    for v in sol.h.iter().chain(&sol.v).chain(&sol.pi) {
        row.push(num(*v));
    }
    Ok(sol.kappa)
}

/// One row per `theta` with `kappa`, its derivative and `h`, `v`, `pi` of
/// each configured process; `stability = kappa_A(theta) + kappa_S(-theta)`
/// when both are present.
pub fn spectral_table(cfg: &ExperimentConfig, thetas: &[f64]) -> CliResult<Table> {
    let arrival = match &cfg.arrival {
        Some(_) => Some(cfg.arrival_kernel()?),
        None => None,
    };
    let service = match &cfg.service {
        Some(_) => Some(cfg.service_kernel()?),
        None => None,
    };
    if arrival.is_none() && service.is_none() {
        return Err(Failure::parse("config has neither [arrival] nor [service]"));
    }
    let mut header = vec!["theta".to_string()];
    if let Some(a) = &arrival {
        spectrum_columns("a", a.n_states(), &mut header);
    }
    if let Some(s) = &service {
        spectrum_columns("s", s.n_states(), &mut header);
    }
    let both = arrival.is_some() && service.is_some();
    if both {
        header.push("stability".into());
    }
    let mut table = Table::new(&header);
    for &theta in thetas {
        let mut row = vec![num(theta)];
        let ka = match &arrival {
            Some(a) => Some(spectrum_row(a, theta, "arrival", &mut row)?),
            None => None,
        };
        if let Some(s) = &service {
            spectrum_row(s, theta, "service", &mut row)?;
        }
        if both {
            let neg = perron(service.as_ref().unwrap(), -theta)
                .map_err(|e| Failure::during(&format!("perron(service, theta={})", -theta), e))?;
            row.push(num(ka.unwrap() + neg.kappa));
        }
        table.push(row);
    }
    Ok(table)
}

fn bound_rows(reports: &[BoundReport]) -> Table {
    let mut t = Table::new(&[
        "level",
        "lower",
        "upper",
        "lower_raw",
        "upper_raw",
        "theta_star",
        "lower_clamped",
        "upper_clamped",
        "conditioning",
    ]);
    for r in reports {
        t.push(vec![
            num(r.level),
            num(r.lower),
            num(r.upper),
            num(r.lower_raw),
            num(r.upper_raw),
            num(r.theta_star),
            r.lower_clamped().to_string(),
            r.upper_clamped().to_string(),
            r.conditioning.to_string(),
        ]);
    }
    t
}

/// Bounds for the configured queue, dispatching to the constant-rate forms
/// when the arrival is constant.
fn tail_bounds(
    arrival: &ArrivalModel,
    service: &MapKernel,
    metric: Metric,
    levels: &[f64],
) -> crate::Result<Vec<BoundReport>> {
    match (arrival, metric) {
        (ArrivalModel::Constant(l), Metric::Delay) => constant_arrival_bounds(*l, service, levels),
        (ArrivalModel::Constant(l), Metric::Backlog) => constant_arrival_backlog_bounds(*l, service, levels),
        (ArrivalModel::Kernel(a), Metric::Delay) => delay_bounds(a, service, levels),
        (ArrivalModel::Kernel(a), Metric::Backlog) => backlog_bounds(a, service, levels),
    }
}

pub fn bounds_table(
    cfg: &ExperimentConfig,
    mode: BoundsMode,
    levels: &[f64],
    y: Option<f64>,
    epsilon: Option<f64>,
    metric: &str,
) -> CliResult<Table> {
    let arrival = cfg.arrival_model()?;
    let service = cfg.service_kernel()?;
    let what = format!("bounds ({})", mode_name(mode));
    match mode {
        BoundsMode::Delay | BoundsMode::Backlog => {
            let metric = if mode == BoundsMode::Delay { Metric::Delay } else { Metric::Backlog };
            let reports = tail_bounds(&arrival, &service, metric, levels).map_err(|e| Failure::during(&what, e))?;
            Ok(bound_rows(&reports))
        }
        BoundsMode::Horizon => {
            let y = y.ok_or_else(|| Failure::parse("--mode horizon needs --y"))?;
            let metric = parse_metric(metric)?;
            let a = cfg.arrival_kernel()?;
            let mut t = Table::new(&[
                "level", "y", "theta", "theta_y", "y_gamma", "branch", "upper", "upper_raw", "upper_clamped",
            ]);
            for &level in levels {
                let r = match metric {
                    Metric::Delay => horizon_delay_bound(&a, &service, y, level),
                    Metric::Backlog => horizon_backlog_bound(&a, &service, y, level),
                }
                .map_err(|e| Failure::during(&what, e))?;
                t.push(vec![
                    num(r.level),
                    num(r.y),
                    num(r.theta),
                    num(r.theta_y),
                    num(r.y_gamma),
                    r.branch.to_string(),
                    num(r.bound),
                    num(r.bound_raw),
                    (r.bound != r.bound_raw).to_string(),
                ]);
            }
            Ok(t)
        }
        BoundsMode::Dcc => {
            let epsilon = epsilon.ok_or_else(|| Failure::parse("--mode dcc needs --epsilon"))?;
            let a = cfg.arrival_kernel()?;
            let mut t = Table::new(&["d", "epsilon", "capacity", "theta", "asymptotic_cap"]);
            for &d in levels {
                let r = dcc_upper(&a, &service, d, epsilon).map_err(|e| Failure::during(&what, e))?;
                t.push(vec![num(r.d), num(r.epsilon), num(r.bound), num(r.theta), num(r.asymptotic_cap)]);
            }
            Ok(t)
        }
    }
}

#[derive(Serialize)]
struct Fragment {
    fragments: Vec<FragmentEntry>,
}

#[derive(Serialize)]
struct FragmentEntry {
    dimension: usize,
    transition: Vec<Vec<f64>>,
    initial: Vec<f64>,
}

/// Long-format transition table `step, dimension, from, to, probability`
/// and a TOML fragment with the first-step kernel of each dimension.
pub fn control_table(cfg: &ExperimentConfig, decimals: Option<usize>) -> CliResult<(Table, String)> {
    let plan = cfg.control_plan()?;
    let render = |x: f64| match decimals {
        Some(d) => fixed(x, d),
        None => num(x),
    };
    let mut t = Table::new(&["step", "dimension", "from", "to", "probability"]);
    for step in 0..plan.horizon {
        for (k, dim) in plan.dimensions.iter().enumerate() {
            for (i, row) in dim.transitions[step].iter().enumerate() {
                for (j, p) in row.iter().enumerate() {
                    t.push(vec![step.to_string(), k.to_string(), i.to_string(), j.to_string(), render(*p)]);
                }
            }
        }
    }
    let fragment = Fragment {
        fragments: plan
            .dimensions
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.transitions.is_empty())
            .map(|(k, d)| FragmentEntry {
                dimension: k,
                transition: d.transitions[0].clone(),
                initial: d.distributions[0].clone(),
            })
            .collect(),
    };
    let text = toml::to_string(&fragment).map_err(|e| Failure::parse(e.to_string()))?;
    Ok((t, text))
}

/// Queue tails with bounds (`kind = "queue"`) or per-run lag-1 capacity
/// correlations of a plan-driven channel (`kind = "capacity"`). Returns the
/// table and a plain-text summary.
pub fn simulate_table(
    cfg: &ExperimentConfig,
    seed: Option<u64>,
    levels: Option<Vec<f64>>,
) -> CliResult<(Table, String)> {
    let sim = cfg.simulation();
    let seed = seed
        .or(sim.seed)
        .ok_or_else(|| Failure::parse("simulation needs a seed ([simulation] seed or --seed)"))?;
    let horizon = sim.horizon.unwrap_or(DEFAULT_HORIZON);
    match sim.kind.as_deref().unwrap_or("queue") {
        "queue" => {
            let arrival = cfg.arrival_model()?;
            let service = cfg.service_kernel()?;
            let metric = sim.metric()?;
            let levels = levels
                .or(sim.levels.clone())
                .unwrap_or_else(|| (0..=10).map(f64::from).collect());
            let settings = SimulationSettings {
                replications: sim.replications.unwrap_or(DEFAULT_REPLICATIONS),
                horizon,
                seed,
            };
            let tails = tail_estimate(&arrival, &service, metric, &levels, settings)
                .map_err(|e| Failure::during("simulate", e))?;
            let mut summary = String::new();
            // a stable queue whose root is out of reach (e.g. no traffic)
            // still gets its empirical tail
            let bounds = match tail_bounds(&arrival, &service, metric, &levels) {
                Ok(b) => averaged(&b),
                Err(e @ Error::UnstableQueue { .. }) => return Err(Failure::during("bounds", e)),
                Err(e) => {
                    summary += &format!("bounds unavailable: {e}\n");
                    Vec::new()
                }
            };
            let mut t = Table::new(&[
                "level", "hits", "replications", "p_hat", "std_err", "lower", "upper", "inside", "reliable",
            ]);
            for (k, e) in tails.iter().enumerate() {
                let (lower, upper, inside) = match bounds.get(k) {
                    Some(b) => {
                        let slack = 3.0 * e.std_err;
                        let inside = e.p_hat >= b.lower - slack && e.p_hat <= b.upper + slack;
                        (b.lower, b.upper, inside.to_string())
                    }
                    None => (f64::NAN, f64::NAN, "n/a".to_string()),
                };
                t.push(vec![
                    num(e.level),
                    e.hits.to_string(),
                    e.replications.to_string(),
                    num(e.p_hat),
                    num(e.std_err),
                    num(lower),
                    num(upper),
                    inside,
                    e.is_reliable().to_string(),
                ]);
            }
            if let Some(fit) = decay_fit(&tails, MIN_HITS) {
                summary += &format!(
                    "empirical decay slope {} over {} levels; theta_star {}\n",
                    num(fit.slope),
                    fit.points,
                    num(bounds.first().map(|b| b.theta_star).unwrap_or(f64::NAN))
                );
            }
            Ok((t, summary))
        }
        "capacity" => {
            let plan = cfg.control_plan()?;
            let channel = cfg
                .channel()?
                .ok_or_else(|| Failure::parse("capacity runs need [service.channel]"))?;
            let runs = sim.runs.unwrap_or(DEFAULT_RUNS);
            let mut t = Table::new(&["run", "lag1_corr", "p_value", "mean_capacity"]);
            let mut corrs = Vec::new();
            let mut means = Vec::new();
            for r in 0..runs {
                let path = controlled_capacity_process(&plan, &channel, horizon, seed, r)
                    .map_err(|e| Failure::during("capacity process", e))?;
                let c = lag_correlation(&path.capacity, 1);
                let mean = *path.transient.last().unwrap_or(&f64::NAN);
                t.push(vec![
                    r.to_string(),
                    num(c),
                    num(correlation_p_value(c, horizon.saturating_sub(1))),
                    num(mean),
                ]);
                corrs.push(c);
                means.push(mean);
            }
            let (mc, sc) = mean_and_se(&corrs);
            let (mm, sm) = mean_and_se(&means);
            let p = if sc > 0.0 { two_sided_p(mc / sc) } else { f64::NAN };
            let summary = format!(
                "mean lag-1 correlation {} (se {}, p {}); transient mean capacity {} (se {})\n",
                num(mc),
                num(sc),
                num(p),
                num(mm),
                num(sm)
            );
            Ok((t, summary))
        }
        other => Err(Failure::parse(format!("unknown simulation kind `{other}`"))),
    }
}

fn read_pmf(path: &Path) -> CliResult<Pmf> {
    let rows = read_numeric_csv(path)?;
    if rows.iter().any(|r| r.len() != 2) {
        return Err(Failure::parse(format!("{}: PMF rows need value,probability", path.display())));
    }
    Pmf::from_atoms(rows.into_iter().map(|r| (r[0], r[1])))
        .map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
}

fn order_text(report: &OrderReport) -> String {
    let mut s = format!(
        "verdict: {} (necessary-condition check, z threshold {})\n",
        report.verdict,
        num(report.z_critical)
    );
    if !report.marginal_mismatch.is_empty() {
        s += &format!("marginal mismatch at coordinates: {:?}\n", report.marginal_mismatch);
    }
    let mut t = Table::new(&["test", "mean_x", "mean_y", "diff", "std_err"]);
    for st in &report.statistics {
        t.push(vec![st.id.clone(), num(st.mean_x), num(st.mean_y), num(st.diff), num(st.std_err)]);
    }
    s + &t.to_csv()
}

pub fn ordercheck_files(x: &Path, y: &Path, kind: InputKind) -> CliResult<String> {
    match kind {
        InputKind::Pmf => {
            let (px, py) = (read_pmf(x)?, read_pmf(y)?);
            let holds = convex_order_leq(&px, &py);
            let mut s = format!("convex order x <=cx y: {}\n", if holds { "holds" } else { "fails" });
            s += &format!("mean_x: {}\nmean_y: {}\n", num(px.mean()), num(py.mean()));
            let mut points: Vec<f64> = px.support().iter().chain(py.support()).copied().collect();
            points.sort_by(f64::total_cmp);
            points.dedup();
            let mut t = Table::new(&["t", "stop_loss_x", "stop_loss_y"]);
            for p in points {
                t.push(vec![num(p), num(px.stop_loss(p)), num(py.stop_loss(p))]);
            }
            Ok(s + &t.to_csv())
        }
        InputKind::Samples => {
            let (sx, sy) = (read_numeric_csv(x)?, read_numeric_csv(y)?);
            let d = sx.first().map(Vec::len).unwrap_or(0);
            if let Some(bad) = sx.iter().chain(&sy).find(|r| r.len() != d) {
                return Err(Failure::parse(format!(
                    "dimension mismatch: {} vs {}",
                    bad.len(),
                    d
                )));
            }
            let report = supermodular_battery(&sx, &sy)?;
            Ok(format!("supermodular order x <=sm y\n{}", order_text(&report)))
        }
    }
}

pub fn experiment_text(report: &ExperimentReport) -> String {
    let mut s = format!(
        "experiment: {}\nmetric: {}\n",
        report.experiment,
        match report.metric {
            Metric::Delay => "delay",
            Metric::Backlog => "backlog",
        }
    );
    s += &format!("expected order of decay rates (non-increasing): {}\n", report.variants.join(" >= "));
    s += &format!(
        "empirical direction on every seed: {} (finite-horizon slopes support, not prove, the asymptotic order)\n",
        if report.direction_ok() { "supported" } else { "not supported" }
    );
    s += &format!(
        "analytic direction: {}\n",
        if report.analytic_direction_ok() { "holds" } else { "fails" }
    );
    for c in &report.convex_checks {
        s += &format!("{}: {}\n", c.label, if c.holds { "holds" } else { "fails" });
    }
    let mut t = Table::new(&["variant", "seed", "empirical_rate", "points", "analytic_rate"]);
    for r in &report.rates {
        t.push(vec![
            r.variant.clone(),
            r.seed.to_string(),
            r.empirical().map(num).unwrap_or_else(|| "nan".into()),
            r.fit.map(|f| f.points.to_string()).unwrap_or_else(|| "0".into()),
            num(r.analytic),
        ]);
    }
    s += &t.to_csv();
    if let Some(order) = &report.order {
        s += &order_text(order);
    }
    s
}

pub fn ordercheck_experiment(name: &str, cfg: Option<&ExperimentConfig>, seed: Option<u64>) -> CliResult<String> {
    let experiment: Experiment = name.parse()?;
    let mut settings = ExperimentSettings::default();
    if let Some(e) = cfg.and_then(|c| c.experiment.as_ref()) {
        if let Some(s) = &e.seeds {
            settings.seeds = s.clone();
        }
        if let Some(r) = e.replications {
            settings.replications = r;
        }
        if let Some(h) = e.horizon {
            settings.horizon = h;
        }
        if let Some(b) = e.battery_samples {
            settings.battery_samples = b;
        }
    }
    if let Some(s) = seed {
        settings.seeds = vec![s];
    }
    let report = ordering_experiment(experiment, &settings).map_err(|e| Failure::during("ordering experiment", e))?;
    Ok(experiment_text(&report))
}
