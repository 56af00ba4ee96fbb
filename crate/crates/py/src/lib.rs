//! Python bindings for `bspower`.
//!
//! Infeasible transmit powers are returned as `math.inf`. Library errors
//! surface as `ValueError`, file errors as `OSError`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bspower::config::{RateGrid, RunConfig};
use bspower::montecarlo::{gain_report, run_sweep, run_sweep_with_threads};
use bspower::{linkmodel, optimizer, powermodel, schemes, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

#[pyclass(name = "PowerModelParams", frozen, from_py_object, module = "bspower")]
#[derive(Clone, Copy)]
struct PyPowerModel(bspower::PowerModelParams);

#[pymethods]
impl PyPowerModel {
    /// Defaults are the macro-cell values of the reference scenario.
    #[new]
    #[pyo3(signature = (p0_w=None, m_slope=None, p_sleep_w=None, p_max_tx_w=None))]
    fn new(
        p0_w: Option<f64>,
        m_slope: Option<f64>,
        p_sleep_w: Option<f64>,
        p_max_tx_w: Option<f64>,
    ) -> PyResult<Self> {
        let d = bspower::PowerModelParams::default();
        bspower::PowerModelParams::new(
            p0_w.unwrap_or(d.p0_w()),
            m_slope.unwrap_or(d.m_slope()),
            p_sleep_w.unwrap_or(d.p_sleep_w()),
            p_max_tx_w.unwrap_or(d.p_max_tx_w()),
        )
        .map(Self)
        .map_err(py_err)
    }

    #[getter]
    fn p0_w(&self) -> f64 {
        self.0.p0_w()
    }

    #[getter]
    fn m_slope(&self) -> f64 {
        self.0.m_slope()
    }

    #[getter]
    fn p_sleep_w(&self) -> f64 {
        self.0.p_sleep_w()
    }

    #[getter]
    fn p_max_tx_w(&self) -> f64 {
        self.0.p_max_tx_w()
    }

    #[getter]
    fn p_max_supply_w(&self) -> f64 {
        self.0.p_max_supply_w()
    }

    fn supply_power_active(&self, p_tx_w: f64) -> PyResult<f64> {
        powermodel::supply_power_active(p_tx_w, &self.0).map_err(py_err)
    }

    fn supply_power_dtx(&self, t: f64, p_tx_active_w: f64) -> PyResult<f64> {
        powermodel::supply_power_dtx(t, p_tx_active_w, &self.0).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "PowerModelParams(p0_w={}, m_slope={}, p_sleep_w={}, p_max_tx_w={})",
            self.0.p0_w(),
            self.0.m_slope(),
            self.0.p_sleep_w(),
            self.0.p_max_tx_w()
        )
    }
}

#[pyclass(
    name = "ChannelRealization",
    frozen,
    from_py_object,
    module = "bspower"
)]
#[derive(Clone, Copy)]
struct PyChannel(bspower::ChannelRealization);

#[pymethods]
impl PyChannel {
    #[new]
    #[pyo3(signature = (g1, g2, noise_w=1e-13, bandwidth_hz=10e6))]
    fn new(g1: f64, g2: f64, noise_w: f64, bandwidth_hz: f64) -> PyResult<Self> {
        bspower::ChannelRealization::new(g1, g2, noise_w, bandwidth_hz)
            .map(Self)
            .map_err(py_err)
    }

    #[getter]
    fn g1(&self) -> f64 {
        self.0.g1
    }

    #[getter]
    fn g2(&self) -> f64 {
        self.0.g2
    }

    #[getter]
    fn noise_w(&self) -> f64 {
        self.0.noise_w
    }

    #[getter]
    fn bandwidth_hz(&self) -> f64 {
        self.0.bandwidth_hz
    }

    fn swapped(&self) -> Self {
        Self(self.0.swapped())
    }

    fn __repr__(&self) -> String {
        format!(
            "ChannelRealization(g1={:e}, g2={:e}, noise_w={:e}, bandwidth_hz={:e})",
            self.0.g1, self.0.g2, self.0.noise_w, self.0.bandwidth_hz
        )
    }
}

fn settings(mu_tolerance: Option<f64>) -> PyResult<optimizer::OptimizerSettings> {
    let d = optimizer::OptimizerSettings::default();
    match mu_tolerance {
        None => Ok(d),
        Some(tol) => optimizer::OptimizerSettings::new(
            tol,
            d.t_grid_size,
            d.refine_iterations,
            d.grid_resolution_oracle,
        )
        .map_err(py_err),
    }
}

fn pm_or_default(pm: Option<PyPowerModel>) -> bspower::PowerModelParams {
    pm.map(|p| p.0).unwrap_or_default()
}

/// Total transmit power with link 1 holding the share `mu`.
#[pyfunction]
fn system_tx_power(sigma_min: f64, mu: f64, g1: f64, g2: f64, noise_w: f64) -> PyResult<f64> {
    let w = bspower::Weighting::new(mu).map_err(py_err)?;
    Ok(linkmodel::system_tx_power(sigma_min, w, g1, g2, noise_w).or_inf())
}

/// Returns `(mu_star, p_tx_w)`.
#[pyfunction]
#[pyo3(signature = (sigma_min, g1, g2, noise_w, mu_tolerance=None))]
fn optimal_mu(
    sigma_min: f64,
    g1: f64,
    g2: f64,
    noise_w: f64,
    mu_tolerance: Option<f64>,
) -> PyResult<(f64, f64)> {
    let (mu, p) = optimizer::optimal_mu(sigma_min, g1, g2, noise_w, &settings(mu_tolerance)?)
        .map_err(py_err)?;
    Ok((mu.mu(), p.or_inf()))
}

/// Returns a dict with `mu`, `t`, `p_tx_w`, `p_supply_w` and `feasible`.
#[pyfunction]
#[pyo3(signature = (sigma_min, channel, pm=None, mu_tolerance=None))]
fn optimal_mu_t<'py>(
    py: Python<'py>,
    sigma_min: f64,
    channel: PyChannel,
    pm: Option<PyPowerModel>,
    mu_tolerance: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let pm = pm_or_default(pm);
    let sol = optimizer::optimal_mu_t(sigma_min, &channel.0, &pm, &settings(mu_tolerance)?)
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("mu", sol.allocation.mu())?;
    d.set_item("t", sol.allocation.t())?;
    d.set_item("p_tx_w", sol.p_tx.or_inf())?;
    d.set_item("p_supply_w", sol.p_supply_w)?;
    d.set_item("feasible", sol.feasible)?;
    Ok(d)
}

/// Evaluates one scheme (e.g. `"RS_PC_DTX"`) at a per-user rate.
#[pyfunction]
#[pyo3(signature = (scheme, channel, rate_bps, pm=None, sota_load="onoff_occupancy"))]
fn evaluate_scheme<'py>(
    py: Python<'py>,
    scheme: &str,
    channel: PyChannel,
    rate_bps: f64,
    pm: Option<PyPowerModel>,
    sota_load: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let id: schemes::SchemeId = scheme
        .parse()
        .map_err(|_| PyValueError::new_err(format!("unknown scheme `{scheme}`")))?;
    let sota_load = schemes::SotaLoad::parse(sota_load)
        .ok_or_else(|| PyValueError::new_err(format!("unknown sota_load `{sota_load}`")))?;
    let ctx = schemes::SchemeContext {
        pm: pm_or_default(pm),
        sota_load,
        ..Default::default()
    };
    let qos = linkmodel::QosTarget::from_rate(rate_bps, channel.0.bandwidth_hz).map_err(py_err)?;
    let r = schemes::evaluate(id, &channel.0, &qos, &ctx).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("scheme", r.scheme.name())?;
    d.set_item("p_supply_w", r.p_supply_w)?;
    d.set_item("p_tx_w", r.p_tx_w)?;
    d.set_item("mu", r.allocation.mu())?;
    d.set_item("t", r.allocation.t())?;
    d.set_item("outage", r.outage)?;
    Ok(d)
}

/// Curves of one sweep.
#[pyclass(name = "SweepResult", frozen, module = "bspower")]
struct PySweep(Vec<bspower::SweepCurve>);

fn opt_list(xs: impl Iterator<Item = Option<f64>>) -> Vec<f64> {
    xs.map(|x| x.unwrap_or(f64::NAN)).collect()
}

#[pymethods]
impl PySweep {
    fn schemes(&self) -> Vec<&'static str> {
        self.0.iter().map(|c| c.scheme.name()).collect()
    }

    /// Column lists for one scheme; absent means are NaN.
    fn curve<'py>(&self, py: Python<'py>, scheme: &str) -> PyResult<Bound<'py, PyDict>> {
        let c = self
            .0
            .iter()
            .find(|c| c.scheme.name() == scheme)
            .ok_or_else(|| PyValueError::new_err(format!("scheme `{scheme}` not in this sweep")))?;
        let d = PyDict::new(py);
        d.set_item(
            "rate_bps",
            c.points.iter().map(|p| p.rate_bps).collect::<Vec<_>>(),
        )?;
        d.set_item(
            "mean_supply_w",
            opt_list(c.points.iter().map(|p| p.mean_supply_w)),
        )?;
        d.set_item(
            "outage_prob",
            c.points.iter().map(|p| p.outage_prob).collect::<Vec<_>>(),
        )?;
        d.set_item("mean_mu", opt_list(c.points.iter().map(|p| p.mean_mu)))?;
        d.set_item("mean_t", opt_list(c.points.iter().map(|p| p.mean_t)))?;
        d.set_item(
            "n_feasible",
            c.points.iter().map(|p| p.n_feasible).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }

    /// Gain over SOTA per scheme: `{"low_load_rate_bps", "high_load_rate_bps",
    /// "schemes": {name: {"gain_db", "low_load_gain_db", "high_load_gain_db"}}}`.
    fn gain_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rep = gain_report(&self.0).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("rates_bps", rep.rates_bps.clone())?;
        d.set_item("low_load_rate_bps", rep.low_load_rate_bps)?;
        d.set_item("high_load_rate_bps", rep.high_load_rate_bps)?;
        let per = PyDict::new(py);
        for g in &rep.schemes {
            let e = PyDict::new(py);
            e.set_item("gain_db", opt_list(g.gain_db.iter().copied()))?;
            e.set_item("low_load_gain_db", g.low_load_gain_db)?;
            e.set_item("high_load_gain_db", g.high_load_gain_db)?;
            per.set_item(g.scheme.name(), e)?;
        }
        d.set_item("schemes", per)?;
        Ok(d)
    }
}

/// Runs a Monte-Carlo sweep. `config` is key-value text as accepted by
/// `bspower --config`; keyword arguments override it.
#[pyfunction]
#[pyo3(signature = (config=None, iterations=None, seed=None, rates=None, schemes=None, threads=None))]
fn sweep(
    py: Python<'_>,
    config: Option<&str>,
    iterations: Option<usize>,
    seed: Option<u64>,
    rates: Option<Vec<f64>>,
    schemes: Option<Vec<String>>,
    threads: Option<usize>,
) -> PyResult<PySweep> {
    let mut cfg = match config {
        Some(text) => RunConfig::parse(text).map_err(py_err)?,
        None => RunConfig::default(),
    };
    if let Some(n) = iterations {
        cfg.iterations = n;
    }
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(r) = rates {
        cfg.rate_grid = RateGrid::List(r);
    }
    if let Some(list) = schemes {
        cfg.schemes = bspower::config::parse_scheme_list(&list.join(",")).map_err(py_err)?;
    }
    let sim = cfg.to_simulation().map_err(py_err)?;
    let curves = py
        .detach(|| match threads {
            Some(n) => run_sweep_with_threads(&sim, n),
            None => run_sweep(&sim),
        })
        .map_err(py_err)?;
    Ok(PySweep(curves))
}

#[pymodule(name = "bspower")]
pub fn bspower_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyPowerModel>()?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PySweep>()?;
    m.add_function(wrap_pyfunction!(system_tx_power, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_mu, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_mu_t, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_scheme, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
