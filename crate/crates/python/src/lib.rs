//! Python bindings.
//!
//! Usage errors raise `ValueError`, data errors `OSError` and numeric or
//! guard failures `ArithmeticError`.

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cextreme::asymptotics::{
    ekm_cdf_asymptotics, hill_asymptotics, limit_variance_quadrature, moment_asymptotics, MomentCase, SecondOrderParams,
};
use cextreme::estimators::estimate_path as core_estimate_path;
use cextreme::simulation::{run_experiment, ExperimentSpec, KGrid};
use cextreme::{CensoredSample, ErrorKind, EstimatorId, NamedFn, SortedCensoredSample, TailView};

fn to_py(e: cextreme::Error) -> PyErr {
    let msg = e.to_string();
    match e.kind() {
        ErrorKind::Usage => PyValueError::new_err(msg),
        ErrorKind::Data => PyOSError::new_err(msg),
        ErrorKind::Numeric => PyArithmeticError::new_err(msg),
    }
}

fn sorted(z: Vec<f64>, delta: Vec<bool>) -> PyResult<SortedCensoredSample> {
    Ok(CensoredSample::new(z, delta).map_err(to_py)?.sort())
}

/// Reads a `time,status` CSV file into `(z, delta)`.
#[pyfunction]
fn read_csv(path: &str) -> PyResult<(Vec<f64>, Vec<bool>)> {
    let s = CensoredSample::read_csv(path).map_err(to_py)?;
    Ok((s.z().to_vec(), s.delta().to_vec()))
}

/// Kaplan–Meier cdf as `(knots, values)`.
#[pyfunction]
fn kaplan_meier(z: Vec<f64>, delta: Vec<bool>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let cdf = cextreme::kaplan_meier::km_estimate(&sorted(z, delta)?);
    Ok((cdf.knots().to_vec(), cdf.values().to_vec()))
}

/// EKM weights of tail ratios given largest first, and their total mass.
#[pyfunction]
fn ekm_weights(ratios: Vec<f64>, delta: Vec<bool>) -> PyResult<(Vec<f64>, f64)> {
    let view = TailView::from_ratios(ratios, delta).map_err(to_py)?;
    let w = cextreme::ekm::ekm_weights(&view);
    Ok((w.omega().to_vec(), w.total_mass()))
}

/// Extreme value index at a single `k`.
#[pyfunction]
#[pyo3(signature = (z, delta, k, estimator = "moment-censored", normalized = true))]
fn estimate(z: Vec<f64>, delta: Vec<bool>, k: usize, estimator: &str, normalized: bool) -> PyResult<f64> {
    let id: EstimatorId = estimator.parse().map_err(to_py)?;
    let view = sorted(z, delta)?.top_k_view(k).map_err(to_py)?;
    Ok(cextreme::estimators::estimate(&view, id, normalized).map_err(to_py)?.gamma_hat)
}

/// Estimator path over `k_grid` (`"a:b[:step]"`); one dict per `k`.
#[pyfunction]
#[pyo3(signature = (z, delta, k_grid, estimator = "moment-censored", normalized = true, ci = None))]
fn estimate_path<'py>(
    py: Python<'py>,
    z: Vec<f64>,
    delta: Vec<bool>,
    k_grid: &str,
    estimator: &str,
    normalized: bool,
    ci: Option<f64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let id: EstimatorId = estimator.parse().map_err(to_py)?;
    let s = sorted(z, delta)?;
    let grid: KGrid = k_grid.parse().map_err(to_py)?;
    grid.validate(s.len()).map_err(to_py)?;
    let rows = core_estimate_path(&s, id, normalized, grid.values(), ci).map_err(to_py)?;
    rows.into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("k", r.k)?;
            d.set_item("threshold", r.threshold)?;
            d.set_item("gamma_hat", r.gamma_hat)?;
            d.set_item("p_hat", r.p_hat)?;
            d.set_item("var_hat", r.variance_hat)?;
            d.set_item("ci_lo", r.ci.map(|c| c.lo))?;
            d.set_item("ci_hi", r.ci.map(|c| c.hi))?;
            d.set_item("note", r.note)?;
            Ok(d)
        })
        .collect()
}

/// Asymptotic `(bias, variance)` of a law: `hill`, `moment-pos`,
/// `moment-zero`, `moment-neg` or `ekm-cdf`.
#[pyfunction]
#[pyo3(signature = (law, gf = None, gg = None, alpha_f = None, x0 = None, lam = 0.0, rho = 0.0))]
fn asymptotic_law(
    law: &str,
    gf: Option<f64>,
    gg: Option<f64>,
    alpha_f: Option<f64>,
    x0: Option<f64>,
    lam: f64,
    rho: f64,
) -> PyResult<(f64, f64)> {
    let so = SecondOrderParams::with_lambda(lam, rho);
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| PyValueError::new_err(format!("{name} is required")));
    let l = match law {
        "hill" => hill_asymptotics(need(gf, "gf")?, need(gg, "gg")?, &so),
        "moment-pos" => {
            moment_asymptotics(MomentCase::Positive { gamma_f: need(gf, "gf")?, gamma_g: need(gg, "gg")? }, &so)
        }
        "moment-zero" => moment_asymptotics(MomentCase::Zero { alpha_f: need(alpha_f, "alpha_f")? }, &so),
        "moment-neg" => {
            moment_asymptotics(MomentCase::Negative { gamma_f: need(gf, "gf")?, gamma_g: need(gg, "gg")? }, &so)
        }
        "ekm-cdf" => ekm_cdf_asymptotics(need(x0, "x0")?, need(gf, "gf")?, need(gg, "gg")?, &so),
        other => return Err(PyValueError::new_err(format!("unknown law `{other}`"))),
    }
    .map_err(to_py)?;
    Ok((l.bias, l.variance))
}

/// Variance of the limit `W°(φ)` by quadrature.
#[pyfunction]
fn limit_variance(phi: &str, gf: f64, gg: f64) -> PyResult<f64> {
    let phi: NamedFn = phi.parse().map_err(to_py)?;
    limit_variance_quadrature(phi, gf, gg).map_err(to_py)
}

/// Runs a JSON experiment spec and returns the result CSV.
#[pyfunction]
#[pyo3(signature = (spec_json, threads = None))]
fn simulate(py: Python<'_>, spec_json: &str, threads: Option<usize>) -> PyResult<String> {
    let spec = ExperimentSpec::from_json(spec_json).map_err(to_py)?;
    let result = py.detach(|| run_experiment(&spec, threads)).map_err(to_py)?;
    let mut out = Vec::new();
    result.write_csv(&mut out).map_err(to_py)?;
    Ok(String::from_utf8(out).expect("CSV output is UTF-8"))
}

#[pymodule]
fn pycextreme(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(read_csv, m)?)?;
    m.add_function(wrap_pyfunction!(kaplan_meier, m)?)?;
    m.add_function(wrap_pyfunction!(ekm_weights, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_path, m)?)?;
    m.add_function(wrap_pyfunction!(asymptotic_law, m)?)?;
    m.add_function(wrap_pyfunction!(limit_variance, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("DEFAULT_SEED", cextreme::DEFAULT_SEED)?;
    Ok(())
}
