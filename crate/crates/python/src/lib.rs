use lpgronwall::cli::{GronwallConfig, ResolventConfig};
use lpgronwall::error::Error;
use lpgronwall::fixpoint::{abel, banach_toy, linear_volterra, picard_solve};
use lpgronwall::fractional::{fractional_f as frac_f, fractional_f_bound as frac_f_bound, FractionalResolventParams};
use lpgronwall::gronwall::gronwall_bound as bound;
use lpgronwall::quadrature::QuadratureGrid;
use lpgronwall::resolvent::iterated_kernels as tabulate;
use lpgronwall::selftest;
use lpgronwall::specfun::{self, MLParams};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::CertificateDiverges(_) | Error::BudgetExceeded { .. } => PyArithmeticError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyfunction]
fn ln_gamma(x: f64) -> PyResult<f64> {
    specfun::ln_gamma(x).map_err(to_py)
}

#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    specfun::gamma(x).map_err(to_py)
}

#[pyfunction]
fn digamma(x: f64) -> PyResult<f64> {
    specfun::digamma(x).map_err(to_py)
}

#[pyfunction]
fn beta(a: f64, b: f64) -> PyResult<f64> {
    specfun::beta(a, b).map_err(to_py)
}

/// Returns `(value, tail_bound, converged)`.
#[pyfunction]
#[pyo3(signature = (alpha, beta, p, z, tol = 1e-15))]
fn mittag_leffler(alpha: f64, beta: f64, p: f64, z: f64, tol: f64) -> PyResult<(f64, f64, bool)> {
    let v = specfun::mittag_leffler(MLParams::new(alpha, beta, p).map_err(to_py)?, z, tol).map_err(to_py)?;
    Ok((v.sum.to_f64(), v.tail_bound.to_f64(), v.converged))
}

#[pyfunction]
fn fractional_f(alpha: f64, beta: f64, p: f64, n: usize, x: f64, y: f64) -> PyResult<f64> {
    let par = FractionalResolventParams::new(alpha, beta, p).map_err(to_py)?;
    frac_f(&par, n, x, y).map_err(to_py)
}

#[pyfunction]
fn fractional_f_bound(alpha: f64, beta: f64, p: f64, n: usize, x: f64, y: f64) -> PyResult<f64> {
    let par = FractionalResolventParams::new(alpha, beta, p).map_err(to_py)?;
    frac_f_bound(&par, n, x, y).map_err(to_py)
}

/// `[(n, t, s, value), ...]` for a resolvent config given as JSON text.
#[pyfunction]
#[pyo3(signature = (config_json, n, grid_level = 5))]
fn iterated_kernels(config_json: &str, n: usize, grid_level: u32) -> PyResult<Vec<(usize, f64, f64, f64)>> {
    let rc: ResolventConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let grid = match rc.grid {
        Some(nodes) => QuadratureGrid::from_atoms(nodes),
        None => {
            let iv = rc
                .space
                .domain
                .support_interval()
                .ok_or_else(|| PyValueError::new_err("give `grid` for this domain"))?;
            QuadratureGrid::uniform(iv.lo, iv.hi, grid_level)
        }
    }
    .map_err(to_py)?;
    let tab = tabulate(&rc.kernel, &rc.space, rc.p, n, &grid).map_err(to_py)?;
    Ok(tab.entries().map(|(n, t, s, v)| (n, t, s, v.to_f64())).collect())
}

/// `(sharp, sup, tail)` at the point `t` for a Gronwall config given as JSON text.
#[pyfunction]
fn gronwall_bound(config_json: &str, t: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let gc: GronwallConfig = serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let b = bound(&gc.input, &t).map_err(to_py)?;
    Ok((b.sharp.to_f64(), b.sup.to_f64(), b.tail))
}

/// Picard iteration on a built-in problem; returns `(x_hat, bounds, converged)`
/// with `bounds[n]` the certified bound after `n` iterations at the last grid point.
#[pyfunction]
#[pyo3(signature = (problem, param, tol = 1e-8, max_iter = 50, grid_level = 7))]
fn solve(problem: &str, param: f64, tol: f64, max_iter: usize, grid_level: u32) -> PyResult<(Vec<f64>, Vec<f64>, bool)> {
    let pr = match problem {
        "linear_volterra" => linear_volterra(param, grid_level),
        "abel" => abel(param, grid_level),
        "banach" => banach_toy(param),
        other => return Err(PyValueError::new_err(format!("unknown problem {other:?}"))),
    }
    .map_err(to_py)?;
    let run = picard_solve(&pr.op, &pr.x0, tol, max_iter, &[]).map_err(to_py)?;
    let cert = &run.certificate;
    let bounds = (0..=cert.iterates).map(|n| cert.bound(n, 0).to_f64()).collect();
    Ok((run.x_hat, bounds, cert.converged))
}

/// `[(id, name, passed, detail), ...]`
#[pyfunction]
fn run_selftest() -> Vec<(u32, String, bool, String)> {
    selftest::run_all().into_iter().map(|o| (o.id, o.name.to_string(), o.passed, o.detail)).collect()
}

#[pymodule]
#[pyo3(name = "lpgronwall")]
fn lpgronwall_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(ln_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(digamma, m)?)?;
    m.add_function(wrap_pyfunction!(beta, m)?)?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_f, m)?)?;
    m.add_function(wrap_pyfunction!(fractional_f_bound, m)?)?;
    m.add_function(wrap_pyfunction!(iterated_kernels, m)?)?;
    m.add_function(wrap_pyfunction!(gronwall_bound, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_selftest, m)?)?;
    Ok(())
}
