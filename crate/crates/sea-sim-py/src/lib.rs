//! Thin Python surface over the simulation library: enough to resolve a
//! config, run a scenario, and read back metrics without leaving Python.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sea_sim::config::{parse_toml, resolve};
use sea_sim::geometry::LinkGeometry;
use sea_sim::metrics::compute_metrics;

/// Library version string.
#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Derives the dependent linkage quantities from the five primitive
/// lengths. Returns a dict with d6, d7, alpha, sigma.
#[pyfunction]
fn derive_geometry(
    py: Python<'_>,
    d1: f64,
    d2: f64,
    d3: f64,
    d4: f64,
    d5: f64,
) -> PyResult<Py<PyDict>> {
    let g = LinkGeometry::derive(d1, d2, d3, d4, d5)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let out = PyDict::new(py);
    out.set_item("d6", g.d6)?;
    out.set_item("d7", g.d7)?;
    out.set_item("alpha", g.alpha)?;
    out.set_item("sigma", g.sigma)?;
    Ok(out.into())
}

/// Moment arm of the spring about the joint at spring-frame angle theta,
/// for the linkage described by the five primitive lengths.
#[pyfunction]
fn moment_arm(d1: f64, d2: f64, d3: f64, d4: f64, d5: f64, theta: f64) -> PyResult<f64> {
    let g = LinkGeometry::derive(d1, d2, d3, d4, d5)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(g.moment_arm(theta))
}

/// Runs one scenario from config TOML text (same schema as the CLI, empty
/// string for all defaults) and returns the metrics as TOML text.
#[pyfunction]
fn simulate(config_toml: &str) -> PyResult<String> {
    let file = if config_toml.trim().is_empty() {
        None
    } else {
        Some(
            parse_toml(config_toml, "config argument")
                .map_err(|e| PyValueError::new_err(e.to_string()))?,
        )
    };
    let resolved = resolve(file, &[]).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let sim = resolved
        .build_simulation()
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let trace = sim
        .run()
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let metrics = compute_metrics(&trace);
    toml::to_string(&metrics).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn sea_sim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(derive_geometry, m)?)?;
    m.add_function(wrap_pyfunction!(moment_arm, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
