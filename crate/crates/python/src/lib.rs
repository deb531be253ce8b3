//! Python bindings: thin JSON-in/JSON-out wrappers over the simulator and
//! the factorial harness.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use camsim::experiment::{render_text, run_factorial, FactorialSpec, RunDocument};
use camsim::sim::{run_simulation, AgentMode, SimConfig};
use camsim::CaseId;

/// Default simulation configuration as a JSON string.
#[pyfunction]
fn default_config() -> String {
    serde_json::to_string_pretty(&SimConfig::default()).unwrap()
}

fn case_of(config: &SimConfig) -> CaseId {
    let exists = |mode: AgentMode| mode == AgentMode::Real;
    match (exists(config.ctaa_mode), exists(config.strta_mode)) {
        (true, true) => CaseId::BothExist,
        (true, false) => CaseId::CtaaOnly,
        (false, true) => CaseId::StrtaOnly,
        (false, false) => CaseId::NeitherExist,
    }
}

/// Run one simulation from a `SimConfig` JSON string; returns the run
/// document (config echo, metrics, diagnostics) as JSON.
#[pyfunction]
fn run(config_json: &str) -> PyResult<String> {
    let config: SimConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("bad config: {e}")))?;
    let result =
        run_simulation(&config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let doc = RunDocument::from_result(&result, case_of(&config), None)
        .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(serde_json::to_string(&doc).unwrap())
}

/// Run one simulation and return its per-tick mid-price series.
#[pyfunction]
fn mid_series(config_json: &str) -> PyResult<Vec<f64>> {
    let config: SimConfig = serde_json::from_str(config_json)
        .map_err(|e| PyValueError::new_err(format!("bad config: {e}")))?;
    let result =
        run_simulation(&config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(result.mids)
}

/// Run the 2x2 existence factorial from a `FactorialSpec` JSON string;
/// returns the full report as JSON.
#[pyfunction]
fn factorial(spec_json: &str) -> PyResult<String> {
    let spec: FactorialSpec = serde_json::from_str(spec_json)
        .map_err(|e| PyValueError::new_err(format!("bad spec: {e}")))?;
    let report =
        run_factorial(&spec).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(serde_json::to_string(&report).unwrap())
}

/// Human-readable rendering of a factorial report JSON string.
#[pyfunction]
fn report_text(report_json: &str) -> PyResult<String> {
    let report = serde_json::from_str(report_json)
        .map_err(|e| PyValueError::new_err(format!("bad report: {e}")))?;
    Ok(render_text(&report))
}

#[pymodule]
fn camsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(mid_series, m)?)?;
    m.add_function(wrap_pyfunction!(factorial, m)?)?;
    m.add_function(wrap_pyfunction!(report_text, m)?)?;
    Ok(())
}
