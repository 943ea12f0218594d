//! Python bindings; populated alongside the orchestrator.

use pyo3::prelude::*;

#[pymodule]
fn iscc_planner(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
