use std::ffi::CString;

use lensopt_py::lensopt_py;
use pyo3::prelude::*;
use pyo3::types::PyDict;

#[test]
fn python_smoke_script_passes() {
    pyo3::append_to_inittab!(lensopt_py);
    Python::initialize();
    let script = include_str!("../../../python/smoke_test.py");
    Python::attach(|py| {
        let globals = PyDict::new(py);
        globals.set_item("__name__", "__main__").unwrap();
        let code = CString::new(script).unwrap();
        if let Err(e) = py.run(&code, Some(&globals), None) {
            e.print(py);
            panic!("smoke script failed");
        }
    });
}
