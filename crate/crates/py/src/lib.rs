//! Python bindings: signatures, morphisms, lenses, optics, 2-cells, the
//! normalizer and sharing pass, and the benchmark and π₀ experiments.

use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use lensopt::bridge;
use lensopt::cost;
use lensopt::error::Error;
use lensopt::eval::{self, CostReport, Value};
use lensopt::expr;
use lensopt::lens::{self, Env, Execution};
use lensopt::normal;
use lensopt::optic;
use lensopt::share;
use lensopt::signature;
use lensopt::term;
use lensopt::two_optic::{self, CellError};

create_exception!(lensopt, LensoptError, PyValueError);
create_exception!(lensopt, CellValidationError, LensoptError);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Cell(c) => cell_err(c),
        e => LensoptError::new_err(e.to_string()),
    }
}

fn cell_err(e: CellError) -> PyErr {
    let counterexample = e
        .counterexample()
        .map(|c| serde_json::to_string(c).unwrap_or_default());
    CellValidationError::new_err((e.to_string(), counterexample))
}

fn json_to_py<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    use serde_json::Value as J;
    Ok(match v {
        J::Null => py.None().into_bound(py),
        J::Bool(b) => b.into_bound_py_any(py)?,
        J::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        J::String(s) => s.into_bound_py_any(py)?,
        J::Array(xs) => {
            let items = xs
                .iter()
                .map(|x| json_to_py(py, x))
                .collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        J::Object(map) => {
            let d = PyDict::new(py);
            for (k, x) in map {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn values_from_py(xs: &Bound<'_, PyAny>) -> PyResult<Vec<Value>> {
    xs.try_iter()?
        .map(|x| {
            let x = x?;
            if let Ok(v) = x.extract::<u32>() {
                Ok(Value::Fin(v))
            } else {
                Ok(Value::Real(x.extract::<Vec<f64>>()?))
            }
        })
        .collect()
}

fn values_to_py<'py>(py: Python<'py>, vs: &[Value]) -> PyResult<Bound<'py, PyList>> {
    let items = vs
        .iter()
        .map(|v| match v {
            Value::Fin(x) => x.into_bound_py_any(py),
            Value::Real(x) => x.into_bound_py_any(py),
        })
        .collect::<PyResult<Vec<_>>>()?;
    PyList::new(py, items)
}

fn report_to_py<'py>(py: Python<'py>, r: &CostReport) -> PyResult<Bound<'py, PyAny>> {
    json_to_py(py, &r.to_json())
}

fn execution_to_py<'py>(py: Python<'py>, run: &Execution) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("b", values_to_py(py, &run.b)?)?;
    d.set_item("a_prime", values_to_py(py, &run.a_prime)?)?;
    d.set_item("cost", report_to_py(py, &run.report)?)?;
    Ok(d)
}

/// `None` is the identity, a list is a constant response, a `Morphism` is
/// evaluated, and any other callable receives and returns a list of values.
fn env_from_py(env: Option<&Bound<'_, PyAny>>) -> PyResult<Env> {
    let Some(env) = env else {
        return Ok(Env::Identity);
    };
    if env.is_none() {
        return Ok(Env::Identity);
    }
    if let Ok(m) = env.cast::<Morphism>() {
        return Ok(Env::Term(m.get().0.clone()));
    }
    if env.is_callable() {
        let f: Py<PyAny> = env.clone().unbind();
        return Ok(Env::Callback(Arc::new(move |b: &[Value]| {
            Python::attach(|py| {
                let arg = values_to_py(py, b).map_err(|e| Error::Invalid(e.to_string()))?;
                let out = f
                    .call1(py, (arg,))
                    .map_err(|e| Error::Invalid(e.to_string()))?;
                values_from_py(out.bind(py)).map_err(|e| Error::Invalid(e.to_string()))
            })
        })));
    }
    Ok(Env::Constant(values_from_py(env)?))
}

/// A signature: sorts with finite or real carriers and generators with
/// tables or builtin primitives.
#[pyclass(frozen, module = "lensopt")]
struct Signature(signature::Signature);

#[pymethods]
impl Signature {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        signature::Signature::from_json(text)
            .map(Signature)
            .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| py_err(e.into()))?;
        Self::from_json(&text)
    }

    #[staticmethod]
    fn random(seed: u64) -> Self {
        Signature(lensopt::sample::random_signature(seed))
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn sorts(&self) -> Vec<String> {
        self.0
            .sorts()
            .iter()
            .map(|s| s.id.name().to_string())
            .collect()
    }

    #[getter]
    fn generators(&self) -> Vec<String> {
        self.0
            .generators()
            .iter()
            .map(|g| g.decl.name().to_string())
            .collect()
    }

    /// Parses a morphism expression such as `copy[A] ; f * f`.
    fn parse(&self, source: &str) -> PyResult<Morphism> {
        expr::parse(source, &self.0).map(Morphism).map_err(py_err)
    }

    fn object(&self, names: Vec<String>) -> PyResult<Vec<String>> {
        self.0.object(&names).map(|o| o.names()).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Signature(sorts={:?}, generators={:?})",
            self.sorts(),
            self.generators()
        )
    }
}

fn object(sig: &Signature, names: &[String]) -> PyResult<term::Object> {
    sig.0.object(names).map_err(py_err)
}

/// A term of the free cartesian category.
#[pyclass(frozen, skip_from_py_object, module = "lensopt")]
#[derive(Clone)]
struct Morphism(term::Morphism);

#[pymethods]
impl Morphism {
    #[staticmethod]
    fn identity(sig: &Signature, obj: Vec<String>) -> PyResult<Self> {
        Ok(Morphism(term::Morphism::id(&object(sig, &obj)?)))
    }

    #[getter]
    fn dom(&self) -> Vec<String> {
        self.0.dom().names()
    }

    #[getter]
    fn cod(&self) -> Vec<String> {
        self.0.cod().names()
    }

    fn then(&self, next: &Morphism) -> PyResult<Self> {
        self.0.then(&next.0).map(Morphism).map_err(py_err)
    }

    fn tensor(&self, other: &Morphism) -> Self {
        Morphism(self.0.tensor(&other.0))
    }

    /// `copy ; (id ⊗ f)`.
    fn graph(&self) -> Self {
        Morphism(term::Morphism::graph(&self.0))
    }

    /// Canonical form as a dict with `dom`, `cod` and rendered `outputs`.
    fn normalize<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let nf = serde_json::to_value(normal::normalize(&self.0)).map_err(|e| py_err(e.into()))?;
        json_to_py(py, &nf)
    }

    /// The canonical form read back as a morphism.
    fn normal_form(&self) -> Self {
        Morphism(normal::normalize(&self.0).to_morphism())
    }

    /// Equality of canonical forms.
    fn equivalent(&self, other: &Morphism) -> bool {
        normal::equal(&self.0, &other.0)
    }

    /// Exhaustive extensional equality over the finite carriers of `sig`.
    fn eq_extensional(&self, other: &Morphism, sig: &Signature) -> PyResult<bool> {
        eval::eq_extensional(&self.0, &other.0, &sig.0).map_err(py_err)
    }

    /// Outputs and cost counters on one input tuple.
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        sig: &Signature,
        inputs: &Bound<'py, PyAny>,
    ) -> PyResult<(Bound<'py, PyList>, Bound<'py, PyAny>)> {
        let mut report = CostReport::new(&sig.0);
        let out = eval::evaluate(&self.0, &sig.0, &values_from_py(inputs)?, &mut report)
            .map_err(py_err)?;
        Ok((values_to_py(py, &out)?, report_to_py(py, &report)?))
    }

    /// The hash-consed DAG as a dict, with `nodes` and `outputs`.
    fn share<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &share::share(&self.0).to_json())
    }

    fn count_generators(&self) -> usize {
        self.0.count_generators(&|_| true)
    }

    fn __eq__(&self, other: &Morphism) -> bool {
        self.0 == other.0
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Morphism({}: {} -> {})", self.0, self.0.dom(), self.0.cod())
    }
}

/// A cartesian lens `(get : A → B, put : A ⊗ B' → A')`.
#[pyclass(frozen, from_py_object, module = "lensopt")]
#[derive(Clone)]
struct Lens(lens::Lens);

#[pymethods]
impl Lens {
    #[new]
    fn new(get: &Morphism, put: &Morphism) -> PyResult<Self> {
        lens::Lens::new(get.0.clone(), put.0.clone())
            .map(Lens)
            .map_err(py_err)
    }

    #[staticmethod]
    fn identity(sig: &Signature, fwd: Vec<String>, bwd: Vec<String>) -> PyResult<Self> {
        let pair = lens::Pair::new(object(sig, &fwd)?, object(sig, &bwd)?);
        Ok(Lens(lens::lens_id(&pair)))
    }

    #[staticmethod]
    fn from_json(text: &str, sig: &Signature) -> PyResult<Self> {
        lens::Lens::from_json(text, &sig.0)
            .map(Lens)
            .map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    #[getter]
    fn get(&self) -> Morphism {
        Morphism(self.0.get().clone())
    }

    #[getter]
    fn put(&self) -> Morphism {
        Morphism(self.0.put().clone())
    }

    #[getter]
    fn dom(&self) -> (Vec<String>, Vec<String>) {
        (self.0.dom().fwd.names(), self.0.dom().bwd.names())
    }

    #[getter]
    fn cod(&self) -> (Vec<String>, Vec<String>) {
        (self.0.cod().fwd.names(), self.0.cod().bwd.names())
    }

    fn then(&self, next: &Lens) -> PyResult<Self> {
        lens::lens_compose(&self.0, &next.0)
            .map(Lens)
            .map_err(py_err)
    }

    fn equivalent(&self, other: &Lens) -> bool {
        self.0.equivalent(&other.0)
    }

    /// The optic `(A, graph(get), put)`.
    fn reify(&self) -> Optic {
        Optic(bridge::reify(&self.0))
    }

    /// Runs the checkpointing executor; see `env_from_py` for `env`.
    #[pyo3(signature = (sig, a, env=None))]
    fn run<'py>(
        &self,
        py: Python<'py>,
        sig: &Signature,
        a: &Bound<'py, PyAny>,
        env: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let run = lens::lens_exec(&self.0, &sig.0, &values_from_py(a)?, &env_from_py(env)?)
            .map_err(py_err)?;
        execution_to_py(py, &run)
    }

    fn __repr__(&self) -> String {
        format!("Lens(get={}, put={})", self.0.get(), self.0.put())
    }
}

/// An optic `(M, fw : A → M ⊗ B, bw : M ⊗ B' → A')`.
#[pyclass(frozen, skip_from_py_object, module = "lensopt")]
#[derive(Clone)]
struct Optic(optic::Optic);

#[pymethods]
impl Optic {
    #[new]
    fn new(sig: &Signature, residual: Vec<String>, fw: &Morphism, bw: &Morphism) -> PyResult<Self> {
        optic::Optic::new(object(sig, &residual)?, fw.0.clone(), bw.0.clone())
            .map(Optic)
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str, sig: &Signature) -> PyResult<Self> {
        optic::Optic::from_json(text, &sig.0)
            .map(Optic)
            .map_err(py_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json().to_string()
    }

    #[getter]
    fn residual(&self) -> Vec<String> {
        self.0.residual().names()
    }

    #[getter]
    fn fw(&self) -> Morphism {
        Morphism(self.0.fw().clone())
    }

    #[getter]
    fn bw(&self) -> Morphism {
        Morphism(self.0.bw().clone())
    }

    fn then(&self, next: &Optic) -> PyResult<Self> {
        optic::optic_compose(&self.0, &next.0)
            .map(Optic)
            .map_err(py_err)
    }

    fn strictly_equal(&self, other: &Optic) -> bool {
        self.0.strictly_equal(&other.0)
    }

    /// The lens `(fw ; π₂, ((fw ; π₁) ⊗ B') ; bw)`.
    fn erase(&self) -> Lens {
        Lens(bridge::erase(&self.0))
    }

    /// The counit cell `R(E(o)) ⇒ o`.
    fn counit(&self, sig: &Signature) -> PyResult<TwoCell> {
        bridge::counit(&self.0, &sig.0)
            .map(TwoCell)
            .map_err(cell_err)
    }

    /// Runs the residual-storing executor.
    #[pyo3(signature = (sig, a, env=None))]
    fn run<'py>(
        &self,
        py: Python<'py>,
        sig: &Signature,
        a: &Bound<'py, PyAny>,
        env: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let run = optic::optic_exec(&self.0, &sig.0, &values_from_py(a)?, &env_from_py(env)?)
            .map_err(py_err)?;
        execution_to_py(py, &run)
    }

    fn __repr__(&self) -> String {
        format!(
            "Optic(M={}, fw={}, bw={})",
            self.0.residual(),
            self.0.fw(),
            self.0.bw()
        )
    }
}

/// A validated reparameterisation `r : M₁ → M₂` between two optics.
#[pyclass(frozen, skip_from_py_object, module = "lensopt")]
#[derive(Clone)]
struct TwoCell(two_optic::TwoCell);

#[pymethods]
impl TwoCell {
    /// Validates `witness` as a cell `src ⇒ tgt`; raises
    /// `CellValidationError` with a counterexample otherwise.
    #[new]
    fn new(src: &Optic, tgt: &Optic, witness: &Morphism, sig: &Signature) -> PyResult<Self> {
        two_optic::mk_two_cell(&src.0, &tgt.0, &witness.0, &sig.0)
            .map(TwoCell)
            .map_err(cell_err)
    }

    #[staticmethod]
    fn identity(o: &Optic, sig: &Signature) -> PyResult<Self> {
        two_optic::identity_cell(&o.0, &sig.0)
            .map(TwoCell)
            .map_err(cell_err)
    }

    /// The cell `R(l₁ ; l₂) ⇒ R(l₁) ; R(l₂)`.
    #[staticmethod]
    fn oplaxator(l1: &Lens, l2: &Lens, sig: &Signature) -> PyResult<Self> {
        bridge::oplaxator(&l1.0, &l2.0, &sig.0)
            .map(TwoCell)
            .map_err(cell_err)
    }

    #[getter]
    fn src(&self) -> Optic {
        Optic(self.0.src().clone())
    }

    #[getter]
    fn tgt(&self) -> Optic {
        Optic(self.0.tgt().clone())
    }

    #[getter]
    fn witness(&self) -> Morphism {
        Morphism(self.0.witness().clone())
    }

    fn vcompose(&self, next: &TwoCell, sig: &Signature) -> PyResult<Self> {
        two_optic::vcompose(&self.0, &next.0, &sig.0)
            .map(TwoCell)
            .map_err(cell_err)
    }

    fn hcompose(&self, next: &TwoCell, sig: &Signature) -> PyResult<Self> {
        two_optic::hcompose(&self.0, &next.0, &sig.0)
            .map(TwoCell)
            .map_err(cell_err)
    }

    fn __repr__(&self) -> String {
        format!("TwoCell(witness={})", self.0.witness())
    }
}

/// Tradeoff rows for chains of length `1..=max_n` as a list of dicts.
#[pyfunction]
#[pyo3(signature = (max_n, interp="finite"))]
fn run_tradeoff<'py>(py: Python<'py>, max_n: usize, interp: &str) -> PyResult<Bound<'py, PyAny>> {
    let interp: cost::Interp = interp.parse().map_err(py_err)?;
    let (rows, _) = cost::run_tradeoff(1..=max_n, interp).map_err(py_err)?;
    json_to_py(
        py,
        &serde_json::to_value(rows).map_err(|e| py_err(e.into()))?,
    )
}

/// Connected components of the enumerated optic family against the fibers
/// of erasure.
#[pyfunction]
#[pyo3(signature = (search_depth=3))]
fn pi0_recovery<'py>(py: Python<'py>, search_depth: usize) -> PyResult<Bound<'py, PyAny>> {
    let report = bridge::pi0_recovery(search_depth).map_err(cell_err)?;
    json_to_py(
        py,
        &serde_json::to_value(report).map_err(|e| py_err(e.into()))?,
    )
}

/// Lens chain composed to the left, as in the benchmark.
#[pyfunction]
fn compose_lenses(lenses: Vec<Lens>) -> PyResult<Lens> {
    let chain = lens::LensChain::new(lenses.into_iter().map(|l| l.0).collect()).map_err(py_err)?;
    Ok(Lens(chain.compose(lens::Association::Left)))
}

#[pymodule]
#[pyo3(name = "lensopt")]
pub fn lensopt_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("LensoptError", m.py().get_type::<LensoptError>())?;
    m.add(
        "CellValidationError",
        m.py().get_type::<CellValidationError>(),
    )?;
    m.add_class::<Signature>()?;
    m.add_class::<Morphism>()?;
    m.add_class::<Lens>()?;
    m.add_class::<Optic>()?;
    m.add_class::<TwoCell>()?;
    m.add_function(wrap_pyfunction!(run_tradeoff, m)?)?;
    m.add_function(wrap_pyfunction!(pi0_recovery, m)?)?;
    m.add_function(wrap_pyfunction!(compose_lenses, m)?)?;
    Ok(())
}
