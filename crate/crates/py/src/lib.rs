//! Python bindings over `dbar-core`. Exact rationals cross the boundary as
//! `"num/den"` strings.

use dbar_core::exact::{fmt_rational, parse_rational, to_f64};
use dbar_core::{hermite, poly, solver, AnsatzSpec, Error, Rational};
use pyo3::exceptions::{PyArithmeticError, PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    match e {
        Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        Error::NotClosed | Error::AnsatzInsufficient { .. } => PyArithmeticError::new_err(e.to_string()),
        Error::QuadratureFailure(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn rational(text: &str) -> PyResult<Rational> {
    parse_rational(text).map_err(err)
}

#[pyclass(name = "Weights", frozen)]
#[derive(Clone)]
struct PyWeights(dbar_core::WeightSequence);

#[pymethods]
impl PyWeights {
    #[staticmethod]
    fn geometric(c: &str, r: &str, len: usize) -> PyResult<Self> {
        dbar_core::WeightSequence::geometric(rational(c)?, rational(r)?, len)
            .map(Self)
            .map_err(err)
    }

    #[staticmethod]
    fn explicit(values: Vec<String>) -> PyResult<Self> {
        let vals = values.iter().map(|v| rational(v)).collect::<PyResult<Vec<_>>>()?;
        dbar_core::WeightSequence::explicit(vals).map(Self).map_err(err)
    }

    #[staticmethod]
    fn dyadic(len: usize) -> Self {
        Self(dbar_core::WeightSequence::dyadic(len))
    }

    fn a(&self, j: usize) -> PyResult<String> {
        self.0.a(j).map(fmt_rational).map_err(err)
    }

    fn sigma(&self, j: usize) -> PyResult<String> {
        self.0.sigma(j).map(|s| fmt_rational(&s)).map_err(err)
    }

    fn total(&self) -> String {
        fmt_rational(&self.0.total())
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Poly", frozen)]
#[derive(Clone)]
struct PyPoly(dbar_core::PolyFn);

#[pymethods]
impl PyPoly {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Poly('{}')", self.0)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __add__(&self, other: &Self) -> Self {
        Self(self.0.add(&other.0))
    }

    fn __sub__(&self, other: &Self) -> Self {
        Self(self.0.sub(&other.0))
    }

    fn __mul__(&self, other: &Self) -> Self {
        Self(self.0.mul(&other.0))
    }

    fn conj(&self) -> Self {
        Self(self.0.conj())
    }

    fn d_z(&self, j: usize) -> Self {
        Self(self.0.d_z(j))
    }

    fn d_zbar(&self, j: usize) -> Self {
        Self(self.0.d_zbar(j))
    }

    fn delta(&self, j: usize, w: &PyWeights) -> PyResult<Self> {
        self.0.delta(j, &w.0).map(Self).map_err(err)
    }

    fn project(&self, n: usize, w: &PyWeights) -> PyResult<Self> {
        self.0.project(n, &w.0).map(Self).map_err(err)
    }

    fn norm_sq(&self, w: &PyWeights) -> PyResult<String> {
        poly::norm_sq(&self.0, &w.0).map(|r| fmt_rational(&r)).map_err(err)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

#[pyclass(name = "Form", frozen)]
#[derive(Clone)]
struct PyForm(dbar_core::Form);

#[pymethods]
impl PyForm {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    #[staticmethod]
    fn zero(s: usize, t: usize, n: usize) -> PyResult<Self> {
        dbar_core::Form::zero(s, t, n).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn s(&self) -> usize {
        self.0.s()
    }

    #[getter]
    fn t(&self) -> usize {
        self.0.t()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __add__(&self, other: &Self) -> PyResult<Self> {
        self.0.add(&other.0).map(Self).map_err(err)
    }

    fn __sub__(&self, other: &Self) -> PyResult<Self> {
        self.0.sub(&other.0).map(Self).map_err(err)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn lift(&self, m: usize) -> PyResult<Self> {
        self.0.lift(m).map(Self).map_err(err)
    }

    fn truncate(&self, m: usize, w: &PyWeights) -> PyResult<Self> {
        self.0.truncate(m, &w.0).map(Self).map_err(err)
    }

    fn dbar(&self) -> PyResult<Self> {
        self.0.dbar().map(Self).map_err(err)
    }

    fn adjoint(&self, w: &PyWeights) -> PyResult<Self> {
        self.0.dbar_adjoint(&w.0).map(Self).map_err(err)
    }

    fn norm_sq(&self, w: &PyWeights) -> PyResult<String> {
        self.0.norm_sq(&w.0).map(|r| fmt_rational(&r)).map_err(err)
    }

    fn norm(&self, w: &PyWeights) -> PyResult<f64> {
        self.0.norm_sq(&w.0).map(|r| to_f64(&r).sqrt()).map_err(err)
    }
}

#[pyfunction(name = "dbar")]
fn dbar_fn(f: &PyForm) -> PyResult<PyForm> {
    f.dbar()
}

#[pyfunction]
fn adjoint(f: &PyForm, w: &PyWeights) -> PyResult<PyForm> {
    f.adjoint(w)
}

#[pyfunction]
fn norm(f: &PyForm, w: &PyWeights) -> PyResult<f64> {
    f.norm(w)
}

#[pyfunction]
fn check_closed(f: &PyForm) -> bool {
    solver::check_closed(&f.0)
}

#[pyfunction]
fn energy_identity_defect(f: &PyForm, w: &PyWeights) -> PyResult<String> {
    solver::energy_identity_defect(&f.0, &w.0).map(|r| fmt_rational(&r)).map_err(err)
}

#[pyfunction]
fn hermite_poly(p: u32, q: u32, j: usize, w: &PyWeights) -> PyResult<PyPoly> {
    hermite::hermite_poly(p, q, j, &w.0).map(PyPoly).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, w, max_z_degree=None, max_zbar_degree=None, retry_limit=None))]
fn solve<'py>(
    py: Python<'py>,
    f: &PyForm,
    w: &PyWeights,
    max_z_degree: Option<u32>,
    max_zbar_degree: Option<u32>,
    retry_limit: Option<u32>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut ansatz = AnsatzSpec::for_form(&f.0);
    if let Some(v) = max_z_degree {
        ansatz.max_z_degree = v;
    }
    if let Some(v) = max_zbar_degree {
        ansatz.max_zbar_degree = v;
    }
    if let Some(v) = retry_limit {
        ansatz.retry_limit = v;
    }
    let report = py.detach(|| solver::solve_minimal(&f.0, &w.0, ansatz)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("u", PyForm(report.u.clone()))?;
    out.set_item("residual_norm_sq", fmt_rational(&report.residual_norm_sq))?;
    out.set_item("norm_u_sq", fmt_rational(&report.norm_u_sq))?;
    out.set_item("norm_f_sq", fmt_rational(&report.norm_f_sq))?;
    out.set_item("ortho_defect", fmt_rational(&report.ortho_defect))?;
    out.set_item("bound_satisfied", report.bound_satisfied)?;
    out.set_item("ratio", report.ratio_sq().map(|r| to_f64(&r).sqrt()))?;
    out.set_item("retries", report.retries)?;
    Ok(out)
}

#[pymodule]
fn dbar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWeights>()?;
    m.add_class::<PyPoly>()?;
    m.add_class::<PyForm>()?;
    m.add_function(wrap_pyfunction!(dbar_fn, m)?)?;
    m.add_function(wrap_pyfunction!(adjoint, m)?)?;
    m.add_function(wrap_pyfunction!(norm, m)?)?;
    m.add_function(wrap_pyfunction!(check_closed, m)?)?;
    m.add_function(wrap_pyfunction!(energy_identity_defect, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_poly, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add("__version__", dbar_core::VERSION)?;
    Ok(())
}
