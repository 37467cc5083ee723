//! Python module `declab`.
//!
//! Structured inputs (distributions, classes, MDPs, family specs, configs)
//! are accepted either as Python dicts/lists or as JSON text, using the same
//! schema as the JSON files read by the command-line tool. Structured
//! results come back as plain Python objects.

use declab::dec;
use declab::e2d::{self, ExperimentConfig};
use declab::families::{self, FamilySpec, HardFamily, VerifyOptions};
use declab::mdp::{self, TabularMdp};
use declab::rng::stream;
use declab::{DecError, DivergenceKind, Model, ModelClass, OutcomeDist};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: DecError) -> PyErr {
    if e.is_solver_failure() {
        PyRuntimeError::new_err(format!("{}: {e}", e.kind()))
    } else {
        PyValueError::new_err(format!("{}: {e}", e.kind()))
    }
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("schema: {e}")))
}

fn to_py<'py>(py: Python<'py>, value: &impl Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn divergence_kind(name: &str) -> PyResult<DivergenceKind> {
    name.parse().map_err(err)
}

#[pyclass(name = "Model", frozen, module = "declab")]
pub struct PyModel {
    inner: Model,
}

#[pymethods]
impl PyModel {
    /// Builds a model from a list of outcome distributions, e.g.
    /// `[{"kind": "bernoulli", "mu": 0.6}, ...]`.
    #[new]
    fn new(outcomes: &Bound<'_, PyAny>) -> PyResult<Self> {
        let outs: Vec<OutcomeDist> = from_py(outcomes)?;
        Ok(PyModel { inner: Model::new(outs).map_err(err)? })
    }

    #[staticmethod]
    fn bernoulli(means: Vec<f64>) -> PyResult<Self> {
        Ok(PyModel { inner: Model::bernoulli(&means).map_err(err)? })
    }

    fn means(&self) -> Vec<f64> {
        self.inner.means().to_vec()
    }

    fn num_decisions(&self) -> usize {
        self.inner.num_decisions()
    }

    /// `(index, value)` of an optimal decision.
    fn best_decision(&self) -> (usize, f64) {
        self.inner.best_decision()
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Model(means={:?})", self.inner.means())
    }
}

#[pyclass(name = "ModelClass", frozen, module = "declab")]
pub struct PyModelClass {
    inner: ModelClass,
}

#[pymethods]
impl PyModelClass {
    /// Accepts the class-file schema `{"decisions": A, "models": [...], "truth": k}`.
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyModelClass { inner: from_py(spec)? })
    }

    #[staticmethod]
    fn bernoulli(means: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyModelClass { inner: ModelClass::bernoulli(&means).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn num_decisions(&self) -> usize {
        self.inner.num_decisions()
    }

    fn model(&self, i: usize) -> PyResult<PyModel> {
        if i >= self.inner.len() {
            return Err(PyValueError::new_err(format!("index {i} out of range")));
        }
        Ok(PyModel { inner: self.inner.model(i).clone() })
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }
}

#[pyclass(name = "TabularMdp", frozen, module = "declab")]
pub struct PyTabularMdp {
    inner: TabularMdp,
}

#[pymethods]
impl PyTabularMdp {
    /// Accepts `{"H", "S", "A", "P", "R", "d1"}`.
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(PyTabularMdp { inner: from_py(spec)? })
    }

    #[staticmethod]
    #[pyo3(signature = (h, s, a, seed=0))]
    fn random(h: usize, s: usize, a: usize, seed: u64) -> Self {
        PyTabularMdp { inner: TabularMdp::random(h, s, a, &mut stream(seed, 0, 0)) }
    }

    /// `(optimal value, greedy actions[h][s])`.
    fn value_iteration(&self) -> (f64, Vec<Vec<usize>>) {
        let plan = mdp::value_iteration(&self.inner);
        (plan.value, plan.actions)
    }

    /// Value of a policy given as `table[h][s][a]` probabilities.
    fn policy_value(&self, policy: &Bound<'_, PyAny>) -> PyResult<f64> {
        let pi: mdp::Policy = from_py(policy)?;
        mdp::policy_value(&self.inner, &pi).map_err(err)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.inner)
    }
}

#[pyclass(name = "DecCertificate", frozen, get_all, module = "declab")]
pub struct PyDecCertificate {
    value: f64,
    witness: Vec<f64>,
    method: String,
    gamma: f64,
    divergence: String,
}

#[pymethods]
impl PyDecCertificate {
    fn __repr__(&self) -> String {
        format!("DecCertificate(value={}, method={}, witness={:?})", self.value, self.method, self.witness)
    }
}

impl From<dec::DecCertificate> for PyDecCertificate {
    fn from(c: dec::DecCertificate) -> Self {
        PyDecCertificate {
            value: c.value,
            witness: c.witness,
            method: format!("{:?}", c.method),
            gamma: c.gamma,
            divergence: c.divergence.to_string(),
        }
    }
}

/// Exact DEC of `cls` against `reference` and its minimizing distribution.
#[pyfunction]
#[pyo3(signature = (cls, reference, gamma, divergence="hellinger"))]
fn dec_lp(cls: PyRef<'_, PyModelClass>, reference: PyRef<'_, PyModel>, gamma: f64, divergence: &str) -> PyResult<PyDecCertificate> {
    let c = dec::dec_lp(&cls.inner, &reference.inner, gamma, divergence_kind(divergence)?).map_err(err)?;
    Ok(c.into())
}

/// `(value, prior)` of the dual game.
#[pyfunction]
#[pyo3(signature = (cls, reference, gamma, divergence="hellinger"))]
fn dec_dual_lp(cls: PyRef<'_, PyModelClass>, reference: PyRef<'_, PyModel>, gamma: f64, divergence: &str) -> PyResult<(f64, Vec<f64>)> {
    let w = dec::dec_dual_lp(&cls.inner, &reference.inner, gamma, divergence_kind(divergence)?).map_err(err)?;
    Ok((w.value, w.prior))
}

/// Inverse gap weighting for mean rewards `fbar`.
#[pyfunction]
fn igw(fbar: Vec<f64>, gamma: f64) -> PyResult<PyDecCertificate> {
    Ok(dec::igw(&fbar, gamma).map_err(err)?.into())
}

#[pyfunction]
fn divergence(kind: &str, p: &Bound<'_, PyAny>, q: &Bound<'_, PyAny>) -> PyResult<f64> {
    let p: OutcomeDist = from_py(p)?;
    let q: OutcomeDist = from_py(q)?;
    declab::divergence(divergence_kind(kind)?, &p, &q).map_err(err)
}

/// Runs E2D against model `truth`; `config` follows the experiment schema
/// (`rounds`, `gamma`, `option`, ...). Returns `{"records": [...], "summary": {...}}`.
#[pyfunction]
fn run_experiment<'py>(
    py: Python<'py>,
    cls: PyRef<'_, PyModelClass>,
    truth: usize,
    config: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: ExperimentConfig = from_py(config)?;
    let class = cls.inner.clone();
    let trace = py.detach(|| e2d::run_experiment(&class, truth, &cfg)).map_err(err)?;
    to_py(py, &trace)
}

/// Policy cover of `mdp`: `{"lambda", "eta", "policies", "weights", "gaps"}`.
#[pyfunction]
#[pyo3(signature = (mdp, eta, floor=None))]
fn pcigw<'py>(py: Python<'py>, mdp: PyRef<'_, PyTabularMdp>, eta: f64, floor: Option<f64>) -> PyResult<Bound<'py, PyAny>> {
    let cover = mdp::pcigw(&mdp.inner, eta, floor).map_err(err)?;
    #[derive(Serialize)]
    struct Out {
        lambda: f64,
        eta: f64,
        policies: Vec<mdp::Policy>,
        weights: Vec<f64>,
        gaps: Vec<f64>,
    }
    to_py(py, &Out { lambda: cover.lambda, eta: cover.eta, policies: cover.policies, weights: cover.weights, gaps: cover.gaps })
}

#[pyclass(name = "HardFamily", frozen, module = "declab")]
pub struct PyHardFamily {
    inner: HardFamily,
}

#[pymethods]
impl PyHardFamily {
    /// `spec` is a dict such as `{"kind": "mab", "actions": 3, "gap": 0.1}`.
    #[new]
    fn new(spec: &Bound<'_, PyAny>) -> PyResult<Self> {
        let spec: FamilySpec = from_py(spec)?;
        Ok(PyHardFamily { inner: families::make_family(&spec).map_err(err)? })
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn lower_bound(&self, gamma: f64) -> f64 {
        families::family_lower_bound(&self.inner, gamma)
    }

    fn dual_lp_value(&self, gamma: f64) -> PyResult<Option<f64>> {
        families::family_dual_value(&self.inner, gamma).map_err(err)
    }

    #[pyo3(signature = (sampled_policies=1000, seed=0))]
    fn verify<'py>(&self, py: Python<'py>, sampled_policies: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let opts = VerifyOptions { sampled_policies, seed, ..Default::default() };
        let report = py.detach(|| families::verify_family(&self.inner, &opts)).map_err(err)?;
        to_py(py, &report)
    }
}

#[pymodule(name = "declab")]
fn declab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyModelClass>()?;
    m.add_class::<PyTabularMdp>()?;
    m.add_class::<PyDecCertificate>()?;
    m.add_class::<PyHardFamily>()?;
    m.add_function(wrap_pyfunction!(dec_lp, m)?)?;
    m.add_function(wrap_pyfunction!(dec_dual_lp, m)?)?;
    m.add_function(wrap_pyfunction!(igw, m)?)?;
    m.add_function(wrap_pyfunction!(divergence, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(pcigw, m)?)?;
    Ok(())
}
