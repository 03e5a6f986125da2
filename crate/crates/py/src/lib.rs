//! Python bindings. Matrices cross the boundary as lists of rows of Python
//! `complex`, vectors as flat lists.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use blockcap::bench::TrialSpec;
use blockcap::capacity::{self, DEFAULT_BETA};
use blockcap::design_opt::{project_l1_ball as l1_projection, prox_linf as linf_prox};
use blockcap::models::EmGeometry;
use blockcap::recovery::NOISELESS_ETA_REL;
use blockcap::{
    BlockStructure, CMatrix, CVector, Complex64, DesignOptions, Error, GroupBasisPursuit, ModelDescriptor,
    RecoveryOptions, SensingModel,
};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyFloat, PyInt, PyList};
use serde::de::DeserializeOwned;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotPositiveDefinite { .. } | Error::DegenerateColumn { .. } | Error::LineSearchFailed { .. } | Error::NonFinite(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn matrix_from_rows(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m == 0 || n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be a non-empty list of equal-length rows"));
    }
    Ok(CMatrix::from_row_slice(m, n, &rows.concat()))
}

fn matrix_to_rows(a: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

/// Turns keyword arguments into an options struct; unknown keys are errors.
fn options<T: DeserializeOwned>(kwargs: Option<&Bound<'_, PyDict>>) -> PyResult<T> {
    let mut map = serde_json::Map::new();
    if let Some(kwargs) = kwargs {
        for (k, v) in kwargs.iter() {
            let key: String = k.extract()?;
            let value = if v.is_instance_of::<PyBool>() {
                serde_json::Value::Bool(v.extract()?)
            } else if v.is_instance_of::<PyInt>() {
                serde_json::Value::from(v.extract::<u64>()?)
            } else if v.is_instance_of::<PyFloat>() {
                serde_json::Number::from_f64(v.extract()?)
                    .map(serde_json::Value::Number)
                    .ok_or_else(|| PyValueError::new_err(format!("{key} must be finite")))?
            } else {
                return Err(PyValueError::new_err(format!("unsupported value for option {key}")));
            };
            map.insert(key, value);
        }
    }
    serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Partition of the signal indices into equal-length blocks.
#[pyclass(name = "BlockStructure", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBlockStructure {
    inner: BlockStructure,
}

#[pymethods]
impl PyBlockStructure {
    /// `n` indices in `k` contiguous blocks.
    #[new]
    fn new(n: usize, k: usize) -> PyResult<Self> {
        Ok(Self { inner: BlockStructure::contiguous(n, k).map_err(py_err)? })
    }

    #[staticmethod]
    fn explicit(blocks: Vec<Vec<usize>>) -> PyResult<Self> {
        Ok(Self { inner: BlockStructure::explicit(blocks).map_err(py_err)? })
    }

    #[staticmethod]
    fn singletons(n: usize) -> Self {
        Self { inner: BlockStructure::singletons(n) }
    }

    #[getter]
    fn signal_len(&self) -> usize {
        self.inner.signal_len()
    }

    #[getter]
    fn num_blocks(&self) -> usize {
        self.inner.num_blocks()
    }

    #[getter]
    fn block_len(&self) -> usize {
        self.inner.block_len()
    }

    fn blocks(&self) -> Vec<Vec<usize>> {
        self.inner.blocks().to_vec()
    }

    fn pair_supports(&self) -> Vec<(usize, usize)> {
        self.inner.pair_supports().iter().map(|p| p.blocks).collect()
    }

    fn __repr__(&self) -> String {
        format!("BlockStructure(N={}, K={}, L={})", self.inner.signal_len(), self.inner.num_blocks(), self.inner.block_len())
    }
}

/// Parametric sensing model with unit-norm columns.
#[pyclass(name = "SensingModel", frozen)]
struct PyModel {
    inner: Box<dyn SensingModel>,
    descriptor: ModelDescriptor,
}

impl PyModel {
    fn build(descriptor: ModelDescriptor) -> PyResult<Self> {
        Ok(Self { inner: descriptor.build().map_err(py_err)?, descriptor })
    }
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn fourier(m: usize, n: usize) -> PyResult<Self> {
        Self::build(ModelDescriptor::Fourier { m, n })
    }

    #[staticmethod]
    fn dense(m: usize, n: usize) -> PyResult<Self> {
        Self::build(ModelDescriptor::Dense { m, n })
    }

    #[staticmethod]
    #[pyo3(signature = (**geometry))]
    fn em(geometry: Option<&Bound<'_, PyDict>>) -> PyResult<Self> {
        Self::build(ModelDescriptor::Em(options::<EmGeometry>(geometry)?))
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn num_params(&self) -> usize {
        self.inner.num_params()
    }

    fn assemble(&self, p: Vec<f64>) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(matrix_to_rows(&self.inner.assemble(&p).map_err(py_err)?))
    }

    fn random_init(&self, seed: u64) -> PyResult<Vec<f64>> {
        self.inner.random_init(seed).map_err(py_err)
    }

    fn project_feasible(&self, p: Vec<f64>) -> Vec<f64> {
        self.inner.project_feasible(&p)
    }

    fn natural_blocks(&self) -> Option<PyBlockStructure> {
        self.inner.natural_blocks().map(|inner| PyBlockStructure { inner })
    }

    fn __repr__(&self) -> String {
        format!("SensingModel({:?})", self.descriptor)
    }
}

/// Per-pair capacities `ln det(A_r^H A_r + beta I)` and their minimum.
#[pyfunction]
#[pyo3(signature = (a, bs, beta = DEFAULT_BETA))]
fn capacity_report<'py>(
    py: Python<'py>,
    a: Vec<Vec<Complex64>>,
    bs: &PyBlockStructure,
    beta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let a = matrix_from_rows(a)?;
    let r = py.detach(|| capacity::capacity_report(&a, &bs.inner, beta)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("per_pair", r.per_pair)?;
    d.set_item("min_capacity", r.min_capacity)?;
    d.set_item("argmin_pair", r.argmin_pair)?;
    d.set_item("beta", r.beta)?;
    Ok(d)
}

/// Exact block restricted isometry constant over all `t`-block supports.
#[pyfunction]
#[pyo3(signature = (a, bs, t = 2))]
fn block_ric<'py>(py: Python<'py>, a: Vec<Vec<Complex64>>, bs: &PyBlockStructure, t: usize) -> PyResult<Bound<'py, PyDict>> {
    let a = matrix_from_rows(a)?;
    let r = py.detach(|| capacity::block_ric(&a, &bs.inner, t)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("delta", r.delta)?;
    d.set_item("t", r.t)?;
    d.set_item("lambda_min", r.lambda_min)?;
    d.set_item("support_lo", r.support_lo)?;
    d.set_item("lambda_max", r.lambda_max)?;
    d.set_item("support_hi", r.support_hi)?;
    Ok(d)
}

#[pyfunction]
fn mutual_coherence(a: Vec<Vec<Complex64>>) -> PyResult<f64> {
    Ok(capacity::mutual_coherence(&matrix_from_rows(a)?))
}

/// Maximizes the minimum pair capacity. Keyword arguments set optimizer
/// options (`max_outer`, `beta`, `seed`, ...).
#[pyfunction]
#[pyo3(signature = (model, bs, p0 = None, **opts))]
fn design<'py>(
    py: Python<'py>,
    model: &PyModel,
    bs: &PyBlockStructure,
    p0: Option<Vec<f64>>,
    opts: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let opts: DesignOptions = options(opts)?;
    let m = model.inner.as_ref();
    let p0 = match p0 {
        Some(p) => p,
        None => m.random_init(opts.seed).map_err(py_err)?,
    };
    let r = py.detach(|| blockcap::design(m, &bs.inner, &p0, &opts)).map_err(py_err)?;
    let trace = PyList::empty(py);
    for t in &r.trace {
        let row = PyDict::new(py);
        row.set_item("iteration", t.iteration)?;
        row.set_item("min_capacity", t.min_capacity)?;
        row.set_item("objective", t.objective)?;
        row.set_item("violation", t.violation)?;
        row.set_item("rho", t.rho)?;
        row.set_item("inner_iterations", t.inner_iterations)?;
        trace.append(row)?;
    }
    let d = PyDict::new(py);
    d.set_item("p_final", &r.p_final)?;
    d.set_item("baseline_min_capacity", r.initial_report.min_capacity)?;
    d.set_item("optimized_min_capacity", r.report.min_capacity)?;
    d.set_item("per_pair", &r.report.per_pair)?;
    d.set_item("termination", r.termination.as_str())?;
    d.set_item("trace", trace)?;
    Ok(d)
}

fn recovery_dict<'py>(py: Python<'py>, r: blockcap::RecoveryResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("x_hat", r.x_hat.as_slice().to_vec())?;
    d.set_item("residual", r.residual)?;
    d.set_item("objective", r.objective)?;
    d.set_item("iterations", r.iterations)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

fn solve_with(
    py: Python<'_>,
    engine: PyResult<GroupBasisPursuit>,
    y: Vec<Complex64>,
    eta: Option<f64>,
    opts: Option<&Bound<'_, PyDict>>,
) -> PyResult<blockcap::RecoveryResult> {
    let engine = engine?;
    let opts: RecoveryOptions = options(opts)?;
    let y = CVector::from_vec(y);
    let eta = eta.unwrap_or(NOISELESS_ETA_REL * y.norm());
    py.detach(|| engine.solve(&y, eta, &opts)).map_err(py_err)
}

/// Joint l2/l1 minimization subject to `|A x - y| <= eta` (default `1e-8 |y|`).
#[pyfunction]
#[pyo3(signature = (a, y, bs, eta = None, **opts))]
fn solve_group_bp<'py>(
    py: Python<'py>,
    a: Vec<Vec<Complex64>>,
    y: Vec<Complex64>,
    bs: &PyBlockStructure,
    eta: Option<f64>,
    opts: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let a = matrix_from_rows(a)?;
    let r = solve_with(py, GroupBasisPursuit::new(&a, &bs.inner).map_err(py_err), y, eta, opts)?;
    recovery_dict(py, r)
}

/// Plain l1 minimization subject to `|A x - y| <= eta`.
#[pyfunction]
#[pyo3(signature = (a, y, eta = None, **opts))]
fn solve_l1<'py>(
    py: Python<'py>,
    a: Vec<Vec<Complex64>>,
    y: Vec<Complex64>,
    eta: Option<f64>,
    opts: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyDict>> {
    let a = matrix_from_rows(a)?;
    let r = solve_with(py, GroupBasisPursuit::l1(&a).map_err(py_err), y, eta, opts)?;
    recovery_dict(py, r)
}

#[pyfunction]
fn prox_linf(v: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
    if !(lam > 0.0) {
        return Err(PyValueError::new_err("prox weight must be positive"));
    }
    Ok(linf_prox(&v, lam))
}

#[pyfunction]
fn project_l1_ball(v: Vec<f64>, radius: f64) -> PyResult<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(PyValueError::new_err("radius must be positive"));
    }
    Ok(l1_projection(&v, radius))
}

/// Benchmark trial signal for `(seed, s_b, trial)`.
#[pyfunction]
fn random_block_sparse(bs: &PyBlockStructure, s_b: usize, seed: u64, trial: usize) -> PyResult<Vec<Complex64>> {
    let spec = TrialSpec::new(bs.inner.clone(), s_b, trial + 1, seed).map_err(py_err)?;
    Ok(blockcap::bench::random_block_sparse(&spec, trial).as_slice().to_vec())
}

#[pymodule]
#[pyo3(name = "blockcap")]
fn blockcap_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlockStructure>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(capacity_report, m)?)?;
    m.add_function(wrap_pyfunction!(block_ric, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(design, m)?)?;
    m.add_function(wrap_pyfunction!(solve_group_bp, m)?)?;
    m.add_function(wrap_pyfunction!(solve_l1, m)?)?;
    m.add_function(wrap_pyfunction!(prox_linf, m)?)?;
    m.add_function(wrap_pyfunction!(project_l1_ball, m)?)?;
    m.add_function(wrap_pyfunction!(random_block_sparse, m)?)?;
    m.add("DEFAULT_BETA", DEFAULT_BETA)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_round_trip() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "blockcap").unwrap();
            blockcap_py(&m).unwrap();
            let model = m.getattr("SensingModel").unwrap().call_method1("fourier", (4, 8)).unwrap();
            let p = model.call_method1("random_init", (1,)).unwrap();
            let a = model.call_method1("assemble", (p,)).unwrap();
            let bs = m.getattr("BlockStructure").unwrap().call1((8, 2)).unwrap();
            let r = m.getattr("capacity_report").unwrap().call1((a, bs)).unwrap();
            let per_pair: Vec<f64> = r.get_item("per_pair").unwrap().extract().unwrap();
            assert_eq!(per_pair.len(), 1);
            let err = m.getattr("prox_linf").unwrap().call1((vec![1.0], -1.0)).unwrap_err();
            assert!(err.is_instance_of::<PyValueError>(py));
        });
    }

    #[test]
    fn unknown_options_are_rejected() {
        Python::initialize();
        Python::attach(|py| {
            let kw = PyDict::new(py);
            kw.set_item("max_outer", 3).unwrap();
            let o: DesignOptions = options(Some(&kw)).unwrap();
            assert_eq!(o.max_outer, 3);
            kw.set_item("max_outr", 3).unwrap();
            assert!(options::<DesignOptions>(Some(&kw)).is_err());
        });
    }
}
