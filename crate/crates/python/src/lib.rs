//! Python bindings. Matrices cross the boundary as lists of rows and point
//! sets as lists of points.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use redg_core::data::{self, AnchorPolicy, RecordFilter, SynthConfig};
use redg_core::experiment::{run_synth_cell, SynthCell};
use redg_core::{EdgError, EdgOptions, Matrix, PointSet, SqDistBlocks, TrialSettings};

fn to_py_err(e: EdgError) -> PyErr {
    match e {
        EdgError::Argument(_) | EdgError::Input(_) | EdgError::Parse { .. } => PyValueError::new_err(e.to_string()),
        EdgError::Io(_) => PyOSError::new_err(e.to_string()),
        EdgError::Serialize(_) => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("rows differ in length"));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn points_from_list(points: &[Vec<f64>]) -> PyResult<PointSet> {
    PointSet::from_points(points).map_err(to_py_err)
}

/// Robust PCA settings.
#[pyclass(name = "RpcaConfig", from_py_object)]
#[derive(Clone)]
struct PyRpcaConfig {
    inner: redg_core::RpcaConfig,
}

#[pymethods]
impl PyRpcaConfig {
    #[new]
    #[pyo3(signature = (target_rank, beta=None, beta_init_scale=None, gamma=None, max_iters=None, conv_tol=None))]
    fn new(
        target_rank: usize,
        beta: Option<f64>,
        beta_init_scale: Option<f64>,
        gamma: Option<f64>,
        max_iters: Option<usize>,
        conv_tol: Option<f64>,
    ) -> PyResult<Self> {
        let mut c = redg_core::RpcaConfig::new(target_rank);
        c.beta = beta;
        if let Some(v) = beta_init_scale {
            c.beta_init_scale = v;
        }
        if let Some(v) = gamma {
            c.gamma = v;
        }
        if let Some(v) = max_iters {
            c.max_iters = v;
        }
        if let Some(v) = conv_tol {
            c.conv_tol = v;
        }
        c.validate().map_err(to_py_err)?;
        Ok(PyRpcaConfig { inner: c })
    }

    #[getter]
    fn target_rank(&self) -> usize {
        self.inner.target_rank
    }

    #[getter]
    fn beta(&self) -> Option<f64> {
        self.inner.beta
    }

    #[getter]
    fn beta_init_scale(&self) -> f64 {
        self.inner.beta_init_scale
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.inner.gamma
    }

    #[getter]
    fn max_iters(&self) -> usize {
        self.inner.max_iters
    }

    #[getter]
    fn conv_tol(&self) -> f64 {
        self.inner.conv_tol
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Low-rank plus sparse split returned by `rpca_solve`.
#[pyclass(name = "RpcaResult")]
struct PyRpcaResult {
    #[pyo3(get)]
    low_rank: Vec<Vec<f64>>,
    #[pyo3(get)]
    sparse: Vec<Vec<f64>>,
    #[pyo3(get)]
    iters: usize,
    #[pyo3(get)]
    final_residual: f64,
    #[pyo3(get)]
    converged: bool,
}

/// Result of `robust_edg`.
#[pyclass(name = "EdgResult")]
struct PyEdgResult {
    out: redg_core::EdgOutput,
}

#[pymethods]
impl PyEdgResult {
    /// Estimated points, one list per point.
    fn coordinates(&self, r: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.out.gram.coordinates(r).map_err(to_py_err)?.to_points())
    }

    /// Full Gram estimate.
    fn gram(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.out.x_hat())
    }

    #[getter]
    fn f_hat(&self) -> Vec<Vec<f64>> {
        matrix_to_rows(&self.out.f_hat)
    }

    #[getter]
    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = &self.out.diagnostics;
        let dict = PyDict::new(py);
        dict.set_item("rpca_iters", d.rpca_iters)?;
        dict.set_item("rpca_residual", d.rpca_residual)?;
        dict.set_item("rpca_converged", d.rpca_converged)?;
        dict.set_item("rpca_skipped", d.rpca_skipped)?;
        dict.set_item("outliers_detected", d.outliers_detected)?;
        dict.set_item("anchor_rank", d.anchor_rank)?;
        dict.set_item("warning", d.warning.clone())?;
        Ok(dict)
    }
}

/// Halton points in `[-width, width]^dim`, one list per point.
#[pyfunction]
#[pyo3(signature = (total, anchors, dim, box_half_width=100.0))]
fn halton_points(total: usize, anchors: usize, dim: usize, box_half_width: f64) -> PyResult<Vec<Vec<f64>>> {
    let mut cfg = SynthConfig::new(total, anchors, dim, 0.0, 0);
    cfg.box_half_width = box_half_width;
    Ok(data::halton_points(&cfg).map_err(to_py_err)?.to_points())
}

/// Squared distance matrix of a list of points.
#[pyfunction]
fn points_to_sqdist(points: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(matrix_to_rows(&redg_core::points_to_sqdist(&points_from_list(&points)?)))
}

type Rows = Vec<Vec<f64>>;

/// Corrupt a block; returns the observed block and the corrupted positions.
#[pyfunction]
fn corrupt_block(f: Vec<Vec<f64>>, alpha: f64, seed: u64) -> PyResult<(Rows, Vec<(usize, usize)>)> {
    let (out, spec) = data::corrupt_block(&matrix_from_rows(&f)?, alpha, seed).map_err(to_py_err)?;
    Ok((matrix_to_rows(&out), spec.support))
}

#[pyfunction]
fn rpca_solve(y: Vec<Vec<f64>>, config: PyRpcaConfig) -> PyResult<PyRpcaResult> {
    let res = redg_core::rpca_solve(&matrix_from_rows(&y)?, &config.inner).map_err(to_py_err)?;
    Ok(PyRpcaResult {
        low_rank: matrix_to_rows(&res.low_rank),
        sparse: matrix_to_rows(&res.sparse),
        iters: res.iters,
        final_residual: res.final_residual,
        converged: res.converged,
    })
}

/// Recover the Gram matrix from the anchor block `e` and the anchor-target block `f`.
#[pyfunction]
#[pyo3(signature = (e, f, r, config=None, skip_rpca=false))]
fn robust_edg(
    e: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    r: usize,
    config: Option<PyRpcaConfig>,
    skip_rpca: bool,
) -> PyResult<PyEdgResult> {
    let blocks = SqDistBlocks::new(matrix_from_rows(&e)?, matrix_from_rows(&f)?).map_err(to_py_err)?;
    let cfg = config.map(|c| c.inner).unwrap_or_else(|| redg_core::RpcaConfig::new(r + 2));
    let opts = EdgOptions { skip_rpca, ..EdgOptions::default() };
    let out = redg_core::robust_edg(&blocks, r, &cfg, &opts).map_err(to_py_err)?;
    Ok(PyEdgResult { out })
}

/// Align `estimate` onto `truth`; returns `(rotation, translation, rmse)`.
#[pyfunction]
#[pyo3(signature = (estimate, truth, allow_reflection=true))]
fn procrustes_align(
    estimate: Vec<Vec<f64>>,
    truth: Vec<Vec<f64>>,
    allow_reflection: bool,
) -> PyResult<(Vec<Vec<f64>>, Vec<f64>, f64)> {
    let res =
        redg_core::procrustes_align_with(&points_from_list(&estimate)?, &points_from_list(&truth)?, allow_reflection)
            .map_err(to_py_err)?;
    Ok((matrix_to_rows(&res.rotation), res.translation.iter().copied().collect(), res.rmse))
}

/// Header id and atom coordinates of the first model of a PDB file.
#[pyfunction]
#[pyo3(signature = (path, hetatm=true, hydrogens=true))]
fn parse_pdb(path: std::path::PathBuf, hetatm: bool, hydrogens: bool) -> PyResult<(String, Vec<Vec<f64>>)> {
    let s = data::parse_pdb_file(&path, RecordFilter { hetatm, hydrogens }).map_err(to_py_err)?;
    Ok((s.id, s.atoms.to_points()))
}

/// Evenly spaced or seeded random anchor ordering of `0..total`.
#[pyfunction]
#[pyo3(signature = (total, m, policy="evenly_spaced", seed=0))]
fn select_anchors(total: usize, m: usize, policy: &str, seed: u64) -> PyResult<Vec<usize>> {
    let policy = match policy.parse::<AnchorPolicy>().map_err(to_py_err)? {
        AnchorPolicy::UniformRandom { .. } => AnchorPolicy::UniformRandom { seed },
        p => p,
    };
    data::select_anchors(total, m, policy).map_err(to_py_err)
}

/// Run one synthetic cell; returns a dict with the summary and per-trial RMSEs.
#[pyfunction]
#[pyo3(signature = (total, anchors, dim, alpha, trials, seed=0, config=None, skip_rpca=false, parallel=false))]
#[allow(clippy::too_many_arguments)]
fn run_synth<'py>(
    py: Python<'py>,
    total: usize,
    anchors: usize,
    dim: usize,
    alpha: f64,
    trials: usize,
    seed: u64,
    config: Option<PyRpcaConfig>,
    skip_rpca: bool,
    parallel: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let settings = TrialSettings {
        rpca: config.map(|c| c.inner).unwrap_or_else(|| redg_core::RpcaConfig::new(dim + 2)),
        edg: EdgOptions { skip_rpca, ..EdgOptions::default() },
        parallel,
    };
    let cell = SynthCell { total, anchors, dim, alpha };
    let run = py.detach(|| run_synth_cell(cell, trials, seed, &settings, false)).map_err(to_py_err)?;
    let dict = PyDict::new(py);
    dict.set_item("mean_rmse", run.summary.mean_rmse)?;
    dict.set_item("std_rmse", run.summary.std_rmse)?;
    dict.set_item("trials", run.summary.trials)?;
    dict.set_item("failed", run.summary.failed)?;
    dict.set_item("rmse", run.records.iter().map(|r| r.rmse).collect::<Vec<_>>())?;
    Ok(dict)
}

#[pymodule]
fn redg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRpcaConfig>()?;
    m.add_class::<PyRpcaResult>()?;
    m.add_class::<PyEdgResult>()?;
    m.add_function(wrap_pyfunction!(halton_points, m)?)?;
    m.add_function(wrap_pyfunction!(points_to_sqdist, m)?)?;
    m.add_function(wrap_pyfunction!(corrupt_block, m)?)?;
    m.add_function(wrap_pyfunction!(rpca_solve, m)?)?;
    m.add_function(wrap_pyfunction!(robust_edg, m)?)?;
    m.add_function(wrap_pyfunction!(procrustes_align, m)?)?;
    m.add_function(wrap_pyfunction!(parse_pdb, m)?)?;
    m.add_function(wrap_pyfunction!(select_anchors, m)?)?;
    m.add_function(wrap_pyfunction!(run_synth, m)?)?;
    Ok(())
}
