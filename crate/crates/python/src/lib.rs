//! Python bindings for `jcsim`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use jcsim::evolve::{self, Branch, TimeGrid};
use jcsim::fock::{self, Operator, TruncationPolicy};
use jcsim::measures::{self, WignerSpec};
use jcsim::scenario::{self, ScenarioError, SweepSpec};
use jcsim::states;
use jcsim::{Error, C64};

fn core_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::InvalidDimension(_)
        | Error::InvalidShape(_)
        | Error::InvalidState(_)
        | Error::InvalidOperator(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn scenario_err(e: ScenarioError) -> PyErr {
    match e {
        ScenarioError::Parse(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_operator(rows: Vec<Vec<C64>>) -> PyResult<Operator> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(Operator::from_fn(n, |i, j| rows[i][j]))
}

fn from_operator(op: &Operator) -> Vec<Vec<C64>> {
    (0..op.dim()).map(|i| (0..op.dim()).map(|j| op.get(i, j)).collect()).collect()
}

/// Squeezed coherent thermal field parameters.
#[pyclass(name = "FieldParams", from_py_object)]
#[derive(Clone)]
struct PyFieldParams {
    inner: states::FieldParams,
}

#[pymethods]
impl PyFieldParams {
    #[new]
    #[pyo3(signature = (nbar_c=0.0, nbar_s=0.0, nbar_th=0.0, phi=0.0, alpha_phase=0.0))]
    fn new(nbar_c: f64, nbar_s: f64, nbar_th: f64, phi: f64, alpha_phase: f64) -> PyResult<Self> {
        let inner = states::FieldParams { nbar_c, nbar_s, nbar_th, phi, alpha_phase };
        inner.validate().map_err(core_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn nbar_c(&self) -> f64 {
        self.inner.nbar_c
    }

    #[getter]
    fn nbar_s(&self) -> f64 {
        self.inner.nbar_s
    }

    #[getter]
    fn nbar_th(&self) -> f64 {
        self.inner.nbar_th
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }

    fn mean_photon_number(&self) -> f64 {
        self.inner.mean_photon_number()
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!("FieldParams(nbar_c={}, nbar_s={}, nbar_th={}, phi={})", p.nbar_c, p.nbar_s, p.nbar_th, p.phi)
    }
}

/// Truncated field density matrix.
#[pyclass(name = "FieldState")]
struct PyFieldState {
    inner: states::FieldState,
}

#[pymethods]
impl PyFieldState {
    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max()
    }

    #[getter]
    fn tail_mass(&self) -> f64 {
        self.inner.tail_mass
    }

    fn photon_distribution(&self) -> Vec<f64> {
        self.inner.photon_distribution()
    }

    fn mean_photon_number(&self) -> f64 {
        self.inner.mean_photon_number()
    }

    fn purity(&self) -> f64 {
        self.inner.purity()
    }

    fn density_matrix(&self) -> Vec<Vec<C64>> {
        from_operator(&self.inner.rho)
    }

    /// Wigner function on a grid, as `values[i][j]` at `x_i + i p_j`.
    #[pyo3(signature = (x_min=-5.0, x_max=5.0, p_min=-5.0, p_max=5.0, nx=101, np=101))]
    fn wigner(&self, x_min: f64, x_max: f64, p_min: f64, p_max: f64, nx: usize, np: usize) -> PyResult<Vec<Vec<f64>>> {
        let spec = WignerSpec { x_range: (x_min, x_max), p_range: (p_min, p_max), nx, np };
        let w = measures::wigner(&self.inner.rho, &spec).map_err(core_err)?;
        Ok((0..nx).map(|i| (0..np).map(|j| w.get(i, j)).collect()).collect())
    }
}

#[pyfunction]
#[pyo3(signature = (params, n_max=80, pad_factor=2, tail_tol=1e-8))]
fn scts_state(params: PyFieldParams, n_max: usize, pad_factor: usize, tail_tol: f64) -> PyResult<PyFieldState> {
    let policy = TruncationPolicy::new(n_max, pad_factor, tail_tol).map_err(core_err)?;
    let inner = states::scts_state(params.inner, &policy).map_err(core_err)?;
    Ok(PyFieldState { inner })
}

#[pyfunction]
fn pcd_analytic(l: usize, params: PyFieldParams) -> PyResult<f64> {
    states::pcd_analytic(l, &params.inner).map_err(core_err)
}

#[pyfunction]
fn bell_atoms(theta: f64) -> Vec<Vec<C64>> {
    from_operator(&states::bell_atoms(theta).rho)
}

#[pyfunction]
fn werner_atoms(eta: f64) -> PyResult<Vec<Vec<C64>>> {
    Ok(from_operator(&states::werner_atoms(eta).map_err(core_err)?.rho))
}

#[pyfunction]
fn concurrence(rho: Vec<Vec<C64>>) -> PyResult<f64> {
    measures::concurrence(&to_operator(rho)?).map_err(core_err)
}

#[pyfunction]
fn negativity(rho: Vec<Vec<C64>>, dims: Vec<usize>, transposed: Vec<usize>) -> PyResult<f64> {
    measures::negativity_bipartite(&to_operator(rho)?, &dims, &transposed).map_err(core_err)
}

#[pyfunction]
fn partial_trace(rho: Vec<Vec<C64>>, dims: Vec<usize>, keep: Vec<usize>) -> PyResult<Vec<Vec<C64>>> {
    Ok(from_operator(&fock::partial_trace(&to_operator(rho)?, &dims, &keep).map_err(core_err)?))
}

#[pyfunction]
#[pyo3(signature = (n, lambda_t, branch="excited"))]
fn jcm_amplitudes(n: usize, lambda_t: f64, branch: &str) -> PyResult<(C64, C64)> {
    let branch = match branch {
        "excited" => Branch::Excited,
        "ground" => Branch::Ground,
        other => return Err(PyValueError::new_err(format!("branch must be 'excited' or 'ground', got '{other}'"))),
    };
    Ok(evolve::jcm_amplitudes(n, lambda_t, branch))
}

type OracleRow = (f64, f64, f64, f64, f64);

/// `(t, exact_e, exact_g, closed_e, closed_g)` for one atom started in `|e, n⟩`.
#[pyfunction]
#[pyo3(signature = (n, t_max=10.0, samples=2001, n_max=24))]
fn single_atom_oracle(n: usize, t_max: f64, samples: usize, n_max: usize) -> PyResult<Vec<OracleRow>> {
    let grid = TimeGrid::uniform(t_max, samples).map_err(core_err)?;
    let track = evolve::single_atom_oracle(n, &grid, n_max).map_err(core_err)?;
    Ok(track.iter().map(|s| (s.time, s.exact[0], s.exact[1], s.closed_form[0], s.closed_form[1])).collect())
}

#[pyfunction]
#[pyo3(signature = (times, values, threshold=measures::ESD_THRESHOLD))]
fn detect_esd(times: Vec<f64>, values: Vec<f64>, threshold: f64) -> PyResult<Vec<(f64, f64)>> {
    if times.len() != values.len() {
        return Err(PyValueError::new_err("times and values differ in length"));
    }
    Ok(measures::detect_esd(&times, &values, threshold).intervals)
}

/// Output of one simulated scenario.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    inner: scenario::RunOutput,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn n_max(&self) -> usize {
        self.inner.n_max
    }

    #[getter]
    fn channels(&self) -> Vec<String> {
        self.inner.series.as_ref().map(|s| s.channels.clone()).unwrap_or_default()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.series.as_ref().map(|s| s.times.clone()).unwrap_or_default()
    }

    fn channel(&self, name: &str) -> PyResult<Vec<f64>> {
        self.inner
            .series
            .as_ref()
            .and_then(|s| s.channel(name))
            .ok_or_else(|| PyValueError::new_err(format!("no channel '{name}'")))
    }

    /// Output file names mapped to their contents.
    fn files(&self) -> BTreeMap<String, String> {
        self.inner.files().iter().cloned().collect()
    }

    fn write(&self, out_dir: PathBuf) -> PyResult<()> {
        std::fs::create_dir_all(&out_dir).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        for (name, content) in self.inner.files() {
            std::fs::write(out_dir.join(name), content).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        }
        Ok(())
    }
}

/// Declarative scenario (same format as the command-line config files).
#[pyclass(name = "Scenario")]
struct PyScenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    #[pyo3(signature = (text, overrides=Vec::new()))]
    fn from_config(text: &str, overrides: Vec<String>) -> PyResult<Self> {
        let mut settings = scenario::Settings::parse(text).map_err(scenario_err)?;
        for o in &overrides {
            settings.apply_override(o).map_err(scenario_err)?;
        }
        Ok(Self { inner: scenario::Scenario::from_settings(settings).map_err(scenario_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides=Vec::new()))]
    fn load(path: PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        Ok(Self { inner: scenario::load(&path, &overrides).map_err(scenario_err)? })
    }

    fn manifest(&self) -> String {
        self.inner.manifest()
    }

    fn simulate(&self, py: Python<'_>) -> PyResult<PyRunResult> {
        let s = self.inner.clone();
        let out = py.detach(move || scenario::simulate(&s)).map_err(scenario_err)?;
        Ok(PyRunResult { inner: out })
    }

    /// Runs a sweep and writes its outputs; returns the per-point
    /// directory names.
    #[pyo3(signature = (out_dir, parameter=None, values=None, threads=None))]
    fn sweep(
        &self,
        py: Python<'_>,
        out_dir: PathBuf,
        parameter: Option<String>,
        values: Option<String>,
        threads: Option<usize>,
    ) -> PyResult<Vec<String>> {
        let spec = match (parameter, values, &self.inner.sweep) {
            (Some(p), Some(v), _) => SweepSpec::parse(&p, &v).map_err(scenario_err)?,
            (None, None, Some(sw)) => sw.clone(),
            _ => return Err(PyValueError::new_err("give both parameter and values, or a [sweep] section")),
        };
        let s = self.inner.clone();
        let out = py.detach(move || scenario::sweep(&s, &spec, &out_dir, threads)).map_err(scenario_err)?;
        Ok(out.points.into_iter().map(|(name, _)| name).collect())
    }
}

#[pymodule]
fn jcsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFieldParams>()?;
    m.add_class::<PyFieldState>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(scts_state, m)?)?;
    m.add_function(wrap_pyfunction!(pcd_analytic, m)?)?;
    m.add_function(wrap_pyfunction!(bell_atoms, m)?)?;
    m.add_function(wrap_pyfunction!(werner_atoms, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence, m)?)?;
    m.add_function(wrap_pyfunction!(negativity, m)?)?;
    m.add_function(wrap_pyfunction!(partial_trace, m)?)?;
    m.add_function(wrap_pyfunction!(jcm_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(single_atom_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(detect_esd, m)?)?;
    Ok(())
}
