//! Python bindings. Results come back as plain dicts (via JSON) and lists.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rtgrowth::evolve::{measure_growth_rate, run_linear, LinearStepper, ModeSeed};
use rtgrowth::forms::AssembledForms;
use rtgrowth::grid::{BoxMesh, FeSpace};
use rtgrowth::linalg::EigOptions;
use rtgrowth::spectral::{
    find_growth_rate, incompressible_growth_rate, reconstruct_mode, upper_bound, AlphaSolver,
    GrowthOptions, IncompressibleOptions,
};
use rtgrowth::steady::{DensitySpec, PhysParams, SteadyProfile};

fn err(e: rtgrowth::Error) -> PyErr {
    use rtgrowth::Error::*;
    match e {
        InvalidInput(_)
        | Config(_)
        | FileNotFound(_)
        | BadParams(_)
        | BadExtents { .. }
        | TooFewCells { .. }
        | NonPositiveDensity { .. }
        | NoValidConstant(_)
        | DimensionMismatch { .. }
        | ProfileDomainMismatch { .. }
        | MeshMismatch => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj
        .py()
        .import("json")?
        .call_method1("dumps", (obj,))?
        .extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Physical constants g, γ, μ, λ.
#[pyclass(name = "Params", frozen, skip_from_py_object)]
struct PyParams(PhysParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (g=1.0, gamma=5.0/3.0, mu=0.1, lambda_v=0.1))]
    fn new(g: f64, gamma: f64, mu: f64, lambda_v: f64) -> PyResult<Self> {
        PhysParams::new(g, gamma, mu, lambda_v)
            .map(PyParams)
            .map_err(err)
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn mu0(&self) -> f64 {
        self.0.mu0
    }

    fn __repr__(&self) -> String {
        let p = &self.0;
        format!(
            "Params(g={}, gamma={}, mu={}, lambda_v={})",
            p.g, p.gamma, p.mu, p.lambda_v
        )
    }
}

/// Steady state built from a density dict such as
/// `{"family": "linear", "rho0": 1.0, "slope": 1.0}`.
#[pyclass(name = "Profile", frozen)]
struct PyProfile(Arc<SteadyProfile>);

#[pymethods]
impl PyProfile {
    #[new]
    #[pyo3(signature = (density, params, z_range=(0.0, 1.0), constant=None, e_floor=None))]
    fn new(
        density: &Bound<'_, PyDict>,
        params: &PyParams,
        z_range: (f64, f64),
        constant: Option<f64>,
        e_floor: Option<f64>,
    ) -> PyResult<Self> {
        let spec: DensitySpec = from_py(density.as_any())?;
        let prof =
            SteadyProfile::from_spec(&spec, z_range, params.0, constant, e_floor).map_err(err)?;
        Ok(PyProfile(Arc::new(prof)))
    }

    fn rho(&self, z: f64) -> f64 {
        self.0.rho(z)
    }

    fn e(&self, z: f64) -> f64 {
        self.0.e(z)
    }

    fn p(&self, z: f64) -> f64 {
        self.0.p(z)
    }

    fn classification<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.classify())
    }

    fn hydrostatic_residual(&self) -> f64 {
        self.0.hydrostatic_residual()
    }

    /// Analytic upper bound on α(s).
    fn upper_bound(&self) -> f64 {
        upper_bound(&self.0)
    }
}

/// Discretised problem on a box with `cells` Q1 cells per axis.
#[pyclass(name = "Problem", frozen)]
struct PyProblem(Arc<AssembledForms>);

#[pymethods]
impl PyProblem {
    #[new]
    #[pyo3(signature = (profile, cells, horizontal=vec![(0.0, 1.0)]))]
    fn new(profile: &PyProfile, cells: Vec<usize>, horizontal: Vec<(f64, f64)>) -> PyResult<Self> {
        let mut extents = horizontal;
        extents.push(profile.0.z_range());
        let mesh = BoxMesh::new(extents.len(), &extents, &cells).map_err(err)?;
        let space = Arc::new(FeSpace::velocity(Arc::new(mesh)));
        let forms = AssembledForms::assemble(space, profile.0.clone()).map_err(err)?;
        Ok(PyProblem(Arc::new(forms)))
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.0.n_dofs()
    }

    /// Largest generalised eigenvalue α(s).
    #[pyo3(signature = (s, dense=false))]
    fn alpha(&self, py: Python<'_>, s: f64, dense: bool) -> PyResult<f64> {
        py.detach(|| {
            let mut solver = AlphaSolver::new(&self.0, EigOptions::default());
            let r = if dense {
                solver.alpha_dense(s)
            } else {
                solver.alpha(s)
            };
            r.map(|a| a.alpha).map_err(err)
        })
    }

    /// Fixed point Λ² = α(Λ) with its diagnostics.
    #[pyo3(signature = (frak_s=true))]
    fn growth_rate<'py>(&self, py: Python<'py>, frak_s: bool) -> PyResult<Bound<'py, PyAny>> {
        let opts = GrowthOptions {
            frak_s,
            ..GrowthOptions::default()
        };
        let r = py
            .detach(|| find_growth_rate(&self.0, &opts))
            .map_err(err)?;
        to_py(py, &r)
    }

    fn incompressible_rate(&self, py: Python<'_>) -> PyResult<f64> {
        py.detach(|| incompressible_growth_rate(&self.0, &IncompressibleOptions::default()))
            .map(|r| r.lambda_inc)
            .map_err(err)
    }

    /// Growing mode: velocity coefficients, nodal ρ̃ and θ̃, residuals.
    fn mode<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let forms = self.0.clone();
        let m = py
            .detach(|| {
                let r = find_growth_rate(
                    &forms,
                    &GrowthOptions {
                        frak_s: false,
                        ..GrowthOptions::default()
                    },
                )?;
                let scalar = Arc::new(FeSpace::scalar(forms.space.mesh().clone()));
                reconstruct_mode(&forms, &r, scalar)
            })
            .map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("lambda", m.lambda)?;
        d.set_item("v", m.v.clone())?;
        d.set_item("rho", m.rho.clone())?;
        d.set_item("theta", m.theta.clone())?;
        d.set_item("residuals", to_py(py, &m.residuals)?)?;
        Ok(d)
    }

    /// Seeds the linearised equations with the mode and returns (Λ, fitted rate).
    #[pyo3(signature = (dt=0.01, e_foldings=2.0, amplitude=1e-3))]
    fn evolve_linear(
        &self,
        py: Python<'_>,
        dt: f64,
        e_foldings: f64,
        amplitude: f64,
    ) -> PyResult<(f64, f64)> {
        let forms = self.0.clone();
        py.detach(|| {
            let r = find_growth_rate(
                &forms,
                &GrowthOptions {
                    frak_s: false,
                    ..GrowthOptions::default()
                },
            )?;
            let seed = ModeSeed::new(&forms, r.lambda, r.eigvec)?;
            let mut stepper = LinearStepper::new(forms.clone(), dt)?;
            let mut state = seed.state(amplitude);
            let traj = run_linear(&mut stepper, &mut state, e_foldings / r.lambda, 10)?;
            Ok((r.lambda, measure_growth_rate(&traj, None)?.lambda))
        })
        .map_err(err)
    }
}

#[pymodule]
fn rtgrowth_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyProblem>()?;
    Ok(())
}
