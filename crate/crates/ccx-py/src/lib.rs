//! Python bindings for `ccx`.
//!
//! Fields are passed as flat row-major lists of floats; sample sets as lists with `None` off K.

use ccx::delaunay::{triangulate as delaunay_triangulate, PointCloud};
use ccx::envelope::{convex_envelope as envelope, SolverConfig, StencilConfig};
use ccx::field::{lipschitz_lower_bound, GridSpec, Module, SampledFunction, ScalarField};
use ccx::prototypes::{analytic_average as prototype_average, PrototypeId};
use ccx::tasks::{self, NoiseKind, NoiseSpec, PaddingMode, PaddingSpec, TestFunctionId};
use ccx::transforms::{self, Engine, TransformParams};
use ccx::{io, metrics, CcxError};
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

create_exception!(ccx, Error, PyValueError, "Invalid input or parameters.");
create_exception!(ccx, NotConvergedError, PyRuntimeError, "The envelope iteration hit its sweep limit.");

fn to_py(e: CcxError) -> PyErr {
    match e {
        CcxError::Io(e) => PyOSError::new_err(e.to_string()),
        e @ CcxError::NotConverged(_) => NotConvergedError::new_err(e.to_string()),
        e => Error::new_err(e.to_string()),
    }
}

#[pyclass(name = "GridSpec", module = "ccx", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyGridSpec(GridSpec);

#[pymethods]
impl PyGridSpec {
    #[new]
    fn new(nx: usize, ny: usize, x0: f64, y0: f64, h: f64) -> PyResult<Self> {
        GridSpec::new(nx, ny, x0, y0, h).map(Self).map_err(to_py)
    }

    /// Square `n x n` grid on the unit square.
    #[staticmethod]
    fn unit(n: usize) -> PyResult<Self> {
        tasks::unit_grid(n).map(Self).map_err(to_py)
    }

    #[getter]
    fn nx(&self) -> usize {
        self.0.nx
    }

    #[getter]
    fn ny(&self) -> usize {
        self.0.ny
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.0.x0
    }

    #[getter]
    fn y0(&self) -> f64 {
        self.0.y0
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h
    }

    /// Coordinates of node `(i, j)`.
    fn node(&self, i: usize, j: usize) -> PyResult<(f64, f64)> {
        if i >= self.0.nx || j >= self.0.ny {
            return Err(Error::new_err(format!("node ({i}, {j}) is outside the grid")));
        }
        Ok(self.0.node(self.0.index(i, j)))
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        let s = &self.0;
        format!("GridSpec(nx={}, ny={}, x0={}, y0={}, h={})", s.nx, s.ny, s.x0, s.y0, s.h)
    }
}

#[pyclass(name = "ScalarField", module = "ccx", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyField(ScalarField);

#[pymethods]
impl PyField {
    #[new]
    fn new(spec: PyRef<'_, PyGridSpec>, values: Vec<f64>) -> PyResult<Self> {
        ScalarField::new(spec.0, values).map(Self).map_err(to_py)
    }

    /// One of the bundled test functions `franke`, `cpa` or `dpa` sampled on `spec`.
    #[staticmethod]
    fn test_function(name: &str, spec: PyRef<'_, PyGridSpec>) -> PyResult<Self> {
        Ok(Self(test_function_id(name)?.field(spec.0)))
    }

    /// The bundled 512x512 grey-scale photograph.
    #[staticmethod]
    fn camera() -> Self {
        Self(io::camera())
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        io::field_from_csv(text).map(Self).map_err(to_py)
    }

    fn to_csv(&self) -> String {
        io::field_to_csv(&self.0)
    }

    #[staticmethod]
    fn from_pgm(data: &[u8]) -> PyResult<Self> {
        io::pgm_decode(data).map(Self).map_err(to_py)
    }

    fn to_pgm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &io::pgm_encode(&self.0))
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(self.0.spec)
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    fn at(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.0.spec.nx || j >= self.0.spec.ny {
            return Err(Error::new_err(format!("node ({i}, {j}) is outside the grid")));
        }
        Ok(self.0.at(i, j))
    }

    fn min(&self) -> f64 {
        self.0.min()
    }

    fn max(&self) -> f64 {
        self.0.max()
    }

    fn max_abs_diff(&self, other: PyRef<'_, PyField>) -> PyResult<f64> {
        if self.0.spec != other.0.spec {
            return Err(Error::new_err("fields are on different grids"));
        }
        Ok(self.0.max_abs_diff(&other.0))
    }

    fn __len__(&self) -> usize {
        self.0.values.len()
    }

    fn __repr__(&self) -> String {
        format!("ScalarField({}x{}, min={}, max={})", self.0.spec.nx, self.0.spec.ny, self.0.min(), self.0.max())
    }
}

fn module_of(module: Option<f64>) -> Module {
    module.map_or(Module::AutoInfinity, Module::Finite)
}

#[pyclass(name = "SampledFunction", module = "ccx", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySample(SampledFunction);

#[pymethods]
impl PySample {
    /// `values` holds one entry per node, `None` off the sample set; `module=None` is automatic.
    #[new]
    #[pyo3(signature = (spec, values, module=None))]
    fn new(spec: PyRef<'_, PyGridSpec>, values: Vec<Option<f64>>, module: Option<f64>) -> PyResult<Self> {
        SampledFunction::from_options(spec.0, &values, module_of(module)).map(Self).map_err(to_py)
    }

    #[getter]
    fn spec(&self) -> PyGridSpec {
        PyGridSpec(self.0.spec())
    }

    #[getter]
    fn values(&self) -> Vec<Option<f64>> {
        self.0.to_options()
    }

    /// `(index, value)` pairs of the sample set.
    fn samples(&self) -> Vec<(usize, f64)> {
        self.0.samples().collect()
    }

    /// Lipschitz lower bound `L` and minimal separation `alpha` of the samples.
    fn lipschitz(&self) -> PyResult<(f64, f64)> {
        lipschitz_lower_bound(&self.0).map(|l| (l.l, l.alpha)).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.0.samples().count()
    }
}

#[pyclass(name = "TransformParams", module = "ccx", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyParams(TransformParams);

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (lam, module=None, engine="exact", tol=1e-9, max_sweeps=1_000_000, stencil_radius=1))]
    fn new(
        lam: f64,
        module: Option<f64>,
        engine: &str,
        tol: f64,
        max_sweeps: usize,
        stencil_radius: usize,
    ) -> PyResult<Self> {
        let engine = match engine {
            "exact" => Engine::Exact,
            "stencil" => Engine::Stencil,
            other => return Err(Error::new_err(format!("unknown engine {other:?}, expected exact or stencil"))),
        };
        let solver = SolverConfig { max_sweeps, ..SolverConfig::with_tol(tol) };
        let p = TransformParams::new(lam)
            .with_module(module_of(module))
            .with_engine(engine)
            .with_solver(solver)
            .with_stencil(StencilConfig::with_radius(stencil_radius).map_err(to_py)?);
        p.validate().map_err(to_py)?;
        Ok(Self(p))
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn module(&self) -> Option<f64> {
        match self.0.module {
            Module::Finite(m) => Some(m),
            Module::AutoInfinity => None,
        }
    }

    fn __repr__(&self) -> String {
        format!("TransformParams(lam={}, module={:?}, engine={:?})", self.0.lambda, self.0.module, self.0.engine)
    }
}

fn test_function_id(name: &str) -> PyResult<TestFunctionId> {
    match name {
        "franke" => Ok(TestFunctionId::Franke),
        "cpa" => Ok(TestFunctionId::Cpa),
        "dpa" => Ok(TestFunctionId::Dpa),
        other => Err(Error::new_err(format!("unknown test function {other:?}"))),
    }
}

/// Convex envelope by the stencil iteration.
#[pyfunction]
#[pyo3(signature = (field, stencil_radius=1, tol=1e-9, max_sweeps=1_000_000))]
fn convex_envelope(
    py: Python<'_>,
    field: PyRef<'_, PyField>,
    stencil_radius: usize,
    tol: f64,
    max_sweeps: usize,
) -> PyResult<PyField> {
    let stencil = StencilConfig::with_radius(stencil_radius).map_err(to_py)?;
    let solver = SolverConfig { max_sweeps, ..SolverConfig::with_tol(tol) };
    let f = field.0.clone();
    py.detach(|| envelope(&f, &stencil, &solver)).map(|e| PyField(e.field)).map_err(to_py)
}

#[pyfunction]
fn lower_transform(py: Python<'_>, field: PyRef<'_, PyField>, params: PyRef<'_, PyParams>) -> PyResult<PyField> {
    let (f, p) = (field.0.clone(), params.0.clone());
    py.detach(|| transforms::lower_transform(&f, &p)).map(|t| PyField(t.field)).map_err(to_py)
}

#[pyfunction]
fn upper_transform(py: Python<'_>, field: PyRef<'_, PyField>, params: PyRef<'_, PyParams>) -> PyResult<PyField> {
    let (f, p) = (field.0.clone(), params.0.clone());
    py.detach(|| transforms::upper_transform(&f, &p)).map(|t| PyField(t.field)).map_err(to_py)
}

/// Average approximation of a sample; returns the field and the module used.
#[pyfunction]
fn average_approximation(
    py: Python<'_>,
    sample: PyRef<'_, PySample>,
    params: PyRef<'_, PyParams>,
) -> PyResult<(PyField, f64)> {
    let (sf, p) = (sample.0.clone(), params.0.clone());
    py.detach(|| transforms::average_approximation(&sf, &p)).map(|a| (PyField(a.field), a.m_used)).map_err(to_py)
}

/// Reconstruction from the level lines of `field`; returns the field and a report dict.
#[pyfunction]
#[pyo3(signature = (field, levels, params, pieces=None, margin=None))]
fn reconstruct_levelset<'py>(
    py: Python<'py>,
    field: PyRef<'_, PyField>,
    levels: Vec<f64>,
    params: PyRef<'_, PyParams>,
    pieces: Option<Vec<u8>>,
    margin: Option<usize>,
) -> PyResult<(PyField, Bound<'py, PyDict>)> {
    let (f, p) = (field.0.clone(), params.0.clone());
    let margin = margin.unwrap_or_else(|| tasks::default_margin(&f.spec));
    let (rec, e, mp) = py
        .detach(|| {
            let ls = tasks::build_levelset_sample(&f, &levels, pieces.as_deref())?;
            let rec = tasks::reconstruct_levelset(&ls, &p, margin)?;
            let e = metrics::error_report(&f, &rec.field, &ls.sample)?;
            let mp = tasks::max_principle_check(&f, &rec.field, &levels)?;
            Ok((rec, e, mp))
        })
        .map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("eps", e.eps)?;
    d.set_item("eps_k", e.eps_k)?;
    d.set_item("m_used", rec.m_used)?;
    d.set_item("delta0", rec.delta0)?;
    d.set_item("lambda_required", rec.lambda_required)?;
    d.set_item("lambda_below_threshold", rec.lambda_below_threshold)?;
    d.set_item("max_principle_passed", mp.passed)?;
    Ok((PyField(rec.field), d))
}

/// Reconstruction from a random fraction `density` of the nodes of `field`.
///
/// Returns the field, the sample and the relative L2 error.
#[pyfunction]
#[pyo3(signature = (field, density, seed, params, margin=None))]
fn reconstruct_scatter(
    py: Python<'_>,
    field: PyRef<'_, PyField>,
    density: f64,
    seed: u64,
    params: PyRef<'_, PyParams>,
    margin: Option<usize>,
) -> PyResult<(PyField, PySample, f64)> {
    let (f, p) = (field.0.clone(), params.0.clone());
    let margin = margin.unwrap_or_else(|| tasks::default_margin(&f.spec));
    py.detach(|| {
        let sample = tasks::build_scatter_sample(&f, density, seed)?;
        let (rec, _) = tasks::reconstruct_scatter(&sample, &p, margin)?;
        let eps = metrics::relative_l2(&f, &rec, None)?;
        Ok((PyField(rec), PySample(sample), eps))
    })
    .map_err(to_py)
}

/// Fills the nodes flagged in `damage` from the others.
#[pyfunction]
fn inpaint(
    py: Python<'_>,
    image: PyRef<'_, PyField>,
    damage: Vec<bool>,
    params: PyRef<'_, PyParams>,
) -> PyResult<PyField> {
    let (f, p) = (image.0.clone(), params.0.clone());
    py.detach(|| tasks::inpaint(&f, &damage, &p)).map(PyField).map_err(to_py)
}

/// Salt & pepper corruption and restoration; returns a dict with the images and PSNR values.
#[pyfunction]
#[pyo3(signature = (image, density, seed, params, pad=2))]
fn denoise_salt_pepper<'py>(
    py: Python<'py>,
    image: PyRef<'_, PyField>,
    density: f64,
    seed: u64,
    params: PyRef<'_, PyParams>,
    pad: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let (f, p) = (image.0.clone(), params.0.clone());
    let noise = NoiseSpec { density, seed, kind: NoiseKind::SaltPepper };
    let padding = PaddingSpec { width: pad, mode: PaddingMode::Mirror };
    let out = py.detach(|| tasks::denoise_salt_pepper(&f, &noise, &padding, &p)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("restored", PyField(out.restored))?;
    d.set_item("corrupted", PyField(out.corrupted))?;
    d.set_item("noise_mask", out.noise_mask.member)?;
    d.set_item("psnr_db", out.psnr_db)?;
    d.set_item("corrupted_psnr_db", out.corrupted_psnr_db)?;
    d.set_item("m_used", out.m_used)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (a, b, mask=None))]
fn relative_l2(a: PyRef<'_, PyField>, b: PyRef<'_, PyField>, mask: Option<PyRef<'_, PySample>>) -> PyResult<f64> {
    metrics::relative_l2(&a.0, &b.0, mask.as_ref().map(|m| &m.0.mask)).map_err(to_py)
}

#[pyfunction]
fn psnr(original: PyRef<'_, PyField>, restored: PyRef<'_, PyField>) -> PyResult<f64> {
    metrics::psnr(&original.0, &restored.0).map_err(to_py)
}

/// Delaunay cells of a point cloud as dicts with vertices, centre, radius and regularity.
#[pyfunction]
#[pyo3(signature = (points, values, cocircular_tol=1e-9))]
fn triangulate<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64)>,
    values: Vec<f64>,
    cocircular_tol: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let pc = PointCloud::new(points, values).map_err(to_py)?;
    let cells = delaunay_triangulate(&pc, cocircular_tol).map_err(to_py)?;
    cells
        .into_iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("vertices", c.vertex_ids)?;
            d.set_item("center", c.center)?;
            d.set_item("radius", c.radius)?;
            d.set_item("regular", c.regular)?;
            Ok(d)
        })
        .collect()
}

/// Closed-form average of a worked example with its default parameters.
#[pyfunction]
fn analytic_average(name: &str, lam: f64, x: f64, y: f64) -> PyResult<f64> {
    let id = PrototypeId::from_name(name, lam).map_err(to_py)?;
    prototype_average(&id, x, y).map_err(to_py)
}

#[pymodule(name = "ccx")]
fn ccx_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("Error", m.py().get_type::<Error>())?;
    m.add("NotConvergedError", m.py().get_type::<NotConvergedError>())?;
    m.add_class::<PyGridSpec>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PySample>()?;
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(convex_envelope, m)?)?;
    m.add_function(wrap_pyfunction!(lower_transform, m)?)?;
    m.add_function(wrap_pyfunction!(upper_transform, m)?)?;
    m.add_function(wrap_pyfunction!(average_approximation, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_levelset, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_scatter, m)?)?;
    m.add_function(wrap_pyfunction!(inpaint, m)?)?;
    m.add_function(wrap_pyfunction!(denoise_salt_pepper, m)?)?;
    m.add_function(wrap_pyfunction!(relative_l2, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(triangulate, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_average, m)?)?;
    Ok(())
}
