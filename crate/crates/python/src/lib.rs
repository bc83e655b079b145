use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;

use hsolo::bench::{self as core_bench, FormatError};
use hsolo::{
    AffineFeature, Correspondence as CoreCorrespondence, Error, Homography as CoreHomography,
    Point2,
};

/// Correspondences as `(u1, v1, s1, theta1, u2, v2, s2, theta2)` rows.
type Rows = Vec<[f64; 8]>;

create_exception!(_hsolo, NoModelFound, PyException, "No model reached the support threshold.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NoModelFound => NoModelFound::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn format_err(e: FormatError) -> PyErr {
    match e {
        FormatError::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A 3x3 homography, stored with `h9 = 1` when possible.
#[pyclass(frozen, skip_from_py_object, module = "hsolo")]
#[derive(Clone)]
struct Homography {
    inner: CoreHomography,
}

#[pymethods]
impl Homography {
    /// Build from nine row-major entries.
    #[new]
    fn new(entries: [f64; 9]) -> PyResult<Self> {
        CoreHomography::new(entries).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn identity() -> Self {
        Self { inner: CoreHomography::identity() }
    }

    #[getter]
    fn entries(&self) -> [f64; 9] {
        *self.inner.entries()
    }

    /// Rows of the matrix as nested lists.
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.entries().chunks(3).map(<[f64]>::to_vec).collect()
    }

    fn project(&self, u: f64, v: f64) -> PyResult<(f64, f64)> {
        let p = self.inner.project(Point2::new(u, v)).map_err(to_py)?;
        Ok((p.u, p.v))
    }

    fn determinant(&self) -> f64 {
        self.inner.determinant()
    }

    fn invert(&self) -> PyResult<Self> {
        self.inner.invert().map(|inner| Self { inner }).map_err(to_py)
    }

    /// `self ∘ other`: applies `other` first.
    fn compose(&self, other: &Homography) -> PyResult<Self> {
        self.inner.compose(&other.inner).map(|inner| Self { inner }).map_err(to_py)
    }

    fn reprojection_error(&self, c: &Correspondence) -> PyResult<f64> {
        self.inner.reprojection_error(&c.inner).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Homography({:?})", self.inner.entries())
    }
}

/// A match between two affine-aware features: position, scale and angle in
/// each image.
#[pyclass(frozen, skip_from_py_object, module = "hsolo")]
#[derive(Clone)]
struct Correspondence {
    inner: CoreCorrespondence,
}

fn feature(u: f64, v: f64, s: f64, t: f64) -> PyResult<AffineFeature> {
    AffineFeature::new(Point2::new(u, v), s, t).map_err(to_py)
}

fn from_row(r: [f64; 8]) -> PyResult<CoreCorrespondence> {
    Ok(CoreCorrespondence::new(
        feature(r[0], r[1], r[2], r[3])?,
        feature(r[4], r[5], r[6], r[7])?,
    ))
}

fn to_row(c: &CoreCorrespondence) -> [f64; 8] {
    let (a, b) = (c.a, c.b);
    [a.p().u, a.p().v, a.scale(), a.angle(), b.p().u, b.p().v, b.scale(), b.angle()]
}

fn pool(rows: Rows) -> PyResult<Vec<CoreCorrespondence>> {
    rows.into_iter().map(from_row).collect()
}

#[pymethods]
impl Correspondence {
    #[new]
    #[pyo3(signature = (u1, v1, s1, theta1, u2, v2, s2, theta2))]
    #[allow(clippy::too_many_arguments)]
    fn new(u1: f64, v1: f64, s1: f64, theta1: f64, u2: f64, v2: f64, s2: f64, theta2: f64) -> PyResult<Self> {
        from_row([u1, v1, s1, theta1, u2, v2, s2, theta2]).map(|inner| Self { inner })
    }

    /// `(u1, v1, s1, theta1, u2, v2, s2, theta2)`
    fn row(&self) -> [f64; 8] {
        to_row(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Correspondence({:?})", to_row(&self.inner))
    }
}

#[pyclass(frozen, get_all, module = "hsolo")]
struct EstimationResult {
    model: Homography,
    inliers: Vec<usize>,
    support: usize,
    iterations: u64,
    inner_iterations: u64,
    elapsed: f64,
    /// Cost before and after refinement, when refinement ran.
    refinement_costs: Option<(f64, f64)>,
}

impl From<hsolo::EstimationResult> for EstimationResult {
    fn from(r: hsolo::EstimationResult) -> Self {
        Self {
            model: Homography { inner: r.model },
            refinement_costs: r.refinement.map(|s| (s.initial_cost, s.final_cost)),
            inliers: r.inlier_indices,
            support: r.support,
            iterations: r.iterations_run,
            inner_iterations: r.inner_iterations,
            elapsed: r.elapsed,
        }
    }
}

#[pymethods]
impl EstimationResult {
    fn __repr__(&self) -> String {
        format!(
            "EstimationResult(support={}, iterations={})",
            self.support, self.iterations
        )
    }
}

#[pyfunction]
fn required_iterations(w: f64, n: u32, p: f64) -> u64 {
    hsolo::required_iterations(w, n, p)
}

/// Least-squares homography from rows `(u1, v1, s1, theta1, u2, v2, s2, theta2)`.
/// Scales and angles are ignored.
#[pyfunction]
fn dlt_solve(rows: Rows) -> PyResult<Homography> {
    hsolo::dlt_solve(&pool(rows)?).map(|inner| Homography { inner }).map_err(to_py)
}

#[pyfunction]
fn single_match_homography(c: &Correspondence) -> Homography {
    Homography { inner: hsolo::single_match_homography(&c.inner) }
}

#[pyfunction]
#[pyo3(signature = (rows, *, n_f=21, w_f=0.7, epsilon_r=20.0, epsilon=4.0, p=0.95, seed=0, inlier_scaling=0.7, max_iterations=10_000_000))]
#[allow(clippy::too_many_arguments)]
fn hsolo_estimate(
    py: Python<'_>,
    rows: Rows,
    n_f: usize,
    w_f: f64,
    epsilon_r: f64,
    epsilon: f64,
    p: f64,
    seed: u64,
    inlier_scaling: f64,
    max_iterations: u64,
) -> PyResult<EstimationResult> {
    let pool = pool(rows)?;
    let cfg = hsolo::HsoloConfig {
        n_f,
        w_f,
        epsilon_r,
        epsilon,
        p,
        seed,
        inlier_scaling,
        max_outer_iterations: max_iterations,
    };
    py.detach(|| hsolo::hsolo_estimate(&pool, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rows, *, epsilon=4.0, p=0.95, seed=0, max_iterations=10_000_000))]
fn ransac(
    py: Python<'_>,
    rows: Rows,
    epsilon: f64,
    p: f64,
    seed: u64,
    max_iterations: u64,
) -> PyResult<EstimationResult> {
    let pool = pool(rows)?;
    let cfg = hsolo::RansacConfig {
        epsilon,
        p,
        seed,
        max_iterations,
        ..Default::default()
    };
    py.detach(|| hsolo::ransac_baseline(&pool, &cfg))
        .map(Into::into)
        .map_err(to_py)
}

/// Synthetic scene as `(rows, inlier_mask)`.
#[pyfunction]
#[pyo3(signature = (n_total, inlier_rate, seed=0, *, pixel_noise=0.0, scale_noise=0.0, angle_noise=0.0, truth=None))]
fn generate_scene(
    n_total: usize,
    inlier_rate: f64,
    seed: u64,
    pixel_noise: f64,
    scale_noise: f64,
    angle_noise: f64,
    truth: Option<&Homography>,
) -> PyResult<(Rows, Vec<bool>)> {
    let spec = hsolo::SceneSpec {
        pixel_noise_sigma: pixel_noise,
        scale_noise_sigma: scale_noise,
        angle_noise_sigma: angle_noise,
        truth: truth.map_or_else(hsolo::SceneSpec::default_truth, |h| h.inner),
        ..hsolo::SceneSpec::new(n_total, inlier_rate, seed)
    };
    let scene = hsolo::generate_scene(&spec).map_err(to_py)?;
    Ok((scene.correspondences.iter().map(to_row).collect(), scene.inlier_mask))
}

/// Reads a correspondence file as `(rows, inlier_mask or None)`.
#[pyfunction]
fn load_correspondences(path: std::path::PathBuf) -> PyResult<(Rows, Option<Vec<bool>>)> {
    let set = core_bench::load_correspondences(path).map_err(format_err)?;
    Ok((set.correspondences.iter().map(to_row).collect(), set.inlier_mask))
}

#[pyfunction]
#[pyo3(signature = (path, rows, inlier_mask=None))]
fn save_correspondences(path: std::path::PathBuf, rows: Rows, inlier_mask: Option<Vec<bool>>) -> PyResult<()> {
    let cs = pool(rows)?;
    if inlier_mask.as_ref().is_some_and(|m| m.len() != cs.len()) {
        return Err(PyValueError::new_err("inlier_mask length differs from rows"));
    }
    core_bench::save_correspondences(path, &cs, inlier_mask.as_deref()).map_err(format_err)
}

/// Theory table as a list of dicts.
#[pyfunction]
#[pyo3(signature = (w_values, n_values=vec![4], p=0.95, n_f=21, w_f=0.7))]
fn theory_curves<'py>(
    py: Python<'py>,
    w_values: Vec<f64>,
    n_values: Vec<u32>,
    p: f64,
    n_f: usize,
    w_f: f64,
) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
    use pyo3::types::PyDict;
    core_bench::theory_curves(&w_values, &n_values, p, n_f, w_f)
        .into_iter()
        .map(|r| {
            let d = PyDict::new(py);
            d.set_item("w", r.w)?;
            d.set_item("n", r.n)?;
            d.set_item("k_ransac", r.k_ransac)?;
            d.set_item("k_hsolo_outer", r.k_hsolo_outer)?;
            d.set_item("k_hsolo_inner", r.k_hsolo_inner)?;
            d.set_item("hsolo_cost", r.hsolo_cost)?;
            d.set_item("speedup", r.speedup)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
fn _hsolo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Homography>()?;
    m.add_class::<Correspondence>()?;
    m.add_class::<EstimationResult>()?;
    m.add("NoModelFound", m.py().get_type::<NoModelFound>())?;
    m.add_function(wrap_pyfunction!(required_iterations, m)?)?;
    m.add_function(wrap_pyfunction!(dlt_solve, m)?)?;
    m.add_function(wrap_pyfunction!(single_match_homography, m)?)?;
    m.add_function(wrap_pyfunction!(hsolo_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(ransac, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scene, m)?)?;
    m.add_function(wrap_pyfunction!(load_correspondences, m)?)?;
    m.add_function(wrap_pyfunction!(save_correspondences, m)?)?;
    m.add_function(wrap_pyfunction!(theory_curves, m)?)?;
    Ok(())
}
