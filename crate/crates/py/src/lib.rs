//! Python module `superpos`.
//!
//! Channels, distributions and regions are wrapped as classes; reports come
//! back as dicts. Probability tables are flat row-major lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use superpos::channel as chan;
use superpos::geom::Region2D;
use superpos::prob::{JointPmf, Pmf};
use superpos::scheme::{self, Dist};
use superpos::search::{self, SweepConfig};
use superpos::sim::{self, Decoder, SimConfig};
use superpos::theorem;

fn err(e: superpos::Error) -> PyErr {
    match e {
        superpos::Error::Invariant(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "BroadcastChannel", module = "superpos", frozen)]
struct PyChannel(chan::BroadcastChannel);

#[pymethods]
impl PyChannel {
    /// `transitions[(x * y1_size + y1) * y2_size + y2] = p(y1, y2 | x)`.
    #[new]
    fn new(x_size: usize, y1_size: usize, y2_size: usize, transitions: Vec<f64>) -> PyResult<Self> {
        chan::BroadcastChannel::new(x_size, y1_size, y2_size, transitions).map(Self).map_err(err)
    }

    /// Product channel from the two receiver marginals, each `x`-major.
    #[staticmethod]
    fn from_marginals(x_size: usize, y1_size: usize, y2_size: usize, m1: Vec<f64>, m2: Vec<f64>) -> PyResult<Self> {
        chan::BroadcastChannel::from_marginals(x_size, y1_size, y2_size, &m1, &m2).map(Self).map_err(err)
    }

    #[staticmethod]
    fn vector() -> Self {
        Self(chan::make_vector_bc())
    }

    #[staticmethod]
    fn bsc(eps1: f64, eps2: f64) -> PyResult<Self> {
        chan::make_bsc_bc(eps1, eps2).map(Self).map_err(err)
    }

    #[staticmethod]
    fn random(seed: u64, x_size: usize, y1_size: usize, y2_size: usize) -> PyResult<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        chan::BroadcastChannel::random(&mut rng, x_size, y1_size, y2_size).map(Self).map_err(err)
    }

    #[staticmethod]
    fn loads(text: &str) -> PyResult<Self> {
        chan::load_channel(text).map(Self).map_err(err)
    }

    fn dumps(&self) -> String {
        chan::save_channel(&self.0)
    }

    #[getter]
    fn x_size(&self) -> usize {
        self.0.x_size()
    }

    #[getter]
    fn y1_size(&self) -> usize {
        self.0.y1_size()
    }

    #[getter]
    fn y2_size(&self) -> usize {
        self.0.y2_size()
    }

    #[getter]
    fn transitions(&self) -> Vec<f64> {
        self.0.transitions().to_vec()
    }

    fn swapped(&self) -> Self {
        Self(self.0.swapped())
    }

    /// Whether receiver 2 is a degraded version of receiver 1.
    fn is_degraded(&self) -> bool {
        chan::is_stochastically_degraded(&self.0).is_degraded()
    }

    fn __repr__(&self) -> String {
        format!("BroadcastChannel(x_size={}, y1_size={}, y2_size={})", self.0.x_size(), self.0.y1_size(), self.0.y2_size())
    }
}

#[pyclass(name = "UVDist", module = "superpos", frozen)]
struct PyUV(scheme::UVDist);

#[pymethods]
impl PyUV {
    /// `xmap[u * len(pv) + v]` is the symbol sent for `(u, v)`.
    #[new]
    fn new(pu: Vec<f64>, pv: Vec<f64>, xmap: Vec<usize>, x_size: usize) -> PyResult<Self> {
        let pu = Pmf::new(pu).map_err(err)?;
        let pv = Pmf::new(pv).map_err(err)?;
        scheme::UVDist::new(pu, pv, xmap, x_size).map(Self).map_err(err)
    }

    #[staticmethod]
    fn random(seed: u64, u_size: usize, v_size: usize, x_size: usize) -> Self {
        Self(scheme::UVDist::random(&mut ChaCha8Rng::seed_from_u64(seed), u_size, v_size, x_size))
    }

    #[getter]
    fn pu(&self) -> Vec<f64> {
        self.0.pu().probs().to_vec()
    }

    #[getter]
    fn pv(&self) -> Vec<f64> {
        self.0.pv().probs().to_vec()
    }

    #[getter]
    fn xmap(&self) -> Vec<usize> {
        self.0.xmap().to_vec()
    }

    #[getter]
    fn x_size(&self) -> usize {
        self.0.x_size()
    }

    /// Induced `p(u, x)`, `u`-major.
    fn joint_ux(&self) -> Vec<f64> {
        self.0.joint_ux()
    }

    fn dumps(&self) -> String {
        scheme::save_dist(&Dist::Uv(self.0.clone()))
    }

    fn __repr__(&self) -> String {
        format!("UVDist(u_size={}, v_size={}, x_size={})", self.0.u_size(), self.0.v_size(), self.0.x_size())
    }
}

#[pyclass(name = "UXDist", module = "superpos", frozen)]
struct PyUX(scheme::UXDist);

#[pymethods]
impl PyUX {
    /// `pux[u * x_size + x] = p(u, x)`.
    #[new]
    fn new(u_size: usize, x_size: usize, pux: Vec<f64>) -> PyResult<Self> {
        let j = JointPmf::new(vec![u_size, x_size], pux).map_err(err)?;
        scheme::UXDist::new(j).map(Self).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (seed, u_size, x_size, alpha = 1.0))]
    fn random(seed: u64, u_size: usize, x_size: usize, alpha: f64) -> Self {
        Self(scheme::UXDist::random(&mut ChaCha8Rng::seed_from_u64(seed), u_size, x_size, alpha))
    }

    #[getter]
    fn pux(&self) -> Vec<f64> {
        self.0.pux().probs().to_vec()
    }

    #[getter]
    fn u_size(&self) -> usize {
        self.0.u_size()
    }

    #[getter]
    fn x_size(&self) -> usize {
        self.0.x_size()
    }

    /// Equivalent UV distribution whose `V` ranges over functions `U -> X`.
    fn functional_representation(&self) -> PyResult<PyUV> {
        scheme::functional_representation(&self.0).map(PyUV).map_err(err)
    }

    fn dumps(&self) -> String {
        scheme::save_dist(&Dist::Ux(self.0.clone()))
    }

    fn __repr__(&self) -> String {
        format!("UXDist(u_size={}, x_size={})", self.0.u_size(), self.0.x_size())
    }
}

/// Parses a distribution document into a `UVDist` or a `UXDist`.
#[pyfunction]
fn load_dist(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(match scheme::load_dist(text).map_err(err)? {
        Dist::Uv(d) => Py::new(py, PyUV(d))?.into_any(),
        Dist::Ux(d) => Py::new(py, PyUX(d))?.into_any(),
    })
}

#[pyclass(name = "Region", module = "superpos", frozen)]
struct PyRegion(Region2D);

#[pymethods]
impl PyRegion {
    /// Downward closure of the hull of `points`.
    #[new]
    fn new(points: Vec<(f64, f64)>) -> Self {
        Self(Region2D::from_points(&points))
    }

    /// Vertex lists, one per convex part.
    #[getter]
    fn parts(&self) -> Vec<Vec<(f64, f64)>> {
        self.0.parts().iter().map(|p| p.vertices().to_vec()).collect()
    }

    fn area(&self) -> f64 {
        self.0.area()
    }

    fn contains(&self, r1: f64, r2: f64) -> bool {
        self.0.contains((r1, r2))
    }

    #[pyo3(signature = (inner, eps = superpos::geom::INCLUSION_EPS))]
    fn includes(&self, inner: &PyRegion, eps: f64) -> bool {
        self.0.includes(&inner.0, eps)
    }

    fn union(&self, other: &PyRegion) -> Self {
        Self(self.0.union(&other.0))
    }

    fn intersect(&self, other: &PyRegion) -> Self {
        Self(self.0.intersect(&other.0))
    }

    fn convex_hull(&self) -> Self {
        Self(Region2D::convex_hull(&[&self.0]))
    }

    fn max_weighted_sum(&self, w1: f64, w2: f64) -> f64 {
        self.0.max_weighted_sum(w1, w2)
    }

    fn symmetric_difference_area(&self, other: &PyRegion) -> f64 {
        self.0.symmetric_difference_area(&other.0)
    }

    fn hausdorff(&self, other: &PyRegion) -> f64 {
        self.0.hausdorff(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("Region(parts={}, area={:.6})", self.0.parts().len(), self.0.area())
    }
}

#[pyfunction]
fn region_uv(ch: &PyChannel, d: &PyUV) -> PyResult<PyRegion> {
    scheme::region_uv(&ch.0, &d.0).map(PyRegion).map_err(err)
}

#[pyfunction]
fn region_ux(ch: &PyChannel, d: &PyUX) -> PyResult<PyRegion> {
    scheme::region_ux(&ch.0, &d.0).map(PyRegion).map_err(err)
}

#[pyfunction]
fn region_vx(ch: &PyChannel, d: &PyUX) -> PyResult<PyRegion> {
    scheme::region_vx(&ch.0, &d.0).map(PyRegion).map_err(err)
}

/// Mutual-information terms of a UV distribution, in bits.
#[pyfunction]
fn mi_terms_uv<'py>(py: Python<'py>, ch: &PyChannel, d: &PyUV) -> PyResult<Bound<'py, PyDict>> {
    let b = scheme::mi_bundle_uv(&ch.0, &d.0).map_err(err)?;
    let out = PyDict::new(py);
    for (k, v) in [
        ("i_u_y1", b.i_u_y1),
        ("i_v_y2", b.i_v_y2),
        ("i_x_y1", b.i_x_y1),
        ("i_x_y2", b.i_x_y2),
        ("i_x_y1_given_u", b.i_x_y1_given_u),
        ("i_x_y1_given_v", b.i_x_y1_given_v),
        ("i_x_y2_given_u", b.i_x_y2_given_u),
        ("i_x_y2_given_v", b.i_x_y2_given_v),
    ] {
        out.set_item(k, v)?;
    }
    Ok(out)
}

/// Mutual-information terms of a UX distribution, in bits.
#[pyfunction]
fn mi_terms_ux<'py>(py: Python<'py>, ch: &PyChannel, d: &PyUX) -> PyResult<Bound<'py, PyDict>> {
    let b = scheme::mi_bundle_ux(&ch.0, &d.0).map_err(err)?;
    let out = PyDict::new(py);
    for (k, v) in [
        ("i_u_y1", b.i_u_y1),
        ("i_u_y2", b.i_u_y2),
        ("i_x_y1", b.i_x_y1),
        ("i_x_y2", b.i_x_y2),
        ("i_x_y1_given_u", b.i_x_y1_given_u),
        ("i_x_y2_given_u", b.i_x_y2_given_u),
    ] {
        out.set_item(k, v)?;
    }
    Ok(out)
}

#[pyfunction]
fn entropy(p: Vec<f64>) -> PyResult<f64> {
    Ok(superpos::prob::entropy(&Pmf::new(p).map_err(err)?))
}

/// `I(A;B)` of a joint given as `shape = (|A|, |B|)` and flat probabilities.
#[pyfunction]
fn mutual_information(shape: (usize, usize), probs: Vec<f64>) -> PyResult<f64> {
    let j = JointPmf::new(vec![shape.0, shape.1], probs).map_err(err)?;
    superpos::prob::mutual_information(&j).map_err(err)
}

fn sweep_config(u_size: usize, v_size: usize, grid_steps: usize, random_samples: usize, rng_seed: u64, refine_iters: usize) -> PyResult<SweepConfig> {
    let c = SweepConfig { u_size, v_size, grid_steps, random_samples, rng_seed, refine_iters };
    c.validate().map_err(err)?;
    Ok(c)
}

macro_rules! sweep_fn {
    ($name:ident, $inner:path, $doc:literal) => {
        #[doc = $doc]
        #[pyfunction]
        #[pyo3(signature = (ch, u_size = 2, v_size = 2, grid_steps = 5, random_samples = 2000, rng_seed = 0, refine_iters = 50))]
        #[allow(clippy::too_many_arguments)]
        fn $name(
            py: Python<'_>,
            ch: &PyChannel,
            u_size: usize,
            v_size: usize,
            grid_steps: usize,
            random_samples: usize,
            rng_seed: u64,
            refine_iters: usize,
        ) -> PyResult<PyRegion> {
            let cfg = sweep_config(u_size, v_size, grid_steps, random_samples, rng_seed, refine_iters)?;
            let ch = ch.0.clone();
            py.detach(|| $inner(&ch, &cfg)).map(PyRegion).map_err(err)
        }
    };
}

sweep_fn!(sweep_uv, search::sweep_uv, "Hull of UV regions over a grid, random samples and local refinement.");
sweep_fn!(sweep_ux, search::sweep_ux, "Hull of UX regions.");
sweep_fn!(sweep_vx, search::sweep_vx, "Hull of VX regions.");

/// Runs the inclusion argument on one pair and returns its certificate.
#[pyfunction]
fn verify_inclusion<'py>(py: Python<'py>, ch: &PyChannel, d: &PyUX) -> PyResult<Bound<'py, PyDict>> {
    let c = theorem::verify_inclusion(&ch.0, &d.0).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("case", c.case_tag.to_string())?;
    out.set_item("cases_run", c.cases_run.iter().map(ToString::to_string).collect::<Vec<_>>())?;
    out.set_item("margin", c.inclusion_margin)?;
    out.set_item("verdict", c.verdict)?;
    out.set_item("sum_step_gap", c.sum_step_gap)?;
    out.set_item("ux_reduced_area_diff", c.ux_reduced_area_diff)?;
    out.set_item("uv_reduced_area_diff", c.uv_reduced_area_diff)?;
    out.set_item("witnesses", c.witnesses.into_iter().map(PyUV).collect::<Vec<_>>())?;
    Ok(out)
}

/// The vector-channel separation example.
#[pyfunction]
#[pyo3(signature = (grid_steps = 5, random_samples = 2000, rng_seed = 0, refine_iters = 50))]
fn strictness_demo<'py>(py: Python<'py>, grid_steps: usize, random_samples: usize, rng_seed: u64, refine_iters: usize) -> PyResult<Bound<'py, PyDict>> {
    let cfg = sweep_config(2, 2, grid_steps, random_samples, rng_seed, refine_iters)?;
    let r = py.detach(|| theorem::strictness_demo(&cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("max_sum_rate", r.max_sum_rate)?;
    out.set_item("sum_rate_bounded", r.sum_rate_bounded)?;
    out.set_item("unit_pair_achievable", r.unit_pair_achievable)?;
    out.set_item("gap_area", r.gap_area)?;
    out.set_item("holds", r.holds())?;
    out.set_item("uv_hull", PyRegion(r.uv_hull))?;
    out.set_item("ux_vx_hull", PyRegion(r.ux_vx_hull))?;
    Ok(out)
}

/// Ensemble-average error counts; `decoder` is `"ml"` or `"typicality"`.
#[pyfunction]
#[pyo3(signature = (ch, dist, n, r1, r2, trials, decoder = "ml", eps = sim::DEFAULT_EPS, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn estimate_error<'py>(
    py: Python<'py>,
    ch: &PyChannel,
    dist: &Bound<'py, PyAny>,
    n: usize,
    r1: f64,
    r2: f64,
    trials: usize,
    decoder: &str,
    eps: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let d = if let Ok(d) = dist.cast::<PyUV>() {
        Dist::Uv(d.get().0.clone())
    } else if let Ok(d) = dist.cast::<PyUX>() {
        Dist::Ux(d.get().0.clone())
    } else {
        return Err(PyValueError::new_err("dist must be a UVDist or a UXDist"));
    };
    let decoder = match decoder {
        "ml" => Decoder::Ml,
        "typicality" => Decoder::Typicality { eps },
        other => return Err(PyValueError::new_err(format!("unknown decoder {other:?}"))),
    };
    let cfg = SimConfig { n, r1, r2, trials, decoder, seed };
    let ch = ch.0.clone();
    let t = py.detach(|| sim::estimate_error(&d, &ch, &cfg)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("trials", t.trials)?;
    out.set_item("rx1_errors", t.rx1_errors)?;
    out.set_item("rx2_errors", t.rx2_errors)?;
    out.set_item("joint_errors", t.joint_errors)?;
    out.set_item("no_candidate", t.no_candidate)?;
    out.set_item("ambiguous", t.ambiguous)?;
    out.set_item("m1", t.m1)?;
    out.set_item("m2", t.m2)?;
    out.set_item("realized_rates", t.realized_rates)?;
    Ok(out)
}

/// Largest amount by which time-shared UX codes beat the plain UX hull.
#[pyfunction]
#[pyo3(signature = (ch, q_size = 2, u_size = 2, grid_steps = 5, random_samples = 2000, rng_seed = 0, refine_iters = 50))]
#[allow(clippy::too_many_arguments)]
fn coded_time_sharing_check<'py>(
    py: Python<'py>,
    ch: &PyChannel,
    q_size: usize,
    u_size: usize,
    grid_steps: usize,
    random_samples: usize,
    rng_seed: u64,
    refine_iters: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = sweep_config(u_size, 2, grid_steps, random_samples, rng_seed, refine_iters)?;
    let ch = ch.0.clone();
    let r = py.detach(|| search::coded_time_sharing_check(&ch, &cfg, q_size)).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("max_excess", r.max_excess)?;
    out.set_item("enlarged", r.enlarged)?;
    out.set_item("time_shared", PyRegion(r.time_shared))?;
    out.set_item("reference", PyRegion(r.reference))?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "superpos")]
fn superpos_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyChannel>()?;
    m.add_class::<PyUV>()?;
    m.add_class::<PyUX>()?;
    m.add_class::<PyRegion>()?;
    m.add_function(wrap_pyfunction!(load_dist, m)?)?;
    m.add_function(wrap_pyfunction!(region_uv, m)?)?;
    m.add_function(wrap_pyfunction!(region_ux, m)?)?;
    m.add_function(wrap_pyfunction!(region_vx, m)?)?;
    m.add_function(wrap_pyfunction!(mi_terms_uv, m)?)?;
    m.add_function(wrap_pyfunction!(mi_terms_ux, m)?)?;
    m.add_function(wrap_pyfunction!(entropy, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_uv, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_ux, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_vx, m)?)?;
    m.add_function(wrap_pyfunction!(verify_inclusion, m)?)?;
    m.add_function(wrap_pyfunction!(strictness_demo, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_error, m)?)?;
    m.add_function(wrap_pyfunction!(coded_time_sharing_check, m)?)?;
    Ok(())
}
