//! Python bindings: kernels, largest-eigenvalue CDFs, rate tables, Painlevé
//! residuals, the sampler and the unitary correspondence.

use gcye::fredholm::{gap_series, GapResult as CoreGap};
use gcye::painleve::{theta_from_gap, theta_pv_residual};
use gcye::ratelab::{cdf_rate, kernel_rate, RateTable};
use gcye::sampler::{ks_distance, run_chains, ChainConfig as CoreChain};
use gcye::unitary::correspondence_check;
use gcye::{EnsembleConfig, Error, KernelHandle, KernelKind, SParam};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(gcye_py, NumericalError, PyRuntimeError);

fn py_err(e: Error) -> PyErr {
    if e.is_domain() {
        PyValueError::new_err(e.to_string())
    } else {
        NumericalError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for gcye::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn kind(s_re: f64, s_im: f64, n: usize) -> PyResult<KernelKind> {
    let s = SParam::new(s_re, s_im).py()?;
    Ok(if n == 0 {
        KernelKind::Limit(s)
    } else {
        KernelKind::FiniteScaled(EnsembleConfig::new(s, n).py()?)
    })
}

/// Scaled finite-N kernel (n >= 1) or its limit (n = 0).
#[pyclass(frozen)]
struct Kernel {
    inner: KernelHandle,
    #[pyo3(get)]
    n: usize,
}

#[pymethods]
impl Kernel {
    #[new]
    #[pyo3(signature = (s_re, s_im=0.0, n=0))]
    fn new(s_re: f64, s_im: f64, n: usize) -> PyResult<Self> {
        Ok(Kernel {
            inner: KernelHandle::new(kind(s_re, s_im, n)?),
            n,
        })
    }

    #[getter]
    fn s(&self) -> (f64, f64) {
        let s = self.inner.s();
        (s.re(), s.im())
    }

    fn __call__(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.eval(x, y).py()
    }

    fn dx(&self, x: f64, y: f64) -> PyResult<f64> {
        self.inner.eval_dx(x, y).py()
    }

    /// Correlation matrix on the given points, as a list of rows.
    fn matrix(&self, points: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let m = gcye::kernels::correlation_matrix(&self.inner, &points).py()?;
        Ok(m.row_iter().map(|r| r.iter().copied().collect()).collect())
    }

    fn __repr__(&self) -> String {
        let (re, im) = self.s();
        format!("Kernel(s_re={re}, s_im={im}, n={})", self.n)
    }
}

#[pyclass(frozen, get_all)]
struct GapResult {
    t: f64,
    value: f64,
    method: &'static str,
    error_estimate: f64,
    order_used: usize,
}

impl From<CoreGap> for GapResult {
    fn from(g: CoreGap) -> Self {
        GapResult {
            t: g.t,
            value: g.value,
            method: g.method.name(),
            error_estimate: g.error_estimate,
            order_used: g.order_used,
        }
    }
}

#[pymethods]
impl GapResult {
    fn __repr__(&self) -> String {
        format!("GapResult(t={}, value={}, method='{}', error_estimate={:e})", self.t, self.value, self.method, self.error_estimate)
    }
}

/// P[λ₁/N <= x]; n = 0 gives the N → ∞ limit.
#[pyfunction]
#[pyo3(signature = (x, s_re=0.0, s_im=0.0, n=0))]
fn cdf_largest(py: Python<'_>, x: f64, s_re: f64, s_im: f64, n: usize) -> PyResult<f64> {
    let k = kind(s_re, s_im, n)?;
    py.detach(|| gcye::cdf_largest(k, x)).py()
}

#[pyfunction]
#[pyo3(signature = (t, s_re=0.0, s_im=0.0, n=0, order=32))]
fn gap_nystrom(py: Python<'_>, t: f64, s_re: f64, s_im: f64, n: usize, order: usize) -> PyResult<GapResult> {
    let kh = KernelHandle::new(kind(s_re, s_im, n)?);
    py.detach(|| gcye::gap_nystrom(&kh, t, order)).py().map(Into::into)
}

#[pyfunction(name = "gap_series")]
#[pyo3(signature = (t, s_re=0.0, s_im=0.0, n=0, kmax=8))]
fn gap_series_py(py: Python<'_>, t: f64, s_re: f64, s_im: f64, n: usize, kmax: usize) -> PyResult<GapResult> {
    let kh = KernelHandle::new(kind(s_re, s_im, n)?);
    py.detach(|| gap_series(&kh, t, kmax)).py().map(Into::into)
}

fn table_dict<'py>(py: Python<'py>, t: &RateTable) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("x", t.x_grid.clone())?;
    d.set_item("n_list", t.n_list.clone())?;
    d.set_item("raw_gaps", t.raw_gaps.clone())?;
    d.set_item("scaled_gaps", t.scaled_gaps.clone())?;
    d.set_item("spread", t.spread())?;
    Ok(d)
}

/// N·sup|K_[N] − K_∞|·(xy)^{Re s+1} over [x0, 20 x0]².
#[pyfunction(name = "kernel_rate")]
#[pyo3(signature = (s_re, s_im, x0, n_list, grid_size=33))]
fn kernel_rate_py<'py>(
    py: Python<'py>,
    s_re: f64,
    s_im: f64,
    x0: f64,
    n_list: Vec<usize>,
    grid_size: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let s = SParam::new(s_re, s_im).py()?;
    let t = py.detach(|| kernel_rate(s, x0, &n_list, grid_size)).py()?;
    table_dict(py, &t)
}

/// N·|F_N(x) − F_∞(x)| per x.
#[pyfunction(name = "cdf_rate")]
fn cdf_rate_py<'py>(py: Python<'py>, s_re: f64, s_im: f64, x_points: Vec<f64>, n_list: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
    let s = SParam::new(s_re, s_im).py()?;
    let t = py.detach(|| cdf_rate(s, &x_points, &n_list)).py()?;
    table_dict(py, &t)
}

/// Max relative σ-PV residual of θ on the given τ points.
#[pyfunction]
#[pyo3(signature = (s_re, s_im, taus, n=0, cheb_order=32))]
fn pv_residual(py: Python<'_>, s_re: f64, s_im: f64, taus: Vec<f64>, n: usize, cheb_order: usize) -> PyResult<f64> {
    let k = kind(s_re, s_im, n)?;
    let s = k.s();
    let lo = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = taus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    py.detach(|| {
        let th = theta_from_gap(k, [lo, hi], cheb_order)?;
        taus.iter().try_fold(0.0f64, |m, &tau| {
            let (r, nrm) = theta_pv_residual(&th.sample(tau)?, s);
            Ok(m.max(if nrm > 0.0 { r / nrm } else { 0.0 }))
        })
    })
    .py()
}

/// Metropolis–Hastings draws of λ₁/N from `chains` parallel chains.
#[pyfunction]
#[pyo3(signature = (n, s_re=0.0, s_im=0.0, steps=20000, chains=4, seed=1, thin=1))]
fn sample<'py>(
    py: Python<'py>,
    n: usize,
    s_re: f64,
    s_im: f64,
    steps: usize,
    chains: usize,
    seed: u64,
    thin: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = EnsembleConfig::new(SParam::new(s_re, s_im).py()?, n).py()?;
    let cc = CoreChain {
        thin,
        ..CoreChain::new(cfg, steps, seed)
    };
    let (batch, ks) = py
        .detach(|| {
            let b = run_chains(cc, chains)?;
            let ks = ks_distance(&b, KernelKind::FiniteScaled(cfg))?;
            Ok((b, ks))
        })
        .py()?;
    let d = PyDict::new(py);
    d.set_item("draws", batch.draws)?;
    d.set_item("acceptance_rate", batch.acceptance_rate)?;
    d.set_item("ess", batch.ess)?;
    d.set_item("ks_finite", ks)?;
    d.set_item("seed", seed)?;
    Ok(d)
}

/// Which ratio of the unitary and limit kernels is constant, and its value.
#[pyfunction(name = "correspondence_check")]
#[pyo3(signature = (s_re, s_im, grid, tol=1e-6))]
fn correspondence_check_py<'py>(py: Python<'py>, s_re: f64, s_im: f64, grid: Vec<f64>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
    let s = SParam::new(s_re, s_im).py()?;
    let c = correspondence_check(s, &grid, tol).py()?;
    let d = PyDict::new(py);
    d.set_item("orientation", c.orientation.name())?;
    d.set_item("jacobian", c.jacobian)?;
    d.set_item("constant", (c.constant.re, c.constant.im))?;
    d.set_item("variation", c.variation)?;
    Ok(d)
}

#[pymodule]
fn gcye_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Kernel>()?;
    m.add_class::<GapResult>()?;
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_function(wrap_pyfunction!(cdf_largest, m)?)?;
    m.add_function(wrap_pyfunction!(gap_nystrom, m)?)?;
    m.add_function(wrap_pyfunction!(gap_series_py, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_rate_py, m)?)?;
    m.add_function(wrap_pyfunction!(cdf_rate_py, m)?)?;
    m.add_function(wrap_pyfunction!(pv_residual, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(correspondence_check_py, m)?)?;
    Ok(())
}
