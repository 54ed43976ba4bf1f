//! Python bindings: `import critmass`.

use critmass_core::data::quality_from_profile as core_quality;
use critmass_core::hypothesis::{self, TestResult};
use critmass_core::micro::generate_dataset;
use critmass_core::nls::{self, CompareOptions};
use critmass_core::ranking::{self, ResidualReport};
use critmass_core::report::{run_full_analysis, RunConfig};
use critmass_core::segmented;
use critmass_core::{self as core, ContinuityMode, Error, MicroParams, QualityProfile, Selector, WeightScheme};
use pyo3::exceptions::{PyIOError, PyLookupError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::Io(_) => PyIOError::new_err(msg),
        Error::Lookup(_) => PyLookupError::new_err(msg),
        Error::NotConverged { .. } | Error::Unstable { .. } => PyRuntimeError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(to_py)
}

#[pyclass(frozen, skip_from_py_object, module = "critmass")]
#[derive(Clone)]
struct Dataset {
    inner: core::Dataset,
}

#[pymethods]
impl Dataset {
    /// The embedded 2008 Statistics & Operational Research table.
    #[staticmethod]
    fn fixture() -> Self {
        Self { inner: core::Dataset::fixture() }
    }

    #[staticmethod]
    #[pyo3(signature = (path, weights = "2009"))]
    fn load(path: &str, weights: &str) -> PyResult<Self> {
        let scheme: WeightScheme = parse(weights)?;
        core::Dataset::load(path, &scheme).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (text, weights = "2009"))]
    fn parse(text: &str, weights: &str) -> PyResult<Self> {
        let scheme: WeightScheme = parse(weights)?;
        core::Dataset::parse_str(text, &scheme).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_pairs(headcounts: Vec<f64>, qualities: Vec<f64>) -> PyResult<Self> {
        core::Dataset::from_pairs(&headcounts, &qualities).map(|inner| Self { inner }).map_err(to_py)
    }

    /// A copy with one more record excluded, by name or as "#INDEX".
    fn exclude(&self, selector: &str) -> PyResult<Self> {
        let sel: Selector = parse(selector)?;
        self.inner.exclude(&sel).map(|inner| Self { inner }).map_err(to_py)
    }

    /// `(index, name, N, s, excluded)` for every record.
    fn records(&self) -> Vec<(usize, String, f64, f64, bool)> {
        self.inner
            .records()
            .iter()
            .map(|r| (r.index, r.name.clone(), r.headcount, r.quality, self.inner.is_excluded(r.index)))
            .collect()
    }

    #[getter]
    fn excluded(&self) -> Vec<usize> {
        self.inner.excluded().iter().copied().collect()
    }

    #[getter]
    fn active_len(&self) -> usize {
        self.inner.active_len()
    }

    #[getter]
    fn mean_headcount(&self) -> f64 {
        self.inner.mean_headcount()
    }

    #[getter]
    fn mean_quality(&self) -> f64 {
        self.inner.mean_quality()
    }

    fn headcounts(&self) -> Vec<f64> {
        self.inner.active_headcounts()
    }

    fn qualities(&self) -> Vec<f64> {
        self.inner.active_qualities()
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Dataset({} records, {} active)", self.inner.len(), self.inner.active_len())
    }
}

#[pyclass(frozen, skip_from_py_object, module = "critmass")]
#[derive(Clone)]
struct PiecewiseFit {
    inner: segmented::PiecewiseFit,
}

#[pymethods]
impl PiecewiseFit {
    #[getter]
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.params;
        let d = PyDict::new(py);
        for (k, v) in [("a1", p.a1), ("b1", p.b1), ("a2", p.a2), ("b2", p.b2), ("breakpoint", p.breakpoint)] {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    /// `None` until the fit has been bootstrapped.
    #[getter]
    fn standard_errors<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(e) = self.inner.errors else { return Ok(None) };
        let d = PyDict::new(py);
        for (k, v) in [
            ("a1", e.se_a1),
            ("b1", e.se_b1),
            ("a2", e.se_a2),
            ("b2", e.se_b2),
            ("breakpoint", e.se_breakpoint),
        ] {
            d.set_item(k, v)?;
        }
        Ok(Some(d))
    }

    #[getter]
    fn breakpoint(&self) -> f64 {
        self.inner.breakpoint()
    }

    #[getter]
    fn r_squared(&self) -> f64 {
        self.inner.r_squared
    }

    #[getter]
    fn sse(&self) -> f64 {
        self.inner.sse
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode.to_string()
    }

    #[getter]
    fn residuals(&self) -> Vec<f64> {
        self.inner.residuals.clone()
    }

    fn predict(&self, n: f64) -> f64 {
        self.inner.predict(n)
    }

    fn __repr__(&self) -> String {
        let p = self.inner.params;
        format!(
            "PiecewiseFit(mode={}, N_c={:.4}, a1={:.4}, b1={:.4}, a2={:.4}, b2={:.4}, R2={:.4})",
            self.inner.mode, p.breakpoint, p.a1, p.b1, p.a2, p.b2, self.inner.r_squared
        )
    }
}

#[pyclass(frozen, module = "critmass")]
struct Bootstrap {
    inner: segmented::Bootstrap,
}

#[pymethods]
impl Bootstrap {
    /// The point fit with standard errors filled in.
    #[getter]
    fn fit(&self) -> PiecewiseFit {
        PiecewiseFit { inner: self.inner.fit.clone() }
    }

    #[getter]
    fn resamples(&self) -> usize {
        self.inner.resamples
    }

    #[getter]
    fn discarded(&self) -> usize {
        self.inner.discarded
    }

    /// Percentile band on the given sizes: `(grid, prediction, lower, upper)`.
    #[pyo3(signature = (grid, level = 0.95))]
    fn band(&self, grid: Vec<f64>, level: f64) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        let b = segmented::confidence_band(&self.inner, &grid, level).map_err(to_py)?;
        Ok((b.grid, b.prediction, b.lower, b.upper))
    }
}

#[pyfunction]
#[pyo3(signature = (dataset, mode = "continuous"))]
fn fit_piecewise(dataset: &Dataset, mode: &str) -> PyResult<PiecewiseFit> {
    let mode: ContinuityMode = parse(mode)?;
    segmented::fit_piecewise(&dataset.inner, mode).map(|inner| PiecewiseFit { inner }).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (dataset, fit, seed, resamples = 10_000))]
fn bootstrap(dataset: &Dataset, fit: &PiecewiseFit, seed: u64, resamples: usize) -> PyResult<Bootstrap> {
    segmented::bootstrap_errors(&dataset.inner, &fit.inner, resamples, seed)
        .map(|inner| Bootstrap { inner })
        .map_err(to_py)
}

#[pyfunction]
fn critical_masses<'py>(py: Python<'py>, fit: &PiecewiseFit) -> PyResult<Bound<'py, PyDict>> {
    let m = segmented::critical_masses(&fit.inner).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("lower", m.lower)?;
    d.set_item("upper", m.upper)?;
    d.set_item("se_lower", m.se_lower)?;
    d.set_item("se_upper", m.se_upper)?;
    d.set_item("headline", m.headline())?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (dataset, ansatz, init = None))]
fn fit_ansatz<'py>(py: Python<'py>, dataset: &Dataset, ansatz: &str, init: Option<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let ansatz: core::Ansatz = parse(ansatz)?;
    let fit = nls::fit_ansatz(&dataset.inner, ansatz, init.as_deref()).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("ansatz", ansatz.to_string())?;
    d.set_item("parameter_names", ansatz.parameter_names().to_vec())?;
    d.set_item("parameters", fit.parameters)?;
    d.set_item("standard_errors", fit.standard_errors)?;
    d.set_item("r_squared", fit.r_squared)?;
    d.set_item("sse", fit.sse)?;
    d.set_item("converged", fit.converged)?;
    d.set_item("iterations", fit.iterations)?;
    Ok(d)
}

/// The piecewise model and the four ansaetze, best R² first.
#[pyfunction]
#[pyo3(signature = (dataset, mode = "continuous", resamples = None, seed = None))]
fn compare<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    mode: &str,
    resamples: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let bootstrap = match (resamples, seed) {
        (_, None) => None,
        (r, Some(s)) => Some((r.unwrap_or(10_000), s)),
    };
    let table = nls::compare_ansaetze(&dataset.inner, &CompareOptions { mode: parse(mode)?, bootstrap });
    table
        .rows
        .into_iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("model", row.model)?;
            d.set_item("formula", row.formula)?;
            d.set_item("parameter_names", row.parameter_names)?;
            d.set_item("parameters", row.parameters)?;
            d.set_item("standard_errors", row.standard_errors)?;
            d.set_item("r_squared", row.r_squared)?;
            d.set_item("converged", row.converged)?;
            d.set_item("error", row.error)?;
            Ok(d)
        })
        .collect()
}

fn test_dict<'py>(py: Python<'py>, t: TestResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("name", t.name)?;
    d.set_item("null_hypothesis", t.null_hypothesis)?;
    d.set_item("statistic", t.statistic)?;
    d.set_item("p_value", t.p_value)?;
    d.set_item("dof", t.dof)?;
    d.set_item("reject_at_005", t.decision_at_005 == core::Decision::Reject)?;
    d.set_item("note", t.note)?;
    Ok(d)
}

#[pyfunction]
fn test_no_correlation<'py>(py: Python<'py>, dataset: &Dataset) -> PyResult<Bound<'py, PyDict>> {
    test_dict(py, hypothesis::test_no_correlation(&dataset.inner).map_err(to_py)?)
}

#[pyfunction]
fn test_equal_slopes<'py>(py: Python<'py>, boot: &Bootstrap) -> PyResult<Bound<'py, PyDict>> {
    test_dict(py, hypothesis::test_equal_slopes(&boot.inner).map_err(to_py)?)
}

#[pyfunction]
fn test_zero_right_slope<'py>(py: Python<'py>, dataset: &Dataset, fit: &PiecewiseFit) -> PyResult<Bound<'py, PyDict>> {
    test_dict(py, hypothesis::test_zero_right_slope(&dataset.inner, &fit.inner).map_err(to_py)?)
}

#[pyfunction]
fn ks_normality<'py>(py: Python<'py>, residuals: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    test_dict(py, hypothesis::ks_normality(&residuals).map_err(to_py)?)
}

fn residual_dict<'py>(py: Python<'py>, r: &ResidualReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let devs: Vec<(usize, String, f64, bool)> =
        r.deviations.iter().map(|x| (x.index, x.name.clone(), x.deviation, x.excluded)).collect();
    let ranked: Vec<(usize, usize, String, f64)> =
        ranking::rank_groups(r).into_iter().map(|g| (g.rank, g.index, g.name, g.deviation)).collect();
    d.set_item("deviations", devs)?;
    d.set_item("range", r.range)?;
    d.set_item("std_dev", r.std_dev)?;
    d.set_item("ranking", ranked)?;
    Ok(d)
}

/// Deviations from the mean (`"mean"`) or from a piecewise fit (`"model"`).
#[pyfunction]
#[pyo3(signature = (dataset, mode = "mean", fit = None, include_excluded = true))]
fn residuals<'py>(
    py: Python<'py>,
    dataset: &Dataset,
    mode: &str,
    fit: Option<&PiecewiseFit>,
    include_excluded: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let report = match (mode, fit) {
        ("mean", _) => ranking::residuals_vs_mean(&dataset.inner, include_excluded),
        ("model", Some(f)) => ranking::residuals_vs_model(&dataset.inner, &f.inner).map_err(to_py)?,
        ("model", None) => return Err(PyValueError::new_err("mode 'model' needs a fit")),
        (other, _) => return Err(PyValueError::new_err(format!("unknown residual mode '{other}'"))),
    };
    residual_dict(py, &report)
}

#[pyfunction]
#[pyo3(signature = (p4, p3, p2, p1, pu, weights = "2009"))]
fn quality_from_profile(p4: f64, p3: f64, p2: f64, p1: f64, pu: f64, weights: &str) -> PyResult<f64> {
    let profile = QualityProfile::new(p4, p3, p2, p1, pu).map_err(to_py)?;
    Ok(core_quality(&profile, &parse(weights)?))
}

/// Synthetic groups from the microscopic strength model.
#[pyfunction]
#[pyo3(signature = (sizes, a, b, n_c, seed, c = 0.0, noise_sd = 0.0))]
fn simulate(sizes: Vec<f64>, a: f64, b: f64, n_c: f64, seed: u64, c: f64, noise_sd: f64) -> PyResult<Dataset> {
    let params = MicroParams { a, b, c, n_c, noise_sd, seed };
    generate_dataset(&sizes, &params).map(|inner| Dataset { inner }).map_err(to_py)
}

/// Full pipeline; returns the JSON report.
#[pyfunction]
#[pyo3(signature = (seed, exclude = Vec::new(), resamples = 10_000, mode = "continuous", input = None, weights = "2009", level = 0.95))]
fn run_report(
    seed: u64,
    exclude: Vec<String>,
    resamples: usize,
    mode: &str,
    input: Option<String>,
    weights: &str,
    level: f64,
) -> PyResult<String> {
    let cfg = RunConfig {
        input: input.map(Into::into),
        weights: weights.to_string(),
        exclude,
        mode: parse(mode)?,
        resamples,
        seed,
        level,
    };
    run_full_analysis(&cfg)
        .map(|a| a.to_json())
        .map_err(|e| PyRuntimeError::new_err(format!("{e}")))
}

#[pymodule]
fn critmass(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<PiecewiseFit>()?;
    m.add_class::<Bootstrap>()?;
    m.add_function(wrap_pyfunction!(fit_piecewise, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(critical_masses, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ansatz, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(test_no_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(test_equal_slopes, m)?)?;
    m.add_function(wrap_pyfunction!(test_zero_right_slope, m)?)?;
    m.add_function(wrap_pyfunction!(ks_normality, m)?)?;
    m.add_function(wrap_pyfunction!(residuals, m)?)?;
    m.add_function(wrap_pyfunction!(quality_from_profile, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_report, m)?)?;
    Ok(())
}
