use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use qphi::exactnum::{eval_angle, frac_multiple, parse_rational, AngleSpec, BoundedReal};
use qphi::qpoch::ComplexParam;
use qphi::qseries::SeriesParams;

fn err(e: qphi::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn pair(b: &BoundedReal) -> (f64, f64) {
    (b.to_f64(), b.abs_error())
}

/// An exactly specified irrational angle.
#[pyclass(name = "Angle", frozen)]
struct PyAngle(AngleSpec);

#[pymethods]
impl PyAngle {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Angle('{}')", self.0)
    }

    /// `(value, abs_error)` at the given precision.
    #[pyo3(signature = (precision_bits = 128))]
    fn value(&self, precision_bits: u64) -> PyResult<(f64, f64)> {
        eval_angle(&self.0, precision_bits).map(|b| pair(&b)).map_err(err)
    }

    /// Fractional part of `k * theta` as `(value, abs_error)`.
    #[pyo3(signature = (k, target_error = 1e-15))]
    fn frac_multiple(&self, k: u64, target_error: f64) -> PyResult<(f64, f64)> {
        frac_multiple(&self.0, k, target_error).map(|b| pair(&b)).map_err(err)
    }

    /// The first partial quotients as decimal strings.
    fn continued_fraction(&self, terms: usize) -> PyResult<Vec<String>> {
        let cf = qphi::diophant::cf_expand(&self.0, terms).map_err(err)?;
        let n = cf.available().map_or(terms, |a| a.min(terms));
        Ok(cf.quotients(n).iter().map(|a| a.to_string()).collect())
    }

    fn bad_approx_constant(&self, py: Python<'_>, scan_limit: u64) -> PyResult<Py<PyAny>> {
        to_py(py, &qphi::diophant::bad_approx_constant(&self.0, scan_limit).map_err(err)?)
    }

    fn is_liouville(&self) -> bool {
        self.0.is_liouville()
    }
}

/// A parameter `polar:<mod>@<angle>` or `combo:<alpha>,<beta>`.
#[pyclass(name = "Param", frozen)]
struct PyParam(ComplexParam);

#[pymethods]
impl PyParam {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse().map(Self).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Param('{}')", self.0)
    }

    fn is_unit(&self) -> bool {
        self.0.is_unit()
    }

    /// `log|(a; q)_n|` as `(value, abs_error)`.
    fn log_abs_qpochhammer(&self, theta: &PyAngle, n: u64) -> PyResult<(f64, f64)> {
        qphi::qpoch::log_abs_qpochhammer(&self.0, &theta.0, n)
            .map(|b| pair(&b))
            .map_err(err)
    }

    /// Root-test points at the given checkpoints.
    fn root_test(&self, py: Python<'_>, theta: &PyAngle, checkpoints: Vec<u64>) -> PyResult<Py<PyAny>> {
        to_py(py, &qphi::qpoch::root_test_sequence(&self.0, &theta.0, &checkpoints).map_err(err)?)
    }
}

/// The series `r phi s` with base modulus `base_modulus`.
#[pyclass(name = "Series", frozen)]
struct PySeries(SeriesParams);

#[pymethods]
impl PySeries {
    #[new]
    #[pyo3(signature = (upper, lower, theta, base_modulus = "1"))]
    fn new(upper: Vec<String>, lower: Vec<String>, theta: &str, base_modulus: &str) -> PyResult<Self> {
        let parse = |v: Vec<String>| v.iter().map(|s| s.parse()).collect::<qphi::Result<Vec<_>>>();
        Ok(Self(SeriesParams {
            upper: parse(upper).map_err(err)?,
            lower: parse(lower).map_err(err)?,
            theta: theta.parse().map_err(err)?,
            base_modulus: parse_rational(base_modulus).map_err(err)?,
        }))
    }

    fn validate(&self) -> Vec<String> {
        qphi::qseries::validate_params(&self.0)
    }

    fn predicted_radius(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &qphi::qseries::predicted_radius(&self.0, None).map_err(err)?)
    }

    fn empirical_radius(&self, py: Python<'_>, n_max: u64) -> PyResult<Py<PyAny>> {
        py.detach(|| qphi::qseries::empirical_radius(&self.0, n_max))
            .map_err(err)
            .and_then(|r| to_py(py, &r))
    }

    fn log_abs_coefficient(&self, n: u64) -> PyResult<(f64, f64)> {
        qphi::qseries::log_abs_coefficient(&self.0, n)
            .map(|b| pair(&b))
            .map_err(err)
    }

    #[pyo3(signature = (n, z = Complex64::new(1.0, 0.0)))]
    fn term_ratio(&self, py: Python<'_>, n: u64, z: Complex64) -> PyResult<Py<PyAny>> {
        to_py(py, &qphi::qseries::term_ratio(&self.0, n, z).map_err(err)?)
    }

    fn partial_sum(&self, py: Python<'_>, z: Complex64, terms: u64) -> PyResult<Py<PyAny>> {
        to_py(py, &qphi::qseries::partial_sum(&self.0, z, terms).map_err(err)?)
    }
}

#[pyfunction]
fn verify_sqrt2_inequality(py: Python<'_>, max_m: u64) -> PyResult<Py<PyAny>> {
    to_py(py, &qphi::diophant::verify_sqrt2_inequality(max_m).map_err(err)?)
}

#[pyfunction]
fn closed_form_integral(r: f64) -> PyResult<f64> {
    qphi::ergodic::closed_form_integral(r).map_err(err)
}

/// Exclusion-set report for the kernel `log|1 - e^{2 pi i x}|`.
#[pyfunction]
#[pyo3(signature = (theta, n, epsilon = 0.05))]
fn singular_average_report(py: Python<'_>, theta: &PyAngle, n: u64, epsilon: f64) -> PyResult<Py<PyAny>> {
    let kernel = qphi::ergodic::LogKernel::plain(num_rational::BigRational::from_integer(1.into())).map_err(err)?;
    let c = qphi::ergodic::SingularitySpec::origin();
    let report = py
        .detach(|| qphi::ergodic::singular_average_report(&kernel, &theta.0, &[c], n, epsilon))
        .map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn liouville_check_small(py: Python<'_>, k_seq: Vec<u8>, depth: usize, n: usize) -> PyResult<Py<PyAny>> {
    let seq = qphi::liouville::LiouvilleSeq::build(&k_seq, depth).map_err(err)?;
    to_py(py, &qphi::liouville::check_small(&seq, n).map_err(err)?)
}

/// Run the command-line front end; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> (i32, String, String) {
    py.detach(|| {
        let mut out = Vec::new();
        let mut errs = Vec::new();
        let argv = std::iter::once("qphi".to_string()).chain(args);
        let code = qphi::cli::run(argv, &mut out, &mut errs);
        (
            code,
            String::from_utf8_lossy(&out).into_owned(),
            String::from_utf8_lossy(&errs).into_owned(),
        )
    })
}

#[pymodule]
fn qphi_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", qphi::cli::VERSION)?;
    m.add_class::<PyAngle>()?;
    m.add_class::<PyParam>()?;
    m.add_class::<PySeries>()?;
    m.add_function(wrap_pyfunction!(verify_sqrt2_inequality, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_integral, m)?)?;
    m.add_function(wrap_pyfunction!(singular_average_report, m)?)?;
    m.add_function(wrap_pyfunction!(liouville_check_small, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
