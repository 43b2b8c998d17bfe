//! Python access to domains, the extension operator and the primed norms.

use std::sync::Arc;

use mixext_core::domain::{validate_mtype, Domain, BUILTIN_DOMAINS};
use mixext_core::field::Field;
use mixext_core::lattice::MultiIndex;
use mixext_core::moduli::{besov_prime_norm, ModuliConfig};
use mixext_core::operators::{extend as core_extend, ExtensionParams};
use mixext_core::pwpoly::MultiLevelExpansion;
use mixext_core::registry::{TestFunction, REGISTRY};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: mixext_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn index(v: &[i64]) -> PyResult<MultiIndex> {
    MultiIndex::new(v).map_err(err)
}

fn domain(name: &str) -> PyResult<Arc<Domain>> {
    Domain::resolve(name).map(Arc::new).map_err(err)
}

fn parse_theta(theta: f64) -> PyResult<f64> {
    if theta >= 1.0 {
        Ok(theta)
    } else {
        Err(PyValueError::new_err(format!("theta must be at least 1, got {theta}")))
    }
}

/// A truncated extension `sum_{kappa <= K e}` of blocks, defined on all of R^d.
#[pyclass(name = "Extension", frozen)]
struct PyExtension {
    inner: MultiLevelExpansion,
    domain: Arc<Domain>,
}

#[pymethods]
impl PyExtension {
    /// Values of `D^lam` of the extension at each point.
    #[pyo3(signature = (points, lam = None))]
    fn eval(&self, points: Vec<Vec<f64>>, lam: Option<Vec<i64>>) -> PyResult<Vec<f64>> {
        let d = self.domain.dim();
        let lambda = index(&lam.unwrap_or_else(|| vec![0; d]))?;
        points
            .iter()
            .map(|x| {
                if x.len() != d {
                    return Err(PyValueError::new_err(format!("point {x:?} is not {d}-dimensional")));
                }
                self.inner.evaluate(&lambda, x).map_err(err)
            })
            .collect()
    }

    /// Lowest and highest corner of the union of supports.
    fn support_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.support_box()
    }

    #[getter]
    fn num_blocks(&self) -> usize {
        self.inner.blocks.len()
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str, domain_name: &str) -> PyResult<Self> {
        let domain = domain(domain_name)?;
        let inner = MultiLevelExpansion::from_text(text, domain.clone()).map_err(err)?;
        Ok(Self { inner, domain })
    }
}

#[pyfunction]
fn domains() -> Vec<&'static str> {
    BUILTIN_DOMAINS.to_vec()
}

#[pyfunction]
fn functions() -> Vec<&'static str> {
    REGISTRY.to_vec()
}

/// Values of a registry function at each point.
#[pyfunction]
fn sample(f: &str, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let Some(d) = points.first().map(|x| x.len()) else {
        return Ok(Vec::new());
    };
    let func = TestFunction::parse(f, d).map_err(err)?;
    Ok(points.iter().map(|x| func.eval(x)).collect())
}

/// Extension of a registry function from `domain` with blocks `kappa <= K e`.
#[pyfunction]
#[pyo3(signature = (domain_name, f, alpha, m, k, p = 2.0, theta = 2.0))]
fn extend(
    domain_name: &str,
    f: &str,
    alpha: Vec<f64>,
    m: Vec<i64>,
    k: i64,
    p: f64,
    theta: f64,
) -> PyResult<PyExtension> {
    let domain = domain(domain_name)?;
    let func = TestFunction::parse(f, domain.dim()).map_err(err)?;
    let params = ExtensionParams::new(alpha, p, parse_theta(theta)?, index(&m)?, k).map_err(err)?;
    let inner = core_extend(&func, &domain, &params).map_err(err)?;
    Ok(PyExtension { inner, domain })
}

/// `||f||` in the primed Besov space on `domain`; `theta = inf` gives the Nikolskii norm.
#[pyfunction]
#[pyo3(signature = (domain_name, f, alpha, p = 2.0, theta = 2.0, x_level = 7, kt = 6))]
fn prime_norm(
    domain_name: &str,
    f: &str,
    alpha: Vec<f64>,
    p: f64,
    theta: f64,
    x_level: u32,
    kt: i64,
) -> PyResult<f64> {
    let domain = domain(domain_name)?;
    let func = TestFunction::parse(f, domain.dim()).map_err(err)?;
    let cfg = ModuliConfig::default().with_x_level(x_level).with_t_max_exp(kt);
    besov_prime_norm(&func, &domain, &alpha, p, parse_theta(theta)?, &cfg).map_err(err)
}

/// Exhaustive check of the index maps for levels up to `K`.
#[pyfunction]
fn validate_domain<'py>(py: Python<'py>, domain_name: &str, m: Vec<i64>, k: i64) -> PyResult<Bound<'py, PyDict>> {
    let domain = domain(domain_name)?;
    let rep = validate_mtype(&domain, &index(&m)?, k);
    let out = PyDict::new(py);
    out.set_item("pass", rep.pass)?;
    out.set_item("indices_checked", rep.indices_checked)?;
    out.set_item("tuples_checked", rep.tuples_checked)?;
    out.set_item("failures", rep.failures)?;
    out.set_item("gamma0", rep.gamma0)?;
    out.set_item("gamma1", rep.gamma1)?;
    out.set_item("c15", rep.c15)?;
    out.set_item("witness", rep.witness)?;
    Ok(out)
}

#[pymodule]
fn mixext(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExtension>()?;
    m.add_function(wrap_pyfunction!(domains, m)?)?;
    m.add_function(wrap_pyfunction!(functions, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(extend, m)?)?;
    m.add_function(wrap_pyfunction!(prime_norm, m)?)?;
    m.add_function(wrap_pyfunction!(validate_domain, m)?)?;
    Ok(())
}
