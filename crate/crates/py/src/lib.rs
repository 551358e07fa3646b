//! Python module `winloop`: comparisons, loop audits, the loop-space
//! constructor and distribution AUCs.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use winloop::comparison::{self as cmp, Arm, DiscreteDistribution, EventRecord};
use winloop::distributions::{self as dist, DistributionSpec};
use winloop::loop_space::{self as ls, AucTriplet};
use winloop::tournament::{self as tg};
use winloop::trial_io::{self as tio, ReportFormat};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn pmf(atoms: Vec<(f64, f64)>) -> PyResult<DiscreteDistribution> {
    DiscreteDistribution::new(atoms).map_err(value_err)
}

fn arm(label: &str, records: Vec<(f64, bool)>) -> PyResult<Arm> {
    let recs = records
        .into_iter()
        .map(|(t, e)| EventRecord::new(t, e))
        .collect::<Result<Vec<_>, _>>()
        .map_err(value_err)?;
    Arm::new(label, recs).map_err(value_err)
}

/// One ordered comparison; `auc` is `Pr[first < second]`.
#[pyclass(name = "Comparison", frozen, skip_from_py_object, module = "winloop")]
#[derive(Clone)]
struct PyComparison(cmp::PairwiseComparison);

#[pymethods]
impl PyComparison {
    #[staticmethod]
    fn from_auc(auc: f64) -> PyResult<Self> {
        cmp::PairwiseComparison::from_auc(auc)
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn auc(&self) -> f64 {
        self.0.auc
    }

    #[getter]
    fn wr(&self) -> f64 {
        self.0.wr
    }

    #[getter]
    fn wins_first(&self) -> u64 {
        self.0.wins_first
    }

    #[getter]
    fn wins_second(&self) -> u64 {
        self.0.wins_second
    }

    #[getter]
    fn indeterminate(&self) -> u64 {
        self.0.indeterminate
    }

    #[getter]
    fn strength(&self) -> String {
        self.0.strength.band.to_string()
    }

    #[getter]
    fn reversed(&self) -> bool {
        self.0.strength.reversed
    }

    fn flipped(&self) -> Self {
        Self(self.0.reversed())
    }

    fn __repr__(&self) -> String {
        format!(
            "Comparison(auc={}, wr={}, wins=({}, {}), indeterminate={}, strength={})",
            self.0.auc,
            self.0.wr,
            self.0.wins_first,
            self.0.wins_second,
            self.0.indeterminate,
            self.0.strength
        )
    }
}

/// A distribution expression such as `reflect(chisq(1))+1.175`.
#[pyclass(name = "Distribution", frozen, from_py_object, module = "winloop")]
#[derive(Clone)]
struct PyDistribution(DistributionSpec);

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(expr: &str) -> PyResult<Self> {
        expr.parse().map(Self).map_err(value_err)
    }

    fn cdf(&self, x: f64) -> f64 {
        self.0.cdf(x)
    }

    fn pdf(&self, x: f64) -> Option<f64> {
        self.0.pdf(x)
    }

    #[getter]
    fn mean(&self) -> f64 {
        self.0.mean()
    }

    #[getter]
    fn is_continuous(&self) -> bool {
        self.0.is_continuous()
    }

    #[getter]
    fn symmetry_point(&self) -> Option<f64> {
        self.0.symmetry_point()
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        dist::sample(&self.0, n, seed)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Distribution('{}')", self.0)
    }
}

#[pyfunction]
fn wr_from_auc(auc: f64) -> PyResult<f64> {
    cmp::wr_from_auc(auc).map_err(value_err)
}

#[pyfunction]
fn auc_from_wr(wr: f64) -> PyResult<f64> {
    cmp::auc_from_wr(wr).map_err(value_err)
}

/// `(band, reversed)` for one AUC.
#[pyfunction]
fn classify_strength(auc: f64) -> (String, bool) {
    let s = cmp::classify_strength(auc);
    (s.band.to_string(), s.reversed)
}

/// Exact `Pr[first < second]` (ties count 1/2) for pmfs given as `(value, prob)` lists.
#[pyfunction]
fn exact_auc_discrete(first: Vec<(f64, f64)>, second: Vec<(f64, f64)>) -> PyResult<f64> {
    Ok(cmp::exact_auc_discrete(&pmf(first)?, &pmf(second)?))
}

/// Censored win counting over `(time, event)` records.
#[pyfunction]
fn censored_comparison(
    first: Vec<(f64, bool)>,
    second: Vec<(f64, bool)>,
) -> PyResult<PyComparison> {
    let (a, b) = (arm("first", first)?, arm("second", second)?);
    cmp::censored_comparison(&a, &b)
        .map(PyComparison)
        .map_err(value_err)
}

#[pyfunction]
fn komisarski_bound(n: usize) -> PyResult<f64> {
    tg::komisarski_bound(n).map_err(value_err)
}

#[pyfunction]
fn komisarski_wr_bound(n: usize) -> PyResult<f64> {
    tg::komisarski_wr_bound(n).map_err(value_err)
}

/// Loops among labelled nodes given `aucs[(i, j)] = Pr[node_i < node_j]`.
/// Returns one `(labels, edge_aucs, bound_satisfied)` tuple per loop.
#[pyfunction]
#[pyo3(signature = (labels, aucs, tie_epsilon = 0.0, max_length = None))]
#[allow(clippy::type_complexity)]
fn find_loops(
    labels: Vec<String>,
    aucs: BTreeMap<(usize, usize), f64>,
    tie_epsilon: f64,
    max_length: Option<usize>,
) -> PyResult<Vec<(Vec<String>, Vec<f64>, bool)>> {
    let n = labels.len();
    let comparisons = aucs
        .into_iter()
        .map(|(k, a)| cmp::PairwiseComparison::from_auc(a).map(|c| (k, c)))
        .collect::<Result<BTreeMap<_, _>, _>>()
        .map_err(value_err)?;
    let graph = tg::build_tournament(labels, &comparisons, tie_epsilon).map_err(value_err)?;
    let report = tg::enumerate_cycles(&graph, max_length.unwrap_or(n).max(3)).map_err(value_err)?;
    Ok(report
        .cycles
        .into_iter()
        .map(|c| (c.nodes, c.edge_aucs, c.bound_satisfied))
        .collect())
}

#[pyfunction]
fn alpha(a: f64, b: f64) -> PyResult<f64> {
    ls::alpha(a, b).map_err(value_err)
}

#[pyfunction]
fn feasible_s3(a: f64, b: f64, c: f64) -> PyResult<bool> {
    Ok(ls::feasible_s3(
        &AucTriplet::new(a, b, c).map_err(value_err)?,
    ))
}

#[pyfunction]
fn member_s3nt(a: f64, b: f64, c: f64) -> PyResult<bool> {
    Ok(ls::member_s3nt(
        &AucTriplet::new(a, b, c).map_err(value_err)?,
    ))
}

/// Extremal loop with `Pr[y<z] = b`, `Pr[z<x] = c`. Returns the three pmfs
/// and the realized `(Pr[x<y], Pr[y<z], Pr[z<x])`.
#[pyfunction]
#[pyo3(signature = (b, c, support = None))]
#[allow(clippy::type_complexity)]
fn construct_sigma(
    b: f64,
    c: f64,
    support: Option<[f64; 5]>,
) -> PyResult<([Vec<(f64, f64)>; 3], (f64, f64, f64))> {
    let s = ls::construct_sigma(b, c, support).map_err(value_err)?;
    let t = s.realized();
    Ok((
        [
            s.x.atoms().to_vec(),
            s.y.atoms().to_vec(),
            s.z.atoms().to_vec(),
        ],
        (t.a, t.b, t.c),
    ))
}

/// Deterministic AUC (exact for discrete inputs, quadrature otherwise).
#[pyfunction]
#[pyo3(signature = (first, second, abs_tol = 1e-10))]
fn auc(first: &PyDistribution, second: &PyDistribution, abs_tol: f64) -> PyResult<f64> {
    dist::auc_deterministic(&first.0, &second.0, abs_tol)
        .map(|e| e.value)
        .map_err(value_err)
}

/// `(estimate, std_error)`.
#[pyfunction]
fn auc_monte_carlo(
    first: &PyDistribution,
    second: &PyDistribution,
    n: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    dist::auc_monte_carlo(&first.0, &second.0, n, seed)
        .map(|e| (e.value, e.std_error))
        .map_err(value_err)
}

/// `(kind, keys)`; kind `NONE` means no family-level guarantee.
#[pyfunction]
fn transitivity_certificate(specs: Vec<PyDistribution>) -> PyResult<(String, Vec<f64>)> {
    let specs: Vec<DistributionSpec> = specs.into_iter().map(|s| s.0).collect();
    let c = dist::transitivity_certificate(&specs).map_err(value_err)?;
    Ok((c.kind.as_str().to_string(), c.keys))
}

/// Full analysis of a long CSV file, rendered as `text`, `csv` or `json`.
#[pyfunction]
#[pyo3(signature = (path, tie_epsilon = 0.0, max_loop = None, format = "json"))]
fn analyze_csv(
    path: &str,
    tie_epsilon: f64,
    max_loop: Option<usize>,
    format: &str,
) -> PyResult<String> {
    let format: ReportFormat = format.parse().map_err(PyValueError::new_err)?;
    let loaded = tio::load_dataset(path).map_err(value_err)?;
    let report = tio::analyze_dataset(&loaded.dataset, Some(loaded.sha256), tie_epsilon, max_loop)
        .map_err(value_err)?;
    Ok(tio::render_report(&report, format, false))
}

#[pymodule]
#[pyo3(name = "winloop")]
fn winloop_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyComparison>()?;
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(wr_from_auc, m)?)?;
    m.add_function(wrap_pyfunction!(auc_from_wr, m)?)?;
    m.add_function(wrap_pyfunction!(classify_strength, m)?)?;
    m.add_function(wrap_pyfunction!(exact_auc_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(censored_comparison, m)?)?;
    m.add_function(wrap_pyfunction!(komisarski_bound, m)?)?;
    m.add_function(wrap_pyfunction!(komisarski_wr_bound, m)?)?;
    m.add_function(wrap_pyfunction!(find_loops, m)?)?;
    m.add_function(wrap_pyfunction!(alpha, m)?)?;
    m.add_function(wrap_pyfunction!(feasible_s3, m)?)?;
    m.add_function(wrap_pyfunction!(member_s3nt, m)?)?;
    m.add_function(wrap_pyfunction!(construct_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(auc_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(transitivity_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(analyze_csv, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
