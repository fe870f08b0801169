//! Python bindings: group instances, the detector, and the metric helpers.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use relqc_core::cli::{load_structure, structure_doc, dist_table, EntryDoc};
use relqc_core::config::{InstanceConfig, StructureConfig};
use relqc_core::detector::{check_candidate, detect as run_detect, DetectConfig, DetectorOutcome, Mode, RunResult, DEFAULT_SLICE};
use relqc_core::group::{GroupInstance, SubgroupSpec};
use relqc_core::relcayley::{ball, relative_length};
use relqc_core::structures::verify_quasiconvexity;
use relqc_core::{fixtures, Error};

fn to_py(e: Error) -> PyErr {
    if e.is_budget() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "standard" => Ok(Mode::Standard),
        "constructive" => Ok(Mode::Constructive),
        other => Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    }
}

/// A relatively hyperbolic group instance `(G, 𝒫)`.
#[pyclass(frozen, name = "Group", module = "relqc")]
struct PyGroup {
    inner: GroupInstance,
}

impl PyGroup {
    fn sub(&self, text: &str) -> PyResult<SubgroupSpec> {
        SubgroupSpec::parse(self.inner.alphabet(), text).map_err(to_py)
    }
}

#[pymethods]
impl PyGroup {
    /// Builds an instance from its JSON description.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg = InstanceConfig::from_json(text).map_err(to_py)?;
        Ok(PyGroup { inner: cfg.build(|k| std::env::var(k).ok()).map_err(to_py)? })
    }

    /// One of the shipped instances: `"free"`, `"cyc"` or `"fprod"`.
    #[staticmethod]
    fn fixture(name: &str) -> PyResult<Self> {
        let inner = match name {
            "free" => fixtures::free(),
            "cyc" => fixtures::cyc(),
            "fprod" => fixtures::fprod(),
            other => return Err(PyValueError::new_err(format!("no fixture named {other:?}"))),
        };
        Ok(PyGroup { inner })
    }

    #[getter]
    fn generators(&self) -> Vec<String> {
        self.inner.alphabet().base_names().to_vec()
    }

    #[getter]
    fn num_peripherals(&self) -> usize {
        self.inner.num_peripherals()
    }

    /// Relative length of a word over `X ∪ 𝒫`, e.g. `"a1 b P1[0,2]"`.
    fn relative_length(&self, word: &str) -> PyResult<usize> {
        let w = self.inner.parse_relword(word).map_err(to_py)?;
        relative_length(&self.inner, &w).map_err(to_py)
    }

    fn is_trivial(&self, word: &str) -> PyResult<bool> {
        let w = self.inner.parse_relword(word).map_err(to_py)?;
        self.inner.is_trivial_in_g(&w).map_err(to_py)
    }

    fn equal(&self, a: &str, b: &str) -> PyResult<bool> {
        let a = self.inner.parse_relword(a).map_err(to_py)?;
        let b = self.inner.parse_relword(b).map_err(to_py)?;
        self.inner.element_equal(&a, &b).map_err(to_py)
    }

    /// Number of vertices in the relative ball with the given component bound.
    fn ball_size(&self, radius: usize, component_bound: usize) -> PyResult<usize> {
        Ok(ball(&self.inner, radius, component_bound).map_err(to_py)?.len())
    }

    /// `(table, exact)`: distortion values for `n = 0..=upto`.
    #[pyo3(signature = (subgroup, upto, h_radius = 8))]
    fn distortion(&self, subgroup: &str, upto: usize, h_radius: usize) -> PyResult<(Vec<u64>, bool)> {
        let s = self.sub(subgroup)?;
        dist_table(&self.inner, &s, upto, h_radius).map_err(to_py)
    }

    /// Checks `nu`-quasiconvexity on the relative ball of `radius`.
    #[pyo3(signature = (subgroup, nu, radius, component_bound = 3, h_radius = 8))]
    fn verify_quasiconvexity(
        &self,
        subgroup: &str,
        nu: u64,
        radius: usize,
        component_bound: usize,
        h_radius: usize,
    ) -> PyResult<bool> {
        let s = self.sub(subgroup)?;
        let v = verify_quasiconvexity(&self.inner, &s, nu, radius, component_bound, h_radius).map_err(to_py)?;
        Ok(v.is_none())
    }

    fn __repr__(&self) -> String {
        format!("Group(generators={:?}, peripherals={})", self.generators(), self.num_peripherals())
    }
}

/// Outcome of `detect` or `check`.
#[pyclass(frozen, get_all, name = "Outcome", module = "relqc")]
struct PyOutcome {
    /// `"accept"`, `"rejected"`, `"out_of_fuel"` or `"stalled"`.
    outcome: String,
    certified: Option<bool>,
    lambda_: Option<f64>,
    c: Option<f64>,
    nu: Option<u64>,
    /// `(peripheral, conjugator, generators)` per entry, peripherals 1-based.
    structure: Vec<(usize, String, Vec<String>)>,
    witness: Option<String>,
    fuel_consumed: u64,
    /// Full evidence record as JSON, on accept.
    evidence_json: Option<String>,
}

#[pymethods]
impl PyOutcome {
    fn __repr__(&self) -> String {
        format!("Outcome({}, fuel_consumed={})", self.outcome, self.fuel_consumed)
    }
}

fn entries(doc: Vec<EntryDoc>) -> Vec<(usize, String, Vec<String>)> {
    doc.into_iter().map(|e| (e.peripheral, e.conjugator, e.generators)).collect()
}

fn blank(outcome: &str, fuel_consumed: u64) -> PyOutcome {
    PyOutcome {
        outcome: outcome.into(),
        certified: None,
        lambda_: None,
        c: None,
        nu: None,
        structure: vec![],
        witness: None,
        fuel_consumed,
        evidence_json: None,
    }
}

fn accepted(g: &GroupInstance, s: &SubgroupSpec, acc: &relqc_core::detector::Acceptance, fuel_consumed: u64) -> PyOutcome {
    PyOutcome {
        certified: Some(acc.evidence.certified),
        lambda_: Some(acc.lambda),
        c: Some(acc.c),
        nu: Some(acc.nu),
        structure: entries(structure_doc(g, s, &acc.structure)),
        evidence_json: Some(serde_json::to_string(&acc.evidence).expect("evidence serializes")),
        ..blank("accept", fuel_consumed)
    }
}

/// Searches for an induced peripheral structure on `⟨subgroup⟩`.
#[pyfunction]
#[pyo3(signature = (group, subgroup, fuel = None, slice = DEFAULT_SLICE, mode = "standard"))]
fn detect(group: &PyGroup, subgroup: &str, fuel: Option<u64>, slice: u64, mode: &str) -> PyResult<PyOutcome> {
    let g = &group.inner;
    let s = group.sub(subgroup)?;
    let cfg = DetectConfig { fuel: fuel.unwrap_or(g.budgets().default_fuel), slice, mode: parse_mode(mode)? };
    let report = run_detect(g, &s, &cfg).map_err(to_py)?;
    Ok(match &report.outcome {
        DetectorOutcome::Accept(acc) => accepted(g, &s, acc, report.fuel_consumed),
        DetectorOutcome::OutOfFuel(_) => blank("out_of_fuel", report.fuel_consumed),
    })
}

/// Runs the algorithm on one candidate given as structure JSON.
#[pyfunction]
#[pyo3(signature = (group, subgroup, structure_json, fuel = None, mode = "standard"))]
fn check(group: &PyGroup, subgroup: &str, structure_json: &str, fuel: Option<u64>, mode: &str) -> PyResult<PyOutcome> {
    let g = &group.inner;
    let s = group.sub(subgroup)?;
    let cfg = StructureConfig::from_json(structure_json).map_err(to_py)?;
    let cand = load_structure(g, &s, &cfg).map_err(to_py)?;
    let fuel = fuel.unwrap_or(g.budgets().default_fuel);
    let (res, partial, consumed, _) = check_candidate(g, &s, cand, fuel, parse_mode(mode)?).map_err(to_py)?;
    Ok(match res {
        Some(RunResult::Accepted(acc)) => accepted(g, &s, &acc, consumed),
        Some(RunResult::Rejected(w)) => PyOutcome {
            witness: Some(g.alphabet().format_word(&s.to_x_word(&w.h))),
            structure: entries(structure_doc(g, &s, partial.candidate())),
            ..blank("rejected", consumed)
        },
        Some(RunResult::Stalled(_)) => blank("stalled", consumed),
        None => blank("out_of_fuel", consumed),
    })
}

#[pymodule]
fn relqc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroup>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    Ok(())
}
