//! Python bindings: Pauli sums, tapering, grouping, simulation, mitigation and runs.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use pbcq::bitstring::{format_bits, parse_bits};
use pbcq::measurement::{partition_commuting, ParityTarget, ShotTable, Strategy};
use pbcq::mitigation::{pmsv_postselect, spam_correct, ConfusionModel};
use pbcq::pauli::{PauliSum, PauliWord};
use pbcq::simulator::{exact_expectation, run_statevector, sample, NoiseModel};
use pbcq::symmetry::{taper, SymmetryOperator};
use pbcq::variational::{
    rotosolve as roto, transqse_combine as combine, AnsatzSpec, Evaluation, Generator,
    RotosolveOptions, TaylorOrder,
};
use pbcq::workbench::config::ExperimentConfig;
use pbcq::workbench::reproduce::{reproduce_table as reproduce, ProbabilityTable};
use pbcq::workbench::run::{execute, write_run_dir};

create_exception!(pbcq, ValidationError, PyValueError);

fn err(e: pbcq::Error) -> PyErr {
    if e.is_validation() {
        ValidationError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for pbcq::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Hermitian or general sum of Pauli words with complex coefficients.
#[pyclass(name = "PauliSum", module = "pbcq", skip_from_py_object)]
#[derive(Clone)]
pub struct PyPauliSum {
    inner: PauliSum,
}

#[pymethods]
impl PyPauliSum {
    /// `PauliSum([("ZI", -1.0), ("XX", 0.5j)])`; words must share a length.
    #[new]
    #[pyo3(signature = (terms, n_qubits=None))]
    fn new(terms: Vec<(String, Complex64)>, n_qubits: Option<usize>) -> PyResult<Self> {
        let n = match (n_qubits, terms.first()) {
            (Some(n), _) => n,
            (None, Some((w, _))) => w.len(),
            (None, None) => return Err(PyValueError::new_err("empty sum needs n_qubits")),
        };
        let words = terms
            .into_iter()
            .map(|(w, c)| Ok((w.parse::<PauliWord>()?, c)))
            .collect::<pbcq::Result<Vec<_>>>()
            .py()?;
        Ok(PyPauliSum {
            inner: PauliSum::from_terms(n, words).py()?,
        })
    }

    /// Load a Pauli-sum or fermionic Hamiltonian file (the latter is Jordan–Wigner mapped).
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let h = pbcq::workbench::io::load_hamiltonian(&path).py()?;
        Ok(PyPauliSum {
            inner: h.qubit_operator().py()?,
        })
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn terms(&self) -> Vec<(String, Complex64)> {
        self.inner.terms().map(|(w, c)| (w.to_string(), *c)).collect()
    }

    fn coefficient(&self, word: &str) -> PyResult<Complex64> {
        Ok(self.inner.coefficient(&word.parse().py()?))
    }

    #[pyo3(signature = (tol=1e-10))]
    fn is_hermitian(&self, tol: f64) -> bool {
        self.inner.is_hermitian(tol)
    }

    fn commutator(&self, other: &PyPauliSum) -> PyResult<PyPauliSum> {
        Ok(PyPauliSum {
            inner: self.inner.commutator(&other.inner).py()?,
        })
    }

    /// Dense matrix as nested lists, row-major, qubit 0 as the least significant index bit.
    fn dense(&self) -> PyResult<Vec<Vec<Complex64>>> {
        let m = self.inner.dense_matrix().py()?;
        Ok((0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
    }

    fn __add__(&self, other: &PyPauliSum) -> PyResult<PyPauliSum> {
        Ok(PyPauliSum {
            inner: self.inner.add(&other.inner).py()?,
        })
    }

    fn __sub__(&self, other: &PyPauliSum) -> PyResult<PyPauliSum> {
        Ok(PyPauliSum {
            inner: self.inner.sub(&other.inner).py()?,
        })
    }

    fn __matmul__(&self, other: &PyPauliSum) -> PyResult<PyPauliSum> {
        Ok(PyPauliSum {
            inner: self.inner.mul(&other.inner).py()?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliSum({} qubits, {} terms)", self.inner.n_qubits(), self.inner.len())
    }
}

fn symmetries(specs: &[(String, i8)]) -> PyResult<Vec<SymmetryOperator>> {
    specs
        .iter()
        .map(|(w, s)| SymmetryOperator::parse(w, *s))
        .collect::<pbcq::Result<_>>()
        .py()
}

/// One parameter per generator word, starting from the bitstring `initial`.
fn ansatz(generators: &[String], initial: &str) -> PyResult<AnsatzSpec> {
    let gens = generators
        .iter()
        .enumerate()
        .map(|(i, w)| {
            Ok(Generator {
                word: w.parse()?,
                param: i,
                scale: 1.0,
            })
        })
        .collect::<pbcq::Result<Vec<_>>>()
        .py()?;
    let n = gens.first().map(|g| g.word.n_qubits()).unwrap_or(initial.len());
    AnsatzSpec::new(n, parse_bits(initial).py()?, gens).py()
}

fn strategy(name: &str) -> PyResult<Strategy> {
    match name {
        "general" => Ok(Strategy::General),
        "qubitwise" => Ok(Strategy::Qubitwise),
        other => Err(PyValueError::new_err(format!("unknown strategy {other:?}"))),
    }
}

fn shot_table(counts: &HashMap<String, u64>) -> PyResult<ShotTable> {
    let pairs: Vec<(&str, u64)> = counts.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    ShotTable::from_strs(0, &pairs).py()
}

fn counts_dict(t: &ShotTable) -> BTreeMap<String, u64> {
    t.counts.iter().map(|(&b, &c)| (format_bits(b, t.n_bits), c)).collect()
}

/// Taper with `[(word, sign), ...]`; returns the reduced operator and the map as JSON.
#[pyfunction]
fn taper_operator(h: &PyPauliSum, syms: Vec<(String, i8)>) -> PyResult<(PyPauliSum, String)> {
    let (t, map) = taper(&h.inner, &symmetries(&syms)?).py()?;
    let json = serde_json::to_string(&map).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((PyPauliSum { inner: t }, json))
}

/// Commuting groups of the non-identity words of `h`.
#[pyfunction]
#[pyo3(signature = (h, strategy_name="general"))]
fn partition(h: &PyPauliSum, strategy_name: &str) -> PyResult<Vec<Vec<String>>> {
    let sets = partition_commuting(&h.inner.non_identity_words(), strategy(strategy_name)?).py()?;
    Ok(sets
        .into_iter()
        .map(|s| s.members.iter().map(|w| w.to_string()).collect())
        .collect())
}

/// Exact `⟨ψ(θ)|h|ψ(θ)⟩` for the product of `exp(−iθ_k P_k)` on `|initial⟩`.
#[pyfunction]
#[pyo3(signature = (h, generators, theta, initial=None))]
fn energy(h: &PyPauliSum, generators: Vec<String>, theta: Vec<f64>, initial: Option<&str>) -> PyResult<f64> {
    let zeros = "0".repeat(h.inner.n_qubits());
    let a = ansatz(&generators, initial.unwrap_or(&zeros))?;
    let psi = run_statevector(&a.circuit(), &theta).py()?;
    exact_expectation(&psi, &h.inner).py()
}

/// Computational-basis counts of the ansatz state; `noise` is
/// `(p10, p01, depolarizing_1q, depolarizing_2q)`.
#[pyfunction]
#[pyo3(signature = (generators, theta, shots, seed, initial=None, noise=None))]
fn sample_counts(
    generators: Vec<String>,
    theta: Vec<f64>,
    shots: u64,
    seed: u64,
    initial: Option<&str>,
    noise: Option<(f64, f64, f64, f64)>,
) -> PyResult<BTreeMap<String, u64>> {
    let n = generators.first().map(|w| w.len()).unwrap_or(0);
    let zeros = "0".repeat(n);
    let a = ansatz(&generators, initial.unwrap_or(&zeros))?;
    let model = match noise {
        None => NoiseModel::noiseless(),
        Some((p10, p01, d1, d2)) => NoiseModel {
            depolarizing_1q: d1,
            depolarizing_2q: d2,
            ..NoiseModel::readout_only(p10, p01)
        },
    };
    let t = sample(&a.circuit().then_measure(&[]), &theta, shots, &model, seed).py()?;
    Ok(counts_dict(&t))
}

/// Keep shots whose parity over `bits` equals `sign`; returns `(counts, discard_fraction)`.
#[pyfunction]
fn pmsv_filter(counts: HashMap<String, u64>, bits: Vec<usize>, sign: i8) -> PyResult<(BTreeMap<String, u64>, f64)> {
    let t = shot_table(&counts)?;
    let target = ParityTarget::new(bits, sign).py()?;
    let (kept, frac) = pmsv_postselect(&t, &[target]);
    Ok((counts_dict(&kept), frac))
}

/// Invert per-qubit readout flips `[(p10, p01), ...]`; returns probabilities.
#[pyfunction]
fn spam_correct_counts(counts: HashMap<String, u64>, flips: Vec<(f64, f64)>) -> PyResult<BTreeMap<String, f64>> {
    let t = shot_table(&counts)?;
    let d = spam_correct(&t.to_distribution(), &ConfusionModel::from_flips(&flips)).py()?;
    Ok(d.weights.iter().map(|(&b, &w)| (format_bits(b, d.n_bits), w)).collect())
}

/// Noiseless Rotosolve; returns `(theta, energy, evaluations_recorded)`.
#[pyfunction]
#[pyo3(signature = (h, generators, theta0, initial=None, max_sweeps=10, tol=1e-9))]
fn rotosolve(
    h: &PyPauliSum,
    generators: Vec<String>,
    theta0: Vec<f64>,
    initial: Option<&str>,
    max_sweeps: usize,
    tol: f64,
) -> PyResult<(Vec<f64>, f64, usize)> {
    let zeros = "0".repeat(h.inner.n_qubits());
    let a = ansatz(&generators, initial.unwrap_or(&zeros))?;
    let circuit = a.circuit();
    let cost = |t: &[f64]| -> pbcq::Result<Evaluation> {
        let v = exact_expectation(&run_statevector(&circuit, t)?, &h.inner)?;
        Ok(Evaluation {
            value: v,
            stddev: 0.0,
            variants: [Some(v); 4],
            discard_fraction: 0.0,
            seed: None,
        })
    };
    let opts = RotosolveOptions {
        max_sweeps,
        tol,
        ..RotosolveOptions::default()
    };
    let trace = roto(cost, &theta0, opts).py()?;
    let last = trace
        .last()
        .ok_or_else(|| PyRuntimeError::new_err("empty optimization trace"))?;
    Ok((last.theta.clone(), last.eval.value, trace.steps.len()))
}

/// Subspace energy from `(h0, h1, s1)`: order 0 is the ratio, order 1 the expanded product.
#[pyfunction]
#[pyo3(signature = (h0, h1, s1, order=0))]
fn transqse_combine(h0: f64, h1: f64, s1: f64, order: u32) -> PyResult<f64> {
    combine(h0, h1, s1, TaylorOrder::from_order(order).py()?).py()
}

/// Sampled outcome probabilities of the two-qubit YX state; returns a dict.
#[pyfunction]
#[pyo3(signature = (table, shots=1_000_000, seed=2021))]
fn reproduce_table(table: &str, shots: u64, seed: u64) -> PyResult<BTreeMap<String, f64>> {
    let t: ProbabilityTable = table.parse().py()?;
    let r = reproduce(t, shots, seed).py()?;
    let (p00, p11) = t.published();
    Ok(BTreeMap::from([
        ("theta".into(), r.theta),
        ("p00".into(), r.p00()),
        ("p11".into(), r.p11()),
        ("analytic_p00".into(), r.analytic_p00),
        ("published_p00".into(), p00),
        ("published_p11".into(), p11),
    ]))
}

/// Execute an experiment config; writes a run directory when `out` is given.
/// Returns the result record as JSON.
#[pyfunction]
#[pyo3(signature = (config, out=None))]
fn run_experiment(config: PathBuf, out: Option<PathBuf>) -> PyResult<String> {
    let cfg = ExperimentConfig::load(&config).py()?;
    let run = execute(&cfg).py()?;
    if let Some(dir) = out {
        write_run_dir(&cfg, &run, &dir).py()?;
    }
    serde_json::to_string(&run.result).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "pbcq")]
fn pbcq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ValidationError", m.py().get_type::<ValidationError>())?;
    m.add_class::<PyPauliSum>()?;
    m.add_function(wrap_pyfunction!(taper_operator, m)?)?;
    m.add_function(wrap_pyfunction!(partition, m)?)?;
    m.add_function(wrap_pyfunction!(energy, m)?)?;
    m.add_function(wrap_pyfunction!(sample_counts, m)?)?;
    m.add_function(wrap_pyfunction!(pmsv_filter, m)?)?;
    m.add_function(wrap_pyfunction!(spam_correct_counts, m)?)?;
    m.add_function(wrap_pyfunction!(rotosolve, m)?)?;
    m.add_function(wrap_pyfunction!(transqse_combine, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce_table, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
