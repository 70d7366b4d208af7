//! One experiment: prepare operators, optimize, persist a re-executable run directory.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::AmplitudeTable;
use crate::measurement::{MeasurementPlan, PlanFile, ShotTable, ShotTableFile};
use crate::mitigation::{calibrate_spam, ConfusionFile, ConfusionMode, ConfusionModel};
use crate::simulator::{derive_seed, sample, Circuit, NoiseModel};
use crate::symmetry::SymmetryOperator;
use crate::variational::{
    rotosolve, sgd, AnsatzFile, AnsatzSpec, Backend, Evaluation, OptimizationTrace,
    RotosolveOptions, SgdOptions, ShotSettings, TaylorOrder, TransQseCost, VqeCost,
};

use super::config::{BackendKind, ExperimentConfig, OptimizerKind, ProblemKind};
use super::io::{self, HamiltonianInput, SymmetryFile};
use super::pipeline::{ansatz_from_amplitudes, prepare_qubit_problem, prepare_transqse};

/// Seed streams reserved for work outside the optimizer's evaluations.
const CALIBRATION_STREAM: u64 = u64::MAX;
const FINAL_SHOTS_STREAM: u64 = u64::MAX - 1;

/// Multiplier from a declared energy unit to kJ/mol.
pub fn unit_factor(unit: &str) -> Result<f64> {
    match unit.trim().to_ascii_lowercase().as_str() {
        "kj/mol" | "kj mol-1" | "kjmol" => Ok(1.0),
        "hartree" | "eh" | "ha" => Ok(2_625.499_639_479_9),
        "kcal/mol" => Ok(4.184),
        "ev" => Ok(96.485_332_123_310_02),
        other => Err(Error::validation("unit", format!("unknown energy unit {other:?}"))),
    }
}

/// Inputs resolved into something the optimizer can evaluate.
pub enum Objective {
    Vqe(Box<VqeCost>),
    TransQse(Box<TransQseCost>),
}

impl Objective {
    pub fn evaluate(&mut self, theta: &[f64]) -> Result<Evaluation> {
        match self {
            Objective::Vqe(c) => c.evaluate(theta),
            Objective::TransQse(c) => c.evaluate(theta),
        }
    }

    pub fn ansatz(&self) -> &AnsatzSpec {
        match self {
            Objective::Vqe(c) => &c.ansatz,
            Objective::TransQse(c) => &c.problem.ansatz,
        }
    }

    /// Measurement plans, labelled by operator.
    pub fn plans(&self) -> Vec<(&'static str, &MeasurementPlan)> {
        match self {
            Objective::Vqe(c) => vec![("h", &c.h.plan)],
            Objective::TransQse(c) => {
                let [h, hl, l] = c.measured();
                vec![("h", &h.plan), ("h_lambda", &hl.plan), ("lambda", &l.plan)]
            }
        }
    }
}

/// Prepared experiment before optimization.
pub struct Prepared {
    pub objective: Objective,
    pub theta0: Vec<f64>,
    pub symmetries: Vec<SymmetryOperator>,
    pub confusion: Option<ConfusionModel>,
    pub calibration_seed: Option<u64>,
}

/// Confusion model measured by preparing basis states under `noise`.
pub fn calibrate(
    n_qubits: usize,
    shots: u64,
    mode: ConfusionMode,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ConfusionModel> {
    calibrate_spam(
        |bits, shots| {
            let c = Circuit::basis_state(n_qubits, bits).then_measure(&[]);
            sample(&c, &[], shots, noise, derive_seed(seed, bits))
        },
        n_qubits,
        shots,
        mode,
    )
}

fn load_symmetries(cfg: &ExperimentConfig) -> Result<Vec<super::io::SymmetrySpec>> {
    match &cfg.files.symmetries {
        Some(p) => Ok(io::read_json::<SymmetryFile>(p)?.symmetries),
        None => Ok(Vec::new()),
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let ham = io::load_hamiltonian(&cfg.files.hamiltonian)?;
    let factor = Complex64::new(unit_factor(ham.unit())?, 0.0);
    let specs = load_symmetries(cfg)?;
    let reference = cfg.reference_bits()?;
    let mitigation = cfg.mitigation.selected;

    enum Staged {
        Vqe(crate::pauli::PauliSum, AnsatzSpec),
        TransQse(crate::variational::TransQseProblem),
    }
    let (staged, symmetries, mut theta0) = match cfg.problem {
        ProblemKind::Vqe => {
            let h = ham.qubit_operator()?.scale(factor);
            let prep = prepare_qubit_problem(&h, &specs, reference, &cfg.sector)?;
            let (ansatz, theta0) = match (&cfg.files.ansatz, &cfg.files.amplitudes) {
                (Some(p), _) => {
                    let file: AnsatzFile = io::read_json(p)?;
                    let src = p.display().to_string();
                    let a = AnsatzSpec::from_file(&file).map_err(|e| io::locate(e, &src))?;
                    let n = a.n_params();
                    (a, vec![0.0; n])
                }
                (None, Some(p)) => {
                    let HamiltonianInput::Fermion(data) = &ham else {
                        return Err(Error::validation(
                            "files.amplitudes",
                            "an amplitude table needs a fermionic Hamiltonian",
                        ));
                    };
                    let table = AmplitudeTable::from_csv_path(p)?;
                    ansatz_from_amplitudes(
                        &table,
                        &data.orbitals,
                        cfg.screening_ratio,
                        prep.tapering.as_ref(),
                        prep.reference,
                    )?
                }
                (None, None) => {
                    return Err(Error::validation(
                        "files",
                        "a VQE run needs files.ansatz or files.amplitudes",
                    ))
                }
            };
            if ansatz.n_qubits != prep.hamiltonian.n_qubits() {
                return Err(Error::validation(
                    "files.ansatz",
                    format!(
                        "ansatz acts on {} qubits, the prepared Hamiltonian on {}",
                        ansatz.n_qubits,
                        prep.hamiltonian.n_qubits()
                    ),
                ));
            }
            (Staged::Vqe(prep.hamiltonian, ansatz), prep.symmetries, theta0)
        }
        ProblemKind::Transqse => {
            let HamiltonianInput::Fermion(data) = &ham else {
                return Err(Error::validation(
                    "files.hamiltonian",
                    "the translational subspace needs a fermionic Hamiltonian",
                ));
            };
            let reference = reference.ok_or_else(|| {
                Error::validation("reference", "required for the translational subspace")
            })?;
            let order = TaylorOrder::from_order(cfg.transqse.taylor_order)?;
            let mut setup = prepare_transqse(data, &specs, reference, &cfg.sector, order)?;
            setup.problem.h = setup.problem.h.scale(factor);
            setup.problem.h_lambda = setup.problem.h_lambda.scale(factor);
            let n = setup.problem.ansatz.n_params();
            (Staged::TransQse(setup.problem), setup.symmetries, vec![0.0; n])
        }
    };
    if let Some(init) = &cfg.optimizer.initial {
        if init.len() != theta0.len() {
            return Err(Error::validation(
                "optimizer.initial",
                format!("{} values for {} parameters", init.len(), theta0.len()),
            ));
        }
        theta0 = init.clone();
    }

    let n_qubits = match &staged {
        Staged::Vqe(h, _) => h.n_qubits(),
        Staged::TransQse(p) => p.h.n_qubits(),
    };
    let (backend, confusion, calibration_seed) = match cfg.backend.kind {
        BackendKind::Statevector => (Backend::StateVector, None, None),
        BackendKind::Shots => {
            let (model, seed) = match &cfg.files.confusion {
                Some(p) => {
                    let f: ConfusionFile = io::read_json(p)?;
                    let src = p.display().to_string();
                    (ConfusionModel::from_file(&f).map_err(|e| io::locate(e, &src))?, None)
                }
                None => {
                    let seed = derive_seed(cfg.backend.seed, CALIBRATION_STREAM);
                    let m = calibrate(
                        n_qubits,
                        cfg.mitigation.calibration_shots,
                        cfg.mitigation.confusion_mode,
                        &cfg.noise,
                        seed,
                    )?;
                    (m, Some(seed))
                }
            };
            if model.n_qubits() != n_qubits {
                return Err(Error::validation(
                    "files.confusion",
                    format!("model covers {} qubits, circuits use {n_qubits}", model.n_qubits()),
                ));
            }
            let mut s = ShotSettings::new(cfg.backend.shots, cfg.noise.clone(), cfg.backend.seed);
            s.confusion = Some(model.clone());
            s.order = cfg.mitigation.order;
            s.strategy = cfg.mitigation.strategy;
            (Backend::Shots(s), Some(model), seed)
        }
    };
    let objective = match staged {
        Staged::Vqe(h, ansatz) => Objective::Vqe(Box::new(VqeCost::new(
            &h,
            ansatz,
            &symmetries,
            backend,
            mitigation,
        )?)),
        Staged::TransQse(p) => Objective::TransQse(Box::new(TransQseCost::new(
            p,
            &symmetries,
            backend,
            mitigation,
        )?)),
    };
    Ok(Prepared {
        objective,
        theta0,
        symmetries,
        confusion,
        calibration_seed,
    })
}

pub fn optimize(cfg: &ExperimentConfig, prep: &mut Prepared) -> Result<OptimizationTrace> {
    let o = &cfg.optimizer;
    let obj = &mut prep.objective;
    let mut trace = match o.kind {
        OptimizerKind::Rotosolve => rotosolve(
            |t| obj.evaluate(t),
            &prep.theta0,
            RotosolveOptions {
                max_sweeps: o.max_sweeps,
                tol: o.tol,
                frequency: o.frequency,
            },
        )?,
        OptimizerKind::Sgd => sgd(
            |t| obj.evaluate(t),
            &prep.theta0,
            SgdOptions {
                learning_rate: o.learning_rate,
                steps: o.steps,
            },
        )?,
        OptimizerKind::None => {
            let mut t = OptimizationTrace::default();
            let e = obj.evaluate(&prep.theta0)?;
            t.steps.push(crate::variational::TraceStep {
                step: 0,
                theta: prep.theta0.clone(),
                eval: e,
            });
            t.converged = true;
            t
        }
    };
    trace.reference_energy = cfg.e_hf_reference;
    Ok(trace)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub config_hash: String,
    pub base_seed: u64,
}

/// Summary written next to the trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub problem: ProblemKind,
    pub unit: String,
    pub backend: BackendKind,
    pub mitigation: String,
    pub final_theta: Vec<f64>,
    pub final_energy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_e: Option<f64>,
    pub stddev: f64,
    pub discard_fraction: f64,
    pub converged: bool,
    pub steps: usize,
    pub environment: Environment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub base_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_shots_seed: Option<u64>,
    /// Seed of each recorded trace step (shot backend only).
    pub evaluation_seeds: Vec<u64>,
}

pub struct RunOutput {
    pub trace: OptimizationTrace,
    pub result: ExperimentResult,
    pub seeds: SeedRecord,
    pub plans: Vec<(String, PlanFile)>,
    pub confusion: Option<ConfusionModel>,
    /// Shot tables of the Hamiltonian's circuits at the final parameters.
    pub final_shots: Vec<ShotTable>,
}

pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let mut prep = prepare(cfg)?;
    let trace = optimize(cfg, &mut prep)?;
    let last = trace
        .last()
        .ok_or_else(|| Error::Internal("optimizer recorded no steps".into()))?;

    let mut final_shots = Vec::new();
    let mut final_shots_seed = None;
    if let Objective::Vqe(c) = &prep.objective {
        if let Backend::Shots(s) = &c.backend {
            let seed = derive_seed(cfg.backend.seed, FINAL_SHOTS_STREAM);
            final_shots = c.h.sample_tables(&c.ansatz.circuit(), &last.theta, s, seed)?;
            final_shots_seed = Some(seed);
        }
    }
    let result = ExperimentResult {
        problem: cfg.problem,
        unit: "kJ/mol".into(),
        backend: cfg.backend.kind,
        mitigation: cfg.mitigation.selected.to_string(),
        final_theta: last.theta.clone(),
        final_energy: last.eval.value,
        delta_e: cfg.e_hf_reference.map(|r| last.eval.value - r),
        stddev: last.eval.stddev,
        discard_fraction: last.eval.discard_fraction,
        converged: trace.converged,
        steps: trace.steps.len(),
        environment: Environment {
            crate_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: cfg.hash()?,
            base_seed: cfg.backend.seed,
        },
    };
    let seeds = SeedRecord {
        base_seed: cfg.backend.seed,
        calibration_seed: prep.calibration_seed,
        final_shots_seed,
        evaluation_seeds: trace.steps.iter().filter_map(|s| s.eval.seed).collect(),
    };
    let plans = prep
        .objective
        .plans()
        .into_iter()
        .map(|(n, p)| (n.to_string(), p.to_file()))
        .collect();
    Ok(RunOutput {
        trace,
        result,
        seeds,
        plans,
        confusion: prep.confusion,
        final_shots,
    })
}

/// Copy inputs under `out/inputs`, write the effective config and every output.
pub fn write_run_dir(cfg: &ExperimentConfig, out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir.join("inputs"))?;
    let mut local = cfg.clone();
    for (_, p) in cfg.referenced_files() {
        let name = p.file_name().ok_or_else(|| Error::input(format!("{} has no file name", p.display())))?;
        std::fs::copy(p, dir.join("inputs").join(name))?;
    }
    local.strip_dirs();
    let inputs = PathBuf::from("inputs");
    local.resolve_paths(&inputs);
    io::write_text(&dir.join("config.toml"), &local.to_toml()?)?;
    io::write_json(&dir.join("seeds.json"), &out.seeds)?;
    io::write_json(&dir.join("result.json"), &out.result)?;
    let mut csv = Vec::new();
    out.trace.write_csv(&mut csv)?;
    io::write_text(&dir.join("trace.csv"), &String::from_utf8_lossy(&csv))?;
    let plans: std::collections::BTreeMap<_, _> = out.plans.iter().cloned().collect();
    io::write_json(&dir.join("plans.json"), &plans)?;
    if let Some(m) = &out.confusion {
        io::write_json(&dir.join("confusion.json"), &m.to_file())?;
    }
    for t in &out.final_shots {
        let f: ShotTableFile = t.to_file();
        io::write_json(&dir.join("shots").join(format!("circuit_{}.json", t.circuit_id)), &f)?;
    }
    Ok(())
}
