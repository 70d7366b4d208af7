//! VQE and translational subspace costs, Rotosolve and parameter-shift descent.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitstring::{format_bits, parse_bits};
use crate::error::{Error, Result};
use crate::measurement::{MeasurementPlan, ShotTable, Strategy};
use crate::mitigation::{mitigated_expectation, ConfusionModel, CorrectionOrder, Mitigation};
use crate::pauli::{PauliSum, PauliWord};
use crate::simulator::{
    derive_seed, exact_expectation, run_statevector, sample_with_id, Angle, Circuit, NoiseModel,
};
use crate::symmetry::SymmetryOperator;

/// `∏_k exp(−i·scale_k·θ_{p_k}·P_k) |initial⟩`, applied in list order.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub initial_occupation: u64,
    pub generators: Vec<Generator>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub word: PauliWord,
    pub param: usize,
    pub scale: f64,
}

impl AnsatzSpec {
    pub fn new(n_qubits: usize, initial_occupation: u64, generators: Vec<Generator>) -> Result<Self> {
        let a = AnsatzSpec {
            n_qubits,
            initial_occupation,
            generators,
        };
        a.validate()?;
        Ok(a)
    }

    /// `exp(−iθ·word)` on `|initial⟩`.
    pub fn single(word: PauliWord, initial_occupation: u64) -> Self {
        AnsatzSpec {
            n_qubits: word.n_qubits(),
            initial_occupation,
            generators: vec![Generator {
                word,
                param: 0,
                scale: 1.0,
            }],
        }
    }

    pub fn n_params(&self) -> usize {
        self.generators.iter().map(|g| g.param + 1).max().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_params();
        for p in 0..n {
            if !self.generators.iter().any(|g| g.param == p) {
                return Err(Error::input(format!(
                    "parameter indices must be contiguous from 0; {p} is unused"
                )));
            }
        }
        for g in &self.generators {
            if g.word.n_qubits() != self.n_qubits {
                return Err(Error::input(format!(
                    "generator {} does not act on {} qubits",
                    g.word, self.n_qubits
                )));
            }
            if g.word.is_identity() {
                return Err(Error::input("identity generator contributes only a phase"));
            }
        }
        if self.n_qubits < 64 && self.initial_occupation >> self.n_qubits != 0 {
            return Err(Error::input("initial occupation sets bits outside the register"));
        }
        Ok(())
    }

    /// Every generator is a bare Pauli word with unit scale, so the ±π/4 shift rule is exact.
    pub fn shift_rule_exact(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.generators
            .iter()
            .all(|g| (g.scale.abs() - 1.0).abs() < 1e-15 && seen.insert(g.param))
    }

    pub fn circuit(&self) -> Circuit {
        let mut c = Circuit::basis_state(self.n_qubits, self.initial_occupation);
        c.n_params = self.n_params();
        for g in &self.generators {
            c.pauli_exp(
                g.word.clone(),
                Angle::Param {
                    index: g.param,
                    scale: g.scale,
                },
            );
        }
        c
    }

    pub fn to_file(&self) -> AnsatzFile {
        AnsatzFile {
            n_qubits: self.n_qubits,
            initial_occupation: format_bits(self.initial_occupation, self.n_qubits),
            generators: self
                .generators
                .iter()
                .map(|g| GeneratorRecord {
                    pauli: g.word.to_string(),
                    param: g.param,
                    scale: g.scale,
                })
                .collect(),
        }
    }

    pub fn from_file(file: &AnsatzFile) -> Result<Self> {
        if file.initial_occupation.len() != file.n_qubits {
            return Err(Error::validation(
                "initial_occupation",
                format!("expected {} bits", file.n_qubits),
            ));
        }
        let occ = parse_bits(&file.initial_occupation)
            .map_err(|e| Error::validation("initial_occupation", e.to_string()))?;
        let generators = file
            .generators
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let word: PauliWord = g
                    .pauli
                    .parse()
                    .map_err(|e: Error| Error::validation(format!("generators[{i}]"), e.to_string()))?;
                Ok(Generator {
                    word,
                    param: g.param,
                    scale: g.scale,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(file.n_qubits, occ, generators).map_err(|e| Error::validation("generators", e.to_string()))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AnsatzFile {
    pub n_qubits: usize,
    pub initial_occupation: String,
    pub generators: Vec<GeneratorRecord>,
}

fn unit_scale() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorRecord {
    pub pauli: String,
    pub param: usize,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

/// Shot-based execution settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotSettings {
    pub shots: u64,
    pub noise: NoiseModel,
    pub seed: u64,
    pub confusion: Option<ConfusionModel>,
    pub order: CorrectionOrder,
    pub strategy: Strategy,
}

impl ShotSettings {
    pub fn new(shots: u64, noise: NoiseModel, seed: u64) -> Self {
        ShotSettings {
            shots,
            noise,
            seed,
            confusion: None,
            order: CorrectionOrder::default(),
            strategy: Strategy::General,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backend {
    StateVector,
    Shots(ShotSettings),
}

/// One cost evaluation with every mitigation variant that could be formed.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub stddev: f64,
    /// Indexed like [`Mitigation::ALL`]; `None` when unavailable (no confusion model).
    pub variants: [Option<f64>; 4],
    pub discard_fraction: f64,
    pub seed: Option<u64>,
}

impl Evaluation {
    fn exact(value: f64) -> Self {
        Evaluation {
            value,
            stddev: 0.0,
            variants: [Some(value); 4],
            discard_fraction: 0.0,
            seed: None,
        }
    }

    pub fn variant(&self, m: Mitigation) -> Option<f64> {
        let i = Mitigation::ALL.iter().position(|&x| x == m).expect("listed");
        self.variants[i]
    }
}

/// Per-variant estimates of one operator.
#[derive(Clone, Debug)]
struct OperatorEstimate {
    values: [Option<(f64, f64)>; 4],
    discard: [f64; 4],
}

/// An operator with its measurement plan, ready to be estimated on ansatz states.
#[derive(Clone, Debug)]
pub struct MeasuredOperator {
    pub op: PauliSum,
    pub plan: MeasurementPlan,
}

impl MeasuredOperator {
    pub fn new(op: PauliSum, symmetries: &[SymmetryOperator], strategy: Strategy) -> Result<Self> {
        let plan = MeasurementPlan::build(&op, symmetries, strategy)?;
        Ok(MeasuredOperator { op, plan })
    }

    /// Sample every measurement circuit; circuit `i` uses `derive_seed(seed, i)`.
    pub fn sample_tables(&self, state_prep: &Circuit, params: &[f64], s: &ShotSettings, seed: u64) -> Result<Vec<ShotTable>> {
        self.plan
            .entries
            .par_iter()
            .map(|e| {
                let c = state_prep.then_measure(&e.circuit);
                sample_with_id(
                    &c,
                    params,
                    s.shots,
                    &s.noise,
                    derive_seed(seed, e.circuit_id as u64),
                    e.circuit_id,
                )
            })
            .collect()
    }

    fn estimate(&self, state_prep: &Circuit, params: &[f64], s: &ShotSettings, seed: u64) -> Result<OperatorEstimate> {
        if self.plan.is_empty() {
            let c = self.op.constant().re;
            return Ok(OperatorEstimate {
                values: [Some((c, 0.0)); 4],
                discard: [0.0; 4],
            });
        }
        let tables = self.sample_tables(state_prep, params, s, seed)?;
        let mut values = [None; 4];
        let mut discard = [0.0; 4];
        for (i, &m) in Mitigation::ALL.iter().enumerate() {
            if m.uses_spam() && s.confusion.is_none() {
                continue;
            }
            let est = mitigated_expectation(&self.plan, &tables, &self.op, s.confusion.as_ref(), m, s.order)?;
            values[i] = Some((est.value, est.stddev));
            discard[i] = est.discard_fraction;
        }
        Ok(OperatorEstimate { values, discard })
    }
}

fn variant_index(m: Mitigation) -> usize {
    Mitigation::ALL.iter().position(|&x| x == m).expect("listed")
}

/// Plain expectation cost `⟨ψ(θ)|H|ψ(θ)⟩`.
#[derive(Clone, Debug)]
pub struct VqeCost {
    pub ansatz: AnsatzSpec,
    pub h: MeasuredOperator,
    pub backend: Backend,
    pub mitigation: Mitigation,
    evaluations: u64,
}

impl VqeCost {
    pub fn new(
        h: &PauliSum,
        ansatz: AnsatzSpec,
        symmetries: &[SymmetryOperator],
        backend: Backend,
        mitigation: Mitigation,
    ) -> Result<Self> {
        if !h.is_hermitian(1e-10) {
            return Err(Error::input("Hamiltonian is not Hermitian"));
        }
        if h.n_qubits() != ansatz.n_qubits {
            return Err(Error::input("Hamiltonian and ansatz act on different registers"));
        }
        let strategy = match &backend {
            Backend::Shots(s) => s.strategy,
            Backend::StateVector => Strategy::General,
        };
        Ok(VqeCost {
            h: MeasuredOperator::new(h.clone(), symmetries, strategy)?,
            ansatz,
            backend,
            mitigation,
            evaluations: 0,
        })
    }

    pub fn evaluate(&mut self, theta: &[f64]) -> Result<Evaluation> {
        let circuit = self.ansatz.circuit();
        match &self.backend {
            Backend::StateVector => {
                let psi = run_statevector(&circuit, theta)?;
                Ok(Evaluation::exact(exact_expectation(&psi, &self.h.op)?))
            }
            Backend::Shots(s) => {
                let seed = derive_seed(s.seed, self.evaluations);
                self.evaluations += 1;
                let est = self.h.estimate(&circuit, theta, s, seed)?;
                combine(&[est], self.mitigation, seed, |v| v[0])
            }
        }
    }
}

/// Combine per-operator estimates into a cost with delta-method uncertainty.
///
/// `f` maps the operator values to the cost; its gradient is taken numerically.
fn combine(
    ests: &[OperatorEstimate],
    selected: Mitigation,
    seed: u64,
    f: impl Fn(&[f64]) -> f64,
) -> Result<Evaluation> {
    let mut variants = [None; 4];
    let mut stddevs = [0.0; 4];
    for i in 0..4 {
        let vals: Option<Vec<(f64, f64)>> = ests.iter().map(|e| e.values[i]).collect();
        if let Some(vals) = vals {
            let x: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let value = f(&x);
            let mut var = 0.0;
            for (k, &(xk, sk)) in vals.iter().enumerate() {
                if sk == 0.0 {
                    continue;
                }
                let h = 1e-6 * xk.abs().max(1.0);
                let mut up = x.clone();
                up[k] += h;
                let mut dn = x.clone();
                dn[k] -= h;
                let g = (f(&up) - f(&dn)) / (2.0 * h);
                var += (g * sk).powi(2);
            }
            variants[i] = Some(value);
            stddevs[i] = var.sqrt();
        }
    }
    let i = variant_index(selected);
    let value = variants[i].ok_or_else(|| {
        Error::input(format!("{selected} mitigation needs a confusion model"))
    })?;
    let discard = ests.iter().map(|e| e.discard[i]).fold(0.0, f64::max);
    Ok(Evaluation {
        value,
        stddev: stddevs[i],
        variants,
        discard_fraction: discard,
        seed: Some(seed),
    })
}

/// Single-shot VQE energy; the state-vector backend returns the exact value with zero spread.
pub fn vqe_energy(
    theta: &[f64],
    h: &PauliSum,
    ansatz: &AnsatzSpec,
    symmetries: &[SymmetryOperator],
    backend: &Backend,
    mitigation: Mitigation,
) -> Result<Evaluation> {
    VqeCost::new(h, ansatz.clone(), symmetries, backend.clone(), mitigation)?.evaluate(theta)
}

/// Rational (order 0) or first-order expanded subspace energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaylorOrder {
    Exact,
    First,
}

impl TaylorOrder {
    pub fn from_order(k: u32) -> Result<Self> {
        match k {
            0 => Ok(TaylorOrder::Exact),
            1 => Ok(TaylorOrder::First),
            other => Err(Error::input(format!("taylor order {other} is not supported"))),
        }
    }
}

/// Smallest `|1 + s₁|` accepted by the rational form.
pub const MIN_DENOMINATOR: f64 = 0.1;

#[derive(Clone, Debug)]
pub struct TransQseProblem {
    pub h: PauliSum,
    pub h_lambda: PauliSum,
    pub lambda_op: PauliSum,
    pub ansatz: AnsatzSpec,
    pub order: TaylorOrder,
}

/// `(h₀, h₁, s₁)` combined into the subspace energy.
pub fn transqse_combine(h0: f64, h1: f64, s1: f64, order: TaylorOrder) -> Result<f64> {
    match order {
        TaylorOrder::Exact => {
            if (1.0 + s1).abs() < MIN_DENOMINATOR {
                return Err(Error::Conditioning(format!(
                    "|1 + s1| = {:.3e} is below {MIN_DENOMINATOR}",
                    (1.0 + s1).abs()
                )));
            }
            Ok((h0 + h1) / (1.0 + s1))
        }
        TaylorOrder::First => Ok((h0 + h1) * (1.0 - s1)),
    }
}

#[derive(Clone, Debug)]
pub struct TransQseCost {
    pub problem: TransQseProblem,
    ops: [MeasuredOperator; 3],
    pub backend: Backend,
    pub mitigation: Mitigation,
    evaluations: u64,
}

impl TransQseCost {
    pub fn new(
        problem: TransQseProblem,
        symmetries: &[SymmetryOperator],
        backend: Backend,
        mitigation: Mitigation,
    ) -> Result<Self> {
        for (name, op) in [
            ("h", &problem.h),
            ("h_lambda", &problem.h_lambda),
            ("lambda", &problem.lambda_op),
        ] {
            if !op.is_hermitian(1e-10) {
                return Err(Error::input(format!("{name} is not Hermitian")));
            }
            if op.n_qubits() != problem.ansatz.n_qubits {
                return Err(Error::input(format!("{name} and the ansatz differ in size")));
            }
        }
        let strategy = match &backend {
            Backend::Shots(s) => s.strategy,
            Backend::StateVector => Strategy::General,
        };
        let ops = [
            MeasuredOperator::new(problem.h.clone(), symmetries, strategy)?,
            MeasuredOperator::new(problem.h_lambda.clone(), symmetries, strategy)?,
            MeasuredOperator::new(problem.lambda_op.clone(), symmetries, strategy)?,
        ];
        Ok(TransQseCost {
            problem,
            ops,
            backend,
            mitigation,
            evaluations: 0,
        })
    }

    /// `H`, `HΛ` and `Λ` with their measurement plans.
    pub fn measured(&self) -> &[MeasuredOperator; 3] {
        &self.ops
    }

    /// Exact `(h₀, h₁, s₁)` on the state-vector backend.
    pub fn components(&self, theta: &[f64]) -> Result<(f64, f64, f64)> {
        let psi = run_statevector(&self.problem.ansatz.circuit(), theta)?;
        Ok((
            exact_expectation(&psi, &self.problem.h)?,
            exact_expectation(&psi, &self.problem.h_lambda)?,
            exact_expectation(&psi, &self.problem.lambda_op)?,
        ))
    }

    pub fn evaluate(&mut self, theta: &[f64]) -> Result<Evaluation> {
        let order = self.problem.order;
        match &self.backend {
            Backend::StateVector => {
                let (h0, h1, s1) = self.components(theta)?;
                Ok(Evaluation::exact(transqse_combine(h0, h1, s1, order)?))
            }
            Backend::Shots(s) => {
                let seed = derive_seed(s.seed, self.evaluations);
                self.evaluations += 1;
                let circuit = self.problem.ansatz.circuit();
                let mut ests = Vec::with_capacity(3);
                for (k, op) in self.ops.iter().enumerate() {
                    ests.push(op.estimate(&circuit, theta, s, derive_seed(seed, 1000 + k as u64))?);
                }
                // the conditioning check applies to the selected variant
                let i = variant_index(self.mitigation);
                if let Some((s1, _)) = ests[2].values[i] {
                    transqse_combine(0.0, 0.0, s1, order)?;
                }
                combine(&ests, self.mitigation, seed, |v| {
                    transqse_combine(v[0], v[1], v[2], order).unwrap_or(f64::NAN)
                })
            }
        }
    }
}

pub fn transqse_energy(theta: f64, cost: &mut TransQseCost) -> Result<Evaluation> {
    cost.evaluate(&[theta])
}

/// One accepted optimizer point.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub step: usize,
    pub theta: Vec<f64>,
    pub eval: Evaluation,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct OptimizationTrace {
    pub steps: Vec<TraceStep>,
    /// Energy subtracted for the `delta_e` column.
    pub reference_energy: Option<f64>,
    pub converged: bool,
}

impl OptimizationTrace {
    fn push(&mut self, theta: &[f64], eval: Evaluation) {
        let step = self.steps.len();
        self.steps.push(TraceStep {
            step,
            theta: theta.to_vec(),
            eval,
        });
    }

    pub fn last(&self) -> Option<&TraceStep> {
        self.steps.last()
    }

    /// Lowest recorded value.
    pub fn best(&self) -> Option<&TraceStep> {
        self.steps
            .iter()
            .min_by(|a, b| a.eval.value.total_cmp(&b.eval.value))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n_params = self.steps.first().map(|s| s.theta.len()).unwrap_or(0);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["step".to_string()];
        header.extend((0..n_params).map(|i| format!("theta{i}")));
        header.extend(
            [
                "e_raw",
                "e_spam",
                "e_pmsv",
                "e_spam_pmsv",
                "value",
                "delta_e",
                "stddev",
                "discard_fraction",
                "seed",
            ]
            .map(String::from),
        );
        w.write_record(&header).map_err(csv_err)?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.10}")).unwrap_or_default();
        for s in &self.steps {
            let mut row = vec![s.step.to_string()];
            row.extend(s.theta.iter().map(|t| format!("{t:.10}")));
            for m in [
                Mitigation::Raw,
                Mitigation::Spam,
                Mitigation::Pmsv,
                Mitigation::SpamPmsv,
            ] {
                row.push(fmt(s.eval.variant(m)));
            }
            row.push(format!("{:.10}", s.eval.value));
            row.push(fmt(self.reference_energy.map(|r| s.eval.value - r)));
            row.push(format!("{:.10}", s.eval.stddev));
            row.push(format!("{:.6}", s.eval.discard_fraction));
            row.push(s.eval.seed.map(|x| x.to_string()).unwrap_or_default());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotosolveOptions {
    pub max_sweeps: usize,
    pub tol: f64,
    /// Angular frequency of each coordinate: 1 for `sin θ` costs, 2 for `exp(−iθP)` ansätze.
    pub frequency: f64,
}

impl Default for RotosolveOptions {
    fn default() -> Self {
        RotosolveOptions {
            max_sweeps: 10,
            tol: 1e-3,
            frequency: 2.0,
        }
    }
}

/// Closed-form minimizer of `A sin(ωθ + φ) + C` from three samples, wrapped to `(−π/ω, π/ω]`.
pub fn sinusoid_minimizer(theta: f64, e0: f64, e_plus: f64, e_minus: f64, omega: f64) -> f64 {
    let shift = PI / (2.0 * omega);
    let t = theta - shift - (2.0 * e0 - e_plus - e_minus).atan2(e_plus - e_minus) / omega;
    wrap(t, PI / omega)
}

fn wrap(t: f64, half_period: f64) -> f64 {
    let period = 2.0 * half_period;
    let mut r = (t + half_period).rem_euclid(period) - half_period;
    if r <= -half_period {
        r += period;
    }
    r
}

/// Coordinate-wise sinusoid fitting; every accepted point is recorded.
pub fn rotosolve<F>(mut cost: F, theta0: &[f64], opts: RotosolveOptions) -> Result<OptimizationTrace>
where
    F: FnMut(&[f64]) -> Result<Evaluation>,
{
    let mut trace = OptimizationTrace::default();
    let mut theta = theta0.to_vec();
    let mut current = cost(&theta)?;
    trace.push(&theta, current.clone());
    let shift = PI / (2.0 * opts.frequency);
    for _ in 0..opts.max_sweeps {
        let start = current.value;
        for d in 0..theta.len() {
            let mut tp = theta.clone();
            tp[d] += shift;
            let mut tm = theta.clone();
            tm[d] -= shift;
            let ep = cost(&tp)?.value;
            let em = cost(&tm)?.value;
            theta[d] = sinusoid_minimizer(theta[d], current.value, ep, em, opts.frequency);
            current = cost(&theta)?;
            trace.push(&theta, current.clone());
        }
        if (start - current.value).abs() < opts.tol {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}

/// `E(θ + π/4·e_d) − E(θ − π/4·e_d)`, exact for unit-scale `exp(−iθP)` generators.
pub fn parameter_shift_gradient<F>(cost: &mut F, theta: &[f64]) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<Evaluation>,
{
    let mut g = Vec::with_capacity(theta.len());
    for d in 0..theta.len() {
        let mut tp = theta.to_vec();
        tp[d] += PI / 4.0;
        let mut tm = theta.to_vec();
        tm[d] -= PI / 4.0;
        g.push(cost(&tp)?.value - cost(&tm)?.value);
    }
    Ok(g)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdOptions {
    pub learning_rate: f64,
    pub steps: usize,
}

impl Default for SgdOptions {
    fn default() -> Self {
        SgdOptions {
            learning_rate: 0.01,
            steps: 50,
        }
    }
}

pub fn sgd<F>(mut cost: F, theta0: &[f64], opts: SgdOptions) -> Result<OptimizationTrace>
where
    F: FnMut(&[f64]) -> Result<Evaluation>,
{
    let mut trace = OptimizationTrace::default();
    let mut theta = theta0.to_vec();
    trace.push(&theta, cost(&theta)?);
    for _ in 0..opts.steps {
        let g = parameter_shift_gradient(&mut cost, &theta)?;
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t -= opts.learning_rate * gi;
        }
        trace.push(&theta, cost(&theta)?);
    }
    trace.converged = true;
    Ok(trace)
}
