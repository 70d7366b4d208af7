//! Seeded state-vector simulation with Monte Carlo Pauli noise and readout flips.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::CliffordGate;
use crate::error::{Error, Result};
use crate::measurement::ShotTable;
use crate::pauli::{Letter, PauliSum, PauliWord};

/// Largest register the state-vector backend accepts.
pub const MAX_QUBITS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    Const(f64),
    /// `scale · params[index]`
    Param { index: usize, scale: f64 },
}

impl Angle {
    pub fn param(index: usize) -> Self {
        Angle::Param { index, scale: 1.0 }
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        match *self {
            Angle::Const(v) => v,
            Angle::Param { index, scale } => scale * params[index],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Op {
    /// `exp(−i·angle·word)`
    PauliExp {
        #[serde(with = "word_str")]
        word: PauliWord,
        angle: Angle,
    },
    Gate(CliffordGate),
    MeasureAll,
}

mod word_str {
    use super::PauliWord;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &PauliWord, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&w.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PauliWord, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub n_params: usize,
    pub ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_params: usize) -> Self {
        Circuit {
            n_qubits,
            n_params,
            ops: Vec::new(),
        }
    }

    /// Basis-state preparation with `X` gates.
    pub fn basis_state(n_qubits: usize, bits: u64) -> Self {
        let mut c = Circuit::new(n_qubits, 0);
        for q in 0..n_qubits {
            if bits >> q & 1 == 1 {
                c.ops.push(Op::Gate(CliffordGate::X { qubit: q }));
            }
        }
        c
    }

    pub fn push(&mut self, op: Op) -> &mut Self {
        self.ops.push(op);
        self
    }

    pub fn pauli_exp(&mut self, word: PauliWord, angle: Angle) -> &mut Self {
        self.push(Op::PauliExp { word, angle })
    }

    pub fn gate(&mut self, g: CliffordGate) -> &mut Self {
        self.push(Op::Gate(g))
    }

    /// `self` followed by `other`'s operations, with a trailing `measure_all`.
    pub fn then_measure(&self, basis_change: &[CliffordGate]) -> Circuit {
        let mut c = self.clone();
        c.ops.retain(|o| !matches!(o, Op::MeasureAll));
        for g in basis_change {
            c.ops.push(Op::Gate(*g));
        }
        c.ops.push(Op::MeasureAll);
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::Resource(format!(
                "{} qubits exceed the {MAX_QUBITS}-qubit simulator limit",
                self.n_qubits
            )));
        }
        for (i, op) in self.ops.iter().enumerate() {
            match op {
                Op::PauliExp { word, angle } => {
                    if word.n_qubits() != self.n_qubits {
                        return Err(Error::input(format!(
                            "op {i}: {}-qubit word in a {}-qubit circuit",
                            word.n_qubits(),
                            self.n_qubits
                        )));
                    }
                    if let Angle::Param { index, .. } = angle {
                        if *index >= self.n_params {
                            return Err(Error::input(format!(
                                "op {i}: parameter {index} of {}",
                                self.n_params
                            )));
                        }
                    }
                }
                Op::Gate(g) => {
                    if let Some(q) = g.qubits().into_iter().find(|&q| q >= self.n_qubits) {
                        return Err(Error::input(format!("op {i}: qubit {q} out of range")));
                    }
                }
                Op::MeasureAll => {
                    if i + 1 != self.ops.len() {
                        return Err(Error::input("measure_all must be the final operation"));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, b: u64) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[b as usize] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(Error::dim("amplitude count is not a power of two"));
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `W|ψ⟩` for a bare Pauli word.
    pub fn apply_pauli(&mut self, word: &PauliWord) {
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let (t, ph) = word.apply_to_basis(b as u64);
            out[t as usize] = a * ph.to_complex();
        }
        self.amps = out;
    }

    /// `(cos θ − i sin θ W)|ψ⟩`
    pub fn apply_pauli_exp(&mut self, word: &PauliWord, theta: f64) {
        let (s, c) = theta.sin_cos();
        let mut out: Vec<Complex64> = self.amps.iter().map(|a| a * c).collect();
        let mis = Complex64::new(0.0, -s);
        for (b, a) in self.amps.iter().enumerate() {
            let (t, ph) = word.apply_to_basis(b as u64);
            out[t as usize] += a * ph.to_complex() * mis;
        }
        self.amps = out;
    }

    pub fn apply_gate(&mut self, g: &CliffordGate) {
        let dim = self.amps.len();
        match *g {
            CliffordGate::X { qubit } => {
                let m = 1 << qubit;
                for b in 0..dim {
                    if b & m == 0 {
                        self.amps.swap(b, b | m);
                    }
                }
            }
            CliffordGate::S { qubit } => {
                let m = 1 << qubit;
                for (b, a) in self.amps.iter_mut().enumerate() {
                    if b & m != 0 {
                        *a *= Complex64::new(0.0, 1.0);
                    }
                }
            }
            CliffordGate::H { qubit } => {
                let m = 1 << qubit;
                let r = std::f64::consts::FRAC_1_SQRT_2;
                for b in 0..dim {
                    if b & m == 0 {
                        let (a0, a1) = (self.amps[b], self.amps[b | m]);
                        self.amps[b] = (a0 + a1) * r;
                        self.amps[b | m] = (a0 - a1) * r;
                    }
                }
            }
            CliffordGate::Cx { control, target } => {
                let (mc, mt) = (1 << control, 1 << target);
                for b in 0..dim {
                    if b & mc != 0 && b & mt == 0 {
                        self.amps.swap(b, b | mt);
                    }
                }
            }
        }
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

pub fn run_statevector(circuit: &Circuit, params: &[f64]) -> Result<StateVector> {
    run_from(circuit, params, StateVector::zero(circuit.n_qubits))
}

/// Run `circuit` on an arbitrary initial state.
pub fn run_from(circuit: &Circuit, params: &[f64], mut psi: StateVector) -> Result<StateVector> {
    circuit.validate()?;
    if params.len() != circuit.n_params {
        return Err(Error::input(format!(
            "circuit takes {} parameters, got {}",
            circuit.n_params,
            params.len()
        )));
    }
    if psi.n_qubits != circuit.n_qubits {
        return Err(Error::input("initial state size differs from the circuit"));
    }
    for op in &circuit.ops {
        match op {
            Op::PauliExp { word, angle } => psi.apply_pauli_exp(word, angle.value(params)),
            Op::Gate(g) => psi.apply_gate(g),
            Op::MeasureAll => {}
        }
    }
    Ok(psi)
}

/// `⟨ψ|op|ψ⟩` for a Hermitian sum.
pub fn exact_expectation(state: &StateVector, op: &PauliSum) -> Result<f64> {
    if op.n_qubits() != state.n_qubits {
        return Err(Error::dim(format!(
            "{}-qubit operator on a {}-qubit state",
            op.n_qubits(),
            state.n_qubits
        )));
    }
    if !op.is_hermitian(1e-10) {
        return Err(Error::input("expectation requires a Hermitian operator"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (w, c) in op.terms() {
        let mut term = Complex64::new(0.0, 0.0);
        for (b, a) in state.amps.iter().enumerate() {
            if a.norm_sqr() == 0.0 {
                continue;
            }
            let (t, ph) = w.apply_to_basis(b as u64);
            term += state.amps[t as usize].conj() * ph.to_complex() * a;
        }
        acc += c * term;
    }
    if acc.im.abs() > 1e-10 {
        return Err(Error::Numerical(format!(
            "expectation has imaginary residue {:e}",
            acc.im
        )));
    }
    Ok(acc.re)
}

/// Synthetic stand-in for device noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// `(p(1|0), p(0|1))` per qubit; a single entry applies to every qubit.
    pub readout: Vec<(f64, f64)>,
    pub depolarizing_1q: f64,
    pub depolarizing_2q: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            readout: vec![(0.02, 0.03)],
            depolarizing_1q: 0.001,
            depolarizing_2q: 0.01,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            readout: vec![],
            depolarizing_1q: 0.0,
            depolarizing_2q: 0.0,
        }
    }

    pub fn readout_only(p10: f64, p01: f64) -> Self {
        NoiseModel {
            readout: vec![(p10, p01)],
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = self
            .readout
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain([self.depolarizing_1q, self.depolarizing_2q]);
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::input(format!("noise probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn readout_for(&self, q: usize) -> (f64, f64) {
        match self.readout.len() {
            0 => (0.0, 0.0),
            1 => self.readout[0],
            _ => self.readout.get(q).copied().unwrap_or((0.0, 0.0)),
        }
    }

    pub fn is_noiseless(&self) -> bool {
        self.depolarizing_1q == 0.0
            && self.depolarizing_2q == 0.0
            && self.readout.iter().all(|&(a, b)| a == 0.0 && b == 0.0)
    }
}

/// Where depolarizing errors strike: after op `after`, on one or two qubits.
#[derive(Clone, Copy, Debug)]
struct NoiseSite {
    after: usize,
    qubits: (usize, Option<usize>),
}

/// A weight-`k` exponential compiles to a CNOT ladder of `2(k−1)` two-qubit gates;
/// each contributes one two-qubit event on consecutive support pairs.
fn noise_sites(circuit: &Circuit) -> Vec<NoiseSite> {
    let mut sites = Vec::new();
    for (i, op) in circuit.ops.iter().enumerate() {
        match op {
            Op::PauliExp { word, .. } => {
                let sup = word.support();
                if sup.len() == 1 {
                    sites.push(NoiseSite {
                        after: i,
                        qubits: (sup[0], None),
                    });
                }
                for pair in sup.windows(2) {
                    for _ in 0..2 {
                        sites.push(NoiseSite {
                            after: i,
                            qubits: (pair[0], Some(pair[1])),
                        });
                    }
                }
            }
            Op::Gate(CliffordGate::Cx { control, target }) => sites.push(NoiseSite {
                after: i,
                qubits: (*control, Some(*target)),
            }),
            Op::Gate(g) => sites.push(NoiseSite {
                after: i,
                qubits: (g.qubits()[0], None),
            }),
            Op::MeasureAll => {}
        }
    }
    sites
}

fn random_pauli(rng: &mut ChaCha8Rng, n: usize, qubits: (usize, Option<usize>)) -> PauliWord {
    const L: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];
    let mut w = PauliWord::identity(n);
    match qubits {
        (q, None) => w.set(q, L[rng.random_range(1..4)]),
        (a, Some(b)) => {
            let k = rng.random_range(1..16);
            w.set(a, L[k / 4]);
            w.set(b, L[k % 4]);
        }
    }
    w
}

fn sample_index(cdf: &[f64], rng: &mut ChaCha8Rng) -> u64 {
    let total = *cdf.last().expect("nonempty");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1) as u64
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Seeded shots of a measured circuit.
///
/// Each shot draws its depolarizing events; shots without events reuse the
/// noiseless distribution, others run their own trajectory. Readout flips are
/// applied per bit last.
pub fn sample(
    circuit: &Circuit,
    params: &[f64],
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ShotTable> {
    sample_with_id(circuit, params, shots, noise, seed, 0)
}

pub fn sample_with_id(
    circuit: &Circuit,
    params: &[f64],
    shots: u64,
    noise: &NoiseModel,
    seed: u64,
    circuit_id: usize,
) -> Result<ShotTable> {
    if shots == 0 {
        return Err(Error::input("shots must be positive"));
    }
    noise.validate()?;
    let ideal = run_statevector(circuit, params)?;
    let n = circuit.n_qubits;
    let ideal_cdf = cumulative(&ideal.probabilities());
    let sites = if noise.depolarizing_1q > 0.0 || noise.depolarizing_2q > 0.0 {
        noise_sites(circuit)
    } else {
        Vec::new()
    };
    let readout: Vec<(f64, f64)> = (0..n).map(|q| noise.readout_for(q)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = ShotTable::new(circuit_id, n);
    table.seed = Some(seed);

    let mut events: Vec<(usize, PauliWord)> = Vec::new();
    for _ in 0..shots {
        events.clear();
        for s in &sites {
            let p = if s.qubits.1.is_some() {
                noise.depolarizing_2q
            } else {
                noise.depolarizing_1q
            };
            if rng.random::<f64>() < p {
                events.push((s.after, random_pauli(&mut rng, n, s.qubits)));
            }
        }
        let mut outcome = if events.is_empty() {
            sample_index(&ideal_cdf, &mut rng)
        } else {
            let psi = run_trajectory(circuit, params, &events);
            sample_index(&cumulative(&psi.probabilities()), &mut rng)
        };
        for (q, &(p10, p01)) in readout.iter().enumerate() {
            if p10 == 0.0 && p01 == 0.0 {
                continue;
            }
            let bit = outcome >> q & 1 == 1;
            let p = if bit { p01 } else { p10 };
            if rng.random::<f64>() < p {
                outcome ^= 1 << q;
            }
        }
        table.record(outcome, 1);
    }
    Ok(table)
}

fn run_trajectory(circuit: &Circuit, params: &[f64], events: &[(usize, PauliWord)]) -> StateVector {
    let mut psi = StateVector::zero(circuit.n_qubits);
    let mut k = 0;
    for (i, op) in circuit.ops.iter().enumerate() {
        match op {
            Op::PauliExp { word, angle } => psi.apply_pauli_exp(word, angle.value(params)),
            Op::Gate(g) => psi.apply_gate(g),
            Op::MeasureAll => {}
        }
        while k < events.len() && events[k].0 == i {
            psi.apply_pauli(&events[k].1);
            k += 1;
        }
    }
    psi
}

/// Independent per-circuit seed derived from a base seed (SplitMix64 finalizer).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
