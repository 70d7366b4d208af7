//! Commuting-set partitioning, measurement-basis synthesis and shot-table estimation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bitstring::{format_bits, parse_bits};
use crate::clifford::{self, CliffordGate, PivotRule};
use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliWord};
use crate::symmetry::SymmetryOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    General,
    Qubitwise,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Strategy::General),
            "qubitwise" | "qwc" => Ok(Strategy::Qubitwise),
            other => Err(Error::input(format!("unknown grouping strategy {other:?}"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::General => "general",
            Strategy::Qubitwise => "qubitwise",
        })
    }
}

fn compatible(a: &PauliWord, b: &PauliWord, strategy: Strategy) -> Result<bool> {
    match strategy {
        Strategy::General => a.commutes(b),
        Strategy::Qubitwise => a.qubitwise_commutes(b),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CommutingSet {
    pub members: Vec<PauliWord>,
    pub attached_symmetries: Vec<SymmetryOperator>,
}

/// Greedy largest-degree-first colouring of the conflict graph.
///
/// Identity words are skipped. Sets come out in colour order, members in input order.
pub fn partition_commuting(terms: &[PauliWord], strategy: Strategy) -> Result<Vec<CommutingSet>> {
    let words: Vec<&PauliWord> = terms.iter().filter(|w| !w.is_identity()).collect();
    let n = words.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if !compatible(words[i], words[j], strategy)? {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(adj[i].len()));

    let mut color = vec![usize::MAX; n];
    let mut n_colors = 0;
    for &v in &order {
        let used: Vec<usize> = adj[v].iter().map(|&u| color[u]).collect();
        let c = (0..).find(|c| !used.contains(c)).expect("unbounded");
        color[v] = c;
        n_colors = n_colors.max(c + 1);
    }
    let mut sets = vec![
        CommutingSet {
            members: vec![],
            attached_symmetries: vec![],
        };
        n_colors
    ];
    for (i, w) in words.iter().enumerate() {
        sets[color[i]].members.push((*w).clone());
    }
    Ok(sets)
}

/// Attach every symmetry that commutes with all members of a set.
pub fn attach_symmetries(sets: &[CommutingSet], syms: &[SymmetryOperator]) -> Result<Vec<CommutingSet>> {
    let mut out = sets.to_vec();
    for set in &mut out {
        for s in syms {
            let mut ok = true;
            for m in &set.members {
                if !m.commutes(&s.word)? {
                    ok = false;
                    break;
                }
            }
            if ok && !set.attached_symmetries.contains(s) {
                set.attached_symmetries.push(s.clone());
            }
        }
    }
    Ok(out)
}

/// `(−1)^{parity of bits}` times `sign` is the measured eigenvalue.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultMap {
    pub bits: Vec<usize>,
    pub sign: i8,
}

impl ResultMap {
    pub fn eigenvalue(&self, outcome: u64) -> i8 {
        let parity = self.bits.iter().filter(|&&q| outcome >> q & 1 == 1).count() % 2;
        if parity == 0 {
            self.sign
        } else {
            -self.sign
        }
    }
}

/// Symmetry check on one measurement circuit: keep outcomes whose parity sign equals `sign`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParityTarget {
    pub bits: Vec<usize>,
    pub sign: i8,
}

impl ParityTarget {
    pub fn new(bits: Vec<usize>, sign: i8) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::input("parity target needs at least one bit"));
        }
        Ok(ParityTarget { bits, sign })
    }

    pub fn accepts(&self, outcome: u64) -> bool {
        let parity = self.bits.iter().filter(|&&q| outcome >> q & 1 == 1).count() % 2;
        (if parity == 0 { 1 } else { -1 }) == self.sign
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEntry {
    pub circuit_id: usize,
    pub n_qubits: usize,
    pub circuit: Vec<CliffordGate>,
    pub members: Vec<(PauliWord, ResultMap)>,
    pub symmetries: Vec<(SymmetryOperator, ParityTarget)>,
}

impl MeasurementEntry {
    pub fn parity_targets(&self) -> Vec<ParityTarget> {
        self.symmetries.iter().map(|(_, t)| t.clone()).collect()
    }

    pub fn result_map(&self, word: &PauliWord) -> Option<&ResultMap> {
        self.members.iter().find(|(w, _)| w == word).map(|(_, m)| m)
    }
}

/// Basis change for one commuting set plus the bit maps of every member and symmetry.
pub fn synthesize_measurement(set: &CommutingSet, circuit_id: usize) -> Result<MeasurementEntry> {
    let all: Vec<PauliWord> = set
        .members
        .iter()
        .chain(set.attached_symmetries.iter().map(|s| &s.word))
        .cloned()
        .collect();
    let Some(n) = all.first().map(|w| w.n_qubits()) else {
        return Err(Error::input("cannot synthesize a measurement for an empty set"));
    };
    let circuit = if all.iter().all(|w| w.is_diagonal()) {
        Vec::new()
    } else {
        clifford::diagonalize(&all, PivotRule::Lowest)?.gates
    };
    let mut members = Vec::with_capacity(set.members.len());
    for w in &set.members {
        let (sign, bits) = clifford::diagonal_image(&circuit, w)?;
        members.push((w.clone(), ResultMap { bits, sign }));
    }
    let mut symmetries = Vec::new();
    for s in &set.attached_symmetries {
        let (sign, bits) = clifford::diagonal_image(&circuit, &s.word)?;
        symmetries.push((s.clone(), ParityTarget::new(bits, sign * s.sign)?));
    }
    Ok(MeasurementEntry {
        circuit_id,
        n_qubits: n,
        circuit,
        members,
        symmetries,
    })
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct MeasurementPlan {
    pub entries: Vec<MeasurementEntry>,
}

impl MeasurementPlan {
    pub fn from_sets(sets: &[CommutingSet]) -> Result<Self> {
        let entries = sets
            .iter()
            .enumerate()
            .map(|(i, s)| synthesize_measurement(s, i))
            .collect::<Result<_>>()?;
        Ok(MeasurementPlan { entries })
    }

    /// Partition the non-identity words of `h`, attach symmetries and synthesize circuits.
    pub fn build(h: &PauliSum, syms: &[SymmetryOperator], strategy: Strategy) -> Result<Self> {
        let sets = partition_commuting(&h.non_identity_words(), strategy)?;
        let sets = attach_symmetries(&sets, syms)?;
        Self::from_sets(&sets)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry_for(&self, word: &PauliWord) -> Option<&MeasurementEntry> {
        self.entries.iter().find(|e| e.result_map(word).is_some())
    }

    pub fn to_file(&self) -> PlanFile {
        PlanFile {
            circuits: self
                .entries
                .iter()
                .map(|e| PlanEntryFile {
                    circuit_id: e.circuit_id,
                    n_qubits: e.n_qubits,
                    gates: e.circuit.clone(),
                    members: e
                        .members
                        .iter()
                        .map(|(w, m)| MapRecord {
                            pauli: w.to_string(),
                            bits: m.bits.clone(),
                            sign: m.sign,
                        })
                        .collect(),
                    symmetries: e
                        .symmetries
                        .iter()
                        .map(|(s, t)| SymmetryMapRecord {
                            pauli: s.word.to_string(),
                            expected: s.sign,
                            bits: t.bits.clone(),
                            sign: t.sign,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlanFile {
    pub circuits: Vec<PlanEntryFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlanEntryFile {
    pub circuit_id: usize,
    pub n_qubits: usize,
    pub gates: Vec<CliffordGate>,
    pub members: Vec<MapRecord>,
    pub symmetries: Vec<SymmetryMapRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MapRecord {
    pub pauli: String,
    pub bits: Vec<usize>,
    pub sign: i8,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SymmetryMapRecord {
    pub pauli: String,
    pub expected: i8,
    pub bits: Vec<usize>,
    pub sign: i8,
}

/// Integer outcome counts for one circuit. Bit `q` of a key is qubit `q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShotTable {
    pub circuit_id: usize,
    pub n_bits: usize,
    pub counts: BTreeMap<u64, u64>,
    pub seed: Option<u64>,
}

impl ShotTable {
    pub fn new(circuit_id: usize, n_bits: usize) -> Self {
        ShotTable {
            circuit_id,
            n_bits,
            counts: BTreeMap::new(),
            seed: None,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn record(&mut self, outcome: u64, n: u64) {
        if n > 0 {
            *self.counts.entry(outcome).or_insert(0) += n;
        }
    }

    pub fn from_strs(circuit_id: usize, counts: &[(&str, u64)]) -> Result<Self> {
        let n_bits = counts
            .first()
            .map(|(s, _)| s.len())
            .ok_or_else(|| Error::input("empty count list"))?;
        let mut t = ShotTable::new(circuit_id, n_bits);
        for (s, c) in counts {
            if s.len() != n_bits {
                return Err(Error::input(format!("bitstring {s:?} has the wrong length")));
            }
            t.record(parse_bits(s)?, *c);
        }
        Ok(t)
    }

    pub fn to_distribution(&self) -> Distribution {
        let total = self.total() as f64;
        Distribution {
            circuit_id: self.circuit_id,
            n_bits: self.n_bits,
            weights: self
                .counts
                .iter()
                .map(|(&b, &c)| (b, if total > 0.0 { c as f64 / total } else { 0.0 }))
                .collect(),
            shots: total,
        }
    }

    pub fn to_file(&self) -> ShotTableFile {
        ShotTableFile {
            circuit_id: self.circuit_id,
            shots: self.total(),
            seed: self.seed,
            counts: self
                .counts
                .iter()
                .map(|(&b, &c)| (format_bits(b, self.n_bits), c))
                .collect(),
        }
    }

    pub fn from_file(file: &ShotTableFile, source: &str) -> Result<Self> {
        let n_bits = file.counts.keys().next().map(|k| k.len()).unwrap_or(0);
        let mut t = ShotTable::new(file.circuit_id, n_bits);
        t.seed = file.seed;
        for (k, &c) in &file.counts {
            if k.len() != n_bits {
                return Err(Error::validation(
                    format!("{source}: counts[{k:?}]"),
                    format!("bitstring length differs from {n_bits}"),
                ));
            }
            let b = parse_bits(k).map_err(|e| Error::validation(format!("{source}: counts"), e.to_string()))?;
            t.record(b, c);
        }
        if t.total() != file.shots {
            return Err(Error::validation(
                format!("{source}: shots"),
                format!("declared {} shots but counts sum to {}", file.shots, t.total()),
            ));
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ShotTableFile {
    pub circuit_id: usize,
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub counts: BTreeMap<String, u64>,
}

/// Normalized (or quasi-) outcome weights with the number of shots they stand for.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    pub circuit_id: usize,
    pub n_bits: usize,
    pub weights: BTreeMap<u64, f64>,
    pub shots: f64,
}

impl Distribution {
    pub fn total_weight(&self) -> f64 {
        self.weights.values().sum()
    }

    pub fn probability(&self, outcome: u64) -> f64 {
        self.weights.get(&outcome).copied().unwrap_or(0.0)
    }

    /// Mass on outcomes rejected by any of the targets.
    pub fn violating_mass(&self, targets: &[ParityTarget]) -> f64 {
        self.weights
            .iter()
            .filter(|(&b, _)| !targets.iter().all(|t| t.accepts(b)))
            .map(|(_, &p)| p)
            .sum()
    }

    /// Total-variation distance to another distribution on the same register.
    pub fn tv_distance(&self, other: &Distribution) -> f64 {
        let mut keys: Vec<u64> = self.weights.keys().chain(other.weights.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        0.5 * keys
            .iter()
            .map(|&k| (self.probability(k) - other.probability(k)).abs())
            .sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stddev: f64,
}

/// `Σ c_w ⟨w⟩` from per-circuit distributions, with root-sum-square standard error.
///
/// Within one circuit the per-shot energy `Σ c_w λ_w(b)` is averaged, so its
/// sample variance already carries the covariances between members.
pub fn estimate_from_distributions(
    plan: &MeasurementPlan,
    dists: &[Distribution],
    coefficients: &PauliSum,
) -> Result<Estimate> {
    let terms = coefficients.real_terms(1e-10)?;
    let mut per_circuit: BTreeMap<usize, Vec<(f64, &ResultMap)>> = BTreeMap::new();
    let mut value = 0.0;
    for (w, c) in &terms {
        if w.is_identity() {
            value += c;
            continue;
        }
        let entry = plan
            .entry_for(w)
            .ok_or_else(|| Error::input(format!("no measurement circuit covers {w}")))?;
        per_circuit
            .entry(entry.circuit_id)
            .or_default()
            .push((*c, entry.result_map(w).expect("found above")));
    }
    let mut var = 0.0;
    for (id, maps) in per_circuit {
        let d = dists
            .iter()
            .find(|d| d.circuit_id == id)
            .ok_or_else(|| Error::input(format!("no shot table for circuit {id}")))?;
        let w_total = d.total_weight();
        if d.shots <= 0.0 || w_total <= 0.0 {
            return Err(Error::input(format!("shot table for circuit {id} is empty")));
        }
        let mut mean = 0.0;
        let mut second = 0.0;
        for (&b, &p) in &d.weights {
            let e: f64 = maps.iter().map(|(c, m)| c * m.eigenvalue(b) as f64).sum();
            mean += p * e;
            second += p * e * e;
        }
        mean /= w_total;
        second /= w_total;
        value += mean;
        var += (second - mean * mean).max(0.0) / d.shots;
    }
    Ok(Estimate {
        value,
        stddev: var.sqrt(),
    })
}

pub fn estimate_expectation(
    plan: &MeasurementPlan,
    tables: &[ShotTable],
    coefficients: &PauliSum,
) -> Result<Estimate> {
    let dists: Vec<Distribution> = tables.iter().map(|t| t.to_distribution()).collect();
    estimate_from_distributions(plan, &dists, coefficients)
}
