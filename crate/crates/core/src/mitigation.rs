//! Readout (SPAM) correction and parity post-selection of measured outcomes.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{
    estimate_from_distributions, Distribution, MeasurementPlan, ParityTarget, ShotTable,
};
use crate::pauli::PauliSum;

/// Largest condition number accepted when inverting a confusion matrix.
pub const CONDITION_BOUND: f64 = 1e6;
/// Largest register for the full (2ⁿ × 2ⁿ) confusion model.
pub const FULL_MODEL_MAX_QUBITS: usize = 10;
/// Largest register a correction densifies.
pub const DENSE_CORRECTION_MAX_QUBITS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfusionMode {
    #[default]
    PerQubit,
    Full,
}

/// Column-stochastic readout model, `M[observed][prepared]`.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfusionModel {
    PerQubit(Vec<Matrix2<f64>>),
    Full { n_qubits: usize, matrix: DMatrix<f64> },
}

impl ConfusionModel {
    pub fn identity(n_qubits: usize) -> Self {
        ConfusionModel::PerQubit(vec![Matrix2::identity(); n_qubits])
    }

    /// Independent flips `p(1|0)`, `p(0|1)` on every qubit.
    pub fn from_flips(flips: &[(f64, f64)]) -> Self {
        ConfusionModel::PerQubit(
            flips
                .iter()
                .map(|&(p10, p01)| Matrix2::new(1.0 - p10, p01, p10, 1.0 - p01))
                .collect(),
        )
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            ConfusionModel::PerQubit(m) => m.len(),
            ConfusionModel::Full { n_qubits, .. } => *n_qubits,
        }
    }

    pub fn mode(&self) -> ConfusionMode {
        match self {
            ConfusionModel::PerQubit(_) => ConfusionMode::PerQubit,
            ConfusionModel::Full { .. } => ConfusionMode::Full,
        }
    }

    /// Dense 2ⁿ × 2ⁿ matrix (Kronecker product in per-qubit mode).
    pub fn dense(&self) -> Result<DMatrix<f64>> {
        match self {
            ConfusionModel::Full { matrix, .. } => Ok(matrix.clone()),
            ConfusionModel::PerQubit(ms) => {
                if ms.len() > FULL_MODEL_MAX_QUBITS {
                    return Err(Error::Resource(format!(
                        "dense confusion matrix for {} qubits",
                        ms.len()
                    )));
                }
                let dim = 1usize << ms.len();
                Ok(DMatrix::from_fn(dim, dim, |obs, prep| {
                    ms.iter()
                        .enumerate()
                        .map(|(q, m)| m[(obs >> q & 1, prep >> q & 1)])
                        .product()
                }))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |m: &DMatrix<f64>, what: &str| -> Result<()> {
            if m.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::validation(what, "entries must lie in [0, 1]"));
            }
            for (j, col) in m.column_iter().enumerate() {
                let s: f64 = col.sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::validation(
                        what,
                        format!("column {j} sums to {s}, not 1"),
                    ));
                }
            }
            Ok(())
        };
        match self {
            ConfusionModel::PerQubit(ms) => {
                for (q, m) in ms.iter().enumerate() {
                    let d = DMatrix::from_column_slice(2, 2, m.as_slice());
                    check(&d, &format!("matrices[{q}]"))?;
                }
                Ok(())
            }
            ConfusionModel::Full { n_qubits, matrix } => {
                if *n_qubits > FULL_MODEL_MAX_QUBITS {
                    return Err(Error::validation(
                        "n_qubits",
                        format!("full mode supports at most {FULL_MODEL_MAX_QUBITS} qubits"),
                    ));
                }
                let dim = 1usize << n_qubits;
                if matrix.shape() != (dim, dim) {
                    return Err(Error::validation("matrices[0]", "shape does not match 2^n"));
                }
                check(matrix, "matrices[0]")
            }
        }
    }

    pub fn to_file(&self) -> ConfusionFile {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        match self {
            ConfusionModel::PerQubit(ms) => ConfusionFile {
                mode: ConfusionMode::PerQubit,
                matrices: ms
                    .iter()
                    .map(|m| rows(&DMatrix::from_column_slice(2, 2, m.as_slice())))
                    .collect(),
            },
            ConfusionModel::Full { matrix, .. } => ConfusionFile {
                mode: ConfusionMode::Full,
                matrices: vec![rows(matrix)],
            },
        }
    }

    pub fn from_file(file: &ConfusionFile) -> Result<Self> {
        let to_matrix = |i: usize, rows: &Vec<Vec<f64>>| -> Result<DMatrix<f64>> {
            let dim = rows.len();
            if rows.iter().any(|r| r.len() != dim) {
                return Err(Error::validation(format!("matrices[{i}]"), "matrix must be square"));
            }
            Ok(DMatrix::from_fn(dim, dim, |r, c| rows[r][c]))
        };
        let model = match file.mode {
            ConfusionMode::PerQubit => {
                let mut ms = Vec::new();
                for (i, rows) in file.matrices.iter().enumerate() {
                    let d = to_matrix(i, rows)?;
                    if d.nrows() != 2 {
                        return Err(Error::validation(format!("matrices[{i}]"), "expected 2x2"));
                    }
                    ms.push(Matrix2::new(d[(0, 0)], d[(0, 1)], d[(1, 0)], d[(1, 1)]));
                }
                ConfusionModel::PerQubit(ms)
            }
            ConfusionMode::Full => {
                if file.matrices.len() != 1 {
                    return Err(Error::validation("matrices", "full mode takes one matrix"));
                }
                let matrix = to_matrix(0, &file.matrices[0])?;
                let dim = matrix.nrows();
                let n_qubits = dim.trailing_zeros() as usize;
                if dim != 1 << n_qubits {
                    return Err(Error::validation("matrices[0]", "dimension is not a power of two"));
                }
                ConfusionModel::Full { n_qubits, matrix }
            }
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConfusionFile {
    pub mode: ConfusionMode,
    /// Row-major `M[observed][prepared]`.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

/// Estimate a confusion model from basis-state preparations.
///
/// `prepare_and_measure(bits, shots)` must prepare the computational basis state
/// `bits` and return its measured counts.
pub fn calibrate_spam<F>(
    mut prepare_and_measure: F,
    n_qubits: usize,
    shots: u64,
    mode: ConfusionMode,
) -> Result<ConfusionModel>
where
    F: FnMut(u64, u64) -> Result<ShotTable>,
{
    if shots == 0 {
        return Err(Error::input("calibration needs a positive shot count"));
    }
    match mode {
        ConfusionMode::PerQubit => {
            let all_ones = if n_qubits == 64 { u64::MAX } else { (1u64 << n_qubits) - 1 };
            let zeros = prepare_and_measure(0, shots)?;
            let ones = prepare_and_measure(all_ones, shots)?;
            let frac_one = |t: &ShotTable, q: usize| -> f64 {
                let hits: u64 = t
                    .counts
                    .iter()
                    .filter(|(&b, _)| b >> q & 1 == 1)
                    .map(|(_, &c)| c)
                    .sum();
                hits as f64 / t.total() as f64
            };
            let ms = (0..n_qubits)
                .map(|q| {
                    let p10 = frac_one(&zeros, q);
                    let p11 = frac_one(&ones, q);
                    Matrix2::new(1.0 - p10, 1.0 - p11, p10, p11)
                })
                .collect();
            Ok(ConfusionModel::PerQubit(ms))
        }
        ConfusionMode::Full => {
            if n_qubits > FULL_MODEL_MAX_QUBITS {
                return Err(Error::input(format!(
                    "full calibration supports at most {FULL_MODEL_MAX_QUBITS} qubits"
                )));
            }
            let dim = 1usize << n_qubits;
            let mut matrix = DMatrix::zeros(dim, dim);
            for prep in 0..dim {
                let t = prepare_and_measure(prep as u64, shots)?;
                let total = t.total() as f64;
                for (&obs, &c) in &t.counts {
                    matrix[(obs as usize, prep)] = c as f64 / total;
                }
            }
            Ok(ConfusionModel::Full { n_qubits, matrix })
        }
    }
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Invert the readout model and project back onto valid distributions.
pub fn spam_correct(dist: &Distribution, model: &ConfusionModel) -> Result<Distribution> {
    let n = dist.n_bits;
    if model.n_qubits() != n {
        return Err(Error::dim(format!(
            "{}-qubit confusion model applied to {n}-bit outcomes",
            model.n_qubits()
        )));
    }
    if n > DENSE_CORRECTION_MAX_QUBITS {
        return Err(Error::Resource(format!("dense correction of {n} bits")));
    }
    let dim = 1usize << n;
    let total = dist.total_weight();
    if total <= 0.0 {
        return Err(Error::input("cannot correct an empty distribution"));
    }
    let mut p = vec![0.0; dim];
    for (&b, &w) in &dist.weights {
        p[b as usize] = w / total;
    }
    let corrected: Vec<f64> = match model {
        ConfusionModel::PerQubit(ms) => {
            let mut v = p;
            for (q, m) in ms.iter().enumerate() {
                let d = DMatrix::from_column_slice(2, 2, m.as_slice());
                if condition_number(&d) > CONDITION_BOUND {
                    return Err(Error::Numerical(format!(
                        "confusion matrix of qubit {q} is singular or near-singular"
                    )));
                }
                let inv = m.try_inverse().ok_or_else(|| {
                    Error::Numerical(format!("confusion matrix of qubit {q} is singular"))
                })?;
                let bit = 1usize << q;
                for b in 0..dim {
                    if b & bit == 0 {
                        let (a0, a1) = (v[b], v[b | bit]);
                        v[b] = inv[(0, 0)] * a0 + inv[(0, 1)] * a1;
                        v[b | bit] = inv[(1, 0)] * a0 + inv[(1, 1)] * a1;
                    }
                }
            }
            v
        }
        ConfusionModel::Full { matrix, .. } => {
            if condition_number(matrix) > CONDITION_BOUND {
                return Err(Error::Numerical(
                    "confusion matrix is singular or near-singular".into(),
                ));
            }
            let lu = matrix.clone().lu();
            let x = lu
                .solve(&DVector::from_vec(p))
                .ok_or_else(|| Error::Numerical("confusion matrix is singular".into()))?;
            x.iter().copied().collect()
        }
    };
    let projected = project_to_simplex(&corrected);
    Ok(Distribution {
        circuit_id: dist.circuit_id,
        n_bits: n,
        weights: projected
            .into_iter()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .map(|(b, w)| (b as u64, w))
            .collect(),
        shots: dist.shots,
    })
}

/// Keep outcomes that satisfy every parity target.
///
/// Returns the retained (renormalized) distribution and the discarded weight fraction.
/// With no targets the input passes through unchanged.
pub fn pmsv_filter(dist: &Distribution, targets: &[ParityTarget]) -> (Distribution, f64) {
    if targets.is_empty() {
        return (dist.clone(), 0.0);
    }
    let total = dist.total_weight();
    let kept: BTreeMap<u64, f64> = dist
        .weights
        .iter()
        .filter(|(&b, _)| targets.iter().all(|t| t.accepts(b)))
        .map(|(&b, &w)| (b, w))
        .collect();
    let kept_weight: f64 = kept.values().sum();
    let discard = if total > 0.0 {
        (1.0 - kept_weight / total).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let weights = if kept_weight > 0.0 {
        kept.into_iter().map(|(b, w)| (b, w / kept_weight)).collect()
    } else {
        BTreeMap::new()
    };
    (
        Distribution {
            circuit_id: dist.circuit_id,
            n_bits: dist.n_bits,
            weights,
            shots: dist.shots * (1.0 - discard),
        },
        discard,
    )
}

/// Count-level post-selection.
pub fn pmsv_postselect(table: &ShotTable, targets: &[ParityTarget]) -> (ShotTable, f64) {
    let mut out = ShotTable::new(table.circuit_id, table.n_bits);
    out.seed = table.seed;
    for (&b, &c) in &table.counts {
        if targets.iter().all(|t| t.accepts(b)) {
            out.record(b, c);
        }
    }
    let total = table.total();
    let discard = if total == 0 {
        0.0
    } else {
        1.0 - out.total() as f64 / total as f64
    };
    (out, discard)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mitigation {
    Raw,
    Spam,
    Pmsv,
    #[serde(rename = "spam+pmsv")]
    SpamPmsv,
}

impl Mitigation {
    pub const ALL: [Mitigation; 4] = [
        Mitigation::Raw,
        Mitigation::Pmsv,
        Mitigation::Spam,
        Mitigation::SpamPmsv,
    ];

    pub fn uses_spam(self) -> bool {
        matches!(self, Mitigation::Spam | Mitigation::SpamPmsv)
    }

    pub fn uses_pmsv(self) -> bool {
        matches!(self, Mitigation::Pmsv | Mitigation::SpamPmsv)
    }
}

impl FromStr for Mitigation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" | "none" => Ok(Mitigation::Raw),
            "spam" => Ok(Mitigation::Spam),
            "pmsv" => Ok(Mitigation::Pmsv),
            "spam+pmsv" | "spam_pmsv" | "both" => Ok(Mitigation::SpamPmsv),
            other => Err(Error::input(format!("unknown mitigation {other:?}"))),
        }
    }
}

impl fmt::Display for Mitigation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mitigation::Raw => "raw",
            Mitigation::Spam => "spam",
            Mitigation::Pmsv => "pmsv",
            Mitigation::SpamPmsv => "spam+pmsv",
        })
    }
}

/// Order in which the two corrections are applied when both are on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionOrder {
    #[default]
    SpamThenPmsv,
    PmsvThenSpam,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MitigatedEstimate {
    pub mitigation: Mitigation,
    pub value: f64,
    pub stddev: f64,
    /// Discarded fraction of all shots across circuits.
    pub discard_fraction: f64,
}

/// Correct each circuit's outcomes, then estimate `Σ c_w ⟨w⟩`.
pub fn mitigated_expectation(
    plan: &MeasurementPlan,
    tables: &[ShotTable],
    coefficients: &PauliSum,
    model: Option<&ConfusionModel>,
    mitigation: Mitigation,
    order: CorrectionOrder,
) -> Result<MitigatedEstimate> {
    let mut dists = Vec::with_capacity(tables.len());
    let mut shots_total = 0.0;
    let mut shots_discarded = 0.0;
    for t in tables {
        let entry = plan
            .entries
            .iter()
            .find(|e| e.circuit_id == t.circuit_id)
            .ok_or_else(|| Error::input(format!("no plan entry for circuit {}", t.circuit_id)))?;
        let targets = entry.parity_targets();
        let mut d = t.to_distribution();
        shots_total += d.shots;
        let spam = |d: &Distribution| -> Result<Distribution> {
            let m = model.ok_or_else(|| Error::input("SPAM correction requested without a confusion model"))?;
            spam_correct(d, m)
        };
        let mut filter = |d: &Distribution| -> Distribution {
            let (f, frac) = pmsv_filter(d, &targets);
            shots_discarded += d.shots * frac;
            f
        };
        d = match (mitigation.uses_spam(), mitigation.uses_pmsv(), order) {
            (false, false, _) => d,
            (true, false, _) => spam(&d)?,
            (false, true, _) => filter(&d),
            (true, true, CorrectionOrder::SpamThenPmsv) => {
                let s = spam(&d)?;
                filter(&s)
            }
            (true, true, CorrectionOrder::PmsvThenSpam) => {
                let f = filter(&d);
                spam(&f)?
            }
        };
        dists.push(d);
    }
    let est = estimate_from_distributions(plan, &dists, coefficients)?;
    Ok(MitigatedEstimate {
        mitigation,
        value: est.value,
        stddev: est.stddev,
        discard_fraction: if shots_total > 0.0 {
            shots_discarded / shots_total
        } else {
            0.0
        },
    })
}

/// All four variants, for trace logging.
pub fn mitigated_all(
    plan: &MeasurementPlan,
    tables: &[ShotTable],
    coefficients: &PauliSum,
    model: &ConfusionModel,
    order: CorrectionOrder,
) -> Result<Vec<MitigatedEstimate>> {
    Mitigation::ALL
        .iter()
        .map(|&m| mitigated_expectation(plan, tables, coefficients, Some(model), m, order))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{sample, Circuit, NoiseModel};

    fn zz_target() -> ParityTarget {
        ParityTarget::new(vec![0, 1], 1).unwrap()
    }

    #[test]
    fn parity_filter_example() {
        let t = ShotTable::from_strs(0, &[("00", 900), ("01", 50), ("10", 30), ("11", 20)]).unwrap();
        let (f, frac) = pmsv_postselect(&t, &[zz_target()]);
        assert_eq!(f.counts.len(), 2);
        assert_eq!(f.total(), 920);
        assert!((frac - 0.08).abs() < 1e-12);
        let (again, frac2) = pmsv_postselect(&f, &[zz_target()]);
        assert_eq!(again, f);
        assert_eq!(frac2, 0.0);
    }

    #[test]
    fn no_targets_pass_through() {
        let t = ShotTable::from_strs(0, &[("01", 3)]).unwrap();
        let (f, frac) = pmsv_postselect(&t, &[]);
        assert_eq!((f, frac), (t, 0.0));
    }

    #[test]
    fn identity_model_is_noop() {
        let t = ShotTable::from_strs(0, &[("00", 60), ("10", 30), ("11", 10)]).unwrap();
        let d = t.to_distribution();
        let c = spam_correct(&d, &ConfusionModel::identity(2)).unwrap();
        assert!(c.tv_distance(&d) < 1e-12);
    }

    #[test]
    fn singular_model_rejected() {
        let d = ShotTable::from_strs(0, &[("0", 1)]).unwrap().to_distribution();
        let m = ConfusionModel::from_flips(&[(0.5, 0.5)]);
        assert!(matches!(spam_correct(&d, &m), Err(Error::Numerical(_))));
    }

    #[test]
    fn simplex_projection() {
        let p = project_to_simplex(&[1.1, -0.05, -0.05]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&x| x >= 0.0));
        assert_eq!(project_to_simplex(&[0.25, 0.75]), vec![0.25, 0.75]);
    }

    fn simulated_calibration(noise: &NoiseModel, n: usize, shots: u64, mode: ConfusionMode) -> ConfusionModel {
        let mut seed = 100;
        calibrate_spam(
            |bits, s| {
                seed += 1;
                sample(&Circuit::basis_state(n, bits), &[], s, noise, seed)
            },
            n,
            shots,
            mode,
        )
        .unwrap()
    }

    #[test]
    fn noiseless_calibration_is_identity() {
        let m = simulated_calibration(&NoiseModel::noiseless(), 2, 100, ConfusionMode::PerQubit);
        assert_eq!(m, ConfusionModel::identity(2));
    }

    #[test]
    fn calibration_recovers_flip_rates() {
        let m = simulated_calibration(&NoiseModel::readout_only(0.10, 0.20), 1, 100_000, ConfusionMode::PerQubit);
        let ConfusionModel::PerQubit(ms) = m else { panic!() };
        let expected = Matrix2::new(0.90, 0.20, 0.10, 0.80);
        assert!((ms[0] - expected).abs().max() < 0.01);
    }

    #[test]
    fn full_calibration_matches_kronecker() {
        let noise = NoiseModel::readout_only(0.05, 0.08);
        let full = simulated_calibration(&noise, 2, 50_000, ConfusionMode::Full);
        let kron = ConfusionModel::from_flips(&[(0.05, 0.08), (0.05, 0.08)]).dense().unwrap();
        assert!((full.dense().unwrap() - kron).abs().max() < 0.01);
    }

    #[test]
    fn spam_round_trip() {
        let noise = NoiseModel::readout_only(0.05, 0.08);
        let model = ConfusionModel::from_flips(&[(0.05, 0.08), (0.05, 0.08)]);
        let noisy = sample(&Circuit::basis_state(2, 0b10), &[], 100_000, &noise, 5).unwrap();
        let corrected = spam_correct(&noisy.to_distribution(), &model).unwrap();
        assert!((corrected.total_weight() - 1.0).abs() < 1e-9);
        assert!(corrected.probability(0b10) > 0.99);
    }

    #[test]
    fn spam_shrinks_violating_mass() {
        let noise = NoiseModel::readout_only(0.02, 0.03);
        let model = ConfusionModel::from_flips(&[(0.02, 0.03), (0.02, 0.03)]);
        let t = sample(&Circuit::new(2, 0), &[], 24_000, &noise, 9).unwrap();
        let raw = t.to_distribution();
        let corrected = spam_correct(&raw, &model).unwrap();
        let targets = [zz_target()];
        assert!(corrected.violating_mass(&targets) < raw.violating_mass(&targets));
    }

    #[test]
    fn model_file_round_trip() {
        let m = ConfusionModel::from_flips(&[(0.1, 0.2), (0.0, 0.05)]);
        assert_eq!(ConfusionModel::from_file(&m.to_file()).unwrap(), m);
        let mut bad = m.to_file();
        bad.matrices[0][0][0] = 0.5;
        assert!(ConfusionModel::from_file(&bad).unwrap_err().is_validation());
    }
}
