//! Z₂ Pauli symmetries, sector bookkeeping and qubit tapering.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::clifford::{self, CliffordGate, PivotRule};
use crate::error::{Error, Result};
use crate::pauli::{PauliSum, PauliWord, PhasedWord};

/// Pauli word with the eigenvalue it takes in the target sector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymmetryOperator {
    pub word: PauliWord,
    pub sign: i8,
}

impl SymmetryOperator {
    pub fn new(word: PauliWord, sign: i8) -> Result<Self> {
        if word.is_identity() {
            return Err(Error::input("symmetry word must not be the identity"));
        }
        if sign != 1 && sign != -1 {
            return Err(Error::input(format!("symmetry sign must be ±1, got {sign}")));
        }
        Ok(SymmetryOperator { word, sign })
    }

    pub fn parse(pauli: &str, sign: i8) -> Result<Self> {
        Self::new(pauli.parse()?, sign)
    }

    /// `(−1)^parity` check of a basis state against the target sign.
    pub fn satisfied_by(&self, bits: u64) -> Option<bool> {
        self.word.diagonal_eigenvalue(bits).map(|e| e == self.sign)
    }
}

impl fmt::Display for SymmetryOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = if self.sign > 0 { '+' } else { '-' };
        write!(f, "{s}{}", self.word)
    }
}

/// File form: a list of `{pauli, sign}` records.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryRecord {
    pub pauli: String,
    pub sign: i8,
}

pub fn symmetries_from_records(records: &[SymmetryRecord]) -> Result<Vec<SymmetryOperator>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            SymmetryOperator::parse(&r.pauli, r.sign)
                .map_err(|e| Error::validation(format!("symmetries[{i}]"), e.to_string()))
        })
        .collect()
}

pub fn symmetries_to_records(syms: &[SymmetryOperator]) -> Vec<SymmetryRecord> {
    syms.iter()
        .map(|s| SymmetryRecord {
            pauli: s.word.to_string(),
            sign: s.sign,
        })
        .collect()
}

/// Sector signs read off a reference basis state; every word must be diagonal.
pub fn sector_from_reference(words: &[PauliWord], reference: u64) -> Result<Vec<SymmetryOperator>> {
    words
        .iter()
        .map(|w| {
            let sign = w.diagonal_eigenvalue(reference).ok_or_else(|| {
                Error::Symmetry(format!(
                    "{w} is not diagonal, so the reference does not fix its sector"
                ))
            })?;
            SymmetryOperator::new(w.clone(), sign)
        })
        .collect()
}

/// True iff every term of `h` commutes with the symmetry word.
pub fn verify_symmetry(h: &PauliSum, s: &SymmetryOperator) -> Result<bool> {
    if h.n_qubits() != s.word.n_qubits() {
        return Err(Error::dim(format!(
            "{}-qubit operator checked against {}-qubit symmetry",
            h.n_qubits(),
            s.word.n_qubits()
        )));
    }
    for w in h.words() {
        if !w.commutes(&s.word)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Everything needed to carry operators and states onto the tapered register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaperingMap {
    pub n_qubits: usize,
    /// Basis change `C`, gates in application order; `C S C†` is a single `Z` per symmetry.
    pub clifford: Vec<CliffordGate>,
    pub removed_qubits: Vec<usize>,
    /// `Z` eigenvalue fixed on each removed qubit after the basis change.
    pub sector_signs: BTreeMap<usize, i8>,
    /// Old index → new index for retained qubits.
    pub relabeling: BTreeMap<usize, usize>,
    #[serde(skip)]
    pub symmetries: Vec<SymmetryOperator>,
}

impl TaperingMap {
    pub fn n_tapered(&self) -> usize {
        self.n_qubits - self.removed_qubits.len()
    }

    fn fixed_bits(&self) -> BTreeMap<usize, bool> {
        self.sector_signs.iter().map(|(&q, &s)| (q, s < 0)).collect()
    }

    /// Carry an operator that commutes with the symmetries onto the tapered register.
    pub fn taper_operator(&self, op: &PauliSum) -> Result<PauliSum> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::dim(format!(
                "{}-qubit operator tapered with a {}-qubit map",
                op.n_qubits(),
                self.n_qubits
            )));
        }
        let rotated = conjugate_sum(&self.clifford, op)?;
        rotated.restrict_support(&self.fixed_bits()).map_err(|e| match e {
            Error::Contraction(m) => Error::Symmetry(format!(
                "operator does not commute with the tapered symmetries: {m}"
            )),
            other => other,
        })
    }

    /// Apply the basis change to a reference basis state and drop the removed bits.
    pub fn taper_state(&self, reference: u64) -> Result<u64> {
        let mut b = reference;
        for g in &self.clifford {
            match *g {
                CliffordGate::Cx { control, target } => {
                    if b >> control & 1 == 1 {
                        b ^= 1 << target;
                    }
                }
                CliffordGate::X { qubit } => b ^= 1 << qubit,
                CliffordGate::S { .. } => {}
                CliffordGate::H { qubit } => {
                    return Err(Error::Symmetry(format!(
                        "basis change puts qubit {qubit} in superposition; \
                         the reference is not a basis state of the tapered register"
                    )))
                }
            }
        }
        for (&q, &s) in &self.sector_signs {
            let bit = b >> q & 1 == 1;
            if bit != (s < 0) {
                return Err(Error::Symmetry(format!(
                    "reference lies outside the chosen sector (qubit {q} after the basis change)"
                )));
            }
        }
        let mut out = 0u64;
        for (&old, &new) in &self.relabeling {
            if b >> old & 1 == 1 {
                out |= 1 << new;
            }
        }
        Ok(out)
    }
}

impl TaperingMap {
    /// Image of a further symmetry on the tapered register, or `None` when it
    /// is fixed entirely by the removed qubits.
    pub fn taper_symmetry(&self, s: &SymmetryOperator) -> Result<Option<SymmetryOperator>> {
        let img = self.taper_operator(&PauliSum::from_word(s.word.clone(), Complex64::new(1.0, 0.0)))?;
        let (word, c) = match img.terms().next() {
            Some((w, c)) if img.len() == 1 => (w.clone(), *c),
            _ => return Err(Error::Internal(format!("{} has no single-word image", s.word))),
        };
        let c_sign = if c.re > 0.0 { 1 } else { -1 };
        if word.is_identity() {
            if c_sign != s.sign {
                return Err(Error::Symmetry(format!(
                    "{s} contradicts the tapered sector"
                )));
            }
            return Ok(None);
        }
        Ok(Some(SymmetryOperator::new(word, s.sign * c_sign)?))
    }
}

fn conjugate_sum(gates: &[CliffordGate], op: &PauliSum) -> Result<PauliSum> {
    let mut out = PauliSum::zero(op.n_qubits());
    for (w, c) in op.terms() {
        let img = clifford::conjugate_through(gates, &PhasedWord::from(w.clone()))?;
        out.add_term(img.word, c * img.phase.to_complex())?;
    }
    Ok(out)
}

/// Remove one qubit per independent symmetry, keeping the sector fixed by the signs.
pub fn taper(h: &PauliSum, symmetries: &[SymmetryOperator]) -> Result<(PauliSum, TaperingMap)> {
    let map = tapering_map(h.n_qubits(), symmetries)?;
    for s in symmetries {
        if !verify_symmetry(h, s)? {
            return Err(Error::Symmetry(format!(
                "{} does not commute with the operator",
                s.word
            )));
        }
    }
    let tapered = map.taper_operator(h)?;
    Ok((tapered, map))
}

/// Build the map from the symmetries alone; operators are tapered afterwards.
pub fn tapering_map(n_qubits: usize, symmetries: &[SymmetryOperator]) -> Result<TaperingMap> {
    for s in symmetries {
        if s.word.n_qubits() != n_qubits {
            return Err(Error::dim(format!(
                "{}-qubit symmetry on a {n_qubits}-qubit register",
                s.word.n_qubits()
            )));
        }
    }
    for (i, a) in symmetries.iter().enumerate() {
        for b in &symmetries[i + 1..] {
            if !a.word.commutes(&b.word)? {
                return Err(Error::input(format!(
                    "symmetries {} and {} do not commute",
                    a.word, b.word
                )));
            }
        }
    }
    let words: Vec<PauliWord> = symmetries.iter().map(|s| s.word.clone()).collect();
    let diag = clifford::diagonalize(&words, PivotRule::Lowest)?;
    if diag.rank() < symmetries.len() {
        return Err(Error::input(format!(
            "symmetry set is dependent ({} words, rank {})",
            symmetries.len(),
            diag.rank()
        )));
    }

    // Image of generator i is sign·Z over its own pivot and possibly earlier ones;
    // solve for each pivot's eigenvalue in generator order.
    let mut sector_signs: BTreeMap<usize, i8> = BTreeMap::new();
    for (k, s) in symmetries.iter().enumerate() {
        let (img_sign, support) = clifford::diagonal_image(&diag.gates, &s.word)?;
        let pivot = diag.pivots[k];
        let mut value = s.sign * img_sign;
        for q in support {
            if q == pivot {
                continue;
            }
            value *= sector_signs.get(&q).copied().ok_or_else(|| {
                Error::Internal(format!("image of {} touches unfixed qubit {q}", s.word))
            })?;
        }
        sector_signs.insert(pivot, value);
    }

    let mut removed_qubits = diag.pivots.clone();
    removed_qubits.sort_unstable();
    let relabeling = (0..n_qubits)
        .filter(|q| !sector_signs.contains_key(q))
        .enumerate()
        .map(|(new, old)| (old, new))
        .collect();
    Ok(TaperingMap {
        n_qubits,
        clifford: diag.gates,
        removed_qubits,
        sector_signs,
        relabeling,
        symmetries: symmetries.to_vec(),
    })
}

pub fn taper_state_prep(reference: u64, map: &TaperingMap) -> Result<u64> {
    map.taper_state(reference)
}

/// Independent, mutually commuting Pauli words that commute with every term of `h`.
///
/// Null space of the symplectic term matrix over GF(2), followed by a greedy
/// pass that keeps a commuting subset. Registers up to 64 qubits.
pub fn discover_symmetries(h: &PauliSum) -> Result<Vec<PauliWord>> {
    let n = h.n_qubits();
    if n > 64 {
        return Err(Error::Resource(format!(
            "symmetry search supports at most 64 qubits, got {n}"
        )));
    }
    // Row for term (x, z): condition x·v_z + z·v_x = 0, with v = (v_x | v_z) in 2n bits.
    let mut rows: Vec<u128> = h
        .non_identity_words()
        .iter()
        .map(|w| {
            let (x, z) = w.masks();
            (z as u128) | ((x as u128) << n)
        })
        .collect();
    let width = 2 * n;
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..width {
        let Some(p) = (r..rows.len()).find(|&i| rows[i] >> col & 1 == 1) else {
            continue;
        };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && rows[i] >> col & 1 == 1 {
                rows[i] ^= rows[r];
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    let free: Vec<usize> = (0..width).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::new();
    for &f in &free {
        let mut v: u128 = 1 << f;
        for (i, &pc) in pivot_cols.iter().enumerate() {
            if rows[i] >> f & 1 == 1 {
                v |= 1 << pc;
            }
        }
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let vx = (v as u64) & mask;
        let vz = ((v >> n) as u64) & mask;
        basis.push(PauliWord::from_masks(n, vx, vz));
    }
    let mut chosen: Vec<PauliWord> = Vec::new();
    for w in basis {
        let mut ok = true;
        for c in &chosen {
            if !w.commutes(c)? {
                ok = false;
                break;
            }
        }
        if ok {
            chosen.push(w);
        }
    }
    Ok(chosen)
}

/// Eigenvalue of `word` on the computational basis state `b`, for diagonal words only.
pub fn parity_sign(word: &PauliWord, b: u64) -> Result<i8> {
    word.diagonal_eigenvalue(b)
        .ok_or_else(|| Error::input(format!("{word} is not diagonal")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    fn sym(s: &str, sign: i8) -> SymmetryOperator {
        SymmetryOperator::parse(s, sign).unwrap()
    }

    fn sorted_eigs(m: &DMatrix<Complex64>) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e
    }

    /// Spectrum of `h` on basis states where every (diagonal) symmetry takes its sign.
    fn sector_spectrum(h: &PauliSum, syms: &[SymmetryOperator]) -> Vec<f64> {
        let m = h.dense_matrix().unwrap();
        let idx: Vec<usize> = (0..m.nrows())
            .filter(|&b| syms.iter().all(|s| s.satisfied_by(b as u64).unwrap()))
            .collect();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])]);
        sorted_eigs(&sub)
    }

    fn random_symmetric(rng: &mut ChaCha8Rng, syms: &[SymmetryOperator], n_terms: usize) -> PauliSum {
        let n = syms[0].word.n_qubits();
        let mut h = PauliSum::zero(n);
        while h.len() < n_terms {
            let x: u64 = rng.random::<u64>() & ((1 << n) - 1);
            let z: u64 = rng.random::<u64>() & ((1 << n) - 1);
            let word = PauliWord::from_masks(n, x, z);
            if syms.iter().all(|s| word.commutes(&s.word).unwrap()) {
                h.add_term(word, Complex64::new(rng.random_range(-1.0..1.0), 0.0))
                    .unwrap();
            }
        }
        h
    }

    #[test]
    fn verify_examples() {
        let h = PauliSum::from_real_strs(&[("ZZ", 1.0), ("XX", 1.0)]).unwrap();
        assert!(verify_symmetry(&h, &sym("ZZ", 1)).unwrap());
        let h = PauliSum::from_real_strs(&[("XI", 1.0)]).unwrap();
        assert!(!verify_symmetry(&h, &sym("ZZ", 1)).unwrap());
        assert!(verify_symmetry(&h, &sym("ZZZ", 1)).is_err());
    }

    #[test]
    fn symmetry_itself_tapers_to_constant() {
        let h = PauliSum::from_real_strs(&[("ZZ", 1.0)]).unwrap();
        let (t, map) = taper(&h, &[sym("ZZ", 1)]).unwrap();
        assert_eq!(t, PauliSum::identity(1, 1.0));
        assert_eq!(map.n_tapered(), 1);
    }

    #[test]
    fn zero_state_tapers_to_zero_state() {
        let syms = [sym("ZIZI", 1), sym("IZIZ", 1)];
        let map = tapering_map(4, &syms).unwrap();
        assert_eq!(map.taper_state(0).unwrap(), 0);
    }

    #[test]
    fn reference_outside_sector_is_rejected() {
        let syms = [sym("ZIZI", 1), sym("IZIZ", 1)];
        let map = tapering_map(4, &syms).unwrap();
        assert!(matches!(map.taper_state(0b0001), Err(Error::Symmetry(_))));
    }

    #[test]
    fn iron_reference_tapers_to_all_zero() {
        let reference = crate::bitstring::parse_bits("1100").unwrap();
        let words = [w("ZIZI"), w("IZIZ")];
        let syms = sector_from_reference(&words, reference).unwrap();
        assert_eq!(syms.iter().map(|s| s.sign).collect::<Vec<_>>(), vec![-1, -1]);
        let map = tapering_map(4, &syms).unwrap();
        assert_eq!(map.removed_qubits, vec![0, 1]);
        assert_eq!(map.taper_state(reference).unwrap(), 0);
        let third = map.taper_symmetry(&sym("IZZI", -1)).unwrap().unwrap();
        assert_eq!((third.word, third.sign), (w("ZZ"), 1));
    }

    #[test]
    fn dependent_or_noncommuting_sets_rejected() {
        let h = PauliSum::identity(2, 1.0);
        assert!(matches!(
            taper(&h, &[sym("ZZ", 1), sym("ZZ", -1)]),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            taper(&h, &[sym("ZI", 1), sym("XI", 1)]),
            Err(Error::Input(_))
        ));
        let h = PauliSum::from_real_strs(&[("XI", 1.0)]).unwrap();
        assert!(matches!(taper(&h, &[sym("ZZ", 1)]), Err(Error::Symmetry(_))));
    }

    #[test]
    fn two_symmetry_sector_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let syms = [sym("ZIZI", -1), sym("IZIZ", -1)];
        let h = random_symmetric(&mut rng, &syms, 10);
        let (t, _) = taper(&h, &syms).unwrap();
        assert_eq!(t.n_qubits(), 2);
        let a = sector_spectrum(&h, &syms);
        let b = sorted_eigs(&t.dense_matrix().unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn thirty_random_hamiltonians_keep_sector_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..30 {
            let sign = if trial % 2 == 0 { 1 } else { -1 };
            let syms = [sym("ZIZI", sign)];
            let h = random_symmetric(&mut rng, &syms, 8);
            let (t, _) = taper(&h, &syms).unwrap();
            let a = sector_spectrum(&h, &syms);
            let b = sorted_eigs(&t.dense_matrix().unwrap());
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-10, "trial {trial}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn non_diagonal_symmetry_tapers_spectrum() {
        // XX and ZZ: the sector is no longer a set of basis states, compare through projectors.
        let syms = [sym("XXI", 1), sym("ZZI", -1)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_symmetric(&mut rng, &syms, 6);
        let (t, _) = taper(&h, &syms).unwrap();
        let m = h.dense_matrix().unwrap();
        let dim = m.nrows();
        let mut proj = DMatrix::<Complex64>::identity(dim, dim);
        for s in &syms {
            let p = (DMatrix::identity(dim, dim) + s.word.dense_matrix().unwrap() * Complex64::new(s.sign as f64, 0.0))
                * Complex64::new(0.5, 0.0);
            proj = &proj * p;
        }
        // P H P has the sector spectrum plus zeros for the complement; shift to separate them.
        let shifted = &proj * (&m + DMatrix::identity(dim, dim) * Complex64::new(100.0, 0.0)) * &proj;
        let mut a: Vec<f64> = sorted_eigs(&shifted).into_iter().filter(|e| e.abs() > 1e-6).map(|e| e - 100.0).collect();
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let b = sorted_eigs(&t.dense_matrix().unwrap());
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn discovery_finds_parity_symmetries() {
        let h = PauliSum::from_real_strs(&[("ZIZI", 1.0), ("XXXX", 0.5), ("IZIZ", 0.3), ("YYXX", 0.2)])
            .unwrap();
        let found = discover_symmetries(&h).unwrap();
        assert!(!found.is_empty());
        for s in &found {
            assert!(verify_symmetry(&h, &SymmetryOperator::new(s.clone(), 1).unwrap()).unwrap());
        }
    }
}
