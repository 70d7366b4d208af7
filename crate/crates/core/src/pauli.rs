//! Pauli words and complex-weighted Pauli sums.
//!
//! A word stores one `(x, z)` bit pair per qubit, packed little-endian into
//! `u64` blocks (qubit 0 is bit 0 of block 0). The pair selects the letter
//! `I = (0,0)`, `X = (1,0)`, `Y = (1,1)`, `Z = (0,1)`, and the operator a word
//! denotes is `i^{#Y} X^x Z^z`, i.e. every `Y` is stored as `iXZ`. Under this
//! convention every bare word is Hermitian, so a sum is Hermitian exactly when
//! its canonical coefficients are real.
//!
//! Strings render qubit 0 leftmost: `"XZ"` is `X` on qubit 0 and `Z` on qubit 1.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients with magnitude below this are dropped from sums.
pub const PRUNE_TOL: f64 = 1e-12;

/// Largest register the dense-matrix oracle will expand.
pub const DENSE_MAX_QUBITS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' | '_' => Some(Letter::I),
            'X' | 'x' => Some(Letter::X),
            'Y' | 'y' => Some(Letter::Y),
            'Z' | 'z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Power of `i`, stored modulo 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_exponent(e: i64) -> Self {
        Phase(e.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// `Some(±1)` when the phase is real.
    pub fn real_sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

const BLOCK: usize = 64;

fn blocks_for(n: usize) -> usize {
    n.div_ceil(BLOCK).max(1)
}

/// A tensor product of single-qubit Paulis on a fixed-size register.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliWord {
    n_qubits: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliWord {
    pub fn identity(n_qubits: usize) -> Self {
        let b = blocks_for(n_qubits);
        PauliWord {
            n_qubits,
            x: vec![0; b],
            z: vec![0; b],
        }
    }

    /// Word with the given letters on the listed qubits and identity elsewhere.
    pub fn from_letters(n_qubits: usize, letters: &[(usize, Letter)]) -> Result<Self> {
        let mut w = Self::identity(n_qubits);
        for &(q, l) in letters {
            if q >= n_qubits {
                return Err(Error::dim(format!(
                    "qubit {q} outside a {n_qubits}-qubit register"
                )));
            }
            w.set(q, l);
        }
        Ok(w)
    }

    pub fn single(n_qubits: usize, qubit: usize, letter: Letter) -> Result<Self> {
        Self::from_letters(n_qubits, &[(qubit, letter)])
    }

    /// Z on every listed qubit.
    pub fn z_product(n_qubits: usize, qubits: &[usize]) -> Result<Self> {
        let letters: Vec<_> = qubits.iter().map(|&q| (q, Letter::Z)).collect();
        Self::from_letters(n_qubits, &letters)
    }

    pub fn from_bits(x: &[bool], z: &[bool]) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::dim("x and z bit-vectors differ in length"));
        }
        let mut w = Self::identity(x.len());
        for q in 0..x.len() {
            w.set(q, Letter::from_bits(x[q], z[q]));
        }
        Ok(w)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q / BLOCK] >> (q % BLOCK)) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q / BLOCK] >> (q % BLOCK)) & 1 == 1
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn set(&mut self, q: usize, letter: Letter) {
        assert!(q < self.n_qubits, "qubit index out of range");
        let (xb, zb) = letter.bits();
        let (blk, off) = (q / BLOCK, q % BLOCK);
        let mask = 1u64 << off;
        self.x[blk] = (self.x[blk] & !mask) | ((xb as u64) << off);
        self.z[blk] = (self.z[blk] & !mask) | ((zb as u64) << off);
    }

    pub fn with_letter(mut self, q: usize, letter: Letter) -> Self {
        self.set(q, letter);
        self
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&b| b == 0) && self.z.iter().all(|&b| b == 0)
    }

    /// No X or Y letters.
    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|&b| b == 0)
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Qubits carrying a non-identity letter, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n_qubits)
            .filter(|&q| self.letter(q) != Letter::I)
            .collect()
    }

    pub fn z_support(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|&q| self.z_bit(q)).collect()
    }

    pub fn x_support(&self) -> Vec<usize> {
        (0..self.n_qubits).filter(|&q| self.x_bit(q)).collect()
    }

    /// Number of `Y` letters.
    pub fn y_count(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    /// `(x, z)` as single `u64` masks; only valid for registers of at most 64 qubits.
    pub fn masks(&self) -> (u64, u64) {
        assert!(self.n_qubits <= 64, "mask view needs <= 64 qubits");
        (self.x[0], self.z[0])
    }

    pub fn from_masks(n_qubits: usize, x: u64, z: u64) -> Self {
        assert!(n_qubits <= 64, "mask view needs <= 64 qubits");
        let keep = if n_qubits == 64 {
            u64::MAX
        } else {
            (1u64 << n_qubits) - 1
        };
        PauliWord {
            n_qubits,
            x: vec![x & keep],
            z: vec![z & keep],
        }
    }

    fn check_same_size(&self, other: &PauliWord) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::dim(format!(
                "{}-qubit word combined with {}-qubit word",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }

    /// Symplectic test: the words commute iff `x_a·z_b + z_a·x_b` is even.
    pub fn commutes(&self, other: &PauliWord) -> Result<bool> {
        self.check_same_size(other)?;
        let mut parity = 0u32;
        for i in 0..self.x.len() {
            parity += (self.x[i] & other.z[i]).count_ones();
            parity += (self.z[i] & other.x[i]).count_ones();
        }
        Ok(parity.is_multiple_of(2))
    }

    /// Letterwise commutation: on every qubit the letters are equal or one is `I`.
    pub fn qubitwise_commutes(&self, other: &PauliWord) -> Result<bool> {
        self.check_same_size(other)?;
        Ok((0..self.n_qubits).all(|q| {
            let (a, b) = (self.letter(q), other.letter(q));
            a == Letter::I || b == Letter::I || a == b
        }))
    }

    /// Product `self · other = phase · word`.
    pub fn mul_word(&self, other: &PauliWord) -> Result<PhasedWord> {
        self.check_same_size(other)?;
        let mut out = PauliWord::identity(self.n_qubits);
        let mut anti = 0u32;
        for i in 0..self.x.len() {
            out.x[i] = self.x[i] ^ other.x[i];
            out.z[i] = self.z[i] ^ other.z[i];
            anti += (self.z[i] & other.x[i]).count_ones();
        }
        let e = self.y_count() as i64 + other.y_count() as i64 - out.y_count() as i64
            + 2 * anti as i64;
        Ok(PhasedWord {
            phase: Phase::from_exponent(e),
            word: out,
        })
    }

    /// Matrix element pattern: `word|b> = phase(b) |b ^ x>` for basis index `b`.
    pub fn apply_to_basis(&self, b: u64) -> (u64, Phase) {
        let (x, z) = self.masks();
        let e = self.y_count() as i64 + 2 * (z & b).count_ones() as i64;
        (b ^ x, Phase::from_exponent(e))
    }

    /// Eigenvalue of a diagonal word on computational basis state `b`.
    pub fn diagonal_eigenvalue(&self, b: u64) -> Option<i8> {
        if !self.is_diagonal() {
            return None;
        }
        let (_, z) = self.masks();
        Some(if (z & b).count_ones().is_multiple_of(2) { 1 } else { -1 })
    }

    /// Remove the listed qubits and renumber the rest contiguously.
    pub fn drop_qubits(&self, removed: &[usize]) -> PauliWord {
        let kept: Vec<usize> = (0..self.n_qubits).filter(|q| !removed.contains(q)).collect();
        let mut out = PauliWord::identity(kept.len());
        for (new, &old) in kept.iter().enumerate() {
            out.set(new, self.letter(old));
        }
        out
    }

    /// Place this word on a larger register through `map[old] = new`.
    pub fn remap(&self, n_qubits: usize, map: &[usize]) -> Result<PauliWord> {
        if map.len() != self.n_qubits {
            return Err(Error::dim("qubit map length differs from word size"));
        }
        let mut out = PauliWord::identity(n_qubits);
        for (old, &new) in map.iter().enumerate() {
            if new >= n_qubits {
                return Err(Error::dim(format!("mapped qubit {new} out of range")));
            }
            let l = self.letter(old);
            if l != Letter::I {
                out.set(new, l);
            }
        }
        Ok(out)
    }

    /// Kronecker-free dense matrix of the bare word.
    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > DENSE_MAX_QUBITS {
            return Err(Error::Resource(format!(
                "dense expansion of {} qubits exceeds the {DENSE_MAX_QUBITS}-qubit cap",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for b in 0..dim as u64 {
            let (row, ph) = self.apply_to_basis(b);
            m[(row as usize, b as usize)] = ph.to_complex();
        }
        Ok(m)
    }
}

impl Ord for PauliWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n_qubits.cmp(&other.n_qubits).then_with(|| {
            for q in 0..self.n_qubits {
                match self.letter(q).cmp(&other.letter(q)) {
                    Ordering::Equal => continue,
                    ord => return ord,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n_qubits {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliWord({self})")
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let mut w = PauliWord::identity(s.chars().count());
        for (q, c) in s.chars().enumerate() {
            let l = Letter::from_char(c).ok_or_else(|| {
                Error::parse(format!("pauli string {s:?}"), format!("bad letter {c:?}"))
            })?;
            w.set(q, l);
        }
        Ok(w)
    }
}

/// A word together with a unit phase `i^k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PhasedWord {
    pub phase: Phase,
    pub word: PauliWord,
}

impl PhasedWord {
    pub fn new(phase: Phase, word: PauliWord) -> Self {
        PhasedWord { phase, word }
    }

    pub fn identity(n_qubits: usize) -> Self {
        PhasedWord::new(Phase::ONE, PauliWord::identity(n_qubits))
    }

    pub fn mul(&self, other: &PhasedWord) -> Result<PhasedWord> {
        let p = self.word.mul_word(&other.word)?;
        Ok(PhasedWord {
            phase: self.phase * other.phase * p.phase,
            word: p.word,
        })
    }
}

impl From<PauliWord> for PhasedWord {
    fn from(word: PauliWord) -> Self {
        PhasedWord::new(Phase::ONE, word)
    }
}

/// Product of two phased words.
pub fn multiply(a: &PhasedWord, b: &PhasedWord) -> Result<PhasedWord> {
    a.mul(b)
}

pub fn commutes(a: &PauliWord, b: &PauliWord) -> Result<bool> {
    a.commutes(b)
}

/// Complex-weighted sum of words on a common register, pruned at [`PRUNE_TOL`].
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliWord, Complex64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        PauliSum {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(n_qubits: usize, coeff: f64) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(PauliWord::identity(n_qubits), Complex64::new(coeff, 0.0))
            .expect("same register");
        s
    }

    pub fn from_word(word: PauliWord, coeff: Complex64) -> Self {
        let mut s = Self::zero(word.n_qubits());
        s.add_term(word, coeff).expect("same register");
        s
    }

    pub fn from_phased(pw: &PhasedWord, coeff: Complex64) -> Self {
        Self::from_word(pw.word.clone(), coeff * pw.phase.to_complex())
    }

    pub fn from_terms<I>(n_qubits: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliWord, Complex64)>,
    {
        let mut s = Self::zero(n_qubits);
        for (w, c) in terms {
            s.add_term(w, c)?;
        }
        Ok(s)
    }

    /// Build from `(string, real coefficient)` pairs; convenient for fixtures and tests.
    pub fn from_real_strs(terms: &[(&str, f64)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|(s, _)| s.chars().count())
            .ok_or_else(|| Error::input("empty term list"))?;
        let mut s = Self::zero(n);
        for (p, c) in terms {
            s.add_term(p.parse()?, Complex64::new(*c, 0.0))?;
        }
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliWord, &Complex64)> {
        self.terms.iter()
    }

    pub fn words(&self) -> impl Iterator<Item = &PauliWord> {
        self.terms.keys()
    }

    /// Non-identity words in canonical order.
    pub fn non_identity_words(&self) -> Vec<PauliWord> {
        self.terms
            .keys()
            .filter(|w| !w.is_identity())
            .cloned()
            .collect()
    }

    pub fn coefficient(&self, word: &PauliWord) -> Complex64 {
        self.terms.get(word).copied().unwrap_or_default()
    }

    pub fn constant(&self) -> Complex64 {
        self.coefficient(&PauliWord::identity(self.n_qubits))
    }

    /// Accumulate `coeff · word`, pruning the entry if it cancels.
    pub fn add_term(&mut self, word: PauliWord, coeff: Complex64) -> Result<()> {
        if word.n_qubits() != self.n_qubits {
            return Err(Error::dim(format!(
                "{}-qubit word added to {}-qubit sum",
                word.n_qubits(),
                self.n_qubits
            )));
        }
        match self.terms.get_mut(&word) {
            Some(existing) => {
                *existing += coeff;
                if existing.norm() < PRUNE_TOL {
                    self.terms.remove(&word);
                }
            }
            None => {
                if coeff.norm() >= PRUNE_TOL {
                    self.terms.insert(word, coeff);
                }
            }
        }
        Ok(())
    }

    fn check_same_size(&self, other: &PauliSum) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::dim(format!(
                "{}-qubit sum combined with {}-qubit sum",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same_size(other)?;
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &PauliSum) -> Result<PauliSum> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, factor: Complex64) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), c * factor).expect("same register");
        }
        out
    }

    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same_size(other)?;
        let mut acc: BTreeMap<PauliWord, Complex64> = BTreeMap::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                let p = wa.mul_word(wb)?;
                *acc.entry(p.word).or_default() += ca * cb * p.phase.to_complex();
            }
        }
        acc.retain(|_, c| c.norm() >= PRUNE_TOL);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms: acc,
        })
    }

    /// `self·other − other·self`. Only anticommuting word pairs contribute, each twice.
    pub fn commutator(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_same_size(other)?;
        let mut acc: BTreeMap<PauliWord, Complex64> = BTreeMap::new();
        for (wa, ca) in &self.terms {
            for (wb, cb) in &other.terms {
                if wa.commutes(wb)? {
                    continue;
                }
                let p = wa.mul_word(wb)?;
                *acc.entry(p.word).or_default() += 2.0 * ca * cb * p.phase.to_complex();
            }
        }
        acc.retain(|_, c| c.norm() >= PRUNE_TOL);
        Ok(PauliSum {
            n_qubits: self.n_qubits,
            terms: acc,
        })
    }

    /// Hermitian conjugate: words are Hermitian, so only coefficients conjugate.
    pub fn adjoint(&self) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c.conj())).collect(),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.values().all(|c| c.im.abs() <= tol)
    }

    /// Real coefficients of a Hermitian sum.
    pub fn real_terms(&self, tol: f64) -> Result<Vec<(PauliWord, f64)>> {
        self.terms
            .iter()
            .map(|(w, c)| {
                if c.im.abs() > tol {
                    Err(Error::input(format!(
                        "operator is not Hermitian: coefficient of {w} is {c}"
                    )))
                } else {
                    Ok((w.clone(), c.re))
                }
            })
            .collect()
    }

    /// Zero out imaginary residues below `tol`.
    pub fn chop_imaginary(&self, tol: f64) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for (w, c) in &self.terms {
            let c = if c.im.abs() <= tol {
                Complex64::new(c.re, 0.0)
            } else {
                *c
            };
            out.add_term(w.clone(), c).expect("same register");
        }
        out
    }

    /// Contract fixed qubits onto computational-basis values.
    ///
    /// Each fixed qubit must carry only `I` or `Z` in every term; a `Z` on a
    /// qubit fixed to 1 flips the sign of the coefficient. The remaining qubits
    /// are renumbered in ascending order.
    pub fn restrict_support(&self, fixed: &BTreeMap<usize, bool>) -> Result<PauliSum> {
        self.contract(fixed, true)
    }

    /// Like [`restrict_support`](Self::restrict_support), but terms with `X`/`Y` on a
    /// fixed qubit are dropped instead of rejected. The result reproduces
    /// expectation values on product states with the fixed bits, not the spectrum.
    pub fn project_fixed(&self, fixed: &BTreeMap<usize, bool>) -> Result<PauliSum> {
        self.contract(fixed, false)
    }

    fn contract(&self, fixed: &BTreeMap<usize, bool>, strict: bool) -> Result<PauliSum> {
        if let Some(&q) = fixed.keys().find(|&&q| q >= self.n_qubits) {
            return Err(Error::dim(format!("fixed qubit {q} out of range")));
        }
        let removed: Vec<usize> = fixed.keys().copied().collect();
        let mut out = PauliSum::zero(self.n_qubits - removed.len());
        'terms: for (w, c) in &self.terms {
            let mut sign = 1.0;
            for (&q, &bit) in fixed {
                match w.letter(q) {
                    Letter::I => {}
                    Letter::Z => {
                        if bit {
                            sign = -sign;
                        }
                    }
                    l => {
                        if strict {
                            return Err(Error::Contraction(format!(
                                "term {w} has {l:?} on fixed qubit {q}"
                            )));
                        }
                        continue 'terms;
                    }
                }
            }
            out.add_term(w.drop_qubits(&removed), c * sign)?;
        }
        Ok(out)
    }

    /// Place the sum on `n_qubits` through `map[old] = new`.
    pub fn remap(&self, n_qubits: usize, map: &[usize]) -> Result<PauliSum> {
        let mut out = PauliSum::zero(n_qubits);
        for (w, c) in &self.terms {
            out.add_term(w.remap(n_qubits, map)?, *c)?;
        }
        Ok(out)
    }

    pub fn dense_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.n_qubits > DENSE_MAX_QUBITS {
            return Err(Error::Resource(format!(
                "dense expansion of {} qubits exceeds the {DENSE_MAX_QUBITS}-qubit cap",
                self.n_qubits
            )));
        }
        let dim = 1usize << self.n_qubits;
        let mut m = DMatrix::zeros(dim, dim);
        for (w, c) in &self.terms {
            for b in 0..dim as u64 {
                let (row, ph) = w.apply_to_basis(b);
                m[(row as usize, b as usize)] += c * ph.to_complex();
            }
        }
        Ok(m)
    }

    pub fn to_file(&self) -> PauliSumFile {
        PauliSumFile {
            n_qubits: self.n_qubits,
            unit: None,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| PauliTermRecord {
                    pauli: w.to_string(),
                    coeff: [c.re, c.im],
                })
                .collect(),
        }
    }

    pub fn from_file(file: &PauliSumFile) -> Result<Self> {
        let mut s = PauliSum::zero(file.n_qubits);
        for (i, t) in file.terms.iter().enumerate() {
            let w: PauliWord = t.pauli.parse().map_err(|e| Error::parse(format!("terms[{i}]"), e))?;
            if w.n_qubits() != file.n_qubits {
                return Err(Error::validation(
                    format!("terms[{i}]"),
                    format!(
                        "pauli {:?} has {} letters, expected {}",
                        t.pauli,
                        w.n_qubits(),
                        file.n_qubits
                    ),
                ));
            }
            s.add_term(w, Complex64::new(t.coeff[0], t.coeff[1]))?;
        }
        Ok(s)
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·{w}", c.re)?;
            } else {
                write!(f, "({}{:+}i)·{w}", c.re, c.im)?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliSum[{}]({self})", self.n_qubits)
    }
}

/// `ab − ba`; an empty result means the sums commute.
pub fn sum_commutator(a: &PauliSum, b: &PauliSum) -> Result<PauliSum> {
    a.commutator(b)
}

/// On-disk form of a Pauli sum.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PauliSumFile {
    pub n_qubits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    pub terms: Vec<PauliTermRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PauliTermRecord {
    pub pauli: String,
    pub coeff: [f64; 2],
}
