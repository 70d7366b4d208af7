//! Clifford gates acting on Pauli words by conjugation, and the symplectic
//! elimination that maps a commuting set onto single-qubit `Z`s.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Letter, Phase, PhasedWord, PauliWord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "lowercase")]
pub enum CliffordGate {
    H { qubit: usize },
    S { qubit: usize },
    X { qubit: usize },
    Cx { control: usize, target: usize },
}

impl CliffordGate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            CliffordGate::H { qubit } | CliffordGate::S { qubit } | CliffordGate::X { qubit } => {
                vec![qubit]
            }
            CliffordGate::Cx { control, target } => vec![control, target],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliffordGate::H { .. } => "h",
            CliffordGate::S { .. } => "s",
            CliffordGate::X { .. } => "x",
            CliffordGate::Cx { .. } => "cx",
        }
    }

    fn single_image(&self, letter: Letter) -> (Phase, Letter) {
        use Letter::*;
        match (self, letter) {
            (_, I) => (Phase::ONE, I),
            (CliffordGate::H { .. }, X) => (Phase::ONE, Z),
            (CliffordGate::H { .. }, Z) => (Phase::ONE, X),
            (CliffordGate::H { .. }, Y) => (Phase::MINUS_ONE, Y),
            (CliffordGate::S { .. }, X) => (Phase::ONE, Y),
            (CliffordGate::S { .. }, Y) => (Phase::MINUS_ONE, X),
            (CliffordGate::S { .. }, Z) => (Phase::ONE, Z),
            (CliffordGate::X { .. }, X) => (Phase::ONE, X),
            (CliffordGate::X { .. }, l) => (Phase::MINUS_ONE, l),
            (CliffordGate::Cx { .. }, _) => unreachable!("two-qubit gate"),
        }
    }

    /// `U · pw · U†`.
    pub fn conjugate(&self, pw: &PhasedWord) -> Result<PhasedWord> {
        let n = pw.word.n_qubits();
        for q in self.qubits() {
            if q >= n {
                return Err(Error::dim(format!("gate on qubit {q} of a {n}-qubit word")));
            }
        }
        match *self {
            CliffordGate::H { qubit } | CliffordGate::S { qubit } | CliffordGate::X { qubit } => {
                let (ph, l) = self.single_image(pw.word.letter(qubit));
                Ok(PhasedWord::new(
                    pw.phase * ph,
                    pw.word.clone().with_letter(qubit, l),
                ))
            }
            CliffordGate::Cx { control, target } => {
                let lc = pw.word.letter(control);
                let lt = pw.word.letter(target);
                let rest = PhasedWord::new(
                    pw.phase,
                    pw.word
                        .clone()
                        .with_letter(control, Letter::I)
                        .with_letter(target, Letter::I),
                );
                let img_c = match lc {
                    Letter::I => vec![],
                    Letter::X => vec![(control, Letter::X), (target, Letter::X)],
                    Letter::Y => vec![(control, Letter::Y), (target, Letter::X)],
                    Letter::Z => vec![(control, Letter::Z)],
                };
                let img_t = match lt {
                    Letter::I => vec![],
                    Letter::X => vec![(target, Letter::X)],
                    Letter::Y => vec![(control, Letter::Z), (target, Letter::Y)],
                    Letter::Z => vec![(control, Letter::Z), (target, Letter::Z)],
                };
                let a = PhasedWord::from(PauliWord::from_letters(n, &img_c)?);
                let b = PhasedWord::from(PauliWord::from_letters(n, &img_t)?);
                rest.mul(&a)?.mul(&b)
            }
        }
    }
}

impl fmt::Display for CliffordGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CliffordGate::H { qubit } => write!(f, "h q{qubit}"),
            CliffordGate::S { qubit } => write!(f, "s q{qubit}"),
            CliffordGate::X { qubit } => write!(f, "x q{qubit}"),
            CliffordGate::Cx { control, target } => write!(f, "cx q{control} q{target}"),
        }
    }
}

/// `C · pw · C†` for the circuit `C` whose gates run in slice order.
pub fn conjugate_through(gates: &[CliffordGate], pw: &PhasedWord) -> Result<PhasedWord> {
    let mut cur = pw.clone();
    for g in gates {
        cur = g.conjugate(&cur)?;
    }
    Ok(cur)
}

/// Which candidate qubit becomes the pivot when several qualify.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    Lowest,
    Highest,
}

impl PivotRule {
    fn pick(self, candidates: &[usize]) -> usize {
        match self {
            PivotRule::Lowest => *candidates.iter().min().expect("nonempty"),
            PivotRule::Highest => *candidates.iter().max().expect("nonempty"),
        }
    }
}

/// Clifford circuit mapping an independent generating set onto `±Z_pivot`.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagonalization {
    pub gates: Vec<CliffordGate>,
    /// One pivot qubit per independent generator, in generator order.
    pub pivots: Vec<usize>,
    /// Index into the input list of each independent generator.
    pub generator_indices: Vec<usize>,
}

impl Diagonalization {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Gaussian elimination over the symplectic representation.
///
/// Input words must pairwise commute. Dependent words are skipped; the
/// returned circuit conjugates every word of the generated group to a
/// signed `Z` product.
pub fn diagonalize(words: &[PauliWord], rule: PivotRule) -> Result<Diagonalization> {
    let Some(n) = words.first().map(|w| w.n_qubits()) else {
        return Ok(Diagonalization {
            gates: vec![],
            pivots: vec![],
            generator_indices: vec![],
        });
    };
    let mut gens: Vec<PauliWord> = Vec::with_capacity(words.len());
    for w in words {
        if w.n_qubits() != n {
            return Err(Error::dim("words in a commuting set differ in size"));
        }
        gens.push(w.clone());
    }
    for i in 0..gens.len() {
        for j in i + 1..gens.len() {
            if !gens[i].commutes(&gens[j])? {
                return Err(Error::Internal(format!(
                    "cannot diagonalize non-commuting words {} and {}",
                    gens[i], gens[j]
                )));
            }
        }
    }

    let mut gates: Vec<CliffordGate> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let mut generator_indices = Vec::new();

    for i in 0..gens.len() {
        let mut g = gens[i].clone();
        for &p in &pivots {
            match g.letter(p) {
                Letter::I => {}
                Letter::Z => g.set(p, Letter::I),
                _ => {
                    return Err(Error::Internal(format!(
                        "generator {} does not commute with an earlier pivot",
                        words[i]
                    )))
                }
            }
        }
        if g.is_identity() {
            continue;
        }
        let mut round: Vec<CliffordGate> = Vec::new();
        let push = |gate: CliffordGate, g: &mut PauliWord, round: &mut Vec<CliffordGate>| {
            *g = gate
                .conjugate(&PhasedWord::from(g.clone()))
                .expect("in range")
                .word;
            round.push(gate);
        };

        let xs = g.x_support();
        let pivot = if !xs.is_empty() {
            let q = rule.pick(&xs);
            if g.letter(q) == Letter::Y {
                push(CliffordGate::S { qubit: q }, &mut g, &mut round);
            }
            for &r in xs.iter().filter(|&&r| r != q) {
                if g.letter(r) == Letter::Y {
                    push(CliffordGate::S { qubit: r }, &mut g, &mut round);
                }
                push(CliffordGate::Cx { control: q, target: r }, &mut g, &mut round);
            }
            push(CliffordGate::H { qubit: q }, &mut g, &mut round);
            q
        } else {
            rule.pick(&g.z_support())
        };
        for s in g.z_support().into_iter().filter(|&s| s != pivot) {
            push(CliffordGate::Cx { control: s, target: pivot }, &mut g, &mut round);
        }
        debug_assert_eq!(g.support(), vec![pivot]);

        for later in gens.iter_mut().skip(i + 1) {
            for gate in &round {
                *later = gate.conjugate(&PhasedWord::from(later.clone()))?.word;
            }
        }
        gates.extend(round);
        pivots.push(pivot);
        generator_indices.push(i);
    }
    Ok(Diagonalization {
        gates,
        pivots,
        generator_indices,
    })
}

/// Sign and `Z`-support of `C·w·C†`, failing unless it is a real-signed `Z` product.
pub fn diagonal_image(gates: &[CliffordGate], word: &PauliWord) -> Result<(i8, Vec<usize>)> {
    let img = conjugate_through(gates, &PhasedWord::from(word.clone()))?;
    if !img.word.is_diagonal() {
        return Err(Error::Internal(format!(
            "{word} is not diagonalized by the circuit (image {})",
            img.word
        )));
    }
    let sign = img
        .phase
        .real_sign()
        .ok_or_else(|| Error::Internal(format!("{word} maps to a non-Hermitian image")))?;
    Ok((sign, img.word.z_support()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> PauliWord {
        s.parse().unwrap()
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let h = CliffordGate::H { qubit: 0 };
        let img = h.conjugate(&w("X").into()).unwrap();
        assert_eq!(img.word, w("Z"));
        let img = h.conjugate(&w("Y").into()).unwrap();
        assert_eq!((img.phase, img.word), (Phase::MINUS_ONE, w("Y")));
    }

    #[test]
    fn cx_propagates_x_forward_and_z_backward() {
        let cx = CliffordGate::Cx { control: 0, target: 1 };
        assert_eq!(cx.conjugate(&w("XI").into()).unwrap().word, w("XX"));
        assert_eq!(cx.conjugate(&w("IZ").into()).unwrap().word, w("ZZ"));
        assert_eq!(cx.conjugate(&w("ZI").into()).unwrap().word, w("ZI"));
        assert_eq!(cx.conjugate(&w("IX").into()).unwrap().word, w("IX"));
    }

    #[test]
    fn diagonal_set_needs_no_gates() {
        let d = diagonalize(&[w("ZI"), w("IZ"), w("ZZ")], PivotRule::Lowest).unwrap();
        assert!(d.gates.is_empty());
        assert_eq!(d.rank(), 2);
    }

    #[test]
    fn single_x_becomes_z() {
        let d = diagonalize(&[w("X")], PivotRule::Lowest).unwrap();
        assert_eq!(d.gates, vec![CliffordGate::H { qubit: 0 }]);
        assert_eq!(diagonal_image(&d.gates, &w("X")).unwrap(), (1, vec![0]));
    }

    #[test]
    fn bell_pair_set() {
        let set = [w("XX"), w("YY"), w("ZZ")];
        let d = diagonalize(&set, PivotRule::Lowest).unwrap();
        assert_eq!(d.rank(), 2);
        for word in &set {
            diagonal_image(&d.gates, word).unwrap();
        }
    }

    #[test]
    fn non_commuting_input_is_internal_error() {
        assert!(matches!(
            diagonalize(&[w("X"), w("Z")], PivotRule::Lowest),
            Err(Error::Internal(_))
        ));
    }
}
