//! From input files to operators on the working qubit register.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{
    screen_amplitudes, translation_operator, transqse_cluster, AmplitudeTable,
    FermionHamiltonianData, OrbitalBasis, OrbitalTable,
};
use crate::pauli::PauliSum;
use crate::symmetry::{taper, verify_symmetry, SymmetryOperator, TaperingMap};
use crate::variational::{AnsatzSpec, Generator, TaylorOrder, TransQseProblem};

use super::io::{SymmetryRole, SymmetrySpec};

/// Tolerance for the symbolic `[H, Λ] = 0` check.
pub const COMMUTATOR_TOL: f64 = 1e-9;

/// Operator and bookkeeping on the register the circuits run on.
#[derive(Clone, Debug)]
pub struct PreparedProblem {
    pub hamiltonian: PauliSum,
    pub tapering: Option<TaperingMap>,
    /// Symmetries left on the working register, used for post-selection.
    pub symmetries: Vec<SymmetryOperator>,
    /// Reference occupation on the working register.
    pub reference: u64,
}

/// Symmetry operators split by role.
///
/// Signs come from `sector` (by position) first, then the file, then the reference.
pub fn resolve_symmetries(
    specs: &[SymmetrySpec],
    n_qubits: usize,
    reference: Option<u64>,
    sector: &[i8],
) -> Result<(Vec<SymmetryOperator>, Vec<SymmetryOperator>)> {
    if !sector.is_empty() && sector.len() != specs.len() {
        return Err(Error::validation(
            "sector",
            format!("{} signs for {} symmetries", sector.len(), specs.len()),
        ));
    }
    let mut tapered = Vec::new();
    let mut verified = Vec::new();
    for (i, s) in specs.iter().enumerate() {
        let loc = format!("symmetries[{i}]");
        let word: crate::pauli::PauliWord = s
            .pauli
            .parse()
            .map_err(|e: Error| Error::validation(&loc, e.to_string()))?;
        if word.n_qubits() != n_qubits {
            return Err(Error::validation(
                &loc,
                format!("{}-qubit word on a {n_qubits}-qubit register", word.n_qubits()),
            ));
        }
        let sign = match (sector.get(i), s.sign, reference) {
            (Some(&v), _, _) | (None, Some(v), _) => v,
            (None, None, Some(r)) => word.diagonal_eigenvalue(r).ok_or_else(|| {
                Error::validation(&loc, "non-diagonal symmetry needs an explicit sign")
            })?,
            (None, None, None) => {
                return Err(Error::validation(&loc, "no sign and no reference occupation"))
            }
        };
        let op = SymmetryOperator::new(word, sign).map_err(|e| Error::validation(&loc, e.to_string()))?;
        match s.role {
            SymmetryRole::Taper => tapered.push(op),
            SymmetryRole::Verify => verified.push(op),
        }
    }
    Ok((tapered, verified))
}

/// Taper `h` with the taper-role symmetries and carry the rest along.
pub fn prepare_qubit_problem(
    h: &PauliSum,
    specs: &[SymmetrySpec],
    reference: Option<u64>,
    sector: &[i8],
) -> Result<PreparedProblem> {
    let (tap, ver) = resolve_symmetries(specs, h.n_qubits(), reference, sector)?;
    for s in &ver {
        if !verify_symmetry(h, s)? {
            return Err(Error::Symmetry(format!("{s} does not commute with the Hamiltonian")));
        }
    }
    if tap.is_empty() {
        return Ok(PreparedProblem {
            hamiltonian: h.clone(),
            tapering: None,
            symmetries: ver,
            reference: reference.unwrap_or(0),
        });
    }
    let (tapered, map) = taper(h, &tap)?;
    let reference = match reference {
        Some(r) => map.taper_state(r)?,
        None => 0,
    };
    let mut symmetries = Vec::new();
    for s in &ver {
        if let Some(t) = map.taper_symmetry(s)? {
            symmetries.push(t);
        }
    }
    Ok(PreparedProblem {
        hamiltonian: tapered,
        tapering: Some(map),
        symmetries,
        reference,
    })
}

/// Hermitian `G` with `exp(T − T†) = exp(−i G)` for an anti-Hermitian fermionic generator.
fn hermitian_generator(anti: &crate::fermion::FermionOperator, n_modes: usize) -> Result<PauliSum> {
    Ok(anti
        .jordan_wigner(n_modes)?
        .scale(Complex64::new(0.0, 1.0))
        .chop_imaginary(1e-12))
}

fn generators_from(op: &PauliSum, param: usize) -> Result<Vec<Generator>> {
    Ok(op
        .real_terms(1e-10)?
        .into_iter()
        .filter(|(w, _)| !w.is_identity())
        .map(|(word, scale)| Generator { word, param, scale })
        .collect())
}

/// Trotterized UCC ansatz from screened amplitudes: one parameter per surviving
/// excitation, initialised to its amplitude.
pub fn ansatz_from_amplitudes(
    table: &AmplitudeTable,
    orbitals: &OrbitalTable,
    ratio: f64,
    tapering: Option<&TaperingMap>,
    reference: u64,
) -> Result<(AnsatzSpec, Vec<f64>)> {
    let kept = screen_amplitudes(table, ratio);
    let n_modes = orbitals.len();
    let mut gens = Vec::new();
    let mut theta0 = Vec::new();
    for (k, row) in kept.rows.iter().enumerate() {
        let anti = row
            .excitation
            .generator(orbitals, Complex64::new(1.0, 0.0))
            .map_err(|e| Error::validation(format!("amplitudes: {}", row.excitation), e.to_string()))?;
        let mut g = hermitian_generator(&anti, n_modes)?;
        if let Some(map) = tapering {
            g = map.taper_operator(&g)?;
        }
        gens.extend(generators_from(&g, k)?);
        theta0.push(row.t.re);
    }
    let n = tapering.map(|m| m.n_tapered()).unwrap_or(n_modes);
    Ok((AnsatzSpec::new(n, reference, gens)?, theta0))
}

/// Everything the translational subspace cost needs, plus the contraction bookkeeping.
#[derive(Clone, Debug)]
pub struct TransQseSetup {
    pub problem: TransQseProblem,
    pub symmetries: Vec<SymmetryOperator>,
    /// Modes touched by the localized cluster; the others stay at the reference.
    pub active: Vec<usize>,
    pub fixed: BTreeMap<usize, bool>,
    pub tapering: Option<TaperingMap>,
    /// Number of terms in `[H, Λ]` before contraction (zero for a valid fixture).
    pub commutator_terms: usize,
}

/// Build `H`, `HΛ`, `Λ` and the localized-cluster ansatz for a two-cell chain.
///
/// Symmetry specs act on the active register (the cluster's support, in ascending mode order).
pub fn prepare_transqse(
    data: &FermionHamiltonianData,
    specs: &[SymmetrySpec],
    reference: u64,
    sector: &[i8],
    order: TaylorOrder,
) -> Result<TransQseSetup> {
    if data.basis != OrbitalBasis::RealSpace {
        return Err(Error::input(
            "the translational subspace needs a real-space (localized) orbital basis",
        ));
    }
    let n = data.n_modes();
    let mpc = n / 2;
    let lambda = translation_operator(2, mpc)?;
    let h = data.to_qubit_operator()?;
    let comm = h.commutator(&lambda)?;
    let commutator_terms = comm.terms().filter(|(_, c)| c.norm() > COMMUTATOR_TOL).count();
    if commutator_terms > 0 {
        return Err(Error::Symmetry(format!(
            "Hamiltonian is not translation invariant ([H, Λ] has {commutator_terms} terms)"
        )));
    }
    let h_lambda = h.mul(&lambda)?.chop_imaginary(1e-12);

    let cluster = transqse_cluster(1.0, 2, mpc)?;
    let g = hermitian_generator(&cluster.localized, n)?;
    let mut active: Vec<usize> = g.words().flat_map(|w| w.support()).collect();
    active.sort_unstable();
    active.dedup();
    let fixed: BTreeMap<usize, bool> = (0..n)
        .filter(|q| !active.contains(q))
        .map(|q| (q, reference >> q & 1 == 1))
        .collect();
    let h_a = h.project_fixed(&fixed)?;
    let hl_a = h_lambda.project_fixed(&fixed)?;
    let l_a = lambda.project_fixed(&fixed)?;
    let g_a = g.restrict_support(&fixed)?;
    let ref_a = active
        .iter()
        .enumerate()
        .filter(|(_, &q)| reference >> q & 1 == 1)
        .fold(0u64, |acc, (i, _)| acc | 1 << i);

    let (tap, ver) = resolve_symmetries(specs, active.len(), Some(ref_a), sector)?;
    for s in &ver {
        for op in [&h_a, &hl_a, &l_a] {
            if !verify_symmetry(op, s)? {
                return Err(Error::Symmetry(format!(
                    "{s} does not commute with the contracted operators"
                )));
            }
        }
    }
    let (ops, g_w, map, reference_w, symmetries) = if tap.is_empty() {
        ([h_a, hl_a, l_a], g_a, None, ref_a, ver)
    } else {
        let (h_t, map) = taper(&h_a, &tap)?;
        let hl_t = map.taper_operator(&hl_a)?;
        let l_t = map.taper_operator(&l_a)?;
        let g_t = map.taper_operator(&g_a)?;
        let r = map.taper_state(ref_a)?;
        let mut syms = Vec::new();
        for s in &ver {
            if let Some(t) = map.taper_symmetry(s)? {
                syms.push(t);
            }
        }
        ([h_t, hl_t, l_t], g_t, Some(map), r, syms)
    };
    let [h_w, hl_w, l_w] = ops;
    let ansatz = AnsatzSpec::new(h_w.n_qubits(), reference_w, generators_from(&g_w, 0)?)?;
    Ok(TransQseSetup {
        problem: TransQseProblem {
            h: h_w,
            h_lambda: hl_w,
            lambda_op: l_w,
            ansatz,
            order,
        },
        symmetries,
        active,
        fixed,
        tapering: map,
        commutator_terms,
    })
}
