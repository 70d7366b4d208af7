//! Randomized invariants checked against dense-matrix oracles.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbcq::clifford::conjugate_through;
use pbcq::fermion::{
    conserves_momentum, generate_uccsd_pbc, jordan_wigner, translation_operator, FermionOperator,
    KPointMesh, LadderOp, Spin, SpinOrbital,
};
use pbcq::measurement::{
    partition_commuting, Distribution, MeasurementPlan, ParityTarget, ShotTable, Strategy as Grouping,
};
use pbcq::mitigation::{pmsv_postselect, spam_correct, ConfusionModel};
use pbcq::pauli::{PauliSum, PauliWord, PhasedWord, Phase};
use pbcq::simulator::{exact_expectation, run_statevector, sample, Angle, Circuit, NoiseModel, StateVector};
use pbcq::symmetry::{taper, SymmetryOperator};
use pbcq::variational::{parameter_shift_gradient, rotosolve, AnsatzSpec, Evaluation, RotosolveOptions};

type M = DMatrix<Complex64>;

const C1: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn close(a: &M, b: &M, tol: f64) -> bool {
    a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() < tol)
}

fn word(n: usize) -> impl Strategy<Value = PauliWord> {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    (0..=full, 0..=full).prop_map(move |(x, z)| PauliWord::from_masks(n, x, z))
}

fn sized_word() -> impl Strategy<Value = PauliWord> {
    (1usize..=6).prop_flat_map(word)
}

fn real_sum(n: usize, max_terms: usize) -> impl Strategy<Value = PauliSum> {
    prop::collection::vec((word(n), -2.0f64..2.0), 1..=max_terms).prop_map(move |terms| {
        let mut s = PauliSum::zero(n);
        for (w, c) in terms {
            s.add_term(w, Complex64::new(c, 0.0)).unwrap();
        }
        s
    })
}

fn dense_phased(p: &PhasedWord) -> M {
    PauliSum::from_phased(p, C1).dense_matrix().unwrap()
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
    let amps: Vec<Complex64> = (0..1usize << n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn word_product_is_associative_and_phase_exact(
        (p, q, r) in (1usize..=6).prop_flat_map(|n| (word(n), word(n), word(n)))
    ) {
        let (p, q, r) = (PhasedWord::new(Phase::from_exponent(0), p), PhasedWord::new(Phase::from_exponent(1), q), PhasedWord::new(Phase::from_exponent(0), r));
        let left = p.mul(&q).unwrap().mul(&r).unwrap();
        let right = p.mul(&q.mul(&r).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        let oracle = dense_phased(&p) * dense_phased(&q) * dense_phased(&r);
        prop_assert!(close(&dense_phased(&left), &oracle, 1e-12));
    }

    #[test]
    fn commutation_matches_dense_commutator(
        (a, b) in (1usize..=6).prop_flat_map(|n| (word(n), word(n)))
    ) {
        let (da, db) = (a.dense_matrix().unwrap(), b.dense_matrix().unwrap());
        let dense = close(&(&da * &db), &(&db * &da), 1e-12);
        prop_assert_eq!(a.commutes(&b).unwrap(), dense);
    }

    #[test]
    fn sum_addition_is_dense_addition(
        (a, b) in (1usize..=4).prop_flat_map(|n| (real_sum(n, 6), real_sum(n, 6)))
    ) {
        let s = a.add(&b).unwrap();
        let oracle = a.dense_matrix().unwrap() + b.dense_matrix().unwrap();
        prop_assert!(close(&s.dense_matrix().unwrap(), &oracle, 1e-12));
        // cancellation prunes to an empty sum
        prop_assert!(a.sub(&a).unwrap().is_empty());
    }

    #[test]
    fn restrict_support_preserves_expectations(
        terms in prop::collection::vec((word(2), 0u8..4, 0u8..4, -1.0f64..1.0), 1..8),
        fixed_bits in (any::<bool>(), any::<bool>()),
        seed in any::<u64>(),
    ) {
        // four qubits; qubits 1 and 3 are fixed and carry only I/Z
        let mut op = PauliSum::zero(4);
        for (w, l1, l3, c) in terms {
            let diag = |l: u8| if l.is_multiple_of(2) { pbcq::pauli::Letter::I } else { pbcq::pauli::Letter::Z };
            let full = PauliWord::identity(4)
                .with_letter(0, w.letter(0))
                .with_letter(2, w.letter(1))
                .with_letter(1, diag(l1))
                .with_letter(3, diag(l3));
            op.add_term(full, Complex64::new(c, 0.0)).unwrap();
        }
        let fixed: BTreeMap<usize, bool> = [(1, fixed_bits.0), (3, fixed_bits.1)].into();
        let small = op.restrict_support(&fixed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_state(2, &mut rng);
        // embed phi on qubits 0,2 with the fixed bits set
        let mut amps = vec![Complex64::new(0.0, 0.0); 16];
        for (b, a) in phi.amplitudes().iter().enumerate() {
            let full = (b & 1) | ((b >> 1 & 1) << 2) | (fixed_bits.0 as usize) << 1 | (fixed_bits.1 as usize) << 3;
            amps[full] = *a;
        }
        let psi = StateVector::from_amplitudes(amps).unwrap();
        let e_full = exact_expectation(&psi, &op).unwrap();
        let e_small = exact_expectation(&phi, &small).unwrap();
        prop_assert!((e_full - e_small).abs() < 1e-12);
    }
}

#[test]
fn commutation_exhaustive_two_qubits() {
    for x1 in 0..4u64 {
        for z1 in 0..4u64 {
            for x2 in 0..4u64 {
                for z2 in 0..4u64 {
                    let a = PauliWord::from_masks(2, x1, z1);
                    let b = PauliWord::from_masks(2, x2, z2);
                    let (da, db) = (a.dense_matrix().unwrap(), b.dense_matrix().unwrap());
                    assert_eq!(a.commutes(&b).unwrap(), close(&(&da * &db), &(&db * &da), 1e-12), "{a} {b}");
                }
            }
        }
    }
}

// ---- fermion encodings ----

fn ladder_dense(n: usize, p: usize, create: bool) -> M {
    let op = if create { LadderOp::create(p) } else { LadderOp::annihilate(p) };
    jordan_wigner(&FermionOperator::term(vec![op], C1), n).unwrap().dense_matrix().unwrap()
}

#[test]
fn jordan_wigner_satisfies_anticommutation() {
    for n in 1..=5 {
        let dim = 1 << n;
        for p in 0..n {
            for q in 0..n {
                let a = ladder_dense(n, p, false);
                let ad = ladder_dense(n, q, true);
                let anti = &a * &ad + &ad * &a;
                let expect = if p == q { M::identity(dim, dim) } else { M::zeros(dim, dim) };
                assert!(close(&anti, &expect, 1e-12), "n={n} p={p} q={q}");
                let aa = ladder_dense(n, q, false);
                assert!(close(&(&a * &aa + &aa * &a), &M::zeros(dim, dim), 1e-12));
            }
        }
    }
}

#[test]
fn number_parity_is_the_z_string() {
    for n in 1..=5 {
        let mut parity = FermionOperator::identity(C1);
        let mut number = FermionOperator::zero();
        for p in 0..n {
            let one_minus_2n = FermionOperator::identity(C1).sub(&FermionOperator::number(p).scale(Complex64::new(2.0, 0.0)));
            parity = parity.mul(&one_minus_2n);
            number = number.add(&FermionOperator::number(p));
        }
        let jw = jordan_wigner(&parity, n).unwrap();
        let z_all = PauliSum::from_word(PauliWord::z_product(n, &(0..n).collect::<Vec<_>>()).unwrap(), C1);
        assert!(close(&jw.dense_matrix().unwrap(), &z_all.dense_matrix().unwrap(), 1e-12));
        let n_op = jordan_wigner(&number, n).unwrap();
        for w in PauliSum::from_real_strs(&[(&"Z".repeat(n), 1.0)]).unwrap().words() {
            let zw = PauliSum::from_word(w.clone(), C1);
            assert!(n_op.commutator(&zw).unwrap().is_empty());
        }
        for q in 0..n {
            let zq = PauliSum::from_word(PauliWord::z_product(n, &[q]).unwrap(), C1);
            assert!(n_op.commutator(&zq).unwrap().is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_excitations_conserve_momentum(
        l1 in 1u32..4,
        l2 in 1u32..3,
        occ in prop::collection::vec((0i32..3, 0i32..2, 0u32..3, any::<bool>()), 1..4),
        virt in prop::collection::vec((0i32..3, 0i32..2, 3u32..6, any::<bool>()), 1..4),
    ) {
        let mesh = KPointMesh::new(l1, l2, 1).unwrap();
        let orb = |(k1, k2, p, up): (i32, i32, u32, bool)| {
            SpinOrbital::new([k1 % l1 as i32, k2 % l2 as i32, 0], p, if up { Spin::Up } else { Spin::Down })
        };
        let mut o: Vec<SpinOrbital> = occ.into_iter().map(orb).collect();
        let mut v: Vec<SpinOrbital> = virt.into_iter().map(orb).collect();
        o.sort();
        o.dedup();
        v.sort();
        v.dedup();
        for ex in generate_uccsd_pbc(&o, &v, &mesh).unwrap() {
            prop_assert!(conserves_momentum(&ex.factors(), &mesh), "{}", ex);
        }
    }
}

#[test]
fn translation_is_a_hermitian_involution() {
    for mpc in [2, 4] {
        let l = translation_operator(2, mpc).unwrap();
        assert!(l.is_hermitian(1e-12));
        for (_, c) in l.terms() {
            assert!(c.im.abs() < 1e-12);
        }
        let n = 2 * mpc;
        let dim = 1 << n;
        let d = l.dense_matrix().unwrap();
        assert!(close(&(&d * &d), &M::identity(dim, dim), 1e-12), "mpc={mpc}");
    }
}

#[test]
fn chain_h_lambda_is_hermitian() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/chain8_fermion.json");
    let h = pbcq::workbench::io::load_hamiltonian(&path).unwrap().qubit_operator().unwrap();
    let l = translation_operator(2, 4).unwrap();
    assert!(h.commutator(&l).unwrap().terms().all(|(_, c)| c.norm() < 1e-9));
    let hl = h.mul(&l).unwrap().chop_imaginary(1e-9);
    assert!(hl.is_hermitian(1e-9));
    for (w, c) in hl.terms() {
        assert!(c.im.abs() < 1e-9, "{w}: {c}");
    }
}

// ---- tapering ----

fn z_syms() -> Vec<SymmetryOperator> {
    vec![SymmetryOperator::parse("ZIZI", 1).unwrap(), SymmetryOperator::parse("IZIZ", 1).unwrap()]
}

fn symmetric_sum(n: usize, words: Vec<(PauliWord, f64)>, syms: &[SymmetryOperator]) -> PauliSum {
    let mut s = PauliSum::zero(n);
    for (w, c) in words {
        if syms.iter().all(|sym| w.commutes(&sym.word).unwrap()) {
            s.add_term(w, Complex64::new(c, 0.0)).unwrap();
        }
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tapered_images_of_commuting_operators_commute(
        a in prop::collection::vec((word(4), -1.0f64..1.0), 1..10),
        signs in (prop::bool::ANY, prop::bool::ANY),
    ) {
        let mut syms = z_syms();
        syms[0].sign = if signs.0 { 1 } else { -1 };
        syms[1].sign = if signs.1 { 1 } else { -1 };
        let a = symmetric_sum(4, a, &syms);
        prop_assume!(!a.is_empty());
        // a polynomial in a plus a symmetry word commutes with a
        let b = a
            .mul(&a)
            .unwrap()
            .add(&a.scale(Complex64::new(0.5, 0.0)))
            .unwrap()
            .add(&PauliSum::from_real_strs(&[("ZIZI", 0.3)]).unwrap())
            .unwrap();
        prop_assert!(a.commutator(&b).unwrap().is_empty());
        let (ta, map) = taper(&a, &syms).unwrap();
        let tb = map.taper_operator(&b).unwrap();
        prop_assert!(ta.commutator(&tb).unwrap().terms().all(|(_, c)| c.norm() < 1e-10));
    }

    #[test]
    fn tapered_expectations_match_full_register(
        h in prop::collection::vec((word(4), -1.0f64..1.0), 1..12),
        g in word(4),
        reference in 0u64..16,
        theta in -3.0f64..3.0,
    ) {
        let words = [PauliWord::from_masks(4, 0, 0b0101), PauliWord::from_masks(4, 0, 0b1010)];
        let syms = pbcq::symmetry::sector_from_reference(&words, reference).unwrap();
        prop_assume!(syms.iter().all(|s| g.commutes(&s.word).unwrap()) && !g.is_identity());
        let h = symmetric_sum(4, h, &syms);
        prop_assume!(!h.is_empty());
        let mut full = Circuit::basis_state(4, reference);
        full.pauli_exp(g.clone(), Angle::Const(theta));
        let e_full = exact_expectation(&run_statevector(&full, &[]).unwrap(), &h).unwrap();

        let (th, map) = taper(&h, &syms).unwrap();
        let tg = map.taper_operator(&PauliSum::from_word(g, C1)).unwrap();
        let (tw, tc) = tg.terms().next().map(|(w, c)| (w.clone(), *c)).unwrap();
        prop_assert_eq!(tg.len(), 1);
        prop_assert!(tc.im.abs() < 1e-12 && (tc.re.abs() - 1.0).abs() < 1e-12);
        let mut small = Circuit::basis_state(2, pbcq::symmetry::taper_state_prep(reference, &map).unwrap());
        small.pauli_exp(tw, Angle::Const(theta * tc.re));
        let e_small = exact_expectation(&run_statevector(&small, &[]).unwrap(), &th).unwrap();
        prop_assert!((e_full - e_small).abs() < 1e-10, "{} vs {}", e_full, e_small);
    }
}

// ---- measurement ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partitions_are_complete_valid_and_sound(
        words in (1usize..=5).prop_flat_map(|n| prop::collection::vec(word(n), 1..14))
    ) {
        let mut unique: Vec<PauliWord> = Vec::new();
        for w in words {
            if !w.is_identity() && !unique.contains(&w) {
                unique.push(w);
            }
        }
        prop_assume!(!unique.is_empty());
        let general = partition_commuting(&unique, Grouping::General).unwrap();
        let qubitwise = partition_commuting(&unique, Grouping::Qubitwise).unwrap();
        prop_assert!(qubitwise.len() >= general.len());
        for sets in [&general, &qubitwise] {
            let mut all: Vec<PauliWord> = sets.iter().flat_map(|s| s.members.clone()).collect();
            let mut expect = unique.clone();
            all.sort();
            expect.sort();
            prop_assert_eq!(all, expect);
        }
        for s in &general {
            for a in &s.members {
                for b in &s.members {
                    prop_assert!(a.commutes(b).unwrap());
                }
            }
        }
        for s in &qubitwise {
            for a in &s.members {
                for b in &s.members {
                    prop_assert!(a.qubitwise_commutes(b).unwrap());
                }
            }
        }
        let mut h = PauliSum::zero(unique[0].n_qubits());
        for w in &unique {
            h.add_term(w.clone(), C1).unwrap();
        }
        let plan = MeasurementPlan::build(&h, &[], Grouping::General).unwrap();
        for e in &plan.entries {
            for (w, map) in &e.members {
                let img = conjugate_through(&e.circuit, &PhasedWord::new(Phase::from_exponent(0), w.clone())).unwrap();
                prop_assert!(img.word.is_diagonal(), "{} -> {:?}", w, img);
                prop_assert_eq!(img.phase.real_sign(), Some(map.sign));
                prop_assert_eq!(img.word.z_support(), map.bits.clone());
            }
        }
    }
}

#[test]
fn shot_estimates_are_statistically_sound() {
    let h = PauliSum::from_real_strs(&[("II", 0.3), ("ZI", -1.2), ("IZ", 0.9), ("ZZ", 0.3), ("XX", 1.7), ("YY", -0.4)]).unwrap();
    let ansatz = AnsatzSpec::single("YX".parse().unwrap(), 0);
    let plan = MeasurementPlan::build(&h, &[], Grouping::General).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let trials = 1000;
    let mut within = 0;
    for trial in 0..trials {
        let theta = rng.random_range(-3.0..3.0);
        let exact = exact_expectation(&run_statevector(&ansatz.circuit(), &[theta]).unwrap(), &h).unwrap();
        let tables: Vec<ShotTable> = plan
            .entries
            .iter()
            .map(|e| {
                let mut t = sample(&ansatz.circuit().then_measure(&e.circuit), &[theta], 2000, &NoiseModel::noiseless(), trial * 31 + e.circuit_id as u64).unwrap();
                t.circuit_id = e.circuit_id;
                t
            })
            .collect();
        let est = pbcq::measurement::estimate_expectation(&plan, &tables, &h).unwrap();
        if (est.value - exact).abs() <= 5.0 * est.stddev.max(1e-12) {
            within += 1;
        }
    }
    assert!(within * 100 >= 99 * trials, "{within}/{trials}");
}

// ---- mitigation ----

fn table(counts: &[u64; 4]) -> ShotTable {
    let mut t = ShotTable::new(0, 2);
    for (b, &c) in counts.iter().enumerate() {
        t.record(b as u64, c);
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn postselection_is_idempotent_and_bounded(
        counts in prop::array::uniform4(0u64..500),
        sign in prop::bool::ANY,
    ) {
        prop_assume!(counts.iter().sum::<u64>() > 0);
        let t = table(&counts);
        let target = ParityTarget::new(vec![0, 1], if sign { 1 } else { -1 }).unwrap();
        let (once, frac) = pmsv_postselect(&t, std::slice::from_ref(&target));
        let (twice, frac2) = pmsv_postselect(&once, std::slice::from_ref(&target));
        prop_assert_eq!(&once.counts, &twice.counts);
        prop_assert!((0.0..=1.0).contains(&frac));
        if once.total() > 0 {
            prop_assert_eq!(frac2, 0.0);
        }
        let violating = t.counts.iter().any(|(&b, &c)| c > 0 && !target.accepts(b));
        prop_assert_eq!(frac == 0.0, !violating);
    }

    #[test]
    fn spam_correction_returns_a_distribution(
        weights in prop::array::uniform4(0.0f64..1.0),
        flips in prop::collection::vec((0.0f64..0.2, 0.0f64..0.2), 2),
    ) {
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 1e-6);
        let d = Distribution {
            circuit_id: 0,
            n_bits: 2,
            weights: weights.iter().enumerate().map(|(b, w)| (b as u64, w / total)).collect(),
            shots: 1000.0,
        };
        let model = ConfusionModel::from_flips(&flips);
        let c = spam_correct(&d, &model).unwrap();
        prop_assert!((c.total_weight() - 1.0).abs() < 1e-9);
        prop_assert!(c.weights.values().all(|&w| w >= 0.0));
    }
}

// ---- simulator ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pauli_exponential_matches_matrix_exponential(
        w in sized_word(),
        theta in -4.0f64..4.0,
        seed in any::<u64>(),
    ) {
        let n = w.n_qubits();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let psi = random_state(n, &mut rng);
        let mut out = psi.clone();
        out.apply_pauli_exp(&w, theta);
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
        let gen = w.dense_matrix().unwrap() * Complex64::new(0.0, -theta);
        let oracle = gen.exp() * M::from_column_slice(1 << n, 1, psi.amplitudes());
        let got = M::from_column_slice(1 << n, 1, out.amplitudes());
        prop_assert!(close(&got, &oracle, 1e-10));
    }

    #[test]
    fn gates_preserve_norm(ops in prop::collection::vec((0u8..5, 0usize..4, 0usize..4, -3.0f64..3.0), 1..30)) {
        use pbcq::clifford::CliffordGate;
        let mut rng = ChaCha8Rng::seed_from_u64(ops.len() as u64);
        let mut psi = random_state(4, &mut rng);
        for (kind, a, b, t) in ops {
            match kind {
                0 => psi.apply_gate(&CliffordGate::H { qubit: a }),
                1 => psi.apply_gate(&CliffordGate::S { qubit: a }),
                2 => psi.apply_gate(&CliffordGate::X { qubit: a }),
                3 if a != b => psi.apply_gate(&CliffordGate::Cx { control: a, target: b }),
                _ => psi.apply_pauli_exp(&PauliWord::from_masks(4, 1 << a, 1 << b), t),
            }
            prop_assert!((psi.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sampling_is_seed_deterministic(seed in any::<u64>(), theta in -2.0f64..2.0) {
        let c = AnsatzSpec::single("YX".parse().unwrap(), 0).circuit().then_measure(&[]);
        let noise = NoiseModel::default();
        let a = sample(&c, &[theta], 500, &noise, seed).unwrap();
        let b = sample(&c, &[theta], 500, &noise, seed).unwrap();
        prop_assert_eq!(serde_json::to_string(&a.to_file()).unwrap(), serde_json::to_string(&b.to_file()).unwrap());
    }
}

#[test]
fn noiseless_sampling_passes_chi_square() {
    // four nonzero outcomes, three degrees of freedom; 16.266 is the p = 0.001 point
    const CRITICAL: f64 = 16.266;
    let mut c = Circuit::new(2, 2);
    c.pauli_exp("YI".parse().unwrap(), Angle::param(0));
    c.pauli_exp("IY".parse().unwrap(), Angle::param(1));
    let params = [0.4, -0.9];
    let probs = run_statevector(&c, &params).unwrap().probabilities();
    let circuit = c.then_measure(&[]);
    let shots = 100_000u64;
    let seeds = 100;
    let mut pass = 0;
    for seed in 0..seeds {
        let t = sample(&circuit, &params, shots, &NoiseModel::noiseless(), seed).unwrap();
        let chi2: f64 = (0..4u64)
            .map(|b| {
                let expect = probs[b as usize] * shots as f64;
                let got = *t.counts.get(&b).unwrap_or(&0) as f64;
                (got - expect).powi(2) / expect
            })
            .sum();
        if chi2 < CRITICAL {
            pass += 1;
        }
    }
    assert!(pass >= 99, "{pass}/{seeds}");
}

// ---- variational ----

fn exact_cost(h: PauliSum, a: AnsatzSpec) -> impl FnMut(&[f64]) -> pbcq::Result<Evaluation> {
    move |t: &[f64]| {
        let v = exact_expectation(&run_statevector(&a.circuit(), t)?, &h)?;
        Ok(Evaluation { value: v, stddev: 0.0, variants: [Some(v); 4], discard_fraction: 0.0, seed: None })
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shift_rule_matches_finite_difference(
        h in real_sum(2, 6),
        theta in -3.0f64..3.0,
    ) {
        let a = AnsatzSpec::single("YX".parse().unwrap(), 0);
        let mut f = exact_cost(h, a);
        let g = parameter_shift_gradient(&mut f, &[theta]).unwrap()[0];
        let eps = 1e-5;
        let fd = (f(&[theta + eps]).unwrap().value - f(&[theta - eps]).unwrap().value) / (2.0 * eps);
        prop_assert!((g - fd).abs() < 1e-6, "{} vs {}", g, fd);
    }

    #[test]
    fn rotosolve_never_increases_a_sinusoidal_cost(
        h in real_sum(2, 6),
        theta in -3.0f64..3.0,
    ) {
        let a = AnsatzSpec::single("YX".parse().unwrap(), 0);
        let trace = rotosolve(exact_cost(h, a), &[theta], RotosolveOptions { max_sweeps: 3, tol: 0.0, frequency: 2.0 }).unwrap();
        for pair in trace.steps.windows(2) {
            prop_assert!(pair[1].eval.value <= pair[0].eval.value + 1e-10);
        }
    }

    #[test]
    fn yx_state_has_even_parity(theta in -6.0f64..6.0) {
        let psi = run_statevector(&AnsatzSpec::single("YX".parse().unwrap(), 0).circuit(), &[theta]).unwrap();
        let zz = PauliSum::from_real_strs(&[("ZZ", 1.0)]).unwrap();
        prop_assert!((exact_expectation(&psi, &zz).unwrap() - 1.0).abs() < 1e-12);
    }
}
