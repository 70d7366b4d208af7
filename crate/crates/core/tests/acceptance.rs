//! Acceptance suite: one PASS/FAIL line per criterion, with the measured values.
//!
//! Runs without the libtest harness so the lines always reach the terminal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pbcq::measurement::{partition_commuting, Distribution, ParityTarget, ShotTable, Strategy};
use pbcq::mitigation::{pmsv_postselect, spam_correct, ConfusionMode, ConfusionModel, Mitigation};
use pbcq::pauli::{PauliSum, PauliWord};
use pbcq::simulator::{derive_seed, exact_expectation, run_statevector, NoiseModel};
use pbcq::symmetry::{taper, SymmetryOperator};
use pbcq::variational::{
    parameter_shift_gradient, rotosolve, sgd, transqse_combine, AnsatzSpec, Backend, Evaluation,
    RotosolveOptions, SgdOptions, ShotSettings, TaylorOrder, TransQseCost, VqeCost,
};
use pbcq::workbench::config::ExperimentConfig;
use pbcq::workbench::io::{load_hamiltonian, read_json, HamiltonianInput, SymmetryFile};
use pbcq::workbench::pipeline::prepare_transqse;
use pbcq::workbench::reproduce::{reproduce_table, ProbabilityTable, TABLE_SHOTS};
use pbcq::workbench::run::{calibrate, execute};

// ---- pinned tolerances ----
const TABLE_TOL: f64 = 1e-3;
const TABLE_SMALL_SHOTS: u64 = 24_000;
const BINOMIAL_SIGMAS: f64 = 3.0;
const SPECTRUM_TOL: f64 = 1e-10;
const TAPER_CASES: usize = 30;
const SPAM_SHOTS: u64 = 100_000;
const SPAM_SEEDS: u64 = 20;
const SPAM_TV: f64 = 0.01;
const ORDERING_RUNS: u64 = 100;
const ORDERING_MIN_WINS: u64 = 95;
const ROTOSOLVE_TOL: f64 = 1e-9;
const SHIFT_TOL: f64 = 1e-6;
const OPTIMA_TOL: f64 = 1e-3;
const TAYLOR_THETA: f64 = 0.3;
const GRID_TOL: f64 = 1e-8;
const GRID_POINTS: usize = 2_000_001;
const THETA_STAR: f64 = -0.53038;

type M = DMatrix<Complex64>;
type Criterion = (&'static str, Duration, Box<dyn Fn() -> Outcome>);

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn pauli(name: &str) -> PauliSum {
    load_hamiltonian(&data(name)).unwrap().qubit_operator().unwrap()
}

fn yx() -> AnsatzSpec {
    AnsatzSpec::single("YX".parse().unwrap(), 0)
}

fn exact(v: f64) -> Evaluation {
    Evaluation {
        value: v,
        stddev: 0.0,
        variants: [Some(v); 4],
        discard_fraction: 0.0,
        seed: None,
    }
}

fn energy(h: &PauliSum, a: &AnsatzSpec, theta: &[f64]) -> f64 {
    exact_expectation(&run_statevector(&a.circuit(), theta).unwrap(), h).unwrap()
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---- criteria ----

fn probability_table(table: ProbabilityTable) -> Outcome {
    let (published, _) = table.published();
    let theta = table.theta();
    let analytic = theta.cos().powi(2);
    let sv = run_statevector(&yx().circuit(), &[theta]).unwrap().probabilities()[0];
    let big = reproduce_table(table, TABLE_SHOTS, 2021).unwrap();
    let small = reproduce_table(table, TABLE_SMALL_SHOTS, 7).unwrap();
    let sigma = (analytic * (1.0 - analytic) / TABLE_SMALL_SHOTS as f64).sqrt();
    let support = big.two_outcome_support()
        && big.counts.counts.values().sum::<u64>() == TABLE_SHOTS
        && big.counts.counts.get(&0).unwrap_or(&0) + big.counts.counts.get(&3).unwrap_or(&0) == TABLE_SHOTS;
    let pass = (analytic - published).abs() <= TABLE_TOL
        && (sv - analytic).abs() < 1e-12
        && (big.p00() - published).abs() <= TABLE_TOL
        && (small.p00() - analytic).abs() <= BINOMIAL_SIGMAS * sigma
        && support;
    outcome(
        pass,
        format!(
            "θ={theta}: analytic P(00)={analytic:.5}, 1e6 shots {:.5}, published {published}; {} shots {:.5} ({:.2}σ); P(00)+P(11)=1: {support}",
            big.p00(),
            TABLE_SMALL_SHOTS,
            small.p00(),
            (small.p00() - analytic).abs() / sigma
        ),
    )
}

fn partition_counts() -> Outcome {
    let count = |f: &str| {
        let h = pauli(f);
        let words = h.non_identity_words();
        (words.len(), partition_commuting(&words, Strategy::General).unwrap().len())
    };
    let (hc_terms, hc_sets) = count("hchain_pauli.json");
    let (fe_terms, fe_sets) = count("iron_pauli.json");
    outcome(
        hc_terms == 5 && hc_sets == 2 && fe_terms == 4 && fe_sets == 2,
        format!("chain {hc_terms} terms -> {hc_sets} sets; iron {fe_terms} terms -> {fe_sets} sets"),
    )
}

fn hermitian_spectrum(m: &M) -> Vec<f64> {
    let mut e: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

fn tapering_spectrum() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let words = [PauliWord::from_masks(4, 0, 0b0101), PauliWord::from_masks(4, 0, 0b1010)];
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..TAPER_CASES {
        let mut h = PauliSum::zero(4);
        while h.len() < 6 {
            let w = PauliWord::from_masks(4, rng.random_range(0..16), rng.random_range(0..16));
            if words.iter().all(|s| w.commutes(s).unwrap()) {
                h.add_term(w, Complex64::new(rng.random_range(-1.0..1.0), 0.0)).unwrap();
            }
        }
        let dense = h.dense_matrix().unwrap();
        for signs in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
            let syms = [
                SymmetryOperator::new(words[0].clone(), signs.0).unwrap(),
                SymmetryOperator::new(words[1].clone(), signs.1).unwrap(),
            ];
            let sector: Vec<usize> = (0..16u64)
                .filter(|&b| syms.iter().all(|s| s.satisfied_by(b) == Some(true)))
                .map(|b| b as usize)
                .collect();
            let block = M::from_fn(sector.len(), sector.len(), |i, j| dense[(sector[i], sector[j])]);
            let (t, _) = taper(&h, &syms).unwrap();
            let a = hermitian_spectrum(&block);
            let b = hermitian_spectrum(&t.dense_matrix().unwrap());
            if a.len() != b.len() {
                return outcome(false, format!("sector dimension {} vs tapered {}", a.len(), b.len()));
            }
            for (x, y) in a.iter().zip(&b) {
                worst = worst.max((x - y).abs());
            }
            checked += 1;
        }
    }
    outcome(
        worst <= SPECTRUM_TOL,
        format!("{TAPER_CASES} Hamiltonians × 4 sectors ({checked} spectra), max |Δλ| = {worst:.2e}"),
    )
}

fn pmsv_equivalence() -> Outcome {
    let target = ParityTarget::new(vec![0, 1], 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut exact_match = true;
    let mut idempotent = true;
    for _ in 0..200 {
        let mut t = ShotTable::new(0, 2);
        for b in 0..4u64 {
            t.record(b, rng.random_range(0..1000));
        }
        if t.total() == 0 {
            continue;
        }
        let (kept, frac) = pmsv_postselect(&t, std::slice::from_ref(&target));
        // oracle: keep even-parity outcomes, renormalize over the kept mass
        let even: u64 = [0u64, 3].iter().map(|b| t.counts.get(b).copied().unwrap_or(0)).sum();
        for b in 0..4u64 {
            let got = kept.counts.get(&b).copied().unwrap_or(0);
            let want = if b == 0 || b == 3 { t.counts.get(&b).copied().unwrap_or(0) } else { 0 };
            exact_match &= got == want;
            if even > 0 {
                let cond = want as f64 / even as f64;
                exact_match &= (kept.to_distribution().probability(b) - cond).abs() < 1e-15;
            }
        }
        exact_match &= frac == 1.0 - even as f64 / t.total() as f64 || (frac - (1.0 - even as f64 / t.total() as f64)).abs() < 1e-15;
        let (again, frac2) = pmsv_postselect(&kept, std::slice::from_ref(&target));
        idempotent &= again.counts == kept.counts && (kept.total() == 0 || frac2 == 0.0);
    }
    let h = pauli("iron_pauli.json");
    let syms = [SymmetryOperator::parse("ZZ", 1).unwrap()];
    let mut worst_discard: f64 = 0.0;
    for k in 0..10 {
        let s = ShotSettings::new(24_000, NoiseModel::noiseless(), 100 + k);
        let mut cost = VqeCost::new(&h, yx(), &syms, Backend::Shots(s), Mitigation::Pmsv).unwrap();
        let e = cost.evaluate(&[-1.5 + 0.3 * k as f64]).unwrap();
        worst_discard = worst_discard.max(e.discard_fraction);
    }
    outcome(
        exact_match && idempotent && worst_discard == 0.0,
        format!(
            "200 count tables: conditional identity {exact_match}, idempotent {idempotent}; noiseless YX max discard = {worst_discard}"
        ),
    )
}

fn random_confusion(rng: &mut ChaCha8Rng, n: usize, full: bool) -> ConfusionModel {
    if !full {
        let flips: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(0.005..0.08), rng.random_range(0.005..0.08))).collect();
        return ConfusionModel::from_flips(&flips);
    }
    let dim = 1 << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..dim {
        let mut col: Vec<f64> = (0..dim).map(|i| if i == j { 0.0 } else { rng.random_range(0.0..0.03) }).collect();
        col[j] = 1.0 - col.iter().sum::<f64>();
        for i in 0..dim {
            m[(i, j)] = col[i];
        }
    }
    ConfusionModel::Full { n_qubits: n, matrix: m }
}

fn spam_round_trip() -> Outcome {
    let n = 3;
    let dim = 1usize << n;
    let mut worst: f64 = 0.0;
    for seed in 0..SPAM_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(77, seed));
        let model = random_confusion(&mut rng, n, seed % 2 == 1);
        let raw: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let truth: Vec<f64> = raw.iter().map(|x| x / total).collect();
        let dense = model.dense().unwrap();
        // sample prepared outcome from truth, then observed outcome from its column
        let mut t = ShotTable::new(0, n);
        let cdf = |w: &[f64], u: f64| {
            let mut acc = 0.0;
            for (i, p) in w.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            w.len() - 1
        };
        for _ in 0..SPAM_SHOTS {
            let prep = cdf(&truth, rng.random());
            let col: Vec<f64> = (0..dim).map(|i| dense[(i, prep)]).collect();
            t.record(cdf(&col, rng.random()) as u64, 1);
        }
        let corrected = spam_correct(&t.to_distribution(), &model).unwrap();
        let truth_d = Distribution {
            circuit_id: 0,
            n_bits: n,
            weights: truth.iter().enumerate().map(|(b, &p)| (b as u64, p)).collect(),
            shots: SPAM_SHOTS as f64,
        };
        worst = worst.max(corrected.tv_distance(&truth_d));
    }
    outcome(
        worst <= SPAM_TV,
        format!("{SPAM_SEEDS} seeds, 3 qubits, per-qubit and full models, {SPAM_SHOTS} shots: max TV = {worst:.4}"),
    )
}

fn mitigation_ordering() -> Outcome {
    let h = pauli("iron_pauli.json");
    let syms = [SymmetryOperator::parse("ZZ", 1).unwrap()];
    let truth = energy(&h, &yx(), &[THETA_STAR]);
    let noise = NoiseModel::default();
    let mut wins = 0;
    let (mut raw_sum, mut mit_sum) = (0.0, 0.0);
    for run in 0..ORDERING_RUNS {
        let base = derive_seed(2021, run);
        let model = calibrate(2, 100_000, ConfusionMode::PerQubit, &noise, derive_seed(base, u64::MAX)).unwrap();
        let mut s = ShotSettings::new(24_000, noise.clone(), base);
        s.confusion = Some(model);
        let mut cost = VqeCost::new(&h, yx(), &syms, Backend::Shots(s), Mitigation::SpamPmsv).unwrap();
        let e = cost.evaluate(&[THETA_STAR]).unwrap();
        let raw = e.variant(Mitigation::Raw).unwrap();
        let mit = e.variant(Mitigation::SpamPmsv).unwrap();
        raw_sum += raw - truth;
        mit_sum += mit - truth;
        if (mit - truth).abs() <= (raw - truth).abs() {
            wins += 1;
        }
    }
    let n = ORDERING_RUNS as f64;
    outcome(
        wins >= ORDERING_MIN_WINS,
        format!(
            "|E_spam+pmsv − E| ≤ |E_raw − E| in {wins}/{ORDERING_RUNS} runs; mean bias raw {:+.2}, spam+pmsv {:+.2} kJ/mol",
            raw_sum / n,
            mit_sum / n
        ),
    )
}

fn optimizer_correctness() -> Outcome {
    // exact sinusoids A sin(2θ + φ) + C
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_sin: f64 = 0.0;
    for _ in 0..50 {
        let (a, phi, c) = (rng.random_range(0.1..500.0), rng.random_range(-3.0..3.0), rng.random_range(-10.0..10.0));
        let f = move |t: &[f64]| Ok(exact(a * (2.0 * t[0] + phi).sin() + c));
        let start = rng.random_range(-1.5..1.5);
        let opts = RotosolveOptions { max_sweeps: 1, tol: 0.0, frequency: 2.0 };
        let trace = rotosolve(f, &[start], opts).unwrap();
        let best = trace.last().unwrap().eval.value;
        worst_sin = worst_sin.max((best - (c - a)).abs() / a.max(1.0));
    }

    // shift rule against central differences; constant terms dropped to keep the
    // difference quotient out of rounding noise
    let mut worst_shift: f64 = 0.0;
    for f in ["iron_pauli.json", "hchain_pauli.json"] {
        let h = pauli(f);
        let h = h.sub(&PauliSum::identity(2, h.constant().re)).unwrap();
        let mut cost = |t: &[f64]| Ok(exact(energy(&h, &yx(), t)));
        for k in 0..21 {
            let theta = -1.5 + 0.15 * k as f64;
            let g = parameter_shift_gradient(&mut cost, &[theta]).unwrap()[0];
            let eps = 1e-5;
            let fd = (cost(&[theta + eps]).unwrap().value - cost(&[theta - eps]).unwrap().value) / (2.0 * eps);
            worst_shift = worst_shift.max((g - fd).abs());
        }
    }

    // Rotosolve and SGD on the iron fixture
    let h = pauli("iron_pauli.json");
    let cost = |t: &[f64]| Ok(exact(energy(&h, &yx(), t)));
    let roto = rotosolve(cost, &[1e-5], RotosolveOptions::default()).unwrap();
    // the curvature here is ~1.6e3 kJ/mol/rad², so the step must stay below ~1e-3
    let sgd_trace = sgd(cost, &[1e-5], SgdOptions { learning_rate: 2.5e-4, steps: 200 }).unwrap();
    let t_roto = roto.last().unwrap().theta[0];
    let t_sgd = sgd_trace.last().unwrap().theta[0];
    let pass = worst_sin <= ROTOSOLVE_TOL && worst_shift <= SHIFT_TOL && (t_roto - t_sgd).abs() <= OPTIMA_TOL;
    outcome(
        pass,
        format!(
            "one-sweep sinusoid error {worst_sin:.1e}; shift vs FD {worst_shift:.1e}; θ rotosolve {t_roto:.6}, sgd {t_sgd:.6}"
        ),
    )
}

fn transqse_consistency() -> Outcome {
    let HamiltonianInput::Fermion(d) = load_hamiltonian(&data("chain8_fermion.json")).unwrap() else {
        return outcome(false, "chain fixture is not fermionic");
    };
    let h_full = d.to_qubit_operator().unwrap();
    let lambda = pbcq::fermion::translation_operator(2, 4).unwrap();
    let comm = h_full.commutator(&lambda).unwrap();
    let comm_zero = comm.terms().all(|(_, c)| c.norm() < 1e-9);
    let specs = read_json::<SymmetryFile>(&data("chain_symmetries.json")).unwrap().symmetries;
    let setup = prepare_transqse(&d, &specs, 0b0011_0011, &[], TaylorOrder::Exact).unwrap();
    let cost = TransQseCost::new(setup.problem, &setup.symmetries, Backend::StateVector, Mitigation::Raw).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut s1_range = (f64::INFINITY, f64::NEG_INFINITY);
    let points = 61;
    for k in 0..points {
        let theta = -TAYLOR_THETA + 2.0 * TAYLOR_THETA * k as f64 / (points - 1) as f64;
        let (h0, h1, s1) = cost.components(&[theta]).unwrap();
        let e0 = transqse_combine(h0, h1, s1, TaylorOrder::Exact).unwrap();
        let e1 = transqse_combine(h0, h1, s1, TaylorOrder::First).unwrap();
        let bound = 2.0 * s1 * s1 * (h0 + h1).abs();
        worst_ratio = worst_ratio.max((e0 - e1).abs() / bound);
        s1_range = (s1_range.0.min(s1), s1_range.1.max(s1));
    }
    outcome(
        comm_zero && setup.commutator_terms == 0 && worst_ratio <= 1.0,
        format!(
            "[H,Λ] = 0: {comm_zero}; max |exact − first|/(2 s₁²|h₀+h₁|) = {worst_ratio:.3} over θ ∈ [−{TAYLOR_THETA}, {TAYLOR_THETA}], s₁ ∈ [{:.4}, {:.4}]",
            s1_range.0, s1_range.1
        ),
    )
}

/// Dense oracle for `⟨00| e^{iθP} H e^{−iθP} |00⟩` on a fine grid over one period.
fn grid_minimum(h: &PauliSum, p: &PauliWord) -> f64 {
    let hd = h.dense_matrix().unwrap();
    let pd = p.dense_matrix().unwrap();
    let e0 = M::from_fn(4, 1, |i, _| if i == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
    let v1 = &pd * &e0 * Complex64::new(0.0, -1.0);
    let a = (e0.adjoint() * &hd * &e0)[(0, 0)].re;
    let b = (v1.adjoint() * &hd * &v1)[(0, 0)].re;
    let c = (e0.adjoint() * &hd * &v1)[(0, 0)].re;
    (0..GRID_POINTS)
        .map(|k| {
            let t = -std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * k as f64 / (GRID_POINTS - 1) as f64;
            let (s, co) = t.sin_cos();
            co * co * a + s * s * b + 2.0 * s * co * c
        })
        .fold(f64::INFINITY, f64::min)
}

fn not_reproducible() -> Outcome {
    let text = std::fs::read_to_string(data("reference_values.toml")).unwrap();
    let v: toml::Value = toml::from_str(&text).unwrap();
    let labelled = v["status"].as_str() == Some("not reproducible: integrals unpublished");
    println!(
        "      NOT REPRODUCIBLE at desk scale: published absolute energies, correlation energies, ΔE values and \
hardware-agreement margins need unpublished electronic integrals and a proprietary device noise profile; \
they ship as labelled metadata in data/reference_values.toml"
    );

    let yx_word: PauliWord = "YX".parse().unwrap();
    let mut worst: f64 = 0.0;
    let mut details = Vec::new();
    for cfg in ["iron_vqe.toml", "iron_pauli_vqe.toml"] {
        let c = ExperimentConfig::load(&data(cfg)).unwrap();
        let e = execute(&c).unwrap().result.final_energy;
        let d = (e - grid_minimum(&pauli("iron_pauli.json"), &yx_word)).abs();
        worst = worst.max(d);
        details.push(format!("{cfg} {d:.1e}"));
    }
    let h = pauli("hchain_pauli.json");
    let cost = |t: &[f64]| Ok(exact(energy(&h, &yx(), t)));
    let trace = rotosolve(cost, &[1e-5], RotosolveOptions::default()).unwrap();
    let d = (trace.last().unwrap().eval.value - grid_minimum(&h, &yx_word)).abs();
    worst = worst.max(d);
    details.push(format!("chain YX {d:.1e}"));
    outcome(
        labelled && worst <= GRID_TOL,
        format!("reference metadata labelled: {labelled}; |E_vqe − grid min|: {}", details.join(", ")),
    )
}

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("hydrogen-chain outcome probabilities", Duration::from_secs(1), Box::new(|| probability_table(ProbabilityTable::IV))),
        ("iron outcome probabilities", Duration::from_secs(1), Box::new(|| probability_table(ProbabilityTable::V))),
        ("partition counts", Duration::from_secs(1), Box::new(partition_counts)),
        ("tapering spectrum", Duration::from_secs(10), Box::new(tapering_spectrum)),
        ("PMSV oracle equivalence", Duration::from_secs(5), Box::new(pmsv_equivalence)),
        ("SPAM round-trip", Duration::from_secs(30), Box::new(spam_round_trip)),
        ("mitigation ordering", Duration::from_secs(120), Box::new(mitigation_ordering)),
        ("optimizer correctness", Duration::from_secs(30), Box::new(optimizer_correctness)),
        ("TransQSE consistency", Duration::from_secs(10), Box::new(transqse_consistency)),
        ("noiseless VQE vs grid oracle", Duration::from_secs(60), Box::new(not_reproducible)),
    ];
    let mut failed = 0;
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let o = check();
        let took = start.elapsed();
        let ok = o.pass && took <= *budget;
        if !ok {
            failed += 1;
        }
        println!(
            "{} {name} [{:.2}s / {}s]: {}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
