//! Regenerates the synthetic fermionic Hamiltonians under `data/`.
//!
//! `cargo run --example gen_fixtures -- data`

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64;
use pbcq::fermion::{
    ChainGeometry, FermionHamiltonianData, KPointMesh, OrbitalBasis, OrbitalTable, Spin,
    SpinOrbital,
};

type OneBody = BTreeMap<(usize, usize), Complex64>;
type TwoBody = BTreeMap<[usize; 4], Complex64>;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Adds `t·c†_p c_q` and its conjugate.
fn hop(ob: &mut OneBody, p: usize, q: usize, t: f64) {
    *ob.entry((p, q)).or_default() += re(t);
    if p != q {
        *ob.entry((q, p)).or_default() += re(t);
    }
}

/// Adds `½ t (X + X†)` for `X = c†_p c_q c†_r c_s`, stored with the file's ½ convention.
fn two(tb: &mut TwoBody, [p, q, r, s]: [usize; 4], t: f64) {
    *tb.entry([p, q, r, s]).or_default() += re(t);
    *tb.entry([s, r, q, p]).or_default() += re(t);
}

/// `u·n_p n_q`, p ≠ q.
fn density(tb: &mut TwoBody, p: usize, q: usize, u: f64) {
    two(tb, [p, p, q, q], u);
}

fn iron() -> FermionHamiltonianData {
    // Modes: (Γ, 9↑) (Γ, 7↓) (X, 8↑) (X, 6↓), reference |1100⟩.
    let orbitals = vec![
        SpinOrbital::new([0, 0, 0], 9, Spin::Up),
        SpinOrbital::new([0, 0, 0], 7, Spin::Down),
        SpinOrbital::new([1, 0, 0], 8, Spin::Up),
        SpinOrbital::new([1, 0, 0], 6, Spin::Down),
    ];
    let mut ob = OneBody::new();
    for (p, e) in [(0, -500.0), (1, -480.0), (2, -260.0), (3, -298.36)] {
        hop(&mut ob, p, p, e);
    }
    let mut tb = TwoBody::new();
    density(&mut tb, 0, 1, 400.0);
    density(&mut tb, 2, 3, 400.0);
    density(&mut tb, 0, 3, 340.0);
    density(&mut tb, 1, 2, 340.0);
    let alpha = 376.86;
    // Pair transfer Γ→X, written in both bilinear orders.
    two(&mut tb, [2, 0, 3, 1], alpha);
    two(&mut tb, [3, 1, 2, 0], alpha);
    // Spin-flip exchange between the two k-points.
    two(&mut tb, [2, 0, 1, 3], -alpha);
    two(&mut tb, [1, 3, 2, 0], -alpha);
    FermionHamiltonianData {
        mesh: KPointMesh::new(2, 1, 1).unwrap(),
        constant: -322_056.8,
        basis: OrbitalBasis::Momentum,
        unit: "kJ/mol".into(),
        orbitals: OrbitalTable::new(orbitals).unwrap(),
        one_body: ob,
        two_body: tb,
    }
}

fn chain() -> FermionHamiltonianData {
    let geo = ChainGeometry::new(2, 4).unwrap();
    let m = |c: usize, p: usize, s: Spin| geo.mode(c, p, s);
    let spins = [Spin::Up, Spin::Down];
    let mut ob = OneBody::new();
    let mut tb = TwoBody::new();
    // Built for cell 0 (and the bond 0→1), then shifted by one cell.
    let cell_terms = |ob: &mut OneBody, tb: &mut TwoBody, shift: usize| {
        let m = |c: usize, p: usize, s: Spin| m((c + shift) % 2, p, s);
        for s in spins {
            hop(ob, m(0, 0, s), m(0, 0, s), -1450.0);
            hop(ob, m(0, 1, s), m(0, 1, s), 310.0);
            hop(ob, m(0, 0, s), m(1, 0, s), -210.0);
            hop(ob, m(0, 1, s), m(1, 1, s), -160.0);
        }
        density(tb, m(0, 0, Spin::Up), m(0, 0, Spin::Down), 820.0);
        density(tb, m(0, 1, Spin::Up), m(0, 1, Spin::Down), 610.0);
        for a in spins {
            for b in spins {
                density(tb, m(0, 0, a), m(0, 1, b), 290.0);
                density(tb, m(0, 0, a), m(1, 0, b), 140.0);
            }
        }
        let (u, d) = (Spin::Up, Spin::Down);
        // Pair transfer into the neighbouring cell's upper orbital.
        two(tb, [m(1, 1, u), m(0, 0, u), m(1, 1, d), m(0, 0, d)], 2.0 * 125.0);
        // Spin exchange between the lower and upper orbitals of adjacent cells.
        two(tb, [m(1, 1, u), m(0, 0, u), m(0, 0, d), m(1, 1, d)], 2.0 * -75.0);
    };
    cell_terms(&mut ob, &mut tb, 0);
    cell_terms(&mut ob, &mut tb, 1);
    let orbitals = (0..2)
        .flat_map(|c| (0..2).flat_map(move |p| spins.map(|s| SpinOrbital::chain(c, p, s))))
        .collect();
    FermionHamiltonianData {
        mesh: KPointMesh::new(2, 1, 1).unwrap(),
        constant: -4_820.0,
        basis: OrbitalBasis::RealSpace,
        unit: "kJ/mol".into(),
        orbitals: OrbitalTable::new(orbitals).unwrap(),
        one_body: ob,
        two_body: tb,
    }
}

fn main() {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    for (name, data) in [("iron_fermion.json", iron()), ("chain8_fermion.json", chain())] {
        data.validate().expect("fixture validates");
        let text = serde_json::to_string_pretty(&data.to_file()).unwrap();
        std::fs::write(dir.join(name), text + "\n").unwrap();
        println!("wrote {name}");
    }
}
