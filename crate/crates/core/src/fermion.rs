//! Second-quantized operators on k-point/spin orbitals and their
//! Jordan–Wigner images.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliSum, PauliWord, PRUNE_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

impl FromStr for Spin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "up" | "u" | "↑" | "alpha" | "a" | "0" => Ok(Spin::Up),
            "down" | "d" | "↓" | "beta" | "b" | "1" => Ok(Spin::Down),
            other => Err(Error::parse("spin", format!("unknown spin label {other:?}"))),
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::Up => "↑",
            Spin::Down => "↓",
        })
    }
}

/// `[L1 L2 L3]` Monkhorst–Pack style mesh; momentum arithmetic is modulo `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[u32; 3]", into = "[u32; 3]")]
pub struct KPointMesh([u32; 3]);

impl KPointMesh {
    pub fn new(l1: u32, l2: u32, l3: u32) -> Result<Self> {
        Self::try_from([l1, l2, l3])
    }

    pub fn dims(&self) -> [u32; 3] {
        self.0
    }

    /// `-L/2 < k <= L/2` on every axis.
    pub fn contains(&self, k: [i32; 3]) -> bool {
        k.iter().zip(self.0).all(|(&ki, l)| {
            let twice = 2 * ki as i64;
            twice > -(l as i64) && twice <= l as i64
        })
    }

    /// True when the summed momentum is zero modulo the mesh on every axis.
    pub fn is_zero(&self, total: [i64; 3]) -> bool {
        total
            .iter()
            .zip(self.0)
            .all(|(&t, l)| t.rem_euclid(l as i64) == 0)
    }
}

impl TryFrom<[u32; 3]> for KPointMesh {
    type Error = Error;

    fn try_from(l: [u32; 3]) -> Result<Self> {
        if l.contains(&0) {
            return Err(Error::input(format!("k-point mesh {l:?} must be positive")));
        }
        Ok(KPointMesh(l))
    }
}

impl From<KPointMesh> for [u32; 3] {
    fn from(m: KPointMesh) -> Self {
        m.0
    }
}

/// Orbital `p` with spin `spin` at k-point `k` (or at cell `k` in a real-space basis).
///
/// Ordered by `k`, then spin (up first), then `p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinOrbital {
    pub k: [i32; 3],
    pub p: u32,
    pub spin: Spin,
}

impl SpinOrbital {
    pub fn new(k: [i32; 3], p: u32, spin: Spin) -> Self {
        SpinOrbital { k, p, spin }
    }

    /// Orbital on a 1-D mesh: `k = (k1, 0, 0)`.
    pub fn chain(k1: i32, p: u32, spin: Spin) -> Self {
        SpinOrbital::new([k1, 0, 0], p, spin)
    }
}

impl Ord for SpinOrbital {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k
            .cmp(&other.k)
            .then(self.spin.cmp(&other.spin))
            .then(self.p.cmp(&other.p))
    }
}

impl PartialOrd for SpinOrbital {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for SpinOrbital {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.k[1] == 0 && self.k[2] == 0 {
            write!(f, "({}, {}, {})", self.k[0], self.p, self.spin)
        } else {
            write!(
                f,
                "(({},{},{}), {}, {})",
                self.k[0], self.k[1], self.k[2], self.p, self.spin
            )
        }
    }
}

/// `true` iff created minus annihilated momentum vanishes modulo the mesh.
pub fn conserves_momentum(factors: &[(SpinOrbital, bool)], mesh: &KPointMesh) -> bool {
    let mut total = [0i64; 3];
    for (orb, created) in factors {
        let s = if *created { 1 } else { -1 };
        for (t, k) in total.iter_mut().zip(orb.k) {
            *t += s * k as i64;
        }
    }
    mesh.is_zero(total)
}

/// Mode numbering: position in the table is the qubit index under Jordan–Wigner.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitalTable {
    orbitals: Vec<SpinOrbital>,
    index: HashMap<SpinOrbital, usize>,
}

impl OrbitalTable {
    pub fn new(orbitals: Vec<SpinOrbital>) -> Result<Self> {
        let mut index = HashMap::with_capacity(orbitals.len());
        for (i, o) in orbitals.iter().enumerate() {
            if index.insert(*o, i).is_some() {
                return Err(Error::validation(
                    format!("orbital_table[{i}]"),
                    format!("orbital {o} listed twice"),
                ));
            }
        }
        Ok(OrbitalTable { orbitals, index })
    }

    /// Cell-major, then orbital, then spin: `mode = cell·2·n_orb + 2p + spin`.
    pub fn chain_cells(cells: usize, orbitals_per_cell: usize) -> Self {
        let mut v = Vec::with_capacity(cells * orbitals_per_cell * 2);
        for r in 0..cells {
            for p in 0..orbitals_per_cell {
                for spin in [Spin::Up, Spin::Down] {
                    v.push(SpinOrbital::chain(r as i32, p as u32, spin));
                }
            }
        }
        Self::new(v).expect("distinct by construction")
    }

    pub fn len(&self) -> usize {
        self.orbitals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbitals.is_empty()
    }

    pub fn orbitals(&self) -> &[SpinOrbital] {
        &self.orbitals
    }

    pub fn mode(&self, orb: &SpinOrbital) -> Result<usize> {
        self.index
            .get(orb)
            .copied()
            .ok_or_else(|| Error::input(format!("orbital {orb} is not in the orbital table")))
    }

    pub fn orbital(&self, mode: usize) -> Option<&SpinOrbital> {
        self.orbitals.get(mode)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LadderOp {
    pub mode: usize,
    pub dagger: bool,
}

impl LadderOp {
    pub fn create(mode: usize) -> Self {
        LadderOp { mode, dagger: true }
    }

    pub fn annihilate(mode: usize) -> Self {
        LadderOp { mode, dagger: false }
    }
}

/// `coeff · op_0 op_1 ... op_k`; factors apply right to left as written.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionTerm {
    pub ops: Vec<LadderOp>,
    pub coeff: Complex64,
}

/// Sum of ladder-operator products on numbered modes.
///
/// Products are kept in the order they were written; identical products are merged.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct FermionOperator {
    terms: Vec<FermionTerm>,
}

impl FermionOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity(coeff: Complex64) -> Self {
        let mut f = Self::zero();
        f.add_term(vec![], coeff);
        f
    }

    pub fn term(ops: Vec<LadderOp>, coeff: Complex64) -> Self {
        let mut f = Self::zero();
        f.add_term(ops, coeff);
        f
    }

    /// `c†_p c_q`
    pub fn hop(p: usize, q: usize, coeff: Complex64) -> Self {
        Self::term(vec![LadderOp::create(p), LadderOp::annihilate(q)], coeff)
    }

    pub fn number(p: usize) -> Self {
        Self::hop(p, p, Complex64::new(1.0, 0.0))
    }

    pub fn add_term(&mut self, ops: Vec<LadderOp>, coeff: Complex64) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.ops == ops) {
            t.coeff += coeff;
        } else {
            self.terms.push(FermionTerm { ops, coeff });
        }
        self.terms.retain(|t| t.coeff.norm() >= PRUNE_TOL);
    }

    pub fn terms(&self) -> &[FermionTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &FermionOperator) -> FermionOperator {
        let mut out = self.clone();
        for t in &other.terms {
            out.add_term(t.ops.clone(), t.coeff);
        }
        out
    }

    pub fn scale(&self, factor: Complex64) -> FermionOperator {
        let mut out = FermionOperator::zero();
        for t in &self.terms {
            out.add_term(t.ops.clone(), t.coeff * factor);
        }
        out
    }

    pub fn sub(&self, other: &FermionOperator) -> FermionOperator {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Product `self · other` (concatenated factor lists).
    pub fn mul(&self, other: &FermionOperator) -> FermionOperator {
        let mut out = FermionOperator::zero();
        for a in &self.terms {
            for b in &other.terms {
                let mut ops = a.ops.clone();
                ops.extend_from_slice(&b.ops);
                out.add_term(ops, a.coeff * b.coeff);
            }
        }
        out
    }

    pub fn adjoint(&self) -> FermionOperator {
        let mut out = FermionOperator::zero();
        for t in &self.terms {
            let ops = t
                .ops
                .iter()
                .rev()
                .map(|o| LadderOp {
                    mode: o.mode,
                    dagger: !o.dagger,
                })
                .collect();
            out.add_term(ops, t.coeff.conj());
        }
        out
    }

    /// Rename modes, e.g. to translate an operator by one cell.
    pub fn relabel(&self, map: impl Fn(usize) -> usize) -> FermionOperator {
        let mut out = FermionOperator::zero();
        for t in &self.terms {
            let ops = t
                .ops
                .iter()
                .map(|o| LadderOp {
                    mode: map(o.mode),
                    dagger: o.dagger,
                })
                .collect();
            out.add_term(ops, t.coeff);
        }
        out
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.terms
            .iter()
            .flat_map(|t| t.ops.iter().map(|o| o.mode))
            .max()
    }

    /// Jordan–Wigner image: `c_p -> Z_0..Z_{p-1} (X_p + iY_p)/2`.
    pub fn jordan_wigner(&self, n_modes: usize) -> Result<PauliSum> {
        if let Some(m) = self.max_mode() {
            if m >= n_modes {
                return Err(Error::dim(format!(
                    "mode {m} outside a {n_modes}-mode register"
                )));
            }
        }
        let mut cache: HashMap<LadderOp, PauliSum> = HashMap::new();
        let mut out = PauliSum::zero(n_modes);
        for t in &self.terms {
            let mut acc = PauliSum::identity(n_modes, 1.0);
            for op in &t.ops {
                let image = cache
                    .entry(*op)
                    .or_insert_with(|| ladder_image(*op, n_modes));
                acc = acc.mul(image)?;
            }
            for (w, c) in acc.terms() {
                out.add_term(w.clone(), c * t.coeff)?;
            }
        }
        Ok(out)
    }
}

fn ladder_image(op: LadderOp, n_modes: usize) -> PauliSum {
    let mut base = PauliWord::identity(n_modes);
    for q in 0..op.mode {
        base.set(q, Letter::Z);
    }
    let x = base.clone().with_letter(op.mode, Letter::X);
    let y = base.with_letter(op.mode, Letter::Y);
    let sign = if op.dagger { -0.5 } else { 0.5 };
    PauliSum::from_terms(
        n_modes,
        [
            (x, Complex64::new(0.5, 0.0)),
            (y, Complex64::new(0.0, sign)),
        ],
    )
    .expect("same register")
}

pub fn jordan_wigner(op: &FermionOperator, n_modes: usize) -> Result<PauliSum> {
    op.jordan_wigner(n_modes)
}

/// Particle–hole excitation `c†_A c_I` or `c†_A c_I c†_B c_J`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Excitation {
    Single {
        a: SpinOrbital,
        i: SpinOrbital,
    },
    Double {
        a: SpinOrbital,
        i: SpinOrbital,
        b: SpinOrbital,
        j: SpinOrbital,
    },
}

impl Excitation {
    /// Factors in written order; `true` marks a creation operator.
    pub fn factors(&self) -> Vec<(SpinOrbital, bool)> {
        match *self {
            Excitation::Single { a, i } => vec![(a, true), (i, false)],
            Excitation::Double { a, i, b, j } => {
                vec![(a, true), (i, false), (b, true), (j, false)]
            }
        }
    }

    pub fn is_double(&self) -> bool {
        matches!(self, Excitation::Double { .. })
    }

    /// `t · c†_A c_I [c†_B c_J]` on the modes of `table`.
    pub fn operator(&self, table: &OrbitalTable, t: Complex64) -> Result<FermionOperator> {
        let ops = self
            .factors()
            .iter()
            .map(|(o, created)| {
                Ok(LadderOp {
                    mode: table.mode(o)?,
                    dagger: *created,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FermionOperator::term(ops, t))
    }

    /// Anti-Hermitian cluster generator `T − T†`.
    pub fn generator(&self, table: &OrbitalTable, t: Complex64) -> Result<FermionOperator> {
        let op = self.operator(table, t)?;
        Ok(op.sub(&op.adjoint()))
    }
}

impl fmt::Display for Excitation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Excitation::Single { a, i } => write!(f, "c†{a} c{i}"),
            Excitation::Double { a, i, b, j } => write!(f, "c†{a} c{i} c†{b} c{j}"),
        }
    }
}

/// Spin- and momentum-conserving singles and doubles from `occupied` into `virtual_`.
///
/// Doubles are unique up to the `(A,I)↔(B,J)` swap and the sign-only
/// exchange of like-spin indices; the lexicographically smallest spin-matched
/// `(A,I,B,J)` is kept. Singles come first, then doubles, in input order.
pub fn generate_uccsd_pbc(
    occupied: &[SpinOrbital],
    virtual_: &[SpinOrbital],
    mesh: &KPointMesh,
) -> Result<Vec<Excitation>> {
    if let Some(o) = occupied.iter().find(|o| virtual_.contains(o)) {
        return Err(Error::input(format!(
            "orbital {o} is both occupied and virtual"
        )));
    }
    let mut out = Vec::new();
    for &a in virtual_ {
        for &i in occupied {
            let ex = Excitation::Single { a, i };
            if a.spin == i.spin && conserves_momentum(&ex.factors(), mesh) {
                out.push(ex);
            }
        }
    }
    for (ii, &i) in occupied.iter().enumerate() {
        for &j in &occupied[ii + 1..] {
            for (aa, &a) in virtual_.iter().enumerate() {
                for &b in &virtual_[aa + 1..] {
                    let candidates = [(a, i, b, j), (b, j, a, i), (a, j, b, i), (b, i, a, j)];
                    let best = candidates
                        .iter()
                        .filter(|(a, i, b, j)| a.spin == i.spin && b.spin == j.spin)
                        .min();
                    if let Some(&(a, i, b, j)) = best {
                        let ex = Excitation::Double { a, i, b, j };
                        if conserves_momentum(&ex.factors(), mesh) {
                            out.push(ex);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmplitudeRow {
    pub excitation: Excitation,
    pub t: Complex64,
}

/// Ingested cluster amplitudes, one row per excitation.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct AmplitudeTable {
    pub rows: Vec<AmplitudeRow>,
}

impl AmplitudeTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn max_magnitude(&self) -> f64 {
        self.rows.iter().map(|r| r.t.norm()).fold(0.0, f64::max)
    }

    /// Parse the delimited text form: `kA,pA,sA,kI,pI,sI,kB,pB,sB,kJ,pJ,sJ,re,im`.
    ///
    /// `k` is an integer (first mesh axis) or `a:b:c`; single excitations leave
    /// the `B`/`J` columns empty; `im` may be omitted.
    pub fn from_csv_reader<R: std::io::Read>(reader: R, source: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (n, rec) in rdr.records().enumerate() {
            let loc = format!("{source}: row {}", n + 1);
            let rec = rec.map_err(|e| Error::parse(&loc, e))?;
            let field = |i: usize| rec.get(i).unwrap_or("").trim();
            let orb = |i: usize| -> Result<Option<SpinOrbital>> {
                if field(i).is_empty() {
                    return Ok(None);
                }
                let k = parse_k(field(i)).map_err(|e| Error::parse(&loc, e))?;
                let p: u32 = field(i + 1)
                    .parse()
                    .map_err(|e| Error::parse(&loc, format!("orbital index: {e}")))?;
                let spin: Spin = field(i + 2).parse().map_err(|e| Error::parse(&loc, e))?;
                Ok(Some(SpinOrbital::new(k, p, spin)))
            };
            let (a, i) = match (orb(0)?, orb(3)?) {
                (Some(a), Some(i)) => (a, i),
                _ => return Err(Error::parse(&loc, "A and I orbitals are required")),
            };
            let excitation = match (orb(6)?, orb(9)?) {
                (Some(b), Some(j)) => Excitation::Double { a, i, b, j },
                (None, None) => Excitation::Single { a, i },
                _ => return Err(Error::parse(&loc, "B and J must both be given or both empty")),
            };
            let re: f64 = field(12)
                .parse()
                .map_err(|e| Error::parse(&loc, format!("amplitude: {e}")))?;
            let im: f64 = if field(13).is_empty() {
                0.0
            } else {
                field(13)
                    .parse()
                    .map_err(|e| Error::parse(&loc, format!("amplitude: {e}")))?
            };
            rows.push(AmplitudeRow {
                excitation,
                t: Complex64::new(re, im),
            });
        }
        Ok(AmplitudeTable { rows })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::from_csv_reader(f, &path.display().to_string())
    }
}

fn parse_k(s: &str) -> std::result::Result<[i32; 3], String> {
    let parts: Vec<&str> = s.split(':').collect();
    let parse = |p: &str| p.trim().parse::<i32>().map_err(|e| format!("k-point {s:?}: {e}"));
    match parts.len() {
        1 => Ok([parse(parts[0])?, 0, 0]),
        3 => Ok([parse(parts[0])?, parse(parts[1])?, parse(parts[2])?]),
        _ => Err(format!("k-point {s:?} must be an integer or a:b:c")),
    }
}

/// Keep rows with `|t| >= max|t| / ratio`, preserving order. Ratios below 1 act as 1.
pub fn screen_amplitudes(table: &AmplitudeTable, ratio: f64) -> AmplitudeTable {
    let ratio = if ratio.is_finite() { ratio.max(1.0) } else { 1.0 };
    let threshold = table.max_magnitude() / ratio;
    AmplitudeTable {
        rows: table
            .rows
            .iter()
            .filter(|r| r.t.norm() >= threshold)
            .cloned()
            .collect(),
    }
}

/// Localized-orbital chain geometry used for the translation-based ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainGeometry {
    pub cells: usize,
    pub modes_per_cell: usize,
}

impl ChainGeometry {
    pub fn new(cells: usize, modes_per_cell: usize) -> Result<Self> {
        if cells != 2 {
            return Err(Error::input(format!(
                "only two-cell chains are supported (got {cells})"
            )));
        }
        if modes_per_cell == 0 || !modes_per_cell.is_multiple_of(2) {
            return Err(Error::input(format!(
                "modes per cell must be a positive even number (got {modes_per_cell})"
            )));
        }
        Ok(ChainGeometry {
            cells,
            modes_per_cell,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.cells * self.modes_per_cell
    }

    /// Mode of orbital `p`, spin `spin` in cell `cell` (cell-major, orbital, spin).
    pub fn mode(&self, cell: usize, p: usize, spin: Spin) -> usize {
        cell * self.modes_per_cell + 2 * p + spin.index()
    }

    /// Mode index after shifting by one cell.
    pub fn translate(&self, mode: usize) -> usize {
        (mode + self.modes_per_cell) % self.n_modes()
    }
}

/// Inter-cell double excitation of the two-cell chain and its translate.
#[derive(Clone, Debug, PartialEq)]
pub struct TransQseCluster {
    /// `T − T†`, both doubles with amplitude `θ/2`.
    pub full: FermionOperator,
    /// `T_W − T_W†`: the first double alone with amplitude `θ`. Superposing the
    /// state it generates with its translate gives `full` to first order in `θ`.
    pub localized: FermionOperator,
}

/// Cluster `T ≈ (θ/2)(c†_{1,1↑} c_{0,0↑} c†_{1,1↓} c_{0,0↓} + translate)`.
pub fn transqse_cluster(theta: f64, cells: usize, modes_per_cell: usize) -> Result<TransQseCluster> {
    let geo = ChainGeometry::new(cells, modes_per_cell)?;
    if modes_per_cell != 4 {
        return Err(Error::input(format!(
            "the chain cluster needs 4 modes per cell (got {modes_per_cell})"
        )));
    }
    let amp = Complex64::new(theta / 2.0, 0.0);
    let first = FermionOperator::term(
        vec![
            LadderOp::create(geo.mode(1, 1, Spin::Up)),
            LadderOp::annihilate(geo.mode(0, 0, Spin::Up)),
            LadderOp::create(geo.mode(1, 1, Spin::Down)),
            LadderOp::annihilate(geo.mode(0, 0, Spin::Down)),
        ],
        amp,
    );
    let second = first.relabel(|m| geo.translate(m));
    let t_full = first.add(&second);
    let local = first.scale(Complex64::new(2.0, 0.0));
    Ok(TransQseCluster {
        full: t_full.sub(&t_full.adjoint()),
        localized: local.sub(&local.adjoint()),
    })
}

/// Fermionic swap of two modes: `1 + c†_i c_j + c†_j c_i − n_i − n_j`.
pub fn fermionic_swap(i: usize, j: usize) -> FermionOperator {
    let one = Complex64::new(1.0, 0.0);
    FermionOperator::identity(one)
        .add(&FermionOperator::hop(i, j, one))
        .add(&FermionOperator::hop(j, i, one))
        .sub(&FermionOperator::number(i))
        .sub(&FermionOperator::number(j))
}

/// Qubit image of the cell-shift unitary; for two cells it swaps the mode blocks.
pub fn translation_operator(cells: usize, modes_per_cell: usize) -> Result<PauliSum> {
    let geo = ChainGeometry::new(cells, modes_per_cell)?;
    let n = geo.n_modes();
    if n > crate::pauli::DENSE_MAX_QUBITS {
        return Err(Error::Resource(format!(
            "translation operator on {n} modes exceeds the 12-mode limit"
        )));
    }
    let mut acc = PauliSum::identity(n, 1.0);
    for m in 0..modes_per_cell {
        let swap = fermionic_swap(m, m + modes_per_cell).jordan_wigner(n)?;
        acc = acc.mul(&swap)?;
    }
    Ok(acc)
}

/// Whether the Hamiltonian's `k` labels are crystal momenta or cell indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitalBasis {
    #[default]
    Momentum,
    RealSpace,
}

/// One- and two-body coefficients of `H = Σ h^P_Q c†_P c_Q + ½ Σ h^{PR}_{QS} c†_P c_Q c†_R c_S`.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionHamiltonianData {
    pub mesh: KPointMesh,
    /// Scalar offset (core energy) added to the operator.
    pub constant: f64,
    pub basis: OrbitalBasis,
    pub unit: String,
    pub orbitals: OrbitalTable,
    pub one_body: BTreeMap<(usize, usize), Complex64>,
    pub two_body: BTreeMap<[usize; 4], Complex64>,
}

/// Tolerance for the Hermiticity check on ingested coefficients.
pub const HERMITICITY_TOL: f64 = 1e-8;

impl FermionHamiltonianData {
    pub fn n_modes(&self) -> usize {
        self.orbitals.len()
    }

    fn k(&self, mode: usize) -> [i32; 3] {
        self.orbitals.orbital(mode).expect("validated index").k
    }

    /// Index range, momentum conservation and Hermiticity checks.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_modes();
        for (i, o) in self.orbitals.orbitals().iter().enumerate() {
            if self.basis == OrbitalBasis::Momentum && !self.mesh.contains(o.k) {
                return Err(Error::validation(
                    format!("orbital_table[{i}]"),
                    format!("k-point {:?} outside mesh {:?}", o.k, self.mesh.dims()),
                ));
            }
        }
        for &(p, q) in self.one_body.keys() {
            if p >= n || q >= n {
                return Err(Error::validation(
                    format!("one_body[{p},{q}]"),
                    format!("mode index outside 0..{n}"),
                ));
            }
        }
        for key in self.two_body.keys() {
            if key.iter().any(|&m| m >= n) {
                return Err(Error::validation(
                    format!("two_body{key:?}"),
                    format!("mode index outside 0..{n}"),
                ));
            }
        }
        if self.basis == OrbitalBasis::Momentum {
            for &(p, q) in self.one_body.keys() {
                let f = [
                    (*self.orbitals.orbital(p).unwrap(), true),
                    (*self.orbitals.orbital(q).unwrap(), false),
                ];
                if !conserves_momentum(&f, &self.mesh) {
                    return Err(Error::validation(
                        format!("one_body[{p},{q}]"),
                        format!(
                            "violates crystal momentum conservation (k_P={:?}, k_Q={:?})",
                            self.k(p),
                            self.k(q)
                        ),
                    ));
                }
            }
            for key in self.two_body.keys() {
                let o = |m: usize| *self.orbitals.orbital(m).unwrap();
                let f = [
                    (o(key[0]), true),
                    (o(key[1]), false),
                    (o(key[2]), true),
                    (o(key[3]), false),
                ];
                if !conserves_momentum(&f, &self.mesh) {
                    return Err(Error::validation(
                        format!("two_body{key:?}"),
                        "violates crystal momentum conservation",
                    ));
                }
            }
        }
        for (&(p, q), &h) in &self.one_body {
            let partner = self.one_body.get(&(q, p)).copied().unwrap_or_default();
            if (h - partner.conj()).norm() > HERMITICITY_TOL {
                return Err(Error::validation(
                    format!("one_body[{p},{q}]"),
                    format!("h^P_Q = {h} but conj(h^Q_P) = {}", partner.conj()),
                ));
            }
        }
        for (&[p, q, r, s], &h) in &self.two_body {
            let adj = self.two_body.get(&[s, r, q, p]).copied().unwrap_or_default();
            let swapped = self.two_body.get(&[q, p, s, r]).copied().unwrap_or_default();
            if (h - adj.conj()).norm() > HERMITICITY_TOL
                && (h - swapped.conj()).norm() > HERMITICITY_TOL
            {
                return Err(Error::validation(
                    format!("two_body[{p},{q},{r},{s}]"),
                    format!("coefficient {h} has no Hermitian partner"),
                ));
            }
        }
        Ok(())
    }

    pub fn to_operator(&self) -> FermionOperator {
        let mut f = FermionOperator::identity(Complex64::new(self.constant, 0.0));
        for (&(p, q), &h) in &self.one_body {
            f.add_term(vec![LadderOp::create(p), LadderOp::annihilate(q)], h);
        }
        for (&[p, q, r, s], &h) in &self.two_body {
            f.add_term(
                vec![
                    LadderOp::create(p),
                    LadderOp::annihilate(q),
                    LadderOp::create(r),
                    LadderOp::annihilate(s),
                ],
                0.5 * h,
            );
        }
        f
    }

    pub fn to_qubit_operator(&self) -> Result<PauliSum> {
        Ok(self
            .to_operator()
            .jordan_wigner(self.n_modes())?
            .chop_imaginary(1e-12))
    }

    pub fn to_file(&self) -> FermionHamiltonianFile {
        FermionHamiltonianFile {
            n_modes: self.n_modes(),
            mesh: self.mesh.dims(),
            basis: self.basis,
            unit: Some(self.unit.clone()),
            constant: self.constant,
            orbital_table: self.orbitals.orbitals().to_vec(),
            one_body: self
                .one_body
                .iter()
                .map(|(&(p, q), c)| (p, q, c.re, c.im))
                .collect(),
            two_body: self
                .two_body
                .iter()
                .map(|(&[p, q, r, s], c)| (p, q, r, s, c.re, c.im))
                .collect(),
        }
    }

    /// Build from the file form, reporting the offending entry on failure.
    pub fn from_file(file: &FermionHamiltonianFile) -> Result<Self> {
        let mesh = KPointMesh::try_from(file.mesh)
            .map_err(|e| Error::validation("mesh", e.to_string()))?;
        if file.orbital_table.len() != file.n_modes {
            return Err(Error::validation(
                "orbital_table",
                format!(
                    "{} rows for n_modes = {}",
                    file.orbital_table.len(),
                    file.n_modes
                ),
            ));
        }
        let orbitals = OrbitalTable::new(file.orbital_table.clone())?;
        let mut one_body = BTreeMap::new();
        for (i, &(p, q, re, im)) in file.one_body.iter().enumerate() {
            if one_body.insert((p, q), Complex64::new(re, im)).is_some() {
                return Err(Error::validation(
                    format!("one_body[{i}]"),
                    format!("duplicate entry ({p},{q})"),
                ));
            }
        }
        let mut two_body = BTreeMap::new();
        for (i, &(p, q, r, s, re, im)) in file.two_body.iter().enumerate() {
            if two_body
                .insert([p, q, r, s], Complex64::new(re, im))
                .is_some()
            {
                return Err(Error::validation(
                    format!("two_body[{i}]"),
                    format!("duplicate entry ({p},{q},{r},{s})"),
                ));
            }
        }
        let data = FermionHamiltonianData {
            mesh,
            constant: file.constant,
            basis: file.basis,
            unit: file.unit.clone().unwrap_or_else(|| "kJ/mol".to_string()),
            orbitals,
            one_body,
            two_body,
        };
        data.validate()?;
        Ok(data)
    }
}

/// On-disk form of [`FermionHamiltonianData`].
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FermionHamiltonianFile {
    pub n_modes: usize,
    pub mesh: [u32; 3],
    #[serde(default)]
    pub basis: OrbitalBasis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    #[serde(default)]
    pub constant: f64,
    pub orbital_table: Vec<SpinOrbital>,
    #[serde(default)]
    pub one_body: Vec<(usize, usize, f64, f64)>,
    #[serde(default)]
    pub two_body: Vec<(usize, usize, usize, usize, f64, f64)>,
}
