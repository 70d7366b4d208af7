//! File ingestion with locations in every error.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{FermionHamiltonianData, FermionHamiltonianFile};
use crate::pauli::{PauliSum, PauliSumFile};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

pub fn parse_json<T: DeserializeOwned>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::parse(format!("{source}:{}:{}", e.line(), e.column()), e)
    })
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("serializing {}: {e}", path.display())))?;
    write_text(path, &(text + "\n"))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

/// A Hamiltonian file is either already a qubit operator or second-quantized data.
#[derive(Clone, Debug)]
pub enum HamiltonianInput {
    Pauli { op: PauliSum, unit: String },
    Fermion(FermionHamiltonianData),
}

impl HamiltonianInput {
    pub fn unit(&self) -> &str {
        match self {
            HamiltonianInput::Pauli { unit, .. } => unit,
            HamiltonianInput::Fermion(d) => &d.unit,
        }
    }

    pub fn qubit_operator(&self) -> Result<PauliSum> {
        match self {
            HamiltonianInput::Pauli { op, .. } => Ok(op.clone()),
            HamiltonianInput::Fermion(d) => d.to_qubit_operator(),
        }
    }
}

/// Distinguishes the two formats by their size field (`n_modes` vs `n_qubits`).
pub fn load_hamiltonian(path: &Path) -> Result<HamiltonianInput> {
    let text = read_text(path)?;
    let source = path.display().to_string();
    let value: serde_json::Value = parse_json(&text, &source)?;
    if value.get("n_modes").is_some() {
        let file: FermionHamiltonianFile = parse_json(&text, &source)?;
        let data = FermionHamiltonianData::from_file(&file).map_err(|e| locate(e, &source))?;
        checked_unit(HamiltonianInput::Fermion(data), &source)
    } else if value.get("n_qubits").is_some() {
        let file: PauliSumFile = parse_json(&text, &source)?;
        let op = PauliSum::from_file(&file).map_err(|e| locate(e, &source))?;
        let unit = file.unit.clone().unwrap_or_else(|| "kJ/mol".into());
        checked_unit(HamiltonianInput::Pauli { op, unit }, &source)
    } else {
        Err(Error::validation(
            source,
            "neither n_modes (fermionic) nor n_qubits (Pauli sum) is present",
        ))
    }
}

fn checked_unit(input: HamiltonianInput, source: &str) -> Result<HamiltonianInput> {
    super::run::unit_factor(input.unit()).map_err(|e| locate(e, source))?;
    Ok(input)
}

/// Prefix a validation location with the file it came from.
pub fn locate(e: Error, source: &str) -> Error {
    match e {
        Error::Validation { location, message } => Error::Validation {
            location: format!("{source}: {location}"),
            message,
        },
        Error::Parse { location, message } => Error::Parse {
            location: format!("{source}: {location}"),
            message,
        },
        Error::Input(m) => Error::Validation {
            location: source.to_string(),
            message: m,
        },
        other => other,
    }
}

/// Counts printed after a fermionic Hamiltonian is ingested.
#[derive(Clone, Debug, PartialEq)]
pub struct FermionSummary {
    pub n_modes: usize,
    pub one_body: usize,
    pub two_body: usize,
    pub max_one_body: f64,
    pub max_two_body: f64,
    pub unit: String,
}

impl FermionSummary {
    pub fn of(d: &FermionHamiltonianData) -> Self {
        let max = |it: &mut dyn Iterator<Item = f64>| it.fold(0.0, f64::max);
        FermionSummary {
            n_modes: d.n_modes(),
            one_body: d.one_body.len(),
            two_body: d.two_body.len(),
            max_one_body: max(&mut d.one_body.values().map(|c| c.norm())),
            max_two_body: max(&mut d.two_body.values().map(|c| c.norm())),
            unit: d.unit.clone(),
        }
    }
}

impl fmt::Display for FermionSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} modes, {} one-body and {} two-body entries, max |h1| = {:.4} {u}, max |h2| = {:.4} {u}",
            self.n_modes,
            self.one_body,
            self.two_body,
            self.max_one_body,
            self.max_two_body,
            u = self.unit
        )
    }
}

/// What a symmetry is used for once the operator is on the qubit register.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryRole {
    /// Removes a qubit.
    #[default]
    Taper,
    /// Kept for post-selection only.
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetrySpec {
    pub pauli: String,
    /// Sector sign; read off the reference occupation when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<i8>,
    #[serde(default)]
    pub role: SymmetryRole,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryFile {
    pub symmetries: Vec<SymmetrySpec>,
}
