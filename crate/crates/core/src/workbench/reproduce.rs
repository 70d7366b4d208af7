//! Outcome probabilities of the two-qubit `exp(−iθ Y₀X₁)|00⟩` state in the Z basis.

use std::fmt;

use crate::bitstring::format_bits;
use crate::error::Result;
use crate::measurement::ShotTable;
use crate::simulator::{sample, Angle, Circuit, NoiseModel};

pub const TABLE_SHOTS: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbabilityTable {
    /// Hydrogen-chain point.
    IV,
    /// Iron point.
    V,
}

impl std::str::FromStr for ProbabilityTable {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IV" | "4" => Ok(ProbabilityTable::IV),
            "V" | "5" => Ok(ProbabilityTable::V),
            other => Err(crate::error::Error::input(format!("unknown table {other:?} (IV or V)"))),
        }
    }
}

impl ProbabilityTable {
    pub fn theta(self) -> f64 {
        match self {
            ProbabilityTable::IV => -0.09283,
            ProbabilityTable::V => -0.53038,
        }
    }

    /// Published noiseless `(P(00), P(11))`.
    pub fn published(self) -> (f64, f64) {
        match self {
            ProbabilityTable::IV => (0.9910, 0.0090),
            ProbabilityTable::V => (0.7447, 0.2553),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbabilityTable::IV => "IV",
            ProbabilityTable::V => "V",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableReport {
    pub table: ProbabilityTable,
    pub theta: f64,
    pub shots: u64,
    pub seed: u64,
    pub counts: ShotTable,
    pub analytic_p00: f64,
}

impl TableReport {
    pub fn probability(&self, outcome: u64) -> f64 {
        self.counts.counts.get(&outcome).copied().unwrap_or(0) as f64 / self.shots as f64
    }

    pub fn p00(&self) -> f64 {
        self.probability(0b00)
    }

    pub fn p11(&self) -> f64 {
        self.probability(0b11)
    }

    /// Every shot landed in `00` or `11`.
    pub fn two_outcome_support(&self) -> bool {
        self.counts.counts.keys().all(|&b| b == 0b00 || b == 0b11)
    }
}

/// The ansatz circuit measured directly in the computational basis.
pub fn table_circuit() -> Circuit {
    let mut c = Circuit::new(2, 1);
    c.pauli_exp("YX".parse().expect("valid word"), Angle::param(0));
    c.then_measure(&[])
}

pub fn reproduce_table(table: ProbabilityTable, shots: u64, seed: u64) -> Result<TableReport> {
    let theta = table.theta();
    let counts = sample(&table_circuit(), &[theta], shots, &NoiseModel::noiseless(), seed)?;
    Ok(TableReport {
        table,
        theta,
        shots,
        seed,
        counts,
        analytic_p00: theta.cos().powi(2),
    })
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (pub00, pub11) = self.table.published();
        writeln!(
            f,
            "Table {}: theta = {}, noiseless, {} shots, seed {}",
            self.table.name(),
            self.theta,
            self.shots,
            self.seed
        )?;
        writeln!(f, "outcome  sampled   analytic  published  |sampled-published|")?;
        for (b, analytic, published) in [
            (0b00u64, self.analytic_p00, pub00),
            (0b11, 1.0 - self.analytic_p00, pub11),
        ] {
            let p = self.probability(b);
            writeln!(
                f,
                "{:<8} {:<9.4} {:<9.4} {:<10.4} {:.4}",
                format_bits(b, 2),
                p,
                analytic,
                published,
                (p - published).abs()
            )?;
        }
        let c00 = self.counts.counts.get(&0).copied().unwrap_or(0);
        let c11 = self.counts.counts.get(&3).copied().unwrap_or(0);
        write!(
            f,
            "P(00) + P(11) = ({c00} + {c11}) / {} = {}",
            self.shots,
            if c00 + c11 == self.shots { "1 exactly" } else { "not 1" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        let r = reproduce_table(ProbabilityTable::IV, 1000, 1).unwrap();
        assert!((r.analytic_p00 - 0.99141).abs() < 1e-5);
        let r = reproduce_table(ProbabilityTable::V, 1000, 1).unwrap();
        assert!((r.analytic_p00 - 0.74410).abs() < 1e-5);
        assert!(r.two_outcome_support());
        assert!(r.to_string().contains("1 exactly"));
    }

    #[test]
    fn parse_names() {
        assert_eq!("iv".parse::<ProbabilityTable>().unwrap(), ProbabilityTable::IV);
        assert!("VI".parse::<ProbabilityTable>().is_err());
    }
}
