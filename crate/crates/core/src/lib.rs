pub mod bitstring;
pub mod clifford;
pub mod error;
pub mod fermion;
pub mod measurement;
pub mod mitigation;
pub mod pauli;
pub mod simulator;
pub mod symmetry;
pub mod variational;

pub use error::{Error, Result};
pub mod workbench;
