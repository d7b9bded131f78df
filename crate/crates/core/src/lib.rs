//! Simulation and analysis of quantum homogenization with partial-SWAP and
//! SWAP^alpha collisions.
//!
//! * [`linalg`]: dense complex matrices, partial traces, matrix functions.
//! * [`states`]: density matrices and distance measures.
//! * [`gates`]: exchange gates, their CNOT decomposition, circuits.
//! * [`protocol`]: the sequential collision driver and convergence metrics.
//! * [`channels`]: Kraus channels, Stinespring dilations, recovery analysis.
//! * [`qasm`]: OpenQASM 2.0 emission and parsing.
//! * [`experiment`]: experiment specs and CSV/JSON output.

pub mod error;
pub mod gates;
pub mod linalg;
pub mod protocol;
pub mod states;
pub mod channels;
pub mod qasm;
pub mod experiment;

pub use error::{Error, Result};
