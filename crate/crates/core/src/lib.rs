//! Average gate fidelity from reduced sets of input states.
//!
//! Simulated gates are [`channels::QuantumChannel`]s compared against a
//! [`channels::TargetGate`]. The [`fidelity`] module evaluates the
//! reduced-set estimators and the exact average fidelity, [`commutant`]
//! checks that a state set can tell unitaries apart, and [`experiment`]
//! runs the Monte Carlo ensembles behind the deviation statistics.

pub mod channels;
pub mod cli;
pub mod commutant;
pub mod error;
pub mod experiment;
pub mod fidelity;
pub mod linalg;
pub mod states;

pub use channels::{gate, GateName, MapOrder, QuantumChannel, TargetGate};
pub use error::{Error, Result};
pub use fidelity::{average_fidelity_exact, evaluate_set, FidelityReport};
pub use linalg::{ComplexMatrix, SeedStream, C64};
pub use states::{DensityOperator, ReducedStateSet};
