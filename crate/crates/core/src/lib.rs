//! Interferometric partial-transpose (iPPT) entanglement detection.
//!
//! The overlap `Tr(rho sigma^{T_A})` of a target state with a partially
//! transposed reference is negative only for entangled `rho`. It equals the
//! expectation of `Phi+_A (x) SWAP_B` on `rho (x) sigma`, which a single layer
//! of Bell-state measurements between corresponding qubits estimates without
//! bias. This crate provides:
//!
//! - [`qmath`]: dense complex linear algebra and random states,
//! - [`states`]: named states, synthetic ensembles and the JSON state format,
//! - [`circuits`]: the layered rotation/CNOT ansatz with exact gradients,
//! - [`detection`]: exact PPT, iPPT, purity and fidelity-witness criteria and
//!   the variational drivers,
//! - [`bsm`]: Bell-measurement distributions, the shot estimator and the
//!   visibility model,
//! - [`harness`]: ensemble studies, phase sweeps and the CLI.

pub mod bsm;
pub mod circuits;
pub mod detection;
pub mod error;
pub mod harness;
pub mod par;
pub mod qmath;
pub mod rng;
pub mod states;

pub use error::{Error, Result};
