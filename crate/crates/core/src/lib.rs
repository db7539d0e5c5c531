//! Robustness of coherence for finite-dimensional quantum states.
//!
//! The robustness of coherence `C_R(rho)` is the least weight `s` such that
//! `(rho + s tau) / (1 + s)` is diagonal for some state `tau`. This crate
//! evaluates it exactly with a built-in interior-point SDP solver, returns
//! primal/dual certificates, evaluates closed forms and bounds, and checks
//! the phase-discrimination characterization numerically.

pub mod eigen;
pub mod error;
pub mod games;
pub mod json;
pub mod matrix;
pub mod oracle;
pub mod random;
pub mod roc;
pub mod sdp;
pub mod state;
pub mod witness;

pub use error::{Error, Result};
pub use matrix::{dephase, hermitian_basis, norms, ComplexMatrix, HermitianMatrix, Norms, C64};
pub use state::{l1_coherence, relative_entropy_coherence, swap_purity_check, DensityMatrix, PureState};
