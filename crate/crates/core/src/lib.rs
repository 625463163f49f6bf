//! Data-driven H∞ norm estimation for stable discrete-time SISO systems.
//!
//! The plant is excited batch by batch without ever resetting its state. Under
//! a period-`N` input the steady-state batch map is a circulant matrix, and
//! time-reversing its output turns it into a symmetric reversed-circulant
//! operator whose eigenvalues are `±|P(e^{-jω_m})|`. A shifted power iteration
//! run purely through experiments therefore converges to the peak gain on the
//! DFT grid. The reset-based iteration on the finite-horizon Toeplitz operator
//! is kept as the baseline.
//!
//! Module map:
//!
//! * [`lti`] — state-space and transfer-function models, simulation, frequency
//!   response, the dense-grid H∞ oracle, spectral radius, system-spec files.
//! * [`lifting`] — batch lifting `(F, G, H, J)`, the periodic response matrix
//!   and its circulant coefficients.
//! * [`spectral`] — DFT matrix, circulant and reversed-circulant spectra,
//!   time reversal, the Jacobi eigenvalue oracle and reset-based gain.
//! * [`plant`] — the black-box experiment boundary.
//! * [`estimator`] — reset-free and reset-based power iterations.
//! * [`harness`] — the `analyze`, `sweep`, `estimate` and `oracle` commands.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod lifting;
pub mod lti;
pub mod plant;
pub mod spectral;

pub use nalgebra;

pub use error::{Error, Result};
pub use estimator::{EstimateTrace, PowerIterationConfig};
pub use lifting::{CirculantSpec, LiftedBatchSystem};
pub use lti::{FrequencyResponse, RationalTransferFunction, StateSpace, SystemModel};
pub use plant::{BatchExperiment, BatchRecord, PlantMode, PlantSession, SteadyStatePlant};
pub use spectral::{CirculantSpectrum, DftMatrix, ReversedSpectrum};
