//! Airborne radar clutter simulation and sparse-recovery space-time adaptive
//! processing (STAP).
//!
//! The crate is organized bottom-up:
//!
//! - [`radar_scene`]: ULA geometry with arbitrary crab angle, steering vectors,
//!   clutter patches, training snapshots, exact and sample covariances.
//! - [`ongrid_sr`]: discretized angle-Doppler dictionary and the FOCUSS
//!   sparse-recovery baseline.
//! - [`toeplitz_ops`]: two-level (block) Toeplitz algebra and the projections
//!   used by the SDP solver.
//! - [`sdp_core`]: ADMM solver for the weighted trace-minimization SDP.
//! - [`gridless_stap`]: reweighted atomic norm minimization (RAM), its ANM
//!   special case, and covariance reconstruction from the recovered Toeplitz
//!   structure.
//! - [`stap_eval`]: adaptive weights, SINR loss, eigenspectra, Capon maps.
//!
//! All matrices are dense `nalgebra` matrices of [`C64`]. Space-time vectors
//! are ordered Doppler-major: element `n * M + m` belongs to pulse `n` and
//! array element `m`.

pub mod error;
pub mod gridless_stap;
pub mod linalg;
pub mod ongrid_sr;
pub mod radar_scene;
pub mod sdp_core;
pub mod stap_eval;
pub mod toeplitz_ops;

pub use error::{Result, StapError};

/// Complex double used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
