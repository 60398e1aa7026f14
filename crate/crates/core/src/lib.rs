//! Simulation of the generalized Benjamin–Bona–Mahony–Burgers equation
//!
//! ```text
//! (1 - μᵢ² ∂ₓ²) uᵢ,ₜ + ∂ₓ(αᵢ uᵢ + γᵢ uᵢ^{p+1}/(p+1)) - νᵢ uᵢ,ₓₓ = 0
//! ```
//!
//! on star networks of semi-infinite edges with per-edge coefficients,
//! coupled at the junction by continuity and a mass-conserving flux balance.
//!
//! - [`network`]: edges, coefficients and validation.
//! - [`waves`]: solitary waves, Green's function and kernel.
//! - [`fd`]: the implicit leapfrog finite-difference stepper.
//! - [`picard`]: a fixed-point integral-equation solver used as an oracle.
//! - [`diagnostics`]: mass, energy, energy-rate and reflection detection.

pub mod diagnostics;
pub mod error;
pub mod fd;
pub mod network;
pub mod picard;
pub mod waves;

pub use diagnostics::{
    boundary_contact_time, delta_mass_series, detect_reflection, energy, energy_rate_rhs, mass, DeltaMassSeries,
    DiagnosticsRecord, DiagnosticsRecorder, ReflectionCriterion, ReflectionVerdict,
};
pub use error::{Error, Result};
pub use fd::{assemble_system, run, Bootstrap, GridSpec, NetworkState, SolitaryPlacement, SteppingWorkspace};
pub use network::{EdgeSpec, GwpClass, JunctionCondition, Orientation, StarNetwork};
pub use picard::{picard_solve, JunctionOdeParams, PicardReport, PicardSolution, QuadratureGrid, SpaceTimeSamples};
pub use waves::{anti_solitary_depth, GreensSpec, SolitaryWaveParams};
