//! Finite-difference time stepping on star networks.

pub mod linalg;
mod scheme;
mod state;

pub use scheme::{
    assemble_system, bootstrap_first_level, interface_rhs, junction_flux_imbalance, run, Bootstrap, SteppingWorkspace,
    SystemMatrix,
};
pub use state::{path_coordinate, GridSpec, NetworkState, SolitaryPlacement};
