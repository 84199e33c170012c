//! Classical simulation and verification of digitally Trotterized lattice
//! gauge theories with finite gauge groups and staggered fermions.

pub mod atomic;
pub mod bounds;
pub mod engine;
pub mod error;
pub mod group;
pub mod lattice;
pub mod hamiltonian;
pub mod linalg;
pub mod local;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
pub use group::{GroupKind, GroupSpec, C64};
pub use lattice::{LatticeShape, LinkId, Parity, PlaquetteId};
pub use linalg::LinearOperator;
pub use state::{RegisterLayout, StateVector};
