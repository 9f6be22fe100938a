//! Phase-space structure of two- and three-degree-of-freedom Hamiltonians
//! with index-1 saddles.
//!
//! The crate computes Lagrangian-descriptor maps on isoenergetic slices and
//! the unstable periodic orbits, monodromy spectra and tube manifolds used to
//! check them.

pub mod error;
pub mod integrate;
pub mod io;
pub mod model;
pub mod par;
pub mod po;
pub mod section;
pub mod ld;
pub mod slice;

pub use error::{Error, Result};
pub use integrate::{
    find_events, integrate, integrate_sampled, integrate_to_event, integrate_with_stm, Direction, EventRun, EventSpec,
    IntegratorConfig, Sampling, StmMatrix, Termination, Trajectory,
};
pub use model::{
    ConfigWindow, EnergySpec, Equilibrium, EquilibriumKind, MaskGrid, Params2D, Params3D, PhaseState, SaddleChoice,
    SaddleEigensystem, Symmetry, SystemModel,
};
pub use slice::{momentum_on_shell, SliceSpec};
