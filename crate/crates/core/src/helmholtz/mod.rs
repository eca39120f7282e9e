//! Finite-difference Helmholtz modeling with PML, forward and data-assimilated solves.

mod acquisition;
mod augmented;
mod pml;
mod system;

pub use acquisition::{ricker, ricker_spectrum, solve_forward, source_vector, ObservationOperator, SourceTerm};
pub use augmented::{augmented_wavefield_solve, AugmentedSystem};
pub use pml::{Domain, PmlProfile};
pub use system::{
    assemble, HelmholtzSystem, Stencil, NINE_POINT_LAPLACIAN_MIX, NINE_POINT_MASS_CENTER,
    NINE_POINT_MASS_EDGE,
};
