//! Stray-field variational principles, micromagnetic energy minimization
//! and thin-shell limit studies on a staggered Cartesian grid.

pub mod cg;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod kernel_fields;
pub mod magnetostatics;
pub mod minimize;
pub mod thin_shell;
pub mod vec3;

pub use error::{MagError, Result};
