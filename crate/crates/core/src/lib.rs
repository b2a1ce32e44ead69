pub mod error;
pub mod numerics;

pub use error::{HsError, Result};
pub mod field;
pub mod special;
pub mod scattering;
pub mod singular;
pub mod asympt;
pub mod evolve;
pub mod harness;
