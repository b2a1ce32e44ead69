//! Quadrature, interpolation and differentiation kernels shared by the
//! physics modules.

pub mod diff;
pub mod interp;
pub mod quad;
