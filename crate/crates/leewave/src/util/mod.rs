//! Shared numerical utilities: splines, quadrature, root finding, special
//! functions, and ODE integration wrappers.

pub mod ode;
pub mod quad;
pub mod roots;
pub mod special;
pub mod spline;
