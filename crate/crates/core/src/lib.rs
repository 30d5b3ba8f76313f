//! Explicit finite-difference solver for the graph mean curvature flow
//!
//! ```text
//! u_t - a^ij(Du) u_ij = -f(x, u, Du)   in Ω × [0, ∞)
//! ∂u/∂γ = ψ(x, u)                      on ∂Ω × [0, ∞)
//! ```
//!
//! on planar domains with smooth boundary (plus a one-dimensional analog), together
//! with a harness that measures the a priori estimates such flows obey: the
//! maximum principle for `u_t`, linear growth of `sup |u - u0|`, boundary-band and
//! interior gradient bounds, and the barrier function used for boundary gradient
//! estimates.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: domains, distance function, inward normal and the lattice.
//! * [`field`]: grid functions.
//! * [`operator`]: the coefficient matrix `a^ij(p)`, stencils and forcing terms.
//! * [`boundary`]: ghost-node enforcement of Neumann and contact-angle data.
//! * [`stepper`]: forward Euler time integration and the solver trace.
//! * [`estimates`]: the verification harness.
//! * [`scenario`]: run configuration, presets, output files and replay.

pub mod boundary;
pub mod error;
pub mod estimates;
pub mod field;
pub mod geometry;
pub mod initial;
pub mod lagrange;
pub mod operator;
pub mod oracle;
pub mod scenario;
pub mod stepper;

pub use error::{FlowError, Result};

/// A point (or vector) in the plane. One-dimensional problems use the first
/// component only and keep the second at zero.
pub type Point = [f64; 2];
