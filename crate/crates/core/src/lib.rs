//! Discontinuous Galerkin solver for one-dimensional Poisson–Nernst–Planck systems.
//!
//! The scheme evolves each species concentration through its chemical potential
//! `p_i = q_i ψ + log c_i`, which makes total mass conservation and decay of the
//! discrete free energy structural properties of the discretization. Concentrations
//! are kept positive by an average-preserving limiter applied before every stage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod convergence;
pub mod error;
pub mod field;
pub mod limiter;
pub mod mesh;
pub mod output;
pub mod poisson;
pub mod profile;
pub mod scenario;
pub mod stepper;
pub mod transport;

pub use error::{DgError, Result};
