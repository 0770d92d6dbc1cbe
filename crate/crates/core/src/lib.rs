//! Stationary densities of diffusively perturbed flows on the circle and the
//! 2-torus, with the tools to check how they approach the unperturbed
//! invariant measure as the noise vanishes.
//!
//! * [`fields`]: sampled periodic functions and spectral calculus.
//! * [`circle_fpe`]: stationary Fokker-Planck solvers on the circle, residual
//!   norms and the explicit residual bounds.
//! * [`sde`]: Stratonovich SDE ensembles and occupation measures.
//! * [`gradient`]: Gibbs densities of gradient flows and their concentration.
//! * [`torus_vp`]: divergence-free flows on the torus under homogeneous noise.
//! * [`order`]: log-log order fitting.

pub mod circle_fpe;
pub mod error;
pub mod fields;
pub mod gradient;
pub(crate) mod linalg;
pub mod order;
pub mod sde;
pub mod torus_vp;

pub use error::{Error, Result};
