//! Topological quantum numbers of the integer quantum Hall effect.
//!
//! Three independent routes to the Hall conductance of the Hofstadter model:
//!
//! * [`diophantine`]: exact gap labels from `r = s q + t p`;
//! * [`berry`]: Chern numbers of filled bands by the link-variable method;
//! * [`fredholm`]: the finite-volume relative index `Tr (P - U P U*)^3`.
//!
//! [`butterfly`] turns the labels into the colored phase diagrams of the
//! tight-binding model and of a split Landau level.
//!
//! Units: hopping = hbar = c = e = 1, conductances in units of e^2/h.

pub mod berry;
pub mod butterfly;
pub mod diophantine;
pub mod error;
pub mod fredholm;
pub mod hofstadter;

pub use error::{Error, Result};
pub use hofstadter::{reduce_flux, RationalFlux};

pub use num_complex::Complex64 as c64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
