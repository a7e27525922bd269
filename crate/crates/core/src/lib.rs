//! Simulation and numerical analysis of Muller's ratchet.
//!
//! * [`params`]: derived quantities, the γ scaling, rescaled mean-reversion
//!   coefficients and Haigh's empirical click time.
//! * [`profile`] and [`deterministic`]: frequency profiles and the exact
//!   infinite-population dynamics.
//! * [`forward_sim`]: Wright-Fisher and Fleming-Viot simulators with click
//!   detection and recorders.
//! * [`diffusion1d`]: one-dimensional diffusions for the best class, their
//!   scale/speed functions and Green functions.
//! * [`experiments`]: rate sweeps, phase-plane regression, occupation and
//!   click-entry comparisons.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod deterministic;
pub mod diffusion1d;
pub mod error;
pub mod experiments;
pub mod forward_sim;
pub mod io;
pub mod params;
pub mod profile;
pub mod quad;
pub mod rng;

pub use error::{Error, Result};
pub use params::{derive_params, DerivedParams, RatchetParams, Regime};
pub use profile::{CumulantVector, TypeProfile};
