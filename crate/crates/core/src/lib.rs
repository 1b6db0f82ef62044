//! Steady-state and dynamical models of a driven spin resonator.
//!
//! Two competing descriptions of drive-induced bistability are implemented
//! side by side:
//!
//! * a nonlinear master equation for a small ensemble of spins 1/2, whose
//!   added disentanglement term can produce multiple steady states
//!   ([`master`], built on the operator algebra in [`operators`]);
//! * its mean-field reduction, a cubic steady-state equation with full
//!   fold/cusp analytics ([`rd`]);
//! * the bosonized Duffing–Kerr resonator with the analogous analytics,
//!   reflectivity, and basins of attraction ([`dk`]).
//!
//! Supporting modules cover the classical precession limit ([`classical`]),
//! intermodulation conversion gain ([`imd`]), and a fitting pipeline that
//! normalizes measured peak/jump points and ranks the two models against
//! them ([`fit`]).
//!
//! Grid-shaped work (stability maps, basins) runs on rayon when the default
//! `parallel` feature is enabled and falls back to sequential loops without
//! it; `benches/maps.rs` compares the two.

pub mod classical;
pub mod dk;
pub mod error;
pub mod fit;
pub mod imd;
pub mod mapgrid;
pub mod master;
pub mod numeric;
pub mod operators;
pub mod parallel;
pub mod params;
pub mod rd;

pub use error::Error;

/// Shorthand used throughout for fallible operations.
pub type Result<T> = std::result::Result<T, Error>;
