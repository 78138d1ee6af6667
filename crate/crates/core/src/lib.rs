//! Numerical laboratory for shock formation in the spherically symmetric
//! quasilinear wave equation `-(1 + 3 g2 (dt phi)^2) dt^2 phi + Laplacian phi = 0`
//! with short-pulse data.
//!
//! The pipeline is: seed profiles ([`seed`]) and initial data ([`data`]),
//! the radial evolution ([`solver`]), the incoming characteristic fan and
//! the inverse density `mu` ([`optical`]), shock diagnostics ([`shock`]),
//! slice energies ([`energy`]), and the Burgers oracle ([`burgers`]).

pub mod burgers;
pub mod data;
pub mod energy;
pub mod error;
pub mod numerics;
pub mod optical;
pub mod pipeline;
pub mod seed;
pub mod shock;
pub mod solver;

pub use error::{Error, Result};
