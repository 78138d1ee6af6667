use thiserror::Error;

use crate::solver::FieldState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid seed: {0}")]
    InvalidSeed(String),

    #[error("invalid model parameters: {0}")]
    InvalidModel(String),

    /// `1 + 3 G''(0) p^2` dropped below the hyperbolicity floor.
    #[error("hyperbolicity lost at t = {t}, r = {r}: dt(phi) = {p}")]
    Hyperbolicity {
        t: f64,
        r: f64,
        p: f64,
        snapshot: Option<Box<FieldState>>,
    },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    /// The admissible time step collapsed, which only happens next to a shock.
    #[error("time step collapsed to {dt:e} at t = {t} (near-shock abort)")]
    CflCollapse { t: f64, dt: f64 },

    #[error("sample point r = {r} lies outside the stored field window")]
    OutsideWindow { r: f64 },

    #[error("fan needs at least 3 rays, got {0}")]
    InsufficientRays(usize),

    #[error("time {t} is outside the recorded fan window [{start}, {end}]")]
    OutsideRecord { t: f64, start: f64, end: f64 },

    #[error("slice at t = {t} is invalid: mu = {mu} at ub = {ub}")]
    SliceInvalid { t: f64, ub: f64, mu: f64 },

    /// `u0'(x0) = 0`: the characteristic never focuses and its initial inverse density is infinite.
    #[error("u0'({x0}) = 0: initial inverse density is infinite")]
    InfiniteInitialMu { x0: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
