#![allow(dead_code)]

use std::f64::consts::PI;

use shocklab_core::pipeline::RunSpec;
use shocklab_core::seed::{ModelParams, SeedProfile};

/// Margin of the default shock seed.
pub const SHOCK_MARGIN: f64 = -1.5 * PI;
/// Margin of the seed that does not shock before `t = -1`.
pub const QUIET_MARGIN: f64 = -0.5;

pub fn shock_seed() -> SeedProfile {
    SeedProfile::bump(1.0).with_margin(1.0, SHOCK_MARGIN).unwrap()
}

pub fn sine_shock_seed() -> SeedProfile {
    SeedProfile::sine(1.0).with_margin(1.0, SHOCK_MARGIN).unwrap()
}

pub fn quiet_seed() -> SeedProfile {
    SeedProfile::bump(1.0).with_margin(1.0, QUIET_MARGIN).unwrap()
}

pub fn params(g2: f64, delta: f64, r0: f64) -> ModelParams {
    ModelParams::new(g2, delta, r0).unwrap()
}

pub fn spec(seed: SeedProfile, p: ModelParams, cpd: usize) -> RunSpec {
    let mut s = RunSpec::new(seed, p);
    s.cells_per_delta = cpd;
    s
}

/// `rel` relative change between two positive numbers, as a ratio `>= 1`.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    max / min
}
