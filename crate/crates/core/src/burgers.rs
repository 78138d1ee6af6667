//! Inviscid Burgers `dt u + u dx u = 0` by characteristics `x = x0 + u0(x0) t`.
//! The inverse density `mu = -1/dx u` obeys `Lb mu = -1` exactly, so
//! `mu(t; x0) = -1/u0'(x0) - t`. The fan differencing of [`crate::optical`]
//! applied to these straight characteristics must reproduce it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optical::FanSlice;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum BurgersProfile {
    /// `u0 = offset + slope x`.
    Linear { offset: f64, slope: f64 },
    /// `u0 = amplitude sin(x)`.
    Sine { amplitude: f64 },
}

impl BurgersProfile {
    pub fn u0(&self, x: f64) -> f64 {
        match *self {
            BurgersProfile::Linear { offset, slope } => offset + slope * x,
            BurgersProfile::Sine { amplitude } => amplitude * x.sin(),
        }
    }

    pub fn du0(&self, x: f64) -> f64 {
        match *self {
            BurgersProfile::Linear { slope, .. } => slope,
            BurgersProfile::Sine { amplitude } => amplitude * x.cos(),
        }
    }

    /// Minimum of `u0'` over `[a, b]`.
    pub fn min_slope(&self, a: f64, b: f64) -> f64 {
        match *self {
            BurgersProfile::Linear { slope, .. } => slope,
            BurgersProfile::Sine { amplitude } => {
                // extrema of cos are at multiples of pi
                let mut best = self.du0(a).min(self.du0(b));
                let k0 = (a / std::f64::consts::PI).ceil() as i64;
                let k1 = (b / std::f64::consts::PI).floor() as i64;
                for k in k0..=k1 {
                    best = best.min(amplitude * (k as f64 * std::f64::consts::PI).cos());
                }
                best
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurgersProblem {
    pub profile: BurgersProfile,
    pub x_min: f64,
    pub x_max: f64,
}

impl BurgersProblem {
    pub fn new(profile: BurgersProfile, x_min: f64, x_max: f64) -> Result<Self> {
        if !(x_max > x_min && x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "empty x-domain [{x_min}, {x_max}]"
            )));
        }
        Ok(Self {
            profile,
            x_min,
            x_max,
        })
    }

    /// `n` uniformly spaced characteristic feet covering the domain.
    pub fn feet(&self, n: usize) -> Vec<f64> {
        let h = (self.x_max - self.x_min) / (n - 1) as f64;
        (0..n).map(|i| self.x_min + i as f64 * h).collect()
    }
}

/// `-1 / min u0'` when the minimum is negative.
pub fn burgers_shock_time(problem: &BurgersProblem) -> Option<f64> {
    let m = problem.profile.min_slope(problem.x_min, problem.x_max);
    (m < 0.0).then(|| -1.0 / m)
}

/// Closed-form inverse density along the characteristic from `x0`.
pub fn burgers_mu(problem: &BurgersProblem, x0: f64, t: f64) -> Result<f64> {
    let d = problem.profile.du0(x0);
    if d == 0.0 {
        return Err(Error::InfiniteInitialMu { x0 });
    }
    Ok(-1.0 / d - t)
}

/// Fan-measured inverse density at time `t` for the given feet.
pub fn burgers_fan_mu(problem: &BurgersProblem, feet: &[f64], t: f64) -> Result<Vec<f64>> {
    let offsets: Vec<f64> = feet.iter().map(|&x| problem.profile.u0(x) * t).collect();
    let weights = feet
        .iter()
        .map(|&x| {
            let d = problem.profile.du0(x);
            if d == 0.0 {
                Err(Error::InfiniteInitialMu { x0: x })
            } else {
                Ok(-1.0 / d)
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    FanSlice {
        labels: feet,
        base_slope: 1.0,
        offsets: &offsets,
        weights: &weights,
    }
    .mu()
}

/// Step of the characteristic-crossing scan.
pub const CROSSING_SCAN_DT: f64 = 1e-3;

/// First time on the scan grid `k * dt` at which two neighbouring characteristics meet or cross.
pub fn first_crossing(problem: &BurgersProblem, feet: &[f64], dt: f64, t_max: f64) -> Option<f64> {
    let u: Vec<f64> = feet.iter().map(|&x| problem.profile.u0(x)).collect();
    let steps = (t_max / dt).ceil() as usize;
    (0..=steps).map(|k| k as f64 * dt).find(|&t| {
        feet.windows(2)
            .zip(u.windows(2))
            .any(|(x, v)| x[1] + v[1] * t <= x[0] + v[0] * t)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurgersReport {
    pub problem: BurgersProblem,
    pub n_rays: usize,
    pub t_end: f64,
    pub t_star: Option<f64>,
    pub t_star_detected: Option<f64>,
    pub scan_dt: f64,
    /// `max |mu_fan - mu_exact|` over rays and check times.
    pub max_abs_error: f64,
    /// Check times in `[0, t_end]`.
    pub check_times: Vec<f64>,
    pub max_abs_error_per_time: Vec<f64>,
    pub passed: bool,
}

/// Tolerance on the fan-measured inverse density.
pub const FAN_TOLERANCE: f64 = 1e-6;

/// Compares fan-differenced `mu` with the closed form at 11 times in `[0, t_end]`,
/// and scans for the first characteristic crossing.
pub fn burgers_fan_validate(
    problem: &BurgersProblem,
    n_rays: usize,
    t_end: f64,
) -> Result<BurgersReport> {
    if n_rays < 3 {
        return Err(Error::InsufficientRays(n_rays));
    }
    let t_star = burgers_shock_time(problem);
    if let Some(ts) = t_star {
        if t_end >= ts {
            return Err(Error::InvalidArgument(format!(
                "t_end = {t_end} must precede the shock time {ts}"
            )));
        }
    }
    if t_end < 0.0 {
        return Err(Error::InvalidArgument(format!("t_end = {t_end} < 0")));
    }
    let feet = problem.feet(n_rays);
    let check_times: Vec<f64> = (0..=10).map(|k| t_end * k as f64 / 10.0).collect();
    let mut per_time = Vec::with_capacity(check_times.len());
    for &t in &check_times {
        let fan = burgers_fan_mu(problem, &feet, t)?;
        let mut worst: f64 = 0.0;
        for (&x, m) in feet.iter().zip(&fan) {
            worst = worst.max((m - burgers_mu(problem, x, t)?).abs());
        }
        per_time.push(worst);
    }
    let max_abs_error = per_time.iter().copied().fold(0.0, f64::max);
    let t_max = t_star.map_or(0.0, |t| 2.0 * t);
    let t_star_detected = t_star.and_then(|_| first_crossing(problem, &feet, CROSSING_SCAN_DT, t_max));
    let timing_ok = match (t_star, t_star_detected) {
        (Some(a), Some(b)) => (a - b).abs() <= CROSSING_SCAN_DT * (1.0 + 1e-9),
        (None, None) => true,
        _ => false,
    };
    Ok(BurgersReport {
        problem: *problem,
        n_rays,
        t_end,
        t_star,
        t_star_detected,
        scan_dt: CROSSING_SCAN_DT,
        max_abs_error,
        check_times,
        max_abs_error_per_time: per_time,
        passed: max_abs_error <= FAN_TOLERANCE && timing_ok,
    })
}
