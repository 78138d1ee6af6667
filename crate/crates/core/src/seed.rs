//! Seed profiles `(phi1, phi2)` on the pulse coordinate `s in [0, 1]`, the
//! model parameters, and the shock criterion built from `phi1 * d_s phi1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{golden_section_min, CubicSpline};
use crate::solver::wave_speed;

/// Number of uniform samples used by [`shock_margin`] before refinement.
pub const MARGIN_SAMPLES: usize = 4096;

/// One scalar profile on `[0, 1]`; evaluates to zero outside that interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// `A sin(pi s)`. Only C^1 up to the endpoints.
    Sine { amplitude: f64 },
    /// `A exp(4 - 1/(s(1-s)))`, peak value `A` at `s = 1/2`; smooth with compact support.
    Bump { amplitude: f64 },
    /// `A s`.
    Ramp { slope: f64 },
    Tabulated(CubicSpline),
}

impl Profile {
    pub fn value(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Profile::Zero => 0.0,
            Profile::Sine { amplitude } => amplitude * (std::f64::consts::PI * s).sin(),
            Profile::Bump { amplitude } => amplitude * bump(s),
            Profile::Ramp { slope } => slope * s,
            Profile::Tabulated(sp) => sp.value(s),
        }
    }

    pub fn slope(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self {
            Profile::Zero => 0.0,
            Profile::Sine { amplitude } => {
                amplitude * std::f64::consts::PI * (std::f64::consts::PI * s).cos()
            }
            Profile::Bump { amplitude } => amplitude * bump_slope(s),
            Profile::Ramp { slope } => *slope,
            Profile::Tabulated(sp) => sp.derivative(s),
        }
    }

    /// Same profile multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Profile {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Sine { amplitude } => Profile::Sine {
                amplitude: amplitude * factor,
            },
            Profile::Bump { amplitude } => Profile::Bump {
                amplitude: amplitude * factor,
            },
            Profile::Ramp { slope } => Profile::Ramp {
                slope: slope * factor,
            },
            Profile::Tabulated(sp) => {
                let x = sp.knots().to_vec();
                let y = x.iter().map(|&s| factor * sp.value(s)).collect();
                Profile::Tabulated(CubicSpline::new(x, y).expect("knots already validated"))
            }
        }
    }
}

fn bump(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    (4.0 - 1.0 / (s * (1.0 - s))).exp()
}

fn bump_slope(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let w = s * (1.0 - s);
    let b = (4.0 - 1.0 / w).exp();
    if b == 0.0 {
        0.0
    } else {
        b * (1.0 - 2.0 * s) / (w * w)
    }
}

/// The seed pair `(phi1, phi2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedProfile {
    pub phi1: Profile,
    pub phi2: Profile,
}

impl SeedProfile {
    pub fn zero() -> Self {
        Self::new(Profile::Zero)
    }

    pub fn new(phi1: Profile) -> Self {
        Self {
            phi1,
            phi2: Profile::Zero,
        }
    }

    pub fn sine(amplitude: f64) -> Self {
        Self::new(Profile::Sine { amplitude })
    }

    pub fn bump(amplitude: f64) -> Self {
        Self::new(Profile::Bump { amplitude })
    }

    pub fn ramp(slope: f64) -> Self {
        Self::new(Profile::Ramp { slope })
    }

    /// Tabulated seed from samples `(s_i, phi1_i, phi2_i)`, interpolated by natural cubic splines.
    pub fn tabulated(s: &[f64], phi1: &[f64], phi2: &[f64]) -> Result<Self> {
        let make = |y: &[f64]| {
            CubicSpline::new(s.to_vec(), y.to_vec()).ok_or_else(|| {
                Error::InvalidSeed(
                    "tabulated seed needs >= 3 samples with strictly increasing s".into(),
                )
            })
        };
        let seed = Self {
            phi1: Profile::Tabulated(make(phi1)?),
            phi2: Profile::Tabulated(make(phi2)?),
        };
        seed.validate()?;
        Ok(seed)
    }

    /// Same seed family with `phi1` rescaled so that the shock margin equals `target`
    /// (for a given `G''(0)`). Fails when the family has no margin of the requested sign.
    pub fn with_margin(&self, g2: f64, target: f64) -> Result<Self> {
        let base = shock_margin_raw(&self.phi1, g2, MARGIN_SAMPLES)?.0;
        if target == 0.0 {
            return Ok(Self {
                phi1: self.phi1.scaled(0.0),
                phi2: self.phi2.clone(),
            });
        }
        if base == 0.0 || base.signum() != target.signum() {
            return Err(Error::InvalidSeed(format!(
                "cannot rescale seed with margin {base} to margin {target}"
            )));
        }
        Ok(Self {
            phi1: self.phi1.scaled((target / base).sqrt()),
            phi2: self.phi2.clone(),
        })
    }

    pub fn phi1(&self, s: f64) -> f64 {
        self.phi1.value(s)
    }

    pub fn dphi1(&self, s: f64) -> f64 {
        self.phi1.slope(s)
    }

    pub fn phi2(&self, s: f64) -> f64 {
        self.phi2.value(s)
    }

    /// `phi1(0) = 0` and finite values on a dense grid.
    pub fn validate(&self) -> Result<()> {
        let at_origin = match &self.phi1 {
            Profile::Tabulated(sp) => sp.value(0.0),
            p => p.value(0.0),
        };
        if at_origin.abs() > 1e-12 {
            return Err(Error::InvalidSeed(format!(
                "phi1(0) = {at_origin}, the pulse must vanish on the inner sphere"
            )));
        }
        for i in 0..=1024 {
            let s = i as f64 / 1024.0;
            let vals = [self.phi1(s), self.dphi1(s), self.phi2(s)];
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSeed(format!("non-finite profile value at s = {s}")));
            }
        }
        Ok(())
    }

    /// `max |phi1|` over `[0, 1]` on a dense grid.
    pub fn phi1_sup(&self) -> f64 {
        (0..=4096)
            .map(|i| self.phi1(i as f64 / 4096.0).abs())
            .fold(0.0, f64::max)
    }
}

/// `G''(0)`, pulse width and initial radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub g2: f64,
    pub delta: f64,
    pub r0: f64,
}

impl ModelParams {
    pub fn new(g2: f64, delta: f64, r0: f64) -> Result<Self> {
        if !g2.is_finite() {
            return Err(Error::InvalidModel(format!("g2 = {g2} is not finite")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidModel(format!("delta = {delta} must be positive")));
        }
        if !(r0 >= 2.0 && r0.is_finite()) {
            return Err(Error::InvalidModel(format!("r0 = {r0} must be >= 2")));
        }
        if delta >= r0 / 4.0 {
            return Err(Error::InvalidModel(format!(
                "delta = {delta} must be below r0/4 = {}",
                r0 / 4.0
            )));
        }
        Ok(Self { g2, delta, r0 })
    }

    /// Amplitude scale of `dt(phi)` on the initial annulus, `delta^{1/2}/r0`.
    pub fn pulse_amplitude(&self) -> f64 {
        self.delta.sqrt() / self.r0
    }

    /// Checks `1 + 3 g2 rho > 0` over the range of `rho = (dt phi)^2` the seed produces.
    pub fn check_hyperbolic(&self, seed: &SeedProfile) -> Result<()> {
        let p = self.pulse_amplitude() * seed.phi1_sup();
        wave_speed(p, self.g2).map(|_| ()).map_err(|_| {
            Error::InvalidModel(format!(
                "1 + 3 g2 rho <= 0 for the seed's peak dt(phi) = {p} (g2 = {})",
                self.g2
            ))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShockMargin {
    /// `min_s 3 G''(0) phi1(s) d_s phi1(s)`.
    pub margin: f64,
    /// Minimizing `s`.
    pub s_min: f64,
    /// `margin <= -1`.
    pub fires: bool,
}

fn margin_integrand(phi1: &Profile, g2: f64, s: f64) -> f64 {
    3.0 * g2 * phi1.value(s) * phi1.slope(s)
}

fn shock_margin_raw(phi1: &Profile, g2: f64, n: usize) -> Result<(f64, f64)> {
    let h = 1.0 / n as f64;
    let mut vals = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let s = i as f64 * h;
        let v = margin_integrand(phi1, g2, s);
        if !v.is_finite() {
            return Err(Error::InvalidSeed(format!("non-finite profile value at s = {s}")));
        }
        vals.push(v);
    }
    // discrete local minima, best three refined by golden section
    let mut cands: Vec<usize> = (0..=n)
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
            let right = if i == n { f64::INFINITY } else { vals[i + 1] };
            vals[i] <= left && vals[i] <= right
        })
        .collect();
    cands.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap());
    cands.truncate(3);
    let mut best = (0.0, f64::INFINITY);
    for i in cands {
        let a = if i == 0 { 0.0 } else { (i - 1) as f64 * h };
        let b = if i == n { 1.0 } else { (i + 1) as f64 * h };
        let (s, v) = golden_section_min(|s| margin_integrand(phi1, g2, s), a, b, 1e-13);
        let (s, v) = if vals[i] < v { (i as f64 * h, vals[i]) } else { (s, v) };
        if v < best.1 {
            best = (s, v);
        }
    }
    // the margin is a minimum of a quantity that vanishes outside the pulse
    if best.1 > 0.0 {
        best.1 = best.1.min(margin_integrand(phi1, g2, 0.0));
    }
    Ok((best.1, best.0))
}

/// Shock criterion margin on a 4096-sample grid with golden-section refinement.
pub fn shock_margin(seed: &SeedProfile, params: &ModelParams) -> Result<ShockMargin> {
    shock_margin_with_resolution(seed, params, MARGIN_SAMPLES)
}

pub fn shock_margin_with_resolution(
    seed: &SeedProfile,
    params: &ModelParams,
    n: usize,
) -> Result<ShockMargin> {
    let (margin, s_min) = shock_margin_raw(&seed.phi1, params.g2, n)?;
    // collapse signed zero so trivial seeds report 0
    let margin = if margin == 0.0 { 0.0 } else { margin };
    Ok(ShockMargin {
        margin,
        s_min,
        fires: margin <= -1.0,
    })
}

/// Leading-order time at which `mu = 1 + (1/|t| - 1/r0) margin` vanishes.
///
/// Returns `None` when the margin is non-negative or the zero falls after `t = -1`.
pub fn shock_time_from_margin(margin: f64, r0: f64) -> Option<f64> {
    if !(margin < 0.0) {
        return None;
    }
    let m = margin.abs();
    let abs_t = r0 * m / (r0 + m);
    (abs_t >= 1.0).then_some(-abs_t)
}

pub fn predicted_shock_time(seed: &SeedProfile, params: &ModelParams) -> Result<Option<f64>> {
    let m = shock_margin(seed, params)?;
    Ok(shock_time_from_margin(m.margin, params.r0))
}
