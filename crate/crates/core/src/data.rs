//! Short-pulse initial data on the slice `t = -r0`.
//!
//! On the annulus `r0 <= r <= r0 + delta`, with `s = (r - r0)/delta`,
//! `phi = delta^{3/2}/r0 * phi0(s)` and `dt phi = delta^{1/2}/r0 * phi1(s)`.
//! `phi0` solves a linear second-order ODE forced by `phi1`, which keeps the
//! pulse incoming: `Lb phi = dt phi - c dr phi` is of size `delta^{3/2}/r0^2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::hermite;
use crate::seed::{ModelParams, SeedProfile};
use crate::solver::{wave_speed, FieldState, GridSpec, LocalField, LocalFieldSource};

/// Minimum number of cells across the pulse annulus.
pub const MIN_CELLS_PER_DELTA: usize = 64;

/// Which ODE determines `phi0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phi0Equation {
    /// `phi0'' + (delta/r0) phi0' - phi1'/c = (delta^2/r0^4) phi2`.
    #[default]
    Constraint,
    /// Constraint form with the extra damping `(3/(2c)) g2 phi1 (delta/r0)(1 + c^2) phi0'`.
    AsStated,
    /// `phi0'' - phi1'/c = 0`.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi0Options {
    pub equation: Phi0Equation,
    pub n_samples: usize,
}

impl Default for Phi0Options {
    fn default() -> Self {
        Self {
            equation: Phi0Equation::Constraint,
            n_samples: 4096,
        }
    }
}

/// `phi0` and its slope on a uniform grid of `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phi0Profile {
    pub phi0: Vec<f64>,
    pub dphi0: Vec<f64>,
    pub ddphi0: Vec<f64>,
}

struct Phi0Rhs<'a> {
    seed: &'a SeedProfile,
    params: ModelParams,
    equation: Phi0Equation,
}

impl Phi0Rhs<'_> {
    /// `phi0''` given `s` and `phi0'`.
    fn eval(&self, s: f64, v: f64) -> Result<f64> {
        let ModelParams { g2, delta, r0 } = self.params;
        let psi = self.params.pulse_amplitude() * self.seed.phi1(s);
        let (c, _) = wave_speed(psi, g2).map_err(|_| {
            Error::InvalidModel(format!(
                "1 + 3 g2 rho <= 0 along the phi0 integration at s = {s}"
            ))
        })?;
        let forcing = self.seed.dphi1(s) / c;
        Ok(match self.equation {
            Phi0Equation::Reduced => forcing,
            Phi0Equation::Constraint => {
                -(delta / r0) * v + forcing + delta * delta / r0.powi(4) * self.seed.phi2(s)
            }
            Phi0Equation::AsStated => {
                let damping = delta / r0
                    + 1.5 / c * g2 * self.seed.phi1(s) * (delta / r0) * (1.0 + c * c);
                -damping * v + forcing + delta * delta / r0.powi(4) * self.seed.phi2(s)
            }
        })
    }
}

/// Integrates the `phi0` ODE from `phi0(0) = phi0'(0) = 0` with the classical RK4 method, step `1/n_samples`.
pub fn solve_phi0_ode(
    seed: &SeedProfile,
    params: &ModelParams,
    options: Phi0Options,
) -> Result<Phi0Profile> {
    let n = options.n_samples;
    if n < 64 {
        return Err(Error::Resolution(format!("n_samples = {n} < 64")));
    }
    seed.validate()?;
    let rhs = Phi0Rhs {
        seed,
        params: *params,
        equation: options.equation,
    };
    let h = 1.0 / n as f64;
    let mut phi0 = Vec::with_capacity(n + 1);
    let mut dphi0 = Vec::with_capacity(n + 1);
    let mut ddphi0 = Vec::with_capacity(n + 1);
    let (mut y, mut v) = (0.0, 0.0);
    for i in 0..=n {
        let s = i as f64 * h;
        phi0.push(y);
        dphi0.push(v);
        ddphi0.push(rhs.eval(s, v)?);
        if i == n {
            break;
        }
        let k1y = v;
        let k1v = ddphi0[i];
        let k2y = v + 0.5 * h * k1v;
        let k2v = rhs.eval(s + 0.5 * h, k2y)?;
        let k3y = v + 0.5 * h * k2v;
        let k3v = rhs.eval(s + 0.5 * h, k3y)?;
        let k4y = v + h * k3v;
        let k4v = rhs.eval(s + h, k4y)?;
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    }
    Ok(Phi0Profile {
        phi0,
        dphi0,
        ddphi0,
    })
}

impl Phi0Profile {
    pub fn n_samples(&self) -> usize {
        self.phi0.len() - 1
    }

    fn cell(&self, s: f64) -> (usize, f64, f64) {
        let n = self.n_samples();
        let h = 1.0 / n as f64;
        let x = (s / h).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        (i, x - i as f64, h)
    }

    /// `phi0(s)`; zero for `s <= 0` and held at `phi0(1)` beyond `s = 1`.
    pub fn value(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let (i, t, h) = self.cell(s.min(1.0));
        hermite(t, h, self.phi0[i], self.dphi0[i], self.phi0[i + 1], self.dphi0[i + 1])
    }

    /// `phi0'(s)` on `[0, 1]`, zero outside.
    pub fn slope(&self, s: f64) -> f64 {
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        let (i, t, h) = self.cell(s);
        hermite(t, h, self.dphi0[i], self.ddphi0[i], self.dphi0[i + 1], self.ddphi0[i + 1])
    }

    pub fn max_abs_slope(&self) -> f64 {
        self.dphi0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Analytic description of the data: evaluates the profile at any radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProfile {
    pub params: ModelParams,
    pub seed: SeedProfile,
    pub phi0: Phi0Profile,
    pub equation: Phi0Equation,
}

impl PulseProfile {
    pub fn new(seed: &SeedProfile, params: &ModelParams, options: Phi0Options) -> Result<Self> {
        params.check_hyperbolic(seed)?;
        let phi0 = solve_phi0_ode(seed, params, options)?;
        Ok(Self {
            params: *params,
            seed: seed.clone(),
            phi0,
            equation: options.equation,
        })
    }

    /// Coefficient `A` of the exterior tail `phi = A / r`.
    pub fn tail_coefficient(&self) -> f64 {
        let ModelParams { delta, r0, .. } = self.params;
        delta.powf(1.5) / r0 * self.phi0.value(1.0) * (r0 + delta)
    }

    fn second_slope(&self, s: f64) -> Result<f64> {
        let rhs = Phi0Rhs {
            seed: &self.seed,
            params: self.params,
            equation: self.equation,
        };
        rhs.eval(s, self.phi0.slope(s))
    }

    /// Field and radial derivatives at `r` on the initial slice.
    pub fn local(&self, r: f64) -> Result<LocalField> {
        let ModelParams { delta, r0, .. } = self.params;
        let s = (r - r0) / delta;
        let mut f = LocalField {
            r,
            ..LocalField::default()
        };
        if r < r0 {
            return Ok(f);
        }
        if s <= 1.0 {
            let a = delta.sqrt() / r0;
            f.phi = delta * a * self.phi0.value(s);
            f.p = a * self.seed.phi1(s);
            f.q = a * self.phi0.slope(s);
            f.dr_p = a / delta * self.seed.dphi1(s);
            f.dr_q = a / delta * self.second_slope(s)?;
        } else {
            let big_a = self.tail_coefficient();
            f.phi = big_a / r;
            f.q = -big_a / (r * r);
            f.dr_q = 2.0 * big_a / (r * r * r);
        }
        Ok(f)
    }
}

/// Initial data sampled on a radial grid.
#[derive(Debug, Clone)]
pub struct InitialData {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub profile: PulseProfile,
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
    pub dtphi: Vec<f64>,
    pub drphi: Vec<f64>,
}

pub fn build_initial_data(
    seed: &SeedProfile,
    params: &ModelParams,
    grid: &GridSpec,
) -> Result<InitialData> {
    build_initial_data_with(seed, params, grid, Phi0Options::default())
}

pub fn build_initial_data_with(
    seed: &SeedProfile,
    params: &ModelParams,
    grid: &GridSpec,
    options: Phi0Options,
) -> Result<InitialData> {
    let cells = params.delta / grid.dr();
    if cells < MIN_CELLS_PER_DELTA as f64 - 1e-9 {
        return Err(Error::Resolution(format!(
            "{cells:.1} cells across the annulus, need at least {MIN_CELLS_PER_DELTA}"
        )));
    }
    if grid.r_min > params.r0 - 2.0 * params.delta + 1e-12
        || grid.r_max < params.r0 + 2.0 * params.delta - 1e-12
    {
        return Err(Error::Grid(format!(
            "grid [{}, {}] must cover [r0 - 2 delta, r0 + 2 delta]",
            grid.r_min, grid.r_max
        )));
    }
    let profile = PulseProfile::new(seed, params, options)?;
    let n = grid.n_nodes();
    let mut out = InitialData {
        params: *params,
        grid: *grid,
        profile,
        r: Vec::with_capacity(n),
        phi: Vec::with_capacity(n),
        dtphi: Vec::with_capacity(n),
        drphi: Vec::with_capacity(n),
    };
    for i in 0..n {
        let r = grid.r(i);
        let f = out.profile.local(r)?;
        out.r.push(r);
        out.phi.push(f.phi);
        out.dtphi.push(f.p);
        out.drphi.push(f.q);
    }
    Ok(out)
}

impl InitialData {
    /// Solver state at `t = -r0`.
    pub fn state(&self) -> FieldState {
        FieldState {
            t: -self.params.r0,
            g2: self.params.g2,
            grid: self.grid,
            offset: 0,
            t_anchor: None,
            p: self.dtphi.clone(),
            q: self.drphi.clone(),
            phi: self.phi.clone(),
        }
    }
}

impl LocalFieldSource for PulseProfile {
    fn time(&self) -> f64 {
        -self.params.r0
    }

    fn g2(&self) -> f64 {
        self.params.g2
    }

    fn sample(&self, r: f64) -> Result<LocalField> {
        self.local(r)
    }
}

impl LocalFieldSource for InitialData {
    fn time(&self) -> f64 {
        -self.params.r0
    }

    fn g2(&self) -> f64 {
        self.params.g2
    }

    fn sample(&self, r: f64) -> Result<LocalField> {
        self.profile.local(r)
    }
}

/// Normalized no-outgoing-radiation ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationBounds {
    /// `max |Lb phi| * r0^2 / delta^{3/2}`.
    pub ratio1: f64,
    /// `max |Lb^2 phi| * r0^3 / delta^{3/2}`.
    pub ratio2: f64,
}

/// `Lb^2 phi` from first and second radial derivatives, with `dt^2 phi` eliminated by the field equation.
pub fn lb2_phi(f: &LocalField, g2: f64) -> Result<f64> {
    let (c, _) = wave_speed(f.p, g2)?;
    let c2 = c * c;
    let k = 3.0 * g2 * c2 * c * f.p * f.q;
    let dr_c = -3.0 * g2 * c2 * c * f.p * f.dr_p;
    Ok(c2 * f.dr_q * (2.0 + k) + 2.0 * c2 * f.q / f.r * (1.0 + k) + c * f.q * dr_c
        - 2.0 * c * f.dr_p)
}

/// Sup norms of `Lb phi` and `Lb^2 phi` over the grid nodes, normalized by their expected scales.
pub fn verify_radiation_bounds(data: &InitialData) -> Result<RadiationBounds> {
    let ModelParams { g2, delta, r0 } = data.params;
    let (mut m1, mut m2) = (0.0f64, 0.0f64);
    for &r in &data.r {
        let f = data.profile.local(r)?;
        let (c, _) = wave_speed(f.p, g2)?;
        m1 = m1.max((f.p - c * f.q).abs());
        m2 = m2.max(lb2_phi(&f, g2)?.abs());
    }
    let scale = delta.powf(1.5);
    Ok(RadiationBounds {
        ratio1: m1 * r0 * r0 / scale,
        ratio2: m2 * r0.powi(3) / scale,
    })
}
