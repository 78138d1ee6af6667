//! The incoming characteristic fan `dr/dt = -c` labelled by `ub = r - r0` at `t = -r0`,
//! and the inverse density `mu = c * dr/dub` measured two ways:
//! by differencing ray positions across labels, and by integrating
//! `Lb mu = m + mu e` along each ray.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::fit_inverse_time;
use crate::seed::ModelParams;
use crate::solver::{wave_speed, FieldState, LocalField, LocalFieldSource, Observer, Trajectory};

/// Smallest fan accepted by [`FanTracer`].
pub const MIN_RAYS: usize = 17;

/// A family of characteristics on one time slice, in the form
/// `x_i = base_slope * label_i + offset_i` with `mu_i = weight_i * dx/dlabel`.
#[derive(Debug, Clone, Copy)]
pub struct FanSlice<'a> {
    pub labels: &'a [f64],
    pub base_slope: f64,
    pub offsets: &'a [f64],
    pub weights: &'a [f64],
}

/// Derivative with respect to the ray index: centered inside, one-sided second order at the ends.
fn index_derivative(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = 0.5 * (f[i + 1] - f[i - 1]);
    }
    d[0] = 0.5 * (-3.0 * f[0] + 4.0 * f[1] - f[2]);
    d[n - 1] = 0.5 * (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]);
    d
}

impl FanSlice<'_> {
    /// `dx/dlabel` per ray.
    pub fn kappa(&self) -> Result<Vec<f64>> {
        let n = self.labels.len();
        if n < 3 {
            return Err(Error::InsufficientRays(n));
        }
        if self.offsets.len() != n || self.weights.len() != n {
            return Err(Error::InvalidArgument(
                "labels, offsets and weights differ in length".into(),
            ));
        }
        let dl = index_derivative(self.labels);
        let doff = index_derivative(self.offsets);
        Ok(dl
            .iter()
            .zip(&doff)
            .map(|(l, o)| self.base_slope + o / l)
            .collect())
    }

    /// Inverse density `weight * dx/dlabel` per ray.
    pub fn mu(&self) -> Result<Vec<f64>> {
        Ok(self
            .kappa()?
            .into_iter()
            .zip(self.weights)
            .map(|(k, w)| w * k)
            .collect())
    }
}

/// Local optical quantities at one point of a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optics {
    pub c: f64,
    pub dc2_drho: f64,
    pub m: f64,
    pub e: f64,
    pub lb_mu: f64,
    /// `Lb c`.
    pub lb_c: f64,
    /// `L psi0` with `L = (kappa/c)(dt + c dr)`.
    pub l_psi0: f64,
    /// `T psi0` with `T = kappa dr`.
    pub t_psi0: f64,
}

/// Evaluates `m = -1/2 dc2/drho T rho`, `e = dc2/drho Lb rho / (2 c^2)` and `Lb mu = m + mu e`.
pub fn optics(f: &LocalField, g2: f64, kappa: f64) -> Result<Optics> {
    let (c, dc2) = wave_speed(f.p, g2)?;
    let dt_p = f.dt_p(c);
    let dr_rho = 2.0 * f.p * f.dr_p;
    let lb_rho = 2.0 * f.p * (dt_p - c * f.dr_p);
    let m = -0.5 * dc2 * kappa * dr_rho;
    let e = dc2 / (2.0 * c * c) * lb_rho;
    Ok(Optics {
        c,
        dc2_drho: dc2,
        m,
        e,
        lb_mu: m + c * kappa * e,
        lb_c: c * e,
        l_psi0: kappa / c * (dt_p + c * f.dr_p),
        t_psi0: kappa * f.dr_p,
    })
}

/// Growth rate `Lb mu / mu` when `kappa = mu / c`.
fn mu_rate(f: &LocalField, g2: f64) -> Result<(f64, f64)> {
    let (c, dc2) = wave_speed(f.p, g2)?;
    let dr_rho = 2.0 * f.p * f.dr_p;
    let lb_rho = 2.0 * f.p * (f.dt_p(c) - c * f.dr_p);
    let e = dc2 / (2.0 * c * c) * lb_rho;
    Ok((-0.5 * dc2 * dr_rho / c + e, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticalSample {
    pub t: f64,
    pub ub: f64,
    pub r: f64,
    pub c: f64,
    pub mu_geom: f64,
    pub mu_trans: f64,
    pub lb_mu: f64,
    pub m: f64,
    pub e: f64,
    /// Transported `tr chib`.
    pub trchib: f64,
    /// `-2c/r`.
    pub trchib_direct: f64,
    /// `tr chib + 2/(ub - t)`, from the direct value.
    pub trchib_prime: f64,
    pub psi0: f64,
    pub l_psi0: f64,
    pub t_psi0: f64,
    /// Ray belongs to the exterior buffer beyond `ub = delta`.
    pub buffer: bool,
    /// Ray left the stored field window and was frozen.
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanRecord {
    pub t: f64,
    pub samples: Vec<OpticalSample>,
}

/// One point of the per-step `mu_m` series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MuMinPoint {
    pub t: f64,
    pub mu_min: f64,
    /// Label of the minimizing ray.
    pub ub: f64,
    /// Smallest spacing between neighbouring core rays.
    pub min_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicFan {
    pub params: ModelParams,
    /// Labels of all rays, buffer included, increasing.
    pub labels: Vec<f64>,
    /// Rays `0..n_core` cover `[0, delta]`.
    pub n_core: usize,
    pub records: Vec<FanRecord>,
    pub mu_min: Vec<MuMinPoint>,
    /// First recorded time at which neighbouring rays touched, if ever.
    pub crossing_observed: Option<f64>,
}

impl CharacteristicFan {
    pub fn core_labels(&self) -> &[f64] {
        &self.labels[..self.n_core]
    }

    pub fn t_range(&self) -> Option<(f64, f64)> {
        Some((self.records.first()?.t, self.records.last()?.t))
    }

    /// Core-ray samples of every record.
    pub fn core_samples(&self) -> impl Iterator<Item = &OpticalSample> {
        self.records
            .iter()
            .flat_map(move |rec| rec.samples[..self.n_core].iter())
    }
}

/// `mu_geom` over the core labels at time `t`, linearly interpolated between records.
pub fn inverse_density(fan: &CharacteristicFan, t: f64) -> Result<Vec<f64>> {
    if fan.n_core < 3 {
        return Err(Error::InsufficientRays(fan.n_core));
    }
    let (start, end) = fan.t_range().ok_or(Error::OutsideRecord {
        t,
        start: f64::NAN,
        end: f64::NAN,
    })?;
    let tol = 1e-12 * fan.params.r0;
    if t < start - tol || t > end + tol {
        return Err(Error::OutsideRecord { t, start, end });
    }
    let k = fan.records.partition_point(|rec| rec.t < t - tol);
    let rec = &fan.records[k.min(fan.records.len() - 1)];
    let core = |rec: &FanRecord| -> Vec<f64> {
        rec.samples[..fan.n_core].iter().map(|s| s.mu_geom).collect()
    };
    if (rec.t - t).abs() <= tol || k == 0 {
        return Ok(core(rec));
    }
    let prev = &fan.records[k - 1];
    let a = (t - prev.t) / (rec.t - prev.t);
    Ok(core(prev)
        .into_iter()
        .zip(core(rec))
        .map(|(x, y)| (1.0 - a) * x + a * y)
        .collect())
}

/// Ray labels `ub_i = i delta/(n-1)`, extended past `delta` by `buffer_fraction * delta`.
pub fn fan_labels(delta: f64, n_rays: usize, buffer_fraction: f64) -> Vec<f64> {
    let h = delta / (n_rays - 1) as f64;
    let extra = (buffer_fraction * (n_rays - 1) as f64).round() as usize;
    (0..n_rays + extra).map(|i| i as f64 * h).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanConfig {
    pub n_rays: usize,
    pub buffer_fraction: f64,
}

impl Default for FanConfig {
    fn default() -> Self {
        Self {
            n_rays: 257,
            buffer_fraction: 0.2,
        }
    }
}

/// Traces the fan alongside the solver. Rays use Heun's method with the solver's step.
#[derive(Debug, Clone)]
pub struct FanTracer {
    labels: Vec<f64>,
    n_core: usize,
    g2: f64,
    /// Ray drift: `r = ub - t + w`.
    w: Vec<f64>,
    c: Vec<f64>,
    mu_trans: Vec<f64>,
    trchib: Vec<f64>,
    truncated: Vec<bool>,
    mu_geom: Vec<f64>,
    t: f64,
    mu_min: f64,
    fan: CharacteristicFan,
}

impl FanTracer {
    pub fn new(params: ModelParams, config: FanConfig) -> Result<Self> {
        if config.n_rays < MIN_RAYS {
            return Err(Error::InsufficientRays(config.n_rays));
        }
        let labels = fan_labels(params.delta, config.n_rays, config.buffer_fraction);
        let n = labels.len();
        Ok(Self {
            n_core: config.n_rays,
            g2: params.g2,
            w: vec![0.0; n],
            c: vec![1.0; n],
            mu_trans: vec![1.0; n],
            trchib: vec![0.0; n],
            truncated: vec![false; n],
            mu_geom: vec![1.0; n],
            t: -params.r0,
            mu_min: 1.0,
            fan: CharacteristicFan {
                params,
                labels: labels.clone(),
                n_core: config.n_rays,
                records: Vec::new(),
                mu_min: Vec::new(),
                crossing_observed: None,
            },
            labels,
        })
    }

    pub fn fan(&self) -> &CharacteristicFan {
        &self.fan
    }

    pub fn into_fan(self) -> CharacteristicFan {
        self.fan
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn n_core(&self) -> usize {
        self.n_core
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Current ray radii.
    pub fn radii(&self) -> Vec<f64> {
        self.labels
            .iter()
            .zip(&self.w)
            .map(|(ub, w)| ub - self.t + w)
            .collect()
    }

    /// Current geometric inverse density, all rays.
    pub fn mu_geom(&self) -> &[f64] {
        &self.mu_geom
    }

    fn radius(&self, i: usize, t: f64, w: f64) -> f64 {
        self.labels[i] - t + w
    }

    fn update_geometry(&mut self) -> Result<()> {
        let slice = FanSlice {
            labels: &self.labels,
            base_slope: 1.0,
            offsets: &self.w,
            weights: &self.c,
        };
        self.mu_geom = slice.mu()?;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..self.n_core {
            if !self.truncated[i] && self.mu_geom[i] < best.0 {
                best = (self.mu_geom[i], self.labels[i]);
            }
        }
        let mut gap = f64::INFINITY;
        for i in 0..self.n_core - 1 {
            let d = self.labels[i + 1] - self.labels[i] + self.w[i + 1] - self.w[i];
            gap = gap.min(d);
        }
        if gap <= 0.0 && self.fan.crossing_observed.is_none() {
            self.fan.crossing_observed = Some(self.t);
        }
        self.mu_min = best.0.min(1.0);
        self.fan.mu_min.push(MuMinPoint {
            t: self.t,
            mu_min: self.mu_min,
            ub: best.1,
            min_gap: gap,
        });
        Ok(())
    }

    fn record(&mut self, state: &FieldState) -> Result<()> {
        if self.fan.records.last().map(|r| r.t) == Some(self.t) {
            return Ok(());
        }
        let mut samples = Vec::with_capacity(self.labels.len());
        for i in 0..self.labels.len() {
            let r = self.radius(i, self.t, self.w[i]);
            let ub = self.labels[i];
            let f = state.sample(r);
            let (f, truncated) = match f {
                Ok(f) if !self.truncated[i] => (f, false),
                _ => (
                    LocalField {
                        r,
                        ..LocalField::default()
                    },
                    true,
                ),
            };
            let c = if truncated { self.c[i] } else { wave_speed(f.p, self.g2)?.0 };
            let kappa = self.mu_geom[i] / c;
            let o = optics(&f, self.g2, kappa)?;
            let direct = -2.0 * o.c / r;
            samples.push(OpticalSample {
                t: self.t,
                ub,
                r,
                c: o.c,
                mu_geom: self.mu_geom[i],
                mu_trans: self.mu_trans[i],
                lb_mu: o.lb_mu,
                m: o.m,
                e: o.e,
                trchib: self.trchib[i],
                trchib_direct: direct,
                trchib_prime: direct + 2.0 / (ub - self.t),
                psi0: f.p,
                l_psi0: o.l_psi0,
                t_psi0: o.t_psi0,
                buffer: i >= self.n_core,
                truncated,
            });
        }
        self.fan.records.push(FanRecord { t: self.t, samples });
        Ok(())
    }
}

impl Observer for FanTracer {
    fn on_start(&mut self, state: &FieldState) -> Result<()> {
        self.t = state.t;
        for i in 0..self.labels.len() {
            let r = self.radius(i, self.t, 0.0);
            let p = match state.sample(r) {
                Ok(f) => f.p,
                Err(Error::OutsideWindow { .. }) => {
                    self.truncated[i] = true;
                    0.0
                }
                Err(e) => return Err(e),
            };
            let (c, _) = wave_speed(p, self.g2)?;
            self.c[i] = c;
            self.mu_trans[i] = c;
            self.trchib[i] = -2.0 * c / r;
        }
        self.update_geometry()?;
        self.record(state)
    }

    fn on_step(&mut self, prev: &FieldState, next: &FieldState, record: bool) -> Result<()> {
        let (t0, t1) = (prev.t, next.t);
        let dt = t1 - t0;
        for i in 0..self.labels.len() {
            if self.truncated[i] {
                continue;
            }
            let w = self.w[i];
            let stage = || -> Result<(f64, f64, f64, f64)> {
                let f1 = prev.sample(self.radius(i, t0, w))?;
                let (a1, e1) = mu_rate(&f1, self.g2)?;
                let c1 = wave_speed(f1.p, self.g2)?.0;
                let w_pred = w + dt * (1.0 - c1);
                let f2 = next.sample(self.radius(i, t1, w_pred))?;
                let (a2, e2) = mu_rate(&f2, self.g2)?;
                let c2 = wave_speed(f2.p, self.g2)?.0;
                let w_new = w + 0.5 * dt * ((1.0 - c1) + (1.0 - c2));
                let mu = self.mu_trans[i] * (1.0 + 0.5 * dt * (a1 + a2 + dt * a1 * a2));
                let tr = self.trchib[i];
                let k1 = e1 * tr - 0.5 * tr * tr;
                let tr_pred = tr + dt * k1;
                let k2 = e2 * tr_pred - 0.5 * tr_pred * tr_pred;
                Ok((w_new, mu, tr + 0.5 * dt * (k1 + k2), 0.0))
            };
            match stage() {
                Ok((w_new, mu, tr, _)) => {
                    self.w[i] = w_new;
                    self.mu_trans[i] = mu;
                    self.trchib[i] = tr;
                }
                Err(Error::OutsideWindow { .. }) => self.truncated[i] = true,
                Err(e) => return Err(e),
            }
        }
        self.t = t1;
        for i in 0..self.labels.len() {
            if self.truncated[i] {
                continue;
            }
            match next.sample(self.radius(i, t1, self.w[i])) {
                Ok(f) => self.c[i] = wave_speed(f.p, self.g2)?.0,
                Err(Error::OutsideWindow { .. }) => self.truncated[i] = true,
                Err(e) => return Err(e),
            }
        }
        self.update_geometry()?;
        if record {
            self.record(next)?;
        }
        Ok(())
    }

    fn on_finish(&mut self, state: &FieldState) -> Result<()> {
        self.record(state)
    }

    fn mu_min(&self) -> Option<f64> {
        Some(self.mu_min)
    }
}

/// Replays the tracer over the stored snapshots of a trajectory.
pub fn trace_fan(trajectory: &Trajectory, n_rays: usize) -> Result<CharacteristicFan> {
    let mut tracer = FanTracer::new(
        trajectory.params,
        FanConfig {
            n_rays,
            ..FanConfig::default()
        },
    )?;
    let snaps = &trajectory.snapshots;
    let first = snaps
        .first()
        .ok_or_else(|| Error::InvalidArgument("trajectory has no snapshots".into()))?;
    tracer.on_start(first)?;
    for pair in snaps.windows(2) {
        tracer.on_step(&pair[0], &pair[1], true)?;
    }
    Ok(tracer.into_fan())
}

/// Transport-versus-direct `tr chib` residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrchibDiagnostics {
    /// `max |tr chib_transported - (-2c/r)|` over core samples.
    pub transport_residual: f64,
    /// `max |tr chib'|` over core samples.
    pub max_trchib_prime: f64,
    /// `max |tr chib'| |t|^3 / delta` over core samples.
    pub normalized_trchib_prime: f64,
}

pub fn trchib_diagnostics(fan: &CharacteristicFan) -> TrchibDiagnostics {
    let delta = fan.params.delta;
    let mut d = TrchibDiagnostics {
        transport_residual: 0.0,
        max_trchib_prime: 0.0,
        normalized_trchib_prime: 0.0,
    };
    for s in fan.core_samples().filter(|s| !s.truncated) {
        d.transport_residual = d.transport_residual.max((s.trchib - s.trchib_direct).abs());
        d.max_trchib_prime = d.max_trchib_prime.max(s.trchib_prime.abs());
        d.normalized_trchib_prime = d
            .normalized_trchib_prime
            .max(s.trchib_prime.abs() * s.t.abs().powi(3) / delta);
    }
    d
}

/// Largest relative gap between the two inverse densities over core samples with both above `floor`.
pub fn mu_cross_check(fan: &CharacteristicFan, floor: f64) -> f64 {
    fan.core_samples()
        .filter(|s| !s.truncated && s.mu_geom > floor && s.mu_trans > floor)
        .map(|s| (s.mu_geom - s.mu_trans).abs() / s.mu_geom)
        .fold(0.0, f64::max)
}

/// Time at which neighbouring rays would first touch, from an `a + b/t` fit of the
/// smallest ray spacing over the tail where it is below half its initial value.
pub fn first_crossing_extrapolated(fan: &CharacteristicFan) -> Option<f64> {
    if let Some(t) = fan.crossing_observed {
        return Some(t);
    }
    let g0 = fan.mu_min.first()?.min_gap;
    let tail: Vec<&MuMinPoint> = fan.mu_min.iter().filter(|p| p.min_gap < 0.5 * g0).collect();
    if tail.len() < 5 {
        return None;
    }
    let tail = &tail[tail.len() - (tail.len() / 4).max(5)..];
    let ts: Vec<f64> = tail.iter().map(|p| p.t).collect();
    let gs: Vec<f64> = tail.iter().map(|p| p.min_gap / g0).collect();
    let fit = fit_inverse_time(&ts, &gs)?;
    (fit.a > 0.0 && fit.b > 0.0).then(|| fit.zero()).flatten()
}
