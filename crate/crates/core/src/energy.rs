//! Lowest-order slice energies over the fan and the large-`r0` limit of the initial energies.
//!
//! For a first-order variation `psi`,
//! `E0 = 4 pi int_0^ub [(L psi)^2 + mu (Lb psi)^2] r^2 dub'` and
//! `E1 = t^2 4 pi int_0^ub mu (Lb psi + tr chib~ psi / 2)^2 r^2 dub'`
//! with `tr chib~ = -2/r + 2 Lb(1/c)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::{Phi0Options, PulseProfile};
use crate::error::{Error, Result};
use crate::numerics::simpson;
use crate::optical::optics;
use crate::seed::{ModelParams, SeedProfile};
use crate::solver::LocalFieldSource;

/// Ray positions and inverse density on one slice.
#[derive(Debug, Clone, Copy)]
pub struct SliceGeometry<'a> {
    pub t: f64,
    /// Uniformly spaced, starting at 0.
    pub labels: &'a [f64],
    pub r: &'a [f64],
    pub mu: &'a [f64],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub ub: f64,
    /// Variation `psi = dt phi`.
    pub e0_dt: f64,
    pub e1_dt: f64,
    /// Variation `psi = dr phi`.
    pub e0_dr: f64,
    pub e1_dr: f64,
    /// `4 pi int (T dt phi)^2 r^2 dub`.
    pub t_norm_dt: f64,
}

pub fn slice_energy(
    source: &dyn LocalFieldSource,
    slice: &SliceGeometry,
    ub: f64,
) -> Result<EnergyRecord> {
    let labels = slice.labels;
    if labels.len() < 3 {
        return Err(Error::InsufficientRays(labels.len()));
    }
    let h = labels[1] - labels[0];
    let n = labels
        .iter()
        .take_while(|&&l| l <= ub + 1e-9 * h)
        .count();
    if n < 3 {
        return Err(Error::InsufficientRays(n));
    }
    let g2 = source.g2();
    let t = slice.t;
    let mut rows = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for i in 0..n {
        let (r, mu) = (slice.r[i], slice.mu[i]);
        if !(mu > 0.0) {
            return Err(Error::SliceInvalid {
                t,
                ub: labels[i],
                mu,
            });
        }
        let f = source.sample(r)?;
        let c = crate::solver::wave_speed(f.p, g2)?.0;
        let kappa = mu / c;
        let o = optics(&f, g2, kappa)?;
        let trchib_conf = -2.0 / r - 2.0 * o.lb_c / (c * c);
        let w = 4.0 * PI * r * r;
        let dt_p = f.dt_p(c);
        for (k, (psi, dt, dr)) in [(f.p, dt_p, f.dr_p), (f.q, f.dr_p, f.dr_q)]
            .into_iter()
            .enumerate()
        {
            let l = kappa / c * (dt + c * dr);
            let lb = dt - c * dr;
            rows[2 * k].push(w * (l * l + mu * lb * lb));
            let x = lb + 0.5 * trchib_conf * psi;
            rows[2 * k + 1].push(w * t * t * mu * x * x);
        }
        let tp = kappa * f.dr_p;
        rows[4].push(w * tp * tp);
    }
    let int = |v: &Vec<f64>| simpson(v, h);
    Ok(EnergyRecord {
        t,
        ub: labels[n - 1],
        e0_dt: int(&rows[0]),
        e1_dt: int(&rows[1]),
        e0_dr: int(&rows[2]),
        e1_dr: int(&rows[3]),
        t_norm_dt: int(&rows[4]),
    })
}

/// Energies on the initial slice, where `r = r0 + ub` and `mu = c`.
pub fn initial_energy(profile: &PulseProfile, n_rays: usize) -> Result<EnergyRecord> {
    let ModelParams { g2, delta, r0 } = profile.params;
    let h = delta / (n_rays - 1) as f64;
    let labels: Vec<f64> = (0..n_rays).map(|i| i as f64 * h).collect();
    let r: Vec<f64> = labels.iter().map(|u| r0 + u).collect();
    let mu = r
        .iter()
        .map(|&x| Ok(crate::solver::wave_speed(profile.local(x)?.p, g2)?.0))
        .collect::<Result<Vec<f64>>>()?;
    slice_energy(
        profile,
        &SliceGeometry {
            t: -r0,
            labels: &labels,
            r: &r,
            mu: &mu,
        },
        delta,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatteringRow {
    pub r0: f64,
    pub e0_dt: f64,
    pub e1_dt: f64,
    pub e0_dr: f64,
    pub e1_dr: f64,
    pub t_norm_dt: f64,
    /// `|t_norm_dt - limit| / limit`.
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringTable {
    pub delta: f64,
    pub g2: f64,
    pub rows: Vec<ScatteringRow>,
    /// `4 pi int_0^1 (phi1')^2 ds`.
    pub limit: f64,
    /// Successive differences of `e0_dt`.
    pub e0_differences: Vec<f64>,
    /// Ratios of successive differences.
    pub difference_ratios: Vec<f64>,
    /// Richardson estimate `2 T(r0_last) - T(r0_prev)` of the limit of `t_norm_dt`, for doubling `r0`.
    pub extrapolated_limit: f64,
}

/// `4 pi int_0^1 (phi1')^2 ds` by Simpson's rule on 8193 samples.
pub fn scattering_limit(seed: &SeedProfile) -> f64 {
    let n = 8192;
    let h = 1.0 / n as f64;
    let v: Vec<f64> = (0..=n)
        .map(|i| seed.dphi1(i as f64 * h).powi(2))
        .collect();
    4.0 * PI * simpson(&v, h)
}

/// Initial-slice energies for each `r0` and the comparison with the analytic limit.
pub fn scattering_probe(
    seed: &SeedProfile,
    g2: f64,
    delta: f64,
    r0_list: &[f64],
    n_rays: usize,
) -> Result<ScatteringTable> {
    if r0_list.len() < 3 {
        return Err(Error::InvalidArgument(
            "scattering probe needs at least 3 radii".into(),
        ));
    }
    if r0_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be increasing".into()));
    }
    let limit = scattering_limit(seed);
    let mut rows = Vec::with_capacity(r0_list.len());
    for &r0 in r0_list {
        let params = ModelParams::new(g2, delta, r0)?;
        let profile = PulseProfile::new(seed, &params, Phi0Options::default())?;
        let e = initial_energy(&profile, n_rays)?;
        rows.push(ScatteringRow {
            r0,
            e0_dt: e.e0_dt,
            e1_dt: e.e1_dt,
            e0_dr: e.e0_dr,
            e1_dr: e.e1_dr,
            t_norm_dt: e.t_norm_dt,
            relative_error: if limit > 0.0 {
                (e.t_norm_dt - limit).abs() / limit
            } else {
                e.t_norm_dt.abs()
            },
        });
    }
    let e0_differences: Vec<f64> = rows.windows(2).map(|w| w[1].e0_dt - w[0].e0_dt).collect();
    let difference_ratios = e0_differences
        .windows(2)
        .map(|d| if d[0] == 0.0 { 0.0 } else { d[1] / d[0] })
        .collect();
    let n = rows.len();
    let extrapolated_limit = 2.0 * rows[n - 1].t_norm_dt - rows[n - 2].t_norm_dt;
    Ok(ScatteringTable {
        delta,
        g2,
        rows,
        limit,
        e0_differences,
        difference_ratios,
        extrapolated_limit,
    })
}
