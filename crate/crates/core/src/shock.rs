//! Shock diagnostics from a traced fan: the `mu_m(t)` series, the extrapolated
//! vanishing time of `mu`, normalized residuals of the leading-order expansions
//! and the trapping inequality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::numerics::{fit_inverse_time, InverseTimeFit};
use crate::optical::{CharacteristicFan, OpticalSample};
use crate::seed::{shock_margin, shock_time_from_margin, ModelParams, SeedProfile};

/// `(t, mu_m(t))` at every traced step.
pub fn mu_min_series(fan: &CharacteristicFan) -> Vec<(f64, f64)> {
    fan.mu_min.iter().map(|p| (p.t, p.mu_min)).collect()
}

/// Core samples grouped by ray, each paired with the ray's initial sample.
fn with_initial(fan: &CharacteristicFan) -> impl Iterator<Item = (&OpticalSample, &OpticalSample)> {
    let first = fan.records.first();
    fan.records.iter().flat_map(move |rec| {
        let init = first.expect("records are non-empty when iterated");
        rec.samples[..fan.n_core]
            .iter()
            .zip(&init.samples[..fan.n_core])
            .filter(|(s, _)| !s.truncated)
    })
}

/// `sup |mu - 1 + (1/t + 1/r0) r0^2 Lb mu(-r0)| t^2 / delta`.
pub fn residual_mu_expansion(fan: &CharacteristicFan) -> f64 {
    let ModelParams { delta, r0, .. } = fan.params;
    with_initial(fan)
        .map(|(s, s0)| {
            let lead = (1.0 / s.t + 1.0 / r0) * r0 * r0 * s0.lb_mu;
            (s.mu_geom - 1.0 + lead).abs() * s.t * s.t / delta
        })
        .fold(0.0, f64::max)
}

/// `sup |t^2 Lb mu - r0^2 Lb mu(-r0)| |t| / delta`.
pub fn residual_lb_mu_expansion(fan: &CharacteristicFan) -> f64 {
    let ModelParams { delta, r0, .. } = fan.params;
    with_initial(fan)
        .map(|(s, s0)| (s.t * s.t * s.lb_mu - r0 * r0 * s0.lb_mu).abs() * s.t.abs() / delta)
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PsiResiduals {
    /// `sup |(-t) L psi0 - r0 L psi0(-r0)| |t| / delta^{1/2}`.
    pub l_psi: f64,
    /// `sup |(-t) T psi0 - r0 T psi0(-r0)| |t| / delta^{1/2}`.
    pub t_psi: f64,
    /// `sup |(-t) psi0 - r0 psi0(-r0)| |t| / delta^{3/2}`.
    pub psi: f64,
}

pub fn residual_lpsi_expansion(fan: &CharacteristicFan) -> PsiResiduals {
    let ModelParams { delta, r0, .. } = fan.params;
    let mut out = PsiResiduals::default();
    for (s, s0) in with_initial(fan) {
        let a = s.t.abs();
        out.l_psi = out
            .l_psi
            .max((a * s.l_psi0 - r0 * s0.l_psi0).abs() * a / delta.sqrt());
        out.t_psi = out
            .t_psi
            .max((a * s.t_psi0 - r0 * s0.t_psi0).abs() * a / delta.sqrt());
        out.psi = out
            .psi
            .max((a * s.psi0 - r0 * s0.psi0).abs() * a / delta.powf(1.5));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrappingViolation {
    pub t: f64,
    pub ub: f64,
    pub mu: f64,
    pub t2_lb_mu: f64,
}

/// Default allowance on the trapping bound `t^2 Lb mu <= -1/4`.
pub const TRAPPING_SLACK: f64 = 0.05;

/// Samples with `mu < 1/10` that violate `t^2 Lb mu <= -1/4 + slack`.
pub fn trapping_check<'a>(
    samples: impl IntoIterator<Item = &'a OpticalSample>,
    slack: f64,
) -> Vec<TrappingViolation> {
    samples
        .into_iter()
        .filter(|s| !s.buffer && !s.truncated && s.mu_geom < 0.1)
        .filter_map(|s| {
            let v = s.t * s.t * s.lb_mu;
            (v > -0.25 + slack).then_some(TrappingViolation {
                t: s.t,
                ub: s.ub,
                mu: s.mu_geom,
                t2_lb_mu: v,
            })
        })
        .collect()
}

/// Samples with `mu_m` below this enter the tail fit.
pub const FIT_CEILING: f64 = 0.5;
/// Minimum number of tail samples for a fit.
pub const FIT_MIN_SAMPLES: usize = 5;
/// Allowed rise of `mu_m` after its last maximum.
pub const MONOTONE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockReport {
    pub fired: bool,
    pub t_star_observed: Option<f64>,
    pub t_star_predicted: Option<f64>,
    /// `|observed / predicted - 1|` when both exist.
    pub relative_timing_error: Option<f64>,
    /// Label of the ray attaining `mu_m` at the end of the run.
    pub ub_star: Option<f64>,
    /// Pulse coordinate at which the seed margin is attained.
    pub s_star: f64,
    pub margin: f64,
    pub mu_min_final: f64,
    pub t_final: f64,
    pub fit: Option<InverseTimeFit>,
    pub fit_samples: usize,
    pub monotone_tail: bool,
    pub diagnostic: Option<String>,
    pub residual_norms: BTreeMap<String, f64>,
    pub trapping_violations: usize,
}

fn monotone_after_last_max(series: &[(f64, f64)]) -> bool {
    let Some(k) = series
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(k, _)| k)
    else {
        return true;
    };
    let mut running = f64::INFINITY;
    for &(_, m) in &series[k..] {
        if m > running + MONOTONE_TOLERANCE {
            return false;
        }
        running = running.min(m);
    }
    true
}

/// Fits `a + b/t` to the last quarter of the `mu_m < 0.5` samples and extrapolates the zero.
pub fn detect(
    fan: &CharacteristicFan,
    seed: &SeedProfile,
    params: &ModelParams,
    stop_mu: f64,
) -> Result<ShockReport> {
    let margin = shock_margin(seed, params)?;
    let t_star_predicted = shock_time_from_margin(margin.margin, params.r0);
    let series = mu_min_series(fan);
    let (t_final, mu_min_final) = series.last().copied().unwrap_or((-params.r0, 1.0));
    let monotone_tail = monotone_after_last_max(&series);

    let low: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.1 < FIT_CEILING).collect();
    let take = (low.len() / 4).max(FIT_MIN_SAMPLES);
    let mut diagnostic = None;
    let mut fit = None;
    let mut fit_samples = 0;
    if low.len() < FIT_MIN_SAMPLES {
        diagnostic = Some(format!(
            "mu_m never fell below {FIT_CEILING}: no shock trend (min {mu_min_final:.4})"
        ));
    } else {
        let tail = &low[low.len() - take.min(low.len())..];
        let ts: Vec<f64> = tail.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = tail.iter().map(|p| p.1).collect();
        fit_samples = tail.len();
        fit = fit_inverse_time(&ts, &ys);
        if fit.is_none() {
            diagnostic = Some("degenerate tail fit".into());
        }
    }
    let mut t_star_observed = None;
    if let Some(f) = fit {
        if f.a > 0.0 && f.b > 0.0 {
            let z = -f.b / f.a;
            if z > -params.r0 && z <= -1.0 {
                t_star_observed = Some(z);
            } else {
                diagnostic = Some(format!("extrapolated crossing {z:.4} outside (-r0, -1]"));
            }
        } else {
            diagnostic = Some(format!(
                "tail fit a = {:.4e}, b = {:.4e} has no decreasing zero",
                f.a, f.b
            ));
        }
    }
    if !monotone_tail && diagnostic.is_none() {
        diagnostic = Some("mu_m is not monotone after its last maximum".into());
    }
    let reached = mu_min_final < stop_mu;
    if t_star_observed.is_some() && !reached && diagnostic.is_none() {
        diagnostic = Some(format!("mu_m stayed above stop_mu = {stop_mu}"));
    }
    let fired = t_star_observed.is_some() && reached;

    let mut residual_norms = BTreeMap::new();
    residual_norms.insert("mu".to_string(), residual_mu_expansion(fan));
    residual_norms.insert("lb_mu".to_string(), residual_lb_mu_expansion(fan));
    let psi = residual_lpsi_expansion(fan);
    residual_norms.insert("l_psi".to_string(), psi.l_psi);
    residual_norms.insert("t_psi".to_string(), psi.t_psi);
    residual_norms.insert("psi".to_string(), psi.psi);
    let trapping_violations = trapping_check(fan.core_samples(), TRAPPING_SLACK).len();

    let ub_star = fan.mu_min.last().map(|p| p.ub);
    Ok(ShockReport {
        fired,
        t_star_observed,
        t_star_predicted,
        relative_timing_error: t_star_observed
            .zip(t_star_predicted)
            .map(|(o, p)| (o / p - 1.0).abs()),
        ub_star,
        s_star: margin.s_min,
        margin: margin.margin,
        mu_min_final,
        t_final,
        fit,
        fit_samples,
        monotone_tail,
        diagnostic,
        residual_norms,
        trapping_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, mu: f64, lb_mu: f64) -> OpticalSample {
        OpticalSample {
            t,
            ub: 0.01,
            r: -t,
            c: 1.0,
            mu_geom: mu,
            mu_trans: mu,
            lb_mu,
            m: 0.0,
            e: 0.0,
            trchib: 0.0,
            trchib_direct: 0.0,
            trchib_prime: 0.0,
            psi0: 0.0,
            l_psi0: 0.0,
            t_psi0: 0.0,
            buffer: false,
            truncated: false,
        }
    }

    #[test]
    fn trapping_flags_injected_sample() {
        let bad = sample(-3.0, 0.05, 0.0);
        let good = sample(-3.0, 0.05, -1.0);
        let ignored = sample(-3.0, 0.5, 0.0);
        let v = trapping_check([&bad, &good, &ignored], TRAPPING_SLACK);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].t2_lb_mu, 0.0);
        assert!(trapping_check([&good], TRAPPING_SLACK).is_empty());
    }

    #[test]
    fn monotone_check() {
        let s: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0 - 0.1 * i as f64)).collect();
        assert!(monotone_after_last_max(&s));
        let mut bumpy = s.clone();
        bumpy[7].1 = 0.9;
        assert!(!monotone_after_last_max(&bumpy));
        let rising = vec![(0.0, 0.5), (1.0, 0.4), (2.0, 0.45), (3.0, 0.3)];
        assert!(!monotone_after_last_max(&rising));
    }
}
