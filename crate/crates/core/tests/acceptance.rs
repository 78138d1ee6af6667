//! Acceptance criteria 1 to 7. Each test prints one `criterion N: PASS|FAIL` line.

mod common;

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::*;
use shocklab_core::burgers::{burgers_fan_validate, BurgersProblem, BurgersProfile};
use shocklab_core::data::{build_initial_data, verify_radiation_bounds, RadiationBounds};
use shocklab_core::energy::scattering_probe;
use shocklab_core::optical::mu_cross_check;
use shocklab_core::pipeline::{run, RunOutput, RunSpec};
use shocklab_core::seed::{predicted_shock_time, ModelParams, SeedProfile};
use shocklab_core::shock::{trapping_check, TRAPPING_SLACK};
use shocklab_core::solver::{evolve, EvolveConfig, FieldState, GridSpec, LocalFieldSource, WindowPads};

const SHOCK_CPD: usize = 512;

fn report(n: u8, pass: bool, detail: String) {
    println!(
        "criterion {n}: {} | {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

struct Timed {
    out: RunOutput,
    elapsed: Duration,
}

fn timed_run(spec: &RunSpec) -> Timed {
    let start = Instant::now();
    let out = run(spec).unwrap();
    Timed {
        out,
        elapsed: start.elapsed(),
    }
}

/// Bump seed at margin `-3 pi/2`, `r0 = 10`, `delta = 0.05`, 512 cells per delta.
fn shock_run() -> &'static Timed {
    static RUN: OnceLock<Timed> = OnceLock::new();
    RUN.get_or_init(|| timed_run(&spec(shock_seed(), params(1.0, 0.05, 10.0), SHOCK_CPD)))
}

#[test]
fn criterion_1_burgers_oracle() {
    let start = Instant::now();
    let problem = BurgersProblem::new(BurgersProfile::Sine { amplitude: 1.0 }, PI - 0.5, PI + 0.5).unwrap();
    let rep = burgers_fan_validate(&problem, 1024, 0.9).unwrap();
    let elapsed = start.elapsed();
    let detected = rep.t_star_detected.unwrap_or(f64::NAN);
    let pass = rep.max_abs_error <= 1e-6
        && rep.t_star == Some(1.0)
        && (detected - 1.0).abs() <= rep.scan_dt * (1.0 + 1e-9)
        && elapsed < Duration::from_secs(5);
    report(
        1,
        pass,
        format!(
            "max |mu_fan - mu_exact| = {:.3e}, detected t* = {detected}, scan dt = {}, {elapsed:.2?}",
            rep.max_abs_error, rep.scan_dt
        ),
    );
    assert!(pass);
}

fn bounds(seed: &SeedProfile, delta: f64, r0: f64) -> RadiationBounds {
    let p = params(1.0, delta, r0);
    let grid = GridSpec::aligned(&p, 256, r0 - 3.0 * delta, r0 + 3.0 * delta, 0.9).unwrap();
    verify_radiation_bounds(&build_initial_data(seed, &p, &grid).unwrap()).unwrap()
}

#[test]
fn criterion_2_radiation_bounds_are_uniform() {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (name, seed) in [("bump", SeedProfile::bump(1.0)), ("shock bump", shock_seed())] {
        let mut r1 = Vec::new();
        let mut r2 = Vec::new();
        for delta in [0.1, 0.05, 0.025] {
            for r0 in [5.0, 10.0, 20.0] {
                let b = bounds(&seed, delta, r0);
                assert!(b.ratio1.is_finite() && b.ratio2.is_finite());
                r1.push(b.ratio1);
                r2.push(b.ratio2);
            }
        }
        let (s1, s2) = (spread(&r1), spread(&r2));
        pass &= s1 < 2.0 && s2 < 2.0;
        detail.push(format!("{name}: ratio1 spread {s1:.3}, ratio2 spread {s2:.3}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(10);
    report(2, pass, format!("{}, {elapsed:.2?}", detail.join("; ")));
    assert!(pass);
}

fn check_shock(name: &str, t: &Timed, p: &ModelParams, seed: &SeedProfile) -> (bool, String) {
    let rep = &t.out.report;
    let predicted = predicted_shock_time(seed, p).unwrap().unwrap();
    let observed = rep.t_star_observed.unwrap_or(f64::NAN);
    let err = (observed / predicted - 1.0).abs();
    let pass = rep.fired
        && rep.t_final > -p.r0
        && rep.t_final < -1.0
        && err <= 0.05
        && t.elapsed < Duration::from_secs(300);
    (
        pass,
        format!(
            "{name}: fired {} at t = {:.4}, t* = {observed:.4} vs {predicted:.4} ({:.2}%), {:.1?}",
            rep.fired,
            rep.t_final,
            100.0 * err,
            t.elapsed
        ),
    )
}

#[test]
fn criterion_3_shock_criterion_and_timing() {
    let p = params(1.0, 0.05, 10.0);
    let (bump_ok, bump) = check_shock("bump", shock_run(), &p, &shock_seed());
    let sine_run = timed_run(&spec(sine_shock_seed(), p, SHOCK_CPD));
    let (sine_ok, sine) = check_shock("sine", &sine_run, &p, &sine_shock_seed());

    let quiet = timed_run(&spec(quiet_seed(), p, SHOCK_CPD));
    let q = &quiet.out.report;
    let quiet_ok = !q.fired
        && q.t_final == -1.0
        && q.mu_min_final > 0.4
        && predicted_shock_time(&quiet_seed(), &p).unwrap().is_none()
        && quiet.elapsed < Duration::from_secs(300);
    let pass = bump_ok && sine_ok && quiet_ok;
    report(
        3,
        pass,
        format!(
            "{bump}; {sine}; margin -0.5: fired {} by t = {}, mu_m = {:.4}, {:.1?}",
            q.fired, q.t_final, q.mu_min_final, quiet.elapsed
        ),
    );
    assert!(pass);
}

const RESIDUALS: [&str; 5] = ["mu", "lb_mu", "l_psi", "t_psi", "psi"];

#[test]
fn criterion_4_residuals_are_stable() {
    let trivial = run(&spec(SeedProfile::zero(), params(1.0, 0.05, 10.0), 128)).unwrap();
    let zero = RESIDUALS
        .iter()
        .all(|k| trivial.report.residual_norms[*k] == 0.0);

    let cases = [(0.1, 10.0), (0.05, 10.0), (0.025, 10.0), (0.05, 20.0)];
    let runs: Vec<RunOutput> = std::thread::scope(|s| {
        let handles: Vec<_> = cases
            .iter()
            .map(|&(d, r0)| {
                s.spawn(move || {
                    let mut sp = spec(quiet_seed(), params(1.0, d, r0), 128);
                    sp.energies = false;
                    run(&sp).unwrap()
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut pass = zero;
    let mut detail = vec![format!("trivial run residuals zero: {zero}")];
    for k in RESIDUALS {
        let v: Vec<f64> = runs.iter().map(|o| o.report.residual_norms[k]).collect();
        let finite = v.iter().all(|x| x.is_finite() && *x > 0.0);
        let halving = v.windows(2).take(2).map(|w| spread(w)).fold(0.0, f64::max);
        let doubling = spread(&[v[1], v[3]]);
        pass &= finite && halving < 3.0 && doubling < 3.0;
        detail.push(format!(
            "{k}: [{:.3}, {:.3}, {:.3} | r0=20 {:.3}] halving {halving:.3}, doubling {doubling:.3}",
            v[0], v[1], v[2], v[3]
        ));
    }
    // Residuals of the shock run, printed for information: they grow like 1/delta near the shock.
    let shock = &shock_run().out.report.residual_norms;
    detail.push(format!(
        "shock run (info): {}",
        RESIDUALS
            .iter()
            .map(|k| format!("{k} {:.3}", shock[*k]))
            .collect::<Vec<_>>()
            .join(", ")
    ));
    report(4, pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn criterion_5_trapping() {
    let fan = &shock_run().out.fan;
    let low = fan
        .core_samples()
        .filter(|s| !s.truncated && s.mu_geom < 0.1)
        .count();
    let violations = trapping_check(fan.core_samples(), TRAPPING_SLACK);
    let worst = fan
        .core_samples()
        .filter(|s| !s.truncated && s.mu_geom < 0.1)
        .map(|s| s.t * s.t * s.lb_mu)
        .fold(f64::MIN, f64::max);
    let pass = low > 0 && violations.is_empty() && shock_run().out.report.trapping_violations == 0;
    report(
        5,
        pass,
        format!(
            "{low} samples with mu < 0.1, {} violations, max t^2 Lb mu = {worst:.4}",
            violations.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_scattering_limit() {
    let table = scattering_probe(&shock_seed(), 1.0, 0.05, &[10.0, 20.0, 40.0, 80.0], 1025).unwrap();
    let last = table.rows.last().unwrap();
    let ratios_ok = table
        .difference_ratios
        .iter()
        .all(|r| (r - 0.5).abs() < 0.1);
    let shrinking = table
        .e0_differences
        .windows(2)
        .all(|d| d[1].abs() < d[0].abs());
    let pass = ratios_ok && shrinking && last.relative_error < 1e-3;
    report(
        6,
        pass,
        format!(
            "E0 differences {:?}, ratios {:?}, |T psi|^2 at r0=80 {:.6} vs limit {:.6} (rel {:.2e})",
            table.e0_differences,
            table.difference_ratios,
            last.t_norm_dt,
            table.limit,
            last.relative_error
        ),
    );
    assert!(pass);
}

/// `dt phi` at `t = 1.1 t*_pred` for the shock seed.
fn pre_shock_state(cpd: usize) -> FieldState {
    let p = params(1.0, 0.05, 10.0);
    let seed = shock_seed();
    let tc = 1.1 * predicted_shock_time(&seed, &p).unwrap().unwrap();
    let cfg = EvolveConfig {
        t_end: tc,
        ..EvolveConfig::default()
    };
    let grid = GridSpec::for_run(&p, cpd, tc, WindowPads::default(), 0.9, cfg.frame).unwrap();
    let data = build_initial_data(&seed, &p, &grid).unwrap();
    evolve(&data, &cfg, &mut []).unwrap().final_state
}

/// `max |p_coarse - p_fine|` over coarse nodes in the fan region.
fn difference(coarse: &FieldState, fine: &FieldState, delta: f64) -> f64 {
    let (lo, hi) = (-coarse.t - 0.2 * delta, -coarse.t + 1.4 * delta);
    (0..coarse.len())
        .filter(|&k| (lo..=hi).contains(&coarse.r(k)))
        .map(|k| (coarse.p[k] - fine.sample(coarse.r(k)).unwrap().p).abs())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_7_solver_quality() {
    let states: Vec<FieldState> = std::thread::scope(|s| {
        let handles: Vec<_> = [256, 512, 1024]
            .into_iter()
            .map(|cpd| s.spawn(move || pre_shock_state(cpd)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let d1 = difference(&states[0], &states[1], 0.05);
    let d2 = difference(&states[1], &states[2], 0.05);
    let order = (d1 / d2).log2();

    let cross = mu_cross_check(&shock_run().out.fan, 0.1);

    let mut lin = spec(shock_seed(), params(0.0, 0.05, 10.0), 128);
    lin.evolve.t_end = -2.0;
    lin.energies = false;
    let lin = run(&lin).unwrap();
    let mu_dev = lin
        .fan
        .core_samples()
        .map(|s| (s.mu_geom - 1.0).abs())
        .fold(0.0, f64::max);

    let pass = order >= 1.8 && cross <= 0.01 && mu_dev <= 1e-6;
    report(
        7,
        pass,
        format!(
            "self-convergence order {order:.3} (diffs {d1:.3e}, {d2:.3e}), mu cross-check {:.3}%, G''=0 max |mu - 1| = {mu_dev:.2e}",
            100.0 * cross
        ),
    );
    assert!(pass);
}
