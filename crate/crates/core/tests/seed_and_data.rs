mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use shocklab_core::data::{build_initial_data, solve_phi0_ode, verify_radiation_bounds, Phi0Equation, Phi0Options};
use shocklab_core::seed::{
    predicted_shock_time, shock_margin, shock_margin_with_resolution, shock_time_from_margin, SeedProfile,
};
use shocklab_core::solver::GridSpec;

fn family(kind: u8, amplitude: f64) -> SeedProfile {
    match kind {
        0 => SeedProfile::sine(amplitude),
        _ => SeedProfile::bump(amplitude),
    }
}

/// Root of `1 + (1/|t| - 1/r0) m` by bisection on `|t|` in `[1e-9, r0]`.
fn bisect_shock_time(m: f64, r0: f64) -> f64 {
    let f = |a: f64| 1.0 + (1.0 / a - 1.0 / r0) * m;
    let (mut lo, mut hi) = (1e-9, r0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    -0.5 * (lo + hi)
}

#[test]
fn default_shock_seed_predictions() {
    let p = params(1.0, 0.05, 10.0);
    for seed in [shock_seed(), sine_shock_seed(), SeedProfile::sine(1.0)] {
        let m = shock_margin(&seed, &p).unwrap();
        assert!((m.margin - SHOCK_MARGIN).abs() < 1e-9 && m.fires);
        let t = predicted_shock_time(&seed, &p).unwrap().unwrap();
        assert!((t - bisect_shock_time(m.margin, 10.0)).abs() < 1e-9);
        assert!((t + 3.2030).abs() < 5e-4, "{t}");
    }
    assert_eq!(predicted_shock_time(&quiet_seed(), &p).unwrap(), None);
    assert!(!shock_margin(&quiet_seed(), &p).unwrap().fires);
}

#[test]
fn radiation_ratios_do_not_depend_on_resolution() {
    let p = params(1.0, 0.05, 10.0);
    let b: Vec<_> = [128, 512]
        .into_iter()
        .map(|cpd| {
            let g = GridSpec::aligned(&p, cpd, 9.8, 10.2, 0.9).unwrap();
            verify_radiation_bounds(&build_initial_data(&shock_seed(), &p, &g).unwrap()).unwrap()
        })
        .collect();
    assert!((b[0].ratio1 / b[1].ratio1 - 1.0).abs() < 0.02, "{b:?}");
    assert!((b[0].ratio2 / b[1].ratio2 - 1.0).abs() < 0.02, "{b:?}");
}

#[test]
fn constraint_and_reduced_profiles_agree_to_order_delta() {
    let p = params(1.0, 0.05, 10.0);
    let seed = shock_seed();
    let slope = |equation| {
        solve_phi0_ode(&seed, &p, Phi0Options { equation, n_samples: 4096 })
            .unwrap()
            .max_abs_slope()
    };
    let (a, b) = (slope(Phi0Equation::Constraint), slope(Phi0Equation::Reduced));
    assert!((a / b - 1.0).abs() < p.delta / p.r0 * 2.0, "{a} {b}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn margin_is_invariant_under_refinement(kind in 0u8..2, amp in 0.1f64..3.0, g2 in prop::sample::select(vec![-1.0, 0.5, 1.0, 2.0])) {
        let p = params(g2, 0.05, 10.0);
        let seed = family(kind, amp);
        let a = shock_margin_with_resolution(&seed, &p, 1 << 12).unwrap().margin;
        let b = shock_margin_with_resolution(&seed, &p, 1 << 14).unwrap().margin;
        prop_assert!((a - b).abs() <= 1e-6 * a.abs(), "{} {}", a, b);
    }

    #[test]
    fn margin_scales_with_the_square_of_the_amplitude(kind in 0u8..2, lambda in 0.05f64..4.0) {
        let p = params(1.0, 0.05, 10.0);
        let base = shock_margin(&family(kind, 1.0), &p).unwrap().margin;
        let scaled = shock_margin(&family(kind, lambda), &p).unwrap().margin;
        prop_assert!((scaled - lambda * lambda * base).abs() <= 1e-10 * base.abs() * lambda * lambda);
    }

    #[test]
    fn sine_margin_is_minus_three_halves_pi_amplitude_squared(amp in 0.1f64..3.0) {
        let m = shock_margin(&SeedProfile::sine(amp), &params(1.0, 0.05, 10.0)).unwrap().margin;
        prop_assert!((m + 1.5 * PI * amp * amp).abs() < 1e-9 * amp * amp);
    }

    #[test]
    fn predicted_time_is_monotone_in_r0(m in -50.0f64..-1.01) {
        let ts: Vec<f64> = [5.0, 10.0, 20.0, 40.0]
            .into_iter()
            .filter_map(|r0| shock_time_from_margin(m, r0))
            .map(f64::abs)
            .collect();
        prop_assert!(ts.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(ts.iter().all(|t| *t < m.abs()));
    }

    #[test]
    fn predicted_time_solves_the_leading_order_equation(m in -50.0f64..-0.1, r0 in 2.0f64..100.0) {
        match shock_time_from_margin(m, r0) {
            Some(t) => {
                prop_assert!(t <= -1.0);
                prop_assert!((t - bisect_shock_time(m, r0)).abs() < 1e-9 * r0);
            }
            None => prop_assert!(bisect_shock_time(m, r0) > -1.0),
        }
    }

    #[test]
    fn data_are_exactly_trivial_inside_the_initial_ball(
        kind in 0u8..2,
        amp in 0.1f64..2.0,
        delta in prop::sample::select(vec![0.1, 0.05, 0.025]),
        r0 in prop::sample::select(vec![5.0, 10.0, 20.0]),
    ) {
        let p = params(1.0, delta, r0);
        let g = GridSpec::aligned(&p, 64, r0 - 3.0 * delta, r0 + 3.0 * delta, 0.9).unwrap();
        let d = build_initial_data(&family(kind, amp), &p, &g).unwrap();
        for i in 0..d.r.len() {
            if d.r[i] <= r0 {
                prop_assert_eq!((d.phi[i], d.dtphi[i], d.drphi[i]), (0.0, 0.0, 0.0));
            }
        }
        // exterior tail is static: dt phi = 0 and r phi constant
        let a = d.profile.tail_coefficient();
        for i in 0..d.r.len() {
            if d.r[i] > r0 + delta * (1.0 + 1e-9) {
                prop_assert_eq!(d.dtphi[i], 0.0);
                prop_assert!((d.r[i] * d.phi[i] - a).abs() <= 1e-12 * a.abs());
            }
        }
    }

    #[test]
    fn phi0_slope_is_controlled_by_the_seed(kind in 0u8..2, amp in 0.1f64..3.0, g2 in -1.0f64..1.0) {
        let p = params(g2, 0.05, 10.0);
        let seed = family(kind, amp);
        let prof = solve_phi0_ode(&seed, &p, Phi0Options::default()).unwrap();
        prop_assert_eq!((prof.phi0[0], prof.dphi0[0]), (0.0, 0.0));
        prop_assert!(prof.max_abs_slope() <= 1.05 * seed.phi1_sup() + 1e-12);
    }
}
