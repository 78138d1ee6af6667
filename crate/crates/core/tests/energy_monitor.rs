mod common;

use std::f64::consts::PI;

use common::*;
use shocklab_core::data::{Phi0Options, PulseProfile};
use shocklab_core::energy::{initial_energy, scattering_limit, scattering_probe};
use shocklab_core::pipeline::run;
use shocklab_core::seed::{Profile, SeedProfile};
use shocklab_core::Error;

#[test]
fn limit_quadrature_examples() {
    assert!((scattering_limit(&SeedProfile::ramp(1.0)) - 4.0 * PI).abs() < 1e-12);
    // A sin(pi s): 4 pi A^2 pi^2 / 2
    let l = scattering_limit(&SeedProfile::sine(0.5));
    assert!((l - 4.0 * PI * 0.25 * PI * PI / 2.0).abs() < 1e-9, "{l}");
    assert_eq!(scattering_limit(&SeedProfile::zero()), 0.0);
}

#[test]
fn initial_energy_is_order_one_in_delta() {
    let e: Vec<f64> = [0.1, 0.05, 0.025]
        .into_iter()
        .map(|d| {
            let prof = PulseProfile::new(&shock_seed(), &params(1.0, d, 10.0), Phi0Options::default()).unwrap();
            initial_energy(&prof, 1025).unwrap().e0_dt
        })
        .collect();
    assert!(spread(&e) < 1.05, "{e:?}");
    let limit = 4.0 * scattering_limit(&shock_seed());
    assert!(e.iter().all(|v| (v / limit - 1.0).abs() < 0.05), "{e:?} {limit}");
}

#[test]
fn scattering_probe_validates_its_radii() {
    let seed = shock_seed();
    assert!(matches!(
        scattering_probe(&seed, 1.0, 0.05, &[10.0, 20.0], 257),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        scattering_probe(&seed, 1.0, 0.05, &[10.0, 40.0, 20.0], 257),
        Err(Error::InvalidArgument(_))
    ));
}

#[test]
fn scattering_table_converges_to_the_limit() {
    let t = scattering_probe(&SeedProfile::sine(1.0), 1.0, 0.05, &[10.0, 20.0, 40.0, 80.0], 1025).unwrap();
    let errs: Vec<f64> = t.rows.iter().map(|r| r.relative_error).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    assert!((t.extrapolated_limit / t.limit - 1.0).abs() < errs[3] / 10.0, "{errs:?} {} {}", t.extrapolated_limit, t.limit);
    for r in &t.rows {
        assert!(r.e0_dt >= 0.0 && r.e1_dt >= 0.0 && r.e0_dr >= 0.0 && r.e1_dr >= 0.0);
    }
}

#[test]
fn energies_stay_bounded_along_the_evolution() {
    let mut s = spec(quiet_seed(), params(1.0, 0.05, 10.0), 64);
    s.evolve.record_every = 50;
    let out = run(&s).unwrap();
    assert!(out.energies.len() > 10);
    let e0 = out.energies[0].e0_dt;
    assert_eq!(out.energies[0].t, -10.0);
    for e in &out.energies {
        assert!(e.e0_dt >= 0.0 && e.e1_dt >= 0.0 && e.e0_dr >= 0.0 && e.e1_dr >= 0.0);
        assert!(e.e0_dt <= 4.0 * e0, "{} at t = {}", e.e0_dt, e.t);
    }
}

#[test]
fn tabulated_seed_matches_its_preset() {
    let s: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let phi1: Vec<f64> = s.iter().map(|&x| (PI * x).sin()).collect();
    let tab = SeedProfile::tabulated(&s, &phi1, &vec![0.0; s.len()]).unwrap();
    assert!(matches!(tab.phi1, Profile::Tabulated(_)));
    let a = scattering_limit(&tab);
    let b = scattering_limit(&SeedProfile::sine(1.0));
    assert!((a / b - 1.0).abs() < 1e-4, "{a} {b}");
}
