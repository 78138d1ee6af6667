//! The four pipelines. Each writes its artifacts into one directory and
//! finishes with `manifest.json`.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use shocklab_core::burgers::burgers_fan_validate;
use shocklab_core::data::{build_initial_data_with, verify_radiation_bounds, InitialData, PulseProfile, RadiationBounds};
use shocklab_core::energy::{initial_energy, scattering_probe};
use shocklab_core::optical::{first_crossing_extrapolated, mu_cross_check, trchib_diagnostics, TrchibDiagnostics};
use shocklab_core::pipeline::{run, RunOutput, RunSpec};
use shocklab_core::seed::{shock_margin, shock_time_from_margin};
use shocklab_core::solver::{GridSpec, StopReason};

use crate::config::{RunConfig, SweepParameter};
use crate::error::{CliError, Result};
use crate::output::{initial_data_rows, snapshot_rows, Manifest, RunDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Datagen,
    Evolve,
    Burgers,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Datagen => "datagen",
            Mode::Evolve => "evolve",
            Mode::Burgers => "burgers",
            Mode::Sweep => "sweep",
        }
    }
}

/// Runs `mode` into `out` and always writes a manifest, also on failure.
pub fn execute(mode: Mode, cfg: &RunConfig, out: &Path) -> Result<()> {
    let start = Instant::now();
    let mut dir = RunDir::create(out)?;
    let result = match mode {
        Mode::Datagen => datagen(cfg, &mut dir).map(|_| None),
        Mode::Evolve => evolve(cfg, &mut dir).map(|o| Some(o.trajectory.stop)),
        Mode::Burgers => burgers(cfg, &mut dir).map(|_| None),
        Mode::Sweep => sweep(cfg, &mut dir).map(|_| None),
    };
    let manifest = Manifest {
        tool: "shocklab",
        version: env!("CARGO_PKG_VERSION"),
        mode: mode.name(),
        config: cfg,
        status: if result.is_ok() { "ok" } else { "failed" },
        stop_reason: result.as_ref().ok().copied().flatten().map(stop_name),
        error: result.as_ref().err().map(|e| e.to_string()),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: dir.written.clone(),
    };
    dir.json("manifest.json", &manifest)?;
    result.map(|_| ())
}

fn stop_name(s: StopReason) -> String {
    match s {
        StopReason::ReachedEnd => "reached_end".into(),
        StopReason::MuBelowThreshold => "mu_below_threshold".into(),
    }
}

#[derive(Debug, Serialize)]
struct DataSummary {
    ratio1: f64,
    ratio2: f64,
    margin: f64,
    s_min: f64,
    fires: bool,
    t_star_predicted: Option<f64>,
    tail_coefficient: f64,
    grid: GridSpec,
}

fn build_data(spec: &RunSpec) -> Result<(InitialData, RadiationBounds)> {
    let grid = spec.grid()?;
    let data = build_initial_data_with(&spec.seed, &spec.params, &grid, spec.phi0)?;
    let bounds = verify_radiation_bounds(&data)?;
    Ok((data, bounds))
}

fn write_data(spec: &RunSpec, dir: &mut RunDir) -> Result<(InitialData, RadiationBounds)> {
    let (data, bounds) = build_data(spec)?;
    let m = shock_margin(&spec.seed, &spec.params)?;
    dir.csv("initial_data.csv", initial_data_rows(&data))?;
    dir.json(
        "initial_data.json",
        &DataSummary {
            ratio1: bounds.ratio1,
            ratio2: bounds.ratio2,
            margin: m.margin,
            s_min: m.s_min,
            fires: m.fires,
            t_star_predicted: shock_time_from_margin(m.margin, spec.params.r0),
            tail_coefficient: data.profile.tail_coefficient(),
            grid: data.grid,
        },
    )?;
    Ok((data, bounds))
}

pub fn datagen(cfg: &RunConfig, dir: &mut RunDir) -> Result<RadiationBounds> {
    let spec = cfg.run_spec()?;
    Ok(write_data(&spec, dir)?.1)
}

#[derive(Debug, Serialize)]
struct RunSummary {
    stop_reason: String,
    steps: usize,
    t_final: f64,
    mu_min_final: Option<f64>,
    bounds: RadiationBounds,
    grid: GridSpec,
    n_rays: usize,
    n_records: usize,
    crossing_observed: Option<f64>,
    crossing_extrapolated: Option<f64>,
    /// Largest relative gap between the two inverse densities while both exceed 0.1.
    mu_cross_check: f64,
    trchib: TrchibDiagnostics,
}

#[derive(Serialize)]
struct MuMinRow {
    t: f64,
    mu_min: f64,
    ub: f64,
    min_gap: f64,
}

pub fn evolve(cfg: &RunConfig, dir: &mut RunDir) -> Result<RunOutput> {
    let spec = cfg.run_spec()?;
    write_data(&spec, dir)?;
    let out = run(&spec)?;
    write_run(&out, dir)?;
    Ok(out)
}

fn write_run(out: &RunOutput, dir: &mut RunDir) -> Result<()> {
    let fan = &out.fan;
    dir.csv("trajectory.csv", snapshot_rows(&out.trajectory.snapshots))?;
    dir.csv("fan.csv", fan.records.iter().flat_map(|r| r.samples.iter()))?;
    dir.csv(
        "mu_min.csv",
        fan.mu_min.iter().map(|p| MuMinRow {
            t: p.t,
            mu_min: p.mu_min,
            ub: p.ub,
            min_gap: p.min_gap,
        }),
    )?;
    dir.csv("energies.csv", out.energies.iter())?;
    dir.json("shock_report.json", &out.report)?;
    dir.json(
        "run.json",
        &RunSummary {
            stop_reason: stop_name(out.trajectory.stop),
            steps: out.trajectory.steps,
            t_final: out.trajectory.t_final,
            mu_min_final: out.trajectory.mu_min_final,
            bounds: out.bounds,
            grid: out.trajectory.final_state.grid,
            n_rays: fan.n_core,
            n_records: fan.records.len(),
            crossing_observed: fan.crossing_observed,
            crossing_extrapolated: first_crossing_extrapolated(fan),
            mu_cross_check: mu_cross_check(fan, 0.1),
            trchib: trchib_diagnostics(fan),
        },
    )
}

#[derive(Serialize)]
struct CharacteristicRow {
    x0: f64,
    u0: f64,
    du0: f64,
}

pub fn burgers(cfg: &RunConfig, dir: &mut RunDir) -> Result<()> {
    let problem = cfg.burgers_problem()?;
    let report = burgers_fan_validate(&problem, cfg.burgers.n_rays, cfg.burgers.t_end)?;
    dir.json("burgers_report.json", &report)?;
    dir.csv(
        "burgers_characteristics.csv",
        problem.feet(cfg.burgers.n_rays).into_iter().map(|x| CharacteristicRow {
            x0: x,
            u0: problem.profile.u0(x),
            du0: problem.profile.du0(x),
        }),
    )?;
    Ok(())
}

#[derive(Debug, Default, Serialize)]
struct SweepRow {
    parameter: &'static str,
    value: f64,
    status: &'static str,
    error: String,
    ratio1: Option<f64>,
    ratio2: Option<f64>,
    margin: Option<f64>,
    t_star_predicted: Option<f64>,
    e0_initial: Option<f64>,
    t_norm_initial: Option<f64>,
    stop_reason: Option<String>,
    fired: Option<bool>,
    t_star_observed: Option<f64>,
    relative_timing_error: Option<f64>,
    mu_min_final: Option<f64>,
    t_final: Option<f64>,
    residual_mu: Option<f64>,
    residual_lb_mu: Option<f64>,
    residual_l_psi: Option<f64>,
    residual_t_psi: Option<f64>,
    residual_psi: Option<f64>,
    trapping_violations: Option<usize>,
    mu_cross_check: Option<f64>,
}

fn sweep_point(cfg: &RunConfig, param: SweepParameter, value: f64, dir: &Path) -> SweepRow {
    let mut row = SweepRow {
        parameter: param.name(),
        value,
        ..SweepRow::default()
    };
    let mode = if cfg.sweep.evolve { Mode::Evolve } else { Mode::Datagen };
    let result = (|| -> Result<()> {
        let spec = cfg.run_spec()?;
        let profile = PulseProfile::new(&spec.seed, &spec.params, spec.phi0)?;
        let e = initial_energy(&profile, cfg.sweep.energy_rays)?;
        row.e0_initial = Some(e.e0_dt);
        row.t_norm_initial = Some(e.t_norm_dt);
        let m = shock_margin(&spec.seed, &spec.params)?;
        row.margin = Some(m.margin);
        row.t_star_predicted = shock_time_from_margin(m.margin, spec.params.r0);
        let start = Instant::now();
        let mut rd = RunDir::create(dir)?;
        let res = if cfg.sweep.evolve {
            evolve(cfg, &mut rd).map(Some)
        } else {
            datagen(cfg, &mut rd).map(|b| {
                row.ratio1 = Some(b.ratio1);
                row.ratio2 = Some(b.ratio2);
                None
            })
        };
        let manifest = Manifest {
            tool: "shocklab",
            version: env!("CARGO_PKG_VERSION"),
            mode: mode.name(),
            config: cfg,
            status: if res.is_ok() { "ok" } else { "failed" },
            stop_reason: res
                .as_ref()
                .ok()
                .and_then(|o| o.as_ref().map(|o| stop_name(o.trajectory.stop))),
            error: res.as_ref().err().map(|e| e.to_string()),
            wall_time_s: start.elapsed().as_secs_f64(),
            outputs: rd.written.clone(),
        };
        rd.json("manifest.json", &manifest)?;
        if let Some(out) = res? {
            let r = &out.report;
            let n = &r.residual_norms;
            row.ratio1 = Some(out.bounds.ratio1);
            row.ratio2 = Some(out.bounds.ratio2);
            row.stop_reason = Some(stop_name(out.trajectory.stop));
            row.fired = Some(r.fired);
            row.t_star_observed = r.t_star_observed;
            row.relative_timing_error = r.relative_timing_error;
            row.mu_min_final = Some(r.mu_min_final);
            row.t_final = Some(r.t_final);
            row.residual_mu = n.get("mu").copied();
            row.residual_lb_mu = n.get("lb_mu").copied();
            row.residual_l_psi = n.get("l_psi").copied();
            row.residual_t_psi = n.get("t_psi").copied();
            row.residual_psi = n.get("psi").copied();
            row.trapping_violations = Some(r.trapping_violations);
            row.mu_cross_check = Some(mu_cross_check(&out.fan, 0.1));
        }
        Ok(())
    })();
    match result {
        Ok(()) => row.status = "ok",
        Err(e) => {
            row.status = "failed";
            row.error = e.to_string();
        }
    }
    row
}

pub fn sweep(cfg: &RunConfig, dir: &mut RunDir) -> Result<()> {
    let points = cfg.sweep_points()?;
    let param = cfg.sweep.parameter;
    let values = &cfg.sweep.values;
    let work = || -> Vec<SweepRow> {
        points
            .par_iter()
            .zip(values.par_iter())
            .enumerate()
            .map(|(k, (c, &v))| {
                let sub = dir.dir.join("points").join(format!("{k:03}_{}_{v}", param.name()));
                sweep_point(c, param, v, &sub)
            })
            .collect()
    };
    let rows = if cfg.sweep.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.sweep.threads)
            .build()
            .map_err(|e| CliError::Config {
                path: "sweep.threads".into(),
                msg: e.to_string(),
            })?
            .install(work)
    } else {
        work()
    };
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    for r in rows.iter().filter(|r| r.status != "ok") {
        eprintln!("sweep point {} = {} failed: {}", r.parameter, r.value, r.error);
    }
    let total = rows.len();
    dir.csv("sweep.csv", rows)?;

    if param == SweepParameter::R0 {
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        if values.len() >= 3 && increasing {
            let table = scattering_probe(
                &cfg.seed_profile()?,
                cfg.model.g2,
                cfg.model.delta,
                values,
                cfg.sweep.energy_rays,
            )?;
            dir.json("scattering.json", &table)?;
        } else {
            eprintln!("scattering.json skipped: needs at least 3 increasing r0 values");
        }
    }
    if failed > 0 {
        return Err(CliError::SweepFailed { failed, total });
    }
    Ok(())
}
