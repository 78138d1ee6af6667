//! End-to-end run: data, evolution with the fan traced in step, energies on
//! the record cadence, and the shock report.

use serde::{Deserialize, Serialize};

use crate::data::{build_initial_data_with, verify_radiation_bounds, Phi0Options, RadiationBounds};
use crate::energy::{slice_energy, EnergyRecord, SliceGeometry};
use crate::error::{Error, Result};
use crate::optical::{CharacteristicFan, FanConfig, FanTracer};
use crate::seed::{ModelParams, SeedProfile};
use crate::shock::{detect, ShockReport};
use crate::solver::{evolve, EvolveConfig, FieldState, GridSpec, Observer, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub seed: SeedProfile,
    pub params: ModelParams,
    pub cells_per_delta: usize,
    pub cfl: f64,
    pub evolve: EvolveConfig,
    pub fan: FanConfig,
    pub phi0: Phi0Options,
    /// Evaluate slice energies on the record cadence.
    pub energies: bool,
}

impl RunSpec {
    pub fn new(seed: SeedProfile, params: ModelParams) -> Self {
        Self {
            seed,
            params,
            cells_per_delta: 512,
            cfl: 0.9,
            evolve: EvolveConfig::default(),
            fan: FanConfig::default(),
            phi0: Phi0Options::default(),
            energies: true,
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::for_run(
            &self.params,
            self.cells_per_delta,
            self.evolve.t_end,
            self.evolve.pads,
            self.cfl,
            self.evolve.frame,
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub bounds: RadiationBounds,
    pub trajectory: Trajectory,
    pub fan: CharacteristicFan,
    pub energies: Vec<EnergyRecord>,
    pub report: ShockReport,
}

struct RunObserver {
    tracer: FanTracer,
    energies: Option<Vec<EnergyRecord>>,
}

impl RunObserver {
    fn energy(&mut self, state: &FieldState) -> Result<()> {
        let Some(out) = self.energies.as_mut() else {
            return Ok(());
        };
        if out.last().map(|e| e.t) == Some(state.t) {
            return Ok(());
        }
        let n = self.tracer.n_core();
        let labels = &self.tracer.labels()[..n];
        let r = self.tracer.radii();
        let mu = &self.tracer.mu_geom()[..n];
        let slice = SliceGeometry {
            t: state.t,
            labels,
            r: &r[..n],
            mu,
        };
        match slice_energy(state, &slice, self.tracer.fan().params.delta) {
            Ok(e) => out.push(e),
            Err(Error::SliceInvalid { .. } | Error::OutsideWindow { .. }) => {}
            Err(e) => return Err(e),
        }
        Ok(())
    }
}

impl Observer for RunObserver {
    fn on_start(&mut self, state: &FieldState) -> Result<()> {
        self.tracer.on_start(state)?;
        self.energy(state)
    }

    fn on_step(&mut self, prev: &FieldState, next: &FieldState, record: bool) -> Result<()> {
        self.tracer.on_step(prev, next, record)?;
        if record {
            self.energy(next)?;
        }
        Ok(())
    }

    fn on_finish(&mut self, state: &FieldState) -> Result<()> {
        self.tracer.on_finish(state)?;
        self.energy(state)
    }

    fn mu_min(&self) -> Option<f64> {
        self.tracer.mu_min()
    }
}

pub fn run(spec: &RunSpec) -> Result<RunOutput> {
    let grid = spec.grid()?;
    let data = build_initial_data_with(&spec.seed, &spec.params, &grid, spec.phi0)?;
    let bounds = verify_radiation_bounds(&data)?;
    let mut obs = RunObserver {
        tracer: FanTracer::new(spec.params, spec.fan)?,
        energies: spec.energies.then(Vec::new),
    };
    let trajectory = evolve(&data, &spec.evolve, &mut [&mut obs])?;
    let fan = obs.tracer.into_fan();
    let report = detect(&fan, &spec.seed, &spec.params, spec.evolve.stop_mu)?;
    Ok(RunOutput {
        bounds,
        trajectory,
        fan,
        energies: obs.energies.unwrap_or_default(),
        report,
    })
}
