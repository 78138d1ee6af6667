//! Run configuration: a TOML document with one table per concern, plus
//! dotted `key=value` overrides.
//!
//! Every field has a default, so an empty document is the default shock
//! preset (bump seed at margin `-3 pi/2`, `r0 = 10`, `delta = 0.05`,
//! 512 cells per delta).

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shocklab_core::burgers::{BurgersProblem, BurgersProfile};
use shocklab_core::data::{Phi0Equation, Phi0Options, MIN_CELLS_PER_DELTA};
use shocklab_core::optical::{FanConfig, MIN_RAYS};
use shocklab_core::pipeline::RunSpec;
use shocklab_core::seed::{ModelParams, SeedProfile};
use shocklab_core::solver::{EvolveConfig, Frame, Viscosity, WindowPads};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Bump,
    Sine,
    Ramp,
    Zero,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    pub family: Family,
    /// Amplitude of the preset family; takes precedence over `margin`.
    pub amplitude: Option<f64>,
    /// Rescale the preset family to this shock margin at the model's `g2`.
    pub margin: Option<f64>,
    /// Samples `s, phi1[, phi2]` with a header row, for `family = "csv"`.
    pub csv: Option<PathBuf>,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            family: Family::Bump,
            amplitude: None,
            margin: Some(-1.5 * PI),
            csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub g2: f64,
    pub delta: f64,
    pub r0: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            g2: 1.0,
            delta: 0.05,
            r0: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub cells_per_delta: usize,
    pub cfl: f64,
    pub frame: Frame,
    /// Window pads in units of delta.
    pub inner_pad: f64,
    pub outer_pad: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let pads = WindowPads::default();
        Self {
            cells_per_delta: 512,
            cfl: 0.9,
            frame: Frame::default(),
            inner_pad: pads.inner,
            outer_pad: pads.outer,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    pub t_end: f64,
    pub stop_mu: f64,
    /// Steps between fan records and energy evaluations.
    pub record_every: usize,
    /// Steps between stored field snapshots (0: initial and final only).
    pub snapshot_every: usize,
    pub viscosity_eps: f64,
    pub viscosity_threshold: f64,
    pub energies: bool,
}

impl Default for EvolveSection {
    fn default() -> Self {
        let e = EvolveConfig::default();
        Self {
            t_end: e.t_end,
            stop_mu: e.stop_mu,
            record_every: e.record_every,
            snapshot_every: e.snapshot_every,
            viscosity_eps: e.viscosity.eps,
            viscosity_threshold: e.viscosity.threshold,
            energies: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FanSection {
    pub n_rays: usize,
    pub buffer_fraction: f64,
}

impl Default for FanSection {
    fn default() -> Self {
        let f = FanConfig::default();
        Self {
            n_rays: f.n_rays,
            buffer_fraction: f.buffer_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Phi0Section {
    pub equation: Phi0Equation,
    pub n_samples: usize,
}

impl Default for Phi0Section {
    fn default() -> Self {
        let o = Phi0Options::default();
        Self {
            equation: o.equation,
            n_samples: o.n_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BurgersKind {
    Sine,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurgersSection {
    pub profile: BurgersKind,
    /// Sine amplitude.
    pub amplitude: f64,
    /// Linear profile `offset + slope x`.
    pub offset: f64,
    pub slope: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub n_rays: usize,
    pub t_end: f64,
}

impl Default for BurgersSection {
    fn default() -> Self {
        Self {
            profile: BurgersKind::Sine,
            amplitude: 1.0,
            offset: 0.0,
            slope: -1.0,
            x_min: PI - 0.5,
            x_max: PI + 0.5,
            n_rays: 1024,
            t_end: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    R0,
    Delta,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::R0 => "r0",
            SweepParameter::Delta => "delta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Run the full evolution at every point; otherwise only data and initial energies.
    pub evolve: bool,
    /// Rays of the initial-slice energy quadrature.
    pub energy_rays: usize,
    /// Worker threads (0: rayon default).
    pub threads: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::Delta,
            values: vec![0.1, 0.05, 0.025],
            evolve: true,
            energy_rays: 1025,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: SeedConfig,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub evolve: EvolveSection,
    pub fan: FanSection,
    pub phi0: Phi0Section,
    pub burgers: BurgersSection,
    pub sweep: SweepSection,
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config {
        path: path.to_string(),
        msg: msg.to_string(),
    }
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Sets `key` (dotted path) in `doc`, creating intermediate tables.
pub fn apply_set(doc: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| invalid(assignment, "expected key=value"))?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(invalid(key, "empty path segment"));
    }
    let mut table = doc;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| invalid(&parts[..=i].join("."), "not a table"))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Reads `path` (if any), applies the overrides in order, and validates.
    pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Self> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Io {
                    path: p.to_path_buf(),
                    source: e,
                })?;
                toml::from_str::<toml::Table>(&text)
                    .map_err(|e| invalid(&p.display().to_string(), e.message()))?
            }
            None => toml::Table::new(),
        };
        for s in sets {
            apply_set(&mut doc, s)?;
        }
        Self::from_table(doc)
    }

    pub fn from_table(doc: toml::Table) -> Result<Self> {
        let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(doc)).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().message())
        })?;
        Ok(cfg)
    }

    pub fn params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.g2, m.delta, m.r0).map_err(|e| invalid("model", e))
    }

    pub fn seed_profile(&self) -> Result<SeedProfile> {
        let s = &self.seed;
        let base = match s.family {
            Family::Bump => SeedProfile::bump(s.amplitude.unwrap_or(1.0)),
            Family::Sine => SeedProfile::sine(s.amplitude.unwrap_or(1.0)),
            Family::Ramp => SeedProfile::ramp(s.amplitude.unwrap_or(1.0)),
            Family::Zero => return Ok(SeedProfile::zero()),
            Family::Csv => {
                let path = s
                    .csv
                    .as_ref()
                    .ok_or_else(|| invalid("seed.csv", "required for family = \"csv\""))?;
                let seed = read_seed_csv(path)?;
                match s.amplitude {
                    Some(a) => SeedProfile {
                        phi1: seed.phi1.scaled(a),
                        phi2: seed.phi2,
                    },
                    None => seed,
                }
            }
        };
        let seed = match (s.amplitude, s.margin) {
            (None, Some(m)) => base
                .with_margin(self.model.g2, m)
                .map_err(|e| invalid("seed.margin", e))?,
            _ => base,
        };
        seed.validate().map_err(|e| invalid("seed", e))?;
        Ok(seed)
    }

    /// Run description for the evolve pipeline.
    pub fn run_spec(&self) -> Result<RunSpec> {
        let params = self.params()?;
        let seed = self.seed_profile()?;
        params
            .check_hyperbolic(&seed)
            .map_err(|e| invalid("seed", e))?;
        let g = &self.grid;
        if g.cells_per_delta < MIN_CELLS_PER_DELTA {
            return Err(invalid(
                "grid.cells_per_delta",
                format!("{} < {MIN_CELLS_PER_DELTA}", g.cells_per_delta),
            ));
        }
        if !(g.cfl > 0.0 && g.cfl <= 0.9) {
            return Err(invalid("grid.cfl", format!("{} outside (0, 0.9]", g.cfl)));
        }
        if !(g.inner_pad >= 2.0 && g.outer_pad >= 2.0) {
            return Err(invalid("grid", "inner_pad and outer_pad must be at least 2"));
        }
        let e = &self.evolve;
        if !(e.t_end <= -1.0 && e.t_end > -params.r0) {
            return Err(invalid("evolve.t_end", format!("{} outside (-r0, -1]", e.t_end)));
        }
        if !(e.stop_mu > 0.0 && e.stop_mu < 0.5) {
            return Err(invalid("evolve.stop_mu", format!("{} outside (0, 0.5)", e.stop_mu)));
        }
        if self.fan.n_rays < MIN_RAYS {
            return Err(invalid("fan.n_rays", format!("{} < {MIN_RAYS}", self.fan.n_rays)));
        }
        if !(self.fan.buffer_fraction >= 0.0 && self.fan.buffer_fraction <= 1.0) {
            return Err(invalid("fan.buffer_fraction", "must lie in [0, 1]"));
        }
        if self.phi0.n_samples < 64 {
            return Err(invalid("phi0.n_samples", "must be at least 64"));
        }
        let fan_pad = 1.0 + self.fan.buffer_fraction;
        Ok(RunSpec {
            seed,
            params,
            cells_per_delta: g.cells_per_delta,
            cfl: g.cfl,
            evolve: EvolveConfig {
                t_end: e.t_end,
                stop_mu: e.stop_mu,
                record_every: e.record_every.max(1),
                snapshot_every: e.snapshot_every,
                pads: WindowPads {
                    inner: g.inner_pad,
                    outer: g.outer_pad,
                    fan: fan_pad,
                },
                viscosity: Viscosity {
                    eps: e.viscosity_eps,
                    threshold: e.viscosity_threshold,
                },
                frame: g.frame,
            },
            fan: FanConfig {
                n_rays: self.fan.n_rays,
                buffer_fraction: self.fan.buffer_fraction,
            },
            phi0: Phi0Options {
                equation: self.phi0.equation,
                n_samples: self.phi0.n_samples,
            },
            energies: e.energies,
        })
    }

    pub fn burgers_problem(&self) -> Result<BurgersProblem> {
        let b = &self.burgers;
        let profile = match b.profile {
            BurgersKind::Sine => BurgersProfile::Sine {
                amplitude: b.amplitude,
            },
            BurgersKind::Linear => BurgersProfile::Linear {
                offset: b.offset,
                slope: b.slope,
            },
        };
        if b.n_rays < 3 {
            return Err(invalid("burgers.n_rays", "must be at least 3"));
        }
        if b.t_end < 0.0 {
            return Err(invalid("burgers.t_end", "must be non-negative"));
        }
        BurgersProblem::new(profile, b.x_min, b.x_max).map_err(|e| invalid("burgers", e))
    }

    /// Validated sweep points, as configs with the swept parameter substituted.
    pub fn sweep_points(&self) -> Result<Vec<RunConfig>> {
        let s = &self.sweep;
        if s.values.is_empty() {
            return Err(invalid("sweep.values", "empty sweep list"));
        }
        if s.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("sweep.values", "values must be finite"));
        }
        Ok(s.values
            .iter()
            .map(|&v| {
                let mut c = self.clone();
                match s.parameter {
                    SweepParameter::R0 => c.model.r0 = v,
                    SweepParameter::Delta => c.model.delta = v,
                }
                c
            })
            .collect())
    }
}

#[derive(Debug, Deserialize)]
struct SeedRow {
    s: f64,
    phi1: f64,
    #[serde(default)]
    phi2: f64,
}

fn read_seed_csv(path: &Path) -> Result<SeedProfile> {
    if !path.exists() {
        return Err(invalid("seed.csv", format!("{} does not exist", path.display())));
    }
    let mut rd = csv::Reader::from_path(path).map_err(|e| invalid("seed.csv", e))?;
    let rows = rd
        .deserialize::<SeedRow>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| invalid("seed.csv", e))?;
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let phi1: Vec<f64> = rows.iter().map(|r| r.phi1).collect();
    let phi2: Vec<f64> = rows.iter().map(|r| r.phi2).collect();
    SeedProfile::tabulated(&s, &phi1, &phi2).map_err(|e| invalid("seed.csv", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use shocklab_core::seed::shock_margin;

    #[test]
    fn empty_document_is_the_shock_preset() {
        let c = RunConfig::load(None, &[]).unwrap();
        assert_eq!(c, RunConfig::default());
        let spec = c.run_spec().unwrap();
        assert_eq!(spec.cells_per_delta, 512);
        assert_eq!((spec.params.delta, spec.params.r0, spec.params.g2), (0.05, 10.0, 1.0));
    }

    #[test]
    fn overrides_use_dotted_paths() {
        let c = RunConfig::load(
            None,
            &[
                "model.delta=0.025".into(),
                "grid.frame=fixed".into(),
                "sweep.values=[10, 20, 40]".into(),
                "seed.family = \"sine\"".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.model.delta, 0.025);
        assert_eq!(c.grid.frame, Frame::Fixed);
        assert_eq!(c.sweep.values, vec![10.0, 20.0, 40.0]);
        assert_eq!(c.seed.family, Family::Sine);
    }

    #[test]
    fn errors_carry_the_field_path() {
        let e = RunConfig::load(None, &["model.delta=\"wide\"".into()]).unwrap_err();
        assert!(e.to_string().contains("model.delta"), "{e}");
        let e = RunConfig::load(None, &["grid.spacing=3".into()]).unwrap_err();
        assert!(e.to_string().contains("grid"), "{e}");
        let c = RunConfig::load(None, &["grid.cfl=1.5".into()]).unwrap();
        assert!(c.run_spec().unwrap_err().to_string().contains("grid.cfl"));
        let c = RunConfig::load(None, &["sweep.values=[]".into()]).unwrap();
        assert!(c.sweep_points().unwrap_err().to_string().contains("empty sweep list"));
        assert!(RunConfig::load(None, &["model.delta".into()]).is_err());
    }

    #[test]
    fn amplitude_takes_precedence_over_margin() {
        let p = ModelParams::new(1.0, 0.05, 10.0).unwrap();
        let c = RunConfig::load(None, &["seed.amplitude=1.0".into(), "seed.family=\"sine\"".into()]).unwrap();
        let m = shock_margin(&c.seed_profile().unwrap(), &p).unwrap().margin;
        assert!((m + 1.5 * PI).abs() < 1e-9);
        let c = RunConfig::load(None, &["seed.margin=-0.5".into()]).unwrap();
        let m = shock_margin(&c.seed_profile().unwrap(), &p).unwrap().margin;
        assert!((m + 0.5).abs() < 1e-9);
        let c = RunConfig::load(None, &["seed.margin=0.5".into()]).unwrap();
        assert!(c.seed_profile().unwrap_err().to_string().contains("seed.margin"));
    }

    #[test]
    fn missing_csv_is_reported() {
        let c = RunConfig::load(
            None,
            &["seed.family=\"csv\"".into(), "seed.csv=\"/nonexistent/seed.csv\"".into(), "seed.margin=-5".into()],
        )
        .unwrap();
        let e = c.seed_profile().unwrap_err().to_string();
        assert!(e.contains("seed.csv") && e.contains("does not exist"), "{e}");
    }
}
