//! Artifact writers. CSV files carry a header row; floats use the shortest
//! round-trip representation, so identical runs give identical bytes.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use shocklab_core::data::InitialData;
use shocklab_core::solver::FieldState;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Collects the names of the files written into one run directory.
#[derive(Debug)]
pub struct RunDir {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl RunDir {
    pub fn create(dir: &Path) -> Result<Self> {
        ensure_dir(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        for row in rows {
            w.serialize(row)?;
        }
        w.flush().map_err(io_err(&path))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n").map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
        self.written.push(name.to_string());
        Ok(())
    }
}

#[derive(Serialize)]
struct DataRow {
    r: f64,
    phi: f64,
    dtphi: f64,
    drphi: f64,
}

pub fn initial_data_rows(data: &InitialData) -> impl Iterator<Item = impl Serialize> + '_ {
    (0..data.r.len()).map(|i| DataRow {
        r: data.r[i],
        phi: data.phi[i],
        dtphi: data.dtphi[i],
        drphi: data.drphi[i],
    })
}

#[derive(Serialize)]
struct SnapshotRow {
    t: f64,
    r: f64,
    p: f64,
    q: f64,
    phi: f64,
}

pub fn snapshot_rows(snaps: &[FieldState]) -> impl Iterator<Item = impl Serialize> + '_ {
    snaps.iter().flat_map(|s| {
        (0..s.len()).map(move |k| SnapshotRow {
            t: s.t,
            r: s.r(k),
            p: s.p[k],
            q: s.q[k],
            phi: s.phi[k],
        })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub mode: &'a str,
    pub config: &'a RunConfig,
    pub status: &'static str,
    pub stop_reason: Option<String>,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}
