//! Radial solver for `-c^{-2} dt^2 phi + dr^2 phi + (2/r) dr phi = 0` in first-order form
//! `dt p = c^2 (dr q + 2 q / r)`, `dt q = dr p`, `dt phi = p`.
//!
//! Two discretization frames share one kernel.
//!
//! * [`Frame::Comoving`]: the grid moves inward at unit speed, so node `i` sits at
//!   `r = grid.r(i) - (t - t0)`. In `x = r + t` the system reads
//!   `dt p = c^2 (dx q + 2 q / r) - dx p`, `dt q = dx p - dx q`, `dt phi = p - q`,
//!   with characteristic speeds `1 - c` and `1 + c`. The incoming pulse then
//!   barely moves relative to the grid, the left end is inflow from the
//!   trivial region and the right end is outflow.
//! * [`Frame::Fixed`]: the grid is fixed and only a window that follows the
//!   pulse is updated. Nodes left of the window stay exactly zero, nodes right
//!   of it keep the values they had when the window left them.

use serde::{Deserialize, Serialize};

use crate::data::InitialData;
use crate::error::{Error, Result};
use crate::numerics::lagrange4_weights;
use crate::seed::ModelParams;

/// Smallest admissible value of `1 + 3 g2 p^2`.
pub const HYPERBOLICITY_FLOOR: f64 = 1e-6;

/// Returns `(c, dc^2/drho)` for `c = (1 + 3 g2 p^2)^{-1/2}` and `rho = p^2`.
pub fn wave_speed(p: f64, g2: f64) -> Result<(f64, f64)> {
    let a = 1.0 + 3.0 * g2 * p * p;
    if !(a > HYPERBOLICITY_FLOOR) {
        return Err(Error::Hyperbolicity {
            t: f64::NAN,
            r: f64::NAN,
            p,
            snapshot: None,
        });
    }
    let c2 = 1.0 / a;
    Ok((c2.sqrt(), -3.0 * g2 * c2 * c2))
}

fn locate(err: Error, t: f64, r: f64) -> Error {
    match err {
        Error::Hyperbolicity { p, snapshot, .. } => Error::Hyperbolicity { t, r, p, snapshot },
        e => e,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub n_cells: usize,
    pub cfl: f64,
}

impl GridSpec {
    pub fn new(r_min: f64, r_max: f64, n_cells: usize, cfl: f64) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::Grid(format!(
                "need 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if n_cells < 512 {
            return Err(Error::Grid(format!("n_cells = {n_cells} < 512")));
        }
        if !(cfl > 0.0 && cfl <= 0.9) {
            return Err(Error::Grid(format!("cfl = {cfl} outside (0, 0.9]")));
        }
        Ok(Self {
            r_min,
            r_max,
            n_cells,
            cfl,
        })
    }

    /// Grid with spacing `delta / cells_per_delta` that has `r0` as a node and covers `[r_lo, r_hi]`.
    pub fn aligned(
        params: &ModelParams,
        cells_per_delta: usize,
        r_lo: f64,
        r_hi: f64,
        cfl: f64,
    ) -> Result<Self> {
        if cells_per_delta == 0 {
            return Err(Error::Grid("cells_per_delta must be positive".into()));
        }
        let dr = params.delta / cells_per_delta as f64;
        let k_lo = ((params.r0 - r_lo) / dr).ceil().max(0.0) as usize;
        let k_lo = k_lo.min(((params.r0 / dr).ceil() as usize).saturating_sub(1));
        let k_hi = ((r_hi - params.r0) / dr).ceil().max(1.0) as usize;
        let n = (k_lo + k_hi).max(512);
        let k_hi = n - k_lo;
        Self::new(
            params.r0 - k_lo as f64 * dr,
            params.r0 + k_hi as f64 * dr,
            n,
            cfl,
        )
    }

    /// Aligned grid large enough for a run from `t = -r0` to `t_end` with the given window pads (in units of delta).
    /// In the comoving frame only the initial window is needed.
    pub fn for_run(
        params: &ModelParams,
        cells_per_delta: usize,
        t_end: f64,
        pads: WindowPads,
        cfl: f64,
        frame: Frame,
    ) -> Result<Self> {
        let dr = params.delta / cells_per_delta.max(1) as f64;
        let r_lo = match frame {
            Frame::Fixed => -t_end - pads.inner * params.delta - 8.0 * dr,
            Frame::Comoving => params.r0 - pads.inner * params.delta - 8.0 * dr,
        };
        let r_hi = params.r0 + (pads.fan + pads.outer) * params.delta + 8.0 * dr;
        Self::aligned(params, cells_per_delta, r_lo.max(dr), r_hi, cfl)
    }

    pub fn dr(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_cells as f64
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn r(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.dr()
    }

    /// Nearest node index, clamped to the grid.
    pub fn node_of(&self, r: f64) -> usize {
        let x = ((r - self.r_min) / self.dr()).round();
        x.clamp(0.0, self.n_cells as f64) as usize
    }
}

/// Frame in which the radial grid is laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    /// Grid fixed in `r`, masked window.
    Fixed,
    /// Grid translating inward with unit speed.
    #[default]
    Comoving,
}

/// Window geometry around the fan, in units of delta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowPads {
    pub inner: f64,
    pub outer: f64,
    /// Radial extent of the traced fan, buffer rays included.
    pub fan: f64,
}

impl Default for WindowPads {
    fn default() -> Self {
        Self {
            inner: 2.0,
            outer: 3.0,
            fan: 1.2,
        }
    }
}

/// Pointwise field values and radial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalField {
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub phi: f64,
    pub dr_p: f64,
    pub dr_q: f64,
}

impl LocalField {
    /// `dt p` from the field equation, for a given wave speed.
    pub fn dt_p(&self, c: f64) -> f64 {
        c * c * (self.dr_q + 2.0 * self.q / self.r)
    }
}

/// Anything that can report the local field at a radius on a fixed time slice.
pub trait LocalFieldSource {
    fn time(&self) -> f64;
    fn g2(&self) -> f64;
    fn sample(&self, r: f64) -> Result<LocalField>;
}

/// Snapshot of `(p, q, phi)` on a contiguous range of grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub t: f64,
    pub g2: f64,
    pub grid: GridSpec,
    /// Global index of the first stored node.
    pub offset: usize,
    /// Time at which the grid started moving inward; `None` for a fixed grid.
    pub t_anchor: Option<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub phi: Vec<f64>,
}

impl FieldState {
    pub fn zeros(grid: GridSpec, g2: f64, t: f64) -> Self {
        let n = grid.n_nodes();
        Self {
            t,
            g2,
            grid,
            offset: 0,
            t_anchor: None,
            p: vec![0.0; n],
            q: vec![0.0; n],
            phi: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Radius of the `k`-th stored node.
    pub fn r(&self, k: usize) -> f64 {
        self.grid.r(self.offset + k) - self.shift()
    }

    /// Inward displacement of the grid since `t_anchor`.
    pub fn shift(&self) -> f64 {
        self.t_anchor.map_or(0.0, |t0| self.t - t0)
    }

    pub fn frame(&self) -> Frame {
        if self.t_anchor.is_some() {
            Frame::Comoving
        } else {
            Frame::Fixed
        }
    }

    /// Copy of global nodes `lo..=hi`, clipped to what is stored.
    pub fn windowed(&self, lo: usize, hi: usize) -> FieldState {
        let a = lo.max(self.offset) - self.offset;
        let b = (hi.min(self.offset + self.len() - 1) - self.offset).max(a);
        FieldState {
            t: self.t,
            g2: self.g2,
            grid: self.grid,
            offset: self.offset + a,
            t_anchor: self.t_anchor,
            p: self.p[a..=b].to_vec(),
            q: self.q[a..=b].to_vec(),
            phi: self.phi[a..=b].to_vec(),
        }
    }

    /// Value at a stored node by global index.
    pub fn p_at(&self, i: usize) -> Option<f64> {
        i.checked_sub(self.offset).and_then(|k| self.p.get(k).copied())
    }

    pub fn max_abs_p(&self) -> f64 {
        self.p.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest wave speed over the stored nodes, never below 1.
    pub fn max_speed(&self) -> Result<f64> {
        let mut cmax: f64 = 1.0;
        for (k, &p) in self.p.iter().enumerate() {
            let (c, _) = wave_speed(p, self.g2).map_err(|e| locate(e, self.t, self.r(k)))?;
            cmax = cmax.max(c);
        }
        Ok(cmax)
    }

    /// Largest characteristic speed relative to the grid.
    pub fn max_grid_speed(&self) -> Result<f64> {
        let c = self.max_speed()?;
        Ok(match self.frame() {
            Frame::Fixed => c,
            Frame::Comoving => 1.0 + c,
        })
    }

    fn deriv(f: &[f64], k: usize, h: f64) -> f64 {
        (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) / (12.0 * h)
    }
}

impl LocalFieldSource for FieldState {
    fn time(&self) -> f64 {
        self.t
    }

    fn g2(&self) -> f64 {
        self.g2
    }

    /// Cubic Lagrange interpolation of nodal values and of fourth-order nodal derivatives.
    fn sample(&self, r: f64) -> Result<LocalField> {
        let h = self.grid.dr();
        let x = (r - self.r(0)) / h;
        if !x.is_finite() {
            return Err(Error::OutsideWindow { r });
        }
        let i = x.floor();
        if i < 3.0 || i + 5.0 > self.len() as f64 {
            return Err(Error::OutsideWindow { r });
        }
        let i = i as usize;
        let w = lagrange4_weights(x - i as f64);
        let mut out = LocalField {
            r,
            ..LocalField::default()
        };
        for (j, wj) in w.iter().enumerate() {
            let k = i + j - 1;
            out.p += wj * self.p[k];
            out.q += wj * self.q[k];
            out.phi += wj * self.phi[k];
            out.dr_p += wj * Self::deriv(&self.p, k, h);
            out.dr_q += wj * Self::deriv(&self.q, k, h);
        }
        Ok(out)
    }
}

/// Cadence-limited fourth-difference damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viscosity {
    pub eps: f64,
    /// Engaged where `|p_{i+1} - p_i| > threshold * max |p|`.
    pub threshold: f64,
}

impl Default for Viscosity {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            threshold: 0.05,
        }
    }
}

/// `cfl * dr / max c` on a fixed grid, `cfl * dr / (1 + max c)` on a comoving one,
/// with `max c` taken over the stored nodes and the trivial region (`c = 1`).
pub fn cfl_dt(state: &FieldState) -> Result<f64> {
    Ok(state.grid.cfl * state.grid.dr() / state.max_grid_speed()?)
}

/// One predictor-corrector step of the whole stored state. The first node is held fixed;
/// the last one too on a fixed grid and is an outflow node on a comoving one.
pub fn step(state: &FieldState, dt: f64) -> Result<FieldState> {
    let mut next = state.clone();
    let mut scratch = Scratch::default();
    let hi = state.offset + state.len() - 1;
    advance(
        state,
        &mut next,
        state.offset,
        hi,
        dt,
        Viscosity::default(),
        &mut scratch,
    )?;
    Ok(next)
}

#[derive(Debug, Default)]
struct Scratch {
    ps: Vec<f64>,
    qs: Vec<f64>,
    dp: Vec<f64>,
    dq: Vec<f64>,
}

#[inline]
fn speed2(p: f64, g2: f64) -> Option<f64> {
    let a = 1.0 + 3.0 * g2 * p * p;
    (a > HYPERBOLICITY_FLOOR).then(|| 1.0 / a)
}

/// Advances global nodes `lo..=hi` of `cur` into `next`; all other nodes of `next` must already match `cur`.
fn advance(
    cur: &FieldState,
    next: &mut FieldState,
    lo: usize,
    hi: usize,
    dt: f64,
    visc: Viscosity,
    s: &mut Scratch,
) -> Result<()> {
    let g2 = cur.g2;
    let h = cur.grid.dr();
    let a = lo - cur.offset;
    let b = hi - cur.offset;
    let n = b - a + 1;
    let (p, q, phi) = (&cur.p[a..=b], &cur.q[a..=b], &cur.phi[a..=b]);
    // grid velocity: 1 when the nodes move inward with the pulse
    let (w, outflow) = match cur.frame() {
        Frame::Fixed => (0.0, false),
        Frame::Comoving => (1.0, true),
    };
    let r = |k: usize| cur.r(a + k);
    let fail = |k: usize, pv: f64| Error::Hyperbolicity {
        t: cur.t,
        r: r(k),
        p: pv,
        snapshot: Some(Box::new(cur.windowed(lo, hi))),
    };

    s.ps.resize(n, 0.0);
    s.qs.resize(n, 0.0);
    for k in 0..n {
        // forward differences, backward at an outflow end
        let (j0, j1) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
        if k + 1 == n && !outflow {
            s.ps[k] = p[k];
            s.qs[k] = q[k];
            continue;
        }
        let c2 = speed2(p[k], g2).ok_or_else(|| fail(k, p[k]))?;
        let dp = (p[j1] - p[j0]) / h;
        let dq = (q[j1] - q[j0]) / h;
        s.ps[k] = p[k] + dt * (c2 * (dq + 2.0 * q[k] / r(k)) - w * dp);
        s.qs[k] = q[k] + dt * (dp - w * dq);
    }

    let (np, nq, nphi) = (
        &mut next.p[a..=b],
        &mut next.q[a..=b],
        &mut next.phi[a..=b],
    );
    let last = if outflow { n } else { n - 1 };
    for k in 1..last {
        let c2 = speed2(s.ps[k], g2).ok_or_else(|| fail(k, s.ps[k]))?;
        let dp = (s.ps[k] - s.ps[k - 1]) / h;
        let dq = (s.qs[k] - s.qs[k - 1]) / h;
        let r1 = r(k) - w * dt;
        np[k] = 0.5 * (p[k] + s.ps[k] + dt * (c2 * (dq + 2.0 * s.qs[k] / r1) - w * dp));
        nq[k] = 0.5 * (q[k] + s.qs[k] + dt * (dp - w * dq));
        nphi[k] = phi[k] + 0.5 * dt * (p[k] + s.ps[k] - w * (q[k] + s.qs[k]));
    }
    np[0] = p[0];
    nq[0] = q[0];
    nphi[0] = phi[0];
    if !outflow {
        np[n - 1] = p[n - 1];
        nq[n - 1] = q[n - 1];
        nphi[n - 1] = phi[n - 1];
    }

    if visc.eps > 0.0 && n > 5 {
        let pmax = np.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = visc.threshold * pmax;
        s.dp.clear();
        s.dp.resize(n, 0.0);
        s.dq.clear();
        s.dq.resize(n, 0.0);
        let mut any = false;
        for k in 2..n - 2 {
            if (np[k + 1] - np[k]).abs() > thr {
                let d4 = |f: &[f64]| f[k - 2] - 4.0 * f[k - 1] + 6.0 * f[k] - 4.0 * f[k + 1] + f[k + 2];
                s.dp[k] = visc.eps * d4(np);
                s.dq[k] = visc.eps * d4(nq);
                any = true;
            }
        }
        if any {
            for k in 2..n - 2 {
                np[k] -= s.dp[k];
                nq[k] -= s.dq[k];
            }
        }
    }
    for k in 1..n - 1 {
        if !(1.0 + 3.0 * g2 * np[k] * np[k] > HYPERBOLICITY_FLOOR) || !np[k].is_finite() {
            return Err(fail(k, np[k]));
        }
    }
    next.t = cur.t + dt;
    next.t_anchor = cur.t_anchor;
    Ok(())
}

/// Callbacks driven by [`evolve`]; they see read-only states.
pub trait Observer {
    fn on_start(&mut self, state: &FieldState) -> Result<()>;
    /// Called after every step. `record` is set on the configured cadence and on the last step.
    fn on_step(&mut self, prev: &FieldState, next: &FieldState, record: bool) -> Result<()>;
    /// Called once after the last step.
    fn on_finish(&mut self, _state: &FieldState) -> Result<()> {
        Ok(())
    }
    /// Current minimum of the inverse density, when the observer tracks one.
    fn mu_min(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub t_end: f64,
    pub stop_mu: f64,
    pub record_every: usize,
    /// Keep a windowed snapshot every this many steps (0: initial and final only).
    pub snapshot_every: usize,
    pub pads: WindowPads,
    pub viscosity: Viscosity,
    pub frame: Frame,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            t_end: -1.0,
            stop_mu: 0.05,
            record_every: 200,
            snapshot_every: 0,
            pads: WindowPads::default(),
            viscosity: Viscosity::default(),
            frame: Frame::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ReachedEnd,
    MuBelowThreshold,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub stop: StopReason,
    pub t_final: f64,
    pub steps: usize,
    pub mu_min_final: Option<f64>,
    /// Windowed snapshots, initial first and final last.
    pub snapshots: Vec<FieldState>,
    pub final_state: FieldState,
}

/// Steps a full-grid state forward while moving the active window with the pulse.
pub struct Stepper {
    cur: FieldState,
    next: FieldState,
    delta: f64,
    pads: WindowPads,
    viscosity: Viscosity,
    scratch: Scratch,
}

impl Stepper {
    pub fn new(initial: FieldState, delta: f64, pads: WindowPads, viscosity: Viscosity) -> Self {
        let next = initial.clone();
        Self {
            cur: initial,
            next,
            delta,
            pads,
            viscosity,
            scratch: Scratch::default(),
        }
    }

    pub fn state(&self) -> &FieldState {
        &self.cur
    }

    pub fn previous(&self) -> &FieldState {
        &self.next
    }

    /// Active global node range at the current time.
    pub fn window(&self) -> (usize, usize) {
        let g = &self.cur.grid;
        if self.cur.frame() == Frame::Comoving {
            return (self.cur.offset, self.cur.offset + self.cur.len() - 1);
        }
        let t = self.cur.t;
        let lo = g.node_of(-t - self.pads.inner * self.delta);
        let hi = g.node_of(-t + (self.pads.fan + self.pads.outer) * self.delta);
        (lo, hi.max(lo + 6).min(g.n_cells))
    }

    pub fn dt(&self) -> Result<f64> {
        let (lo, hi) = self.window();
        let g = &self.cur.grid;
        let mut cmax: f64 = 1.0;
        for i in lo..=hi {
            let (c, _) = wave_speed(self.cur.p[i], self.cur.g2)
                .map_err(|e| locate(e, self.cur.t, g.r(i)))?;
            cmax = cmax.max(c);
        }
        if self.cur.frame() == Frame::Comoving {
            cmax += 1.0;
        }
        Ok(g.cfl * g.dr() / cmax)
    }

    /// Advances by `dt`; afterwards `previous()` holds the old state.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        let (lo, hi) = self.window();
        sync_outside(&self.cur, &mut self.next, lo, hi);
        advance(
            &self.cur,
            &mut self.next,
            lo,
            hi,
            dt,
            self.viscosity,
            &mut self.scratch,
        )?;
        std::mem::swap(&mut self.cur, &mut self.next);
        Ok(())
    }

    /// Copy of the current state restricted to the window plus a margin.
    pub fn snapshot(&self) -> FieldState {
        let (lo, hi) = self.window();
        self.cur.windowed(lo.saturating_sub(8), hi + 8)
    }
}

/// Nodes outside the active range may have drifted since `next` last held them:
/// the previous window could have been wider.
fn sync_outside(cur: &FieldState, next: &mut FieldState, lo: usize, hi: usize) {
    let n = cur.len();
    let band = 64.min(n);
    let l0 = lo.saturating_sub(band);
    next.p[l0..lo].copy_from_slice(&cur.p[l0..lo]);
    next.q[l0..lo].copy_from_slice(&cur.q[l0..lo]);
    next.phi[l0..lo].copy_from_slice(&cur.phi[l0..lo]);
    let h1 = (hi + 1 + band).min(n);
    next.p[hi + 1..h1].copy_from_slice(&cur.p[hi + 1..h1]);
    next.q[hi + 1..h1].copy_from_slice(&cur.q[hi + 1..h1]);
    next.phi[hi + 1..h1].copy_from_slice(&cur.phi[hi + 1..h1]);
    next.t = cur.t;
}

/// Evolves `data` from `t = -r0` to `cfg.t_end` or until an observer reports `mu_min < stop_mu`.
pub fn evolve(
    data: &InitialData,
    cfg: &EvolveConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let params = data.params;
    if !(cfg.t_end <= -1.0 && cfg.t_end > -params.r0) {
        return Err(Error::InvalidArgument(format!(
            "t_end = {} must lie in (-r0, -1]",
            cfg.t_end
        )));
    }
    if !(cfg.stop_mu > 0.0 && cfg.stop_mu < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "stop_mu = {} must lie in (0, 0.5)",
            cfg.stop_mu
        )));
    }
    let mut initial = data.state();
    if cfg.frame == Frame::Comoving {
        initial.t_anchor = Some(initial.t);
    }
    let needed = match cfg.frame {
        Frame::Fixed => -cfg.t_end - cfg.pads.inner * params.delta,
        Frame::Comoving => params.r0 - cfg.pads.inner * params.delta,
    };
    if initial.grid.r_min > needed.max(initial.grid.dr()) + 1e-12
        || initial.grid.r_max
            < params.r0 + (cfg.pads.fan + cfg.pads.outer) * params.delta - 1e-12
    {
        return Err(Error::Grid(format!(
            "grid [{}, {}] does not cover the run window",
            initial.grid.r_min, initial.grid.r_max
        )));
    }
    let mut stepper = Stepper::new(initial, params.delta, cfg.pads, cfg.viscosity);
    for o in observers.iter_mut() {
        o.on_start(stepper.state())?;
    }
    let mut snapshots = vec![stepper.snapshot()];
    let record_every = cfg.record_every.max(1);
    let min_dt = 1e-6 * stepper.state().grid.cfl * stepper.state().grid.dr();
    let end_tol = 1e-12 * params.r0;
    let mut steps = 0usize;
    let mut stop = StopReason::ReachedEnd;
    loop {
        let t = stepper.state().t;
        let remaining = cfg.t_end - t;
        if remaining <= end_tol {
            break;
        }
        let dt_cfl = stepper.dt()?;
        if dt_cfl < min_dt {
            return Err(Error::CflCollapse { t, dt: dt_cfl });
        }
        let last = remaining <= dt_cfl * (1.0 + 1e-9);
        let dt = if last { remaining } else { dt_cfl };
        stepper.step(dt)?;
        if last {
            // land on t_end exactly
            let s = &mut stepper.cur;
            s.t = cfg.t_end;
        }
        steps += 1;
        let record = steps % record_every == 0 || last;
        for o in observers.iter_mut() {
            o.on_step(stepper.previous(), stepper.state(), record)?;
        }
        let mu = observers
            .iter()
            .filter_map(|o| o.mu_min())
            .fold(f64::INFINITY, f64::min);
        let stopping = mu < cfg.stop_mu;
        if stopping {
            stop = StopReason::MuBelowThreshold;
        }
        if cfg.snapshot_every > 0 && steps % cfg.snapshot_every == 0 && !last && !stopping {
            snapshots.push(stepper.snapshot());
        }
        if stopping {
            break;
        }
    }
    for o in observers.iter_mut() {
        o.on_finish(stepper.state())?;
    }
    let final_state = stepper.snapshot();
    if snapshots.last().map(|s| s.t) != Some(final_state.t) {
        snapshots.push(final_state.clone());
    }
    let mu_min_final = observers.iter().filter_map(|o| o.mu_min()).reduce(f64::min);
    Ok(Trajectory {
        params,
        stop,
        t_final: final_state.t,
        steps,
        mu_min_final,
        snapshots,
        final_state,
    })
}
