//! Time integration of the radial cross-diffusion system
//!
//! ```text
//! u_t = (1/r) (r phi(u) u_r)_r - (1/r) (r psi(u) v_r)_r
//! v_t = (1/r) (r v_r)_r - v + u
//! ```
//!
//! with conservative face fluxes, CFL-adaptive explicit stepping for u,
//! a backward-Euler tridiagonal step for v, positivity handling by step
//! rejection, and blowup detection by threshold crossing or time-step
//! collapse. The v update is written in delta form, so spatially constant
//! states are bitwise fixed points of the whole step.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialMesh};
use crate::initdata::InitialDataSpec;
use crate::nonlinearity::NonlinearityModel;
use serde::Serialize;

/// Evolving pair (u, v) with the current time and step size.
#[derive(Debug, Clone)]
pub struct RadialState {
    pub u: RadialField,
    pub v: RadialField,
    pub t: f64,
    pub dt: f64,
    pub step_count: u64,
}

impl RadialState {
    /// Build a state at t = 0. Both fields must be finite and nonnegative
    /// up to round-off (strictly positive data comes from the initial-data
    /// constructor; zeros are admitted for test modes).
    pub fn new(u: RadialField, v: RadialField) -> Result<Self> {
        if !u.mesh().same_as(v.mesh()) {
            return Err(Error::MeshMismatch("u and v live on different meshes".into()));
        }
        for (name, f) in [("u", &u), ("v", &v)] {
            if let Some(i) = f.first_non_finite() {
                return Err(Error::BlowupSuspected {
                    field: if name == "u" { "u" } else { "v" },
                    cell: i,
                    t: 0.0,
                });
            }
            let linf = f.norms().linf;
            if f.values().iter().any(|&x| x < -1e-12 * linf) {
                return Err(Error::Precondition(format!("{name} has negative cells")));
            }
        }
        Ok(Self {
            u,
            v,
            t: 0.0,
            dt: 0.0,
            step_count: 0,
        })
    }

    pub fn mesh(&self) -> RadialMesh {
        *self.u.mesh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VScheme {
    Explicit,
    Implicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositivityMode {
    RejectAndHalve,
    ClipWarn,
}

/// Step-size, detection, and recording controls.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub cfl_safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub u_blowup_threshold: f64,
    pub t_end: f64,
    pub v_scheme: VScheme,
    pub positivity_mode: PositivityMode,
    /// Reject steps that raise the Liapunov functional beyond
    /// 1e-9 (1+|F|); costs one F evaluation per step.
    pub enforce_f_decay: bool,
    /// Stop after this many accepted steps even if t_end is not reached.
    pub max_steps: u64,
    /// Record diagnostics every k accepted steps (0 disables the cadence).
    pub record_every_steps: u64,
    /// Additionally record whenever t crosses a multiple of this interval.
    pub record_every_time: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl_safety: 0.4,
            dt_min: 1e-14,
            dt_max: 1e-2,
            u_blowup_threshold: 1e8,
            t_end: 1.0,
            v_scheme: VScheme::Implicit,
            positivity_mode: PositivityMode::RejectAndHalve,
            enforce_f_decay: false,
            max_steps: u64::MAX,
            record_every_steps: 100,
            record_every_time: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "solver.cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt_max) {
            return Err(Error::Config(format!(
                "solver requires 0 < dt_min < dt_max (got {} vs {})",
                self.dt_min, self.dt_max
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::Config(format!("solver.t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.u_blowup_threshold > 0.0) {
            return Err(Error::Config("solver.u_blowup_threshold must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VerdictLabel {
    FiniteTimeBlowup,
    InfiniteTimeBlowupCandidate,
    BoundedCandidate,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    ThresholdCrossing,
    DtCollapse,
}

/// Classification of a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct RunVerdict {
    pub label: VerdictLabel,
    pub t_star: Option<f64>,
    /// Bracketing interval of T* over mesh refinements, present once a
    /// blowup verdict has been refinement-confirmed.
    pub t_star_interval: Option<(f64, f64)>,
    pub max_linf_u: f64,
    pub trigger: Option<TriggerKind>,
    pub reason: String,
    /// T* per refinement level when produced by [`confirm_blowup`].
    pub refinement_t_stars: Vec<f64>,
}

/// Counters accumulated over a run.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct RunCounters {
    pub steps: u64,
    pub rejected_positivity: u64,
    pub rejected_f_decay: u64,
    pub clip_events: u64,
    /// Smallest accepted dt, ignoring steps clipped to land on t_end.
    pub min_accepted_dt: f64,
}

/// Everything a single run produces.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub verdict: RunVerdict,
    pub final_state: RadialState,
    pub counters: RunCounters,
}

/// Stability bounds extracted from the current state.
#[derive(Debug, Clone, Copy)]
pub struct StepBounds {
    pub diffusive: f64,
    pub advective: f64,
}

/// Conservative face fluxes of the u equation, including the face-radius
/// factor: `F_{i+1/2} = r_{i+1/2} [ phibar du/dr - psi(u_up) dv/dr ]` with
/// the arithmetic face mean of phi and the chemotactic part upwinded by
/// the sign of the face value of v_r. Boundary faces carry zero flux.
pub fn flux_u(state: &RadialState, model: &NonlinearityModel) -> Result<Vec<f64>> {
    let mut stepper = Stepper::new(state.mesh(), model.clone(), SolverConfig::default());
    stepper.compute_fluxes(&state.u, &state.v)?;
    Ok(stepper.flux.clone())
}

/// Stability-limited step proposal:
/// `cfl_safety * min(dr^2 / (2 max phi), dr / max beta(u_up) |v_r|, dt_max)`.
pub fn propose_dt(
    state: &RadialState,
    model: &NonlinearityModel,
    config: &SolverConfig,
) -> Result<f64> {
    let mut stepper = Stepper::new(state.mesh(), model.clone(), config.clone());
    let bounds = stepper.compute_fluxes(&state.u, &state.v)?;
    Ok(stepper.dt_from_bounds(bounds))
}

/// One accepted step (u explicit first, then v with the updated u),
/// including the positivity retry loop. Returns the advanced state.
pub fn step(
    state: &RadialState,
    model: &NonlinearityModel,
    config: &SolverConfig,
) -> Result<RadialState> {
    config.validate()?;
    let mut stepper = Stepper::new(state.mesh(), model.clone(), config.clone());
    let mut next = state.clone();
    let bounds = stepper.compute_fluxes(&next.u, &next.v)?;
    let mut dt = stepper.dt_from_bounds(bounds);
    loop {
        if dt < config.dt_min {
            return Err(Error::Precondition(format!(
                "dt collapsed below dt_min = {} during step retries",
                config.dt_min
            )));
        }
        if stepper.apply(&mut next, dt)? {
            return Ok(next);
        }
        dt *= 0.5;
    }
}

/// Reusable stepping kernel holding scratch buffers and counters.
pub struct Stepper {
    model: NonlinearityModel,
    config: SolverConfig,
    mesh: RadialMesh,
    a_in: Vec<f64>,
    a_out: Vec<f64>,
    inv_w: Vec<f64>,
    flux: Vec<f64>,
    phi: Vec<f64>,
    u_new: Vec<f64>,
    rhs: Vec<f64>,
    diag: Vec<f64>,
    cp: Vec<f64>,
    pub rejected_positivity: u64,
    pub clip_events: u64,
}

impl Stepper {
    pub fn new(mesh: RadialMesh, model: NonlinearityModel, config: SolverConfig) -> Self {
        let n = mesh.n();
        let (a_in, a_out) = mesh.laplacian_coeffs();
        let inv_w = (0..n).map(|i| 1.0 / mesh.cell_volume(i)).collect();
        Self {
            model,
            config,
            mesh,
            a_in,
            a_out,
            inv_w,
            flux: vec![0.0; n + 1],
            phi: vec![0.0; n],
            u_new: vec![0.0; n],
            rhs: vec![0.0; n],
            diag: vec![0.0; n],
            cp: vec![0.0; n],
            rejected_positivity: 0,
            clip_events: 0,
        }
    }

    /// Fill the face fluxes for the current (u, v) and return the
    /// stability bounds gathered along the way. Fluxes depend only on the
    /// state, so rejected-step retries reuse them.
    fn compute_fluxes(&mut self, u: &RadialField, v: &RadialField) -> Result<StepBounds> {
        let n = self.mesh.n();
        let dr = self.mesh.dr();
        let uv = u.values();
        let vv = v.values();
        let mut max_phi: f64 = 0.0;
        for i in 0..n {
            let p = self.model.phi(uv[i]);
            if !p.is_finite() {
                return Err(Error::BlowupSuspected {
                    field: "phi(u)",
                    cell: i,
                    t: 0.0,
                });
            }
            self.phi[i] = p;
            max_phi = max_phi.max(p);
        }
        let mut max_vel: f64 = 0.0;
        self.flux[0] = 0.0;
        self.flux[n] = 0.0;
        for f in 1..n {
            let du = uv[f] - uv[f - 1];
            let dv = vv[f] - vv[f - 1];
            let u_up = if dv > 0.0 { uv[f - 1] } else { uv[f] };
            let beta_up = self.model.beta(u_up);
            let psi_up = u_up * beta_up;
            if !psi_up.is_finite() {
                return Err(Error::BlowupSuspected {
                    field: "psi(u)",
                    cell: f,
                    t: 0.0,
                });
            }
            let phibar = 0.5 * (self.phi[f - 1] + self.phi[f]);
            self.flux[f] = self.mesh.face_radius(f) * (phibar * du - psi_up * dv) / dr;
            max_vel = max_vel.max(beta_up * dv.abs() / dr);
        }
        let diffusive = if max_phi > 0.0 {
            dr * dr / (2.0 * max_phi)
        } else {
            f64::INFINITY
        };
        let advective = if max_vel > 0.0 { dr / max_vel } else { f64::INFINITY };
        Ok(StepBounds {
            diffusive,
            advective,
        })
    }

    fn dt_from_bounds(&self, b: StepBounds) -> f64 {
        self.config.cfl_safety * b.diffusive.min(b.advective).min(self.config.dt_max)
    }

    /// Try to advance by dt using the prepared fluxes. Returns false when
    /// the positivity check rejects the step (state untouched).
    fn apply(&mut self, state: &mut RadialState, dt: f64) -> Result<bool> {
        let n = self.mesh.n();
        let two_pi = 2.0 * std::f64::consts::PI;
        {
            let uv = state.u.values();
            for i in 0..n {
                self.u_new[i] =
                    uv[i] + dt * two_pi * (self.flux[i + 1] - self.flux[i]) * self.inv_w[i];
            }
        }
        let mut linf: f64 = 0.0;
        let mut min_u = f64::INFINITY;
        for &x in &self.u_new {
            if !x.is_finite() {
                return Err(Error::BlowupSuspected {
                    field: "u",
                    cell: self.u_new.iter().position(|y| !y.is_finite()).unwrap_or(0),
                    t: state.t,
                });
            }
            linf = linf.max(x.abs());
            min_u = min_u.min(x);
        }
        if min_u < -1e-12 * linf {
            match self.config.positivity_mode {
                PositivityMode::RejectAndHalve => {
                    self.rejected_positivity += 1;
                    return Ok(false);
                }
                PositivityMode::ClipWarn => {
                    self.clip_events += 1;
                    for x in &mut self.u_new {
                        if *x < 0.0 {
                            *x = 0.0;
                        }
                    }
                }
            }
        }
        state.u.swap_values(&mut self.u_new);
        match self.config.v_scheme {
            VScheme::Implicit => {
                implicit_v_step_with_scratch(
                    &mut state.v,
                    &state.u,
                    dt,
                    &self.a_in,
                    &self.a_out,
                    &mut self.rhs,
                    &mut self.diag,
                    &mut self.cp,
                );
            }
            VScheme::Explicit => {
                let vv = state.v.values_mut();
                let uvals = state.u.values();
                // delta form: dv_i = dt (Lap v - v + u)_i
                for i in 0..n {
                    let outward = if i + 1 < n {
                        self.a_out[i] * (vv[i + 1] - vv[i])
                    } else {
                        0.0
                    };
                    let inward = if i > 0 {
                        self.a_in[i] * (vv[i] - vv[i - 1])
                    } else {
                        0.0
                    };
                    self.rhs[i] = dt * (outward - inward - vv[i] + uvals[i]);
                }
                let vv = state.v.values_mut();
                for i in 0..n {
                    vv[i] += self.rhs[i];
                }
            }
        }
        state.t += dt;
        state.dt = dt;
        state.step_count += 1;
        Ok(true)
    }
}

/// Backward-Euler relaxation of v toward the stationary solve at frozen u:
/// `(I + dt (I - Lap)) (v_new - v) = dt (Lap v - v + u)`. Unconditionally
/// stable for any dt > 0; exact for spatially constant (u, v).
pub fn implicit_v_step(v: &mut RadialField, u: &RadialField, dt: f64) {
    let mesh = *v.mesh();
    let n = mesh.n();
    let (a_in, a_out) = mesh.laplacian_coeffs();
    let mut rhs = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut cp = vec![0.0; n];
    implicit_v_step_with_scratch(v, u, dt, &a_in, &a_out, &mut rhs, &mut diag, &mut cp);
}

#[allow(clippy::too_many_arguments)]
fn implicit_v_step_with_scratch(
    v: &mut RadialField,
    u: &RadialField,
    dt: f64,
    a_in: &[f64],
    a_out: &[f64],
    rhs: &mut [f64],
    diag: &mut [f64],
    cp: &mut [f64],
) {
    let n = v.mesh().n();
    let vv = v.values();
    let uv = u.values();
    for i in 0..n {
        let outward = if i + 1 < n {
            a_out[i] * (vv[i + 1] - vv[i])
        } else {
            0.0
        };
        let inward = if i > 0 { a_in[i] * (vv[i] - vv[i - 1]) } else { 0.0 };
        rhs[i] = dt * (outward - inward - vv[i] + uv[i]);
        diag[i] = 1.0 + dt + dt * (a_out[i] + a_in[i]);
    }
    // Thomas on the tridiagonal system; lower_i = -dt a_in_i,
    // upper_i = -dt a_out_i.
    cp[0] = -dt * a_out[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let lower = -dt * a_in[i];
        let m = diag[i] - lower * cp[i - 1];
        cp[i] = -dt * a_out[i] / m;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= cp[i] * rhs[i + 1];
    }
    let vv = v.values_mut();
    for i in 0..n {
        vv[i] += rhs[i];
    }
}

/// Solve the stationary chemoattractant equation `-Lap v + v = u` with
/// zero-flux boundaries. The result is the minimizer of the energy over v
/// at fixed u, and satisfies the residual bound `||-Lap v + v - u||_2 <
/// 1e-10 ||u||_2` (direct tridiagonal elimination; the operator is an
/// M-matrix, so the solve is well posed).
pub fn solve_stationary_v(u: &RadialField) -> RadialField {
    solve_helmholtz(u, 1.0)
}

/// Solve `(I - sigma Lap) v = u` with zero-flux boundaries; sigma = 1 is
/// the stationary chemoattractant solve, other values act as an implicit
/// smoothing filter at length scale sqrt(sigma).
pub fn solve_helmholtz(u: &RadialField, sigma: f64) -> RadialField {
    let mesh = *u.mesh();
    let n = mesh.n();
    let (a_in, a_out) = mesh.laplacian_coeffs();
    let uv = u.values();
    let mut diag = vec![0.0; n];
    let mut rhs = uv.to_vec();
    let mut cp = vec![0.0; n];
    for i in 0..n {
        diag[i] = 1.0 + sigma * (a_out[i] + a_in[i]);
    }
    cp[0] = -sigma * a_out[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let lower = -sigma * a_in[i];
        let m = diag[i] - lower * cp[i - 1];
        cp[i] = -sigma * a_out[i] / m;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / m;
    }
    for i in (0..n - 1).rev() {
        let next = rhs[i + 1];
        rhs[i] -= cp[i] * next;
    }
    RadialField::from_values(mesh, rhs).expect("stationary solve preserves the mesh")
}

struct WindowTracker {
    t_end: f64,
    window_max: [f64; 5],
    tail_min: f64,
    tail_max: f64,
}

impl WindowTracker {
    fn new(t_end: f64) -> Self {
        Self {
            t_end,
            window_max: [f64::NEG_INFINITY; 5],
            tail_min: f64::INFINITY,
            tail_max: f64::NEG_INFINITY,
        }
    }

    fn update(&mut self, t: f64, linf: f64) {
        // five equal windows covering the second half of the horizon
        let lo = 0.5 * self.t_end;
        if t >= lo {
            let w = ((t - lo) / (0.1 * self.t_end)).floor() as usize;
            let w = w.min(4);
            self.window_max[w] = self.window_max[w].max(linf);
        }
        if t >= 0.8 * self.t_end {
            self.tail_min = self.tail_min.min(linf);
            self.tail_max = self.tail_max.max(linf);
        }
    }

    fn strictly_growing(&self) -> bool {
        self.window_max.iter().all(|w| w.is_finite())
            && self.window_max.windows(2).all(|p| p[1] > p[0])
    }

    fn tail_variation_below(&self, frac: f64) -> bool {
        self.tail_max.is_finite()
            && self.tail_max > 0.0
            && (self.tail_max - self.tail_min) < frac * self.tail_max
    }
}

/// Integrate from `state0` until `t_end`, a blowup trigger, or
/// `max_steps`. The hook observes every recorded state; records follow the
/// configured cadence and always include the initial and final states.
pub fn run(
    state0: RadialState,
    model: &NonlinearityModel,
    config: &SolverConfig,
    mut hook: impl FnMut(&RadialState, &DiagnosticsRecord),
) -> Result<RunOutput> {
    config.validate()?;
    let mut state = state0;
    let mut stepper = Stepper::new(state.mesh(), model.clone(), config.clone());
    let mut counters = RunCounters {
        min_accepted_dt: f64::INFINITY,
        ..Default::default()
    };
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut windows = WindowTracker::new(config.t_end);
    let mut max_linf: f64 = state.u.norms().linf;
    let mut trigger: Option<(TriggerKind, f64)> = None;
    let mut rejected_f_decay = 0u64;
    let f_tol = |f: f64| 1e-9 * (1.0 + f.abs());
    let mut prev_f: Option<f64> = None;
    let mut next_time_mark = config.record_every_time.map(|dt| dt.max(f64::MIN_POSITIVE));

    let record_now =
        |state: &RadialState,
         records: &mut Vec<DiagnosticsRecord>,
         hook: &mut dyn FnMut(&RadialState, &DiagnosticsRecord)|
         -> Result<()> {
            let rec = diagnostics::make_record(state, model, records.last())?;
            hook(state, &rec);
            records.push(rec);
            Ok(())
        };

    record_now(&state, &mut records, &mut hook)?;
    if config.enforce_f_decay {
        prev_f = Some(records[0].f);
    }
    windows.update(state.t, max_linf);

    loop {
        if state.t >= config.t_end || counters.steps >= config.max_steps {
            break;
        }
        let bounds = stepper.compute_fluxes(&state.u, &state.v)?;
        let mut dt = stepper.dt_from_bounds(bounds);
        if dt < config.dt_min {
            trigger = Some((TriggerKind::DtCollapse, state.t));
            break;
        }
        let clipped = dt > config.t_end - state.t;
        if clipped {
            dt = config.t_end - state.t;
        }
        let snapshot = if config.enforce_f_decay {
            Some((state.u.clone(), state.v.clone()))
        } else {
            None
        };
        let accepted_dt = loop {
            if dt < config.dt_min {
                trigger = Some((TriggerKind::DtCollapse, state.t));
                break None;
            }
            if !stepper.apply(&mut state, dt)? {
                dt *= 0.5;
                continue;
            }
            if let (Some(f_prev), Some((u_snap, v_snap))) = (prev_f, snapshot.as_ref()) {
                let f_new = diagnostics::liapunov_f(&state, model)?;
                if f_new > f_prev + f_tol(f_prev) {
                    state.u = u_snap.clone();
                    state.v = v_snap.clone();
                    state.t -= dt;
                    state.step_count -= 1;
                    rejected_f_decay += 1;
                    dt *= 0.5;
                    continue;
                }
                prev_f = Some(f_new);
            }
            break Some(dt);
        };
        let Some(accepted_dt) = accepted_dt else {
            break;
        };
        counters.steps += 1;
        if !clipped {
            counters.min_accepted_dt = counters.min_accepted_dt.min(accepted_dt);
        }
        let linf = state.u.norms().linf;
        max_linf = max_linf.max(linf);
        windows.update(state.t, linf);
        if linf > config.u_blowup_threshold {
            trigger = Some((TriggerKind::ThresholdCrossing, state.t));
            break;
        }
        let step_due = config.record_every_steps > 0
            && counters.steps % config.record_every_steps == 0;
        let time_due = match next_time_mark {
            Some(mark) if state.t >= mark => {
                let interval = config.record_every_time.unwrap();
                next_time_mark = Some((state.t / interval).floor() * interval + interval);
                true
            }
            _ => false,
        };
        if step_due || time_due {
            record_now(&state, &mut records, &mut hook)?;
        }
    }

    // Always record the final state.
    if records.last().map(|r| r.t) != Some(state.t) {
        record_now(&state, &mut records, &mut hook)?;
    }

    counters.rejected_positivity = stepper.rejected_positivity;
    counters.rejected_f_decay = rejected_f_decay;
    counters.clip_events = stepper.clip_events;

    let verdict = match trigger {
        Some((kind, t_star)) => RunVerdict {
            label: VerdictLabel::FiniteTimeBlowup,
            t_star: Some(t_star),
            t_star_interval: None,
            max_linf_u: max_linf,
            trigger: Some(kind),
            reason: match kind {
                TriggerKind::ThresholdCrossing => {
                    format!("linf_u exceeded threshold {}", config.u_blowup_threshold)
                }
                TriggerKind::DtCollapse => {
                    format!("dt collapsed below dt_min = {}", config.dt_min)
                }
            },
            refinement_t_stars: Vec::new(),
        },
        None if state.t >= config.t_end => {
            let growth = windows.strictly_growing()
                && counters.min_accepted_dt > 10.0 * config.dt_min;
            if growth {
                RunVerdict {
                    label: VerdictLabel::InfiniteTimeBlowupCandidate,
                    t_star: None,
                    t_star_interval: None,
                    max_linf_u: max_linf,
                    trigger: None,
                    reason: "linf_u strictly increased across the last 5 windows; \
                             dt stayed above 10 dt_min; no threshold crossing"
                        .into(),
                    refinement_t_stars: Vec::new(),
                }
            } else if windows.tail_variation_below(0.05) {
                RunVerdict {
                    label: VerdictLabel::BoundedCandidate,
                    t_star: None,
                    t_star_interval: None,
                    max_linf_u: max_linf,
                    trigger: None,
                    reason: "linf_u varied by < 5% over the final 20% of the run".into(),
                    refinement_t_stars: Vec::new(),
                }
            } else {
                RunVerdict {
                    label: VerdictLabel::Inconclusive,
                    t_star: None,
                    t_star_interval: None,
                    max_linf_u: max_linf,
                    trigger: None,
                    reason: "t_end reached without a trigger, sustained growth, or a plateau"
                        .into(),
                    refinement_t_stars: Vec::new(),
                }
            }
        }
        None => RunVerdict {
            label: VerdictLabel::Inconclusive,
            t_star: None,
            t_star_interval: None,
            max_linf_u: max_linf,
            trigger: None,
            reason: format!("stopped after {} steps before t_end", counters.steps),
            refinement_t_stars: Vec::new(),
        },
    };

    Ok(RunOutput {
        records,
        verdict,
        final_state: state,
        counters,
    })
}

/// A full simulation setup that can be rebuilt on refined meshes.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: NonlinearityModel,
    pub mesh: RadialMesh,
    pub initial: InitialDataSpec,
    pub solver: SolverConfig,
}

impl Scenario {
    pub fn run_on(&self, mesh: RadialMesh) -> Result<RunOutput> {
        let state0 = crate::initdata::build(&self.initial, mesh)?;
        run(state0, &self.model, &self.solver, |_, _| {})
    }
}

/// The trigger times must agree to 20% between the two finest meshes, and
/// with three or more levels the gaps must not grow.
fn t_star_sequence_is_cauchy_like(t_stars: &[f64]) -> bool {
    let gaps: Vec<f64> = t_stars.windows(2).map(|p| (p[1] - p[0]).abs()).collect();
    let scale = t_stars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let last_gap_ok = gaps.last().map_or(true, |g| *g <= 0.2 * scale);
    let shrinking = gaps.windows(2).all(|p| p[1] <= 1.1 * p[0]);
    last_gap_ok && shrinking
}

/// Rerun a blowup scenario on doubled meshes and only confirm the verdict
/// when every refinement triggers and the T* sequence behaves like a
/// Cauchy sequence. Refinement disagreement yields `Inconclusive`, never a
/// silent confirmation.
pub fn confirm_blowup(scenario: &Scenario, refinements: usize) -> Result<RunVerdict> {
    let levels = refinements.max(2);
    let meshes: Vec<RadialMesh> = (0..levels)
        .map(|j| RadialMesh::new(scenario.mesh.r_outer(), scenario.mesh.n() << j))
        .collect::<Result<_>>()?;

    #[cfg(feature = "parallel")]
    let outputs: Vec<RunOutput> = {
        use rayon::prelude::*;
        meshes
            .par_iter()
            .map(|m| scenario.run_on(*m))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let outputs: Vec<RunOutput> = meshes
        .iter()
        .map(|m| scenario.run_on(*m))
        .collect::<Result<_>>()?;

    let base = &outputs[0];
    if base.verdict.label != VerdictLabel::FiniteTimeBlowup {
        return Ok(base.verdict.clone());
    }
    let mut t_stars = Vec::with_capacity(levels);
    for out in &outputs {
        match (out.verdict.label, out.verdict.t_star) {
            (VerdictLabel::FiniteTimeBlowup, Some(t)) => t_stars.push(t),
            _ => {
                return Ok(RunVerdict {
                    label: VerdictLabel::Inconclusive,
                    t_star: None,
                    t_star_interval: None,
                    max_linf_u: base.verdict.max_linf_u,
                    trigger: None,
                    reason: "refinement disagreement: not every mesh triggered blowup".into(),
                    refinement_t_stars: t_stars,
                })
            }
        }
    }
    if !t_star_sequence_is_cauchy_like(&t_stars) {
        return Ok(RunVerdict {
            label: VerdictLabel::Inconclusive,
            t_star: None,
            t_star_interval: None,
            max_linf_u: base.verdict.max_linf_u,
            trigger: None,
            reason: format!("T* sequence not Cauchy-like across refinements: {t_stars:?}"),
            refinement_t_stars: t_stars,
        });
    }
    let lo = t_stars.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = t_stars.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(RunVerdict {
        label: VerdictLabel::FiniteTimeBlowup,
        t_star: Some(*t_stars.last().unwrap()),
        t_star_interval: Some((lo, hi)),
        max_linf_u: outputs
            .iter()
            .map(|o| o.verdict.max_linf_u)
            .fold(f64::NEG_INFINITY, f64::max),
        trigger: outputs.last().unwrap().verdict.trigger,
        reason: format!("confirmed on {levels} meshes; T* = {t_stars:?}"),
        refinement_t_stars: t_stars,
    })
}
