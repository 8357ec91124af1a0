//! Run execution and artifact assembly: series CSV, snapshot CSV, and the
//! summary JSON. Output is fully deterministic at a fixed configuration
//! (no timestamps, no randomness), so repeated runs are byte-identical.

use crate::config::{InitialDataChoice, ResolvedConfig, SimulationConfig};
use crate::diagnostics::{
    self, DiagnosticsRecord, LiapunovIdentityReport, Ratio36Report, THETA,
};
use crate::error::Result;
use crate::initdata::{self, EtaSearch, InitialDataSpec, MembershipReport};
use crate::nonlinearity::NonlinearityModel;
use crate::solver::{self, RadialState, RunOutput};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

/// Fixed time-series header.
pub const SERIES_HEADER: &str = "t,dt,mass_u,mass_v,linf_u,F,D,norm_f,norm_g,ratio36,Bhat";

/// Fixed snapshot header.
pub const SNAPSHOT_HEADER: &str = "r,u,v";

pub fn series_row(r: &DiagnosticsRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.t,
        r.dt,
        r.mass_u,
        r.mass_v,
        r.linf_u,
        r.f,
        r.d,
        r.norm_f_l2,
        r.norm_g_l2,
        r.ratio36,
        r.bhat
    )
}

pub fn series_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(SERIES_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&series_row(r));
        out.push('\n');
    }
    out
}

pub fn snapshot_csv(state: &RadialState) -> String {
    let mesh = state.mesh();
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for i in 0..mesh.n() {
        out.push_str(&format!(
            "{},{},{}\n",
            mesh.cell_center(i),
            state.u.values()[i],
            state.v.values()[i]
        ));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())
}

/// Everything a single configured run produces, before any files are
/// written.
#[derive(Debug)]
pub struct ExecutedRun {
    pub config: SimulationConfig,
    pub config_hash: String,
    pub model: NonlinearityModel,
    pub output: RunOutput,
    pub initial_state: RadialState,
    pub membership: MembershipReport,
    pub eta_search: Option<EtaSearch>,
    /// States captured at the configured snapshot times (time, state).
    pub snapshots: Vec<(f64, RadialState)>,
}

/// Resolve the initial data of a run (running the eta search if the
/// config asked for an energy target).
pub fn resolve_initial_data(
    resolved: &ResolvedConfig,
) -> Result<(InitialDataSpec, Option<EtaSearch>)> {
    match &resolved.initial {
        InitialDataChoice::Spec(spec) => Ok((*spec, None)),
        InitialDataChoice::FTarget { template, f_target } => {
            let search =
                initdata::find_eta_for_f(template, &resolved.model, resolved.mesh, *f_target)?;
            Ok((
                InitialDataSpec {
                    eta: search.eta,
                    ..*template
                },
                Some(search),
            ))
        }
    }
}

/// Run one configuration end to end.
pub fn execute(config: &SimulationConfig) -> Result<ExecutedRun> {
    let resolved = config.resolve()?;
    let (spec, eta_search) = resolve_initial_data(&resolved)?;
    let state0 = initdata::build(&spec, resolved.mesh)?;
    let membership = initdata::membership(&state0, &resolved.model, resolved.k_user, resolved.a_cap)?;
    let snapshot_times = resolved.snapshot_times.clone();
    let mut snapshots: Vec<(f64, RadialState)> = Vec::new();
    let mut next_snapshot = 0usize;
    let initial_state = state0.clone();
    let output = solver::run(state0, &resolved.model, &resolved.solver, |state, _rec| {
        while next_snapshot < snapshot_times.len() && state.t >= snapshot_times[next_snapshot] {
            snapshots.push((snapshot_times[next_snapshot], state.clone()));
            next_snapshot += 1;
        }
    })?;
    Ok(ExecutedRun {
        config: config.clone(),
        config_hash: config.hash(),
        model: resolved.model,
        output,
        initial_state,
        membership,
        eta_search,
        snapshots,
    })
}

/// Summary JSON payload; deterministic (no timestamps).
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub model: String,
    pub verdict: crate::solver::RunVerdict,
    pub counters: crate::solver::RunCounters,
    pub n_records: usize,
    pub mass_drift_rel: f64,
    pub mass_v_bound_ok: bool,
    pub sup_bhat: f64,
    /// sup_t Bhat / (||u0||_1 + ||v0||_1 + ||grad v0||_2).
    pub bhat_over_data_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub liapunov: Option<LiapunovIdentityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio36: Option<Ratio36Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup_time_estimate: Option<f64>,
    pub membership: MembershipReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_search: Option<EtaSearch>,
    pub config: SimulationConfig,
}

pub fn summarize(run: &ExecutedRun) -> RunSummary {
    let records = &run.output.records;
    let mass0 = records.first().map(|r| r.mass_u).unwrap_or(f64::NAN);
    let mass_drift_rel = records
        .iter()
        .map(|r| (r.mass_u - mass0).abs() / mass0.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let mass_cap = records
        .first()
        .map(|r| r.mass_u.max(r.mass_v))
        .unwrap_or(f64::NAN);
    let mass_v_bound_ok = records.iter().all(|r| r.mass_v <= mass_cap * (1.0 + 1e-6));
    let sup_bhat = records.iter().map(|r| r.bhat).fold(f64::NEG_INFINITY, f64::max);
    let data_norm = {
        let u0 = &run.initial_state.u;
        let v0 = &run.initial_state.v;
        u0.norms().l1 + v0.norms().l1 + v0.grad_sq_integral().sqrt()
    };
    RunSummary {
        config_hash: run.config_hash.clone(),
        model: run.model.name(),
        verdict: run.output.verdict.clone(),
        counters: run.output.counters,
        n_records: records.len(),
        mass_drift_rel,
        mass_v_bound_ok,
        sup_bhat,
        bhat_over_data_norm: sup_bhat / data_norm,
        liapunov: diagnostics::check_liapunov_identity(records).ok(),
        ratio36: diagnostics::check_theorem36(records).ok(),
        blowup_time_estimate: diagnostics::estimate_blowup_time(records, THETA).ok(),
        membership: run.membership.clone(),
        eta_search: run.eta_search,
        config: run.config.clone(),
    }
}

pub fn summary_json(summary: &RunSummary) -> String {
    serde_json::to_string_pretty(summary).expect("summary serializes")
}
