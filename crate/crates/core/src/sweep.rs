//! Parameter sweeps: a config template plus value axes over the model
//! exponents and the initial data, executed cell by cell on a worker pool
//! (rayon with the `parallel` feature, sequential otherwise). Cell order
//! is a pure function of the sweep spec; failures become `Error` rows and
//! never abort the sweep.

use crate::config::{ModelConfig, SimulationConfig};
use crate::error::{Error, Result};
use crate::report;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub q: Option<Vec<f64>>,
    pub gamma1: Option<Vec<f64>>,
    pub gamma2: Option<Vec<f64>>,
    pub m: Option<Vec<f64>>,
    pub eta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub template: SimulationConfig,
    pub axes: SweepAxes,
    /// Worker-pool size; defaults to the rayon global pool (parallel
    /// builds) or 1 (sequential builds).
    #[serde(default)]
    pub jobs: Option<usize>,
}

impl SweepSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SweepSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let axes = [
            ("q", &self.axes.q),
            ("gamma1", &self.axes.gamma1),
            ("gamma2", &self.axes.gamma2),
            ("m", &self.axes.m),
            ("eta", &self.axes.eta),
        ];
        let mut any = false;
        for (name, axis) in &axes {
            if let Some(values) = axis {
                if values.is_empty() {
                    return Err(Error::Config(format!("axes.{name} is empty")));
                }
                any = true;
            }
        }
        if !any {
            return Err(Error::Config("sweep needs at least one axis".into()));
        }
        if self.axes.q.is_some() && (self.axes.gamma1.is_some() || self.axes.gamma2.is_some()) {
            return Err(Error::Config(
                "axes.q and axes.gamma1/gamma2 select different model families; sweep one family"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// The axis values that define one sweep cell.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CellOverrides {
    pub q: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub m: Option<f64>,
    pub eta: Option<f64>,
}

/// One output row of the phase diagram.
#[derive(Debug, Clone, Serialize)]
pub struct CellRow {
    pub index: usize,
    #[serde(flatten)]
    pub overrides: CellOverrides,
    pub verdict: String,
    pub t_star: Option<f64>,
    pub sup_ratio36: Option<f64>,
    /// Fitted membership surrogate -F0 / (1 + A^2).
    pub k_fit: Option<f64>,
    pub config_hash: String,
    pub error: Option<String>,
}

fn apply_overrides(template: &SimulationConfig, ov: &CellOverrides) -> Result<SimulationConfig> {
    let mut cfg = template.clone();
    if let Some(q) = ov.q {
        cfg.model = ModelConfig::Name(format!("power_diffusion(q={q})"));
    }
    if ov.gamma1.is_some() || ov.gamma2.is_some() {
        // fall back to the template's exponents for the axis not swept
        let (tg1, tg2) = match template.model.resolve()?.kind() {
            crate::nonlinearity::ModelKind::RemarkFamily { gamma1, gamma2 } => {
                (Some(*gamma1), Some(*gamma2))
            }
            _ => (None, None),
        };
        let g1 = ov.gamma1.or(tg1).ok_or_else(|| {
            Error::Config("gamma2 axis without gamma1 (and template is not remark_family)".into())
        })?;
        let g2 = ov.gamma2.or(tg2).ok_or_else(|| {
            Error::Config("gamma1 axis without gamma2 (and template is not remark_family)".into())
        })?;
        cfg.model = ModelConfig::Name(format!("remark_family(gamma1={g1}, gamma2={g2})"));
    }
    if let Some(m) = ov.m {
        cfg.initial_data.m = m;
    }
    if let Some(eta) = ov.eta {
        cfg.initial_data.eta = Some(eta);
        cfg.initial_data.f_target = None;
    }
    Ok(cfg)
}

/// Expand the sweep into (overrides, config) cells in deterministic
/// lexicographic axis order: q, gamma1, gamma2, m, eta.
pub fn expand_cells(spec: &SweepSpec) -> Result<Vec<(CellOverrides, SimulationConfig)>> {
    spec.validate()?;
    let unit = vec![None];
    let axis = |v: &Option<Vec<f64>>| -> Vec<Option<f64>> {
        v.as_ref()
            .map(|vals| vals.iter().map(|&x| Some(x)).collect())
            .unwrap_or_else(|| unit.clone())
    };
    let mut cells = Vec::new();
    for &q in &axis(&spec.axes.q) {
        for &gamma1 in &axis(&spec.axes.gamma1) {
            for &gamma2 in &axis(&spec.axes.gamma2) {
                for &m in &axis(&spec.axes.m) {
                    for &eta in &axis(&spec.axes.eta) {
                        let ov = CellOverrides {
                            q,
                            gamma1,
                            gamma2,
                            m,
                            eta,
                        };
                        let cfg = apply_overrides(&spec.template, &ov)?;
                        cells.push((ov, cfg));
                    }
                }
            }
        }
    }
    Ok(cells)
}

fn execute_cell(index: usize, ov: &CellOverrides, cfg: &SimulationConfig) -> CellRow {
    match report::execute(cfg) {
        Ok(run) => {
            let summary = report::summarize(&run);
            let k_fit = {
                let a2 = summary.membership.a_actual * summary.membership.a_actual;
                Some(-summary.membership.f0 / (1.0 + a2))
            };
            CellRow {
                index,
                overrides: *ov,
                verdict: format!("{:?}", run.output.verdict.label),
                t_star: run.output.verdict.t_star,
                sup_ratio36: summary.ratio36.as_ref().map(|r| r.sup),
                k_fit,
                config_hash: run.config_hash,
                error: None,
            }
        }
        Err(e) => CellRow {
            index,
            overrides: *ov,
            verdict: "Error".into(),
            t_star: None,
            sup_ratio36: None,
            k_fit: None,
            config_hash: cfg.hash(),
            error: Some(e.to_string()),
        },
    }
}

/// Run the cells one after another (always available; the fallback path
/// of builds without the `parallel` feature).
pub fn run_cells_sequential(cells: &[(CellOverrides, SimulationConfig)]) -> Vec<CellRow> {
    cells
        .iter()
        .enumerate()
        .map(|(i, (ov, cfg))| execute_cell(i, ov, cfg))
        .collect()
}

/// Run the cells on a rayon pool. Row order equals cell order regardless
/// of completion order.
#[cfg(feature = "parallel")]
pub fn run_cells_parallel(
    cells: &[(CellOverrides, SimulationConfig)],
    jobs: Option<usize>,
) -> Vec<CellRow> {
    use rayon::prelude::*;
    let body = || {
        cells
            .par_iter()
            .enumerate()
            .map(|(i, (ov, cfg))| execute_cell(i, ov, cfg))
            .collect()
    };
    match jobs {
        Some(j) if j > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map(|pool| pool.install(body))
            .unwrap_or_else(|_| body()),
        _ => body(),
    }
}

/// Execute a whole sweep spec with the best available backend.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<CellRow>> {
    let cells = expand_cells(spec)?;
    #[cfg(feature = "parallel")]
    {
        if spec.jobs == Some(1) {
            Ok(run_cells_sequential(&cells))
        } else {
            Ok(run_cells_parallel(&cells, spec.jobs))
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(run_cells_sequential(&cells))
    }
}

pub const PHASE_HEADER: &str =
    "index,q,gamma1,gamma2,m,eta,verdict,t_star,sup_ratio36,k_fit,config_hash,error";

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Phase-diagram CSV: one row per cell in deterministic axis order.
pub fn phase_csv(rows: &[CellRow]) -> String {
    let mut out = String::from(PHASE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.index,
            opt(r.overrides.q),
            opt(r.overrides.gamma1),
            opt(r.overrides.gamma2),
            opt(r.overrides.m),
            opt(r.overrides.eta),
            r.verdict,
            opt(r.t_star),
            opt(r.sup_ratio36),
            opt(r.k_fit),
            r.config_hash,
            r.error.as_deref().unwrap_or("")
        ));
    }
    out
}
