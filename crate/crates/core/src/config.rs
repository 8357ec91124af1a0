//! TOML run configuration, validation with field paths, and the
//! deterministic config hash embedded in every output artifact.

use crate::error::{Error, Result};
use crate::grid::RadialMesh;
use crate::initdata::{InitialDataSpec, Profile, VMode};
use crate::nonlinearity::{parse_model_name, NonlinearityModel};
use crate::solver::SolverConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub r: f64,
    pub n: usize,
}

/// Model selector: either a catalog name like
/// `"remark_family(gamma1=3, gamma2=0.5)"` or a structured table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelConfig {
    Name(String),
    Table {
        kind: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        q: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        gamma1: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        gamma2: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        s0: Option<f64>,
    },
}

impl ModelConfig {
    pub fn resolve(&self) -> Result<NonlinearityModel> {
        match self {
            ModelConfig::Name(name) => parse_model_name(name),
            ModelConfig::Table {
                kind,
                q,
                gamma1,
                gamma2,
                s0,
            } => {
                let model = match kind.as_str() {
                    "semilinear" => NonlinearityModel::semilinear(),
                    "power_diffusion" => NonlinearityModel::power_diffusion(
                        q.ok_or_else(|| Error::Config("model.q required for power_diffusion".into()))?,
                    )?,
                    "remark_family" => NonlinearityModel::remark_family(
                        gamma1.ok_or_else(|| {
                            Error::Config("model.gamma1 required for remark_family".into())
                        })?,
                        gamma2.ok_or_else(|| {
                            Error::Config("model.gamma2 required for remark_family".into())
                        })?,
                    )?,
                    other => {
                        return Err(Error::Config(format!("model.kind: unknown model `{other}`")))
                    }
                };
                match s0 {
                    Some(s0) => model.with_s0(*s0),
                    None => Ok(model),
                }
            }
        }
    }
}

fn default_floor_rel() -> f64 {
    1e-8
}

fn default_k_user() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataConfig {
    pub profile: Profile,
    pub m: f64,
    /// Concentration scale; exactly one of `eta` and `f_target` must be set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Energy target for the eta search.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_target: Option<f64>,
    pub v_mode: VMode,
    #[serde(default = "default_floor_rel")]
    pub floor_rel: f64,
    /// Surrogate for the existential membership constant K(m).
    #[serde(default = "default_k_user")]
    pub k_user: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_cap: Option<f64>,
}

impl Default for InitialDataConfig {
    fn default() -> Self {
        Self {
            profile: Profile::Rational4,
            m: 1.0,
            eta: Some(0.1),
            f_target: None,
            v_mode: VMode::Elliptic,
            floor_rel: default_floor_rel(),
            k_user: default_k_user(),
            a_cap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    pub every_steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub every_time: Option<f64>,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            every_steps: 100,
            every_time: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    pub snapshot_times: Vec<f64>,
}

/// One full deterministic run description; round-trips through TOML.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub mesh: MeshConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    pub initial_data: InitialDataConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// How the initial data is obtained for a run.
#[derive(Debug, Clone)]
pub enum InitialDataChoice {
    Spec(InitialDataSpec),
    FTarget {
        template: InitialDataSpec,
        f_target: f64,
    },
}

/// A validated configuration with concrete runtime objects.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub mesh: RadialMesh,
    pub model: NonlinearityModel,
    pub solver: SolverConfig,
    pub initial: InitialDataChoice,
    pub k_user: f64,
    pub a_cap: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

impl SimulationConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Hex prefix of the SHA-256 of the canonical serialization; names
    /// every artifact the run produces.
    pub fn hash(&self) -> String {
        let canonical = self.to_toml();
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(12);
        for byte in digest.iter().take(6) {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let mesh = RadialMesh::new(self.mesh.r, self.mesh.n)
            .map_err(|e| Error::Config(format!("mesh: {e}")))?;
        let model = self.model.resolve()?;
        let mut solver = self.solver.clone();
        solver
            .validate()
            .map_err(|e| Error::Config(format!("solver: {e}")))?;
        solver.record_every_steps = self.diagnostics.every_steps;
        solver.record_every_time = self.diagnostics.every_time;
        let id = &self.initial_data;
        if !(id.m > 0.0) {
            return Err(Error::Config(format!(
                "initial_data.m must be > 0, got {}",
                id.m
            )));
        }
        let template = InitialDataSpec {
            m: id.m,
            eta: id.eta.unwrap_or(0.1),
            profile: id.profile,
            v_mode: id.v_mode,
            floor_rel: id.floor_rel,
        };
        let initial = match (id.eta, id.f_target, id.profile) {
            (_, None, Profile::Constant) => InitialDataChoice::Spec(template),
            (Some(_), None, _) => InitialDataChoice::Spec(template),
            (None, Some(f_target), _) => InitialDataChoice::FTarget { template, f_target },
            (Some(_), Some(_), _) => {
                return Err(Error::Config(
                    "initial_data: set exactly one of eta and f_target, not both".into(),
                ))
            }
            (None, None, _) => {
                return Err(Error::Config(
                    "initial_data: one of eta or f_target is required".into(),
                ))
            }
        };
        let mut snapshot_times = self.output.snapshot_times.clone();
        snapshot_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(ResolvedConfig {
            mesh,
            model,
            solver,
            initial,
            k_user: id.k_user,
            a_cap: id.a_cap,
            snapshot_times,
        })
    }
}
