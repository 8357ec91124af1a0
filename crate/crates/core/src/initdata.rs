//! Concentrated radial initial-data families, the membership quantities of
//! the energy-negativity set, and the search for a concentration scale
//! reaching a prescribed energy level.
//!
//! The density profile is normalized through the mesh quadrature itself,
//! so the discrete mass equals the requested mass to round-off on every
//! mesh. A relative additive floor keeps the data strictly positive.
//! The default chemoattractant is the stationary solve, which minimizes
//! the energy over v at fixed u and therefore gives the most negative
//! F per unit concentration.

use crate::diagnostics;
use crate::error::{Error, Result};
use crate::grid::{RadialField, RadialMesh};
use crate::nonlinearity::NonlinearityModel;
use crate::solver::{self, RadialState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// (1 + (r/eta)^2)^{-2}: slow algebraic tail, strong concentration.
    Rational4,
    /// exp(-(r/eta)^2).
    Gaussian,
    /// Spatially homogeneous data (eta is ignored).
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VMode {
    /// v = stationary solve of -Lap v + v = u.
    Elliptic,
    /// v = u smoothed by one implicit diffusion step of scale (eta/2)^2.
    Copy,
}

/// Recipe for an initial pair (u, v).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InitialDataSpec {
    pub m: f64,
    pub eta: f64,
    pub profile: Profile,
    pub v_mode: VMode,
    /// Additive positivity floor, relative to the mean density m/(pi R^2).
    pub floor_rel: f64,
}

impl Default for InitialDataSpec {
    fn default() -> Self {
        Self {
            m: 1.0,
            eta: 0.1,
            profile: Profile::Rational4,
            v_mode: VMode::Elliptic,
            floor_rel: 1e-8,
        }
    }
}

impl InitialDataSpec {
    pub fn homogeneous(m: f64) -> Self {
        Self {
            m,
            profile: Profile::Constant,
            ..Default::default()
        }
    }

    fn validate(&self, mesh: RadialMesh) -> Result<()> {
        if !(self.m > 0.0) {
            return Err(Error::Config(format!("initial_data.m must be > 0, got {}", self.m)));
        }
        if !(self.floor_rel >= 0.0) {
            return Err(Error::Config("initial_data.floor_rel must be >= 0".into()));
        }
        if self.profile != Profile::Constant {
            let min_eta = 2.0 * mesh.dr();
            if !(self.eta > min_eta) {
                return Err(Error::UnresolvableEta {
                    eta: self.eta,
                    min_eta,
                });
            }
            if !(self.eta < mesh.r_outer()) {
                return Err(Error::Config(format!(
                    "initial_data.eta = {} must be smaller than R = {}",
                    self.eta,
                    mesh.r_outer()
                )));
            }
        }
        Ok(())
    }
}

/// Construct positive radial (u0, v0) with the exact requested mass.
pub fn build(spec: &InitialDataSpec, mesh: RadialMesh) -> Result<RadialState> {
    spec.validate(mesh)?;
    let shape = match spec.profile {
        Profile::Rational4 => RadialField::from_fn(mesh, |r| {
            let x = r / spec.eta;
            (1.0 + x * x).powi(-2)
        }),
        Profile::Gaussian => RadialField::from_fn(mesh, |r| {
            let x = r / spec.eta;
            (-x * x).exp()
        }),
        Profile::Constant => RadialField::constant(mesh, 1.0),
    };
    let z = shape.integrate();
    let floor = spec.floor_rel * z / mesh.total_volume();
    let mut raw = shape;
    for x in raw.values_mut() {
        *x += floor;
    }
    let z_floored = raw.integrate();
    let scale = spec.m / z_floored;
    for x in raw.values_mut() {
        *x *= scale;
    }
    let u = raw;
    let v = match spec.v_mode {
        VMode::Elliptic => solver::solve_stationary_v(&u),
        VMode::Copy => {
            let sigma = match spec.profile {
                Profile::Constant => 0.0,
                _ => (spec.eta / 2.0) * (spec.eta / 2.0),
            };
            if sigma == 0.0 {
                u.clone()
            } else {
                solver::solve_helmholtz(&u, sigma)
            }
        }
    };
    RadialState::new(u, v)
}

/// Membership quantities against the energy-negativity set: mass, the
/// W^{1,2} size of v0, the initial energy, and the user-supplied surrogate
/// for the existential constant K(m).
#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub m_actual: f64,
    pub a_actual: f64,
    pub f0: f64,
    pub k_user: f64,
    pub a_cap: Option<f64>,
    pub is_member: bool,
}

pub fn membership(
    state0: &RadialState,
    model: &NonlinearityModel,
    k_user: f64,
    a_cap: Option<f64>,
) -> Result<MembershipReport> {
    let m_actual = state0.u.integrate();
    let a_actual = state0.v.w12_norm();
    let f0 = diagnostics::liapunov_f(state0, model)?;
    let within_cap = a_cap.map_or(true, |cap| a_actual <= cap);
    let is_member = within_cap && f0 <= -k_user * (1.0 + a_actual * a_actual);
    Ok(MembershipReport {
        m_actual,
        a_actual,
        f0,
        k_user,
        a_cap,
        is_member,
    })
}

/// Result of the concentration search.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EtaSearch {
    pub eta: f64,
    pub f_value: f64,
    pub evaluations: u32,
}

/// Search for the largest eta whose data reaches `F(u_eta, v_eta) <=
/// f_target`, by geometric scan downward from 0.45 R followed by
/// geometric bisection to a bracket ratio below 2 (so the returned eta
/// also satisfies F(2 eta) > f_target under the monotone energy curve).
/// Fails cleanly with the smallest resolvable eta when the mesh bound is
/// reached first.
pub fn find_eta_for_f(
    template: &InitialDataSpec,
    model: &NonlinearityModel,
    mesh: RadialMesh,
    f_target: f64,
) -> Result<EtaSearch> {
    let mut evaluations = 0u32;
    let mut f_of = |eta: f64| -> Result<f64> {
        evaluations += 1;
        let spec = InitialDataSpec { eta, ..*template };
        let state = build(&spec, mesh)?;
        diagnostics::liapunov_f(&state, model)
    };
    let f_hom = {
        let state = build(&InitialDataSpec::homogeneous(template.m), mesh)?;
        diagnostics::liapunov_f(&state, model)?
    };
    if !(f_target < f_hom) {
        return Err(Error::Precondition(format!(
            "f_target = {f_target} is not below the homogeneous-state energy {f_hom}"
        )));
    }
    let eta_min = 2.0 * mesh.dr() * (1.0 + 1e-9);
    let eta_max: f64 = 0.45 * mesh.r_outer();
    if eta_max <= eta_min {
        return Err(Error::Config(
            "mesh too coarse for any resolvable concentration scale".into(),
        ));
    }
    let f_top = f_of(eta_max)?;
    if f_top <= f_target {
        return Ok(EtaSearch {
            eta: eta_max,
            f_value: f_top,
            evaluations,
        });
    }
    // geometric scan downward for a bracket [lo, hi]
    let mut hi = eta_max;
    let mut lo = eta_max;
    let mut f_lo;
    loop {
        let next = (lo / 2.0).max(eta_min);
        if next >= lo {
            return Err(Error::ResolutionBound {
                eta_min,
                f_at_min: f_of(eta_min)?,
                f_target,
            });
        }
        lo = next;
        f_lo = f_of(lo)?;
        if f_lo <= f_target {
            break;
        }
        hi = lo;
        if lo <= eta_min {
            return Err(Error::ResolutionBound {
                eta_min,
                f_at_min: f_lo,
                f_target,
            });
        }
    }
    // geometric bisection until hi/lo < 2
    while hi / lo >= 1.99 {
        let mid = (lo * hi).sqrt();
        let f_mid = f_of(mid)?;
        if f_mid <= f_target {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(EtaSearch {
        eta: lo,
        f_value: f_lo,
        evaluations,
    })
}
