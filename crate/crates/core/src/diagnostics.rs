//! Energy and dissipation functionals along trajectories.
//!
//! The monitored quantities are
//!
//! ```text
//! F(u,v) = 1/2 int |grad v|^2 + 1/2 int v^2 - int u v + int G(u)
//! D(u,v) = int v_t^2 + int psi(u) |phi(u)/psi(u) grad u - grad v|^2
//! f      = -Lap v + v - u
//! g      = (phi/sqrt(psi) grad u - sqrt(psi) grad v) . x/|x|
//! ```
//!
//! with v_t evaluated through the PDE right-hand side (-f), which makes
//! the identity D = ||f||_2^2 + ||g||_2^2 hold at the discrete level up to
//! rounding and keeps the dissipation measurement free of time-stepping
//! noise. Along exact solutions dF/dt = -D; the residual of that identity
//! is tracked between consecutive records.

use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::nonlinearity::NonlinearityModel;
use crate::quad;
use crate::solver::RadialState;
use serde::Serialize;

/// Exponent of the dissipation in the energy-vs-dissipation ratio.
pub const THETA: f64 = 8.0 / 9.0;

/// Per-record scalar diagnostics; one CSV row.
#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub linf_u: f64,
    /// Liapunov functional F.
    pub f: f64,
    /// Dissipation D.
    pub d: f64,
    pub norm_f_l2: f64,
    pub norm_g_l2: f64,
    /// (-F) / (D^theta + 1) with theta = 8/9.
    pub ratio36: f64,
    /// v-decay statistic: max_i v_i r_i^2.
    pub bhat: f64,
    /// W^{1,2} norm of v.
    pub a_w12: f64,
    /// |dF/dt + D| between this record and the previous one (NaN on the
    /// first record).
    pub dfdt_residual: f64,
}

/// Liapunov functional F(u, v). Requires u >= 0 (G is evaluated on the
/// closure of the positive axis).
pub fn liapunov_f(state: &RadialState, model: &NonlinearityModel) -> Result<f64> {
    let u = &state.u;
    let v = &state.v;
    let mesh = state.mesh();
    let grad_term = 0.5 * v.grad_sq_integral();
    let mut v2 = 0.0;
    let mut uv = 0.0;
    let mut g_term = 0.0;
    for i in 0..mesh.n() {
        let w = mesh.cell_volume(i);
        let ui = u.values()[i];
        let vi = v.values()[i];
        v2 += w * vi * vi;
        uv += w * ui * vi;
        g_term += w * model.eval_g(ui)?;
    }
    Ok(grad_term + 0.5 * v2 - uv + g_term)
}

/// Discrete f = -Lap v + v - u on cells.
pub fn compute_f(state: &RadialState) -> RadialField {
    let lap = state.v.laplacian();
    let vals = (0..state.mesh().n())
        .map(|i| -lap[i] + state.v.values()[i] - state.u.values()[i])
        .collect();
    RadialField::from_values(state.mesh(), vals).expect("same mesh")
}

/// Discrete g at faces (length n+1, zero at the boundary faces):
/// `g = phi(u)/sqrt(psi(u)) u_r - sqrt(psi(u)) v_r` with the arithmetic
/// face mean of u. Where psi vanishes (only possible at u = 0) the value
/// is zero provided u is locally flat; otherwise the quotient is undefined.
pub fn compute_g(state: &RadialState, model: &NonlinearityModel) -> Result<Vec<f64>> {
    let mesh = state.mesh();
    let n = mesh.n();
    let dr = mesh.dr();
    let u = state.u.values();
    let v = state.v.values();
    let mut g = vec![0.0; n + 1];
    for f in 1..n {
        let du = (u[f] - u[f - 1]) / dr;
        let dv = (v[f] - v[f - 1]) / dr;
        let ubar = 0.5 * (u[f] + u[f - 1]);
        let psi = model.psi(ubar);
        if psi <= 0.0 {
            if du == 0.0 {
                g[f] = 0.0;
                continue;
            }
            return Err(Error::Domain(format!(
                "psi(u) = {psi} at face {f} with a nonzero u gradient"
            )));
        }
        let sqrt_psi = psi.sqrt();
        g[f] = model.phi(ubar) / sqrt_psi * du - sqrt_psi * dv;
    }
    Ok(g)
}

/// Weighted L2 norm of a face array (interior faces only).
fn face_l2(state: &RadialState, g: &[f64]) -> f64 {
    let mesh = state.mesh();
    let mut acc = 0.0;
    for f in 1..mesh.n() {
        acc += mesh.face_weight(f) * g[f] * g[f];
    }
    acc.sqrt()
}

/// Dissipation D(u, v) = int v_t^2 + int psi |phi/psi grad u - grad v|^2,
/// with v_t taken from the PDE right-hand side. This is the primary route;
/// it equals ||f||^2 + ||g||^2 up to rounding, which the diagnostics
/// record cross-checks through an independent evaluation of g.
pub fn dissipation_d(state: &RadialState, model: &NonlinearityModel) -> Result<f64> {
    let mesh = state.mesh();
    let n = mesh.n();
    let dr = mesh.dr();
    let f = compute_f(state);
    let mut vt2 = 0.0;
    for i in 0..n {
        let fi = f.values()[i];
        vt2 += mesh.cell_volume(i) * fi * fi;
    }
    let u = state.u.values();
    let v = state.v.values();
    let mut cross = 0.0;
    for face in 1..n {
        let du = (u[face] - u[face - 1]) / dr;
        let dv = (v[face] - v[face - 1]) / dr;
        let ubar = 0.5 * (u[face] + u[face - 1]);
        let psi = model.psi(ubar);
        if psi <= 0.0 {
            if du == 0.0 {
                continue;
            }
            return Err(Error::Domain(format!(
                "psi(u) = {psi} at face {face} with a nonzero u gradient"
            )));
        }
        let q = model.phi(ubar) / psi * du - dv;
        cross += mesh.face_weight(face) * psi * q * q;
    }
    Ok(vt2 + cross)
}

/// v-decay statistic: max over cells of v_i r_i^2.
pub fn check_v_decay(state: &RadialState) -> f64 {
    let mesh = state.mesh();
    state
        .v
        .values()
        .iter()
        .enumerate()
        .map(|(i, &vi)| {
            let r = mesh.cell_center(i);
            vi * r * r
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Assemble one diagnostics record, chaining the dF/dt + D residual from
/// the previous record when available.
pub fn make_record(
    state: &RadialState,
    model: &NonlinearityModel,
    prev: Option<&DiagnosticsRecord>,
) -> Result<DiagnosticsRecord> {
    let f_energy = liapunov_f(state, model)?;
    let d = dissipation_d(state, model)?;
    let f_field = compute_f(state);
    let norm_f_l2 = f_field.norms().l2;
    let g = compute_g(state, model)?;
    let norm_g_l2 = face_l2(state, &g);
    let ratio36 = (-f_energy) / (d.powf(THETA) + 1.0);
    let dfdt_residual = match prev {
        Some(p) if state.t > p.t => {
            let dfdt = (f_energy - p.f) / (state.t - p.t);
            (dfdt + 0.5 * (d + p.d)).abs()
        }
        _ => f64::NAN,
    };
    Ok(DiagnosticsRecord {
        t: state.t,
        dt: state.dt,
        mass_u: state.u.integrate(),
        mass_v: state.v.integrate(),
        linf_u: state.u.norms().linf,
        f: f_energy,
        d,
        norm_f_l2,
        norm_g_l2,
        ratio36,
        bhat: check_v_decay(state),
        a_w12: state.v.w12_norm(),
        dfdt_residual,
    })
}

/// Residual report of the decay identity dF/dt = -D between records.
#[derive(Debug, Clone, Serialize)]
pub struct LiapunovIdentityReport {
    pub max_residual: f64,
    pub mean_residual: f64,
    pub max_rel_residual: f64,
    pub mean_rel_residual: f64,
    /// F_{k+1} <= F_k + 1e-9 (1 + |F_k|) at every pair.
    pub f_monotone: bool,
    pub worst_increase: f64,
}

pub fn check_liapunov_identity(records: &[DiagnosticsRecord]) -> Result<LiapunovIdentityReport> {
    if records.len() < 2 {
        return Err(Error::Precondition(
            "need at least two records to check the decay identity".into(),
        ));
    }
    let mut max_res: f64 = 0.0;
    let mut sum_res = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut sum_rel = 0.0;
    let mut count = 0usize;
    let mut monotone = true;
    let mut worst_increase: f64 = 0.0;
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        if !(b.t > a.t) {
            continue;
        }
        let dfdt = (b.f - a.f) / (b.t - a.t);
        let dbar = 0.5 * (a.d + b.d);
        let res = (dfdt + dbar).abs();
        let rel = if res == 0.0 {
            0.0
        } else {
            res / dbar.abs().max(dfdt.abs()).max(f64::MIN_POSITIVE)
        };
        max_res = max_res.max(res);
        sum_res += res;
        max_rel = max_rel.max(rel);
        sum_rel += rel;
        count += 1;
        let increase = b.f - (a.f + 1e-9 * (1.0 + a.f.abs()));
        if increase > 0.0 {
            monotone = false;
            worst_increase = worst_increase.max(increase);
        }
    }
    if count == 0 {
        return Err(Error::Precondition("records do not advance in time".into()));
    }
    Ok(LiapunovIdentityReport {
        max_residual: max_res,
        mean_residual: sum_res / count as f64,
        max_rel_residual: max_rel,
        mean_rel_residual: sum_rel / count as f64,
        f_monotone: monotone,
        worst_increase,
    })
}

/// Boundedness report for the energy-vs-dissipation ratio along a run.
/// The constant itself is existential, so only the fitted supremum and its
/// relation to the trajectory median are reported.
#[derive(Debug, Clone, Serialize)]
pub struct Ratio36Report {
    pub sup: f64,
    pub median: f64,
    pub t_at_sup: f64,
    /// No record exceeds 1e6 times the trajectory median.
    pub bounded: bool,
}

pub fn check_theorem36(records: &[DiagnosticsRecord]) -> Result<Ratio36Report> {
    if records.is_empty() {
        return Err(Error::Precondition("no records".into()));
    }
    let mut ratios: Vec<f64> = records.iter().map(|r| r.ratio36).collect();
    let (mut sup, mut t_at) = (f64::NEG_INFINITY, 0.0);
    for r in records {
        if r.ratio36 > sup {
            sup = r.ratio36;
            t_at = r.t;
        }
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = ratios[ratios.len() / 2];
    let bounded = sup.is_finite() && sup <= 1e6 * median.abs().max(1e-12);
    Ok(Ratio36Report {
        sup,
        median,
        t_at_sup: t_at,
        bounded,
    })
}

/// Extrapolate the divergence time of -F from the comparison ODE
/// `y' = c (y^{1/theta} - 1)`: fit c between consecutive samples, take the
/// window minimum, and integrate the ODE remainder in closed quadrature
/// form. `ts` and `neg_f` are the sample times and -F values over the
/// fitting window (already restricted by the caller).
pub fn estimate_blowup_time_from_series(ts: &[f64], neg_f: &[f64], theta: f64) -> Result<f64> {
    if ts.len() != neg_f.len() || ts.len() < 2 {
        return Err(Error::Precondition(
            "need at least two (t, -F) samples".into(),
        ));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Precondition(format!("theta must lie in (0,1), got {theta}")));
    }
    let inv_theta = 1.0 / theta;
    let mut c_min = f64::INFINITY;
    for k in 0..ts.len() - 1 {
        let (y0, y1) = (neg_f[k], neg_f[k + 1]);
        let dt = ts[k + 1] - ts[k];
        if !(y1 > y0) || !(dt > 0.0) {
            return Err(Error::Precondition(
                "-F must be strictly increasing over the fitting window".into(),
            ));
        }
        if !(y0 > 1.0) {
            return Err(Error::Precondition(
                "-F must exceed 1 over the fitting window".into(),
            ));
        }
        let ybar = 0.5 * (y0 + y1);
        let c = ((y1 - y0) / dt) / (ybar.powf(inv_theta) - 1.0);
        c_min = c_min.min(c);
    }
    if !(c_min > 0.0 && c_min.is_finite()) {
        return Err(Error::Precondition(format!("fitted rate c = {c_min} is unusable")));
    }
    let y_last = *neg_f.last().unwrap();
    // Remaining time: int_{y}^{inf} dy / (c (y^{1/theta} - 1)); substitute
    // w = y^{-(1-theta)/theta} in (0,1):
    //   T = theta/(1-theta) / c * int_0^{w0} dw / (1 - w^{1/(1-theta)})
    let k_exp = 1.0 / (1.0 - theta);
    let w0 = y_last.powf(-(1.0 - theta) / theta);
    let integral = quad::adaptive_simpson(|w| 1.0 / (1.0 - w.powf(k_exp)), 0.0, w0, 1e-12, 1e-30)?;
    let remaining = theta / (1.0 - theta) / c_min * integral;
    Ok(ts.last().unwrap() + remaining)
}

/// Record-level wrapper: fit over the last 25% of records (at least 20)
/// and refuse when -F is not strictly increasing there.
pub fn estimate_blowup_time(records: &[DiagnosticsRecord], theta: f64) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::Precondition("need at least two records".into()));
    }
    let window = records.len().div_ceil(4).max(20).min(records.len());
    let tail = &records[records.len() - window..];
    let ts: Vec<f64> = tail.iter().map(|r| r.t).collect();
    let neg_f: Vec<f64> = tail.iter().map(|r| -r.f).collect();
    estimate_blowup_time_from_series(&ts, &neg_f, theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialMesh;
    use crate::solver::{self, SolverConfig};
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    fn homogeneous(c: f64, n: usize) -> RadialState {
        let mesh = RadialMesh::new(1.0, n).unwrap();
        RadialState::new(
            RadialField::constant(mesh, c),
            RadialField::constant(mesh, c),
        )
        .unwrap()
    }

    #[test]
    fn liapunov_of_homogeneous_state_reduces_to_constants() {
        // F = pi R^2 (G(c) - c^2/2); at c = e with s0 = e, G(e) = 0.
        let model = NonlinearityModel::semilinear();
        let state = homogeneous(E, 64);
        let f = liapunov_f(&state, &model).unwrap();
        assert_relative_eq!(f, -PI * E * E / 2.0, max_relative = 1e-12);

        let c = 1.7;
        let state = homogeneous(c, 64);
        let expected = PI * (model.eval_g(c).unwrap() - c * c / 2.0);
        assert_relative_eq!(
            liapunov_f(&state, &model).unwrap(),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn liapunov_integration_by_parts_oracle_for_elliptic_v() {
        // With v the stationary solve, int u v = int |grad v|^2 + int v^2,
        // so F = -1/2 int |grad v|^2 - 1/2 int v^2 + int G(u).
        let mesh = RadialMesh::new(1.0, 256).unwrap();
        let model = NonlinearityModel::semilinear();
        let u = RadialField::from_fn(mesh, |r| 0.5 + (1.0 + (r / 0.15).powi(2)).powi(-2));
        let v = solver::solve_stationary_v(&u);
        let state = RadialState::new(u, v).unwrap();
        let direct = liapunov_f(&state, &model).unwrap();
        let grad2 = state.v.grad_sq_integral();
        let v2 = {
            let n = state.v.norms().l2;
            n * n
        };
        let g_int: f64 = (0..mesh.n())
            .map(|i| mesh.cell_volume(i) * model.eval_g(state.u.values()[i]).unwrap())
            .sum();
        let via_identity = -0.5 * grad2 - 0.5 * v2 + g_int;
        assert_relative_eq!(direct, via_identity, max_relative = 1e-8);
    }

    #[test]
    fn dissipation_vanishes_at_homogeneous_steady_state() {
        let model = NonlinearityModel::semilinear();
        let state = homogeneous(2.0, 64);
        assert_eq!(dissipation_d(&state, &model).unwrap(), 0.0);
        assert!(compute_f(&state).values().iter().all(|&x| x == 0.0));
        assert!(compute_g(&state, &model)
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn dissipation_equals_norm_identity_on_generic_states() {
        let mesh = RadialMesh::new(1.0, 128).unwrap();
        for model in [
            NonlinearityModel::semilinear(),
            NonlinearityModel::power_diffusion(-1.0).unwrap(),
            NonlinearityModel::remark_family(3.0, 0.5).unwrap(),
        ] {
            let u = RadialField::from_fn(mesh, |r| 0.7 + (7.0 * r).sin().powi(2) + r);
            let v = RadialField::from_fn(mesh, |r| 0.4 + 0.3 * (3.0 * r).cos() + 0.5 * r * r);
            let state = RadialState::new(u, v).unwrap();
            let d = dissipation_d(&state, &model).unwrap();
            assert!(d >= 0.0);
            let nf = compute_f(&state).norms().l2;
            let g = compute_g(&state, &model).unwrap();
            let ng = face_l2(&state, &g);
            let rhs = nf * nf + ng * ng;
            assert!(
                (d - rhs).abs() / d.abs().max(1e-300) < 1e-10,
                "{}: D = {d}, |f|^2+|g|^2 = {rhs}",
                model.name()
            );
        }
    }

    #[test]
    fn dissipation_of_pure_v_decay_matches_exact_solution() {
        // u = 0 test mode, v0 = c: v(t) = c e^{-t} and D = pi R^2 c^2 e^{-2t}.
        let mesh = RadialMesh::new(1.0, 64).unwrap();
        let c = 2.0;
        let model = NonlinearityModel::semilinear();
        let u = RadialField::constant(mesh, 0.0);
        let v = RadialField::constant(mesh, c);
        let state0 = RadialState::new(u, v).unwrap();
        assert_relative_eq!(
            dissipation_d(&state0, &model).unwrap(),
            PI * c * c,
            max_relative = 1e-12
        );
        let config = SolverConfig {
            cfl_safety: 1.0,
            dt_max: 1e-4,
            t_end: 1.0,
            record_every_steps: 0,
            ..Default::default()
        };
        let out = solver::run(state0, &model, &config, |_, _| {}).unwrap();
        let d_end = dissipation_d(&out.final_state, &model).unwrap();
        assert_relative_eq!(d_end, PI * c * c * (-2.0f64).exp(), max_relative = 1e-3);
    }

    #[test]
    fn g_reduction_for_semilinear_u_equals_v() {
        // With phi = 1, psi = u and v = u: g = u_r (1 - ubar) / sqrt(ubar).
        let mesh = RadialMesh::new(1.0, 32).unwrap();
        let model = NonlinearityModel::semilinear();
        let u = RadialField::from_fn(mesh, |r| 0.5 + r * r);
        let state = RadialState::new(u.clone(), u.clone()).unwrap();
        let g = compute_g(&state, &model).unwrap();
        let dr = mesh.dr();
        for f in 1..mesh.n() {
            let du = (u.values()[f] - u.values()[f - 1]) / dr;
            let ubar = 0.5 * (u.values()[f] + u.values()[f - 1]);
            let expected = du * (1.0 - ubar) / ubar.sqrt();
            assert_relative_eq!(g[f], expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn f_field_is_tiny_for_stationary_v() {
        let mesh = RadialMesh::new(1.0, 128).unwrap();
        let u = RadialField::from_fn(mesh, |r| 1.0 + (4.0 * r).cos().powi(2));
        let v = solver::solve_stationary_v(&u);
        let state = RadialState::new(u.clone(), v).unwrap();
        let nf = compute_f(&state).norms().l2;
        assert!(nf < 1e-10 * u.norms().l2, "residual {nf}");
    }

    #[test]
    fn identity_report_is_zero_on_steady_state() {
        let model = NonlinearityModel::semilinear();
        let state = homogeneous(E, 32);
        let mut r0 = make_record(&state, &model, None).unwrap();
        r0.t = 0.0;
        let mut r1 = r0.clone();
        r1.t = 1.0;
        let report = check_liapunov_identity(&[r0, r1]).unwrap();
        assert_eq!(report.max_residual, 0.0);
        assert!(report.f_monotone);
    }

    #[test]
    fn ratio36_is_constant_on_steady_state() {
        let model = NonlinearityModel::semilinear();
        let c = E;
        let state = homogeneous(c, 64);
        let rec = make_record(&state, &model, None).unwrap();
        // D = 0: ratio36 = -F = pi R^2 (c^2/2 - G(c)).
        let expected = PI * (c * c / 2.0 - model.eval_g(c).unwrap());
        assert_relative_eq!(rec.ratio36, expected, max_relative = 1e-12);
        let report = check_theorem36(&[rec.clone(), rec]).unwrap();
        assert!(report.bounded);
    }

    #[test]
    fn bhat_examples() {
        let mesh = RadialMesh::new(1.0, 256).unwrap();
        let c = 3.0;
        let state = RadialState::new(
            RadialField::constant(mesh, 1.0),
            RadialField::constant(mesh, c),
        )
        .unwrap();
        // maximum sits at the outermost cell center R - dr/2
        let r_last = mesh.cell_center(mesh.n() - 1);
        assert_relative_eq!(check_v_decay(&state), c * r_last * r_last, max_relative = 1e-14);
        assert!((check_v_decay(&state) - c).abs() < 2.0 * c * mesh.dr());

        let zero = RadialState::new(
            RadialField::constant(mesh, 1.0),
            RadialField::constant(mesh, 0.0),
        )
        .unwrap();
        assert_eq!(check_v_decay(&zero), 0.0);
    }

    #[test]
    fn blowup_time_extrapolation_recovers_the_ode() {
        // Generate samples from y' = y^{9/8} - 1 (c = 1), y(0) = 10, by RK4.
        let c = 1.0;
        let y0 = 10.0;
        let rhs = |y: f64| c * (y.powf(9.0 / 8.0) - 1.0);
        let mut t = 0.0;
        let mut y = y0;
        let h = 1e-5;
        let mut ts = vec![t];
        let mut ys = vec![y];
        while y < 1e4 {
            let k1 = rhs(y);
            let k2 = rhs(y + 0.5 * h * k1);
            let k3 = rhs(y + 0.5 * h * k2);
            let k4 = rhs(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
            if ts.len() < 4000 {
                ts.push(t);
                ys.push(y);
            } else {
                break;
            }
        }
        let est = estimate_blowup_time_from_series(&ts, &ys, THETA).unwrap();
        // Exact divergence time: int_10^inf dy/(y^{9/8} - 1), frozen from an
        // independent quadrature.
        let exact = 6.046012352986;
        assert!(
            (est - exact).abs() / exact < 0.01,
            "estimate {est} vs exact {exact}"
        );
    }

    #[test]
    fn blowup_time_refuses_non_monotone_series() {
        let ts = [0.0, 1.0, 2.0];
        let ys = [10.0, 10.0, 10.0];
        assert!(estimate_blowup_time_from_series(&ts, &ys, THETA).is_err());
    }
}
