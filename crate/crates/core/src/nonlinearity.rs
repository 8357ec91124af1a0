//! The nonlinearity pair (phi, beta) of the cross-diffusion system, the
//! derived functions psi(s) = s beta(s), G and H, and their closed forms.
//!
//! G and H are the double and single integrals
//!
//! ```text
//! G(s) = int_{s0}^s int_{s0}^sigma phi(tau)/psi(tau) dtau dsigma
//! H(s) = int_0^s sigma phi(sigma)/psi(sigma) dsigma = int_0^s phi/beta
//! ```
//!
//! G reduces exactly to the single integral `s*J(s) - K(s)` with
//! `J = int h`, `K = int tau h`, `h = phi/psi`, which is what the
//! quadrature path evaluates. The catalog families use elementary
//! antiderivatives where they exist (semilinear; power diffusion with
//! q = -1; the decay family with gamma2 = 1/2).

use crate::error::{Error, Result};
use crate::quad;
use std::fmt;
use std::sync::Arc;

/// Shared closure type for user-supplied nonlinearities.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Power of (1 + s) with fast paths for integer and half-integer exponents.
#[derive(Debug, Clone, Copy)]
struct Pow1p {
    e: f64,
    kind: PowKind,
}

#[derive(Debug, Clone, Copy)]
enum PowKind {
    One,
    Int(i32),
    HalfInt(i32),
    General,
}

impl Pow1p {
    fn new(e: f64) -> Self {
        let kind = if e == 0.0 {
            PowKind::One
        } else if e.fract() == 0.0 && e.abs() <= 64.0 {
            PowKind::Int(e as i32)
        } else if (e - 0.5).fract() == 0.0 && e.abs() <= 64.0 {
            PowKind::HalfInt((e - 0.5) as i32)
        } else {
            PowKind::General
        };
        Self { e, kind }
    }

    #[inline]
    fn eval(&self, s: f64) -> f64 {
        let x = 1.0 + s;
        match self.kind {
            PowKind::One => 1.0,
            PowKind::Int(k) => x.powi(k),
            PowKind::HalfInt(k) => x.powi(k) * x.sqrt(),
            PowKind::General => x.powf(self.e),
        }
    }
}

/// Model family.
#[derive(Clone)]
pub enum ModelKind {
    /// phi = 1, beta = 1 (psi(s) = s).
    Semilinear,
    /// phi(s) = (1+s)^q, beta = 1.
    PowerDiffusion { q: f64 },
    /// phi(s) = (1+s)^{-gamma1 - 2 gamma2}, beta(s) = (1+s)^{-gamma1 - gamma2}.
    RemarkFamily { gamma1: f64, gamma2: f64 },
    /// User-supplied evaluators for phi and beta.
    Custom { phi: ScalarFn, beta: ScalarFn },
}

impl fmt::Debug for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Semilinear => write!(f, "Semilinear"),
            ModelKind::PowerDiffusion { q } => write!(f, "PowerDiffusion {{ q: {q} }}"),
            ModelKind::RemarkFamily { gamma1, gamma2 } => {
                write!(f, "RemarkFamily {{ gamma1: {gamma1}, gamma2: {gamma2} }}")
            }
            ModelKind::Custom { .. } => write!(f, "Custom {{ .. }}"),
        }
    }
}

/// The nonlinearity pair (phi, beta) with psi(s) = s beta(s).
#[derive(Debug, Clone)]
pub struct NonlinearityModel {
    kind: ModelKind,
    s0: f64,
    phi_pow: Option<Pow1p>,
    beta_pow: Option<Pow1p>,
}

/// Asymptotic growth data `~ C s^p (ln s)^lambda`, exact for catalog
/// families by exponent arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PowerLog {
    pub p: f64,
    pub lambda: f64,
}

impl NonlinearityModel {
    pub fn semilinear() -> Self {
        Self::from_kind(ModelKind::Semilinear)
    }

    pub fn power_diffusion(q: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(Error::Config(format!("power_diffusion: q must be finite, got {q}")));
        }
        Ok(Self::from_kind(ModelKind::PowerDiffusion { q }))
    }

    pub fn remark_family(gamma1: f64, gamma2: f64) -> Result<Self> {
        if !(gamma1 > 2.0) {
            return Err(Error::Config(format!(
                "remark_family: gamma1 must be > 2, got {gamma1}"
            )));
        }
        if !(gamma2 > 0.0 && gamma2 < 1.0) {
            return Err(Error::Config(format!(
                "remark_family: gamma2 must lie in (0, 1), got {gamma2}"
            )));
        }
        Ok(Self::from_kind(ModelKind::RemarkFamily { gamma1, gamma2 }))
    }

    /// A model from user closures. `beta` must be positive with
    /// `beta(0) > 0`; both evaluators are validated on a log-spaced grid.
    pub fn custom(phi: ScalarFn, beta: ScalarFn) -> Result<Self> {
        let model = Self::from_kind(ModelKind::Custom { phi, beta });
        model.validate_positivity()?;
        Ok(model)
    }

    fn from_kind(kind: ModelKind) -> Self {
        let (phi_pow, beta_pow) = match kind {
            ModelKind::Semilinear => (Some(Pow1p::new(0.0)), Some(Pow1p::new(0.0))),
            ModelKind::PowerDiffusion { q } => (Some(Pow1p::new(q)), Some(Pow1p::new(0.0))),
            ModelKind::RemarkFamily { gamma1, gamma2 } => (
                Some(Pow1p::new(-gamma1 - 2.0 * gamma2)),
                Some(Pow1p::new(-gamma1 - gamma2)),
            ),
            ModelKind::Custom { .. } => (None, None),
        };
        Self {
            kind,
            s0: std::f64::consts::E,
            phi_pow,
            beta_pow,
        }
    }

    /// Replace the threshold s0 (> 1) used in the G and H definitions.
    pub fn with_s0(mut self, s0: f64) -> Result<Self> {
        if !(s0 > 1.0) {
            return Err(Error::Config(format!("s0 must be > 1, got {s0}")));
        }
        self.s0 = s0;
        Ok(self)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Canonical catalog name, mirroring the config-file syntax.
    pub fn name(&self) -> String {
        match &self.kind {
            ModelKind::Semilinear => "semilinear".to_owned(),
            ModelKind::PowerDiffusion { q } => format!("power_diffusion(q={q})"),
            ModelKind::RemarkFamily { gamma1, gamma2 } => {
                format!("remark_family(gamma1={gamma1}, gamma2={gamma2})")
            }
            ModelKind::Custom { .. } => "custom".to_owned(),
        }
    }

    #[inline]
    pub fn phi(&self, s: f64) -> f64 {
        match (&self.phi_pow, &self.kind) {
            (Some(p), _) => p.eval(s),
            (None, ModelKind::Custom { phi, .. }) => phi(s),
            _ => unreachable!(),
        }
    }

    #[inline]
    pub fn beta(&self, s: f64) -> f64 {
        match (&self.beta_pow, &self.kind) {
            (Some(p), _) => p.eval(s),
            (None, ModelKind::Custom { beta, .. }) => beta(s),
            _ => unreachable!(),
        }
    }

    /// psi(s) = s beta(s); never stored independently.
    #[inline]
    pub fn psi(&self, s: f64) -> f64 {
        s * self.beta(s)
    }

    /// Integrand of G: h = phi/psi = phi/(s beta).
    #[inline]
    fn h(&self, s: f64) -> f64 {
        self.phi(s) / (s * self.beta(s))
    }

    fn validate_positivity(&self) -> Result<()> {
        let mut s = 0.0;
        loop {
            let phi = self.phi(s);
            let beta = self.beta(s);
            if !(phi > 0.0 && phi.is_finite()) {
                return Err(Error::NonFiniteEvaluation { what: "phi", s });
            }
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::NonFiniteEvaluation { what: "beta", s });
            }
            if s == 0.0 {
                s = 1e-6;
            } else {
                s *= 10.0;
            }
            if s > 1e12 {
                return Ok(());
            }
        }
    }

    // ----- G -----

    /// G(s) by elementary antiderivative where one exists.
    pub fn eval_g_closed(&self, s: f64) -> Option<f64> {
        let s0 = self.s0;
        if s == 0.0 {
            // G(0) = int_0^{s0} tau h(tau) dtau = H(s0); the closed forms
            // below hit 0 * ln 0 at the origin.
            return self.eval_h_closed(s0);
        }
        match &self.kind {
            ModelKind::Semilinear => {
                // h = 1/tau: G = s ln s - s - (s0 ln s0 - s0) - (s - s0) ln s0
                Some(s * s.ln() - s - (s0 * s0.ln() - s0) - (s - s0) * s0.ln())
            }
            ModelKind::PowerDiffusion { q } if *q == -1.0 => {
                // h = 1/(tau (1+tau)): J = ln(tau/(1+tau)), K-int = ln(1+tau)
                let j = |t: f64| (t / (1.0 + t)).ln();
                let k = |t: f64| t.ln_1p();
                Some(s * (j(s) - j(s0)) - (k(s) - k(s0)))
            }
            ModelKind::RemarkFamily { gamma2, .. } if *gamma2 == 0.5 => {
                // h = (1+tau)^{-1/2}/tau; w = sqrt(1+tau):
                // J = ln((w-1)/(w+1)) = ln tau - 2 ln(1+w), K-int = 2w
                let j = |t: f64| t.ln() - 2.0 * (1.0 + (1.0 + t).sqrt()).ln();
                let k = |t: f64| 2.0 * (1.0 + t).sqrt();
                Some(s * (j(s) - j(s0)) - (k(s) - k(s0)))
            }
            _ => None,
        }
    }

    /// G(s) via adaptive quadrature of the reduced single integral.
    pub fn eval_g_quadrature(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Precondition(format!("eval_g requires s >= 0, got {s}")));
        }
        if s == 0.0 {
            // G(0) = H(s0): tau h(tau) = phi/beta.
            return self.eval_h_quadrature(self.s0);
        }
        let j = quad::integrate(|t| self.h(t), self.s0, s)?;
        let k = quad::integrate(|t| t * self.h(t), self.s0, s)?;
        Ok(s * j - k)
    }

    /// G(s): closed form for the catalog shortcuts, quadrature otherwise.
    /// Defined on the closure s >= 0 (G extends continuously to 0 because
    /// beta(0) > 0).
    pub fn eval_g(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Precondition(format!("eval_g requires s >= 0, got {s}")));
        }
        match self.eval_g_closed(s) {
            Some(v) => Ok(v),
            None => self.eval_g_quadrature(s),
        }
    }

    // ----- H -----

    /// H(s) by elementary antiderivative where one exists.
    pub fn eval_h_closed(&self, s: f64) -> Option<f64> {
        match &self.kind {
            ModelKind::Semilinear => Some(s),
            ModelKind::PowerDiffusion { q } => {
                // integrand (1+sigma)^q
                if *q == -1.0 {
                    Some(s.ln_1p())
                } else {
                    Some(((*q + 1.0) * s.ln_1p()).exp_m1() / (*q + 1.0))
                }
            }
            ModelKind::RemarkFamily { gamma2, .. } => {
                // integrand (1+sigma)^{-gamma2}, independent of gamma1
                Some(((1.0 - *gamma2) * s.ln_1p()).exp_m1() / (1.0 - *gamma2))
            }
            ModelKind::Custom { .. } => None,
        }
    }

    /// H(s) via adaptive quadrature of phi/beta from 0 (finite at 0 since
    /// beta(0) > 0).
    pub fn eval_h_quadrature(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Precondition(format!("eval_h requires s >= 0, got {s}")));
        }
        quad::integrate(|t| self.phi(t) / self.beta(t), 0.0, s)
    }

    pub fn eval_h(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Precondition(format!("eval_h requires s >= 0, got {s}")));
        }
        match self.eval_h_closed(s) {
            Some(v) => Ok(v),
            None => self.eval_h_quadrature(s),
        }
    }

    // ----- exact asymptotics for the condition checker -----

    /// Growth of G as s -> infinity, for catalog families.
    pub(crate) fn g_growth(&self) -> Option<PowerLog> {
        match &self.kind {
            ModelKind::Semilinear => Some(PowerLog { p: 1.0, lambda: 1.0 }),
            ModelKind::PowerDiffusion { q } => Some(if *q < 0.0 {
                PowerLog { p: 1.0, lambda: 0.0 }
            } else if *q == 0.0 {
                PowerLog { p: 1.0, lambda: 1.0 }
            } else {
                PowerLog { p: q + 1.0, lambda: 0.0 }
            }),
            ModelKind::RemarkFamily { .. } => Some(PowerLog { p: 1.0, lambda: 0.0 }),
            ModelKind::Custom { .. } => None,
        }
    }

    /// Growth of H as s -> infinity, for catalog families.
    pub(crate) fn h_growth(&self) -> Option<PowerLog> {
        match &self.kind {
            ModelKind::Semilinear => Some(PowerLog { p: 1.0, lambda: 0.0 }),
            ModelKind::PowerDiffusion { q } => Some(if *q > -1.0 {
                PowerLog { p: q + 1.0, lambda: 0.0 }
            } else if *q == -1.0 {
                PowerLog { p: 0.0, lambda: 1.0 }
            } else {
                PowerLog { p: 0.0, lambda: 0.0 }
            }),
            ModelKind::RemarkFamily { gamma2, .. } => Some(PowerLog {
                p: 1.0 - gamma2,
                lambda: 0.0,
            }),
            ModelKind::Custom { .. } => None,
        }
    }

    /// Growth of psi/phi as s -> infinity, for catalog families.
    pub(crate) fn psi_over_phi_growth(&self) -> Option<PowerLog> {
        match &self.kind {
            ModelKind::Semilinear => Some(PowerLog { p: 1.0, lambda: 0.0 }),
            ModelKind::PowerDiffusion { q } => Some(PowerLog {
                p: 1.0 - q,
                lambda: 0.0,
            }),
            ModelKind::RemarkFamily { gamma2, .. } => Some(PowerLog {
                p: 1.0 + gamma2,
                lambda: 0.0,
            }),
            ModelKind::Custom { .. } => None,
        }
    }

    /// Growth of beta^2/phi as s -> infinity, for catalog families
    /// (negative `p` means decay; for the decay family p = -gamma1 exactly).
    pub(crate) fn balance_growth(&self) -> Option<PowerLog> {
        match &self.kind {
            ModelKind::Semilinear => Some(PowerLog { p: 0.0, lambda: 0.0 }),
            ModelKind::PowerDiffusion { q } => Some(PowerLog { p: -q, lambda: 0.0 }),
            ModelKind::RemarkFamily { gamma1, .. } => Some(PowerLog {
                p: -gamma1,
                lambda: 0.0,
            }),
            ModelKind::Custom { .. } => None,
        }
    }

    /// Whether beta has a positive limit at infinity (catalog families).
    pub(crate) fn beta_limit_positive(&self) -> Option<bool> {
        match &self.kind {
            ModelKind::Semilinear | ModelKind::PowerDiffusion { .. } => Some(true),
            ModelKind::RemarkFamily { .. } => Some(false),
            ModelKind::Custom { .. } => None,
        }
    }

    /// Natural power-law exponents (l1, l2) with phi >= C1 (1+s)^{l1} and
    /// beta <= C2 (1+s)^{l2}, for catalog families.
    pub fn phibeta_exponents(&self) -> Option<(f64, f64)> {
        match &self.kind {
            ModelKind::Semilinear => Some((0.0, 0.0)),
            ModelKind::PowerDiffusion { q } => Some((*q, 0.0)),
            ModelKind::RemarkFamily { gamma1, gamma2 } => {
                Some((-gamma1 - 2.0 * gamma2, -gamma1 - gamma2))
            }
            ModelKind::Custom { .. } => None,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self.kind, ModelKind::Custom { .. })
    }
}

/// Parse a catalog name as used in config files:
/// `semilinear`, `power_diffusion(q=-1)`, `remark_family(gamma1=3, gamma2=0.5)`.
pub fn parse_model_name(text: &str) -> Result<NonlinearityModel> {
    let text = text.trim();
    if text == "semilinear" {
        return Ok(NonlinearityModel::semilinear());
    }
    let (head, args) = match text.split_once('(') {
        Some((h, rest)) => {
            let rest = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::Config(format!("model `{text}`: missing `)`")))?;
            (h.trim(), rest)
        }
        None => (text, ""),
    };
    let mut kv = std::collections::BTreeMap::new();
    for part in args.split(',').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("model `{text}`: expected key=value, got `{part}`")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("model `{text}`: bad number `{}`", v.trim())))?;
        kv.insert(k.trim().to_owned(), value);
    }
    let take = |kv: &mut std::collections::BTreeMap<String, f64>, key: &str| -> Result<f64> {
        kv.remove(key)
            .ok_or_else(|| Error::Config(format!("model `{text}`: missing argument `{key}`")))
    };
    let model = match head {
        "power_diffusion" => NonlinearityModel::power_diffusion(take(&mut kv, "q")?)?,
        "remark_family" => {
            let g1 = take(&mut kv, "gamma1")?;
            let g2 = take(&mut kv, "gamma2")?;
            NonlinearityModel::remark_family(g1, g2)?
        }
        other => {
            return Err(Error::Config(format!(
                "unknown model `{other}` (expected semilinear, power_diffusion, remark_family)"
            )))
        }
    };
    let model = if let Some(s0) = kv.remove("s0") {
        model.with_s0(s0)?
    } else {
        model
    };
    if let Some(extra) = kv.keys().next() {
        return Err(Error::Config(format!("model `{text}`: unknown argument `{extra}`")));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::E;

    /// Test-only oracle: composite Simpson on the literal double integral,
    /// independent of the reduced single-integral path used by eval_g.
    fn g_double_integral_oracle(model: &NonlinearityModel, s: f64, panels: usize) -> f64 {
        let s0 = model.s0();
        let inner = |sigma: f64| {
            // composite Simpson for int_{s0}^{sigma} h
            let n = 2 * panels;
            let h_step = (sigma - s0) / n as f64;
            let mut acc = model.h(s0) + model.h(sigma);
            for k in 1..n {
                let x = s0 + k as f64 * h_step;
                acc += if k % 2 == 1 { 4.0 } else { 2.0 } * model.h(x);
            }
            acc * h_step / 3.0
        };
        let n = 2 * panels;
        let h_step = (s - s0) / n as f64;
        let mut acc = inner(s0) + inner(s);
        for k in 1..n {
            let x = s0 + k as f64 * h_step;
            acc += if k % 2 == 1 { 4.0 } else { 2.0 } * inner(x);
        }
        acc * h_step / 3.0
    }

    #[test]
    fn semilinear_g_at_e_squared_equals_e() {
        let m = NonlinearityModel::semilinear();
        let s = E * E;
        // closed antiderivative gives s ln s - 2 s + e at s0 = e
        assert_relative_eq!(m.eval_g(s).unwrap(), E, max_relative = 1e-12);
        assert_relative_eq!(m.eval_g_quadrature(s).unwrap(), E, max_relative = 1e-9);
        assert_relative_eq!(g_double_integral_oracle(&m, s, 400), E, max_relative = 1e-9);
    }

    #[test]
    fn g_vanishes_at_s0_for_all_catalog_models() {
        for m in [
            NonlinearityModel::semilinear(),
            NonlinearityModel::power_diffusion(-1.0).unwrap(),
            NonlinearityModel::power_diffusion(-0.7).unwrap(),
            NonlinearityModel::remark_family(3.0, 0.5).unwrap(),
            NonlinearityModel::remark_family(2.5, 0.3).unwrap(),
        ] {
            let g = m.eval_g(m.s0()).unwrap();
            assert!(g.abs() < 1e-12, "{}: G(s0) = {g}", m.name());
        }
    }

    #[test]
    fn frozen_oracle_values() {
        // Frozen from the double-integral composite-Simpson oracle.
        let m = NonlinearityModel::remark_family(3.0, 0.5).unwrap();
        let frozen = 2.48803115396885;
        assert_relative_eq!(m.eval_g(10.0).unwrap(), frozen, max_relative = 1e-10);
        assert_relative_eq!(m.eval_g_quadrature(10.0).unwrap(), frozen, max_relative = 1e-9);
        assert_relative_eq!(
            g_double_integral_oracle(&m, 10.0, 300),
            frozen,
            max_relative = 1e-9
        );

        let p = NonlinearityModel::power_diffusion(-1.0).unwrap();
        let frozen_p = 1.09488149185883;
        assert_relative_eq!(p.eval_g(10.0).unwrap(), frozen_p, max_relative = 1e-10);
        assert_relative_eq!(
            g_double_integral_oracle(&p, 10.0, 300),
            frozen_p,
            max_relative = 1e-9
        );
    }

    #[test]
    fn g_remark_independent_of_gamma1() {
        // h = (1+tau)^{-gamma2}/tau does not involve gamma1.
        let a = NonlinearityModel::remark_family(2.5, 0.5).unwrap();
        let b = NonlinearityModel::remark_family(7.0, 0.5).unwrap();
        for s in [0.5, 3.0, 50.0] {
            assert_relative_eq!(
                a.eval_g(s).unwrap(),
                b.eval_g(s).unwrap(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn h_trivial_and_derived_values() {
        let semi = NonlinearityModel::semilinear();
        assert_eq!(semi.eval_h(0.0).unwrap(), 0.0);
        assert_relative_eq!(semi.eval_h(5.0).unwrap(), 5.0, max_relative = 1e-14);

        // H for the decay family with gamma2 = 1/2 is 2(sqrt(1+s) - 1),
        // independent of gamma1.
        for g1 in [2.5, 3.0, 7.0] {
            let m = NonlinearityModel::remark_family(g1, 0.5).unwrap();
            assert_relative_eq!(m.eval_h(3.0).unwrap(), 2.0, max_relative = 1e-12);
            assert_relative_eq!(
                m.eval_h_quadrature(3.0).unwrap(),
                2.0,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn g_has_zero_slope_at_s0() {
        for m in [
            NonlinearityModel::semilinear(),
            NonlinearityModel::power_diffusion(-1.0).unwrap(),
            NonlinearityModel::remark_family(3.0, 0.5).unwrap(),
        ] {
            let s0 = m.s0();
            let h = 1e-5 * s0;
            let d = (m.eval_g(s0 + h).unwrap() - m.eval_g(s0 - h).unwrap()) / (2.0 * h);
            assert!(d.abs() < 1e-6, "{}: G'(s0) = {d}", m.name());
        }
    }

    #[test]
    fn g_nonnegative_and_convex_h_monotone() {
        let models = [
            NonlinearityModel::semilinear(),
            NonlinearityModel::power_diffusion(-1.3).unwrap(),
            NonlinearityModel::remark_family(3.0, 0.5).unwrap(),
        ];
        for m in models {
            let lo: f64 = 0.05;
            let hi: f64 = 1e6;
            let n = 60;
            let pts: Vec<f64> = (0..n)
                .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
                .collect();
            let g: Vec<f64> = pts.iter().map(|&s| m.eval_g(s).unwrap()).collect();
            let h: Vec<f64> = pts.iter().map(|&s| m.eval_h(s).unwrap()).collect();
            for (k, &s) in pts.iter().enumerate() {
                assert!(g[k] >= -1e-12, "{}: G({s}) = {}", m.name(), g[k]);
                if k > 0 {
                    assert!(
                        h[k] >= h[k - 1] - 1e-12 * h[k].abs().max(1.0),
                        "{}: H not monotone at {s}",
                        m.name()
                    );
                }
            }
            // Convexity on a uniform grid where G'' = phi/psi > 0.
            let step = 0.5;
            for k in 1..200 {
                let s = 0.5 + k as f64 * step;
                let d2 = m.eval_g(s + step).unwrap() - 2.0 * m.eval_g(s).unwrap()
                    + m.eval_g(s - step).unwrap();
                assert!(d2 >= -1e-12, "{}: second difference {d2} at {s}", m.name());
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature_on_catalog() {
        let models = [
            NonlinearityModel::semilinear(),
            NonlinearityModel::power_diffusion(-1.0).unwrap(),
            NonlinearityModel::remark_family(3.0, 0.5).unwrap(),
        ];
        for m in models {
            let s0 = m.s0();
            for k in 0..100 {
                let s = s0 * (1e6 / s0).powf(k as f64 / 99.0);
                let gc = m.eval_g_closed(s).unwrap();
                let gq = m.eval_g_quadrature(s).unwrap();
                assert_relative_eq!(gc, gq, max_relative = 1e-8, epsilon = 1e-10);
                let hc = m.eval_h_closed(s).unwrap();
                let hq = m.eval_h_quadrature(s).unwrap();
                assert_relative_eq!(hc, hq, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn remark_balance_identity_is_exact() {
        let m = NonlinearityModel::remark_family(3.0, 0.5).unwrap();
        let mut s = 0.0;
        while s <= 1e12 {
            let lhs = m.beta(s) * m.beta(s) / m.phi(s);
            let rhs = (1.0 + s).powf(-3.0);
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
            s = if s == 0.0 { 1e-3 } else { s * 10.0 };
        }
    }

    #[test]
    fn psi_is_s_times_beta() {
        let m = NonlinearityModel::remark_family(2.5, 0.25).unwrap();
        for s in [0.0, 0.1, 1.0, 42.0, 1e9] {
            assert_eq!(m.psi(s), s * m.beta(s));
        }
    }

    #[test]
    fn custom_model_requires_positive_beta() {
        let phi: ScalarFn = Arc::new(|_s| 1.0);
        let beta: ScalarFn = Arc::new(|s: f64| 1.0 - s); // negative for s > 1
        assert!(NonlinearityModel::custom(phi, beta).is_err());
    }

    #[test]
    fn parse_model_names() {
        assert!(matches!(
            parse_model_name("semilinear").unwrap().kind(),
            ModelKind::Semilinear
        ));
        let p = parse_model_name("power_diffusion(q=-1)").unwrap();
        assert!(matches!(p.kind(), ModelKind::PowerDiffusion { q } if *q == -1.0));
        let r = parse_model_name("remark_family(gamma1=3, gamma2=0.5)").unwrap();
        assert!(
            matches!(r.kind(), ModelKind::RemarkFamily { gamma1, gamma2 } if *gamma1 == 3.0 && *gamma2 == 0.5)
        );
        assert!(parse_model_name("power_diffusion(q=oops)").is_err());
        assert!(parse_model_name("exotic(q=1)").is_err());
        assert!(parse_model_name("remark_family(gamma1=3)").is_err());
    }

    proptest! {
        #[test]
        fn power_family_g_properties(q in -3.0f64..-0.25, s in 0.2f64..1e4) {
            let m = NonlinearityModel::power_diffusion(q).unwrap();
            let g = m.eval_g(s).unwrap();
            prop_assert!(g >= -1e-12);
            // spot agreement between quadrature and (for q=-1) closed form
            let dq = m.eval_g_quadrature(s).unwrap();
            prop_assert!((g - dq).abs() <= 1e-7 * (1.0 + g.abs()));
        }

        #[test]
        fn h_is_monotone_for_remark(gamma1 in 2.1f64..6.0, gamma2 in 0.05f64..0.95,
                                    s in 0.1f64..1e5) {
            let m = NonlinearityModel::remark_family(gamma1, gamma2).unwrap();
            let h1 = m.eval_h(s).unwrap();
            let h2 = m.eval_h(s * 1.5).unwrap();
            prop_assert!(h2 >= h1 - 1e-12 * h1.abs().max(1.0));
        }
    }
}
