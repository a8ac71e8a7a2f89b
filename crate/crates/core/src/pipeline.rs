//! Certificate → `(ω_ε, η_ε)` → abstract game → uniform-value estimate.

use serde::Serialize;

use crate::abstraction::{build_abstract_with, AbstractStats, StateMerge};
use crate::error::{Error, Result};
use crate::game::GameSpec;
use crate::scalar::{ceil_tol, Scalar};
use crate::solver::{uniform_value_estimate, UniformEstimate, UniformOptions};
use crate::structure::{derive_certificate, CertificateOptions, DoeblinCertificate};

/// `ω_ε` and `η_ε`. Stored as floats because for realistic certificates they
/// exceed every integer type; both are exact integers when finite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlgorithmParameters {
    pub omega_eps: f64,
    pub eta_eps: f64,
}

impl AlgorithmParameters {
    /// `η_ε` as a usable grid size, if it fits.
    pub fn eta_usize(&self) -> Option<usize> {
        (self.eta_eps.is_finite() && self.eta_eps <= usize::MAX as f64).then_some(self.eta_eps as usize)
    }
}

/// `ω = ⌈max(ln ε / ln(1 − δ²), |K|²/m)⌉`, `η = ω · m · ⌈1/ε⌉²`. With `δ = 1`
/// the logarithm is undefined and `ω = ⌈|K|²/m⌉`.
pub fn compute_parameters(eps: f64, m_eps: u64, delta_eps: f64, k_count: usize) -> Result<AlgorithmParameters> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1)")));
    }
    if m_eps == 0 || !(delta_eps > 0.0 && delta_eps <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need m_eps >= 1 and delta_eps in (0, 1], got ({m_eps}, {delta_eps})"
        )));
    }
    let m = m_eps as f64;
    let states_term = (k_count * k_count) as f64 / m;
    let omega = if delta_eps >= 1.0 {
        ceil_tol(states_term)
    } else {
        let log_term = eps.ln() / (-delta_eps * delta_eps).ln_1p();
        ceil_tol(log_term.max(states_term))
    };
    let inv = ceil_tol(1.0 / eps);
    Ok(AlgorithmParameters {
        omega_eps: omega,
        eta_eps: omega * m * inv * inv,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineCaps {
    pub state_cap: usize,
    pub enum_cap: usize,
    pub merge: StateMerge,
}

impl Default for PipelineCaps {
    fn default() -> Self {
        Self {
            state_cap: 200_000,
            enum_cap: 1_000_000,
            merge: StateMerge::Belief,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub epsilon: f64,
    pub certificate: Option<DoeblinCertificate>,
    /// Why no certificate is present, when it is not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_error: Option<String>,
    pub parameters: Option<AlgorithmParameters>,
    pub eta_used: usize,
    pub eta_overridden: bool,
    pub state_merge: StateMerge,
    pub abstract_stats: AbstractStats,
    pub value: f64,
    pub diagnostics: UniformEstimate,
    pub caps_hit: Vec<String>,
    /// `Some(ε + tol)` only for a certified run at the full `η_ε`.
    pub error_bound: Option<f64>,
    pub guarantee: String,
}

/// Approximates the uniform value of `spec` from its initial belief.
///
/// A supplied certificate wins; otherwise one is derived (primitive first,
/// ergodic second). With `eta_override` the run proceeds even without a
/// certificate, and the report drops the error bound.
pub fn approximate_uniform_value<T: Scalar>(
    spec: &GameSpec<T>,
    eps: f64,
    certificate: Option<DoeblinCertificate>,
    caps: &PipelineCaps,
    eta_override: Option<usize>,
    solver: &UniformOptions,
) -> Result<PipelineReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon {eps} outside (0, 1)")));
    }
    let mut caps_hit = Vec::new();
    let (certificate, certificate_error) = match certificate {
        Some(c) => {
            c.check()?;
            (Some(c), None)
        }
        None => {
            let opts = CertificateOptions {
                enum_cap: caps.enum_cap,
                exact_mu: false,
            };
            match derive_certificate(spec, eps, &opts) {
                Ok(c) => (Some(c), None),
                Err(e) if eta_override.is_some() => {
                    if matches!(e, Error::CapExceeded { .. }) {
                        caps_hit.push("certificate".to_string());
                    }
                    (None, Some(e.to_string()))
                }
                Err(e @ Error::CapExceeded { .. }) => return Err(e),
                Err(_) => return Err(Error::NoCertificate),
            }
        }
    };
    let parameters = certificate
        .as_ref()
        .map(|c| compute_parameters(eps, c.m_eps, c.delta_eps, spec.num_states()))
        .transpose()?;
    let eta = match (eta_override, parameters) {
        (Some(h), _) => h,
        (None, Some(p)) => p.eta_usize().ok_or(Error::CapExceeded {
            what: "eta_eps",
            cap: caps.state_cap,
        })?,
        (None, None) => return Err(Error::NoCertificate),
    };
    let ag = build_abstract_with(spec, spec.initial_belief(), eta, caps.state_cap, caps.merge)?;
    let diagnostics = uniform_value_estimate(&ag.game, solver)?;
    let overridden = eta_override.is_some();
    let (error_bound, guarantee) = match (&certificate, overridden) {
        (Some(_), false) => (
            Some(eps + solver.tol),
            format!("|value - v| <= epsilon + tol = {}", eps + solver.tol),
        ),
        (Some(_), true) => (
            None,
            format!("eta overridden to {eta}: no error bound (certified eta_eps is larger)"),
        ),
        (None, _) => (None, format!("no Doeblin certificate; eta overridden to {eta}: no error bound")),
    };
    Ok(PipelineReport {
        epsilon: eps,
        certificate,
        certificate_error,
        parameters,
        eta_used: eta,
        eta_overridden: overridden,
        state_merge: caps.merge,
        abstract_stats: ag.stats(),
        value: diagnostics.value,
        diagnostics,
        caps_hit,
        error_bound,
        guarantee,
    })
}
