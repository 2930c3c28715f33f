//! Mixture gamma models: `f(γ) = Σ φ_l γ^{ϑ_l−1} e^{−ξ_l γ}`.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::channels::{format_constants, ChannelParams};
use crate::error::{argument, domain, input, numerical, Result};
use crate::specfun::{gauss_laguerre, ln_bessel_i_ratio_scaled};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgTerm {
    pub phi: f64,
    pub vartheta: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MgModel {
    pub terms: Vec<MgTerm>,
}

impl MgModel {
    pub fn new(terms: Vec<MgTerm>) -> Result<Self> {
        let m = Self { terms };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(input("MgModel", "model has no terms"));
        }
        for (i, t) in self.terms.iter().enumerate() {
            if !(t.phi > 0.0 && t.vartheta > 0.0 && t.xi > 0.0)
                || !(t.phi * t.vartheta * t.xi).is_finite()
            {
                return Err(input(
                    "MgModel",
                    format!("term {i} has non-positive or non-finite parameters: {t:?}"),
                ));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.terms.len()
    }

    /// `∫ γ^k f(γ) dγ = Σ φ_l Γ(ϑ_l+k) ξ_l^{−(ϑ_l+k)}`.
    pub fn moment(&self, k: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                (t.phi.ln() + libm::lgamma(t.vartheta + k) - (t.vartheta + k) * t.xi.ln()).exp()
            })
            .sum()
    }

    /// Total probability; 1 for a normalised model.
    pub fn total_mass(&self) -> f64 {
        self.moment(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0)
    }

    /// Evaluates the mixture term by term in log space.
    pub fn pdf(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0) {
            return Err(domain(
                "mg_pdf",
                format!("gamma = {gamma} must be positive"),
            ));
        }
        let lg = gamma.ln();
        Ok(self
            .terms
            .iter()
            .map(|t| (t.phi.ln() + (t.vartheta - 1.0) * lg - t.xi * gamma).exp())
            .sum())
    }

    /// The model of `c·γ`: `ξ → ξ/c`, `φ → φ·c^{−ϑ}`.
    pub fn rescaled(&self, c: f64) -> MgModel {
        MgModel {
            terms: self
                .terms
                .iter()
                .map(|t| MgTerm {
                    phi: t.phi * c.powf(-t.vartheta),
                    vartheta: t.vartheta,
                    xi: t.xi / c,
                })
                .collect(),
        }
    }
}

pub fn mg_pdf(model: &MgModel, gamma: f64) -> Result<f64> {
    model.pdf(gamma)
}

/// Mixture gamma model of the composite channel from an `s`-point
/// Gauss–Laguerre rule.
///
/// Substituting `z = 2μh (γ/x)^{α/2}` into the shadowing integral gives
/// `f(γ) = γ^{b−1} ∫ e^{−z} g(z) e^{−ξ(z)γ} dz` with
/// `ξ(z) = (2μh)^{2/α} / (Ω z^{2/α})`; each node becomes one gamma term with
/// `ϑ = b`. Weights are renormalised so the model has unit mass exactly.
pub fn fit_mg(params: &ChannelParams, s: usize) -> Result<MgModel> {
    if s == 0 {
        return Err(argument("fit_mg", "order must be at least 1"));
    }
    params.validate()?;
    let consts = format_constants(params)?;
    let rule = gauss_laguerre(s)?;
    let (alpha, mu, b, omega) = (params.alpha, params.mu, params.b, params.omega);
    let (h, cap_h) = (consts.h, consts.cap_h);
    let nu = mu - 0.5;
    let two_b = 2.0 * b / alpha;

    // Common prefactor of θ_l (the H^{−ν} factor is folded into the Bessel ratio below).
    let ln_pref =
        0.5 * PI.ln() + (two_b - mu + 0.5) * LN_2 + two_b * mu.ln() + (two_b - 0.5) * h.ln()
            - libm::lgamma(mu)
            - libm::lgamma(b)
            - b * omega.ln();
    let ln_xi_base = (2.0 / alpha) * (2.0 * mu * h).ln() - omega.ln();
    let ln_gamma_b = libm::lgamma(b);

    let mut ln_theta = Vec::with_capacity(s);
    let mut ln_xi = Vec::with_capacity(s);
    for (&z, &lw) in rule.nodes.iter().zip(&rule.log_weights) {
        let lz = z.ln();
        // H^{−ν} I_ν((H/h) z) = (z/h)^ν · e^{y} · [e^{−y} y^{−ν} I_ν(y)],  y = (H/h) z.
        let y = cap_h / h * z;
        let ln_bessel = nu * (lz - h.ln()) + y + ln_bessel_i_ratio_scaled(nu, y);
        ln_theta.push(ln_pref + lw + (mu - two_b - 0.5) * lz + ln_bessel);
        ln_xi.push(ln_xi_base - (2.0 / alpha) * lz);
    }

    let ln_mass: Vec<f64> = ln_theta
        .iter()
        .zip(&ln_xi)
        .map(|(lt, lx)| lt + ln_gamma_b - b * lx)
        .collect();
    let peak = ln_mass.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !peak.is_finite() {
        return Err(numerical(
            "fit_mg",
            format!("component masses are not finite (peak {peak})"),
        ));
    }
    let ln_total = peak + ln_mass.iter().map(|m| (m - peak).exp()).sum::<f64>().ln();

    let terms: Vec<MgTerm> = ln_theta
        .iter()
        .zip(&ln_xi)
        .map(|(lt, lx)| MgTerm {
            phi: (lt - ln_total).exp(),
            vartheta: b,
            xi: lx.exp(),
        })
        // Terms whose weight underflows carry no probability mass.
        .filter(|t| t.phi > 0.0 && t.xi.is_finite() && t.xi > 0.0)
        .collect();
    if terms.is_empty() {
        return Err(numerical("fit_mg", "every component underflowed"));
    }
    Ok(MgModel { terms })
}
