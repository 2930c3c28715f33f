//! Composite α-η-μ/gamma fading: parameters, exact SNR density, moments and
//! a Monte Carlo sampler.
//!
//! The small-scale factor `W` is a unit-scale α-η-μ variate: `W = P^{2/α}`
//! where `P` is an η-μ power with unit mean. The shadowing factor is
//! `x ~ Gamma(shape b, scale Ω)` and the instantaneous SNR is `γ = x·W`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, input, numerical, Result};
use crate::quad;
use crate::specfun::ln_bessel_i_ratio_scaled;

/// How `η` relates the in-phase and quadrature scattered components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaFormat {
    /// `η ∈ (0, ∞)` is the power ratio between the components.
    Format1,
    /// `η ∈ (-1, 1)` is their correlation coefficient.
    Format2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Non-linearity parameter.
    pub alpha: f64,
    pub eta: f64,
    /// Number of multipath clusters (real-valued).
    pub mu: f64,
    /// Shadowing shape index.
    pub b: f64,
    /// Shadowing scale; the shadowing mean is `b·omega`.
    pub omega: f64,
    pub format: EtaFormat,
}

impl ChannelParams {
    pub fn new(
        alpha: f64,
        eta: f64,
        mu: f64,
        b: f64,
        omega: f64,
        format: EtaFormat,
    ) -> Result<Self> {
        let p = Self {
            alpha,
            eta,
            mu,
            b,
            omega,
            format,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("mu", self.mu),
            ("b", self.b),
            ("omega", self.omega),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(domain(
                    "ChannelParams",
                    format!("{name} = {v} must be positive and finite"),
                ));
            }
        }
        format_constants_for(self.eta, self.format).map(|_| ())
    }

    /// Parses and validates the JSON object form.
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)
            .map_err(|e| input("ChannelParams::from_json", e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("channel parameters serialize")
    }

    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        self
    }
}

/// The `h` and `H` constants of the η-μ density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormatConstants {
    pub h: f64,
    pub cap_h: f64,
}

pub fn format_constants(params: &ChannelParams) -> Result<FormatConstants> {
    format_constants_for(params.eta, params.format)
}

/// Format 1 with `η > 1` is folded onto `1/η`; the density is invariant and
/// only the sign of `H` changes.
pub fn format_constants_for(eta: f64, format: EtaFormat) -> Result<FormatConstants> {
    match format {
        EtaFormat::Format1 => {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(domain(
                    "format_constants",
                    format!("format1 eta = {eta} must lie in (0, inf)"),
                ));
            }
            let e = if eta > 1.0 { 1.0 / eta } else { eta };
            Ok(FormatConstants {
                h: (2.0 + 1.0 / e + e) / 4.0,
                cap_h: (1.0 / e - e) / 4.0,
            })
        }
        EtaFormat::Format2 => {
            if !(eta > -1.0 && eta < 1.0) {
                return Err(domain(
                    "format_constants",
                    format!("format2 eta = {eta} must lie in (-1, 1)"),
                ));
            }
            if eta < 0.0 {
                return Err(domain(
                    "format_constants",
                    format!("format2 eta = {eta} < 0 gives negative H, which is not supported"),
                ));
            }
            let d = 1.0 - eta * eta;
            Ok(FormatConstants {
                h: 1.0 / d,
                cap_h: eta / d,
            })
        }
    }
}

/// Unit-scale α-η-μ density with its constants precomputed.
#[derive(Debug, Clone, Copy)]
pub struct AemDensity {
    alpha: f64,
    mu: f64,
    nu: f64,
    h: f64,
    cap_h: f64,
    ln_norm: f64,
}

impl AemDensity {
    pub fn new(alpha: f64, eta: f64, mu: f64, format: EtaFormat) -> Result<Self> {
        if !(alpha > 0.0) || !(mu > 0.0) {
            return Err(domain(
                "unit_aem_pdf",
                format!("alpha = {alpha} and mu = {mu} must be positive"),
            ));
        }
        let FormatConstants { h, cap_h } = format_constants_for(eta, format)?;
        let nu = mu - 0.5;
        let ln_norm = 0.5 * PI.ln() + alpha.ln() + mu * h.ln() + (mu + 0.5) * mu.ln()
            - libm::lgamma(mu)
            + nu * (2.0 * mu).ln();
        Ok(Self {
            alpha,
            mu,
            nu,
            h,
            cap_h,
            ln_norm,
        })
    }

    pub fn from_params(params: &ChannelParams) -> Result<Self> {
        Self::new(params.alpha, params.eta, params.mu, params.format)
    }

    /// `ln(f_W(e^v)·e^v)`: the log-density of `ln W` at `v`.
    ///
    /// `H^{-(μ-1/2)} I_{μ-1/2}(2μH p)` is carried as the entire function
    /// `y^{-ν} I_ν(y)`, so `H = 0` needs no special case.
    pub fn ln_density_of_log(&self, v: f64) -> f64 {
        let p = (0.5 * self.alpha * v).exp();
        if p.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let y = 2.0 * self.mu * self.cap_h * p;
        self.ln_norm + self.alpha * self.mu * v - 2.0 * self.mu * (self.h - self.cap_h) * p
            + ln_bessel_i_ratio_scaled(self.nu, y)
    }

    pub fn ln_pdf(&self, w: f64) -> f64 {
        let v = w.ln();
        self.ln_density_of_log(v) - v
    }

    pub fn pdf(&self, w: f64) -> f64 {
        self.ln_pdf(w).exp()
    }

    /// `E[W^k]` by quadrature in `ln w`.
    pub fn moment(&self, k: f64) -> Result<f64> {
        // Mode of ln P is near 0 for the unit-mean η-μ power.
        let span = 2.0 / self.alpha;
        let r = quad::peaked_log_within(
            |v| k * v + self.ln_density_of_log(v),
            (-12.0 * span, 6.0 * span),
            (-2000.0 * span, 400.0 * span),
            1e-11,
        )?;
        Ok(r.value())
    }
}

/// Unit-scale α-η-μ SNR density `f_W(w)`.
pub fn unit_aem_pdf(w: f64, alpha: f64, eta: f64, mu: f64, format: EtaFormat) -> Result<f64> {
    if !(w > 0.0) {
        return Err(domain("unit_aem_pdf", format!("w = {w} must be positive")));
    }
    Ok(AemDensity::new(alpha, eta, mu, format)?.pdf(w))
}

/// `E[W]` of the unit-scale α-η-μ factor.
pub fn unit_aem_mean(alpha: f64, eta: f64, mu: f64, format: EtaFormat) -> Result<f64> {
    AemDensity::new(alpha, eta, mu, format)?.moment(1.0)
}

/// Exact composite SNR density, evaluated by quadrature over the shadowing variable.
#[derive(Debug, Clone, Copy)]
pub struct CompositeDensity {
    kernel: AemDensity,
    b: f64,
    omega: f64,
    ln_omega: f64,
    ln_gamma_norm: f64,
}

impl CompositeDensity {
    pub fn new(params: &ChannelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kernel: AemDensity::from_params(params)?,
            b: params.b,
            omega: params.omega,
            ln_omega: params.omega.ln(),
            ln_gamma_norm: -libm::lgamma(params.b) - params.b * params.omega.ln(),
        })
    }

    /// `f_γ(γ)` for `γ > 0`.
    pub fn pdf(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(domain(
                "composite_pdf",
                format!("gamma = {gamma} must be positive and finite"),
            ));
        }
        let ln_g = gamma.ln();
        // Integrand in u = ln x: shadowing log-density times the log-density
        // of ln W at ln γ - u, over γ.
        let log_f = |u: f64| {
            self.b * u - (u - self.ln_omega).exp()
                + self.ln_gamma_norm
                + self.kernel.ln_density_of_log(ln_g - u)
                - ln_g
        };
        let centre = (self.b * self.omega).ln();
        let scan = (centre.min(ln_g) - 4.0, centre.max(ln_g) + 4.0);
        let limits = (scan.0 - 400.0, scan.1 + 60.0);
        let r = quad::peaked_log_within(log_f, scan, limits, 1e-10).map_err(|e| {
            numerical(
                "composite_pdf",
                format!("shadowing integral failed at gamma = {gamma}: {e}"),
            )
        })?;
        Ok(r.value())
    }
}

/// Exact composite α-η-μ/gamma SNR density at `gamma`.
pub fn composite_pdf(gamma: f64, params: &ChannelParams) -> Result<f64> {
    CompositeDensity::new(params)?.pdf(gamma)
}

/// Mean SNR `b·Ω·E[W]`.
pub fn mean_snr(params: &ChannelParams) -> Result<f64> {
    params.validate()?;
    Ok(params.b * params.omega * AemDensity::from_params(params)?.moment(1.0)?)
}

/// Returns `params` with `omega` rescaled so that the mean SNR equals `target`.
pub fn scale_to_mean(params: &ChannelParams, target_mean_snr: f64) -> Result<ChannelParams> {
    if !(target_mean_snr > 0.0) || !target_mean_snr.is_finite() {
        return Err(domain(
            "scale_to_mean",
            format!("target {target_mean_snr} must be positive"),
        ));
    }
    let ew = AemDensity::from_params(params)?.moment(1.0)?;
    Ok(params.with_omega(target_mean_snr / (params.b * ew)))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Seeded Monte Carlo generator of composite SNR draws.
///
/// The η-μ power is a sum of two independent gamma variates of shape `μ`
/// with scales `1/(2μ(h∓H))`, which holds for every real `μ > 0`.
#[derive(Debug, Clone)]
pub struct CompositeSampler {
    rng: ChaCha8Rng,
    shadowing: Gamma<f64>,
    weak: Gamma<f64>,
    strong: Gamma<f64>,
    exponent: f64,
}

impl CompositeSampler {
    pub fn new(params: &ChannelParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let FormatConstants { h, cap_h } = format_constants(params)?;
        let mu = params.mu;
        let gamma = |shape: f64, scale: f64| {
            Gamma::new(shape, scale).map_err(|e| domain("sample_composite", e.to_string()))
        };
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            shadowing: gamma(params.b, params.omega)?,
            weak: gamma(mu, 1.0 / (2.0 * mu * (h - cap_h)))?,
            strong: gamma(mu, 1.0 / (2.0 * mu * (h + cap_h)))?,
            exponent: 2.0 / params.alpha,
        })
    }

    pub fn sample(&mut self) -> f64 {
        let p = self.weak.sample(&mut self.rng) + self.strong.sample(&mut self.rng);
        self.shadowing.sample(&mut self.rng) * p.powf(self.exponent)
    }

    pub fn samples(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample()).collect()
    }
}

/// `n` independent composite SNR draws, deterministic in `seed`.
pub fn sample_composite(params: &ChannelParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(crate::error::argument(
            "sample_composite",
            "sample count must be at least 1",
        ));
    }
    Ok(CompositeSampler::new(params, seed)?.samples(n))
}
