//! Mixture approximations of the composite SNR density.
//!
//! * [`mg`]: mixture gamma models synthesised from the channel through a
//!   Gauss–Laguerre discretisation of the shadowing integral.
//! * [`mog`]: mixture of Gaussians on the normalised envelope `√(γ/γ̄)`,
//!   fitted by expectation–maximisation on Monte Carlo draws.
//! * [`order`]: picking the smallest component count that meets an MSE gate.

pub mod mg;
pub mod mog;
pub mod order;

use serde::{Deserialize, Serialize};

use crate::error::{argument, input, Result};

pub use mg::{fit_mg, mg_pdf, MgModel, MgTerm};
pub use mog::{
    fit_mog, fit_mog_data, mog_pdf, MogComponent, MogData, MogFit, MogFitOptions, MogModel,
};
pub use order::{select_order, Family, OrderSelection, SelectOptions};

/// Either fitted model, in the tagged JSON form
/// `{"type":"mg",...}` / `{"type":"mog",...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum MixtureModel {
    Mg(MgModel),
    Mog(MogModel),
}

impl MixtureModel {
    pub fn pdf(&self, gamma: f64) -> Result<f64> {
        match self {
            MixtureModel::Mg(m) => m.pdf(gamma),
            MixtureModel::Mog(m) => m.pdf(gamma),
        }
    }

    pub fn order(&self) -> usize {
        match self {
            MixtureModel::Mg(m) => m.terms.len(),
            MixtureModel::Mog(m) => m.comps.len(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)
            .map_err(|e| input("MixtureModel::from_json", e.to_string()))?;
        match &m {
            MixtureModel::Mg(mg) => mg.validate()?,
            MixtureModel::Mog(mog) => mog.validate()?,
        }
        Ok(m)
    }
}

/// Number of points in the canonical MSE grid.
pub const CANONICAL_POINTS: usize = 200;

/// 200 log-spaced points on `γ/γ̄ ∈ [10⁻³, 10²]`.
pub fn canonical_grid(gamma_bar: f64) -> Vec<f64> {
    (0..CANONICAL_POINTS)
        .map(|k| gamma_bar * 10f64.powf(-3.0 + 5.0 * k as f64 / (CANONICAL_POINTS - 1) as f64))
        .collect()
}

/// `(1/|grid|) Σ (approx(γ) − exact(γ))²`.
pub fn pdf_mse<A, E>(approx: A, exact: E, grid: &[f64]) -> Result<f64>
where
    A: Fn(f64) -> f64,
    E: Fn(f64) -> f64,
{
    if grid.is_empty() {
        return Err(argument("pdf_mse", "grid is empty"));
    }
    Ok(grid
        .iter()
        .map(|&g| (approx(g) - exact(g)).powi(2))
        .sum::<f64>()
        / grid.len() as f64)
}

/// MSE on the canonical grid between densities normalised to unit mean SNR,
/// i.e. between `γ̄·f(γ̄t)` over the `t` grid. The result does not depend on
/// the channel's absolute SNR scale.
pub fn canonical_mse(approx: &[f64], exact: &[f64], gamma_bar: f64) -> f64 {
    debug_assert_eq!(approx.len(), exact.len());
    approx
        .iter()
        .zip(exact)
        .map(|(a, e)| (gamma_bar * (a - e)).powi(2))
        .sum::<f64>()
        / approx.len() as f64
}
