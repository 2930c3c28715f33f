//! Smallest mixture order meeting an MSE target on the canonical grid.

use serde::{Deserialize, Serialize};

use crate::channels::{mean_snr, sample_composite, ChannelParams, CompositeDensity};
use crate::error::{argument, Error, Result};
use crate::mixfit::mg::fit_mg;
use crate::mixfit::mog::{fit_mog_data, MogData, MogFitOptions};
use crate::mixfit::{canonical_grid, canonical_mse, MixtureModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Mg,
    Mog,
}

impl Family {
    pub fn max_order(self) -> usize {
        match self {
            Family::Mg => 50,
            Family::Mog => 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectOptions {
    /// Monte Carlo draws the MoG family is fitted to.
    pub mog_samples: usize,
    pub mog: MogFitOptions,
    /// Upper end of the search; defaults to the family maximum when `None`.
    pub max_order: Option<usize>,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            mog_samples: 1_000_000,
            mog: MogFitOptions::default(),
            max_order: None,
        }
    }
}

/// Result of an order search. When no order meets the target,
/// `met_target` is false and `model` is the lowest-MSE model seen.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSelection {
    pub family: Family,
    pub order: usize,
    pub mse: f64,
    pub met_target: bool,
    pub model: MixtureModel,
    /// `(order, mse)` for every order tried, in search order.
    pub trace: Vec<(usize, f64)>,
}

/// Exact density of `params` sampled on its canonical grid.
pub fn exact_on_canonical_grid(params: &ChannelParams) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let gamma_bar = mean_snr(params)?;
    let grid = canonical_grid(gamma_bar);
    let density = CompositeDensity::new(params)?;
    let exact = grid
        .iter()
        .map(|&g| density.pdf(g))
        .collect::<Result<Vec<_>>>()?;
    Ok((gamma_bar, grid, exact))
}

/// Searches orders `1..=max` in increasing order and stops at the first one
/// whose canonical-grid MSE is at most `mse_target`.
pub fn select_order(
    params: &ChannelParams,
    family: Family,
    mse_target: f64,
    opts: &SelectOptions,
) -> Result<OrderSelection> {
    if !(mse_target > 0.0) {
        return Err(argument(
            "select_order",
            format!("mse target {mse_target} must be positive"),
        ));
    }
    let max = opts
        .max_order
        .unwrap_or(family.max_order())
        .min(family.max_order());
    if max == 0 {
        return Err(argument("select_order", "maximum order must be at least 1"));
    }
    let (gamma_bar, grid, exact) = exact_on_canonical_grid(params)?;

    let data = match family {
        Family::Mog => Some(MogData::from_samples(
            &sample_composite(params, opts.mog_samples, opts.mog.seed)?,
            opts.mog.bins,
        )?),
        Family::Mg => None,
    };

    let mut trace = Vec::new();
    let mut best: Option<(usize, f64, MixtureModel)> = None;
    for order in 1..=max {
        let model = match family {
            Family::Mg => MixtureModel::Mg(fit_mg(params, order)?),
            Family::Mog => {
                let data = data.as_ref().expect("MoG data prepared");
                match fit_mog_data(data, order, &opts.mog) {
                    Ok(fit) => MixtureModel::Mog(fit.model),
                    Err(Error::Fit(_)) => {
                        trace.push((order, f64::INFINITY));
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
        };
        let approx = grid
            .iter()
            .map(|&g| model.pdf(g))
            .collect::<Result<Vec<_>>>()?;
        let mse = canonical_mse(&approx, &exact, gamma_bar);
        trace.push((order, mse));
        if mse <= mse_target {
            return Ok(OrderSelection {
                family,
                order,
                mse,
                met_target: true,
                model,
                trace,
            });
        }
        if best.as_ref().is_none_or(|b| mse < b.1) {
            best = Some((order, mse, model));
        }
    }
    let (order, mse, model) = best
        .ok_or_else(|| Error::Fit(format!("no {family:?} fit succeeded for orders 1..={max}")))?;
    Ok(OrderSelection {
        family,
        order,
        mse,
        met_target: false,
        model,
        trace,
    })
}
