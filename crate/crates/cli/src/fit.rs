use std::time::Instant;

use anyhow::Result;
use effcap::mixfit::{select_order, Family};
use effcap::ChannelParams;

use crate::format::sig;
use crate::input::{check_mse_target, select_options};
use crate::{Outcome, Output};

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub channel: ChannelParams,
    pub family: Family,
    pub mse_target: f64,
    pub seed: u64,
    pub mog_samples: Option<usize>,
    pub max_order: Option<usize>,
}

/// Selects the order, fits the model and returns its JSON with a short
/// text report. An unreachable target yields the best model seen and
/// [`Outcome::Degraded`].
pub fn run(args: &FitArgs) -> Result<Output> {
    check_mse_target(args.mse_target)?;
    let start = Instant::now();
    let opts = select_options(args.seed, args.mog_samples, args.max_order);
    let sel = select_order(&args.channel, args.family, args.mse_target, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();

    let family = match args.family {
        Family::Mg => "mg",
        Family::Mog => "mog",
    };
    let mut report = format!(
        "family: {family}\norder: {}\nmse: {}\nmse<={:e}: {}\nwall_time_s: {elapsed:.3}\n",
        sel.order,
        sig(sel.mse),
        args.mse_target,
        sel.met_target,
    );
    if !sel.met_target {
        report.push_str(&format!(
            "warning: no order up to {} reaches the MSE target; reporting the lowest-MSE model\n",
            sel.trace.len()
        ));
    }
    Ok(Output {
        body: sel.model.to_json() + "\n",
        sidecar: Some(report),
        outcome: if sel.met_target {
            Outcome::Success
        } else {
            Outcome::Degraded
        },
    })
}
