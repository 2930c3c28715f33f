//! Reading channel and sweep descriptions from files, stdin or inline JSON.

use std::io::Read;

use anyhow::{Context, Result};
use effcap::mixfit::{MogFitOptions, SelectOptions};
use effcap::ChannelParams;

use crate::usage;

/// Returns `arg` itself when it looks like inline JSON, standard input for
/// `-`, and the contents of the named file otherwise.
pub fn read_source(arg: &str) -> Result<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('{') {
        return Ok(arg.to_string());
    }
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .context("reading standard input")?;
        return Ok(s);
    }
    std::fs::read_to_string(arg).map_err(|e| usage(format!("cannot read {arg}: {e}")))
}

pub fn parse_channel(text: &str) -> Result<ChannelParams> {
    ChannelParams::from_json(text).map_err(|e| usage(format!("invalid channel JSON: {e}")))
}

pub fn read_channel(arg: &str) -> Result<ChannelParams> {
    parse_channel(&read_source(arg)?)
}

/// Derives independent RNG seeds for the MoG training draws and the Monte
/// Carlo estimator from one user seed.
pub fn mog_seed(seed: u64) -> u64 {
    seed
}

pub fn mc_seed(seed: u64) -> u64 {
    seed ^ 0x6d63_5f73_7472_6561
}

pub fn select_options(
    seed: u64,
    mog_samples: Option<usize>,
    max_order: Option<usize>,
) -> SelectOptions {
    let defaults = SelectOptions::default();
    SelectOptions {
        mog_samples: mog_samples.unwrap_or(defaults.mog_samples),
        mog: MogFitOptions {
            seed: mog_seed(seed),
            ..defaults.mog
        },
        max_order,
    }
}

pub fn check_mse_target(target: f64) -> Result<()> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(usage(format!(
            "mse target must be a positive number, got {target}"
        )));
    }
    Ok(())
}
