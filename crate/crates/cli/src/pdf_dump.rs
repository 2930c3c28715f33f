//! Tabulates the exact and fitted SNR densities on a grid.

use anyhow::Result;
use effcap::channels::{mean_snr, CompositeDensity};
use effcap::mixfit::{select_order, Family, MixtureModel};
use effcap::ChannelParams;

use crate::format::{csv_table, sig};
use crate::input::{check_mse_target, select_options};
use crate::{usage, Outcome, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Exact,
    Mg,
    Mog,
}

impl Column {
    pub const ALL: [Column; 3] = [Column::Exact, Column::Mg, Column::Mog];

    pub fn label(self) -> &'static str {
        match self {
            Column::Exact => "exact",
            Column::Mg => "mg",
            Column::Mog => "mog",
        }
    }
}

/// Grid bounds default to `[1e-3 γ̄, 1e2 γ̄]` with 200 log-spaced points.
#[derive(Debug, Clone)]
pub struct PdfDumpArgs {
    pub channel: ChannelParams,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: usize,
    pub spacing: Spacing,
    pub columns: Vec<Column>,
    pub mse_target: f64,
    pub seed: u64,
    pub mog_samples: Option<usize>,
    pub max_order: Option<usize>,
}

pub fn grid(from: f64, to: f64, points: usize, spacing: Spacing) -> Vec<f64> {
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == 0 {
                from
            } else if i + 1 == points {
                to
            } else {
                match spacing {
                    Spacing::Linear => step(from, to, i),
                    Spacing::Log => step(from.ln(), to.ln(), i).exp(),
                }
            }
        })
        .collect()
}

pub fn run(args: &PdfDumpArgs) -> Result<Output> {
    check_mse_target(args.mse_target)?;
    if args.points < 2 {
        return Err(usage(format!(
            "points must be at least 2, got {}",
            args.points
        )));
    }
    if args.columns.is_empty() {
        return Err(usage("select at least one of exact, mg, mog"));
    }
    let gamma_bar = mean_snr(&args.channel)?;
    let from = args.from.unwrap_or(1e-3 * gamma_bar);
    let to = args.to.unwrap_or(1e2 * gamma_bar);
    if !(from > 0.0 && from < to && to.is_finite()) {
        return Err(usage(format!(
            "grid needs 0 < from < to, got from = {from}, to = {to}"
        )));
    }
    let gammas = grid(from, to, args.points, args.spacing);

    let columns: Vec<Column> = Column::ALL
        .into_iter()
        .filter(|c| args.columns.contains(c))
        .collect();
    let opts = select_options(args.seed, args.mog_samples, args.max_order);
    let mut outcome = Outcome::Success;
    let mut report = String::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for &c in &columns {
        let col = match c {
            Column::Exact => {
                let d = CompositeDensity::new(&args.channel)?;
                gammas
                    .iter()
                    .map(|&g| d.pdf(g))
                    .collect::<effcap::Result<Vec<_>>>()?
            }
            Column::Mg | Column::Mog => {
                let family = if c == Column::Mg {
                    Family::Mg
                } else {
                    Family::Mog
                };
                let sel = select_order(&args.channel, family, args.mse_target, &opts)?;
                report.push_str(&format!(
                    "{}: order {} mse {} met_target {}\n",
                    c.label(),
                    sel.order,
                    sig(sel.mse),
                    sel.met_target
                ));
                if !sel.met_target {
                    outcome = Outcome::Degraded;
                }
                let model: &MixtureModel = &sel.model;
                gammas
                    .iter()
                    .map(|&g| model.pdf(g))
                    .collect::<effcap::Result<Vec<_>>>()?
            }
        };
        values.push(col);
    }

    let mut header = vec!["gamma".to_string()];
    header.extend(columns.iter().map(|c| c.label().to_string()));
    let rows: Vec<Vec<String>> = gammas
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let mut row = vec![sig(g)];
            row.extend(values.iter().map(|col| sig(col[i])));
            row
        })
        .collect();
    Ok(Output {
        body: csv_table(&header, &rows)?,
        sidecar: (!report.is_empty()).then_some(report),
        outcome,
    })
}
