//! Cross-method agreement check at a list of exponents.

use anyhow::Result;
use effcap::capacity::{
    ec_mg, ec_mog, ec_monte_carlo, ec_numeric, ergodic_mg, ergodic_mog, ergodic_monte_carlo,
    ergodic_numeric, EcEstimate, Method, MC_MIN_SAMPLES,
};
use effcap::channels::{sample_composite, CompositeDensity};
use effcap::mixfit::{select_order, Family, MgModel, MixtureModel, MogModel};
use effcap::ChannelParams;
use rayon::prelude::*;

use crate::format::{csv_table, sig};
use crate::input::{check_mse_target, mc_seed, select_options};
use crate::{usage, Outcome, Output};

pub const MG_TOL: f64 = 1e-3;
pub const MOG_TOL: f64 = 1e-2;
pub const MC_SIGMAS: f64 = 3.0;

pub const ERGODIC_LABEL: &str = "ergodic(θ→0)";

#[derive(Debug, Clone)]
pub struct ValidateArgs {
    pub channel: ChannelParams,
    pub a_values: Vec<f64>,
    pub mc_samples: usize,
    pub seed: u64,
    pub mse_target: f64,
    pub mog_samples: Option<usize>,
    pub max_order: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub a: f64,
    pub mg: f64,
    pub mog: f64,
    pub numeric_exact: f64,
    pub monte_carlo: f64,
    pub stderr: f64,
    pub max_gap: f64,
    pub failures: Vec<String>,
}

impl ValidationRow {
    pub fn label(&self) -> String {
        if self.a == 0.0 {
            ERGODIC_LABEL.to_string()
        } else {
            sig(self.a)
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub mg_order: usize,
    pub mg_mse: f64,
    pub mog_order: usize,
    pub mog_mse: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(ValidationRow::passed)
    }

    pub fn to_csv(&self) -> Result<String> {
        let header: Vec<String> = [
            "A",
            "mg",
            "mog",
            "numeric_exact",
            "monte_carlo",
            "monte_carlo_stderr",
            "max_gap",
            "status",
        ]
        .map(String::from)
        .to_vec();
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.label(),
                    sig(r.mg),
                    sig(r.mog),
                    sig(r.numeric_exact),
                    sig(r.monte_carlo),
                    sig(r.stderr),
                    sig(r.max_gap),
                    if r.passed() {
                        "PASS".into()
                    } else {
                        "FAIL".into()
                    },
                ]
            })
            .collect();
        csv_table(&header, &rows)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "mg order {} (mse {}), mog order {} (mse {})\n",
            self.mg_order,
            sig(self.mg_mse),
            self.mog_order,
            sig(self.mog_mse)
        );
        if self.passed() {
            s.push_str("overall: PASS\n");
        } else {
            s.push_str("overall: FAIL\n");
            for r in &self.rows {
                for f in &r.failures {
                    s.push_str(&format!("  A={}: {f}\n", r.label()));
                }
            }
        }
        s
    }
}

fn estimate(
    a: f64,
    mg: &MgModel,
    mog: &MogModel,
    density: &CompositeDensity,
    samples: &[f64],
) -> [effcap::Result<EcEstimate>; 4] {
    if a == 0.0 {
        [
            ergodic_mg(mg),
            ergodic_mog(mog),
            ergodic_numeric(|g| density.pdf(g)),
            ergodic_monte_carlo(samples),
        ]
    } else {
        [
            ec_mg(mg, a),
            ec_mog(mog, a),
            ec_numeric(|g| density.pdf(g), a),
            ec_monte_carlo(samples, a),
        ]
    }
}

fn check_row(a: f64, est: [effcap::Result<EcEstimate>; 4]) -> ValidationRow {
    let mut failures = Vec::new();
    let mut vals = [f64::NAN; 4];
    let mut stderr = f64::NAN;
    for (i, e) in est.into_iter().enumerate() {
        match e {
            Ok(e) => {
                vals[i] = e.value;
                if let Some(se) = e.stderr {
                    stderr = se;
                }
            }
            Err(err) => failures.push(format!("{}: {err}", Method::ALL[i].label())),
        }
    }
    let [mg, mog, num, mc] = vals;
    let pairs = [
        ("|mg - numeric_exact|", (mg - num).abs(), MG_TOL),
        ("|mog - numeric_exact|", (mog - num).abs(), MOG_TOL),
        ("|mg - mog|", (mg - mog).abs(), MOG_TOL),
    ];
    for (name, gap, tol) in pairs {
        if gap > tol {
            failures.push(format!("{name} = {} exceeds {tol:e}", sig(gap)));
        }
    }
    let z = (mc - num).abs();
    if z > MC_SIGMAS * stderr {
        failures.push(format!(
            "|monte_carlo - numeric_exact| = {} exceeds {MC_SIGMAS}·stderr = {}",
            sig(z),
            sig(MC_SIGMAS * stderr)
        ));
    }
    let max_gap = vals
        .iter()
        .enumerate()
        .flat_map(|(i, x)| vals[i + 1..].iter().map(move |y| (x - y).abs()))
        .fold(0.0_f64, |m, g| {
            if g.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(g)
            }
        });
    ValidationRow {
        a,
        mg,
        mog,
        numeric_exact: num,
        monte_carlo: mc,
        stderr,
        max_gap,
        failures,
    }
}

pub fn check_args(args: &ValidateArgs) -> Result<()> {
    if args.mc_samples < MC_MIN_SAMPLES {
        return Err(usage(format!(
            "mc-samples = {} is below the minimum of {MC_MIN_SAMPLES}",
            args.mc_samples
        )));
    }
    if args.a_values.is_empty() {
        return Err(usage("at least one A value is required"));
    }
    if let Some(a) = args
        .a_values
        .iter()
        .find(|a| !(**a >= 0.0) || !a.is_finite())
    {
        return Err(usage(format!("A values must be non-negative, got {a}")));
    }
    check_mse_target(args.mse_target)
}

pub fn compute(args: &ValidateArgs) -> Result<ValidationReport> {
    check_args(args)?;
    let opts = select_options(args.seed, args.mog_samples, args.max_order);
    let mg_sel = select_order(&args.channel, Family::Mg, args.mse_target, &opts)?;
    let mog_sel = select_order(&args.channel, Family::Mog, args.mse_target, &opts)?;
    let (MixtureModel::Mg(mg), MixtureModel::Mog(mog)) = (&mg_sel.model, &mog_sel.model) else {
        unreachable!("select_order returns the requested family");
    };
    let density = CompositeDensity::new(&args.channel)?;
    let samples = sample_composite(&args.channel, args.mc_samples, mc_seed(args.seed))?;
    let rows = args
        .a_values
        .par_iter()
        .map(|&a| check_row(a, estimate(a, mg, mog, &density, &samples)))
        .collect();
    Ok(ValidationReport {
        rows,
        mg_order: mg_sel.order,
        mg_mse: mg_sel.mse,
        mog_order: mog_sel.order,
        mog_mse: mog_sel.mse,
    })
}

pub fn run(args: &ValidateArgs) -> Result<(Output, ValidationReport)> {
    let report = compute(args)?;
    Ok((
        Output {
            body: report.to_csv()?,
            sidecar: Some(report.summary()),
            outcome: if report.passed() {
                Outcome::Success
            } else {
                Outcome::ValidationFailed
            },
        },
        report,
    ))
}
