//! Effective-capacity sweeps over mean SNR or the delay exponent.

use std::f64::consts::LN_2;

use anyhow::{bail, Result};
use effcap::capacity::{
    ec_mg, ec_mog, ec_monte_carlo, ec_numeric, ergodic_mg, ergodic_mog, ergodic_monte_carlo,
    ergodic_numeric, EcEstimate, Method, MC_MIN_SAMPLES,
};
use effcap::channels::{db_to_linear, sample_composite, scale_to_mean, CompositeDensity};
use effcap::mixfit::{fit_mg, select_order, Family, MixtureModel, MogModel, OrderSelection};
use effcap::ChannelParams;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::{csv_table, sig};
use crate::input::{check_mse_target, mc_seed, select_options};
use crate::{usage, Outcome, Output};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    MeanSnrDb,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        let d = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| {
                if i + 1 == self.steps {
                    self.stop
                } else {
                    self.start + d * i as f64
                }
            })
            .collect()
    }
}

/// QoS settings. SNR sweeps fix `a` (or `theta` with `T`, `B`); theta sweeps
/// fix `T`, `B` and `mean_snr_db`. `T` and `B` default to 1.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QosSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(
        default,
        rename = "T",
        alias = "t",
        skip_serializing_if = "Option::is_none"
    )]
    pub t: Option<f64>,
    #[serde(
        default,
        rename = "B",
        alias = "b",
        skip_serializing_if = "Option::is_none"
    )]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_snr_db: Option<f64>,
}

fn default_mc_samples() -> usize {
    1_000_000
}

fn default_mse_target() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub channel: ChannelParams,
    pub sweep_variable: SweepVariable,
    pub range: SweepRange,
    #[serde(default)]
    pub qos: QosSpec,
    pub methods: Vec<Method>,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mse_target")]
    pub mse_target: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mog_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_order: Option<usize>,
    /// Free-form note carried through unchanged.
    #[serde(default, rename = "_comment", skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SweepSpec =
            serde_json::from_str(text).map_err(|e| usage(format!("invalid sweep spec: {e}")))?;
        spec.channel
            .validate()
            .map_err(|e| usage(format!("invalid sweep spec: {e}")))?;
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        let r = &self.range;
        if r.steps < 2 {
            return Err(usage(format!(
                "range.steps must be at least 2, got {}",
                r.steps
            )));
        }
        if !(r.start < r.stop) || !r.start.is_finite() || !r.stop.is_finite() {
            return Err(usage(format!(
                "range.start ({}) must be below range.stop ({})",
                r.start, r.stop
            )));
        }
        if self.methods.is_empty() {
            return Err(usage("at least one method is required"));
        }
        if self.methods.contains(&Method::MonteCarlo) && self.mc_samples < MC_MIN_SAMPLES {
            return Err(usage(format!(
                "mc_samples = {} is below the minimum of {MC_MIN_SAMPLES}",
                self.mc_samples
            )));
        }
        check_mse_target(self.mse_target)?;
        let q = &self.qos;
        for (name, v) in [("T", q.t), ("B", q.b)] {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(usage(format!("qos.{name} must be positive, got {v}")));
                }
            }
        }
        match self.sweep_variable {
            SweepVariable::MeanSnrDb => {
                match (q.a, q.theta) {
                    (Some(_), Some(_)) => {
                        return Err(usage("give either qos.a or qos.theta, not both"))
                    }
                    (None, None) => return Err(usage("an SNR sweep needs qos.a or qos.theta")),
                    _ => {}
                }
                if q.a
                    .or(q.theta)
                    .is_some_and(|v| !(v >= 0.0) || !v.is_finite())
                {
                    return Err(usage("qos.a / qos.theta must be non-negative"));
                }
                if q.mean_snr_db.is_some() {
                    return Err(usage(
                        "qos.mean_snr_db is the swept variable here; remove it",
                    ));
                }
            }
            SweepVariable::Theta => {
                if q.a.is_some() || q.theta.is_some() {
                    return Err(usage(
                        "theta is the swept variable here; remove qos.a / qos.theta",
                    ));
                }
                if r.start < 0.0 {
                    return Err(usage("theta must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Requested methods in the canonical column order, without duplicates.
    pub fn ordered_methods(&self) -> Vec<Method> {
        Method::ALL
            .into_iter()
            .filter(|m| self.methods.contains(m))
            .collect()
    }

    fn t_b(&self) -> (f64, f64) {
        (self.qos.t.unwrap_or(1.0), self.qos.b.unwrap_or(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitInfo {
    pub family: Family,
    pub order: usize,
    pub mse: f64,
    pub mse_target: f64,
    pub met_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub sweep_variable: SweepVariable,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_snr_db: Option<f64>,
    pub methods: Vec<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<usize>,
    pub fits: Vec<FitInfo>,
    /// Rows evaluated as the ergodic capacity because A = 0.
    pub ergodic_rows: Vec<f64>,
    pub notes: Vec<String>,
}

/// Sweep values by column; `stderr` is present when Monte Carlo was requested.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub methods: Vec<Method>,
    pub x: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub stderr: Option<Vec<f64>>,
}

impl SweepTable {
    pub fn column(&self, method: Method) -> Option<&[f64]> {
        self.methods
            .iter()
            .position(|&m| m == method)
            .map(|i| self.values[i].as_slice())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["x".to_string()];
        h.extend(self.methods.iter().map(|m| m.label().to_string()));
        if self.stderr.is_some() {
            h.push(format!("{}_stderr", Method::MonteCarlo.label()));
        }
        h
    }

    pub fn to_csv(&self) -> Result<String> {
        let rows: Vec<Vec<String>> = (0..self.x.len())
            .map(|i| {
                let mut row = vec![sig(self.x[i])];
                row.extend(self.values.iter().map(|col| sig(col[i])));
                if let Some(se) = &self.stderr {
                    row.push(sig(se[i]));
                }
                row
            })
            .collect();
        csv_table(&self.header(), &rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub table: SweepTable,
    pub metadata: SweepMetadata,
}

/// Models shared by every row of a sweep.
struct Fitted {
    mg: Option<usize>,
    mog: Option<MogModel>,
}

fn fit_info(sel: &OrderSelection, target: f64) -> FitInfo {
    FitInfo {
        family: sel.family,
        order: sel.order,
        mse: sel.mse,
        mse_target: target,
        met_target: sel.met_target,
    }
}

fn fit_models(
    spec: &SweepSpec,
    seed: u64,
    params: &ChannelParams,
    meta: &mut SweepMetadata,
) -> Result<Fitted> {
    let methods = spec.ordered_methods();
    let opts = select_options(seed, spec.mog_samples, spec.max_order);
    let mut fitted = Fitted {
        mg: None,
        mog: None,
    };
    for (family, method) in [(Family::Mg, Method::Mg), (Family::Mog, Method::Mog)] {
        if !methods.contains(&method) {
            continue;
        }
        let sel = select_order(params, family, spec.mse_target, &opts)?;
        if !sel.met_target {
            meta.notes.push(format!(
                "{} fit did not reach mse {:e}; using the lowest-MSE order {} (mse {})",
                method.label(),
                spec.mse_target,
                sel.order,
                sig(sel.mse),
            ));
        }
        meta.fits.push(fit_info(&sel, spec.mse_target));
        match sel.model {
            MixtureModel::Mg(m) => fitted.mg = Some(m.order()),
            MixtureModel::Mog(m) => fitted.mog = Some(m),
        }
    }
    Ok(fitted)
}

/// One cell: capacity by `method` at exponent `a` for the channel `params`,
/// using the ergodic estimator when `a = 0`.
fn cell(
    method: Method,
    a: f64,
    params: &ChannelParams,
    fitted: &Fitted,
    mog_scale: f64,
    samples: Option<&[f64]>,
) -> Result<EcEstimate> {
    let ergodic = a == 0.0;
    Ok(match method {
        Method::Mg => {
            let order = fitted.mg.expect("MG fitted when requested");
            let model = fit_mg(params, order)?;
            if ergodic {
                ergodic_mg(&model)?
            } else {
                ec_mg(&model, a)?
            }
        }
        Method::Mog => {
            let base = fitted.mog.as_ref().expect("MoG fitted when requested");
            let model = base.with_gamma_bar(base.gamma_bar * mog_scale);
            if ergodic {
                ergodic_mog(&model)?
            } else {
                ec_mog(&model, a)?
            }
        }
        Method::NumericExact => {
            let d = CompositeDensity::new(params)?;
            if ergodic {
                ergodic_numeric(|g| d.pdf(g))?
            } else {
                ec_numeric(|g| d.pdf(g), a)?
            }
        }
        Method::MonteCarlo => {
            let s = samples.expect("samples drawn when requested");
            if ergodic {
                ergodic_monte_carlo(s)?
            } else {
                ec_monte_carlo(s, a)?
            }
        }
    })
}

struct Row {
    values: Vec<f64>,
    stderr: Option<f64>,
    notes: Vec<String>,
}

fn row(
    x: f64,
    methods: &[Method],
    a: f64,
    params: &ChannelParams,
    fitted: &Fitted,
    mog_scale: f64,
    samples: Option<&[f64]>,
) -> Row {
    let mut out = Row {
        values: Vec::with_capacity(methods.len()),
        stderr: None,
        notes: Vec::new(),
    };
    for &m in methods {
        match cell(m, a, params, fitted, mog_scale, samples) {
            Ok(est) => {
                out.values.push(est.value);
                if m == Method::MonteCarlo {
                    out.stderr = est.stderr;
                }
            }
            Err(e) => {
                out.values.push(f64::NAN);
                if m == Method::MonteCarlo {
                    out.stderr = Some(f64::NAN);
                }
                out.notes.push(format!("x={}: {}: {e}", sig(x), m.label()));
            }
        }
    }
    out
}

/// Runs a sweep. `seed_override` replaces the seed in `spec` when given.
pub fn compute(spec: &SweepSpec, seed_override: Option<u64>) -> Result<SweepResult> {
    spec.check()?;
    let seed = seed_override.unwrap_or(spec.seed);
    let methods = spec.ordered_methods();
    let want_mc = methods.contains(&Method::MonteCarlo);
    let (t, b) = spec.t_b();
    let xs = spec.range.values();
    let mut meta = SweepMetadata {
        tool: "effcap",
        version: env!("CARGO_PKG_VERSION"),
        seed,
        sweep_variable: spec.sweep_variable,
        a: None,
        t,
        b,
        mean_snr_db: None,
        methods: methods.clone(),
        mc_samples: want_mc.then_some(spec.mc_samples),
        fits: Vec::new(),
        ergodic_rows: Vec::new(),
        notes: Vec::new(),
    };

    let rows: Vec<Row> = match spec.sweep_variable {
        SweepVariable::MeanSnrDb => {
            let a = match (spec.qos.a, spec.qos.theta) {
                (Some(a), _) => a,
                (None, Some(theta)) => theta * t * b / LN_2,
                (None, None) => bail!("unreachable: checked above"),
            };
            meta.a = Some(a);
            if a == 0.0 {
                meta.ergodic_rows = xs.clone();
                meta.notes
                    .push("A = 0: rows report the ergodic capacity, labelled ergodic(θ→0)".into());
            }
            let base = scale_to_mean(&spec.channel, 1.0)?;
            let fitted = fit_models(spec, seed, &base, &mut meta)?;
            snr_rows(spec, seed, &xs, &methods, a, &base, &fitted)?
        }
        SweepVariable::Theta => {
            let db = spec.qos.mean_snr_db.unwrap_or(0.0);
            meta.mean_snr_db = Some(db);
            let params = scale_to_mean(&spec.channel, db_to_linear(db))?;
            let fitted = fit_models(spec, seed, &params, &mut meta)?;
            let samples = if want_mc {
                Some(sample_composite(&params, spec.mc_samples, mc_seed(seed))?)
            } else {
                None
            };
            meta.ergodic_rows = xs.iter().copied().filter(|&x| x == 0.0).collect();
            xs.par_iter()
                .map(|&theta| {
                    let a = theta * t * b / LN_2;
                    row(
                        theta,
                        &methods,
                        a,
                        &params,
                        &fitted,
                        1.0,
                        samples.as_deref(),
                    )
                })
                .collect()
        }
    };

    let mut values = vec![Vec::with_capacity(xs.len()); methods.len()];
    let mut stderr = want_mc.then(|| Vec::with_capacity(xs.len()));
    for r in rows {
        for (col, v) in values.iter_mut().zip(&r.values) {
            col.push(*v);
        }
        if let Some(se) = stderr.as_mut() {
            se.push(r.stderr.unwrap_or(f64::NAN));
        }
        meta.notes.extend(r.notes);
    }
    if values.iter().all(|col| col.iter().all(|v| v.is_nan())) {
        bail!("every cell of the sweep failed: {}", meta.notes.join("; "));
    }
    Ok(SweepResult {
        table: SweepTable {
            methods,
            x: xs,
            values,
            stderr,
        },
        metadata: meta,
    })
}

fn snr_rows(
    spec: &SweepSpec,
    seed: u64,
    xs: &[f64],
    methods: &[Method],
    a: f64,
    base: &ChannelParams,
    fitted: &Fitted,
) -> Result<Vec<Row>> {
    let want_mc = methods.contains(&Method::MonteCarlo);
    xs.par_iter()
        .map(|&db| {
            let g = db_to_linear(db);
            let params = scale_to_mean(base, g)?;
            let samples = if want_mc {
                Some(sample_composite(&params, spec.mc_samples, mc_seed(seed))?)
            } else {
                None
            };
            Ok(row(db, methods, a, &params, fitted, g, samples.as_deref()))
        })
        .collect()
}

/// Runs a sweep and renders the CSV and metadata JSON.
pub fn run(spec: &SweepSpec, seed_override: Option<u64>) -> Result<(Output, SweepResult)> {
    let result = compute(spec, seed_override)?;
    let body = result.table.to_csv()?;
    let meta = serde_json::to_string_pretty(&result.metadata)? + "\n";
    Ok((
        Output {
            body,
            sidecar: Some(meta),
            outcome: Outcome::Success,
        },
        result,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> Result<SweepSpec> {
        SweepSpec::from_json(text)
    }

    const CHANNEL: &str =
        r#"{"alpha":2.0,"eta":0.5,"mu":1.0,"b":2.0,"omega":1.0,"format":"format1"}"#;

    #[test]
    fn range_values_hit_endpoints() {
        let r = SweepRange {
            start: -5.0,
            stop: 25.0,
            steps: 13,
        };
        let v = r.values();
        assert_eq!(v.len(), 13);
        assert_eq!(v[0], -5.0);
        assert_eq!(v[12], 25.0);
        assert!((v[1] - -2.5).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        let ok = format!(
            r#"{{"channel":{CHANNEL},"sweep_variable":"mean_snr_db","range":{{"start":0,"stop":10,"steps":3}},"qos":{{"a":1}},"methods":["mg"]}}"#
        );
        let s = spec(&ok).unwrap();
        assert_eq!(s.mc_samples, 1_000_000);
        assert_eq!(s.mse_target, 1e-8);

        let bad = [
            ok.replace(r#""steps":3"#, r#""steps":1"#),
            ok.replace(r#""stop":10"#, r#""stop":-1"#),
            ok.replace(r#"{"a":1}"#, "{}"),
            ok.replace(r#"["mg"]"#, r#"["monte_carlo"],"mc_samples":10"#),
            ok.replace(r#"["mg"]"#, "[]"),
            ok.replace(r#"["mg"]"#, r#"["bogus"]"#),
            ok.replace(r#""mean_snr_db""#, r#""theta""#),
            ok.replace(r#""qos""#, r#""extra":1,"qos""#),
        ];
        for b in bad {
            let err = spec(&b).unwrap_err();
            assert!(
                err.downcast_ref::<crate::UsageError>().is_some(),
                "{b}: {err}"
            );
        }
    }

    #[test]
    fn small_snr_sweep_with_numeric_and_mc() {
        let s = spec(&format!(
            r#"{{"channel":{CHANNEL},"sweep_variable":"mean_snr_db","range":{{"start":0,"stop":10,"steps":3}},"qos":{{"a":1}},"methods":["monte_carlo","numeric_exact"],"mc_samples":20000,"seed":4}}"#
        ))
        .unwrap();
        let r = compute(&s, None).unwrap();
        assert_eq!(
            r.table.header(),
            ["x", "numeric_exact", "monte_carlo", "monte_carlo_stderr"]
        );
        let num = r.table.column(Method::NumericExact).unwrap();
        let mc = r.table.column(Method::MonteCarlo).unwrap();
        let se = r.table.stderr.as_ref().unwrap();
        for i in 0..3 {
            assert!(
                (num[i] - mc[i]).abs() < 4.0 * se[i],
                "{} vs {} ± {}",
                num[i],
                mc[i],
                se[i]
            );
        }
        assert!(num.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn theta_zero_row_is_ergodic() {
        let s = spec(&format!(
            r#"{{"channel":{CHANNEL},"sweep_variable":"theta","range":{{"start":0,"stop":2,"steps":3}},"qos":{{"T":1,"B":1,"mean_snr_db":0}},"methods":["numeric_exact"]}}"#
        ))
        .unwrap();
        let r = compute(&s, None).unwrap();
        assert_eq!(r.metadata.ergodic_rows, vec![0.0]);
        let col = r.table.column(Method::NumericExact).unwrap();
        assert!(col[0] > col[1] && col[1] > col[2]);
    }
}
