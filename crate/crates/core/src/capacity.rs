//! Effective capacity `R = −(1/A) log₂ E[(1+γ)^{−A}]` and its ergodic limit.
//!
//! Four routes are provided: the mixture gamma closed form (a sum of Tricomi
//! functions), the mixture of Gaussians integral in envelope coordinates,
//! direct quadrature against an arbitrary density, and the sample mean over
//! Monte Carlo draws. The ergodic capacity `E[log₂(1+γ)]` is the `A → 0`
//! limit and has its own estimators since the formula above is `0/0` there.

use std::cell::RefCell;
use std::f64::consts::{LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, input, numerical, Result};
use crate::mixfit::{MgModel, MogModel};
use crate::quad::{adaptive, linspace_breaks};
use crate::specfun::{ln_gamma, tricomi_u};

pub const MC_MIN_SAMPLES: usize = 1000;

/// Slack allowed above 1 for `E[(1+γ)^{−A}]` before the estimate is rejected.
const LOG_ARG_SLACK: f64 = 1e-9;
const NORMALIZATION_SLACK: f64 = 1e-4;
const NUMERIC_REL_TOL: f64 = 1e-9;
const INNER_REL_TOL: f64 = 1e-10;

/// Delay-QoS setting; `a = θ·T·B / ln 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QosConfig {
    pub theta: f64,
    pub t: f64,
    pub b: f64,
    pub a: f64,
}

pub fn a_from_qos(theta: f64, t: f64, b: f64) -> Result<QosConfig> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(domain(
            "a_from_qos",
            format!("theta = {theta} must be non-negative"),
        ));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(domain(
            "a_from_qos",
            format!("block duration T = {t} must be positive"),
        ));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(domain(
            "a_from_qos",
            format!("bandwidth B = {b} must be positive"),
        ));
    }
    Ok(QosConfig {
        theta,
        t,
        b,
        a: theta * t * b / LN_2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mg,
    Mog,
    NumericExact,
    MonteCarlo,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Mg,
        Method::Mog,
        Method::NumericExact,
        Method::MonteCarlo,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Mg => "mg",
            Method::Mog => "mog",
            Method::NumericExact => "numeric_exact",
            Method::MonteCarlo => "monte_carlo",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.label() == s)
            .ok_or_else(|| argument("Method", format!("unknown method {s:?}")))
    }
}

/// A capacity value in bits/s/Hz. `stderr` is set for Monte Carlo only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcEstimate {
    pub value: f64,
    pub method: Method,
    pub stderr: Option<f64>,
}

fn check_a(op: &'static str, a: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(
            op,
            format!("A = {a} must be positive; use the ergodic estimators for A = 0"),
        ));
    }
    Ok(())
}

/// `−(1/A) log₂ m` for a moment `m = E[(1+γ)^{−A}]` that must lie in `(0, 1]`.
fn capacity_from_moment(op: &'static str, m: f64, a: f64) -> Result<f64> {
    if !(m > 0.0) || m > 1.0 + LOG_ARG_SLACK || !m.is_finite() {
        return Err(numerical(
            op,
            format!("E[(1+γ)^(-A)] = {m} is outside (0, 1]"),
        ));
    }
    Ok((-m.log2() / a).max(0.0))
}

/// `E[(1+γ)^{−A}] = Σ φ_l Γ(ϑ_l) U(ϑ_l; ϑ_l+1−A; ξ_l)` for a mixture gamma model.
pub fn mg_moment(model: &MgModel, a: f64) -> Result<f64> {
    model.validate()?;
    let mut total = 0.0;
    for t in &model.terms {
        let u = tricomi_u(t.vartheta, t.vartheta + 1.0 - a, t.xi)?;
        total += (t.phi.ln() + ln_gamma(t.vartheta)?).exp() * u;
    }
    Ok(total)
}

pub fn ec_mg(model: &MgModel, a: f64) -> Result<EcEstimate> {
    check_a("ec_mg", a)?;
    let m = mg_moment(model, a)?;
    Ok(EcEstimate {
        value: capacity_from_moment("ec_mg", m, a)?,
        method: Method::Mg,
        stderr: None,
    })
}

/// `Σ ρ_i ∫_{t≥0} g(γ̄t²) N(t; υ_i, ψ_i) dt`, each component integrated over
/// `υ_i ± 12ψ_i` clipped at zero.
fn mog_expectation<G: Fn(f64) -> f64>(model: &MogModel, g: G) -> Result<f64> {
    model.validate()?;
    let gb = model.gamma_bar;
    let mut total = 0.0;
    for c in &model.comps {
        let lo = (c.upsilon - 12.0 * c.psi).max(0.0);
        let hi = c.upsilon + 12.0 * c.psi;
        if hi <= 0.0 {
            continue;
        }
        let norm = 1.0 / (c.psi * (2.0 * std::f64::consts::PI).sqrt());
        let f = |t: f64| {
            let z = (t - c.upsilon) / (SQRT_2 * c.psi);
            g(gb * t * t) * norm * (-z * z).exp()
        };
        let q = adaptive(f, &linspace_breaks(lo, hi, 8), 1e-300, INNER_REL_TOL, 2000)?;
        total += c.rho * q.value;
    }
    Ok(total)
}

pub fn ec_mog(model: &MogModel, a: f64) -> Result<EcEstimate> {
    check_a("ec_mog", a)?;
    let m = mog_expectation(model, |g| (-a * g.ln_1p()).exp())?;
    Ok(EcEstimate {
        value: capacity_from_moment("ec_mog", m, a)?,
        method: Method::Mog,
        stderr: None,
    })
}

/// Log-SNR window scanned for the support of a density.
const SCAN_LO: f64 = -120.0;
const SCAN_HI: f64 = 70.0;
const SCAN_STEP: f64 = 0.5;
/// Parts of the support below `peak · e^{−CUT}` are dropped.
const CUT: f64 = 46.0;

/// `(∫ f, ∫ g·f)` over `γ > 0`, integrating in `u = ln γ`.
fn density_expectation<P, G>(op: &'static str, pdf: P, g: G) -> Result<(f64, f64)>
where
    P: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> f64,
{
    let failure = RefCell::new(None);
    let mass = |u: f64| -> f64 {
        let gamma = u.exp();
        match pdf(gamma) {
            Ok(v) if v.is_finite() && v >= 0.0 => v * gamma,
            Ok(v) => {
                failure.borrow_mut().get_or_insert_with(|| {
                    input(op, format!("density returned {v} at γ = {gamma:e}"))
                });
                0.0
            }
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                0.0
            }
        }
    };

    let steps = ((SCAN_HI - SCAN_LO) / SCAN_STEP).round() as usize;
    let scan: Vec<(f64, f64)> = (0..=steps)
        .map(|i| {
            let u = SCAN_LO + i as f64 * SCAN_STEP;
            (u, mass(u))
        })
        .collect();
    let peak = scan.iter().map(|s| s.1).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(failure
            .take()
            .unwrap_or_else(|| input(op, "density vanishes on the whole log-SNR window")));
    }
    let floor = peak * (-CUT).exp();
    let first = scan.iter().position(|s| s.1 > floor).unwrap_or(0);
    let last = scan.iter().rposition(|s| s.1 > floor).unwrap_or(steps);
    let lo = scan[first.saturating_sub(2)].0;
    let hi = scan[(last + 2).min(steps)].0;
    let pieces = ((hi - lo) / SCAN_STEP).round().max(1.0) as usize;
    let breaks = linspace_breaks(lo, hi, pieces);
    let abs_tol = peak * 1e-16;

    let norm = adaptive(mass, &breaks, abs_tol, NUMERIC_REL_TOL, 20_000)?.value;
    let value = adaptive(
        |u: f64| mass(u) * g(u.exp()),
        &breaks,
        abs_tol,
        NUMERIC_REL_TOL,
        20_000,
    )?
    .value;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if (norm - 1.0).abs() > NORMALIZATION_SLACK {
        return Err(input(op, format!("density integrates to {norm}, not 1")));
    }
    Ok((norm, value))
}

/// Direct quadrature of `E[(1+γ)^{−A}]` against `pdf`, which must integrate
/// to 1 within `1e-4`.
pub fn ec_numeric<P: Fn(f64) -> Result<f64>>(pdf: P, a: f64) -> Result<EcEstimate> {
    check_a("ec_numeric", a)?;
    let (_, m) = density_expectation("ec_numeric", pdf, |g| (-a * g.ln_1p()).exp())?;
    Ok(EcEstimate {
        value: capacity_from_moment("ec_numeric", m, a)?,
        method: Method::NumericExact,
        stderr: None,
    })
}

fn check_samples(op: &'static str, samples: &[f64]) -> Result<()> {
    if samples.len() < MC_MIN_SAMPLES {
        return Err(argument(
            op,
            format!(
                "{} samples given, at least {MC_MIN_SAMPLES} required",
                samples.len()
            ),
        ));
    }
    if samples.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(input(op, "samples must be finite and non-negative"));
    }
    Ok(())
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = values.clone().count();
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n.max(2) - 1) as f64;
    (mean, var.sqrt(), n)
}

/// Sample-mean estimator with a delta-method standard error.
pub fn ec_monte_carlo(samples: &[f64], a: f64) -> Result<EcEstimate> {
    check_a("ec_monte_carlo", a)?;
    check_samples("ec_monte_carlo", samples)?;
    let (m, sd, n) = mean_and_std(samples.iter().map(|g| (-a * g.ln_1p()).exp()));
    Ok(EcEstimate {
        value: capacity_from_moment("ec_monte_carlo", m, a)?,
        method: Method::MonteCarlo,
        stderr: Some(sd / (a * m * LN_2 * (n as f64).sqrt())),
    })
}

fn log2_1p(g: f64) -> f64 {
    g.ln_1p() / LN_2
}

fn ergodic(value: f64, method: Method) -> EcEstimate {
    EcEstimate {
        value: value.max(0.0),
        method,
        stderr: None,
    }
}

/// Ergodic capacity `E[log₂(1+γ)]` by quadrature against `pdf`.
pub fn ergodic_numeric<P: Fn(f64) -> Result<f64>>(pdf: P) -> Result<EcEstimate> {
    let (_, v) = density_expectation("ergodic_numeric", pdf, log2_1p)?;
    Ok(ergodic(v, Method::NumericExact))
}

pub fn ergodic_mg(model: &MgModel) -> Result<EcEstimate> {
    model.validate()?;
    let (_, v) = density_expectation("ergodic_mg", |g| model.pdf(g), log2_1p)?;
    Ok(ergodic(v, Method::Mg))
}

pub fn ergodic_mog(model: &MogModel) -> Result<EcEstimate> {
    Ok(ergodic(mog_expectation(model, log2_1p)?, Method::Mog))
}

pub fn ergodic_monte_carlo(samples: &[f64]) -> Result<EcEstimate> {
    check_samples("ergodic_monte_carlo", samples)?;
    let (m, sd, n) = mean_and_std(samples.iter().map(|&g| log2_1p(g)));
    Ok(EcEstimate {
        value: m.max(0.0),
        method: Method::MonteCarlo,
        stderr: Some(sd / (n as f64).sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixfit::{MgTerm, MogComponent};

    fn exponential() -> MgModel {
        MgModel::new(vec![MgTerm {
            phi: 1.0,
            vartheta: 1.0,
            xi: 1.0,
        }])
        .unwrap()
    }

    #[test]
    fn qos_conversion() {
        assert!((a_from_qos(LN_2, 1.0, 1.0).unwrap().a - 1.0).abs() < 1e-15);
        assert_eq!(a_from_qos(0.0, 1.0, 1.0).unwrap().a, 0.0);
        assert!((a_from_qos(1.0, 1.0, 1.0).unwrap().a - 1.442_695_040_9).abs() < 1e-10);
        assert!(a_from_qos(-1.0, 1.0, 1.0).is_err());
        assert!(a_from_qos(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn exponential_channel_two_routes() {
        // −log₂(e·E₁(1))
        let want = 0.745_775_173_729_266_8;
        let mg = ec_mg(&exponential(), 1.0).unwrap();
        let num = ec_numeric(|g: f64| Ok((-g).exp()), 1.0).unwrap();
        assert!((mg.value - want).abs() < 1e-9, "{mg:?}");
        assert!((num.value - want).abs() < 1e-9, "{num:?}");
        assert_eq!(mg.stderr, None);
    }

    #[test]
    fn degenerate_mg() {
        let m = MgModel::new(vec![MgTerm {
            phi: 1e4,
            vartheta: 1.0,
            xi: 1e4,
        }])
        .unwrap();
        assert!(ec_mg(&m, 1.0).unwrap().value < 0.01);
    }

    #[test]
    fn narrow_gamma_numeric() {
        let xi: f64 = 1e6;
        let r = ec_numeric(|g: f64| Ok(xi * (-xi * g).exp()), 1.0).unwrap();
        assert!(r.value < 1e-3);
    }

    #[test]
    fn collapsed_mog_is_deterministic_channel() {
        let m = MogModel {
            gamma_bar: 1.0,
            comps: vec![MogComponent {
                rho: 1.0,
                upsilon: 1.0,
                psi: 1e-6,
            }],
        };
        assert!((ec_mog(&m, 2.0).unwrap().value - 1.0).abs() < 1e-4);
        assert!((ergodic_mog(&m).unwrap().value - 1.0).abs() < 1e-4);
    }

    #[test]
    fn monte_carlo_closed_cases() {
        let r = ec_monte_carlo(&vec![1.0; 2000], 2.0).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
        assert_eq!(r.stderr, Some(0.0));
        assert_eq!(ec_monte_carlo(&vec![0.0; 2000], 2.0).unwrap().value, 0.0);
        assert!(ec_monte_carlo(&[1.0; 10], 1.0).is_err());
    }

    #[test]
    fn rejects_non_positive_a() {
        assert!(ec_mg(&exponential(), 0.0).is_err());
        assert!(ec_numeric(|g: f64| Ok((-g).exp()), -1.0).is_err());
    }

    #[test]
    fn unnormalised_density_is_rejected() {
        let err = ec_numeric(|g: f64| Ok(2.0 * (-g).exp()), 1.0).unwrap_err();
        assert!(matches!(err, crate::Error::Input { .. }));
    }

    #[test]
    fn small_a_approaches_ergodic() {
        let pdf = |g: f64| Ok((-g).exp());
        let small = ec_numeric(pdf, 1e-4).unwrap().value;
        let erg = ergodic_numeric(pdf).unwrap().value;
        // E[log2(1+γ)] for a unit exponential is e·E1(1)/ln 2.
        assert!((erg - 0.596_347_362_3 / LN_2).abs() < 1e-9);
        assert!((small - erg).abs() < 1e-3);
        assert!((ergodic_mg(&exponential()).unwrap().value - erg).abs() < 1e-9);
    }

    #[test]
    fn method_labels_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
            assert_eq!(
                serde_json::to_string(&m).unwrap(),
                format!("\"{}\"", m.label())
            );
        }
    }
}
