//! Mixture of Gaussians on the normalised envelope `r = √(γ/γ̄)`.
//!
//! The induced SNR density is
//! `f(γ) = Σ ρ_i / (√(8πγ̄γ) ψ_i) · exp(−(√(γ/γ̄) − υ_i)² / (2ψ_i²))`.
//! Its support formally includes `r < 0`, so the mass on `γ > 0` falls short
//! of 1 by [`MogModel::truncated_mass`]; the density is not renormalised.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, input, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MogComponent {
    pub rho: f64,
    pub upsilon: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MogModel {
    pub gamma_bar: f64,
    pub comps: Vec<MogComponent>,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

impl MogModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_bar > 0.0) || !self.gamma_bar.is_finite() {
            return Err(input(
                "MogModel",
                format!("gamma_bar = {} must be positive", self.gamma_bar),
            ));
        }
        if self.comps.is_empty() {
            return Err(input("MogModel", "model has no components"));
        }
        for (i, c) in self.comps.iter().enumerate() {
            if !(c.rho > 0.0 && c.psi > 0.0) || !c.upsilon.is_finite() || !c.psi.is_finite() {
                return Err(input(
                    "MogModel",
                    format!("component {i} is invalid: {c:?}"),
                ));
            }
        }
        let total: f64 = self.comps.iter().map(|c| c.rho).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(input("MogModel", format!("weights sum to {total}, not 1")));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.comps.len()
    }

    /// Mixture density of the envelope `r` (over the whole real line).
    pub fn envelope_pdf(&self, r: f64) -> f64 {
        self.comps
            .iter()
            .map(|c| {
                let z = (r - c.upsilon) / c.psi;
                c.rho / c.psi * (-0.5 * z * z - LN_SQRT_2PI).exp()
            })
            .sum()
    }

    /// SNR density exactly as the change of variables `γ = γ̄ r²` prescribes.
    pub fn pdf(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0) {
            return Err(domain(
                "mog_pdf",
                format!("gamma = {gamma} must be positive"),
            ));
        }
        let r = (gamma / self.gamma_bar).sqrt();
        let denom = (8.0 * PI * self.gamma_bar * gamma).sqrt();
        Ok(self
            .comps
            .iter()
            .map(|c| {
                let z = (r - c.upsilon) / c.psi;
                c.rho / (denom * c.psi) * (-0.5 * z * z).exp()
            })
            .sum())
    }

    /// Probability of `r > 0` under the envelope mixture.
    pub fn truncated_mass(&self) -> f64 {
        self.comps
            .iter()
            .map(|c| c.rho * 0.5 * libm::erfc(-c.upsilon / (c.psi * std::f64::consts::SQRT_2)))
            .sum()
    }

    pub fn with_gamma_bar(&self, gamma_bar: f64) -> MogModel {
        MogModel {
            gamma_bar,
            comps: self.comps.clone(),
        }
    }
}

pub fn mog_pdf(model: &MogModel, gamma: f64) -> Result<f64> {
    model.pdf(gamma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MogFitOptions {
    pub restarts: usize,
    pub max_iter: usize,
    /// Stop when the mean per-sample log-likelihood changes by less than this.
    pub tol: f64,
    pub seed: u64,
    /// Histogram resolution for the bulk of the envelope samples.
    pub bins: usize,
}

impl Default for MogFitOptions {
    fn default() -> Self {
        Self {
            restarts: 8,
            max_iter: 2000,
            tol: 1e-10,
            seed: 0,
            bins: 512,
        }
    }
}

pub const MOG_MIN_SAMPLES: usize = 10_000;
const COLLAPSE_PSI: f64 = 1e-8;
const ATTEMPTS_PER_RESTART: u64 = 4;

/// Envelope samples `r = √(γ/γ̄)` reduced to weighted points.
///
/// Samples up to the 99.99% quantile are histogrammed into `bins` equal
/// cells represented by their centres; the sparse tail beyond is kept as
/// individual points.
#[derive(Debug, Clone)]
pub struct MogData {
    pub gamma_bar: f64,
    pub n: usize,
    width: f64,
    bins: Vec<f64>,
    tail: Vec<f64>,
}

impl MogData {
    pub fn from_samples(samples: &[f64], bins: usize) -> Result<Self> {
        if samples.len() < MOG_MIN_SAMPLES {
            return Err(input(
                "fit_mog",
                format!(
                    "{} samples given, at least {MOG_MIN_SAMPLES} required",
                    samples.len()
                ),
            ));
        }
        if bins == 0 {
            return Err(argument("fit_mog", "bin count must be positive"));
        }
        if samples.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
            return Err(input("fit_mog", "samples must be finite and non-negative"));
        }
        let n = samples.len();
        let gamma_bar = samples.iter().sum::<f64>() / n as f64;
        if !(gamma_bar > 0.0) {
            return Err(input("fit_mog", "sample mean is zero"));
        }
        let mut r: Vec<f64> = samples.iter().map(|g| (g / gamma_bar).sqrt()).collect();
        let q_idx = (((n as f64) * 0.9999) as usize).min(n - 1);
        let (_, &mut cut, _) = r.select_nth_unstable_by(q_idx, |a, b| a.total_cmp(b));
        let width = cut / bins as f64;
        let mut hist = vec![0.0; bins];
        let mut tail = Vec::new();
        for &x in &r {
            if x <= cut && width > 0.0 {
                let k = ((x / width) as usize).min(bins - 1);
                hist[k] += 1.0;
            } else {
                tail.push(x);
            }
        }
        tail.sort_by(f64::total_cmp);
        Ok(Self {
            gamma_bar,
            n,
            width,
            bins: hist,
            tail,
        })
    }

    fn centre(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.width
    }

    /// Non-empty cells and tail points as `(r, count)` pairs.
    fn weighted(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.bins
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0.0)
            .map(|(k, &c)| (self.centre(k), c))
            .chain(self.tail.iter().map(|&x| (x, 1.0)))
    }

    fn weighted_moments(&self) -> (f64, f64) {
        let total = self.n as f64;
        let mean = self.weighted().map(|(x, c)| x * c).sum::<f64>() / total;
        let var = self
            .weighted()
            .map(|(x, c)| c * (x - mean).powi(2))
            .sum::<f64>()
            / total;
        (mean, var)
    }
}

/// Outcome of an EM fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MogFit {
    pub model: MogModel,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// Restarts (out of `restarts`) that finished without collapsing.
    pub restarts_ok: usize,
}

/// Fits an `n`-component MoG to SNR samples by EM with restarts.
pub fn fit_mog(samples: &[f64], n: usize, opts: &MogFitOptions) -> Result<MogFit> {
    let data = MogData::from_samples(samples, opts.bins)?;
    fit_mog_data(&data, n, opts)
}

/// EM on pre-binned envelope data. Restarts run in parallel; the winner is
/// the highest likelihood, ties going to the lowest restart index.
pub fn fit_mog_data(data: &MogData, n: usize, opts: &MogFitOptions) -> Result<MogFit> {
    if n == 0 {
        return Err(argument("fit_mog", "component count must be at least 1"));
    }
    if opts.restarts == 0 {
        return Err(argument("fit_mog", "restart count must be at least 1"));
    }
    let runs: Vec<Option<Run>> = (0..opts.restarts)
        .into_par_iter()
        .map(|restart| {
            (0..ATTEMPTS_PER_RESTART).find_map(|attempt| {
                let seed = opts
                    .seed
                    .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                    .wrapping_add((restart as u64) << 8 | attempt);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let init = kmeans_pp_init(data, n, &mut rng);
                em(data, init, opts)
            })
        })
        .collect();
    let restarts_ok = runs.iter().filter(|r| r.is_some()).count();
    let best = runs
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.ll > a.ll { b } else { a })
        .ok_or_else(|| {
            Error::Fit(format!(
                "all {} EM restarts collapsed for N = {n}",
                opts.restarts
            ))
        })?;
    let mut comps = best.comps;
    comps.sort_by(|a, b| a.upsilon.total_cmp(&b.upsilon));
    Ok(MogFit {
        model: MogModel {
            gamma_bar: data.gamma_bar,
            comps,
        },
        log_likelihood: best.ll,
        iterations: best.iterations,
        restarts_ok,
    })
}

struct Run {
    comps: Vec<MogComponent>,
    ll: f64,
    iterations: usize,
}

/// k-means++ seeding on the weighted points followed by one hard assignment.
fn kmeans_pp_init(data: &MogData, n: usize, rng: &mut ChaCha8Rng) -> Vec<MogComponent> {
    let (pts, w): (Vec<f64>, Vec<f64>) = data.weighted().unzip();
    let (pts, w) = (&pts, &w);
    let pick = |weights: &[f64], rng: &mut ChaCha8Rng| -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, &x) in weights.iter().enumerate() {
            u -= x;
            if u <= 0.0 {
                return i;
            }
        }
        weights.len() - 1
    };
    let mut centres = vec![pts[pick(w, rng)]];
    let mut d2: Vec<f64> = pts.iter().map(|x| (x - centres[0]).powi(2)).collect();
    while centres.len() < n {
        let scores: Vec<f64> = d2.iter().zip(w).map(|(d, c)| d * c).collect();
        let c = if scores.iter().sum::<f64>() > 0.0 {
            pts[pick(&scores, rng)]
        } else {
            pts[pick(w, rng)]
        };
        centres.push(c);
        for (d, x) in d2.iter_mut().zip(pts) {
            *d = d.min((x - c).powi(2));
        }
    }

    let (_, var) = data.weighted_moments();
    let fallback_psi = (var.sqrt() / n as f64).max(1e-3);
    let mut acc = vec![(0.0, 0.0, 0.0); n];
    for (x, c) in pts.iter().zip(w) {
        let k = centres
            .iter()
            .enumerate()
            .min_by(|a, b| (x - a.1).abs().total_cmp(&(x - b.1).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        acc[k].0 += c;
        acc[k].1 += c * x;
        acc[k].2 += c * x * x;
    }
    let total: f64 = w.iter().sum();
    let mut comps: Vec<MogComponent> = acc
        .iter()
        .zip(&centres)
        .map(|(&(s0, s1, s2), &centre)| {
            if s0 > 0.0 {
                let m = s1 / s0;
                let v = (s2 / s0 - m * m).max(0.0);
                MogComponent {
                    rho: s0 / total,
                    upsilon: m,
                    psi: if v.sqrt() > 1e-6 {
                        v.sqrt()
                    } else {
                        fallback_psi
                    },
                }
            } else {
                MogComponent {
                    rho: 1.0 / total,
                    upsilon: centre,
                    psi: fallback_psi,
                }
            }
        })
        .collect();
    normalise(&mut comps);
    comps
}

fn normalise(comps: &mut [MogComponent]) {
    let total: f64 = comps.iter().map(|c| c.rho).sum();
    for c in comps.iter_mut() {
        c.rho /= total;
    }
}

/// Fills `col[k]` with `exp(k0 − q (x_k − m)²)` at the cell centres by a
/// multiplicative recurrence walking away from the cell nearest `m`.
fn fill_gaussian(col: &mut [f64], k0: f64, m: f64, q: f64, width: f64) {
    const REANCHOR: usize = 64;
    let nb = col.len();
    let x = |k: usize| (k as f64 + 0.5) * width;
    let exact = |k: usize| (k0 - q * (x(k) - m).powi(2)).exp();
    let up = |k: usize| (-q * width * (2.0 * (x(k) - m) + width)).exp();
    let down = |k: usize| (q * width * (2.0 * (x(k) - m) - width)).exp();
    let c = (-2.0 * q * width * width).exp();
    let start = (m / width - 0.5).round().clamp(0.0, (nb - 1) as f64) as usize;
    col[start] = exact(start);

    let (mut g, mut r) = (col[start], up(start));
    for k in start + 1..nb {
        if (k - start) % REANCHOR == 0 {
            g = exact(k - 1);
            r = up(k - 1);
        }
        g *= r;
        r *= c;
        col[k] = g;
        if g == 0.0 {
            col[k..].fill(0.0);
            break;
        }
    }
    let (mut g, mut r) = (col[start], down(start));
    for k in (0..start).rev() {
        if (start - k) % REANCHOR == 0 {
            g = exact(k + 1);
            r = down(k + 1);
        }
        g *= r;
        r *= c;
        col[k] = g;
        if g == 0.0 {
            col[..=k].fill(0.0);
            break;
        }
    }
}

/// Expectation–maximisation from `comps`; `None` if a component collapses.
fn em(data: &MogData, mut comps: Vec<MogComponent>, opts: &MogFitOptions) -> Option<Run> {
    const TINY: f64 = 1e-280;
    let n = comps.len();
    let nb = data.bins.len();
    let total = data.n as f64;
    let xs: Vec<f64> = (0..nb).map(|k| data.centre(k)).collect();
    // Second moment of a uniform spread over a cell about its centre.
    let cell_var = data.width * data.width / 12.0;
    let mut g = vec![0.0; n * nb];
    let mut inv = vec![0.0; nb];
    let mut lp = vec![0.0; n];
    let mut prev_ll = f64::NEG_INFINITY;
    for iter in 1..=opts.max_iter {
        let consts: Vec<(f64, f64, f64)> = comps
            .iter()
            .map(|c| {
                (
                    c.rho.ln() - c.psi.ln() - LN_SQRT_2PI,
                    c.upsilon,
                    0.5 / (c.psi * c.psi),
                )
            })
            .collect();
        let log_terms = |x: f64, lp: &mut [f64]| -> f64 {
            let mut peak = f64::NEG_INFINITY;
            for (l, &(k0, m, q)) in lp.iter_mut().zip(&consts) {
                *l = k0 - q * (x - m) * (x - m);
                peak = peak.max(*l);
            }
            let mut sum = 0.0;
            for l in lp.iter_mut() {
                *l = (*l - peak).exp();
                sum += *l;
            }
            peak + sum.ln()
        };

        for (col, &(k0, m, q)) in g.chunks_exact_mut(nb).zip(&consts) {
            fill_gaussian(col, k0, m, q, data.width);
        }
        let mut ll = 0.0;
        for k in 0..nb {
            let c = data.bins[k];
            if c == 0.0 {
                inv[k] = 0.0;
                continue;
            }
            let sum: f64 = (0..n).map(|j| g[j * nb + k]).sum();
            if sum > TINY {
                ll += c * sum.ln();
                inv[k] = c / sum;
            } else {
                let ln_sum = log_terms(xs[k], &mut lp);
                let s: f64 = lp.iter().sum();
                for (j, &l) in lp.iter().enumerate() {
                    g[j * nb + k] = l;
                }
                ll += c * ln_sum;
                inv[k] = c / s;
            }
        }
        let mut stats: Vec<(f64, f64, f64)> = g
            .chunks_exact(nb)
            .map(|col| {
                let mut s = (0.0, 0.0, 0.0);
                for ((&gk, &ik), &x) in col.iter().zip(&inv).zip(&xs) {
                    let r = gk * ik;
                    s.0 += r;
                    s.1 += r * x;
                    s.2 += r * (x * x + cell_var);
                }
                s
            })
            .collect();
        for &x in &data.tail {
            ll += log_terms(x, &mut lp);
            let sum: f64 = lp.iter().sum();
            for (s, &l) in stats.iter_mut().zip(&lp) {
                let r = l / sum;
                s.0 += r;
                s.1 += r * x;
                s.2 += r * x * x;
            }
        }

        for (c, &(s0, s1, s2)) in comps.iter_mut().zip(&stats) {
            if !(s0 > 0.0) {
                return None;
            }
            let m = s1 / s0;
            let v = s2 / s0 - m * m;
            if !(v > COLLAPSE_PSI * COLLAPSE_PSI) {
                return None;
            }
            *c = MogComponent {
                rho: s0 / total,
                upsilon: m,
                psi: v.sqrt(),
            };
        }
        normalise(&mut comps);
        let mean_ll = ll / total;
        if (mean_ll - prev_ll).abs() < opts.tol {
            return Some(Run {
                comps,
                ll,
                iterations: iter,
            });
        }
        prev_ll = mean_ll;
    }
    let ll = log_likelihood(data, &comps);
    Some(Run {
        comps,
        ll,
        iterations: opts.max_iter,
    })
}

fn log_likelihood(data: &MogData, comps: &[MogComponent]) -> f64 {
    let model = MogModel {
        gamma_bar: data.gamma_bar,
        comps: comps.to_vec(),
    };
    data.weighted()
        .map(|(x, c)| c * model.envelope_pdf(x).ln())
        .sum()
}
