//! Adaptive Gauss–Kronrod integration.
//!
//! A 21-point Kronrod rule with QUADPACK-style error scaling drives a global
//! bisection scheme. [`peaked_log`] wraps it for integrands given through their
//! logarithm that concentrate around a single mode, which is how every density
//! integral in this crate is shaped once mapped to log coordinates.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{numerical, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_600_525_734,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// One 21-point Gauss–Kronrod panel on `[a, b]`: `(estimate, error)`.
pub fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let result = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

/// Globally adaptive integration over the consecutive intervals of `breaks`.
///
/// Bisects the panel with the largest error until the summed error drops to
/// `max(abs_tol, rel_tol * |value|)`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature> {
    if breaks.len() < 2 {
        return Err(numerical("quad::adaptive", "need at least two breakpoints"));
    }
    let mut heap = BinaryHeap::new();
    let mut settled_value = 0.0;
    let mut settled_err = 0.0;
    let mut evals = 0;
    for w in breaks.windows(2) {
        let (value, err) = gk21(&mut f, w[0], w[1]);
        evals += 21;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            err,
        });
    }
    loop {
        let (mut value, mut err) = (settled_value, settled_err);
        for s in heap.iter() {
            value += s.value;
            err += s.err;
        }
        if !value.is_finite() || !err.is_finite() {
            return Err(numerical(
                "quad::adaptive",
                format!(
                    "non-finite integrand on [{}, {}]",
                    breaks[0],
                    breaks[breaks.len() - 1]
                ),
            ));
        }
        let tol = abs_tol.max(rel_tol * value.abs());
        let intervals = heap.len();
        if err <= tol || heap.is_empty() {
            return Ok(Quadrature {
                value,
                abs_err: err,
                evals,
                intervals,
            });
        }
        if intervals >= max_intervals {
            return Err(numerical(
                "quad::adaptive",
                format!(
                    "no convergence after {intervals} panels: value {value:e}, error {err:e}, tolerance {tol:e}"
                ),
            ));
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel at floating-point resolution; its error cannot shrink.
            settled_value += worst.value;
            settled_err += worst.err;
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, err) = gk21(&mut f, a, b);
            evals += 21;
            heap.push(Segment { a, b, value, err });
        }
    }
}

/// Evenly spaced breakpoints: `pieces` panels covering `[a, b]`.
pub fn linspace_breaks(a: f64, b: f64, pieces: usize) -> Vec<f64> {
    let n = pieces.max(1);
    (0..=n)
        .map(|i| {
            if i == n {
                b
            } else {
                a + (b - a) * i as f64 / n as f64
            }
        })
        .collect()
}

/// Result of [`peaked_log`]: the integral equals `exp(ln_peak) * scaled.value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakedIntegral {
    pub ln_peak: f64,
    pub mode: f64,
    pub scaled: Quadrature,
}

impl PeakedIntegral {
    pub fn value(&self) -> f64 {
        if self.ln_peak == f64::NEG_INFINITY {
            0.0
        } else {
            (self.ln_peak + self.scaled.value.ln()).exp()
        }
    }

    pub fn ln_value(&self) -> f64 {
        self.ln_peak + self.scaled.value.ln()
    }
}

// Below this many nats under the peak the integrand is treated as zero.
const TAIL_NATS: f64 = 50.0;

/// Integrates `exp(log_f(u))` over `[lo, hi]` for a unimodal `log_f`.
///
/// Shorthand for [`peaked_log_within`] scanning the whole range.
pub fn peaked_log<F: FnMut(f64) -> f64>(
    log_f: F,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<PeakedIntegral> {
    peaked_log_within(log_f, (lo, hi), (lo, hi), rel_tol)
}

/// Integrates `exp(log_f(u))` over `limits` for a unimodal `log_f` whose mode
/// lies inside `scan`.
///
/// Locates the mode by a coarse scan plus golden-section refinement, trims
/// both tails where the integrand falls `TAIL_NATS` below the peak, then
/// integrates the rescaled integrand adaptively on either side of the mode.
/// The requested `rel_tol` is relaxed to `32·ε·|ln peak|` when that is larger.
pub fn peaked_log_within<F: FnMut(f64) -> f64>(
    mut log_f: F,
    scan: (f64, f64),
    limits: (f64, f64),
    rel_tol: f64,
) -> Result<PeakedIntegral> {
    const SCAN: usize = 33;
    let (lo, hi) = (scan.0.max(limits.0), scan.1.min(limits.1));
    let spacing = (hi - lo) / (SCAN - 1) as f64;
    let mut best = (lo, f64::NEG_INFINITY);
    let mut best_idx = 0;
    for i in 0..SCAN {
        let u = lo + spacing * i as f64;
        let v = log_f(u);
        if v.is_nan() {
            return Err(numerical(
                "quad::peaked_log",
                format!("NaN log-integrand at {u}"),
            ));
        }
        if v > best.1 {
            best = (u, v);
            best_idx = i;
        }
    }
    if best.1 == f64::NEG_INFINITY {
        return Ok(PeakedIntegral {
            ln_peak: f64::NEG_INFINITY,
            mode: best.0,
            scaled: Quadrature {
                value: 0.0,
                abs_err: 0.0,
                evals: SCAN,
                intervals: 0,
            },
        });
    }

    // Golden-section refinement inside the two neighbouring scan cells.
    let mut a = lo + spacing * best_idx.saturating_sub(1) as f64;
    let mut b = (lo + spacing * (best_idx + 1) as f64).min(hi);
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = log_f(c);
    let mut fd = log_f(d);
    for _ in 0..24 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = log_f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = log_f(d);
        }
    }
    let (mode, peak) =
        [best, (c, fc), (d, fd)]
            .into_iter()
            .fold((best.0, f64::NEG_INFINITY), |acc, p| {
                if p.1 > acc.1 {
                    p
                } else {
                    acc
                }
            });

    let width = (hi - lo).max(f64::MIN_POSITIVE);
    let (lo, hi) = limits;
    let mut cut = |dir: f64| -> f64 {
        let mut step = (width * 1e-3).max(1e-3);
        loop {
            let u = mode + dir * step;
            if (dir < 0.0 && u <= lo) || (dir > 0.0 && u >= hi) {
                return if dir < 0.0 { lo } else { hi };
            }
            if log_f(u) < peak - TAIL_NATS {
                return u;
            }
            step *= 2.0;
        }
    };
    let left = cut(-1.0);
    let right = cut(1.0);

    let mut breaks = Vec::with_capacity(3);
    if left < mode {
        breaks.push(left);
    }
    breaks.push(mode);
    if right > mode {
        breaks.push(right);
    }
    if breaks.len() < 2 {
        return Err(numerical(
            "quad::peaked_log",
            "degenerate integration window",
        ));
    }
    // A log-integrand of magnitude L carries an absolute rounding error of
    // about L·ε, which bounds the relative accuracy of its exponential.
    let rel_tol = rel_tol.max(32.0 * f64::EPSILON * peak.abs());
    let scaled = adaptive(
        |u| {
            let v = log_f(u) - peak;
            if v < -745.0 {
                0.0
            } else {
                v.exp()
            }
        },
        &breaks,
        0.0,
        rel_tol,
        400,
    )?;
    Ok(PeakedIntegral {
        ln_peak: peak,
        mode,
        scaled,
    })
}
