//! Reference parameter sets shared by tests, benchmarks and the CLI.

use crate::channels::{scale_to_mean, ChannelParams, EtaFormat};
use crate::error::Result;

pub const ALPHAS: [f64; 3] = [1.0, 2.0, 3.5];
pub const ETAS: [f64; 3] = [0.1, 0.5, 0.9];
pub const MUS: [f64; 3] = [0.5, 1.0, 2.0];
pub const BS: [f64; 3] = [1.0, 2.0, 5.0];

/// Every fourth point of the lexicographic 3⁴ factorial over
/// (α, η, μ, b), Format 1, each scaled to unit mean SNR.
///
/// The 21 cases are balanced: each level of each factor appears 7 times, and
/// the canonical channel (2, 0.5, 1, 2) is included.
pub fn parameter_grid() -> Result<Vec<ChannelParams>> {
    let mut out = Vec::with_capacity(21);
    let mut idx = 0usize;
    for &alpha in &ALPHAS {
        for &eta in &ETAS {
            for &mu in &MUS {
                for &b in &BS {
                    if idx % 4 == 0 {
                        let p = ChannelParams::new(alpha, eta, mu, b, 1.0, EtaFormat::Format1)?;
                        out.push(scale_to_mean(&p, 1.0)?);
                    }
                    idx += 1;
                }
            }
        }
    }
    Ok(out)
}

/// The canonical channel (α, η, μ, b, Ω) = (2, 0.5, 1, 2, 1), Format 1.
pub fn canonical_channel() -> ChannelParams {
    ChannelParams {
        alpha: 2.0,
        eta: 0.5,
        mu: 1.0,
        b: 2.0,
        omega: 1.0,
        format: EtaFormat::Format1,
    }
}
