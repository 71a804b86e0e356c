//! Equality testing for a single pair of binary distributions.
//!
//! For binary `p, q`, `||p - q||_2^2 = 2 (p_0 - q_0)^2`, so the promise
//! `||p - q||_2^2 > gap_sq` means `|p_0 - q_0| > D` with `D = sqrt(gap_sq / 2)`.
//! The tester draws `N` samples per side, forms the outcome-0 frequencies and
//! rejects iff `|p̂_0 - q̂_0| > D / 2`.
//!
//! Error bounds. Each frequency averages `N` values in `[0, 1]`, so Hoeffding
//! gives `P(|p̂_0 - p_0| >= t) <= 2 exp(-2 N t^2)`. A deviation of the
//! difference by `t` needs one side off by `t / 2`, hence
//!
//! ```text
//! P(|(p̂_0 - q̂_0) - (p_0 - q_0)| >= t) <= 4 exp(-N t^2 / 2).
//! ```
//!
//! Under `p = q` a rejection needs a deviation above `D / 2`; under the far
//! case an acceptance needs a deviation of at least `D - D / 2`. Both are
//! bounded by `4 exp(-N D^2 / 8)`, which is at most `delta` once
//! `N >= 8 ln(4 / delta) / D^2`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sampling::{BiasSource, PairOracle, Side};

/// Hoeffding multiplier in `N = ceil(C ln(K / delta) / D^2)`.
pub const SAMPLE_CONSTANT: f64 = 8.0;
/// Union-bound constant `K` in the same formula.
pub const UNION_CONSTANT: f64 = 4.0;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    /// Consistent with equality.
    Yes,
    /// Far.
    No,
}

impl Verdict {
    pub fn is_no(self) -> bool {
        self == Verdict::No
    }
}

/// Parameters of one binary test.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct BinaryTestParams {
    gap_sq: f64,
    delta: f64,
    separation: f64,
    threshold: f64,
    samples: u64,
}

impl BinaryTestParams {
    pub fn new(gap_sq: f64, delta: f64) -> Result<Self> {
        let samples = required_samples(gap_sq, delta)?;
        let separation = (gap_sq / 2.0).sqrt();
        Ok(Self {
            gap_sq,
            delta,
            separation,
            threshold: separation / 2.0,
            samples,
        })
    }

    pub fn gap_sq(&self) -> f64 {
        self.gap_sq
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `D = sqrt(gap_sq / 2)`, the implied lower bound on `|p_0 - q_0|`.
    pub fn separation(&self) -> f64 {
        self.separation
    }

    /// Rejection threshold on `|p̂_0 - q̂_0|`.
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Samples per side.
    pub fn samples(&self) -> u64 {
        self.samples
    }
}

/// Samples per side: `ceil(8 ln(4 / delta) / D^2)` with `D^2 = gap_sq / 2`.
pub fn required_samples(gap_sq: f64, delta: f64) -> Result<u64> {
    if !(gap_sq > 0.0 && gap_sq.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gap_sq must be positive, got {gap_sq}"
        )));
    }
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1/2], got {delta}"
        )));
    }
    let sep_sq = gap_sq / 2.0;
    let n = (SAMPLE_CONSTANT * (UNION_CONSTANT / delta).ln() / sep_sq).ceil();
    Ok((n as u64).max(1))
}

/// Result of one binary test.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PairOutcome {
    pub verdict: Verdict,
    /// `|p̂_0 - q̂_0|`.
    pub statistic: f64,
    /// Draws across both sides.
    pub samples: u64,
}

/// Runs the binary tester on `index`; `epoch` selects the sample streams.
pub fn test_pair<S: BiasSource>(
    oracle: &PairOracle<S>,
    index: u64,
    params: &BinaryTestParams,
    epoch: u64,
) -> Result<PairOutcome> {
    let n = params.samples;
    let p0 = oracle.draw(Side::P, index, n, epoch)? as f64 / n as f64;
    let q0 = oracle.draw(Side::Q, index, n, epoch)? as f64 / n as f64;
    let statistic = (p0 - q0).abs();
    let verdict = if statistic > params.threshold {
        Verdict::No
    } else {
        Verdict::Yes
    };
    Ok(PairOutcome {
        verdict,
        statistic,
        samples: 2 * n,
    })
}
