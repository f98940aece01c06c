//! Bulk sets, bandwidths and bin partitions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::densities::{Family, NullDensity};
use crate::error::{invalid, Error, Result};
use crate::numeric::bisect_boundary;

/// A closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::MalformedInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        !(self.len() > 0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Which privatization protocol a test uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    NonInteractive,
    Interactive,
}

impl Mechanism {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mechanism::NonInteractive => "ni",
            Mechanism::Interactive => "interactive",
        }
    }

    /// Number of equal subsamples of size `n` the protocol consumes.
    pub fn phases(&self) -> usize {
        match self {
            Mechanism::NonInteractive => 2,
            Mechanism::Interactive => 3,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ni" | "non-interactive" | "noninteractive" => Ok(Mechanism::NonInteractive),
            "interactive" | "int" => Ok(Mechanism::Interactive),
            _ => Err(Error::Parse(format!(
                "unknown mechanism `{s}` (expected ni | interactive)"
            ))),
        }
    }
}

/// Sample size, privacy level, smoothness and risk level of one test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// Per-phase sample size.
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Hölder bound of the alternative class.
    pub l: f64,
    pub gamma: f64,
    pub mechanism: Mechanism,
}

impl TestConfig {
    pub fn n_alpha2(&self) -> f64 {
        self.n as f64 * self.alpha * self.alpha
    }

    /// Checks the parameter ranges, and `L > L0` when a null is given.
    pub fn validate(&self, null: Option<&NullDensity>) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(
                "alpha",
                format!(
                    "privacy level must lie in (0,1) (upper-bound theorems assume α∈(0,1)), got {}",
                    self.alpha
                ),
            ));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(invalid(
                "beta",
                format!("smoothness must lie in (0,1], got {}", self.beta),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(
                "gamma",
                format!("risk level must lie in (0,1), got {}", self.gamma),
            ));
        }
        if self.n < 2 {
            return Err(invalid(
                "n",
                format!("per-phase sample size must be at least 2, got {}", self.n),
            ));
        }
        if let Some(d) = null {
            if self.beta > d.holder_beta_max() {
                return Err(invalid(
                    "beta",
                    format!("{d} is only Hölder up to β = {}", d.holder_beta_max()),
                ));
            }
            let l0 = d.l0(self.beta);
            if !(self.l > l0) {
                return Err(invalid("L", format!("must exceed L0 = {l0} of {d}, got {}", self.l)));
            }
        }
        Ok(())
    }
}

/// Equal-width bins `B_j = [x_j − h, x_j + h]` tiling a compact interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BulkPartition {
    interval: Interval,
    h: f64,
    centers: Vec<f64>,
}

impl BulkPartition {
    pub fn interval(&self) -> &Interval {
        &self.interval
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_bins(&self) -> usize {
        self.centers.len()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn center(&self, j: usize) -> f64 {
        self.centers[j]
    }

    pub fn bin(&self, j: usize) -> Interval {
        Interval {
            lo: self.centers[j] - self.h,
            hi: self.centers[j] + self.h,
        }
    }

    /// Index of the bin holding `x`. Shared endpoints go to the right-hand bin,
    /// except the right end of `B`, which belongs to the last bin. Every point
    /// of `B` is thus assigned to exactly one bin.
    #[inline]
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.interval.lo && x <= self.interval.hi) {
            return None;
        }
        let j = ((x - self.interval.lo) / (2.0 * self.h)).floor() as usize;
        Some(j.min(self.centers.len() - 1))
    }
}

/// Tiles `b` with `N = max(1, round(|B|/(2 h_target)))` bins of half-width `|B|/(2N)`.
pub fn partition(b: Interval, h_target: f64) -> Result<BulkPartition> {
    if !(h_target > 0.0) {
        return Err(invalid(
            "h",
            format!("target bandwidth must be positive, got {h_target}"),
        ));
    }
    if b.is_empty() || !b.len().is_finite() {
        return Err(invalid(
            "B",
            format!("bulk set {b} must be a non-degenerate compact interval"),
        ));
    }
    let n = ((b.len() / (2.0 * h_target)).round() as usize).max(1);
    let h = b.len() / (2.0 * n as f64);
    let centers = (1..=n).map(|j| b.lo + (2 * j - 1) as f64 * h).collect();
    Ok(BulkPartition {
        interval: b,
        h,
        centers,
    })
}

/// Bandwidth order from the upper-bound theorems, scaled by `c_h`:
/// `c_h |B|^{-1/(4β+3)} (nα²)^{-2/(4β+3)}` (non-interactive) or
/// `c_h (|B| nα²)^{-1/(2β+1)}` (interactive).
///
/// Returns [`Error::BandwidthTooLarge`] when the result leaves fewer than one
/// bin; callers may fall back to a single bin.
pub fn bandwidth(config: &TestConfig, b: &Interval, c_h: f64) -> Result<f64> {
    let len = b.len();
    let na2 = config.n_alpha2();
    if !(len > 0.0) || !(na2 > 0.0) {
        return Err(invalid(
            "bandwidth",
            format!("need |B| > 0 and nα² > 0, got {len} and {na2}"),
        ));
    }
    if !(c_h > 0.0) {
        return Err(invalid(
            "c_h",
            format!("bandwidth constant must be positive, got {c_h}"),
        ));
    }
    let beta = config.beta;
    let h = match config.mechanism {
        Mechanism::NonInteractive => {
            let d = 4.0 * beta + 3.0;
            c_h * len.powf(-1.0 / d) * na2.powf(-2.0 / d)
        }
        Mechanism::Interactive => c_h * (len * na2).powf(-1.0 / (2.0 * beta + 1.0)),
    };
    if h >= len / 2.0 {
        return Err(Error::BandwidthTooLarge { h, len });
    }
    Ok(h)
}

/// [`bandwidth`], clamped to a single bin when `nα²` is too small.
pub fn bandwidth_or_single_bin(config: &TestConfig, b: &Interval, c_h: f64) -> Result<f64> {
    match bandwidth(config, b, c_h) {
        Err(Error::BandwidthTooLarge { len, .. }) => Ok(len / 2.0),
        other => other,
    }
}

/// Rate exponents `(bulk exponent, sample exponent)` of the leading term
/// `|B|^a (nα²)^{-b}` for a mechanism.
fn rate_exponents(mechanism: Mechanism, beta: f64) -> (f64, f64) {
    match mechanism {
        Mechanism::NonInteractive => ((3.0 * beta + 3.0) / (4.0 * beta + 3.0), 2.0 * beta / (4.0 * beta + 3.0)),
        Mechanism::Interactive => ((beta + 1.0) / (2.0 * beta + 1.0), beta / (2.0 * beta + 1.0)),
    }
}

/// Closed-form bulk set for each catalog family (upper-bound choice).
pub fn bulk_set(d: &NullDensity, config: &TestConfig) -> Interval {
    let na2 = config.n_alpha2();
    let beta = config.beta;
    let ni = config.mechanism == Mechanism::NonInteractive;
    let (lo, hi) = d.support();
    let iv = |lo: f64, hi: f64| Interval { lo, hi: hi.max(lo) };
    match d.family() {
        Family::Uniform { .. } | Family::Beta { .. } | Family::Spiky { .. } => iv(lo, hi),
        Family::Normal => {
            let c = if ni {
                4.0 * beta / (4.0 * beta + 3.0)
            } else {
                2.0 * beta / (2.0 * beta + 1.0)
            };
            let t = (c * na2.ln()).max(0.0).sqrt();
            iv(-t, t)
        }
        Family::Exponential { rate } => {
            let c = if ni {
                2.0 * beta / (4.0 * beta + 3.0)
            } else {
                beta / (2.0 * beta + 1.0)
            };
            iv(0.0, c * na2.ln() / rate)
        }
        Family::Pareto { scale, shape: k } => {
            let e = if ni {
                2.0 * beta / (k * (4.0 * beta + 3.0) + 3.0 * beta + 3.0)
            } else {
                beta / (k * (2.0 * beta + 1.0) + beta + 1.0)
            };
            iv(scale, na2.powf(e))
        }
        Family::Cauchy { .. } => {
            let e = if ni {
                2.0 * beta / (7.0 * beta + 6.0)
            } else {
                beta / (3.0 * beta + 2.0)
            };
            let t = na2.powf(e);
            iv(-t, t)
        }
        Family::SlowVary { a } => {
            let (eb, en) = rate_exponents(config.mechanism, beta);
            let holds = |x: f64| {
                let tail = (std::f64::consts::LN_2 / (2.0 + x).ln()).powf(a);
                tail >= x.powf(eb) * na2.powf(-en) + 1.0 / na2.sqrt()
            };
            let (lo_b, hi_b) = (1.0, na2.powi(2).max(2.0));
            let a_star = if !holds(lo_b) {
                lo_b
            } else if holds(hi_b) {
                hi_b
            } else {
                bisect_boundary(holds, lo_b, hi_b, 1e-6)
            };
            iv(0.0, a_star)
        }
    }
}

/// Bulk sets shrunk away from the zeros of `f_0`, as used to emulate the
/// lower-bound geometry for the spiky and Beta nulls. Other families return
/// [`bulk_set`].
pub fn lower_bound_bulk_set(d: &NullDensity, config: &TestConfig) -> Interval {
    let na2 = config.n_alpha2();
    let beta = config.beta;
    let e = match config.mechanism {
        Mechanism::NonInteractive => 2.0 * beta / (4.0 * beta + 3.0),
        Mechanism::Interactive => beta / (2.0 * beta + 1.0),
    };
    match d.family() {
        Family::Spiky { l0 } => {
            let t = na2.powf(-e);
            let right = 2.0 / l0.sqrt() - t;
            Interval {
                lo: t.min(right),
                hi: right,
            }
        }
        Family::Beta { a, b } => {
            let lo = if a > 1.0 { na2.powf(-e / (a - 1.0)) } else { 0.0 };
            let hi = if b > 1.0 { 1.0 - na2.powf(-e / (b - 1.0)) } else { 1.0 };
            Interval { lo: lo.min(hi), hi }
        }
        _ => bulk_set(d, config),
    }
}

/// `ψ_{n,α}(B)`: `|B|h^β + |B|^{3/4}/(h^{3/4}√(nα²)) + 1/√(nα²)` (non-interactive)
/// or `|B|h^β + √(|B|/(h nα²)) + 1/√(nα²)` (interactive).
pub fn psi_rate(b: &Interval, h: f64, config: &TestConfig) -> f64 {
    let len = b.len();
    let na2 = config.n_alpha2();
    let bias = len * h.powf(config.beta);
    let noise = match config.mechanism {
        Mechanism::NonInteractive => len.powf(0.75) / (h.powf(0.75) * na2.sqrt()),
        Mechanism::Interactive => (len / (h * na2)).sqrt(),
    };
    bias + noise + 1.0 / na2.sqrt()
}
