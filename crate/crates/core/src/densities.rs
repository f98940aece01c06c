//! Null densities, their tail masses and bulk-set minima, and the perturbed
//! alternatives `f_ν = f_0 + δ Σ_j ν_j ψ_j` used as H1 instances.

use std::f64::consts::{LN_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{invalid, Error, Result};
use crate::kernels::WaveKernel;
use crate::rng::uniform_open;
use crate::tuning::{BulkPartition, Interval};

const MAX_CONSECUTIVE_REJECTIONS: u64 = 1_000_000;

/// Common interface of the densities the harness can draw from.
pub trait Density: Send + Sync {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;

    /// Draws `n` i.i.d. observations.
    fn sample(&self, n: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>>;

    /// `∫_{[lo, hi]} f`.
    fn mass(&self, lo: f64, hi: f64) -> f64 {
        self.cdf(hi) - self.cdf(lo)
    }
}

/// The catalog of null families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Uniform {
        a: f64,
        b: f64,
    },
    /// Standard normal.
    Normal,
    Beta {
        a: f64,
        b: f64,
    },
    Cauchy {
        scale: f64,
    },
    Pareto {
        scale: f64,
        shape: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Triangular spike of height `√L0` on `[0, 2/√L0]`.
    Spiky {
        l0: f64,
    },
    /// `A log(2)^A / ((x+2) log^{A+1}(x+2))` on `[0, ∞)`.
    SlowVary {
        a: f64,
    },
}

/// A member of the null catalog.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullDensity {
    family: Family,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive and finite, got {v}")))
    }
}

impl NullDensity {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(invalid("uniform", format!("need a < b, got a={a}, b={b}")));
        }
        Ok(Self::from_family(Family::Uniform { a, b }))
    }

    pub fn normal() -> Self {
        Self::from_family(Family::Normal)
    }

    /// Beta(a, b) with `a, b ≥ 1`; smaller parameters are not Hölder continuous.
    pub fn beta(a: f64, b: f64) -> Result<Self> {
        if !(a >= 1.0 && b >= 1.0 && a.is_finite() && b.is_finite()) {
            return Err(invalid("beta", format!("need a, b >= 1, got a={a}, b={b}")));
        }
        Ok(Self::from_family(Family::Beta { a, b }))
    }

    pub fn cauchy(scale: f64) -> Result<Self> {
        positive("cauchy scale", scale)?;
        Ok(Self::from_family(Family::Cauchy { scale }))
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        positive("pareto scale", scale)?;
        positive("pareto shape", shape)?;
        Ok(Self::from_family(Family::Pareto { scale, shape }))
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        positive("exponential rate", rate)?;
        Ok(Self::from_family(Family::Exponential { rate }))
    }

    pub fn spiky(l0: f64) -> Result<Self> {
        positive("spiky L0", l0)?;
        Ok(Self::from_family(Family::Spiky { l0 }))
    }

    pub fn slowvary(a: f64) -> Result<Self> {
        positive("slowvary A", a)?;
        Ok(Self::from_family(Family::SlowVary { a }))
    }

    fn from_family(family: Family) -> Self {
        Self { family }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Closure of the support.
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            Family::Uniform { a, b } => (a, b),
            Family::Normal | Family::Cauchy { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Beta { .. } => (0.0, 1.0),
            Family::Pareto { scale, .. } => (scale, f64::INFINITY),
            Family::Exponential { .. } | Family::SlowVary { .. } => (0.0, f64::INFINITY),
            Family::Spiky { l0 } => (0.0, 2.0 / l0.sqrt()),
        }
    }

    /// Largest Hölder exponent for which the density is Hölder on its support.
    pub fn holder_beta_max(&self) -> f64 {
        match self.family {
            Family::Beta { a, b } => {
                let mut m: f64 = 1.0;
                if a > 1.0 {
                    m = m.min(a - 1.0);
                }
                if b > 1.0 {
                    m = m.min(b - 1.0);
                }
                m
            }
            _ => 1.0,
        }
    }

    /// A Hölder constant `L0` valid for exponent `beta` on the support.
    ///
    /// For Lipschitz families this is `lip^β · osc^{1-β}`, since
    /// `min(lip·d, osc) ≤ lip^β osc^{1-β} d^β`. Beta densities use a grid
    /// estimate inflated by 5%.
    pub fn l0(&self, beta: f64) -> f64 {
        let interp = |lip: f64, osc: f64| lip.powf(beta) * osc.powf(1.0 - beta);
        match self.family {
            Family::Uniform { .. } => 0.0,
            Family::Normal => interp(1.0 / (2.0 * PI * std::f64::consts::E).sqrt(), 1.0 / (2.0 * PI).sqrt()),
            Family::Cauchy { scale } => interp(3.0 * 3f64.sqrt() / (8.0 * PI * scale * scale), 1.0 / (PI * scale)),
            Family::Pareto { scale, shape } => interp(shape * (shape + 1.0) / (scale * scale), shape / scale),
            Family::Exponential { rate } => interp(rate * rate, rate),
            Family::Spiky { l0 } => interp(l0, l0.sqrt()),
            Family::SlowVary { a } => {
                let f0 = a / (2.0 * LN_2);
                let lip = a / (4.0 * LN_2) * (1.0 + (a + 1.0) / LN_2);
                interp(lip, f0)
            }
            Family::Beta { a, b } => {
                if a == 1.0 && b == 1.0 {
                    return 0.0;
                }
                let g = 800;
                let xs: Vec<f64> = (0..=g).map(|i| i as f64 / g as f64).collect();
                let fs: Vec<f64> = xs.iter().map(|&x| self.pdf(x)).collect();
                let mut best: f64 = 0.0;
                for i in 0..xs.len() {
                    for j in (i + 1)..xs.len() {
                        best = best.max((fs[i] - fs[j]).abs() / (xs[j] - xs[i]).powf(beta));
                    }
                }
                1.05 * best
            }
        }
    }

    fn mode(&self) -> f64 {
        match self.family {
            Family::Uniform { a, .. } => a,
            Family::Normal | Family::Cauchy { .. } => 0.0,
            Family::Beta { a, b } => {
                if a + b > 2.0 {
                    (a - 1.0) / (a + b - 2.0)
                } else {
                    0.5
                }
            }
            Family::Pareto { scale, .. } => scale,
            Family::Exponential { .. } | Family::SlowVary { .. } => 0.0,
            Family::Spiky { l0 } => 1.0 / l0.sqrt(),
        }
    }

    /// `max{f_0(x) : x ∈ B}`; every catalog member is unimodal.
    pub fn max_on(&self, b: &Interval) -> f64 {
        self.pdf(self.mode().clamp(b.lo(), b.hi()))
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Family::Normal => (-0.5 * x * x).exp() / (2.0 * PI).sqrt(),
            Family::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return 0.0;
                }
                let la = if a == 1.0 { 0.0 } else { (a - 1.0) * x.ln() };
                let lb = if b == 1.0 { 0.0 } else { (b - 1.0) * (1.0 - x).ln() };
                (la + lb - ln_beta(a, b)).exp()
            }
            Family::Cauchy { scale } => scale / (PI * (x * x + scale * scale)),
            Family::Pareto { scale, shape } => {
                if x >= scale {
                    shape * scale.powf(shape) / x.powf(shape + 1.0)
                } else {
                    0.0
                }
            }
            Family::Exponential { rate } => {
                if x >= 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            Family::Spiky { l0 } => {
                let peak = 1.0 / l0.sqrt();
                if !(0.0..=2.0 * peak).contains(&x) {
                    0.0
                } else if x <= peak {
                    l0 * x
                } else {
                    2.0 * l0.sqrt() - l0 * x
                }
            }
            Family::SlowVary { a } => {
                if x >= 0.0 {
                    let l = (x + 2.0).ln();
                    a * LN_2.powf(a) / ((x + 2.0) * l.powf(a + 1.0))
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Normal => 0.5 * erfc(-x / SQRT_2),
            Family::Cauchy { scale } => 0.5 + (x / scale).atan() / PI,
            Family::Beta { a, b } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    beta_reg(a, b, x)
                }
            }
            _ => 1.0 - self.sf(x),
        }
    }

    /// Survival function `1 − F(x)`, computed without cancellation in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
            Family::Normal => 0.5 * erfc(x / SQRT_2),
            Family::Beta { a, b } => {
                if x <= 0.0 {
                    1.0
                } else if x >= 1.0 {
                    0.0
                } else {
                    beta_reg(b, a, 1.0 - x)
                }
            }
            Family::Cauchy { scale } => 0.5 - (x / scale).atan() / PI,
            Family::Pareto { scale, shape } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Family::Spiky { l0 } => {
                let peak = 1.0 / l0.sqrt();
                if x <= 0.0 {
                    1.0
                } else if x <= peak {
                    1.0 - 0.5 * l0 * x * x
                } else if x < 2.0 * peak {
                    let r = 2.0 * peak - x;
                    0.5 * l0 * r * r
                } else {
                    0.0
                }
            }
            Family::SlowVary { a } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (LN_2 / (x + 2.0).ln()).powf(a)
                }
            }
        }
    }

    /// Inverse distribution function on `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self.family {
            Family::Uniform { a, b } => a + (b - a) * u,
            Family::Normal => {
                let x = -SQRT_2 * erfc_inv(2.0 * u);
                self.newton_polish(x, u)
            }
            Family::Beta { a, b } => self.beta_quantile(a, b, u),
            Family::Cauchy { scale } => scale * (PI * (u - 0.5)).tan(),
            Family::Pareto { scale, shape } => scale * (1.0 - u).powf(-1.0 / shape),
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
            Family::Spiky { l0 } => {
                if u <= 0.5 {
                    (2.0 * u / l0).sqrt()
                } else {
                    2.0 / l0.sqrt() - (2.0 * (1.0 - u) / l0).sqrt()
                }
            }
            Family::SlowVary { a } => (LN_2 * (1.0 - u).powf(-1.0 / a)).exp() - 2.0,
        }
    }

    fn newton_polish(&self, mut x: f64, u: f64) -> f64 {
        for _ in 0..3 {
            let p = self.pdf(x);
            if !(p > 0.0) || !x.is_finite() {
                break;
            }
            let step = (self.cdf(x) - u) / p;
            x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        x
    }

    fn beta_quantile(&self, a: f64, b: f64, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x = 0.5;
        for _ in 0..200 {
            let f = beta_reg(a, b, x) - u;
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let p = self.pdf(x);
            let mut next = if p > 0.0 { x - f / p } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-15 || hi - lo < 1e-15 {
                return next;
            }
            x = next;
        }
        x
    }

    /// `∫_{B̄} f_0`, the mass outside `B`.
    pub fn tail_mass(&self, b: &Interval) -> f64 {
        (self.cdf(b.lo()) + self.sf(b.hi())).clamp(0.0, 1.0)
    }

    /// `C_0(B) = min{f_0(x) : x ∈ B}`; by unimodality the minimum sits at an endpoint.
    pub fn c0(&self, b: &Interval) -> f64 {
        self.pdf(b.lo()).min(self.pdf(b.hi()))
    }

    /// Draws on `B̄` from `f_0` restricted there, by inversion.
    fn sample_outside(&self, b: &Interval, rng: &mut dyn RngCore) -> f64 {
        let left = self.cdf(b.lo());
        let right = self.sf(b.hi());
        let u = uniform_open(rng) * (left + right);
        if u < left {
            self.quantile(u)
        } else {
            self.quantile(1.0 - (u - left)).max(b.hi())
        }
    }
}

impl Density for NullDensity {
    fn pdf(&self, x: f64) -> f64 {
        NullDensity::pdf(self, x)
    }

    fn cdf(&self, x: f64) -> f64 {
        NullDensity::cdf(self, x)
    }

    fn sample(&self, n: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        Ok((0..n).map(|_| self.quantile(uniform_open(rng))).collect())
    }
}

impl fmt::Display for NullDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Uniform { a, b } => write!(f, "uniform:{a},{b}"),
            Family::Normal => write!(f, "normal"),
            Family::Beta { a, b } => write!(f, "beta:{a},{b}"),
            Family::Cauchy { scale } => write!(f, "cauchy:{scale}"),
            Family::Pareto { scale, shape } => write!(f, "pareto:{scale},{shape}"),
            Family::Exponential { rate } => write!(f, "exp:{rate}"),
            Family::Spiky { l0 } => write!(f, "spiky:{l0}"),
            Family::SlowVary { a } => write!(f, "slowvary:{a}"),
        }
    }
}

impl FromStr for NullDensity {
    type Err = Error;

    /// Parses `uniform:a,b`, `normal`, `beta:a,b`, `cauchy:a`, `pareto:a,k`,
    /// `exp:lambda`, `spiky:L0` or `slowvary:A`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, a),
            None => (s, ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::UnknownDensity(s.to_string()))?
        };
        let arity = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::UnknownDensity(s.to_string()))
            }
        };
        match name {
            "uniform" => {
                arity(2)?;
                Self::uniform(nums[0], nums[1])
            }
            "normal" => {
                arity(0)?;
                Ok(Self::normal())
            }
            "beta" => {
                arity(2)?;
                Self::beta(nums[0], nums[1])
            }
            "cauchy" => {
                arity(1)?;
                Self::cauchy(nums[0])
            }
            "pareto" => {
                arity(2)?;
                Self::pareto(nums[0], nums[1])
            }
            "exp" => {
                arity(1)?;
                Self::exponential(nums[0])
            }
            "spiky" => {
                arity(1)?;
                Self::spiky(nums[0])
            }
            "slowvary" => {
                arity(1)?;
                Self::slowvary(nums[0])
            }
            _ => Err(Error::UnknownDensity(s.to_string())),
        }
    }
}

/// `f_ν(x) = f_0(x) + δ Σ_j ν_j h^{-1/2} ψ((x − x_j)/h)` on the bins of a partition.
#[derive(Debug, Clone)]
pub struct AlternativeDensity {
    base: NullDensity,
    partition: BulkPartition,
    delta: f64,
    signs: Vec<f64>,
    wave: WaveKernel,
    delta_max: f64,
    envelope: f64,
}

/// The largest admissible δ and the condition that binds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaBound {
    pub delta_max: f64,
    pub nonnegativity: f64,
    pub holder: f64,
}

impl DeltaBound {
    pub fn binding(&self) -> &'static str {
        if self.nonnegativity <= self.holder {
            "nonnegativity"
        } else {
            "Hölder"
        }
    }
}

/// `δ_max = √h · min{ C_0(B)/‖ψ‖_∞, ½(1 − L0/L) h^β · L/H_ψ(β) }`.
pub fn delta_max(
    base: &NullDensity,
    partition: &BulkPartition,
    wave: &WaveKernel,
    l: f64,
    beta: f64,
) -> Result<DeltaBound> {
    let l0 = base.l0(beta);
    if !(l > l0) {
        return Err(invalid(
            "L",
            format!("must exceed the null's Hölder constant L0 = {l0}, got {l}"),
        ));
    }
    let h = partition.h();
    let nonnegativity = h.sqrt() * base.c0(partition.interval()) / wave.sup_norm();
    let holder = h.sqrt() * 0.5 * (1.0 - l0 / l) * h.powf(beta) * l / wave.holder_constant(beta);
    Ok(DeltaBound {
        delta_max: nonnegativity.min(holder),
        nonnegativity,
        holder,
    })
}

/// Builds `f_ν`, rejecting δ above the admissible bound.
pub fn make_alternative(
    base: NullDensity,
    partition: BulkPartition,
    delta: f64,
    signs: &[f64],
    wave: WaveKernel,
    l: f64,
    beta: f64,
) -> Result<AlternativeDensity> {
    if signs.len() != partition.n_bins() {
        return Err(Error::LengthMismatch(format!(
            "{} signs for {} bins",
            signs.len(),
            partition.n_bins()
        )));
    }
    if signs.iter().any(|&s| s != 1.0 && s != -1.0) {
        return Err(invalid("signs", "entries must be +1 or -1"));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(invalid("delta", format!("must be non-negative, got {delta}")));
    }
    let bound = delta_max(&base, &partition, &wave, l, beta)?;
    // Relative slack so that δ = δ_max computed along another path is accepted.
    if delta > bound.delta_max * (1.0 + 1e-12) {
        let condition = if delta > bound.nonnegativity * (1.0 + 1e-12) {
            "nonnegativity"
        } else {
            "Hölder"
        };
        return Err(Error::DeltaTooLarge {
            delta,
            delta_max: bound.delta_max,
            condition,
        });
    }
    let envelope = base.max_on(partition.interval()) + delta * wave.sup_norm() / partition.h().sqrt();
    Ok(AlternativeDensity {
        base,
        partition,
        delta,
        signs: signs.to_vec(),
        wave,
        delta_max: bound.delta_max,
        envelope,
    })
}

impl AlternativeDensity {
    pub fn base(&self) -> &NullDensity {
        &self.base
    }

    pub fn partition(&self) -> &BulkPartition {
        &self.partition
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    /// `‖f_ν − f_0‖_1 = C_1 δ N √h`.
    pub fn l1_distance(&self) -> f64 {
        self.wave.c1() * self.delta * self.partition.n_bins() as f64 * self.partition.h().sqrt()
    }

    /// The perturbation `f_ν − f_0` at `x`.
    pub fn perturbation(&self, x: f64) -> f64 {
        match self.partition.bin_of(x) {
            Some(j) => {
                let h = self.partition.h();
                self.delta * self.signs[j] / h.sqrt() * self.wave.eval((x - self.partition.center(j)) / h)
            }
            None => 0.0,
        }
    }
}

impl Density for AlternativeDensity {
    fn pdf(&self, x: f64) -> f64 {
        self.base.pdf(x) + self.perturbation(x)
    }

    fn cdf(&self, x: f64) -> f64 {
        let base = self.base.cdf(x);
        match self.partition.bin_of(x) {
            Some(j) => {
                let h = self.partition.h();
                let t = (x - self.partition.center(j)) / h;
                base + self.delta * self.signs[j] * h.sqrt() * self.wave.antiderivative(t)
            }
            None => base,
        }
    }

    fn sample(&self, n: usize, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let b = self.partition.interval();
        let tail = self.base.tail_mass(b);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            if uniform_open(rng) < tail {
                out.push(self.base.sample_outside(b, rng));
                continue;
            }
            let mut rejected = 0u64;
            loop {
                let x = b.lo() + b.len() * uniform_open(rng);
                if uniform_open(rng) * self.envelope < self.pdf(x) {
                    out.push(x);
                    break;
                }
                rejected += 1;
                if rejected >= MAX_CONSECUTIVE_REJECTIONS {
                    return Err(Error::RejectionExhausted(rejected));
                }
            }
        }
        Ok(out)
    }
}
