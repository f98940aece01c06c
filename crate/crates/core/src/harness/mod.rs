//! Experiment orchestration: full test pipelines, risk estimation,
//! separation-radius bisection and rate regression.
//!
//! Every trial draws from its own stream `stream(seed, [arm, trial, phase])`,
//! so results are identical for any worker count. The null arm, the
//! alternative arm and threshold calibration use distinct arm keys.

pub mod config;
pub mod output;

use rand::RngCore;
use serde::Serialize;

use crate::densities::{delta_max, make_alternative, AlternativeDensity, DeltaBound, Density, Family, NullDensity};
use crate::error::{invalid, Error, Result};
use crate::kernels::{boxcar, sine_wave, SmoothingKernel, WaveKernel};
use crate::mechanisms::{
    estimate_phat, int_bin_privatize, int_second_round, ni_kernel_privatize, rr_tail_privatize, PrivacyParams,
};
use crate::numeric::{ols, quantile_sorted, wilson, Z_95};
use crate::parallel::try_map_trials;
use crate::rng::{derive_seed, stream, uniform_open};
use crate::statistics::{bin_masses, decide, stat_d, stat_s, stat_t, thresholds_int, thresholds_ni, TestOutcome};
use crate::tuning::{bandwidth_or_single_bin, bulk_set, partition, BulkPartition, Interval, Mechanism, TestConfig};

/// Stream key of the null arm.
pub const ARM_NULL: u64 = 0;
/// Stream key of the alternative arm.
pub const ARM_ALT: u64 = 1;
/// Stream key of threshold calibration.
pub const ARM_CALIBRATION: u64 = 2;

/// Null simulations used by the calibrated threshold mode.
pub const DEFAULT_CALIBRATION_SIMS: usize = 2000;

/// How `t1` and `t2` are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// The closed-form thresholds with their explicit constants.
    Paper,
    /// Each threshold is the `1 − γ/4` quantile of its statistic over `sims`
    /// null simulations, for a combined level of about `γ/2`.
    Calibrated { sims: usize },
}

/// Sign vector `ν` of a perturbed alternative.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    /// `ν_j = (−1)^j`.
    Alternating,
    /// Independent fair signs from the given seed.
    Random(u64),
}

impl SignPattern {
    pub fn signs(&self, n_bins: usize) -> Vec<f64> {
        match self {
            SignPattern::Alternating => (0..n_bins).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 }).collect(),
            SignPattern::Random(seed) => {
                let mut rng = stream(*seed, &[]);
                (0..n_bins)
                    .map(|_| if rng.next_u64() >> 63 == 0 { 1.0 } else { -1.0 })
                    .collect()
            }
        }
    }
}

/// Perturbation amplitude of an alternative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSpec {
    Absolute(f64),
    /// A fraction of `δ_max`.
    FractionOfMax(f64),
}

/// The density the alternative arm samples from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AltSpec {
    Null,
    Wave { delta: DeltaSpec, signs: SignPattern },
}

/// Everything needed to run a batch of trials.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config: TestConfig,
    pub null: NullDensity,
    pub alt: AltSpec,
    pub reps: usize,
    pub seed: u64,
    pub kernel: SmoothingKernel,
    /// Bandwidth constant `c_h`.
    pub c_h: f64,
    /// Bulk set override; `None` uses the closed-form choice for the null.
    pub bulk: Option<Interval>,
    pub thresholds: ThresholdMode,
}

impl ExperimentSpec {
    /// A spec with boxcar kernel, `c_h = 1`, the default bulk set and
    /// closed-form thresholds.
    pub fn new(config: TestConfig, null: NullDensity) -> Self {
        Self {
            config,
            null,
            alt: AltSpec::Null,
            reps: 500,
            seed: 0,
            kernel: boxcar(),
            c_h: 1.0,
            bulk: None,
            thresholds: ThresholdMode::Paper,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate(Some(&self.null))?;
        if self.reps == 0 {
            return Err(invalid("reps", "need at least one replication"));
        }
        if let ThresholdMode::Calibrated { sims } = self.thresholds {
            if sims < 10 {
                return Err(invalid(
                    "calibration_sims",
                    format!("need at least 10 null simulations, got {sims}"),
                ));
            }
        }
        Ok(())
    }
}

/// A spec with its partitions, null summaries and thresholds computed once.
#[derive(Debug, Clone)]
pub struct Pipeline {
    spec: ExperimentSpec,
    params: PrivacyParams,
    bulk: Interval,
    part: BulkPartition,
    alt_part: BulkPartition,
    wave: WaveKernel,
    f0_at_centers: Vec<f64>,
    tail0: f64,
    p0: Vec<f64>,
    t1: f64,
    t2: f64,
    delta_bound: DeltaBound,
    alternative: Option<AlternativeDensity>,
}

impl Pipeline {
    pub fn new(spec: ExperimentSpec) -> Result<Self> {
        spec.validate()?;
        let config = spec.config;
        let bulk = match spec.bulk {
            Some(b) => b,
            None => bulk_set(&spec.null, &config),
        };
        let h = bandwidth_or_single_bin(&config, &bulk, spec.c_h)?;
        let part = partition(bulk, h)?;
        // Alternatives live on bins twice as wide as the test's, so each
        // test bin sees half a bump and the perturbation does not average out.
        let alt_part = partition(bulk, 2.0 * part.h())?;
        let wave = sine_wave();
        let delta_bound = delta_max(&spec.null, &alt_part, &wave, config.l, config.beta)?;
        let mut params = PrivacyParams::new(config.alpha)?;
        if config.mechanism == Mechanism::Interactive {
            params = params.with_sample_size(config.n);
        }
        let f0_at_centers = part.centers().iter().map(|&x| spec.null.pdf(x)).collect();
        let tail0 = spec.null.tail_mass(&bulk);
        let p0 = bin_masses(&spec.null, &part);
        let (t1, t2) = match config.mechanism {
            Mechanism::NonInteractive => thresholds_ni(&config, &part, &spec.kernel, spec.null.l0(config.beta)),
            Mechanism::Interactive => thresholds_int(&config),
        };
        let mut pipeline = Self {
            spec,
            params,
            bulk,
            part,
            alt_part,
            wave,
            f0_at_centers,
            tail0,
            p0,
            t1,
            t2,
            delta_bound,
            alternative: None,
        };
        if let AltSpec::Wave { delta, signs } = pipeline.spec.alt.clone() {
            let d = match delta {
                DeltaSpec::Absolute(d) => d,
                DeltaSpec::FractionOfMax(frac) => frac * pipeline.delta_bound.delta_max,
            };
            pipeline.alternative = Some(pipeline.alternative_at(d, &signs)?);
        }
        if let ThresholdMode::Calibrated { sims } = pipeline.spec.thresholds {
            pipeline.calibrate(sims)?;
        }
        Ok(pipeline)
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn bulk(&self) -> &Interval {
        &self.bulk
    }

    /// The test's bin partition.
    pub fn partition(&self) -> &BulkPartition {
        &self.part
    }

    /// The partition carrying the alternative's bumps.
    pub fn alt_partition(&self) -> &BulkPartition {
        &self.alt_part
    }

    pub fn thresholds(&self) -> (f64, f64) {
        (self.t1, self.t2)
    }

    pub fn delta_bound(&self) -> &DeltaBound {
        &self.delta_bound
    }

    pub fn alternative(&self) -> Option<&AlternativeDensity> {
        self.alternative.as_ref()
    }

    /// The alternative with amplitude `delta` on the alternative partition.
    pub fn alternative_at(&self, delta: f64, signs: &SignPattern) -> Result<AlternativeDensity> {
        make_alternative(
            self.spec.null,
            self.alt_part.clone(),
            delta,
            &signs.signs(self.alt_part.n_bins()),
            self.wave,
            self.spec.config.l,
            self.spec.config.beta,
        )
    }

    /// `‖f_ν − f_0‖_1` for amplitude `delta`.
    pub fn l1_distance(&self, delta: f64) -> f64 {
        self.wave.c1() * delta * self.alt_part.n_bins() as f64 * self.alt_part.h().sqrt()
    }

    /// `(main statistic, tail statistic)` for one trial drawn from `f`.
    pub fn statistics(&self, f: &dyn Density, arm: u64, trial: u64) -> Result<(f64, f64)> {
        let n = self.spec.config.n;
        let seed = self.spec.seed;
        match self.spec.config.mechanism {
            Mechanism::NonInteractive => {
                let mut rng = stream(seed, &[arm, trial, 0]);
                let x = f.sample(n, &mut rng)?;
                let s = stat_s(
                    &ni_kernel_privatize(x, &self.part, &self.spec.kernel, &self.params, &mut rng),
                    &self.f0_at_centers,
                )?;
                let mut rng = stream(seed, &[arm, trial, 1]);
                let x = f.sample(n, &mut rng)?;
                let t = stat_t(&rr_tail_privatize(x, &self.bulk, &self.params, &mut rng), self.tail0)?;
                Ok((s, t))
            }
            Mechanism::Interactive => {
                let tau = self.params.tau.expect("interactive pipelines set tau");
                let mut rng = stream(seed, &[arm, trial, 0]);
                let x = f.sample(n, &mut rng)?;
                let phat = estimate_phat(&int_bin_privatize(x, &self.part, &self.params, &mut rng))?;
                let mut rng = stream(seed, &[arm, trial, 1]);
                let x = f.sample(n, &mut rng)?;
                let z = int_second_round(x, &self.part, &phat, &self.p0, &self.params, &mut rng)?;
                let d = stat_d(&z, &phat, &self.p0, tau)?;
                let mut rng = stream(seed, &[arm, trial, 2]);
                let x = f.sample(n, &mut rng)?;
                let t = stat_t(&rr_tail_privatize(x, &self.bulk, &self.params, &mut rng), self.tail0)?;
                Ok((d, t))
            }
        }
    }

    /// One test run on data from `f`.
    pub fn outcome(&self, f: &dyn Density, arm: u64, trial: u64) -> Result<TestOutcome> {
        let (main, tail) = self.statistics(f, arm, trial)?;
        Ok(decide(self.spec.config.mechanism, main, tail, self.t1, self.t2))
    }

    /// One trial of the spec: from the alternative when one is set, otherwise
    /// from the null.
    pub fn run_trial(&self, trial: u64) -> Result<TestOutcome> {
        match &self.alternative {
            Some(alt) => self.outcome(alt, ARM_ALT, trial),
            None => self.outcome(&self.spec.null, ARM_NULL, trial),
        }
    }

    fn calibrate(&mut self, sims: usize) -> Result<()> {
        let stats = try_map_trials(sims, |i| self.statistics(&self.spec.null, ARM_CALIBRATION, i as u64))?;
        let q = 1.0 - self.spec.config.gamma / 4.0;
        let mut main: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let mut tail: Vec<f64> = stats.iter().map(|s| s.1).collect();
        main.sort_by(f64::total_cmp);
        tail.sort_by(f64::total_cmp);
        self.t1 = quantile_sorted(&main, q);
        self.t2 = quantile_sorted(&tail, q);
        Ok(())
    }

    /// Number of rejections among `reps` trials from `f` on `arm`.
    pub fn count_rejections(&self, f: &dyn Density, arm: u64, reps: usize) -> Result<u64> {
        let outcomes = try_map_trials(reps, |i| self.outcome(f, arm, i as u64))?;
        Ok(outcomes.iter().filter(|o| o.reject).count() as u64)
    }
}

/// Convenience wrapper: prepares the pipeline and runs trial `trial_index`.
pub fn run_trial(spec: &ExperimentSpec, trial_index: u64) -> Result<TestOutcome> {
    Pipeline::new(spec.clone())?.run_trial(trial_index)
}

/// An error rate with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rate {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Rate {
    pub fn new(count: u64, trials: u64) -> Self {
        let (lo, hi) = wilson(count, trials, Z_95);
        Self {
            count,
            trials,
            rate: count as f64 / trials as f64,
            lo,
            hi,
        }
    }
}

/// Type-I and type-II error rates of the test at one alternative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub type1: Rate,
    /// `None` when the spec has no alternative.
    pub type2: Option<Rate>,
    pub risk: Option<f64>,
    pub reps: usize,
    pub delta: Option<f64>,
    pub l1_distance: Option<f64>,
    pub t1: f64,
    pub t2: f64,
}

/// Runs `reps` null trials and, if the spec has one, `reps` alternative trials.
pub fn estimate_risk(spec: &ExperimentSpec) -> Result<RiskEstimate> {
    let pipeline = Pipeline::new(spec.clone())?;
    estimate_risk_with(&pipeline)
}

/// [`estimate_risk`] on a prepared pipeline.
pub fn estimate_risk_with(pipeline: &Pipeline) -> Result<RiskEstimate> {
    let reps = pipeline.spec.reps;
    let type1 = Rate::new(
        pipeline.count_rejections(&pipeline.spec.null, ARM_NULL, reps)?,
        reps as u64,
    );
    let (type2, delta, l1) = match pipeline.alternative() {
        Some(alt) => {
            let rejected = pipeline.count_rejections(alt, ARM_ALT, reps)?;
            let accepted = reps as u64 - rejected;
            (
                Some(Rate::new(accepted, reps as u64)),
                Some(alt.delta()),
                Some(alt.l1_distance()),
            )
        }
        None => (None, None, None),
    };
    Ok(RiskEstimate {
        type1,
        risk: type2.map(|t| type1.rate + t.rate),
        type2,
        reps,
        delta,
        l1_distance: l1,
        t1: pipeline.t1,
        t2: pipeline.t2,
    })
}

/// How a radius search ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusStatus {
    Converged,
    /// The target risk was not reached even at `δ_max`.
    Censored,
    /// Estimated risk increased with `δ` beyond sampling error.
    Inconclusive,
}

/// One risk evaluation made during the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusProbe {
    pub delta: f64,
    pub type2: Rate,
    pub risk: f64,
    pub risk_lo: f64,
    pub risk_hi: f64,
}

/// Mechanism-specific separation estimate: the smallest L1 distance at which
/// this test reaches the target risk over the sine-bump family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusEstimate {
    pub status: RadiusStatus,
    pub delta: f64,
    pub delta_max: f64,
    pub l1_distance: f64,
    pub type1: Rate,
    pub probes: Vec<RadiusProbe>,
}

/// Bisection over `δ ∈ [0, δ_max]` for the amplitude at which
/// `type1 + type2` reaches `target_gamma`.
///
/// All probes reuse the same alternative-arm streams, so the estimated power
/// curve is monotone up to the alternative's own variation. The type-I rate
/// is estimated once on the null arm. The search stops when the bracket is
/// narrower than 5% of its upper end or a probe's risk interval (type-I rate
/// plus the type-II Wilson interval) contains the target.
pub fn estimate_radius(spec: &ExperimentSpec, target_gamma: f64, signs: &SignPattern) -> Result<RadiusEstimate> {
    let pipeline = Pipeline::new(spec.clone())?;
    estimate_radius_with(&pipeline, target_gamma, signs)
}

/// [`estimate_radius`] on a prepared pipeline.
pub fn estimate_radius_with(pipeline: &Pipeline, target_gamma: f64, signs: &SignPattern) -> Result<RadiusEstimate> {
    if !(target_gamma > 0.0 && target_gamma < 1.0) {
        return Err(invalid(
            "gamma",
            format!("target risk must lie in (0,1), got {target_gamma}"),
        ));
    }
    let reps = pipeline.spec.reps;
    let type1 = Rate::new(
        pipeline.count_rejections(&pipeline.spec.null, ARM_NULL, reps)?,
        reps as u64,
    );
    let probe = |delta: f64| -> Result<RadiusProbe> {
        let alt = pipeline.alternative_at(delta, signs)?;
        let rejected = pipeline.count_rejections(&alt, ARM_ALT, reps)?;
        let type2 = Rate::new(reps as u64 - rejected, reps as u64);
        Ok(RadiusProbe {
            delta,
            type2,
            risk: type1.rate + type2.rate,
            risk_lo: type1.rate + type2.lo,
            risk_hi: type1.rate + type2.hi,
        })
    };
    let delta_max = pipeline.delta_bound.delta_max;
    let top = probe(delta_max)?;
    let mut probes = vec![top];
    let finish = |status, delta: f64, probes: Vec<RadiusProbe>| RadiusEstimate {
        status,
        delta,
        delta_max,
        l1_distance: pipeline.l1_distance(delta),
        type1,
        probes,
    };
    if top.risk > target_gamma {
        return Ok(finish(RadiusStatus::Censored, delta_max, probes));
    }
    let (mut lo, mut hi) = (0.0, delta_max);
    let mut answer = None;
    for _ in 0..64 {
        if hi - lo <= 0.05 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let p = probe(mid)?;
        probes.push(p);
        if is_inverted(&probes) {
            return Ok(finish(RadiusStatus::Inconclusive, mid, probes));
        }
        if p.risk_lo <= target_gamma && target_gamma <= p.risk_hi {
            answer = Some(mid);
            break;
        }
        if p.risk > target_gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = answer.unwrap_or(0.5 * (lo + hi));
    Ok(finish(RadiusStatus::Converged, delta, probes))
}

/// True when some larger amplitude has a risk interval entirely above that of
/// a smaller amplitude.
fn is_inverted(probes: &[RadiusProbe]) -> bool {
    probes
        .iter()
        .any(|a| probes.iter().any(|b| b.delta > a.delta && b.risk_lo > a.risk_hi))
}

/// One grid point of a rate experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub alpha: f64,
    pub n_alpha2: f64,
    pub rho_hat: f64,
    pub censored: bool,
    pub status: RadiusStatus,
}

/// Least-squares fit of `log ρ̂` against `log nα²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    pub points: Vec<RatePoint>,
    pub points_used: usize,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub theoretical_exponent: f64,
    pub abs_error: f64,
}

/// Fits the log-log slope over converged points. Needs at least four.
pub fn fit_rate(points: &[RatePoint], theoretical_exponent: f64) -> Result<RateFit> {
    let used: Vec<&RatePoint> = points
        .iter()
        .filter(|p| !p.censored && p.status == RadiusStatus::Converged)
        .collect();
    if used.len() < 4 {
        return Err(Error::InsufficientGrid {
            needed: 4,
            got: used.len(),
        });
    }
    if used.windows(2).any(|w| w[1].n_alpha2 <= w[0].n_alpha2) {
        return Err(invalid("grid", "nα² must be strictly increasing"));
    }
    let xs: Vec<f64> = used.iter().map(|p| p.n_alpha2.ln()).collect();
    let ys: Vec<f64> = used.iter().map(|p| p.rho_hat.ln()).collect();
    let fit = ols(&xs, &ys);
    Ok(RateFit {
        points: points.to_vec(),
        points_used: used.len(),
        slope: fit.slope,
        slope_se: fit.slope_se,
        intercept: fit.intercept,
        theoretical_exponent,
        abs_error: (fit.slope - theoretical_exponent).abs(),
    })
}

/// Radius exponent for nulls with compact support and density bounded below,
/// `−2β/(4β+3)` (non-interactive) or `−β/(2β+1)` (interactive). Other
/// families carry extra bulk-set factors and return `None`.
pub fn theoretical_exponent(null: &NullDensity, mechanism: Mechanism, beta: f64) -> Option<f64> {
    match null.family() {
        Family::Uniform { .. } => Some(match mechanism {
            Mechanism::NonInteractive => -2.0 * beta / (4.0 * beta + 3.0),
            Mechanism::Interactive => -beta / (2.0 * beta + 1.0),
        }),
        _ => None,
    }
}

/// Default sample-size grid `n = 2^10, …, 2^17`.
pub fn default_grid() -> Vec<usize> {
    (10..=17).map(|k| 1usize << k).collect()
}

/// Estimates the radius at each `n` of the grid, keeping every other field of
/// `template`. Grid point `i` uses the seed `derive_seed(template.seed, [n])`.
pub fn rate_experiment(
    template: &ExperimentSpec,
    grid: &[usize],
    target_gamma: f64,
    signs: &SignPattern,
) -> Result<Vec<RatePoint>> {
    grid.iter()
        .map(|&n| {
            let mut spec = template.clone();
            spec.config.n = n;
            spec.seed = derive_seed(template.seed, &[n as u64]);
            let r = estimate_radius(&spec, target_gamma, signs)?;
            Ok(RatePoint {
                n,
                alpha: spec.config.alpha,
                n_alpha2: spec.config.n_alpha2(),
                rho_hat: r.l1_distance,
                censored: r.status == RadiusStatus::Censored,
                status: r.status,
            })
        })
        .collect()
}

/// Uniform draws from the first variates of a stream; used to check that
/// arm streams never overlap.
pub fn arm_variates(seed: u64, arm: u64, trial: u64, phase: u64, count: usize) -> Vec<f64> {
    let mut rng = stream(seed, &[arm, trial, phase]);
    (0..count).map(|_| uniform_open(&mut rng)).collect()
}
