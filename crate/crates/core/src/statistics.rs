//! Test statistics, thresholds, the decision rule and Monte-Carlo moment
//! oracles for each statistic.

use serde::Serialize;

use crate::densities::{Density, NullDensity};
use crate::error::{Error, Result};
use crate::kernels::SmoothingKernel;
use crate::mechanisms::{
    clip, estimate_phat, int_bin_privatize, int_second_round, ni_kernel_privatize, rr_tail_privatize, BatchKind,
    PrivacyParams, PrivatizedBatch,
};
use crate::numeric::{integrate_piecewise, mean_var};
use crate::parallel::try_map_trials;
use crate::rng::stream;
use crate::tuning::{BulkPartition, Interval, Mechanism, TestConfig};

/// Degenerate U-statistic
/// `S_B = Σ_j 1/(n(n−1)) Σ_{i≠k} (Z_ij − f_0(x_j))(Z_kj − f_0(x_j))`,
/// computed column by column as `((Σa)² − Σa²)/(n(n−1))`.
pub fn stat_s(batch: &PrivatizedBatch, f0_at_centers: &[f64]) -> Result<f64> {
    batch.expect(BatchKind::KernelMatrix)?;
    let (n, cols) = (batch.rows(), batch.cols());
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if f0_at_centers.len() != cols {
        return Err(Error::LengthMismatch(format!(
            "{} null values for {cols} columns",
            f0_at_centers.len()
        )));
    }
    let mut sum = vec![0.0; cols];
    let mut sum_sq = vec![0.0; cols];
    for row in batch.values().chunks_exact(cols) {
        for j in 0..cols {
            let a = row[j] - f0_at_centers[j];
            sum[j] += a;
            sum_sq[j] += a * a;
        }
    }
    let pairs = n as f64 * (n as f64 - 1.0);
    Ok(sum.iter().zip(&sum_sq).map(|(s, q)| (s * s - q) / pairs).sum())
}

/// `T_B = (1/n) Σ Z_i − ∫_{B̄} f_0`.
pub fn stat_t(batch: &PrivatizedBatch, tail0: f64) -> Result<f64> {
    batch.expect(BatchKind::TailBits)?;
    if batch.rows() == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(batch.values().iter().sum::<f64>() / batch.rows() as f64 - tail0)
}

/// `D_B = (1/n) Σ Z_i − Σ_j p_0(j) [p̂_j − p_0(j)]_{−τ}^{τ}`.
pub fn stat_d(batch: &PrivatizedBatch, phat: &[f64], p0: &[f64], tau: f64) -> Result<f64> {
    batch.expect(BatchKind::ClippedBits)?;
    if phat.len() != p0.len() {
        return Err(Error::LengthMismatch(format!(
            "phat has {}, p0 has {}",
            phat.len(),
            p0.len()
        )));
    }
    if batch.rows() == 0 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mean = batch.values().iter().sum::<f64>() / batch.rows() as f64;
    let correction: f64 = phat.iter().zip(p0).map(|(p, q)| q * clip(p - q, tau)).sum();
    Ok(mean - correction)
}

/// Null bin masses `p_0(j) = ∫_{B_j} f_0`.
pub fn bin_masses(d: &dyn Density, part: &BulkPartition) -> Vec<f64> {
    (0..part.n_bins())
        .map(|j| {
            let b = part.bin(j);
            d.mass(b.lo(), b.hi())
        })
        .collect()
}

/// `t_2 = √(20/(nα²γ))`, shared by both protocols.
fn tail_threshold(config: &TestConfig) -> f64 {
    (20.0 / (config.n_alpha2() * config.gamma)).sqrt()
}

/// `t_1 = (3/2) L_0² C_β² N h^{2β} + 196 ‖ψ‖_∞² √N / (γ nα² h²)` and `t_2`.
pub fn thresholds_ni(config: &TestConfig, part: &BulkPartition, k: &SmoothingKernel, l0: f64) -> (f64, f64) {
    let n_bins = part.n_bins() as f64;
    let h = part.h();
    let beta = config.beta;
    let cb = k.c_beta(beta);
    let bias = 1.5 * l0 * l0 * cb * cb * n_bins * h.powf(2.0 * beta);
    let spread = 196.0 * k.sup_norm().powi(2) * n_bins.sqrt() / (config.gamma * config.n_alpha2() * h * h);
    (bias + spread, tail_threshold(config))
}

/// `t_1 = 2√5/(nα²√γ)` and `t_2`.
pub fn thresholds_int(config: &TestConfig) -> (f64, f64) {
    let t1 = 2.0 * 5f64.sqrt() / (config.n_alpha2() * config.gamma.sqrt());
    (t1, tail_threshold(config))
}

/// The result of one test run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestOutcome {
    pub mechanism: Mechanism,
    /// `S_B` or `D_B`.
    pub stat_main: f64,
    /// `T_B`.
    pub stat_tail: f64,
    pub t1: f64,
    pub t2: f64,
    pub reject: bool,
}

/// Rejects iff `stat_main ≥ t1` or `stat_tail ≥ t2`.
pub fn decide(mechanism: Mechanism, stat_main: f64, stat_tail: f64, t1: f64, t2: f64) -> TestOutcome {
    TestOutcome {
        mechanism,
        stat_main,
        stat_tail,
        t1,
        t2,
        reject: stat_main >= t1 || stat_tail >= t2,
    }
}

/// One comparison made by a moment oracle. `margin = rhs − lhs`; the check
/// passes when the margin is non-negative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passed: bool,
}

impl MomentCheck {
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            passed: lhs <= rhs,
        }
    }
}

/// Empirical moments of a statistic next to their theoretical values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub statistic: String,
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    pub empirical_mean: f64,
    pub mean_se: f64,
    pub empirical_var: f64,
    pub var_se: f64,
    pub theoretical_mean: f64,
    /// Exact variance, when known in closed form.
    pub theoretical_var: Option<f64>,
    /// Upper bound on the variance.
    pub theoretical_var_bound: Option<f64>,
    /// Clipped discrepancy `D_τ(f)` (interactive statistic only).
    pub d_tau: Option<f64>,
    pub checks: Vec<MomentCheck>,
    pub all_pass: bool,
}

struct Summary {
    mean: f64,
    mean_se: f64,
    var: f64,
    var_se: f64,
}

fn summarize(xs: &[f64]) -> Summary {
    let r = xs.len() as f64;
    let (mean, var) = mean_var(xs);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / r;
    Summary {
        mean,
        mean_se: (var / r).sqrt(),
        var,
        var_se: ((m4 - var * var).max(0.0) / r).sqrt(),
    }
}

#[allow(clippy::too_many_arguments)]
fn report(
    statistic: &str,
    config: &TestConfig,
    reps: usize,
    s: &Summary,
    theoretical_mean: f64,
    theoretical_var: Option<f64>,
    theoretical_var_bound: Option<f64>,
    d_tau: Option<f64>,
    checks: Vec<MomentCheck>,
) -> MomentReport {
    let all_pass = checks.iter().all(|c| c.passed);
    MomentReport {
        statistic: statistic.to_string(),
        n: config.n,
        alpha: config.alpha,
        reps,
        empirical_mean: s.mean,
        mean_se: s.mean_se,
        empirical_var: s.var,
        var_se: s.var_se,
        theoretical_mean,
        theoretical_var,
        theoretical_var_bound,
        d_tau,
        checks,
        all_pass,
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: reps });
    }
    Ok(())
}

/// `[ψ_h ∗ f](x_j)` restricted to bin `j`, by quadrature.
pub fn smoothed_at_center(f: &dyn Density, part: &BulkPartition, k: &SmoothingKernel, j: usize) -> f64 {
    let h = part.h();
    let c = part.center(j);
    let bin = part.bin(j);
    integrate_piecewise(|y| k.eval((c - y) / h) / h * f.pdf(y), bin.lo(), bin.hi(), &[c], 1e-13)
}

/// Mean and variance of `S_B` under `f`: `E[S_B] = Σ_j ([ψ_h∗f](x_j) − f_0(x_j))²`
/// and `Var(S_B) ≤ 36‖ψ‖²/(nα²h²) Σ_j(…)² + 164‖ψ‖⁴N/(n(n−1)α⁴h⁴)`.
pub fn moment_oracle_s(
    f: &dyn Density,
    f0: &NullDensity,
    part: &BulkPartition,
    k: &SmoothingKernel,
    config: &TestConfig,
    reps: usize,
    seed: u64,
) -> Result<MomentReport> {
    check_reps(reps)?;
    let p = PrivacyParams::new(config.alpha)?;
    let f0_c: Vec<f64> = part.centers().iter().map(|&x| f0.pdf(x)).collect();
    let theo: f64 = (0..part.n_bins())
        .map(|j| (smoothed_at_center(f, part, k, j) - f0_c[j]).powi(2))
        .sum();
    let (n, h, a2) = (config.n as f64, part.h(), config.alpha * config.alpha);
    let psi2 = k.sup_norm().powi(2);
    let bound = 36.0 * psi2 / (n * a2 * h * h) * theo
        + 164.0 * psi2 * psi2 * part.n_bins() as f64 / (n * (n - 1.0) * a2 * a2 * h.powi(4));
    let draws = try_map_trials(reps, |r| -> Result<f64> {
        let mut rng = stream(seed, &[r as u64]);
        let x = f.sample(config.n, &mut rng)?;
        stat_s(&ni_kernel_privatize(x, part, k, &p, &mut rng), &f0_c)
    })?;
    let s = summarize(&draws);
    let checks = vec![
        MomentCheck::le(
            "mean: |empirical - theoretical| <= 3 SE",
            (s.mean - theo).abs(),
            3.0 * s.mean_se,
        ),
        MomentCheck::le(
            "variance: empirical <= bound (1 + 3 relative SE)",
            s.var,
            bound * (1.0 + 3.0 * s.var_se / s.var),
        ),
    ];
    Ok(report("S", config, reps, &s, theo, None, Some(bound), None, checks))
}

/// Mean and variance of `T_B` under `f`: `E[T_B] = ∫_{B̄}(f − f_0)` and
/// `Var(T_B) = (c_α² − (∫_{B̄} f)²)/n`, both exact.
pub fn moment_oracle_t(
    f: &dyn Density,
    f0: &NullDensity,
    b: &Interval,
    config: &TestConfig,
    reps: usize,
    seed: u64,
) -> Result<MomentReport> {
    check_reps(reps)?;
    let p = PrivacyParams::new(config.alpha)?;
    let tail0 = f0.tail_mass(b);
    let tail_f = 1.0 - f.mass(b.lo(), b.hi());
    let theo_mean = tail_f - tail0;
    let theo_var = (p.c_alpha * p.c_alpha - tail_f * tail_f) / config.n as f64;
    let draws = try_map_trials(reps, |r| -> Result<f64> {
        let mut rng = stream(seed, &[r as u64]);
        let x = f.sample(config.n, &mut rng)?;
        stat_t(&rr_tail_privatize(x, b, &p, &mut rng), tail0)
    })?;
    let s = summarize(&draws);
    let checks = vec![
        MomentCheck::le(
            "mean: |empirical - theoretical| <= 3 SE",
            (s.mean - theo_mean).abs(),
            3.0 * s.mean_se,
        ),
        MomentCheck::le(
            "variance: |empirical - theoretical| <= 3 SE",
            (s.var - theo_var).abs(),
            3.0 * s.var_se,
        ),
    ];
    Ok(report(
        "T",
        config,
        reps,
        &s,
        theo_mean,
        Some(theo_var),
        None,
        None,
        checks,
    ))
}

/// `D_τ(f) = Σ_j |p(j) − p_0(j)| min{|p(j) − p_0(j)|, τ}`.
pub fn d_tau(p: &[f64], p0: &[f64], tau: f64) -> f64 {
    p.iter()
        .zip(p0)
        .map(|(a, b)| {
            let d = (a - b).abs();
            d * d.min(tau)
        })
        .sum()
}

/// Mean and variance of `D_B` under `f`.
///
/// Checks the lower bound `E[D_B] ≥ D_τ(f)/6 − 6τ/√n`, the variance bound
/// `Var(D_B) ≤ 5/(nα²)² + 67 D_τ(f)/(nα²)`, and the exact mean
/// `Σ_j (p(j) − p_0(j)) E[clip_j]`, with `E[clip_j]` estimated from first-round
/// replays on an independent stream. Under the null the mean must also be
/// zero.
pub fn moment_oracle_d(
    f: &dyn Density,
    f0: &NullDensity,
    part: &BulkPartition,
    config: &TestConfig,
    reps: usize,
    seed: u64,
) -> Result<MomentReport> {
    check_reps(reps)?;
    let p = PrivacyParams::new(config.alpha)?.with_sample_size(config.n);
    let tau = p.tau.expect("tau set above");
    let p0 = bin_masses(f0, part);
    let pf = bin_masses(f, part);
    let dt = d_tau(&pf, &p0, tau);
    let na2 = config.n_alpha2();
    let lower = dt / 6.0 - 6.0 * tau / (config.n as f64).sqrt();
    let bound = 5.0 / (na2 * na2) + 67.0 * dt / na2;

    let draws = try_map_trials(reps, |r| -> Result<f64> {
        let mut rng = stream(seed, &[0, r as u64]);
        let first = f.sample(config.n, &mut rng)?;
        let phat = estimate_phat(&int_bin_privatize(first, part, &p, &mut rng))?;
        let second = f.sample(config.n, &mut rng)?;
        let z = int_second_round(second, part, &phat, &p0, &p, &mut rng)?;
        stat_d(&z, &phat, &p0, tau)
    })?;
    let replay = try_map_trials(reps, |r| -> Result<f64> {
        let mut rng = stream(seed, &[1, r as u64]);
        let first = f.sample(config.n, &mut rng)?;
        let phat = estimate_phat(&int_bin_privatize(first, part, &p, &mut rng))?;
        Ok(phat
            .iter()
            .zip(&p0)
            .zip(&pf)
            .map(|((ph, q), pj)| (pj - q) * clip(ph - q, tau))
            .sum())
    })?;
    let s = summarize(&draws);
    let oracle = summarize(&replay);
    let joint_se = (s.mean_se.powi(2) + oracle.mean_se.powi(2)).sqrt();
    let mut checks = vec![
        MomentCheck::le("mean: lower bound <= empirical + 3 SE", lower, s.mean + 3.0 * s.mean_se),
        MomentCheck::le(
            "variance: empirical <= bound (1 + 3 relative SE)",
            s.var,
            bound * (1.0 + 3.0 * s.var_se / s.var),
        ),
        MomentCheck::le(
            "mean: |empirical - replay oracle| <= 3 joint SE",
            (s.mean - oracle.mean).abs(),
            3.0 * joint_se,
        ),
    ];
    if dt == 0.0 {
        checks.push(MomentCheck::le(
            "null mean: |empirical| <= 3 SE",
            s.mean.abs(),
            3.0 * s.mean_se,
        ));
    }
    let theo_mean = if dt == 0.0 { 0.0 } else { oracle.mean };
    Ok(report(
        "D",
        config,
        reps,
        &s,
        theo_mean,
        None,
        Some(bound),
        Some(dt),
        checks,
    ))
}
