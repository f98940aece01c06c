//! Privatization channels and their α-LDP audits.
//!
//! Three channels are provided:
//!
//! * kernel scores plus Laplace noise, one row of `N` reals per individual
//!   (non-interactive first half);
//! * randomized-response tail bits `±c_α` (tail test, both protocols);
//! * the two-round interactive protocol: bin indicators plus Laplace noise,
//!   then `±c_α τ` bits whose bias is the clipped first-round discrepancy of
//!   the holder's bin.
//!
//! Every function consumes the raw subsample it privatizes, so one sample can
//! never feed two channels.

use std::io::{Read, Write};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::SmoothingKernel;
use crate::rng::{coin, laplace};
use crate::tuning::{BulkPartition, Interval};

/// Privacy level and the constants derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub alpha: f64,
    /// `c_α = (e^α + 1)/(e^α − 1)`.
    pub c_alpha: f64,
    /// `z_α = e^{2α} − e^{−2α}`.
    pub z_alpha: f64,
    /// Clip width `τ = (nα²)^{-1/2}` of the interactive protocol.
    pub tau: Option<f64>,
}

impl PrivacyParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid(
                "alpha",
                format!("privacy level must lie in (0,1], got {alpha}"),
            ));
        }
        let e = alpha.exp();
        Ok(Self {
            alpha,
            c_alpha: (e + 1.0) / alpha.exp_m1(),
            z_alpha: (2.0 * alpha).exp() - (-2.0 * alpha).exp(),
            tau: None,
        })
    }

    /// Adds the interactive clip width for per-phase sample size `n`.
    pub fn with_sample_size(mut self, n: usize) -> Self {
        self.tau = Some((n as f64 * self.alpha * self.alpha).powf(-0.5));
        self
    }

    fn require_tau(&self) -> Result<f64> {
        self.tau
            .ok_or_else(|| invalid("tau", "interactive clip width not set; call with_sample_size"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BatchKind {
    KernelMatrix,
    TailBits,
    BinMatrix,
    ClippedBits,
}

impl BatchKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BatchKind::KernelMatrix => "KERNEL_MATRIX",
            BatchKind::TailBits => "TAIL_BITS",
            BatchKind::BinMatrix => "BIN_MATRIX",
            BatchKind::ClippedBits => "CLIPPED_BITS",
        }
    }

    fn code(&self) -> u8 {
        match self {
            BatchKind::KernelMatrix => 0,
            BatchKind::TailBits => 1,
            BatchKind::BinMatrix => 2,
            BatchKind::ClippedBits => 3,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        Ok(match c {
            0 => BatchKind::KernelMatrix,
            1 => BatchKind::TailBits,
            2 => BatchKind::BinMatrix,
            3 => BatchKind::ClippedBits,
            _ => return Err(Error::Parse(format!("unknown batch kind code {c}"))),
        })
    }

    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "KERNEL_MATRIX" => BatchKind::KernelMatrix,
            "TAIL_BITS" => BatchKind::TailBits,
            "BIN_MATRIX" => BatchKind::BinMatrix,
            "CLIPPED_BITS" => BatchKind::ClippedBits,
            _ => return Err(Error::Parse(format!("unknown batch kind `{s}`"))),
        })
    }
}

/// The released transcript of one channel run: an `n × N` matrix (row-major)
/// or a length-`n` vector (`cols == 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct PrivatizedBatch {
    kind: BatchKind,
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    params: PrivacyParams,
}

impl PrivatizedBatch {
    pub fn kind(&self) -> BatchKind {
        self.kind
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> &PrivacyParams {
        &self.params
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn expect(&self, kind: BatchKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::BatchKind {
                expected: kind.as_str(),
                got: self.kind.as_str(),
            })
        }
    }

    /// Assembles a batch from raw values, e.g. after deserialization.
    pub fn from_parts(
        kind: BatchKind,
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        params: PrivacyParams,
    ) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch(format!(
                "{} values for a {rows}x{cols} batch",
                values.len()
            )));
        }
        let vector = matches!(kind, BatchKind::TailBits | BatchKind::ClippedBits);
        if vector && cols != 1 {
            return Err(Error::LengthMismatch(format!(
                "{} batches have one column",
                kind.as_str()
            )));
        }
        Ok(Self {
            kind,
            rows,
            cols,
            values,
            params,
        })
    }

    /// CSV with header `i,j,value,kind`; vectors use `j = 0`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "value", "kind"])?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.write_record([
                    i.to_string(),
                    j.to_string(),
                    // `Display` for f64 prints the shortest string that round-trips.
                    self.values[i * self.cols + j].to_string(),
                    self.kind.as_str().to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, params: PrivacyParams) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        let mut kind: Option<BatchKind> = None;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 4 {
                return Err(Error::Parse(format!("expected 4 fields, got {}", rec.len())));
            }
            let num = |k: usize| rec[k].parse::<usize>().map_err(|e| Error::Parse(e.to_string()));
            let v: f64 = rec[2]
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))?;
            let k = BatchKind::parse(&rec[3])?;
            if *kind.get_or_insert(k) != k {
                return Err(Error::Parse("mixed batch kinds".into()));
            }
            cells.push((num(0)?, num(1)?, v));
        }
        let kind = kind.ok_or_else(|| Error::Parse("empty batch".into()))?;
        let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
        let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
        if cells.len() != rows * cols {
            return Err(Error::Parse("batch CSV is not a full grid".into()));
        }
        let mut values = vec![f64::NAN; rows * cols];
        for (i, j, v) in cells {
            values[i * cols + j] = v;
        }
        Self::from_parts(kind, rows, cols, values, params)
    }

    /// Column-major little-endian binary: magic `LDPB`, version byte, kind
    /// byte, rows and cols as `u64`, α and τ (NaN when unset) as `f64`, then
    /// the values column by column.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(b"LDPB")?;
        w.write_all(&[1, self.kind.code()])?;
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        w.write_all(&self.params.alpha.to_le_bytes())?;
        w.write_all(&self.params.tau.unwrap_or(f64::NAN).to_le_bytes())?;
        for j in 0..self.cols {
            for i in 0..self.rows {
                w.write_all(&self.values[i * self.cols + j].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 6];
        r.read_exact(&mut head)?;
        if &head[..4] != b"LDPB" || head[4] != 1 {
            return Err(Error::Parse("not an LDPB v1 batch".into()));
        }
        let kind = BatchKind::from_code(head[5])?;
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let rows = u64::from_le_bytes(next(&mut r)?) as usize;
        let cols = u64::from_le_bytes(next(&mut r)?) as usize;
        let alpha = f64::from_le_bytes(next(&mut r)?);
        let tau = f64::from_le_bytes(next(&mut r)?);
        let mut params = PrivacyParams::new(alpha)?;
        params.tau = (!tau.is_nan()).then_some(tau);
        let mut values = vec![0.0; rows * cols];
        for j in 0..cols {
            for i in 0..rows {
                values[i * cols + j] = f64::from_le_bytes(next(&mut r)?);
            }
        }
        Self::from_parts(kind, rows, cols, values, params)
    }
}

/// Laplace scale `2‖ψ‖_∞/(αh)` of the kernel channel.
pub fn kernel_noise_scale(k: &SmoothingKernel, h: f64, p: &PrivacyParams) -> f64 {
    2.0 * k.sup_norm() / (p.alpha * h)
}

/// `Z_ij = ψ_h(x_j − X_i) + (2‖ψ‖_∞/(αh)) W_ij`, `W_ij` i.i.d. Laplace(1).
pub fn ni_kernel_privatize(
    x: Vec<f64>,
    part: &BulkPartition,
    k: &SmoothingKernel,
    p: &PrivacyParams,
    rng: &mut dyn RngCore,
) -> PrivatizedBatch {
    ni_kernel_privatize_with_noise(x, part, k, p, || laplace(rng))
}

/// [`ni_kernel_privatize`] with an explicit Laplace(1) source.
pub fn ni_kernel_privatize_with_noise<F: FnMut() -> f64>(
    x: Vec<f64>,
    part: &BulkPartition,
    k: &SmoothingKernel,
    p: &PrivacyParams,
    mut noise: F,
) -> PrivatizedBatch {
    let n_bins = part.n_bins();
    let h = part.h();
    let scale = kernel_noise_scale(k, h, p);
    let mut values = Vec::with_capacity(x.len() * n_bins);
    for &xi in &x {
        let hit = part.bin_of(xi);
        for j in 0..n_bins {
            // Only the holder's own bin can carry a kernel term.
            let signal = if hit == Some(j) {
                k.eval(((part.center(j) - xi) / h).clamp(-1.0, 1.0)) / h
            } else {
                0.0
            };
            values.push(signal + scale * noise());
        }
    }
    PrivatizedBatch {
        kind: BatchKind::KernelMatrix,
        rows: x.len(),
        cols: n_bins,
        values,
        params: *p,
    }
}

/// `P(Z = +c_α)` for the tail channel.
#[inline]
pub fn rr_tail_plus_prob(outside: bool, c_alpha: f64) -> f64 {
    0.5 * (1.0 + if outside { 1.0 / c_alpha } else { 0.0 })
}

/// `Z_i = ±c_α` with probabilities `½(1 ± 1{X_i ∉ B}/c_α)`.
pub fn rr_tail_privatize(x: Vec<f64>, b: &Interval, p: &PrivacyParams, rng: &mut dyn RngCore) -> PrivatizedBatch {
    let values = x
        .iter()
        .map(|&xi| {
            let plus = rr_tail_plus_prob(!b.contains(xi), p.c_alpha);
            if coin(rng, plus) {
                p.c_alpha
            } else {
                -p.c_alpha
            }
        })
        .collect();
    PrivatizedBatch {
        kind: BatchKind::TailBits,
        rows: x.len(),
        cols: 1,
        values,
        params: *p,
    }
}

/// `Z_ij = 1{X_i ∈ B_j} + (2/α) W_ij`.
pub fn int_bin_privatize(
    x: Vec<f64>,
    part: &BulkPartition,
    p: &PrivacyParams,
    rng: &mut dyn RngCore,
) -> PrivatizedBatch {
    int_bin_privatize_with_noise(x, part, p, || laplace(rng))
}

/// [`int_bin_privatize`] with an explicit Laplace(1) source.
pub fn int_bin_privatize_with_noise<F: FnMut() -> f64>(
    x: Vec<f64>,
    part: &BulkPartition,
    p: &PrivacyParams,
    mut noise: F,
) -> PrivatizedBatch {
    let n_bins = part.n_bins();
    let scale = 2.0 / p.alpha;
    let mut values = Vec::with_capacity(x.len() * n_bins);
    for &xi in &x {
        let hit = part.bin_of(xi);
        for j in 0..n_bins {
            let ind = if hit == Some(j) { 1.0 } else { 0.0 };
            values.push(ind + scale * noise());
        }
    }
    PrivatizedBatch {
        kind: BatchKind::BinMatrix,
        rows: x.len(),
        cols: n_bins,
        values,
        params: *p,
    }
}

/// Column means `p̂_j` of a bin matrix. Not clipped.
pub fn estimate_phat(batch: &PrivatizedBatch) -> Result<Vec<f64>> {
    batch.expect(BatchKind::BinMatrix)?;
    let mut sums = vec![0.0; batch.cols];
    for row in batch.values.chunks_exact(batch.cols) {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let n = batch.rows as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}

/// `[x]_{−τ}^{τ} = max{−τ, min(x, τ)}`.
#[inline]
pub fn clip(x: f64, tau: f64) -> f64 {
    x.min(tau).max(-tau)
}

/// `P(Z = +c_α τ)` in the second round for a holder whose bin has clipped
/// discrepancy `clipped`, or `None` for a holder outside `B`.
#[inline]
pub fn second_round_plus_prob(clipped: Option<f64>, c_alpha: f64, tau: f64) -> f64 {
    match clipped {
        Some(c) => 0.5 * (1.0 + c / (c_alpha * tau)),
        None => 0.5,
    }
}

/// Second interactive round: `Z_i ∈ {±c_α τ}` biased by `[p̂_j − p_0(j)]_{−τ}^{τ}`
/// for the bin `j` holding `X_i`, a fair coin outside `B`. Depends on the first
/// round only through `phat`.
pub fn int_second_round(
    x: Vec<f64>,
    part: &BulkPartition,
    phat: &[f64],
    p0: &[f64],
    p: &PrivacyParams,
    rng: &mut dyn RngCore,
) -> Result<PrivatizedBatch> {
    let n_bins = part.n_bins();
    if phat.len() != n_bins || p0.len() != n_bins {
        return Err(Error::LengthMismatch(format!(
            "phat has {}, p0 has {}, partition has {n_bins} bins",
            phat.len(),
            p0.len()
        )));
    }
    let tau = p.require_tau()?;
    let clipped: Vec<f64> = phat.iter().zip(p0).map(|(a, b)| clip(a - b, tau)).collect();
    let mag = p.c_alpha * tau;
    let values = x
        .iter()
        .map(|&xi| {
            let plus = second_round_plus_prob(part.bin_of(xi).map(|j| clipped[j]), p.c_alpha, tau);
            if coin(rng, plus) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    Ok(PrivatizedBatch {
        kind: BatchKind::ClippedBits,
        rows: x.len(),
        cols: 1,
        values,
        params: *p,
    })
}

/// Which randomized-response channel to audit.
#[derive(Debug, Clone, PartialEq)]
pub enum RrChannel {
    TailBits,
    /// Second interactive round with `n_bins` bins. The clip values are
    /// public and treated as adversarial: the audit ranges over a grid of
    /// `clip_grid` points in `[−τ, τ]` (endpoints included) for every bin.
    ClippedBits {
        n_bins: usize,
        clip_grid: usize,
    },
}

/// Exact worst-case likelihood ratio of a ±-valued channel, by enumeration
/// over both outputs and every pair of input classes `{B̄, B_1, …, B_N}`.
/// Fails if the ratio exceeds `e^α` by more than `1e-12`.
pub fn audit_rr(channel: &RrChannel, p: &PrivacyParams) -> Result<f64> {
    // Probability of the `+` output for each input class.
    let plus: Vec<f64> = match channel {
        RrChannel::TailBits => vec![rr_tail_plus_prob(true, p.c_alpha), rr_tail_plus_prob(false, p.c_alpha)],
        RrChannel::ClippedBits { n_bins, clip_grid } => {
            let tau = p.require_tau()?;
            let g = (*clip_grid).max(2);
            let mut probs = vec![second_round_plus_prob(None, p.c_alpha, tau)];
            // Every bin sees the same clip range, so one sweep covers all N classes.
            for _ in 0..(*n_bins).min(1) {
                for k in 0..g {
                    let c = -tau + 2.0 * tau * k as f64 / (g - 1) as f64;
                    probs.push(second_round_plus_prob(Some(clip(c, tau)), p.c_alpha, tau));
                }
            }
            probs
        }
    };
    let mut worst: f64 = 1.0;
    for &a in &plus {
        for &b in &plus {
            for (pa, pb) in [(a, b), (1.0 - a, 1.0 - b)] {
                if pb <= 0.0 {
                    if pa > 0.0 {
                        return Err(Error::PrivacyViolation {
                            ratio: f64::INFINITY,
                            bound: p.alpha.exp(),
                        });
                    }
                    continue;
                }
                worst = worst.max(pa / pb);
            }
        }
    }
    let bound = p.alpha.exp();
    if worst > bound + 1e-12 {
        return Err(Error::PrivacyViolation { ratio: worst, bound });
    }
    Ok(worst)
}

/// Worst-case Laplace density ratio `exp(Σ_j |s_j(y1) − s_j(y2)| / σ)` of the
/// kernel channel, where `s_j(y) = ψ_h(x_j − y)` on the holder's bin and
/// `σ = 2‖ψ‖_∞/(αh)`.
pub fn audit_laplace(y1: f64, y2: f64, part: &BulkPartition, k: &SmoothingKernel, p: &PrivacyParams) -> f64 {
    let h = part.h();
    let signal = |y: f64, j: usize| {
        if part.bin_of(y) == Some(j) {
            k.eval(((part.center(j) - y) / h).clamp(-1.0, 1.0)) / h
        } else {
            0.0
        }
    };
    let l1: f64 = (0..part.n_bins()).map(|j| (signal(y1, j) - signal(y2, j)).abs()).sum();
    (l1 / kernel_noise_scale(k, h, p)).exp()
}

/// The same ratio for the bin-indicator channel, with `σ = 2/α`.
pub fn audit_laplace_bins(y1: f64, y2: f64, part: &BulkPartition, p: &PrivacyParams) -> f64 {
    let ind = |y: f64, j: usize| -> f64 {
        if part.bin_of(y) == Some(j) {
            1.0
        } else {
            0.0
        }
    };
    let l1: f64 = (0..part.n_bins()).map(|j| (ind(y1, j) - ind(y2, j)).abs()).sum();
    (l1 * p.alpha / 2.0).exp()
}

/// Supremum of both Laplace ratios over all pairs of a grid covering `B`
/// and a margin around it.
pub fn audit_laplace_grid(part: &BulkPartition, k: &SmoothingKernel, p: &PrivacyParams, points: usize) -> (f64, f64) {
    let b = part.interval();
    let pad = 0.1 * b.len();
    let pts: Vec<f64> = (0..points)
        .map(|i| b.lo() - pad + (b.len() + 2.0 * pad) * i as f64 / (points - 1) as f64)
        .chain(part.centers().iter().copied())
        .chain((0..part.n_bins()).flat_map(|j| [part.bin(j).lo(), part.bin(j).hi()]))
        .collect();
    let mut worst_kernel: f64 = 1.0;
    let mut worst_bins: f64 = 1.0;
    for &y1 in &pts {
        for &y2 in &pts {
            worst_kernel = worst_kernel.max(audit_laplace(y1, y2, part, k, p));
            worst_bins = worst_bins.max(audit_laplace_bins(y1, y2, part, p));
        }
    }
    (worst_kernel, worst_bins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::{Density, NullDensity};
    use crate::kernels::boxcar;
    use crate::numeric::mean_var;
    use crate::rng::stream;
    use crate::tuning::partition;
    use std::f64::consts::LN_2;

    fn unit_part(h: f64) -> BulkPartition {
        partition(Interval::new(0.0, 1.0).unwrap(), h).unwrap()
    }

    #[test]
    fn params_constants() {
        for alpha in [1e-3, 0.1, 0.5, 1.0] {
            let p = PrivacyParams::new(alpha).unwrap();
            assert!(p.c_alpha > 1.0);
            assert!((p.c_alpha * alpha.exp_m1() - (alpha.exp() + 1.0)).abs() < 1e-12 * p.c_alpha.max(1.0));
            assert!(p.z_alpha > 0.0);
        }
        let p = PrivacyParams::new(LN_2).unwrap();
        assert!((p.c_alpha - 3.0).abs() < 1e-14);
        assert!(PrivacyParams::new(0.0).is_err());
        assert!(PrivacyParams::new(1.5).is_err());
        let p = PrivacyParams::new(0.5).unwrap().with_sample_size(2500);
        assert!((p.tau.unwrap() - 625f64.powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn kernel_channel_without_noise() {
        let part = unit_part(0.05);
        let p = PrivacyParams::new(0.5).unwrap();
        let x = vec![part.center(2), 2.0];
        let batch = ni_kernel_privatize_with_noise(x, &part, &boxcar(), &p, || 0.0);
        let row = batch.row(0);
        assert!((row[2] - 10.0).abs() < 1e-12);
        assert!(row.iter().enumerate().all(|(j, &v)| j == 2 || v == 0.0));
        assert!(batch.row(1).iter().all(|&v| v == 0.0));
        assert!((kernel_noise_scale(&boxcar(), 0.1, &p) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_channel_at_most_one_column() {
        let part = unit_part(0.1);
        let p = PrivacyParams::new(0.5).unwrap();
        let x: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
        let batch = ni_kernel_privatize_with_noise(x, &part, &boxcar(), &p, || 0.0);
        for i in 0..batch.rows() {
            assert_eq!(batch.row(i).iter().filter(|&&v| v != 0.0).count(), 1);
        }
    }

    #[test]
    fn kernel_channel_noise_variance_and_mean() {
        let part = unit_part(0.1);
        let p = PrivacyParams::new(0.5).unwrap();
        let k = boxcar();
        let n = 100_000;
        let mut rng = stream(2, &[]);
        let x = NullDensity::uniform(0.0, 1.0).unwrap().sample(n, &mut rng).unwrap();
        let clean = ni_kernel_privatize_with_noise(x.clone(), &part, &k, &p, || 0.0);
        let batch = ni_kernel_privatize(x, &part, &k, &p, &mut rng);
        let j = 3;
        let noise: Vec<f64> = (0..n).map(|i| batch.row(i)[j] - clean.row(i)[j]).collect();
        let (_, v) = mean_var(&noise);
        let expected = 2.0 * kernel_noise_scale(&k, 0.1, &p).powi(2);
        assert!((v / expected - 1.0).abs() < 0.05, "{v} vs {expected}");
        let col: Vec<f64> = (0..n).map(|i| batch.row(i)[j]).collect();
        let (m, var) = mean_var(&col);
        assert!((m - 1.0).abs() < 3.0 * (var / n as f64).sqrt(), "{m}");
    }

    #[test]
    fn tail_bits_values_and_mean() {
        let p = PrivacyParams::new(0.5).unwrap();
        let b = Interval::new(0.0, 4f64.ln()).unwrap();
        let e = NullDensity::exponential(1.0).unwrap();
        let mut rng = stream(4, &[]);
        let n = 100_000;
        let x = e.sample(n, &mut rng).unwrap();
        let batch = rr_tail_privatize(x, &b, &p, &mut rng);
        assert!(batch.values().iter().all(|&v| v == p.c_alpha || v == -p.c_alpha));
        let (m, _) = mean_var(batch.values());
        assert!((m - 0.25).abs() < 3.0 * p.c_alpha / (n as f64).sqrt(), "{m}");
    }

    #[test]
    fn rr_probabilities() {
        let p = PrivacyParams::new(LN_2).unwrap();
        assert!((rr_tail_plus_prob(true, p.c_alpha) - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(rr_tail_plus_prob(false, p.c_alpha), 0.5);
        let tau = 0.01;
        assert!((second_round_plus_prob(Some(tau), p.c_alpha, tau) - 2.0 / 3.0).abs() < 1e-14);
        assert_eq!(second_round_plus_prob(None, p.c_alpha, tau), 0.5);
        assert_eq!(second_round_plus_prob(Some(0.0), p.c_alpha, tau), 0.5);
    }

    #[test]
    fn bin_channel_without_noise() {
        let part = unit_part(1.0 / 6.0);
        assert_eq!(part.n_bins(), 3);
        let p = PrivacyParams::new(0.5).unwrap();
        let batch = int_bin_privatize_with_noise(vec![0.5], &part, &p, || 0.0);
        assert_eq!(batch.row(0), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn phat_is_column_mean() {
        let p = PrivacyParams::new(0.5).unwrap();
        let b = PrivatizedBatch::from_parts(BatchKind::BinMatrix, 2, 1, vec![0.4, 0.6], p).unwrap();
        assert!((estimate_phat(&b).unwrap()[0] - 0.5).abs() < 1e-15);
        let z = PrivatizedBatch::from_parts(BatchKind::BinMatrix, 3, 2, vec![0.0; 6], p).unwrap();
        assert_eq!(estimate_phat(&z).unwrap(), vec![0.0, 0.0]);
        let t = PrivatizedBatch::from_parts(BatchKind::TailBits, 2, 1, vec![1.0, 1.0], p).unwrap();
        assert!(estimate_phat(&t).is_err());
    }

    #[test]
    fn phat_is_unbiased() {
        let part = unit_part(0.125);
        let p = PrivacyParams::new(0.5).unwrap();
        let n = 100_000;
        let mut rng = stream(8, &[]);
        let d = NullDensity::beta(2.0, 3.0).unwrap();
        let x = d.sample(n, &mut rng).unwrap();
        let batch = int_bin_privatize(x, &part, &p, &mut rng);
        let phat = estimate_phat(&batch).unwrap();
        for j in 0..part.n_bins() {
            let bin = part.bin(j);
            let pj = d.mass(bin.lo(), bin.hi());
            let col: Vec<f64> = (0..n).map(|i| batch.row(i)[j]).collect();
            let (_, var) = mean_var(&col);
            assert!((phat[j] - pj).abs() < 3.0 * (var / n as f64).sqrt(), "bin {j}");
        }
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip(0.5, 0.2), 0.2);
        assert_eq!(clip(-0.5, 0.2), -0.2);
        assert_eq!(clip(0.1, 0.2), 0.1);
    }

    #[test]
    fn second_round_values_and_fair_coin() {
        let part = unit_part(0.0625);
        let p = PrivacyParams::new(0.5).unwrap().with_sample_size(1000);
        let tau = p.tau.unwrap();
        let p0 = vec![0.125; 8];
        let mut rng = stream(9, &[]);
        let x = NullDensity::uniform(0.0, 1.0)
            .unwrap()
            .sample(50_000, &mut rng)
            .unwrap();
        let batch = int_second_round(x, &part, &p0, &p0, &p, &mut rng).unwrap();
        let mag = p.c_alpha * tau;
        assert!(batch.values().iter().all(|&v| v == mag || v == -mag));
        let (m, _) = mean_var(batch.values());
        assert!(m.abs() < 3.0 * mag / (50_000f64).sqrt());
        assert!(int_second_round(vec![0.1], &part, &p0[..3], &p0, &p, &mut rng).is_err());
        let no_tau = PrivacyParams::new(0.5).unwrap();
        assert!(int_second_round(vec![0.1], &part, &p0, &p0, &no_tau, &mut rng).is_err());
    }

    #[test]
    fn second_round_law_depends_only_on_phat() {
        let part = unit_part(0.0625);
        let p = PrivacyParams::new(0.5).unwrap().with_sample_size(400);
        let d = NullDensity::uniform(0.0, 1.0).unwrap();
        let mut rng = stream(12, &[]);
        let first = d.sample(400, &mut rng).unwrap();
        let mut permuted = first.clone();
        permuted.reverse();
        let phat_a = estimate_phat(&int_bin_privatize_with_noise(first, &part, &p, || 0.0)).unwrap();
        let phat_b = estimate_phat(&int_bin_privatize_with_noise(permuted, &part, &p, || 0.0)).unwrap();
        assert_eq!(phat_a, phat_b);
        let second = d.sample(300, &mut rng).unwrap();
        let p0 = vec![0.125; 8];
        let a = int_second_round(second.clone(), &part, &phat_a, &p0, &p, &mut stream(1, &[2])).unwrap();
        let b = int_second_round(second, &part, &phat_b, &p0, &p, &mut stream(1, &[2])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn audits() {
        let p = PrivacyParams::new(LN_2).unwrap().with_sample_size(100);
        // The -c output binds: (1/2) / (1/(e^a + 1)) = 3/2, above the +c ratio 4/3.
        assert!((audit_rr(&RrChannel::TailBits, &p).unwrap() - 1.5).abs() < 1e-12);
        let r = audit_rr(
            &RrChannel::ClippedBits {
                n_bins: 5,
                clip_grid: 11,
            },
            &p,
        )
        .unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let small = PrivacyParams::new(0.01).unwrap().with_sample_size(100);
        assert!(
            audit_rr(
                &RrChannel::ClippedBits {
                    n_bins: 3,
                    clip_grid: 101
                },
                &small
            )
            .unwrap()
                <= 0.01f64.exp() + 1e-12
        );
    }

    #[test]
    fn laplace_audit_examples() {
        let part = unit_part(0.1);
        let p = PrivacyParams::new(0.5).unwrap();
        let k = boxcar();
        assert_eq!(audit_laplace(0.3, 0.3, &part, &k, &p), 1.0);
        let r = audit_laplace(part.center(4), 2.0, &part, &k, &p);
        assert!((r - 0.25f64.exp()).abs() < 1e-12);
        let (gk, gb) = audit_laplace_grid(&part, &k, &p, 301);
        assert!(gk <= 0.5f64.exp() + 1e-12);
        assert!(gb <= 0.5f64.exp() + 1e-12);
    }

    #[test]
    fn batches_are_deterministic() {
        let part = unit_part(0.1);
        let p = PrivacyParams::new(0.5).unwrap();
        let x = vec![0.1, 0.5, 0.77];
        let a = ni_kernel_privatize(x.clone(), &part, &boxcar(), &p, &mut stream(5, &[1]));
        let b = ni_kernel_privatize(x, &part, &boxcar(), &p, &mut stream(5, &[1]));
        assert_eq!(a, b);
    }

    #[test]
    fn serialization_round_trips() {
        let part = unit_part(0.1);
        let p = PrivacyParams::new(0.5).unwrap();
        let batch = ni_kernel_privatize(vec![0.1, 0.5, 0.77, 0.2], &part, &boxcar(), &p, &mut stream(6, &[]));
        let mut buf = Vec::new();
        batch.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"i,j,value,kind\n"));
        let back = PrivatizedBatch::read_csv(&buf[..], p).unwrap();
        assert_eq!(back, batch);
        let mut bin = Vec::new();
        batch.write_binary(&mut bin).unwrap();
        assert_eq!(PrivatizedBatch::read_binary(&bin[..]).unwrap(), batch);
    }
}
