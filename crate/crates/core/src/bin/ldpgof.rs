//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check fails, 2 on usage errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ldpgof::densities::Density;
use ldpgof::harness::output::{write_json, write_rates_csv, write_risk_csv, RiskRow};
use ldpgof::harness::{
    config, default_grid, estimate_radius_with, estimate_risk_with, fit_rate, rate_experiment, theoretical_exponent,
    AltSpec, DeltaSpec, ExperimentSpec, Pipeline, RadiusStatus, SignPattern, ThresholdMode, DEFAULT_CALIBRATION_SIMS,
};
use ldpgof::kernels::{boxcar, triangular, SmoothingKernel};
use ldpgof::mechanisms::{
    audit_laplace_grid, audit_rr, estimate_phat, int_bin_privatize, int_second_round, ni_kernel_privatize,
    rr_tail_privatize, PrivacyParams, PrivatizedBatch, RrChannel,
};
use ldpgof::rng::stream;
use ldpgof::statistics::{bin_masses, moment_oracle_d, moment_oracle_s, moment_oracle_t, MomentReport};
use ldpgof::tuning::{partition, Interval, Mechanism, TestConfig};
use ldpgof::{Error, NullDensity};

#[derive(Parser)]
#[command(
    name = "ldpgof",
    version,
    about = "Goodness-of-fit testing under local differential privacy"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Privatize a sample through one channel and write the released batch.
    Privatize(PrivatizeArgs),
    /// Run the test once.
    Test(TrialArgs),
    /// Estimate type-I and type-II error rates.
    Risk(RiskArgs),
    /// Estimate the separation radius by bisection over the bump amplitude.
    Radius(RadiusArgs),
    /// Estimate radii over a sample-size grid and fit the rate exponent.
    Rates(RatesArgs),
    /// Worst-case likelihood ratios of every channel.
    Audit(AuditArgs),
    /// Compare empirical moments of the statistics with their theory.
    Moments(MomentsArgs),
}

#[derive(Args, Clone)]
struct Common {
    /// Key-value config file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Machine-readable result file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Clone)]
struct TestSetup {
    /// Null density, e.g. `uniform:0,1`, `normal`, `beta:2,3`, `exp:1`.
    #[arg(long, default_value = "uniform:0,1")]
    null: String,
    #[arg(long, default_value = "ni")]
    mechanism: String,
    /// Per-phase sample size.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Hölder bound of the alternative class.
    #[arg(long, default_value_t = 100.0)]
    l: f64,
    #[arg(long, default_value_t = 0.2)]
    gamma: f64,
    #[arg(long, value_enum, default_value_t = KernelChoice::Boxcar)]
    kernel: KernelChoice,
    /// Bandwidth constant.
    #[arg(long = "ch", visible_alias = "c-h", default_value_t = 1.0)]
    c_h: f64,
    /// Bulk set: `auto`, `full` or `interval:a,b`.
    #[arg(long, default_value = "auto")]
    bulk: String,
    /// Use null-quantile thresholds instead of the closed-form ones.
    #[arg(long)]
    calibrated: bool,
    #[arg(long, default_value_t = DEFAULT_CALIBRATION_SIMS)]
    calibration_sims: usize,
}

#[derive(Args, Clone)]
struct AltArgs {
    /// Bump amplitude δ of the alternative.
    #[arg(long, conflicts_with = "delta_frac")]
    delta: Option<f64>,
    /// Bump amplitude as a fraction of δ_max.
    #[arg(long)]
    delta_frac: Option<f64>,
    /// `alternating` or `random:<seed>`.
    #[arg(long, default_value = "alternating")]
    signs: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelChoice {
    Boxcar,
    Triangular,
}

impl KernelChoice {
    fn kernel(self) -> SmoothingKernel {
        match self {
            KernelChoice::Boxcar => boxcar(),
            KernelChoice::Triangular => triangular(),
        }
    }
}

#[derive(Args)]
struct TrialArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    setup: TestSetup,
    #[command(flatten)]
    alt: AltArgs,
    #[arg(long, default_value_t = 0)]
    trial: u64,
}

#[derive(Args)]
struct RiskArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    setup: TestSetup,
    #[command(flatten)]
    alt: AltArgs,
    #[arg(long, default_value_t = 500)]
    reps: usize,
}

#[derive(Args)]
struct RadiusArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    setup: TestSetup,
    #[arg(long, default_value = "alternating")]
    signs: String,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Target total risk; defaults to `--gamma`.
    #[arg(long)]
    target_gamma: Option<f64>,
}

#[derive(Args)]
struct RatesArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    setup: TestSetup,
    #[arg(long, default_value = "alternating")]
    signs: String,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Number of grid points `n = 2^10, 2^11, …`.
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long)]
    target_gamma: Option<f64>,
    /// Also write the fit as JSON here.
    #[arg(long)]
    fit_out: Option<PathBuf>,
    /// Fail when the fitted slope is further than this from the theoretical exponent.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value = "ni")]
    mechanism: String,
    /// Per-phase sample size, which sets the clip width.
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Number of bins of the audited partition of `[0, 1]`.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    #[arg(long, value_enum, default_value_t = KernelChoice::Boxcar)]
    kernel: KernelChoice,
    /// Grid points for the Laplace-channel sweep.
    #[arg(long, default_value_t = 201)]
    grid_points: usize,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    setup: TestSetup,
    #[command(flatten)]
    alt: AltArgs,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Channel {
    Kernel,
    Tail,
    Bins,
    Clipped,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

#[derive(Args)]
struct PrivatizeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    setup: TestSetup,
    #[arg(long, value_enum, default_value_t = Channel::Tail)]
    channel: Channel,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// File with one raw observation per line; otherwise the null is sampled.
    #[arg(long)]
    input: Option<PathBuf>,
}

/// Failures mapped to exit codes.
enum Failure {
    Usage(String),
    Check(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. }
            | Error::MalformedInterval { .. }
            | Error::UnknownDensity(_)
            | Error::DeltaTooLarge { .. }
            | Error::Parse(_) => Failure::Usage(e.to_string()),
            Error::PrivacyViolation { .. } => Failure::Check(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Moves `--config <path>` to the front of the subcommand's arguments,
/// expanded, so that later command-line flags override its values.
fn splice_config(argv: Vec<String>) -> std::result::Result<Vec<String>, Failure> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(arg) = it.next() {
        if arg == "--config" {
            path = Some(it.next().ok_or_else(|| usage("--config needs a path"))?);
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let pairs = config::read(Path::new(&path)).map_err(|e| usage(format!("config file {path}: {e}")))?;
    let at = rest.len().min(2);
    let mut out: Vec<String> = rest[..at].to_vec();
    out.extend(config::to_args(&pairs));
    out.extend_from_slice(&rest[at..]);
    Ok(out)
}

fn main() -> ExitCode {
    let argv = match splice_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(f) => return report(f),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Privatize(a) => privatize(a),
        Command::Test(a) => test(a),
        Command::Risk(a) => risk(a),
        Command::Radius(a) => radius(a),
        Command::Rates(a) => rates(a),
        Command::Audit(a) => audit(a),
        Command::Moments(a) => moments(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    match f {
        Failure::Usage(m) => {
            eprintln!("usage error: {m}");
            ExitCode::from(2)
        }
        Failure::Check(m) => {
            eprintln!("check failed: {m}");
            ExitCode::from(1)
        }
        Failure::Runtime(m) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn parse_mechanism(s: &str) -> std::result::Result<Mechanism, Failure> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn parse_null(s: &str) -> std::result::Result<NullDensity, Failure> {
    s.parse().map_err(|e: Error| usage(e.to_string()))
}

fn parse_signs(s: &str) -> std::result::Result<SignPattern, Failure> {
    if s == "alternating" {
        return Ok(SignPattern::Alternating);
    }
    s.strip_prefix("random:")
        .and_then(|v| v.parse().ok())
        .map(SignPattern::Random)
        .ok_or_else(|| {
            usage(format!(
                "unknown sign pattern `{s}` (expected alternating | random:<seed>)"
            ))
        })
}

fn parse_bulk(s: &str, null: &NullDensity) -> std::result::Result<Option<Interval>, Failure> {
    if s == "auto" {
        return Ok(None);
    }
    if s == "full" {
        let (lo, hi) = null.support();
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(usage(format!(
                "`--bulk full` needs a bounded support; {null} is unbounded"
            )));
        }
        return Ok(Some(Interval::new(lo, hi)?));
    }
    let (lo, hi) = s
        .strip_prefix("interval:")
        .and_then(|r| r.split_once(','))
        .ok_or_else(|| usage(format!("bulk set must be auto, full or interval:a,b, got `{s}`")))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad bulk lower end `{lo}`")))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| usage(format!("bad bulk upper end `{hi}`")))?;
    Ok(Some(Interval::new(lo, hi)?))
}

fn check_alpha(alpha: f64) -> Outcome {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(usage(format!("alpha must lie in (0,1], got {alpha}")))
    }
}

fn build_spec(
    setup: &TestSetup,
    seed: u64,
    reps: usize,
    alt: Option<&AltArgs>,
) -> std::result::Result<ExperimentSpec, Failure> {
    check_alpha(setup.alpha)?;
    if !(setup.gamma > 0.0 && setup.gamma < 1.0) {
        return Err(usage(format!("gamma must lie in (0,1), got {}", setup.gamma)));
    }
    let null = parse_null(&setup.null)?;
    let config = TestConfig {
        n: setup.n,
        alpha: setup.alpha,
        beta: setup.beta,
        l: setup.l,
        gamma: setup.gamma,
        mechanism: parse_mechanism(&setup.mechanism)?,
    };
    config.validate(Some(&null))?;
    let mut spec = ExperimentSpec::new(config, null);
    spec.seed = seed;
    spec.reps = reps;
    spec.kernel = setup.kernel.kernel();
    spec.c_h = setup.c_h;
    spec.bulk = parse_bulk(&setup.bulk, &spec.null)?;
    if setup.calibrated {
        spec.thresholds = ThresholdMode::Calibrated {
            sims: setup.calibration_sims,
        };
    }
    if let Some(alt) = alt {
        let delta = match (alt.delta, alt.delta_frac) {
            (Some(d), _) => Some(DeltaSpec::Absolute(d)),
            (None, Some(f)) => Some(DeltaSpec::FractionOfMax(f)),
            (None, None) => None,
        };
        if let Some(delta) = delta {
            spec.alt = AltSpec::Wave {
                delta,
                signs: parse_signs(&alt.signs)?,
            };
        }
    }
    Ok(spec)
}

fn out_path(common: &Common, default: &str) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn create(path: &Path) -> std::result::Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", path.display())))
}

fn save_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Outcome {
    let mut w = create(path)?;
    write_json(&mut w, value)?;
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))
}

fn privatize(a: PrivatizeArgs) -> Outcome {
    let spec = build_spec(&a.setup, a.common.seed, 1, None)?;
    let pipeline = Pipeline::new(spec)?;
    let config = pipeline.spec().config;
    let null = pipeline.spec().null;
    let mut rng = stream(a.common.seed, &[0]);
    let x = match &a.input {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| {
                    l.trim()
                        .parse::<f64>()
                        .map_err(|_| usage(format!("bad observation `{l}`")))
                })
                .collect::<std::result::Result<Vec<f64>, Failure>>()?
        }
        None => null.sample(config.n, &mut rng)?,
    };
    let params = PrivacyParams::new(config.alpha)?.with_sample_size(x.len());
    let part = pipeline.partition();
    let batch: PrivatizedBatch = match a.channel {
        Channel::Kernel => ni_kernel_privatize(x, part, &pipeline.spec().kernel, &params, &mut rng),
        Channel::Tail => rr_tail_privatize(x, pipeline.bulk(), &params, &mut rng),
        Channel::Bins => int_bin_privatize(x, part, &params, &mut rng),
        Channel::Clipped => {
            // The first round runs on an independent sample from the null.
            let mut first_rng = stream(a.common.seed, &[1]);
            let first = null.sample(x.len(), &mut first_rng)?;
            let phat = estimate_phat(&int_bin_privatize(first, part, &params, &mut first_rng))?;
            int_second_round(x, part, &phat, &bin_masses(&null, part), &params, &mut rng)?
        }
    };
    let (path, ext) = match a.format {
        Format::Csv => (out_path(&a.common, "ldpgof-batch.csv"), "csv"),
        Format::Binary => (out_path(&a.common, "ldpgof-batch.bin"), "binary"),
    };
    let mut w = create(&path)?;
    match a.format {
        Format::Csv => batch.write_csv(&mut w)?,
        Format::Binary => batch.write_binary(&mut w)?,
    }
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
    println!(
        "{} batch: {} rows x {} cols, bins {}, h {:.6}, written as {ext} to {}",
        batch.kind().as_str(),
        batch.rows(),
        batch.cols(),
        part.n_bins(),
        part.h(),
        path.display()
    );
    Ok(())
}

fn test(a: TrialArgs) -> Outcome {
    let spec = build_spec(&a.setup, a.common.seed, 1, Some(&a.alt))?;
    let pipeline = Pipeline::new(spec)?;
    let outcome = pipeline.run_trial(a.trial)?;
    save_json(&out_path(&a.common, "ldpgof-test.json"), &outcome)?;
    println!(
        "{} test on {}: main {:.6e} (t1 {:.6e}), tail {:.6e} (t2 {:.6e}) -> {}",
        outcome.mechanism,
        pipeline.spec().null,
        outcome.stat_main,
        outcome.t1,
        outcome.stat_tail,
        outcome.t2,
        if outcome.reject { "reject" } else { "accept" }
    );
    Ok(())
}

fn risk(a: RiskArgs) -> Outcome {
    let spec = build_spec(&a.setup, a.common.seed, a.reps, Some(&a.alt))?;
    let start = Instant::now();
    let pipeline = Pipeline::new(spec)?;
    let r = estimate_risk_with(&pipeline)?;
    let spec = pipeline.spec();
    let path = out_path(&a.common, "ldpgof-risk.csv");
    let mut w = create(&path)?;
    write_risk_csv(
        &mut w,
        &[RiskRow {
            config: &spec.config,
            null: spec.null.to_string(),
            seed: spec.seed,
            risk: &r,
        }],
    )?;
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
    println!(
        "type I {:.4} [{:.4}, {:.4}] over {} reps",
        r.type1.rate, r.type1.lo, r.type1.hi, r.reps
    );
    match r.type2 {
        Some(t) => println!(
            "type II {:.4} [{:.4}, {:.4}] at delta {:.6e} (L1 distance {:.6e}); risk {:.4}",
            t.rate,
            t.lo,
            t.hi,
            r.delta.unwrap_or_default(),
            r.l1_distance.unwrap_or_default(),
            r.risk.unwrap_or_default()
        ),
        None => println!("type II not applicable (no alternative)"),
    }
    println!("wrote {} in {:.1?}", path.display(), start.elapsed());
    Ok(())
}

fn radius(a: RadiusArgs) -> Outcome {
    let spec = build_spec(&a.setup, a.common.seed, a.reps, None)?;
    let target = a.target_gamma.unwrap_or(a.setup.gamma);
    let signs = parse_signs(&a.signs)?;
    let pipeline = Pipeline::new(spec)?;
    let r = estimate_radius_with(&pipeline, target, &signs)?;
    save_json(
        &out_path(&a.common, "ldpgof-radius.json"),
        &Labelled {
            label: "mechanism-specific separation estimate",
            estimate: &r,
        },
    )?;
    println!(
        "mechanism-specific separation estimate: L1 {:.6e} at delta {:.6e} (delta_max {:.6e}), {:?}, {} probes",
        r.l1_distance,
        r.delta,
        r.delta_max,
        r.status,
        r.probes.len()
    );
    match r.status {
        RadiusStatus::Inconclusive => Err(Failure::Check("risk was not monotone in delta".into())),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct Labelled<'a, T: Serialize> {
    label: &'static str,
    #[serde(flatten)]
    estimate: &'a T,
}

fn rates(a: RatesArgs) -> Outcome {
    let spec = build_spec(&a.setup, a.common.seed, a.reps, None)?;
    let target = a.target_gamma.unwrap_or(a.setup.gamma);
    let signs = parse_signs(&a.signs)?;
    if a.grid == 0 || a.grid > 12 {
        return Err(usage(format!("grid must have between 1 and 12 points, got {}", a.grid)));
    }
    let grid: Vec<usize> = default_grid()
        .into_iter()
        .chain((18..22).map(|k| 1usize << k))
        .take(a.grid)
        .collect();
    let start = Instant::now();
    let points = rate_experiment(&spec, &grid, target, &signs)?;
    let path = out_path(&a.common, "ldpgof-rates.csv");
    let mut w = create(&path)?;
    write_rates_csv(&mut w, &points)?;
    w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
    for p in &points {
        println!(
            "n {:>7}  n*alpha^2 {:>10.1}  rho_hat {:.6e}{}",
            p.n,
            p.n_alpha2,
            p.rho_hat,
            if p.censored { "  (censored)" } else { "" }
        );
    }
    println!("wrote {} in {:.1?}", path.display(), start.elapsed());
    let theory = theoretical_exponent(&spec.null, spec.config.mechanism, spec.config.beta);
    match fit_rate(&points, theory.unwrap_or(f64::NAN)) {
        Ok(fit) => {
            println!("fitted slope {:.4} ± {:.4}", fit.slope, fit.slope_se);
            if let Some(t) = theory {
                println!("theoretical exponent {t:.4}, |difference| {:.4}", fit.abs_error);
            }
            if let Some(p) = &a.fit_out {
                save_json(p, &fit)?;
            }
            match (a.tolerance, theory) {
                (Some(tol), Some(_)) if fit.abs_error > tol => Err(Failure::Check(format!(
                    "slope {:.4} is more than {tol} away from {:.4}",
                    fit.slope, fit.theoretical_exponent
                ))),
                _ => Ok(()),
            }
        }
        Err(e) => Err(Failure::Check(e.to_string())),
    }
}

#[derive(Serialize)]
struct AuditReport {
    alpha: f64,
    bound: f64,
    mechanism: Mechanism,
    tail_bits: f64,
    kernel_laplace: f64,
    bin_laplace: f64,
    clipped_bits: f64,
    all_within_bound: bool,
}

fn audit(a: AuditArgs) -> Outcome {
    check_alpha(a.alpha)?;
    let mechanism = parse_mechanism(&a.mechanism)?;
    if a.bins == 0 || a.grid_points < 2 || a.n < 1 {
        return Err(usage(
            "bins, grid-points and n must be positive (grid-points at least 2)",
        ));
    }
    let p = PrivacyParams::new(a.alpha)?.with_sample_size(a.n);
    let part = partition(Interval::new(0.0, 1.0)?, 0.5 / a.bins as f64)?;
    let tail = audit_rr(&RrChannel::TailBits, &p)?;
    let clipped = audit_rr(
        &RrChannel::ClippedBits {
            n_bins: part.n_bins(),
            clip_grid: 1001,
        },
        &p,
    )?;
    let (kernel, bins) = audit_laplace_grid(&part, &a.kernel.kernel(), &p, a.grid_points);
    let bound = a.alpha.exp();
    let report = AuditReport {
        alpha: a.alpha,
        bound,
        mechanism,
        tail_bits: tail,
        kernel_laplace: kernel,
        bin_laplace: bins,
        clipped_bits: clipped,
        all_within_bound: [tail, kernel, bins, clipped].iter().all(|&r| r <= bound + 1e-12),
    };
    save_json(&out_path(&a.common, "ldpgof-audit.json"), &report)?;
    println!("alpha {} (e^alpha = {bound:.12})", a.alpha);
    let ours = |m: Mechanism| if m == mechanism { "*" } else { " " };
    println!("  tail bits        {tail:.12}");
    println!("{} kernel Laplace   {kernel:.12}", ours(Mechanism::NonInteractive));
    println!("{} bin Laplace      {bins:.12}", ours(Mechanism::Interactive));
    println!("{} clipped bits     {clipped:.12}", ours(Mechanism::Interactive));
    if report.all_within_bound {
        Ok(())
    } else {
        Err(Failure::Check("a channel exceeds e^alpha".into()))
    }
}

fn moments(a: MomentsArgs) -> Outcome {
    let spec = build_spec(&a.setup, a.common.seed, a.reps, Some(&a.alt))?;
    let pipeline = Pipeline::new(spec)?;
    let spec = pipeline.spec();
    let config = spec.config;
    let f: &dyn Density = match pipeline.alternative() {
        Some(alt) => alt,
        None => &spec.null,
    };
    let seed = spec.seed;
    let main = match config.mechanism {
        Mechanism::NonInteractive => {
            moment_oracle_s(f, &spec.null, pipeline.partition(), &spec.kernel, &config, a.reps, seed)?
        }
        Mechanism::Interactive => moment_oracle_d(f, &spec.null, pipeline.partition(), &config, a.reps, seed)?,
    };
    let tail = moment_oracle_t(f, &spec.null, pipeline.bulk(), &config, a.reps, seed ^ 0x5EED)?;
    let reports: Vec<MomentReport> = vec![main, tail];
    save_json(&out_path(&a.common, "ldpgof-moments.json"), &reports)?;
    for r in &reports {
        println!(
            "{}: mean {:.6e} ± {:.2e} (theory {:.6e}), var {:.6e}",
            r.statistic, r.empirical_mean, r.mean_se, r.theoretical_mean, r.empirical_var
        );
        for c in &r.checks {
            println!(
                "  [{}] {} (margin {:.3e})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.margin
            );
        }
    }
    if reports.iter().all(|r| r.all_pass) {
        Ok(())
    } else {
        Err(Failure::Check("a moment check failed".into()))
    }
}
