//! Monte Carlo means and variances of S, T and D against their closed forms.

use ldpgof::harness::{AltSpec, ExperimentSpec};
use ldpgof::harness::{DeltaSpec, Pipeline, SignPattern};
use ldpgof::kernels::boxcar;
use ldpgof::statistics::{moment_oracle_d, moment_oracle_s, moment_oracle_t, MomentReport};
use ldpgof::tuning::{Interval, Mechanism, TestConfig};
use ldpgof::NullDensity;

fn show(r: &MomentReport) {
    println!(
        "{}: mean {:+.4e} ± {:.1e} (theory {:+.4e}), var {:.4e}",
        r.statistic, r.empirical_mean, r.mean_se, r.theoretical_mean, r.empirical_var
    );
    for c in &r.checks {
        println!("    {} {}", if c.passed { "ok  " } else { "FAIL" }, c.name);
    }
}

fn main() -> ldpgof::Result<()> {
    let mut config = TestConfig {
        n: 2000,
        alpha: 0.5,
        beta: 1.0,
        l: 100.0,
        gamma: 0.2,
        mechanism: Mechanism::NonInteractive,
    };
    let uniform = NullDensity::uniform(0.0, 1.0)?;
    let ni = Pipeline::new(ExperimentSpec::new(config, uniform))?;
    show(&moment_oracle_s(
        &uniform,
        &uniform,
        ni.partition(),
        &boxcar(),
        &config,
        1000,
        1,
    )?);

    let exp = NullDensity::exponential(1.0)?;
    let b = Interval::new(0.0, 4f64.ln())?;
    show(&moment_oracle_t(&exp, &exp, &b, &config, 1000, 2)?);

    config.mechanism = Mechanism::Interactive;
    let mut spec = ExperimentSpec::new(config, uniform);
    spec.alt = AltSpec::Wave {
        delta: DeltaSpec::FractionOfMax(0.8),
        signs: SignPattern::Alternating,
    };
    let int = Pipeline::new(spec)?;
    let alt = int.alternative().expect("wave alternative");
    show(&moment_oracle_d(alt, &uniform, int.partition(), &config, 1000, 3)?);
    Ok(())
}
