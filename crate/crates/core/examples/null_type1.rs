//! Empirical type-I error of both tests under a uniform null.

use ldpgof::harness::{estimate_risk, ExperimentSpec};
use ldpgof::tuning::{Mechanism, TestConfig};
use ldpgof::NullDensity;

fn main() -> ldpgof::Result<()> {
    let null = NullDensity::uniform(0.0, 1.0)?;
    for mechanism in [Mechanism::NonInteractive, Mechanism::Interactive] {
        let config = TestConfig {
            n: 2000,
            alpha: 0.5,
            beta: 1.0,
            l: 100.0,
            gamma: 0.2,
            mechanism,
        };
        let mut spec = ExperimentSpec::new(config, null);
        spec.reps = 500;
        spec.seed = 7;
        let r = estimate_risk(&spec)?;
        println!(
            "{:<12} type I {:.4}  95% CI [{:.4}, {:.4}]  (target <= {})",
            mechanism.as_str(),
            r.type1.rate,
            r.type1.lo,
            r.type1.hi,
            config.gamma / 2.0
        );
    }
    Ok(())
}
