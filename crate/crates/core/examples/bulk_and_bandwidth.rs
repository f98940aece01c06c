//! Bulk sets, bandwidths and bin counts chosen for each null family as the
//! effective sample size grows.

use ldpgof::tuning::{bandwidth_or_single_bin, bulk_set, Mechanism, TestConfig};
use ldpgof::NullDensity;

fn main() -> ldpgof::Result<()> {
    let nulls = [
        NullDensity::uniform(0.0, 1.0)?,
        NullDensity::normal(),
        NullDensity::exponential(1.0)?,
        NullDensity::cauchy(1.0)?,
        NullDensity::pareto(1.0, 2.0)?,
        NullDensity::beta(2.0, 3.0)?,
        NullDensity::spiky(2.0)?,
        NullDensity::slowvary(2.0)?,
    ];
    for mechanism in [Mechanism::NonInteractive, Mechanism::Interactive] {
        println!("{}", mechanism.as_str());
        for null in &nulls {
            let mut row = format!("  {:<14}", null.to_string());
            for n in [1 << 10, 1 << 14, 1 << 18] {
                let config = TestConfig {
                    n,
                    alpha: 0.5,
                    beta: 1.0,
                    l: 100.0,
                    gamma: 0.2,
                    mechanism,
                };
                let b = bulk_set(null, &config);
                let h = bandwidth_or_single_bin(&config, &b, 1.0)?;
                row.push_str(&format!(
                    "  [{:>8.3}, {:>8.3}] h {:.2e} tail {:.1e}",
                    b.lo(),
                    b.hi(),
                    h,
                    null.tail_mass(&b)
                ));
            }
            println!("{row}");
        }
    }
    Ok(())
}
