//! A reduced separation-rate experiment: radius estimates over a short
//! sample-size grid and the fitted exponent for each mechanism.
//!
//! The full grid is available through `ldpgof rates`.

use ldpgof::harness::{fit_rate, rate_experiment, theoretical_exponent, ExperimentSpec, SignPattern, ThresholdMode};
use ldpgof::tuning::{Mechanism, TestConfig};
use ldpgof::NullDensity;

fn main() -> ldpgof::Result<()> {
    let null = NullDensity::uniform(0.0, 1.0)?;
    let grid: Vec<usize> = (10..15).map(|k| 1 << k).collect();
    for mechanism in [Mechanism::Interactive, Mechanism::NonInteractive] {
        let config = TestConfig {
            n: grid[0],
            alpha: 0.5,
            beta: 1.0,
            l: 100.0,
            gamma: 0.2,
            mechanism,
        };
        let mut spec = ExperimentSpec::new(config, null);
        spec.reps = 200;
        spec.seed = 11;
        spec.thresholds = ThresholdMode::Calibrated { sims: 400 };
        let points = rate_experiment(&spec, &grid, config.gamma, &SignPattern::Alternating)?;
        println!("{}", mechanism.as_str());
        for p in &points {
            println!(
                "  n*alpha^2 {:>8.1}  rho {:.4e}{}",
                p.n_alpha2,
                p.rho_hat,
                if p.censored { " (censored)" } else { "" }
            );
        }
        let theory = theoretical_exponent(&null, mechanism, config.beta).expect("uniform exponent");
        match fit_rate(&points, theory) {
            Ok(fit) => println!("  slope {:.3} ± {:.3}, theory {:.3}", fit.slope, fit.slope_se, theory),
            Err(e) => println!("  no fit: {e}"),
        }
    }
    Ok(())
}
