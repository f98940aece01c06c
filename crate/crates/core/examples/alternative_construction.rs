//! Builds sine-bump alternatives and compares their L1 distance to the null
//! with the analytic value.

use ldpgof::densities::{delta_max, make_alternative, Density};
use ldpgof::kernels::sine_wave;
use ldpgof::numeric::integrate_piecewise;
use ldpgof::tuning::{partition, Interval};
use ldpgof::NullDensity;

fn main() -> ldpgof::Result<()> {
    let null = NullDensity::beta(2.0, 2.0)?;
    let (beta, l) = (1.0, 100.0);
    for h in [0.1, 0.05, 0.025] {
        let part = partition(Interval::new(0.1, 0.9)?, h)?;
        let bound = delta_max(&null, &part, &sine_wave(), l, beta)?;
        let signs: Vec<f64> = (0..part.n_bins())
            .map(|j| if j % 3 == 0 { -1.0 } else { 1.0 })
            .collect();
        let delta = 0.9 * bound.delta_max;
        let alt = make_alternative(null, part.clone(), delta, &signs, sine_wave(), l, beta)?;
        // Bin edges and bin centers, where the bumps change sign.
        let breaks: Vec<f64> = (0..part.n_bins())
            .flat_map(|j| [part.bin(j).lo(), part.center(j), part.bin(j).hi()])
            .collect();
        let l1 = integrate_piecewise(|x| (alt.pdf(x) - null.pdf(x)).abs(), 0.0, 1.0, &breaks, 1e-12);
        let mass = integrate_piecewise(|x| alt.pdf(x), 0.0, 1.0, &breaks, 1e-12);
        println!(
            "N {:>3}  h {:.4}  delta_max {:.3e} ({})  L1 quadrature {:.10}  analytic {:.10}  mass {:.10}",
            part.n_bins(),
            part.h(),
            bound.delta_max,
            bound.binding(),
            l1,
            alt.l1_distance(),
            mass
        );
    }
    Ok(())
}
