//! Worst-case likelihood ratios of every privatization channel across α.

use ldpgof::kernels::{boxcar, triangular};
use ldpgof::mechanisms::{audit_laplace_grid, audit_rr, PrivacyParams, RrChannel};
use ldpgof::tuning::{partition, Interval};

fn main() -> ldpgof::Result<()> {
    let part = partition(Interval::new(0.0, 1.0)?, 0.05)?;
    println!(
        "{:>6} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "alpha", "e^alpha", "tail", "clipped", "kernel", "bins"
    );
    for alpha in [0.01, 0.1, 0.5, 1.0] {
        let p = PrivacyParams::new(alpha)?.with_sample_size(2000);
        let tail = audit_rr(&RrChannel::TailBits, &p)?;
        let clipped = audit_rr(
            &RrChannel::ClippedBits {
                n_bins: part.n_bins(),
                clip_grid: 201,
            },
            &p,
        )?;
        let (kernel, bins) = audit_laplace_grid(&part, &boxcar(), &p, 101);
        let (tri, _) = audit_laplace_grid(&part, &triangular(), &p, 101);
        println!(
            "{alpha:>6} {:>12.9} {tail:>12.9} {clipped:>12.9} {:>12.9} {bins:>12.9}",
            alpha.exp(),
            kernel.max(tri)
        );
    }
    Ok(())
}
