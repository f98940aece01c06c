//! Privatizes a sample through each channel and reads it back from both
//! serialization formats.

use std::io::Cursor;

use ldpgof::densities::Density;
use ldpgof::kernels::boxcar;
use ldpgof::mechanisms::{
    estimate_phat, int_bin_privatize, int_second_round, ni_kernel_privatize, rr_tail_privatize, PrivacyParams,
    PrivatizedBatch,
};
use ldpgof::rng::stream;
use ldpgof::statistics::bin_masses;
use ldpgof::tuning::{partition, Interval};
use ldpgof::NullDensity;

fn main() -> ldpgof::Result<()> {
    let null = NullDensity::normal();
    let n = 500;
    let p = PrivacyParams::new(0.5)?.with_sample_size(n);
    let bulk = Interval::new(-2.0, 2.0)?;
    let part = partition(bulk, 0.25)?;
    let mut rng = stream(3, &[0]);

    let first = int_bin_privatize(null.sample(n, &mut rng)?, &part, &p, &mut rng);
    let phat = estimate_phat(&first)?;
    let batches = [
        ni_kernel_privatize(null.sample(n, &mut rng)?, &part, &boxcar(), &p, &mut rng),
        rr_tail_privatize(null.sample(n, &mut rng)?, &bulk, &p, &mut rng),
        int_second_round(
            null.sample(n, &mut rng)?,
            &part,
            &phat,
            &bin_masses(&null, &part),
            &p,
            &mut rng,
        )?,
        first,
    ];
    for batch in &batches {
        let mut csv = Vec::new();
        batch.write_csv(&mut csv)?;
        let mut bin = Vec::new();
        batch.write_binary(&mut bin)?;
        let from_csv = PrivatizedBatch::read_csv(Cursor::new(&csv), p)?;
        let from_bin = PrivatizedBatch::read_binary(Cursor::new(&bin))?;
        println!(
            "{:<14} {:>4} x {:<3} csv {:>7} B, binary {:>6} B, round trip {}",
            batch.kind().as_str(),
            batch.rows(),
            batch.cols(),
            csv.len(),
            bin.len(),
            if &from_csv == batch && &from_bin == batch {
                "exact"
            } else {
                "MISMATCH"
            }
        );
    }
    Ok(())
}
