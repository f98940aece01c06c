//! Result files: risk and rate CSVs and JSON reports.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! results always produce equal bytes.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::harness::{RatePoint, RiskEstimate};
use crate::tuning::TestConfig;

pub const RISK_HEADER: [&str; 15] = [
    "mechanism",
    "null",
    "n",
    "alpha",
    "gamma",
    "delta",
    "l1_distance",
    "type1",
    "type1_lo",
    "type1_hi",
    "type2",
    "type2_lo",
    "type2_hi",
    "reps",
    "seed",
];

pub const RATES_HEADER: [&str; 5] = ["n", "alpha", "n_alpha2", "rho_hat", "censored"];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row of a risk CSV.
pub struct RiskRow<'a> {
    pub config: &'a TestConfig,
    pub null: String,
    pub seed: u64,
    pub risk: &'a RiskEstimate,
}

pub fn write_risk_csv<W: Write>(w: W, rows: &[RiskRow<'_>]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RISK_HEADER)?;
    for row in rows {
        let r = row.risk;
        out.write_record([
            row.config.mechanism.as_str().to_string(),
            row.null.clone(),
            row.config.n.to_string(),
            row.config.alpha.to_string(),
            row.config.gamma.to_string(),
            opt(r.delta),
            opt(r.l1_distance),
            r.type1.rate.to_string(),
            r.type1.lo.to_string(),
            r.type1.hi.to_string(),
            opt(r.type2.map(|t| t.rate)),
            opt(r.type2.map(|t| t.lo)),
            opt(r.type2.map(|t| t.hi)),
            r.reps.to_string(),
            row.seed.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rates_csv<W: Write>(w: W, points: &[RatePoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RATES_HEADER)?;
    for p in points {
        out.write_record([
            p.n.to_string(),
            p.alpha.to_string(),
            p.n_alpha2.to_string(),
            p.rho_hat.to_string(),
            p.censored.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}
