//! Pulse-indexed HBT coincidence histogram.
//!
//! Lag k pairs detector-1 counts of pulse j with detector-2 counts of pulse
//! j + k. The accidental level of a bin is S₁S₂·(N − |k|)/N², the pulsed form
//! of R_acc = S₁S₂Δτ/T with Δτ one pulse period and T = N periods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ClickRecord;
use crate::error::{Error, Result};

pub const HISTOGRAM_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpec {
    /// Bins cover lags −max_lag..=max_lag pulse periods.
    pub max_lag: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lag: i64,
    pub coincidences: u64,
    pub accidental: f64,
    pub g2: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub schema_version: u32,
    pub pulses: u64,
    /// Bin width in seconds, carried from the click records.
    pub bin_width: f64,
    pub singles: [u64; 2],
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn bin(&self, lag: i64) -> Option<&HistogramBin> {
        self.bins.iter().find(|b| b.lag == lag)
    }

    pub fn zero_lag(&self) -> &HistogramBin {
        self.bin(0).expect("histogram always has a zero-lag bin")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

const CHUNK: usize = 4096;

/// Builds g²(k) bins from a contiguous, pulse-ordered click stream.
pub fn build_histogram(records: &[ClickRecord], spec: &BinSpec) -> Result<Histogram> {
    let n = records.len();
    if n < 2 {
        return Err(Error::EmptyInput(format!("histogram needs at least 2 pulses (got {n})")));
    }
    if spec.max_lag >= n {
        return Err(Error::param(
            "max_lag",
            format!("must be below the pulse count {n} (got {})", spec.max_lag),
        ));
    }
    let p0 = records[0].pulse;
    if let Some((j, r)) = records.iter().enumerate().find(|(j, r)| r.pulse != p0 + *j as u64) {
        return Err(Error::param(
            "records",
            format!("pulse stream must be contiguous and ordered (position {j} holds pulse {})", r.pulse),
        ));
    }
    let kmax = spec.max_lag as i64;
    let width = 2 * spec.max_lag + 1;
    let counts = records
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut part = vec![0u64; width];
            for (off, r) in chunk.iter().enumerate() {
                if r.d1 == 0 {
                    continue;
                }
                let j = (ci * CHUNK + off) as i64;
                for k in -kmax..=kmax {
                    let m = j + k;
                    if m < 0 || m >= n as i64 {
                        continue;
                    }
                    part[(k + kmax) as usize] += r.d1 as u64 * records[m as usize].d2 as u64;
                }
            }
            part
        })
        .reduce(
            || vec![0u64; width],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let s1: u64 = records.iter().map(|r| r.d1 as u64).sum();
    let s2: u64 = records.iter().map(|r| r.d2 as u64).sum();
    let nf = n as f64;
    let bins = (-kmax..=kmax)
        .map(|k| {
            let c = counts[(k + kmax) as usize];
            let accidental = s1 as f64 * s2 as f64 * (nf - k.abs() as f64) / (nf * nf);
            let (g2, error) = if accidental > 0.0 {
                (c as f64 / accidental, (c.max(1) as f64).sqrt() / accidental)
            } else {
                (f64::NAN, f64::NAN)
            };
            HistogramBin {
                lag: k,
                coincidences: c,
                accidental,
                g2,
                error,
            }
        })
        .collect();
    Ok(Histogram {
        schema_version: HISTOGRAM_SCHEMA_VERSION,
        pulses: n as u64,
        bin_width: records[0].bin_width,
        singles: [s1, s2],
        bins,
    })
}
