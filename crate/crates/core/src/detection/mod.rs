//! Photon statistics, click simulation and g²(0) estimators.

mod estimators;
mod histogram;

pub use estimators::{
    aggregate_g2, aggregate_g2_moments, bootstrap_se, copy_by_copy_g2, copy_by_copy_g2_moments, hbt_zero_lag,
    post_select, tally_by_copy, CopyTally, Estimate, PostSelection,
};
pub use histogram::{build_histogram, BinSpec, Histogram, HistogramBin, HISTOGRAM_SCHEMA_VERSION};

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{pulse_rng, LossChannel};
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, QuantumState};

/// Mean, factorial moment ⟨n(n−1)⟩ and variance of a photon-number distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberStats {
    pub mean: f64,
    pub factorial2: f64,
    pub variance: f64,
}

impl NumberStats {
    pub fn from_distribution(p: &[f64]) -> Self {
        let mut mean = 0.0;
        let mut second = 0.0;
        for (n, &w) in p.iter().enumerate() {
            let n = n as f64;
            mean += n * w;
            second += n * n * w;
        }
        NumberStats {
            mean,
            factorial2: second - mean,
            variance: second - mean * mean,
        }
    }

    pub fn of<S: QuantumState>(state: &S, mode: usize) -> Result<Self> {
        Ok(Self::from_distribution(&state.photon_distribution(mode)?))
    }

    pub fn g2(&self) -> Result<f64> {
        if self.mean <= 0.0 {
            return Err(Error::ZeroMeanPhotonNumber);
        }
        Ok(self.factorial2 / (self.mean * self.mean))
    }

    pub fn fano(&self) -> Result<f64> {
        if self.mean <= 0.0 {
            return Err(Error::ZeroMeanPhotonNumber);
        }
        Ok(self.variance / self.mean)
    }
}

/// ⟨a†a†aa⟩/⟨a†a⟩² of one mode.
pub fn g2_operator<S: QuantumState>(state: &S, mode: usize) -> Result<f64> {
    NumberStats::of(state, mode)?.g2()
}

/// ⟨(Δn)²⟩/⟨n⟩ of one mode.
pub fn fano<S: QuantumState>(state: &S, mode: usize) -> Result<f64> {
    NumberStats::of(state, mode)?.fano()
}

/// Bernoulli thinning of a count distribution (loss on the diagonal).
pub fn thin_distribution(p: &[f64], eta: f64) -> Result<Vec<f64>> {
    let ch = LossChannel::new(eta)?;
    let d = p.len();
    let rho = DensityOperator::from_matrix_unchecked(
        &[d],
        nalgebra::DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                num_complex::Complex64::new(p[i], 0.0)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        }),
    )?;
    ch.apply(&rho)?.photon_distribution(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectorKind {
    /// Number-resolving detector, saturating at `ceiling` counts.
    Nrpd { ceiling: u32 },
    /// Single-photon (click / no-click) detector.
    Spd,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub kind: DetectorKind,
    #[serde(default = "one")]
    pub efficiency: f64,
    /// Probability of one dark count per detector per pulse.
    #[serde(default)]
    pub dark_count_prob: f64,
    /// Width of a coincidence bin in seconds.
    #[serde(default = "one")]
    pub bin_width: f64,
}

fn one() -> f64 {
    1.0
}

pub const DEFAULT_NRPD_CEILING: u32 = 20;

impl DetectorModel {
    pub fn nrpd() -> Self {
        DetectorModel {
            kind: DetectorKind::Nrpd {
                ceiling: DEFAULT_NRPD_CEILING,
            },
            efficiency: 1.0,
            dark_count_prob: 0.0,
            bin_width: 1.0,
        }
    }

    pub fn spd() -> Self {
        DetectorModel {
            kind: DetectorKind::Spd,
            ..Self::nrpd()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::param("efficiency", format!("must lie in (0, 1] (got {})", self.efficiency)));
        }
        if !(0.0..=1.0).contains(&self.dark_count_prob) {
            return Err(Error::param(
                "dark_count_prob",
                format!("must lie in [0, 1] (got {})", self.dark_count_prob),
            ));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::param("bin_width", "must be positive"));
        }
        Ok(())
    }

    fn clip(&self, n: u64) -> u32 {
        match self.kind {
            DetectorKind::Nrpd { ceiling } => n.min(ceiling as u64) as u32,
            DetectorKind::Spd => n.min(1) as u32,
        }
    }
}

/// Counts registered by the two HBT detectors for one pulse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub pulse: u64,
    /// Copy (source state) the pulse was drawn from.
    pub copy: u64,
    pub d1: u32,
    pub d2: u32,
    pub bin_width: f64,
    pub efficiency: f64,
}

/// Samples photon numbers from a fixed distribution and splits them on a 50/50 beam splitter.
#[derive(Clone, Debug)]
pub struct CountSampler {
    dist: WeightedIndex<f64>,
    model: DetectorModel,
}

impl CountSampler {
    pub fn new(p: &[f64], model: &DetectorModel) -> Result<Self> {
        model.validate()?;
        let w: Vec<f64> = p.iter().map(|&x| x.max(0.0)).collect();
        let dist = WeightedIndex::new(&w).map_err(|e| Error::param("distribution", e.to_string()))?;
        Ok(CountSampler { dist, model: *model })
    }

    pub fn from_state<S: QuantumState>(state: &S, mode: usize, model: &DetectorModel) -> Result<Self> {
        Self::new(&state.photon_distribution(mode)?, model)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        let mut n = self.dist.sample(rng) as u64;
        if self.model.efficiency < 1.0 && n > 0 {
            n = Binomial::new(n, self.model.efficiency).expect("validated").sample(rng);
        }
        let mut d1 = if n > 0 {
            Binomial::new(n, 0.5).expect("p = 1/2").sample(rng)
        } else {
            0
        };
        let mut d2 = n - d1;
        if self.model.dark_count_prob > 0.0 {
            d1 += rng.random_bool(self.model.dark_count_prob) as u64;
            d2 += rng.random_bool(self.model.dark_count_prob) as u64;
        }
        (self.model.clip(d1), self.model.clip(d2))
    }

    pub fn record<R: Rng + ?Sized>(&self, pulse: u64, copy: u64, rng: &mut R) -> ClickRecord {
        let (d1, d2) = self.sample(rng);
        ClickRecord {
            pulse,
            copy,
            d1,
            d2,
            bin_width: self.model.bin_width,
            efficiency: self.model.efficiency,
        }
    }
}

pub fn sample_counts<S: QuantumState, R: Rng + ?Sized>(
    state: &S,
    model: &DetectorModel,
    rng: &mut R,
) -> Result<ClickRecord> {
    Ok(CountSampler::from_state(state, 0, model)?.record(0, 0, rng))
}

/// Offsets the master seed so click streams never share a ChaCha stream with channel draws.
pub const DETECTION_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Simulates pulses `first..first + count` of one state, pulse `j` using its own counter-based stream.
pub fn simulate_clicks(
    sampler: &CountSampler,
    copy: u64,
    first: u64,
    count: u64,
    master_seed: u64,
) -> Vec<ClickRecord> {
    (first..first + count)
        .into_par_iter()
        .map(|j| {
            let mut rng = pulse_rng(master_seed ^ DETECTION_SEED_SALT, j);
            sampler.record(j, copy, &mut rng)
        })
        .collect()
}

/// Transmission that brings a state's mean photon number to `target`.
pub fn attenuation_for_target(rho: &DensityOperator, target: f64) -> Result<f64> {
    let mean = NumberStats::of(rho, 0)?.mean;
    if mean <= 0.0 {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    if !(target > 0.0 && target <= mean) {
        return Err(Error::param(
            "target_mean",
            format!("must lie in (0, {mean}] (got {target})"),
        ));
    }
    Ok(target / mean)
}

/// Tolerance on the operator-level g² change under attenuation.
pub const ATTENUATION_G2_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Method3Outcome {
    pub eta: f64,
    pub attenuated: DensityOperator,
    pub g2_before: f64,
    pub g2_after: f64,
    pub clicks: Vec<ClickRecord>,
}

/// Attenuates to `target_mean` photons per pulse and records `pulses` SPD events.
pub fn method3_attenuate(
    rho: &DensityOperator,
    target_mean: f64,
    model: &DetectorModel,
    pulses: u64,
    master_seed: u64,
) -> Result<Method3Outcome> {
    let eta = attenuation_for_target(rho, target_mean)?;
    let attenuated = LossChannel::new(eta)?.apply(rho)?;
    let g2_before = g2_operator(rho, 0)?;
    let g2_after = g2_operator(&attenuated, 0)?;
    if (g2_after - g2_before).abs() > ATTENUATION_G2_TOL {
        return Err(Error::InvariantViolated(format!(
            "g2 changed by {:.3e} under attenuation eta = {eta:.3e}",
            g2_after - g2_before
        )));
    }
    let sampler = CountSampler::from_state(&attenuated, 0, model)?;
    let clicks = simulate_clicks(&sampler, 0, 0, pulses, master_seed);
    Ok(Method3Outcome {
        eta,
        attenuated,
        g2_before,
        g2_after,
        clicks,
    })
}
