use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ClickRecord;
use crate::channels::pulse_rng;
use crate::error::{Error, Result};

/// Sufficient statistics of one copy's click record: shots, singles S₁, S₂ and
/// same-pulse coincidences C = Σ d₁d₂.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CopyTally {
    pub copy: u64,
    pub shots: u64,
    pub s1: u64,
    pub s2: u64,
    pub c: u64,
}

impl CopyTally {
    pub fn from_record(r: &ClickRecord) -> Self {
        CopyTally {
            copy: r.copy,
            shots: 1,
            s1: r.d1 as u64,
            s2: r.d2 as u64,
            c: r.d1 as u64 * r.d2 as u64,
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        CopyTally {
            copy: self.copy,
            shots: self.shots + other.shots,
            s1: self.s1 + other.s1,
            s2: self.s2 + other.s2,
            c: self.c + other.c,
        }
    }

    /// Mean registered count per shot.
    pub fn intensity(&self) -> f64 {
        (self.s1 + self.s2) as f64 / self.shots as f64
    }

    /// (M − 1) C / (S₁S₂ − C): the ratio of unbiased estimates of E[d₁d₂] and
    /// E[d₁]E[d₂]; `None` when the copy has no cross-shot products.
    pub fn g2(&self) -> Option<f64> {
        let denom = self.s1 as f64 * self.s2 as f64 - self.c as f64;
        if self.shots < 2 || denom <= 0.0 {
            return None;
        }
        Some((self.shots - 1) as f64 * self.c as f64 / denom)
    }
}

pub fn tally_by_copy(records: &[ClickRecord]) -> Vec<CopyTally> {
    let mut map: BTreeMap<u64, CopyTally> = BTreeMap::new();
    for r in records {
        let t = CopyTally::from_record(r);
        map.entry(r.copy)
            .and_modify(|acc| *acc = acc.merge(&t))
            .or_insert(t);
    }
    map.into_values().collect()
}

fn pooled(tallies: &[CopyTally]) -> Option<CopyTally> {
    let first = tallies.first()?;
    Some(tallies[1..].iter().fold(*first, |acc, t| acc.merge(t)))
}

/// Estimator value with the copies left out of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    /// Standard error of the mean over copies (absent for a single copy).
    pub std_error: Option<f64>,
    pub used: usize,
    pub excluded: Vec<u64>,
    pub warnings: Vec<String>,
}

fn sample_sd(xs: &[f64], mean: f64) -> f64 {
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0);
    var.sqrt()
}

fn mean_and_se(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    (mean, Some(sample_sd(xs, mean) / n.sqrt()))
}

/// Average over copies of each copy's own normalized coincidence rate.
pub fn copy_by_copy_g2(tallies: &[CopyTally]) -> Result<Estimate> {
    let mut vals = Vec::with_capacity(tallies.len());
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for t in tallies {
        match t.g2() {
            Some(g) => vals.push(g),
            None => {
                excluded.push(t.copy);
                warnings.push(format!("copy {} excluded: zero measured intensity", t.copy));
            }
        }
    }
    if vals.is_empty() {
        return Err(Error::EmptyInput("no copy with nonzero intensity".into()));
    }
    let (value, std_error) = mean_and_se(&vals);
    Ok(Estimate {
        value,
        std_error,
        used: vals.len(),
        excluded,
        warnings,
    })
}

/// Copy-by-copy form on exact per-copy moments (⟨n(n−1)⟩_i, ⟨n⟩_i).
pub fn copy_by_copy_g2_moments(moments: &[(f64, f64)]) -> Result<Estimate> {
    let mut vals = Vec::with_capacity(moments.len());
    let mut excluded = Vec::new();
    let mut warnings = Vec::new();
    for (i, &(nn, n)) in moments.iter().enumerate() {
        if n > 0.0 {
            vals.push(nn / (n * n));
        } else {
            excluded.push(i as u64);
            warnings.push(format!("copy {i} excluded: zero mean photon number"));
        }
    }
    if vals.is_empty() {
        return Err(Error::EmptyInput("no copy with nonzero intensity".into()));
    }
    let (value, std_error) = mean_and_se(&vals);
    Ok(Estimate {
        value,
        std_error,
        used: vals.len(),
        excluded,
        warnings,
    })
}

/// All detection events pooled, with the same small-sample correction as a single copy.
pub fn aggregate_g2(tallies: &[CopyTally]) -> Result<f64> {
    pooled(tallies)
        .ok_or_else(|| Error::EmptyInput("no records".into()))?
        .g2()
        .ok_or(Error::ZeroMeanPhotonNumber)
}

/// Avg[⟨n(n−1)⟩_i] / Avg[⟨n⟩_i]².
pub fn aggregate_g2_moments(moments: &[(f64, f64)]) -> Result<f64> {
    if moments.is_empty() {
        return Err(Error::EmptyInput("no copies".into()));
    }
    let k = moments.len() as f64;
    let nn = moments.iter().map(|m| m.0).sum::<f64>() / k;
    let n = moments.iter().map(|m| m.1).sum::<f64>() / k;
    if n <= 0.0 {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok(nn / (n * n))
}

/// Plain HBT zero-lag ratio M·C/(S₁S₂) of pooled tallies, as in the histogram's τ = 0 bin.
pub fn hbt_zero_lag(tallies: &[CopyTally]) -> Result<f64> {
    let t = pooled(tallies).ok_or_else(|| Error::EmptyInput("no records".into()))?;
    let acc = t.s1 as f64 * t.s2 as f64;
    if acc <= 0.0 {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok(t.shots as f64 * t.c as f64 / acc)
}

/// Bootstrap standard error of `stat`, resampling tallies with replacement.
pub fn bootstrap_se<F>(tallies: &[CopyTally], stat: F, reps: usize, seed: u64) -> Result<f64>
where
    F: Fn(&[CopyTally]) -> Result<f64>,
{
    if tallies.len() < 2 || reps < 2 {
        return Err(Error::EmptyInput("bootstrap needs at least two tallies and two replicates".into()));
    }
    let mut rng = pulse_rng(seed, u64::MAX);
    let mut buf = vec![CopyTally::default(); tallies.len()];
    let mut vals = Vec::with_capacity(reps);
    for _ in 0..reps {
        for slot in buf.iter_mut() {
            *slot = tallies[rng.random_range(0..tallies.len())];
        }
        if let Ok(v) = stat(&buf) {
            vals.push(v);
        }
    }
    if vals.len() < 2 {
        return Err(Error::EmptyInput("every bootstrap replicate failed".into()));
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    Ok(sample_sd(&vals, mean))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostSelection {
    pub kept: Vec<CopyTally>,
    pub median_intensity: f64,
    pub window: f64,
    pub survival: f64,
}

/// Keeps copies whose mean count per shot lies within n̄(1 ± w), n̄ the ensemble median.
pub fn post_select(tallies: &[CopyTally], window: f64) -> Result<PostSelection> {
    if !(window > 0.0) {
        return Err(Error::param("window", format!("must be positive (got {window})")));
    }
    if tallies.is_empty() {
        return Err(Error::EmptyInput("no copies to select from".into()));
    }
    let mut xs: Vec<f64> = tallies.iter().map(|t| t.intensity()).collect();
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    let median = if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    };
    let (lo, hi) = (median * (1.0 - window), median * (1.0 + window));
    let kept: Vec<CopyTally> = tallies
        .iter()
        .filter(|t| (lo..=hi).contains(&t.intensity()))
        .copied()
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyInput(format!("no copy survives window {window}")));
    }
    Ok(PostSelection {
        survival: kept.len() as f64 / k as f64,
        kept,
        median_intensity: median,
        window,
    })
}
