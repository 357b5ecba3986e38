use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{CounterMode, EstimatorMethod, ProtocolConfig, PROTOCOL_SCHEMA_VERSION};
use super::pipeline::{counter_choice, run_copy, Coupler, DetectionTally, PulseRecord, Stage, StageDiagnostics};
use crate::channels::{draw_pulse, pulse_rng, pure_loss, AlphaLaw, ChannelDraw, SourceConfig, SqueezeLaw};
use crate::detection::{
    build_histogram, copy_by_copy_g2, copy_by_copy_g2_moments, aggregate_g2, aggregate_g2_moments, bootstrap_se,
    hbt_zero_lag, post_select, tally_by_copy, BinSpec, ClickRecord, CopyTally, CountSampler, DetectorKind,
    DetectorModel, Estimate, Histogram, NumberStats, ATTENUATION_G2_TOL, DETECTION_SEED_SALT,
};
use crate::error::{Error, Result};
use crate::fock::DensityOperator;

/// Copy with α_i and r_i at the centre of their laws.
pub fn reference_draw(src: &SourceConfig) -> ChannelDraw {
    let alpha = match src.alpha {
        AlphaLaw::ComplexGaussian { mean, .. } => C64::new(mean[0], mean[1]),
        AlphaLaw::Fixed { value } => C64::new(value[0], value[1]),
    };
    let r = match src.squeeze {
        SqueezeLaw::Uniform { min, max } => 0.5 * (min + max),
        SqueezeLaw::Fixed { value } => value,
    };
    ChannelDraw {
        index: 0,
        alpha,
        r,
        rejections: 0,
    }
}

/// Closed-form ⟨n⟩ and Var n of D(β) S(r e^{iφ}) |0⟩.
pub fn displaced_squeezed_moments(beta: C64, r: f64, phase: f64) -> (f64, f64) {
    let sh2 = r.sinh().powi(2);
    let mean = beta.norm_sqr() + sh2;
    let var = beta.norm_sqr() * ((2.0 * r).cosh() - (2.0 * r).sinh() * (2.0 * beta.arg() - phase).cos())
        + 2.0 * sh2 * (1.0 + sh2);
    (mean, var)
}

/// Draws are truncated to copies whose displaced state ρa keeps six standard deviations clear of the
/// guarded tail of mode 1.
pub fn fits_truncation(cfg: &ProtocolConfig, draw: &ChannelDraw) -> bool {
    let (mean, var) = displaced_squeezed_moments(cfg.alpha() + draw.alpha, draw.r, cfg.source.squeeze_phase);
    mean + 6.0 * var.sqrt() + cfg.guard.tail_width as f64 <= cfg.n_max_a as f64
}

pub fn draw_ensemble(cfg: &ProtocolConfig) -> Result<Vec<ChannelDraw>> {
    (0..cfg.pulses)
        .into_par_iter()
        .map(|j| draw_pulse(&cfg.source, cfg.seed, j, |d| fits_truncation(cfg, d)))
        .collect()
}

/// Transmission applied to every copy: target / mean⟨n⟩ for the attenuation method, 1 otherwise.
pub fn common_eta(cfg: &ProtocolConfig, means: &[f64]) -> Result<f64> {
    if cfg.detection.method != EstimatorMethod::AttenuateSpd {
        return Ok(1.0);
    }
    if let Some(eta) = cfg.detection.eta {
        return Ok(eta);
    }
    if means.is_empty() {
        return Err(Error::EmptyInput("no surviving copy to attenuate".into()));
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    if !(mean > cfg.detection.target_mean) {
        return Err(Error::param(
            "target_mean",
            format!("{} is not below the ensemble mean {mean:.4}", cfg.detection.target_mean),
        ));
    }
    Ok(cfg.detection.target_mean / mean)
}

/// Pure loss with the operator-level g² checked unchanged.
pub fn attenuate(rho: &DensityOperator, eta: f64) -> Result<DensityOperator> {
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    let out = pure_loss(rho, eta)?;
    let before = NumberStats::of(rho, 0)?.g2()?;
    let after = NumberStats::of(&out, 0)?.g2()?;
    if (after - before).abs() > ATTENUATION_G2_TOL * before.abs().max(1.0) {
        return Err(Error::InvariantViolated(format!(
            "g2 changed from {before} to {after} under eta = {eta:.4e}"
        )));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fluctuation {
    pub stage: Stage,
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    /// std / mean of ⟨n⟩.
    pub relative: f64,
}

impl Fluctuation {
    fn of(stage: Stage, xs: &[f64]) -> Option<Self> {
        if xs.len() < 2 {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        Some(Fluctuation {
            stage,
            samples: xs.len(),
            mean,
            std,
            relative: std / mean,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PostSelectSummary {
    pub estimate: Estimate,
    pub survival: f64,
    pub median_intensity: f64,
    pub window: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub schema_version: u32,
    pub method: EstimatorMethod,
    pub counter_mode: CounterMode,
    pub pulses: u64,
    pub copies: usize,
    pub live_copies: usize,
    pub aborted: Vec<(u64, String)>,
    pub eta: f64,
    /// ⟨n⟩ spread over every pulse draw, from closed-form moments.
    pub pulse_fluctuations: Vec<Fluctuation>,
    /// ⟨n⟩ spread over the simulated copies at each stage.
    pub copy_fluctuations: Vec<Fluctuation>,
    /// Operator-level copy-by-copy g² of the detected states.
    pub operator_g2_copy_by_copy: Estimate,
    /// Operator-level g² of the pulse-weighted mixture of detected states.
    pub operator_g2_aggregate: f64,
    pub histogram_g2_zero: Option<f64>,
    /// Poisson error √C / accidental of the zero-lag bin.
    pub histogram_g2_zero_error: Option<f64>,
    pub histogram_g2_zero_bootstrap_se: Option<f64>,
    pub copy_by_copy: Option<Estimate>,
    pub aggregate: Option<f64>,
    pub post_selection: Option<PostSelectSummary>,
}

#[derive(Clone, Debug)]
pub struct EnsembleRun {
    /// Channel draw of every pulse.
    pub draws: Vec<ChannelDraw>,
    pub records: Vec<PulseRecord>,
    pub clicks: Vec<ClickRecord>,
    /// Absent for single-pulse runs.
    pub histogram: Option<Histogram>,
    pub summary: EnsembleSummary,
}

fn detector(cfg: &ProtocolConfig) -> DetectorModel {
    let d = &cfg.detection;
    let kind = match d.method {
        EstimatorMethod::AttenuateSpd => DetectorKind::Spd,
        EstimatorMethod::Nrpd | EstimatorMethod::Postselect => DetectorKind::Nrpd { ceiling: d.nrpd_ceiling },
    };
    DetectorModel {
        kind,
        efficiency: d.efficiency,
        dark_count_prob: d.dark_count_prob,
        bin_width: 1.0,
    }
}

fn stage_means(records: &[&PulseRecord], stage: Stage) -> Vec<f64> {
    records
        .iter()
        .filter_map(|r| r.stage(stage).map(|s| s.mean_photons))
        .collect()
}

/// Full ensemble: copies run in parallel, pulse j is detected from live copy j mod K,
/// and every random stream is keyed by (seed, index) so the result does not depend on the thread count.
pub fn run_ensemble(cfg: &ProtocolConfig) -> Result<EnsembleRun> {
    cfg.validate()?;
    let coupler = Coupler::new(cfg.n_max_a, cfg.n_max_b, &cfg.port, cfg.phi)?;
    let draws = draw_ensemble(cfg)?;
    let choice = counter_choice(cfg, &coupler)?;
    let k = cfg.copies.min(draws.len());
    let outcomes: Vec<_> = draws[..k]
        .par_iter()
        .map(|d| run_copy(cfg, &coupler, d, choice))
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(k);
    let mut live: Vec<(usize, DensityOperator)> = Vec::new();
    let mut aborted = Vec::new();
    for (i, out) in outcomes.into_iter().enumerate() {
        match (&out.record.aborted, out.rho_b_prime) {
            (None, Some(rho)) => live.push((i, rho)),
            (reason, _) => aborted.push((out.record.index, reason.clone().unwrap_or_default())),
        }
        records.push(out.record);
    }
    if live.is_empty() {
        return Err(Error::GuardTripped(format!("every copy aborted; first: {}", aborted[0].1)));
    }

    let means: Vec<f64> = live
        .iter()
        .map(|(_, rho)| NumberStats::of(rho, 0).map(|s| s.mean))
        .collect::<Result<_>>()?;
    let eta = common_eta(cfg, &means)?;
    let detected: Vec<DensityOperator> = live
        .par_iter()
        .map(|(_, rho)| attenuate(rho, eta))
        .collect::<Result<_>>()?;
    let model = detector(cfg);
    let mut moments = Vec::with_capacity(live.len());
    let mut samplers = Vec::with_capacity(live.len());
    for ((i, _), rho) in live.iter().zip(&detected) {
        let diag = StageDiagnostics::of(rho, Stage::RhoBDoublePrime, cfg.guard.tail_width, None)?;
        let stats = NumberStats::of(rho, 0)?;
        moments.push((stats.factorial2, stats.mean));
        records[*i].eta = Some(eta);
        records[*i].stages.push(diag);
        samplers.push(CountSampler::from_state(rho, 0, &model)?);
    }

    let n_live = live.len() as u64;
    let clicks: Vec<ClickRecord> = (0..cfg.pulses)
        .into_par_iter()
        .map(|j| {
            let slot = (j % n_live) as usize;
            let mut rng = pulse_rng(cfg.seed ^ DETECTION_SEED_SALT, j);
            samplers[slot].record(j, records[live[slot].0].index, &mut rng)
        })
        .collect();
    let histogram = if clicks.len() >= 2 {
        Some(build_histogram(
            &clicks,
            &BinSpec {
                max_lag: cfg.detection.max_lag,
            },
        )?)
    } else {
        None
    };

    let by_copy = tally_by_copy(&clicks);
    for t in &by_copy {
        if let Some(rec) = records.iter_mut().find(|r| r.index == t.copy) {
            rec.detection = Some(DetectionTally {
                shots: t.shots,
                s1: t.s1,
                s2: t.s2,
                c: t.c,
                g2: t.g2(),
            });
        }
    }
    let post_selection = if cfg.detection.method == EstimatorMethod::Postselect {
        let sel = post_select(&by_copy, cfg.detection.window)?;
        for rec in records.iter_mut().filter(|r| r.detection.is_some()) {
            rec.post_selected = Some(sel.kept.iter().any(|t| t.copy == rec.index));
        }
        Some(PostSelectSummary {
            estimate: copy_by_copy_g2(&sel.kept)?,
            survival: sel.survival,
            median_intensity: sel.median_intensity,
            window: sel.window,
        })
    } else {
        None
    };

    let per_pulse: Vec<CopyTally> = clicks.iter().map(CopyTally::from_record).collect();
    let boot = bootstrap_se(&per_pulse, hbt_zero_lag, cfg.detection.bootstrap_reps, cfg.seed).ok();
    let zero = histogram.as_ref().map(|h| *h.zero_lag());

    let pulse_t: Vec<f64> = draws
        .iter()
        .map(|d| displaced_squeezed_moments(d.alpha, d.r, cfg.source.squeeze_phase).0)
        .collect();
    let pulse_a: Vec<f64> = draws
        .iter()
        .map(|d| displaced_squeezed_moments(cfg.alpha() + d.alpha, d.r, cfg.source.squeeze_phase).0)
        .collect();
    let pulse_fluctuations = [(Stage::RhoT, pulse_t), (Stage::RhoA, pulse_a)]
        .into_iter()
        .filter_map(|(s, xs)| Fluctuation::of(s, &xs))
        .collect();
    let all: Vec<&PulseRecord> = records.iter().collect();
    let copy_fluctuations = [Stage::RhoT, Stage::RhoA, Stage::RhoB, Stage::RhoBPrime, Stage::RhoBDoublePrime]
        .into_iter()
        .filter_map(|s| Fluctuation::of(s, &stage_means(&all, s)))
        .collect();

    // Pulse weights of each live copy under the j mod K assignment.
    let weights: Vec<f64> = (0..n_live)
        .map(|s| ((cfg.pulses - s).div_ceil(n_live)) as f64)
        .collect();
    let wsum: f64 = weights.iter().sum();
    let (mut nn, mut n) = (0.0, 0.0);
    for (w, (f2, m)) in weights.iter().zip(&moments) {
        nn += w * f2 / wsum;
        n += w * m / wsum;
    }
    let operator_g2_aggregate = if moments.len() == 1 {
        aggregate_g2_moments(&moments)?
    } else {
        nn / (n * n)
    };

    let summary = EnsembleSummary {
        schema_version: PROTOCOL_SCHEMA_VERSION,
        method: cfg.detection.method,
        counter_mode: cfg.counter_mode,
        pulses: cfg.pulses,
        copies: k,
        live_copies: live.len(),
        aborted,
        eta,
        pulse_fluctuations,
        copy_fluctuations,
        operator_g2_copy_by_copy: copy_by_copy_g2_moments(&moments)?,
        operator_g2_aggregate,
        histogram_g2_zero: zero.map(|b| b.g2),
        histogram_g2_zero_error: zero.map(|b| b.error),
        histogram_g2_zero_bootstrap_se: boot,
        copy_by_copy: copy_by_copy_g2(&by_copy).ok(),
        aggregate: aggregate_g2(&by_copy).ok(),
        post_selection,
    };
    Ok(EnsembleRun {
        draws,
        records,
        clicks,
        histogram,
        summary,
    })
}

impl EnsembleSummary {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn pulse_fluctuation(&self, stage: Stage) -> Option<&Fluctuation> {
        self.pulse_fluctuations.iter().find(|f| f.stage == stage)
    }

    pub fn copy_fluctuation(&self, stage: Stage) -> Option<&Fluctuation> {
        self.copy_fluctuations.iter().find(|f| f.stage == stage)
    }
}
