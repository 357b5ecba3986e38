use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::channels::{LeakageBound, SourceConfig};
use crate::error::{Error, Result};

pub const PROTOCOL_SCHEMA_VERSION: u32 = 1;

/// Number-phase port: the coherent state fed into mode 2 and the b_n algebra built on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BnPort {
    /// Coherent amplitude of the mode-2 input; γ0 = 2|amplitude|².
    pub amplitude: [f64; 2],
    #[serde(default = "unit")]
    pub asymmetry: f64,
    #[serde(default = "default_theta0")]
    pub theta0: f64,
}

fn unit() -> f64 {
    1.0
}

fn default_theta0() -> f64 {
    -PI
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GuardConfig {
    #[serde(default = "default_min_mean")]
    pub min_mean_photons: f64,
    #[serde(default = "default_comm_tol")]
    pub commutator_tol: f64,
    #[serde(default = "default_tail")]
    pub tail_width: usize,
    #[serde(default = "default_leakage")]
    pub leakage_bound: f64,
}

fn default_min_mean() -> f64 {
    20.0
}

fn default_comm_tol() -> f64 {
    1e-2
}

fn default_tail() -> usize {
    5
}

fn default_leakage() -> f64 {
    1e-6
}

impl Default for GuardConfig {
    fn default() -> Self {
        GuardConfig {
            min_mean_photons: default_min_mean(),
            commutator_tol: default_comm_tol(),
            tail_width: default_tail(),
            leakage_bound: default_leakage(),
        }
    }
}

impl GuardConfig {
    pub fn leakage(&self) -> LeakageBound {
        LeakageBound {
            tail_width: self.tail_width,
            bound: self.leakage_bound,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.min_mean_photons >= 0.0) || !(self.commutator_tol > 0.0) || !(self.leakage_bound > 0.0) {
            return Err(Error::Config("guard thresholds must be positive".into()));
        }
        if self.tail_width == 0 {
            return Err(Error::Config("guard.tail_width must be at least 1".into()));
        }
        Ok(())
    }
}

/// Single-mode input D(α) S(r e^{iφ}) |0⟩.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputState {
    #[serde(default)]
    pub alpha: [f64; 2],
    #[serde(default)]
    pub r: f64,
    #[serde(default)]
    pub phase: f64,
}

impl InputState {
    pub fn alpha(&self) -> C64 {
        C64::new(self.alpha[0], self.alpha[1])
    }
}

pub(crate) fn cpx(z: [f64; 2]) -> C64 {
    C64::new(z[0], z[1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMethod {
    /// Number-resolving detection of ρb′, estimated copy by copy.
    Nrpd,
    /// Number-resolving detection with post-selection on per-copy intensity.
    Postselect,
    /// Common attenuation to a weak mean, single-photon detectors.
    AttenuateSpd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterMode {
    /// α′ chosen from each copy's own ρb.
    PerCopy,
    /// One α′ for all copies, chosen from the copy with the mean channel parameters.
    Reference,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub method: EstimatorMethod,
    #[serde(default = "default_target")]
    pub target_mean: f64,
    /// Explicit common transmission for attenuate_spd; overrides `target_mean` when set.
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    #[serde(default = "default_ceiling")]
    pub nrpd_ceiling: u32,
    #[serde(default = "unit")]
    pub efficiency: f64,
    #[serde(default)]
    pub dark_count_prob: f64,
    #[serde(default = "default_reps")]
    pub bootstrap_reps: usize,
}

fn default_target() -> f64 {
    0.1
}

fn default_window() -> f64 {
    0.2
}

fn default_max_lag() -> usize {
    3
}

fn default_ceiling() -> u32 {
    crate::detection::DEFAULT_NRPD_CEILING
}

fn default_reps() -> usize {
    200
}

fn default_step() -> f64 {
    0.02
}

fn default_krylov_tol() -> f64 {
    1e-12
}

/// Full ensemble run: ρt → D(α) → ρa → B_n(θ) → ρb → D(α′) → ρb′ → loss → ρb″ → detection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub schema_version: u32,
    pub n_max_a: usize,
    pub n_max_b: usize,
    /// Large displacement applied to every received copy.
    pub alpha: [f64; 2],
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "default_step")]
    pub theta_step: f64,
    pub port: BnPort,
    pub n_target: f64,
    #[serde(default = "default_counter_mode")]
    pub counter_mode: CounterMode,
    pub detection: DetectionConfig,
    pub pulses: u64,
    /// Distinct copies propagated through the full chain; pulse j is detected from copy j mod copies.
    pub copies: usize,
    pub seed: u64,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub guard: GuardConfig,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
    /// Also run the same ensemble with r_i ≡ 0 and report it alongside.
    #[serde(default)]
    pub classical_null: bool,
}

fn default_counter_mode() -> CounterMode {
    CounterMode::PerCopy
}

/// Required ratio |α|² / E|α_i|².
pub const DISPLACEMENT_DOMINANCE: f64 = 25.0;

pub(crate) fn check_schema(v: u32) -> Result<()> {
    if v != PROTOCOL_SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {v} (expected {PROTOCOL_SCHEMA_VERSION})"
        )));
    }
    Ok(())
}

pub(crate) fn check_grid(theta: f64, step: f64) -> Result<()> {
    if !(0.0..=PI / 2.0 + 1e-12).contains(&theta) {
        return Err(Error::Config(format!("theta must lie in [0, pi/2] (got {theta})")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Config(format!("theta_step must be positive (got {step})")));
    }
    Ok(())
}

pub(crate) fn check_port(port: &BnPort) -> Result<()> {
    if cpx(port.amplitude).norm_sqr() <= 0.0 || !(port.asymmetry > 0.0) {
        return Err(Error::Config(
            "port.amplitude must be nonzero and port.asymmetry positive".into(),
        ));
    }
    Ok(())
}

impl ProtocolConfig {
    pub fn alpha(&self) -> C64 {
        cpx(self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        if self.n_max_a < 2 || self.n_max_b < 2 {
            return Err(Error::Config("n_max_a and n_max_b must be at least 2".into()));
        }
        check_grid(self.theta, self.theta_step)?;
        check_port(&self.port)?;
        self.guard.validate()?;
        self.source.validate().map_err(|e| Error::Config(e.to_string()))?;
        let need = DISPLACEMENT_DOMINANCE * self.source.mean_alpha_sq();
        if self.alpha().norm_sqr() < need {
            return Err(Error::Config(format!(
                "|alpha|^2 = {:.3} must be at least {DISPLACEMENT_DOMINANCE} E|alpha_i|^2 = {need:.3}",
                self.alpha().norm_sqr()
            )));
        }
        if !(self.n_target > 0.0) {
            return Err(Error::Config("n_target must be positive".into()));
        }
        let d = &self.detection;
        if !(d.target_mean > 0.0) {
            return Err(Error::Config("detection.target_mean must be positive".into()));
        }
        if let Some(eta) = d.eta {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config(format!("detection.eta must lie in (0, 1] (got {eta})")));
            }
        }
        if !(d.efficiency > 0.0 && d.efficiency <= 1.0) {
            return Err(Error::Config(format!(
                "detection.efficiency must lie in (0, 1] (got {})",
                d.efficiency
            )));
        }
        if !(0.0..=1.0).contains(&d.dark_count_prob) {
            return Err(Error::Config("detection.dark_count_prob must lie in [0, 1]".into()));
        }
        if !(d.window > 0.0) {
            return Err(Error::Config("detection.window must be positive".into()));
        }
        if self.pulses == 0 || self.copies == 0 {
            return Err(Error::Config("need at least 1 pulse and 1 copy".into()));
        }
        if self.pulses > 1 && self.detection.max_lag as u64 >= self.pulses {
            return Err(Error::Config("detection.max_lag must be below the pulse count".into()));
        }
        if !(self.krylov_tol > 0.0) {
            return Err(Error::Config("krylov_tol must be positive".into()));
        }
        Ok(())
    }
}

/// θ sweep of B_n on a product input, reporting mode-2 number statistics and mode-1 squeezing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferSweepConfig {
    pub schema_version: u32,
    pub n_max_a: usize,
    pub n_max_b: usize,
    pub input: InputState,
    pub port: BnPort,
    #[serde(default)]
    pub phi: f64,
    pub theta_max: f64,
    #[serde(default = "default_step")]
    pub theta_step: f64,
    #[serde(default)]
    pub guard: GuardConfig,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
}

impl TransferSweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        check_grid(self.theta_max, self.theta_step)?;
        check_port(&self.port)?;
        self.guard.validate()
    }
}

/// Transfer at a fixed θ followed by a ladder of counter-displacement targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterSweepConfig {
    pub schema_version: u32,
    pub n_max_a: usize,
    pub n_max_b: usize,
    pub input: InputState,
    pub port: BnPort,
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "default_step")]
    pub theta_step: f64,
    /// Target ⟨n⟩ values as fractions of ⟨n⟩ in ρb, in the order visited.
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub guard: GuardConfig,
    #[serde(default = "default_krylov_tol")]
    pub krylov_tol: f64,
}

impl CounterSweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_schema(self.schema_version)?;
        check_grid(self.theta, self.theta_step)?;
        check_port(&self.port)?;
        self.guard.validate()?;
        if self.fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::Config("fractions must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

impl Default for ProtocolConfig {
    /// The `fig1-protocol` ensemble: |α| = 16 keeps the ρa/ρt fluctuation ratio below 0.1 for the default source law.
    fn default() -> Self {
        ProtocolConfig {
            schema_version: PROTOCOL_SCHEMA_VERSION,
            n_max_a: 440,
            n_max_b: 260,
            alpha: [16.0, 0.0],
            theta: PI / 2.0,
            phi: 0.0,
            theta_step: default_step(),
            port: BnPort {
                amplitude: [5.0, 0.0],
                asymmetry: 1.0,
                theta0: default_theta0(),
            },
            n_target: 20.0,
            counter_mode: CounterMode::PerCopy,
            detection: DetectionConfig {
                method: EstimatorMethod::AttenuateSpd,
                target_mean: default_target(),
                eta: None,
                window: default_window(),
                max_lag: default_max_lag(),
                nrpd_ceiling: default_ceiling(),
                efficiency: 1.0,
                dark_count_prob: 0.0,
                bootstrap_reps: default_reps(),
            },
            pulses: 100_000,
            copies: 4,
            seed: 20_240_601,
            source: SourceConfig::default(),
            guard: GuardConfig::default(),
            krylov_tol: default_krylov_tol(),
            classical_null: true,
        }
    }
}
