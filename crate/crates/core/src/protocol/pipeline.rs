use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::config::{cpx, BnPort, CounterMode, GuardConfig, ProtocolConfig};
use crate::channels::{displace, displace_density, ChannelDraw};
use crate::detection::NumberStats;
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, ExpmOptions, FockSpace, QuadratureMoments, QuantumState, StateVector};
use crate::interactions::{BeamSplitterSpec, BeamSplitterVariant, BnCoupling};
use crate::numberphase::{commutator_check, NumberPhaseMode, PhaseOperator};

/// Outcome of the validity guard on the number-phase mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GuardReport {
    pub mean_photons: f64,
    pub commutator: [f64; 2],
    /// |⟨[n̂, Φ̂]⟩ − i|.
    pub commutator_residual: f64,
    pub leakage: f64,
    pub passed: bool,
    pub reasons: Vec<String>,
}

impl GuardReport {
    fn assess(mean: f64, comm: C64, leakage: f64, cfg: &GuardConfig) -> Self {
        let residual = (comm - C64::i()).norm();
        let mut reasons = Vec::new();
        if !(mean >= cfg.min_mean_photons) {
            reasons.push(format!("mean photon number {mean:.3} below {}", cfg.min_mean_photons));
        }
        if !(residual <= cfg.commutator_tol) {
            reasons.push(format!(
                "commutator residual {residual:.3e} above {:.1e}",
                cfg.commutator_tol
            ));
        }
        if !(leakage <= cfg.leakage_bound) {
            reasons.push(format!("leakage {leakage:.3e} above {:.1e}", cfg.leakage_bound));
        }
        GuardReport {
            mean_photons: mean,
            commutator: [comm.re, comm.im],
            commutator_residual: residual,
            leakage,
            passed: reasons.is_empty(),
            reasons,
        }
    }

    pub fn summary(&self) -> String {
        self.reasons.join("; ")
    }
}

/// ⟨n⟩ ≥ threshold, |⟨[n̂, Φ̂]⟩ − i| ≤ tol on `mode`, and leakage of every mode within bound.
pub fn validity_guard<S: QuantumState>(
    state: &S,
    mode: usize,
    phase: &PhaseOperator,
    cfg: &GuardConfig,
) -> Result<GuardReport> {
    let rho = state.reduced(mode)?;
    let mean = NumberStats::of(&rho, 0)?.mean;
    let comm = commutator_check(&rho, phase)?;
    let leakage = state.leakage(cfg.tail_width)?;
    Ok(GuardReport::assess(mean, comm, leakage, cfg))
}

/// [`validity_guard`] on mode 1 of a two-mode pure state, evaluated row by row with the FFT form of Φ.
pub fn validity_guard_two_mode(psi: &StateVector, phase: &PhaseOperator, cfg: &GuardConfig) -> Result<GuardReport> {
    let dims = psi.dims();
    if dims.len() != 2 || dims[1] != phase.space().dim() {
        return Err(Error::DimensionMismatch {
            expected: vec![dims.first().copied().unwrap_or(0), phase.space().dim()],
            found: dims.to_vec(),
        });
    }
    let d2 = dims[1];
    let mut buf = vec![C64::new(0.0, 0.0); d2];
    let mut mean = 0.0;
    let mut z = C64::new(0.0, 0.0);
    for row in psi.amplitudes().chunks(d2) {
        phase.apply_fft(row, &mut buf);
        for (k, (x, px)) in row.iter().zip(&buf).enumerate() {
            mean += k as f64 * x.norm_sqr();
            z += x.conj() * px * k as f64;
        }
    }
    let comm = C64::new(0.0, 2.0 * z.im);
    let leakage = psi.leakage(cfg.tail_width)?;
    Ok(GuardReport::assess(mean, comm, leakage, cfg))
}

/// Mode-1 ⊗ number-phase-port geometry with the matrix-free B_n coupling.
#[derive(Clone, Debug)]
pub struct Coupler {
    a_space: FockSpace,
    port_state: StateVector,
    coupling: BnCoupling,
}

/// Where a guarded θ sweep ended.
#[derive(Clone, Debug)]
pub struct SweepEnd {
    pub state: StateVector,
    pub theta: f64,
    pub guard: GuardReport,
}

impl SweepEnd {
    pub fn tripped(&self) -> bool {
        !self.guard.passed
    }
}

impl Coupler {
    pub fn new(n_max_a: usize, n_max_b: usize, port: &BnPort, phi: f64) -> Result<Self> {
        let a_space = FockSpace::new(n_max_a)?;
        let b_space = FockSpace::new(n_max_b)?;
        let port_state = StateVector::coherent(b_space, cpx(port.amplitude));
        let mode = NumberPhaseMode::from_reference(PhaseOperator::new(b_space, port.theta0), &port_state, port.asymmetry)?;
        let spec = BeamSplitterSpec::new(0.0, phi, BeamSplitterVariant::NumberPhase)?;
        let coupling = BnCoupling::new(&spec, a_space, &mode)?;
        Ok(Coupler {
            a_space,
            port_state,
            coupling,
        })
    }

    pub fn a_space(&self) -> FockSpace {
        self.a_space
    }

    pub fn mode(&self) -> &NumberPhaseMode {
        self.coupling.mode()
    }

    pub fn coupling(&self) -> &BnCoupling {
        &self.coupling
    }

    pub fn port_state(&self) -> &StateVector {
        &self.port_state
    }

    /// Applies B_n from 0 to `theta_max` in steps of at most `step`, evaluating the guard at θ = 0 and after
    /// every step; `visit` sees each point. Stops at the first failing point.
    pub fn sweep<F>(
        &self,
        input: &StateVector,
        theta_max: f64,
        step: f64,
        guard: &GuardConfig,
        opts: &ExpmOptions,
        mut visit: F,
    ) -> Result<SweepEnd>
    where
        F: FnMut(f64, &StateVector, &GuardReport) -> Result<()>,
    {
        if !(step > 0.0) || !(theta_max >= 0.0) {
            return Err(Error::param("theta_step", "need step > 0 and theta_max >= 0"));
        }
        let phase = self.mode().phase();
        let mut psi = input.product(&self.port_state)?;
        let mut report = validity_guard_two_mode(&psi, phase, guard)?;
        visit(0.0, &psi, &report)?;
        let steps = ((theta_max / step) - 1e-9).ceil().max(0.0) as usize;
        let mut theta = 0.0;
        for k in 1..=steps {
            if !report.passed {
                break;
            }
            let next = (k as f64 * step).min(theta_max);
            psi = psi.evolve(&self.coupling, next - theta, opts)?;
            theta = next;
            report = validity_guard_two_mode(&psi, phase, guard)?;
            visit(theta, &psi, &report)?;
        }
        Ok(SweepEnd {
            state: psi,
            theta,
            guard: report,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterDisplacement {
    pub alpha_prime: C64,
    /// ⟨n⟩ of D(α′) ρ D(α′)† from the first two moments of ρ.
    pub predicted_mean: f64,
}

/// α′ along −⟨a⟩ that brings ⟨n⟩ to `n_target`: with A = ⟨a⟩ and n = ⟨n⟩, displacing by
/// −t A/|A| gives n − 2t|A| + t², so t = |A| − √(|A|² − n + n_target).
pub fn choose_counter_displacement(rho: &DensityOperator, n_target: f64) -> Result<CounterDisplacement> {
    let space = FockSpace::new(rho.dim() - 1)?;
    let amp = rho.expectation(&space.annihilation())?;
    let mean = rho.expectation(&space.number())?.re;
    if !(n_target > 0.0 && n_target <= mean) {
        return Err(Error::param(
            "n_target",
            format!("must lie in (0, {mean:.4}] (got {n_target})"),
        ));
    }
    let floor = mean - amp.norm_sqr();
    if n_target < floor {
        return Err(Error::param(
            "n_target",
            format!("below the incoherent floor <n> - |<a>|^2 = {floor:.4}"),
        ));
    }
    let a = amp.norm();
    if a == 0.0 {
        return Err(Error::param("n_target", "state has zero mean amplitude"));
    }
    let t = a - (amp.norm_sqr() - mean + n_target).sqrt();
    Ok(CounterDisplacement {
        alpha_prime: -amp * (t / a),
        predicted_mean: mean - 2.0 * t * a + t * t,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    RhoT,
    RhoA,
    RhoB,
    RhoBPrime,
    RhoBDoublePrime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub stage: Stage,
    pub mean_photons: f64,
    pub fano: Option<f64>,
    pub g2: Option<f64>,
    pub var_x: f64,
    pub min_variance: f64,
    pub leakage: f64,
    pub commutator_residual: Option<f64>,
}

impl StageDiagnostics {
    pub fn of<S: QuantumState>(state: &S, stage: Stage, tail_width: usize, phase: Option<&PhaseOperator>) -> Result<Self> {
        let rho = state.reduced(0)?;
        let stats = NumberStats::of(&rho, 0)?;
        let quad = QuadratureMoments::of(&rho, 0)?;
        let commutator_residual = match phase {
            Some(ph) => Some((commutator_check(&rho, ph)? - C64::i()).norm()),
            None => None,
        };
        Ok(StageDiagnostics {
            stage,
            mean_photons: stats.mean,
            fano: stats.fano().ok(),
            g2: stats.g2().ok(),
            var_x: quad.var_x,
            min_variance: quad.min_variance(),
            leakage: rho.leakage(tail_width.min(rho.dim()))?,
            commutator_residual,
        })
    }
}

/// Quadrature variances of mode 1 after the transfer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode1Quadratures {
    pub var_x: f64,
    pub var_p: f64,
    pub min_variance: f64,
}

impl From<QuadratureMoments> for Mode1Quadratures {
    fn from(q: QuadratureMoments) -> Self {
        Mode1Quadratures {
            var_x: q.var_x,
            var_p: q.var_p,
            min_variance: q.min_variance(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DetectionTally {
    pub shots: u64,
    pub s1: u64,
    pub s2: u64,
    pub c: u64,
    pub g2: Option<f64>,
}

/// Per-copy trace through the chain; later stages are missing when `aborted` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseRecord {
    pub index: u64,
    pub alpha_i: [f64; 2],
    pub r_i: f64,
    pub rejections: u32,
    pub stages: Vec<StageDiagnostics>,
    pub theta_reached: f64,
    pub guard: Option<GuardReport>,
    pub mode1_after_transfer: Option<Mode1Quadratures>,
    pub alpha_prime: Option<[f64; 2]>,
    pub eta: Option<f64>,
    pub aborted: Option<String>,
    pub detection: Option<DetectionTally>,
    pub post_selected: Option<bool>,
}

impl PulseRecord {
    fn new(draw: &ChannelDraw) -> Self {
        PulseRecord {
            index: draw.index,
            alpha_i: [draw.alpha.re, draw.alpha.im],
            r_i: draw.r,
            rejections: draw.rejections,
            stages: Vec::new(),
            theta_reached: 0.0,
            guard: None,
            mode1_after_transfer: None,
            alpha_prime: None,
            eta: None,
            aborted: None,
            detection: None,
            post_selected: None,
        }
    }

    pub fn stage(&self, stage: Stage) -> Option<&StageDiagnostics> {
        self.stages.iter().find(|s| s.stage == stage)
    }
}

/// Record plus the states later stages need.
#[derive(Clone, Debug)]
pub struct CopyOutcome {
    pub record: PulseRecord,
    pub rho_b: Option<DensityOperator>,
    pub rho_b_prime: Option<DensityOperator>,
}

impl CopyOutcome {
    fn abort(mut record: PulseRecord, reason: String) -> Self {
        record.aborted = Some(reason);
        CopyOutcome {
            record,
            rho_b: None,
            rho_b_prime: None,
        }
    }
}

pub(crate) fn expm_options(cfg: &ProtocolConfig) -> ExpmOptions {
    ExpmOptions {
        tol: cfg.krylov_tol,
        ..ExpmOptions::default()
    }
}

/// How α′ is fixed for a copy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CounterChoice {
    PerCopy,
    Fixed(C64),
}

/// Runs one copy from ρt to ρb′. Leakage or guard failures end in an aborted record, not an error.
pub fn run_copy(
    cfg: &ProtocolConfig,
    coupler: &Coupler,
    draw: &ChannelDraw,
    counter: CounterChoice,
) -> Result<CopyOutcome> {
    let opts = expm_options(cfg);
    let tail = cfg.guard.tail_width;
    let bound = cfg.guard.leakage();
    let mut record = PulseRecord::new(draw);

    let rho_t = draw.state(coupler.a_space(), cfg.source.squeeze_phase, &opts)?;
    record.stages.push(StageDiagnostics::of(&rho_t, Stage::RhoT, tail, None)?);

    let rho_a = match displace(&rho_t, cfg.alpha(), &bound, &opts) {
        Ok(s) => s,
        Err(Error::LeakageExceeded { leakage, .. }) => {
            return Ok(CopyOutcome::abort(record, format!("leakage {leakage:.3e} after D(alpha)")));
        }
        Err(e) => return Err(e),
    };
    record.stages.push(StageDiagnostics::of(&rho_a, Stage::RhoA, tail, None)?);

    let end = coupler.sweep(&rho_a, cfg.theta, cfg.theta_step, &cfg.guard, &opts, |_, _, _| Ok(()))?;
    record.theta_reached = end.theta;
    record.guard = Some(end.guard.clone());
    if end.tripped() {
        let reason = format!("guard tripped at theta = {:.4}: {}", end.theta, end.guard.summary());
        return Ok(CopyOutcome::abort(record, reason));
    }
    record.mode1_after_transfer = Some(QuadratureMoments::of(&end.state, 0)?.into());
    let rho_b = end.state.reduced(1)?;
    record.stages.push(StageDiagnostics::of(&rho_b, Stage::RhoB, tail, Some(coupler.mode().phase()))?);

    let alpha_prime = match counter {
        CounterChoice::Fixed(a) => a,
        CounterChoice::PerCopy => match choose_counter_displacement(&rho_b, cfg.n_target) {
            Ok(c) => c.alpha_prime,
            Err(e) => return Ok(CopyOutcome::abort(record, format!("counter-displacement: {e}"))),
        },
    };
    record.alpha_prime = Some([alpha_prime.re, alpha_prime.im]);
    let rho_bp = match displace_density(&rho_b, alpha_prime, &bound, &opts) {
        Ok(s) => s,
        Err(Error::LeakageExceeded { leakage, .. }) => {
            return Ok(CopyOutcome::abort(record, format!("leakage {leakage:.3e} after D(alpha')")));
        }
        Err(e) => return Err(e),
    };
    record.stages.push(StageDiagnostics::of(&rho_bp, Stage::RhoBPrime, tail, None)?);
    Ok(CopyOutcome {
        record,
        rho_b: Some(rho_b),
        rho_b_prime: Some(rho_bp),
    })
}

/// α′ shared by every copy under [`CounterMode::Reference`]: chosen on the copy with α_i and r_i at their law means.
pub fn reference_counter_displacement(cfg: &ProtocolConfig, coupler: &Coupler) -> Result<C64> {
    let draw = super::ensemble::reference_draw(&cfg.source);
    let out = run_copy(cfg, coupler, &draw, CounterChoice::PerCopy)?;
    match (out.record.aborted, out.record.alpha_prime) {
        (None, Some(a)) => Ok(C64::new(a[0], a[1])),
        (reason, _) => Err(Error::GuardTripped(format!(
            "reference copy failed: {}",
            reason.unwrap_or_default()
        ))),
    }
}

pub(crate) fn counter_choice(cfg: &ProtocolConfig, coupler: &Coupler) -> Result<CounterChoice> {
    Ok(match cfg.counter_mode {
        CounterMode::PerCopy => CounterChoice::PerCopy,
        CounterMode::Reference => CounterChoice::Fixed(reference_counter_displacement(cfg, coupler)?),
    })
}

/// Single-pulse chain through ρb″ with the attenuation chosen from this pulse alone.
pub fn run_pulse(cfg: &ProtocolConfig, draw: &ChannelDraw) -> Result<CopyOutcome> {
    cfg.validate()?;
    let coupler = Coupler::new(cfg.n_max_a, cfg.n_max_b, &cfg.port, cfg.phi)?;
    let choice = counter_choice(cfg, &coupler)?;
    let mut out = run_copy(cfg, &coupler, draw, choice)?;
    if let Some(rho) = out.rho_b_prime.as_ref() {
        let mean = NumberStats::of(rho, 0)?.mean;
        let eta = super::ensemble::common_eta(cfg, &[mean])?;
        let rho_bpp = super::ensemble::attenuate(rho, eta)?;
        out.record.eta = Some(eta);
        out.record
            .stages
            .push(StageDiagnostics::of(&rho_bpp, Stage::RhoBDoublePrime, cfg.guard.tail_width, None)?);
    }
    Ok(out)
}
