use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::config::{CounterSweepConfig, TransferSweepConfig};
use super::pipeline::{choose_counter_displacement, Coupler, GuardReport};
use crate::channels::{displace_density, displaced_squeezed};
use crate::detection::NumberStats;
use crate::error::{Error, Result};
use crate::fock::{DensityOperator, ExpmOptions, QuadratureMoments, QuantumState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferPoint {
    pub theta: f64,
    pub mean_b: f64,
    pub g2_b: f64,
    pub fano_b: f64,
    pub var_x_a: f64,
    pub var_p_a: f64,
    pub min_variance_a: f64,
    pub commutator_residual: f64,
    pub leakage: f64,
    pub guard_passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferSweep {
    pub points: Vec<TransferPoint>,
    /// Reasons of the guard failure that ended the sweep early.
    pub stopped: Option<String>,
}

impl TransferSweep {
    /// Points that passed the guard.
    pub fn valid(&self) -> impl Iterator<Item = &TransferPoint> {
        self.points.iter().filter(|p| p.guard_passed)
    }
}

fn opts(tol: f64) -> ExpmOptions {
    ExpmOptions {
        tol,
        ..ExpmOptions::default()
    }
}

/// Mode-2 number statistics and mode-1 quadratures along a guarded θ grid.
pub fn transfer_sweep(cfg: &TransferSweepConfig) -> Result<TransferSweep> {
    cfg.validate()?;
    let opts = opts(cfg.krylov_tol);
    let coupler = Coupler::new(cfg.n_max_a, cfg.n_max_b, &cfg.port, cfg.phi)?;
    let inp = &cfg.input;
    let input = displaced_squeezed(coupler.a_space(), inp.alpha(), inp.r, inp.phase, &opts)?;
    let mut points = Vec::new();
    let end = coupler.sweep(&input, cfg.theta_max, cfg.theta_step, &cfg.guard, &opts, |theta, psi, g| {
        points.push(transfer_point(theta, psi, g)?);
        Ok(())
    })?;
    Ok(TransferSweep {
        points,
        stopped: end.tripped().then(|| end.guard.summary()),
    })
}

fn transfer_point<S: QuantumState>(theta: f64, psi: &S, guard: &GuardReport) -> Result<TransferPoint> {
    let stats = NumberStats::from_distribution(&psi.photon_distribution(1)?);
    let q = QuadratureMoments::of(psi, 0)?;
    Ok(TransferPoint {
        theta,
        mean_b: stats.mean,
        g2_b: stats.g2()?,
        fano_b: stats.fano()?,
        var_x_a: q.var_x,
        var_p_a: q.var_p,
        min_variance_a: q.min_variance(),
        commutator_residual: guard.commutator_residual,
        leakage: guard.leakage,
        guard_passed: guard.passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterPoint {
    pub fraction: f64,
    pub n_target: f64,
    pub alpha_prime: [f64; 2],
    pub predicted_mean: f64,
    pub mean: f64,
    pub g2: f64,
    pub fano: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterSweep {
    pub theta: f64,
    pub mean_b: f64,
    pub g2_b: f64,
    pub fano_b: f64,
    pub points: Vec<CounterPoint>,
}

/// Transfers to `theta` and walks ρb down the requested ⟨n⟩ ladder by counter-displacement.
pub fn counter_displace_sweep(cfg: &CounterSweepConfig) -> Result<CounterSweep> {
    cfg.validate()?;
    let opts = opts(cfg.krylov_tol);
    let coupler = Coupler::new(cfg.n_max_a, cfg.n_max_b, &cfg.port, cfg.phi)?;
    let inp = &cfg.input;
    let input = displaced_squeezed(coupler.a_space(), inp.alpha(), inp.r, inp.phase, &opts)?;
    let end = coupler.sweep(&input, cfg.theta, cfg.theta_step, &cfg.guard, &opts, |_, _, _| Ok(()))?;
    if end.tripped() {
        return Err(Error::GuardTripped(format!(
            "at theta = {:.4}: {}",
            end.theta,
            end.guard.summary()
        )));
    }
    let rho_b = end.state.reduced(1)?;
    let base = NumberStats::of(&rho_b, 0)?;
    let bound = cfg.guard.leakage();
    let points = cfg
        .fractions
        .iter()
        .map(|&f| {
            let target = f * base.mean;
            let cd = choose_counter_displacement(&rho_b, target)?;
            let out: DensityOperator = if cd.alpha_prime == C64::new(0.0, 0.0) {
                rho_b.clone()
            } else {
                displace_density(&rho_b, cd.alpha_prime, &bound, &opts)?
            };
            let s = NumberStats::of(&out, 0)?;
            Ok(CounterPoint {
                fraction: f,
                n_target: target,
                alpha_prime: [cd.alpha_prime.re, cd.alpha_prime.im],
                predicted_mean: cd.predicted_mean,
                mean: s.mean,
                g2: s.g2()?,
                fano: s.fano()?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(CounterSweep {
        theta: end.theta,
        mean_b: base.mean,
        g2_b: base.g2()?,
        fano_b: base.fano()?,
        points,
    })
}
