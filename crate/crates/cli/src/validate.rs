use std::path::Path;

use nalgebra::DMatrix;
use npsq_core::channels::{bs_ancilla_loss, displaced_squeezed, pure_loss, LossChannel};
use npsq_core::detection::{g2_operator, thin_distribution, NumberStats};
use npsq_core::fock::{DensityOperator, ExpmOptions, FockSpace, QuantumState, StateVector};
use npsq_core::interactions::{bn_bs_generator, conjugation_check, BeamSplitterSpec, TwoModeOperators};
use npsq_core::numberphase::{commutator_check, NumberPhaseMode, PhaseOperator};
use npsq_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::AnyConfig;
use crate::output::OutputDir;
use crate::CliError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.to_string(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub passed: bool,
    pub config: Option<String>,
    pub checks: Vec<Check>,
}

pub const ATTENUATION_ETAS: [f64; 5] = [1.0, 0.5, 0.1, 0.01, 0.001];

/// Coherent state |√n̄⟩ in a given truncation.
pub fn coherent_with_mean(space: FockSpace, mean: f64) -> StateVector {
    StateVector::coherent(space, C64::new(mean.sqrt(), 0.0))
}

/// ρ = GG†/tr with G a complex Ginibre matrix.
pub fn random_density(d: usize, seed: u64) -> Result<DensityOperator, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::<C64>::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    Ok(DensityOperator::from_matrix(&[d], m.map(|z| z / tr))?)
}

/// |⟨[n̂, Φ̂]⟩/i − 1| on a coherent state.
pub fn commutator_residual(mean: f64, n_max: usize) -> Result<f64, CliError> {
    let space = FockSpace::new(n_max)?;
    let c = commutator_check(&coherent_with_mean(space, mean), &PhaseOperator::standard(space))?;
    Ok((c / C64::i() - 1.0).norm())
}

/// Largest |g²(ρ) − g²(pure_loss(ρ, η))| over [`ATTENUATION_ETAS`] for a displaced squeezed state.
pub fn attenuation_residual() -> Result<f64, CliError> {
    let space = FockSpace::new(80)?;
    let rho = DensityOperator::from_pure(&displaced_squeezed(space, C64::new(2.0, 0.5), 0.5, 0.0, &ExpmOptions::default())?);
    let g0 = g2_operator(&rho, 0)?;
    let mut worst: f64 = 0.0;
    for eta in ATTENUATION_ETAS {
        worst = worst.max((g2_operator(&pure_loss(&rho, eta)?, 0)? - g0).abs());
    }
    Ok(worst)
}

/// Largest trace distance between the Kraus and beam-splitter-ancilla loss paths.
pub fn kraus_ancilla_residual(states: u64, levels: usize) -> Result<f64, CliError> {
    let opts = ExpmOptions::default();
    let mut worst: f64 = 0.0;
    for seed in 0..states {
        let rho = random_density(levels, 7_000 + seed)?;
        for eta in [0.9, 0.5, 0.1] {
            let d = bs_ancilla_loss(&rho, eta, &opts)?.trace_distance(&pure_loss(&rho, eta)?)?;
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

/// Largest |g² − (1 + (F − 1)/⟨n⟩)| over random mixed states.
pub fn fano_identity_residual(states: u64) -> Result<f64, CliError> {
    let mut worst: f64 = 0.0;
    for seed in 0..states {
        let rho = random_density(12, 9_000 + seed)?;
        let st = NumberStats::of(&rho, 0)?;
        let (g2, f) = (st.g2()?, st.fano()?);
        worst = worst.max((g2 - (1.0 + (f - 1.0) / st.mean)).abs());
    }
    Ok(worst)
}

/// Relative deviation of the conjugation relations on a coherent product probe.
pub fn conjugation_residual(mean: f64, theta: f64) -> Result<f64, CliError> {
    let n_max = (mean + 8.0 * mean.sqrt() + 20.0).ceil() as usize;
    let s2 = FockSpace::new(n_max)?;
    let mode = NumberPhaseMode::new(PhaseOperator::standard(s2), 2.0 * mean, 1.0)?;
    let s1 = FockSpace::new((mean / 4.0 + 8.0 * (mean / 4.0).sqrt() + 20.0) as usize)?;
    let spec = BeamSplitterSpec::number_phase(theta);
    let g = bn_bs_generator(&spec, s1, &mode)?;
    let ops = TwoModeOperators::number_phase(s1, &mode);
    let probe = coherent_with_mean(s1, mean / 4.0).product(&coherent_with_mean(s2, mean))?;
    let opts = ExpmOptions {
        tol: 1e-14,
        ..ExpmOptions::default()
    };
    Ok(conjugation_check(&spec, &g, &ops, &probe, &opts)?.max_relative_deviation())
}

fn completeness_residual() -> Result<f64, CliError> {
    let space = FockSpace::new(40)?;
    let mut worst: f64 = 0.0;
    for eta in ATTENUATION_ETAS {
        worst = worst.max(LossChannel::new(eta)?.completeness_defect(space));
    }
    Ok(worst)
}

fn semigroup_residual() -> Result<f64, CliError> {
    let rho = random_density(16, 4_242)?;
    let two = pure_loss(&pure_loss(&rho, 0.6)?, 0.3)?;
    Ok(two.trace_distance(&pure_loss(&rho, 0.18)?)?)
}

fn thinning_residual() -> Result<f64, CliError> {
    let space = FockSpace::new(60)?;
    let psi = displaced_squeezed(space, C64::new(2.5, 0.0), 0.4, 0.0, &ExpmOptions::default())?;
    let p = psi.photon_distribution(0)?;
    let g0 = NumberStats::from_distribution(&p).g2()?;
    let mut worst: f64 = 0.0;
    for eta in [0.8, 0.3, 0.05] {
        worst = worst.max((NumberStats::from_distribution(&thin_distribution(&p, eta)?).g2()? - g0).abs());
    }
    Ok(worst)
}

fn phase_hermiticity() -> Result<f64, CliError> {
    Ok(PhaseOperator::standard(FockSpace::new(64)?).operator().hermiticity_deviation())
}

/// Runs every invariant check with its tolerance.
pub fn invariant_suite() -> Result<Vec<Check>, CliError> {
    Ok(vec![
        Check::new("commutator_coherent_n30_nmax200", commutator_residual(30.0, 200)?, 5e-3),
        Check::new("phase_operator_hermiticity", phase_hermiticity()?, 1e-12),
        Check::new("attenuation_g2_invariance", attenuation_residual()?, 1e-8),
        Check::new("detector_thinning_g2_invariance", thinning_residual()?, 1e-8),
        Check::new("kraus_vs_ancilla_trace_distance", kraus_ancilla_residual(20, 10)?, 1e-10),
        Check::new("kraus_completeness", completeness_residual()?, 1e-12),
        Check::new("loss_semigroup", semigroup_residual()?, 1e-12),
        Check::new("fano_g2_identity", fano_identity_residual(100)?, 1e-10),
        Check::new("conjugation_relations_n30_theta0.3", conjugation_residual(30.0, 0.3)?, 1e-2),
    ])
}

/// Validates `config` (or `preset`) when given, then runs the invariant suite and writes the report.
pub fn run_validation(config: Option<&Path>, preset: Option<&str>, out: &Path) -> Result<(), CliError> {
    let label = match (config, preset) {
        (Some(p), _) => {
            AnyConfig::load(p)?.validate()?;
            Some(p.display().to_string())
        }
        (None, Some(name)) => {
            AnyConfig::preset(name)?.validate()?;
            Some(name.to_string())
        }
        (None, None) => None,
    };
    let checks = invariant_suite()?;
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!(
            "{} {:<40} residual {:.3e} (tol {:.0e})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        );
    }
    let mut dir = OutputDir::create(out)?;
    dir.json(
        "validate",
        REPORT_FILE,
        &Report {
            schema_version: REPORT_SCHEMA_VERSION,
            passed,
            config: label,
            checks: checks.clone(),
        },
    )?;
    if !passed {
        let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(CliError::Invariant(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}
