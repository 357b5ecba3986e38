//! Displacement, zero-temperature loss and the random-displacement source.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::fock::{DensityOperator, ExpmOptions, FockSpace, QuantumState, StateVector};
use crate::interactions::{standard_bs_generator, BeamSplitterSpec};

/// Population allowed in the top `tail_width` levels of every mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageBound {
    pub tail_width: usize,
    pub bound: f64,
}

impl Default for LeakageBound {
    fn default() -> Self {
        LeakageBound {
            tail_width: 5,
            bound: 1e-6,
        }
    }
}

impl LeakageBound {
    pub fn check<S: QuantumState>(&self, state: &S) -> Result<f64> {
        let leakage = state.leakage(self.tail_width)?;
        if leakage > self.bound {
            return Err(Error::LeakageExceeded {
                leakage,
                bound: self.bound,
            });
        }
        Ok(leakage)
    }
}

fn single_space(dims: &[usize]) -> Result<FockSpace> {
    if dims.len() != 1 {
        return Err(Error::InvalidTruncation(format!(
            "expected a single-mode state, got dims {dims:?}"
        )));
    }
    FockSpace::new(dims[0] - 1)
}

/// D(α)|ψ⟩ on a single-mode pure state; fails if the result leaks past `bound`.
pub fn displace(psi: &StateVector, alpha: C64, bound: &LeakageBound, opts: &ExpmOptions) -> Result<StateVector> {
    let space = single_space(psi.dims())?;
    let out = psi.evolve(&space.displacement_generator(alpha), 1.0, opts)?;
    bound.check(&out)?;
    Ok(out)
}

/// D(α) ρ D(α)† on a single-mode density.
pub fn displace_density(
    rho: &DensityOperator,
    alpha: C64,
    bound: &LeakageBound,
    opts: &ExpmOptions,
) -> Result<DensityOperator> {
    let space = single_space(rho.dims())?;
    let out = rho.evolve(&space.displacement_generator(alpha), 1.0, opts)?;
    bound.check(&out)?;
    Ok(out)
}

/// D(α) S(r e^{iφ}) |0⟩; real positive r with real α squeezes the amplitude quadrature.
pub fn displaced_squeezed(space: FockSpace, alpha: C64, r: f64, phase: f64, opts: &ExpmOptions) -> Result<StateVector> {
    let vac = StateVector::vacuum(space);
    let sq = if r == 0.0 {
        vac
    } else {
        vac.evolve(&space.squeeze_generator(C64::from_polar(r, phase)), 1.0, opts)?
    };
    if alpha == C64::new(0.0, 0.0) {
        return Ok(sq);
    }
    sq.evolve(&space.displacement_generator(alpha), 1.0, opts)
}

/// Zero-temperature pure-loss channel with transmission η.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::param("eta", format!("transmission must lie in (0, 1] (got {eta})")));
        }
        Ok(LossChannel { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// ⟨n−k| K_k |n⟩ = √(C(n,k) (1−η)^k η^{n−k}); zero when k > n.
    fn amplitude(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        if k == 0 {
            return self.eta.powf(n as f64 / 2.0);
        }
        if self.eta == 1.0 {
            return 0.0;
        }
        let ln = ln_binomial(n as u64, k as u64) + k as f64 * (1.0 - self.eta).ln() + (n - k) as f64 * self.eta.ln();
        (0.5 * ln).exp()
    }

    /// Kraus operators K_0..K_{n_max} as dense matrices.
    pub fn kraus(&self, space: FockSpace) -> Vec<DMatrix<C64>> {
        let d = space.dim();
        (0..d)
            .map(|k| {
                let mut m = DMatrix::zeros(d, d);
                for n in k..d {
                    m[(n - k, n)] = C64::new(self.amplitude(n, k), 0.0);
                }
                m
            })
            .collect()
    }

    /// max |Σ K_k† K_k − I|.
    pub fn completeness_defect(&self, space: FockSpace) -> f64 {
        let d = space.dim();
        let mut sum = DMatrix::<C64>::zeros(d, d);
        for k in self.kraus(space) {
            sum += k.adjoint() * &k;
        }
        (sum - DMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Σ_k K_k ρ K_k† evaluated element-wise: ρ'(n−k, m−k) += A(n,k) A(m,k) ρ(n, m).
    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let space = single_space(rho.dims())?;
        if self.eta == 1.0 {
            return Ok(rho.clone());
        }
        let d = space.dim();
        let amp: Vec<Vec<f64>> = (0..d).map(|n| (0..=n).map(|k| self.amplitude(n, k)).collect()).collect();
        let src = rho.matrix();
        let mut out = DMatrix::<C64>::zeros(d, d);
        for n in 0..d {
            for m in 0..d {
                let z = src[(n, m)];
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..=n.min(m) {
                    out[(n - k, m - k)] += z * (amp[n][k] * amp[m][k]);
                }
            }
        }
        DensityOperator::from_matrix_unchecked(rho.dims(), out)
    }
}

/// Pure loss through the Kraus representation.
pub fn pure_loss(rho: &DensityOperator, eta: f64) -> Result<DensityOperator> {
    LossChannel::new(eta)?.apply(rho)
}

/// Largest single-mode n_max accepted by [`bs_ancilla_loss`].
pub const ANCILLA_MAX_N: usize = 30;

/// Pure loss as a beam splitter with a vacuum ancilla (cos²θ = η), ancilla traced out.
pub fn bs_ancilla_loss(rho: &DensityOperator, eta: f64, opts: &ExpmOptions) -> Result<DensityOperator> {
    let ch = LossChannel::new(eta)?;
    let space = single_space(rho.dims())?;
    if space.n_max() > ANCILLA_MAX_N {
        return Err(Error::InvalidTruncation(format!(
            "reference loss path supports n_max <= {ANCILLA_MAX_N} (got {})",
            space.n_max()
        )));
    }
    let theta = ch.eta().sqrt().acos();
    let spec = BeamSplitterSpec::standard(theta);
    let g = standard_bs_generator(&spec, space, space)?;
    let anc = DensityOperator::from_pure(&StateVector::vacuum(space));
    rho.tensor(&anc)?.evolve(&g, theta, opts)?.partial_trace(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum AlphaLaw {
    /// Complex Gaussian with independent quadratures of standard deviation `sigma`.
    ComplexGaussian { mean: [f64; 2], sigma: f64 },
    Fixed { value: [f64; 2] },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum SqueezeLaw {
    Uniform { min: f64, max: f64 },
    Fixed { value: f64 },
}

/// Distribution of the channel displacements α_i and squeezing r_i.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceConfig {
    pub alpha: AlphaLaw,
    pub squeeze: SqueezeLaw,
    /// Squeezing-ellipse angle of every copy.
    #[serde(default)]
    pub squeeze_phase: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        SourceConfig {
            alpha: AlphaLaw::ComplexGaussian {
                mean: [1.0, 0.0],
                sigma: 0.5,
            },
            squeeze: SqueezeLaw::Uniform { min: 0.3, max: 0.5 },
            squeeze_phase: 0.0,
        }
    }
}

impl SourceConfig {
    pub fn validate(&self) -> Result<()> {
        if let AlphaLaw::ComplexGaussian { sigma, .. } = self.alpha {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::param("sigma", format!("must be non-negative (got {sigma})")));
            }
        }
        match self.squeeze {
            SqueezeLaw::Uniform { min, max } => {
                if !(min <= max) || min < 0.0 {
                    return Err(Error::param(
                        "squeeze",
                        format!("need 0 <= min <= max (got [{min}, {max}])"),
                    ));
                }
            }
            SqueezeLaw::Fixed { value } => {
                if value < 0.0 {
                    return Err(Error::param("squeeze", format!("must be non-negative (got {value})")));
                }
            }
        }
        Ok(())
    }

    /// E|α_i|² of the configured law.
    pub fn mean_alpha_sq(&self) -> f64 {
        match self.alpha {
            AlphaLaw::ComplexGaussian { mean, sigma } => mean[0] * mean[0] + mean[1] * mean[1] + 2.0 * sigma * sigma,
            AlphaLaw::Fixed { value } => value[0] * value[0] + value[1] * value[1],
        }
    }

    /// The same source with every copy unsqueezed.
    pub fn without_squeezing(&self) -> Self {
        SourceConfig {
            squeeze: SqueezeLaw::Fixed { value: 0.0 },
            ..*self
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> (C64, f64) {
        let alpha = match self.alpha {
            AlphaLaw::ComplexGaussian { mean, sigma } => {
                if sigma == 0.0 {
                    C64::new(mean[0], mean[1])
                } else {
                    let n = Normal::new(0.0, sigma).expect("validated sigma");
                    C64::new(mean[0] + n.sample(rng), mean[1] + n.sample(rng))
                }
            }
            AlphaLaw::Fixed { value } => C64::new(value[0], value[1]),
        };
        let r = match self.squeeze {
            SqueezeLaw::Uniform { min, max } if max > min => rng.random_range(min..max),
            SqueezeLaw::Uniform { min, .. } => min,
            SqueezeLaw::Fixed { value } => value,
        };
        (alpha, r)
    }
}

/// One copy's channel parameters, reproducible from (master seed, index).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelDraw {
    pub index: u64,
    pub alpha: C64,
    pub r: f64,
    /// Number of rejected samples before this one.
    pub rejections: u32,
}

impl ChannelDraw {
    /// ρ_t = D(α_i) S(r_i) |0⟩.
    pub fn state(&self, space: FockSpace, phase: f64, opts: &ExpmOptions) -> Result<StateVector> {
        displaced_squeezed(space, self.alpha, self.r, phase, opts)
    }
}

/// Maximum rejected samples per pulse before [`draw_pulse`] gives up.
pub const MAX_REJECTIONS: u32 = 10_000;

/// Per-pulse ChaCha8 stream: seeded by the master seed, stream selected by the pulse index.
pub fn pulse_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Draws copy `index`, resampling until `accept` holds.
pub fn draw_pulse<F>(cfg: &SourceConfig, master_seed: u64, index: u64, accept: F) -> Result<ChannelDraw>
where
    F: Fn(&ChannelDraw) -> bool,
{
    cfg.validate()?;
    let mut rng = pulse_rng(master_seed, index);
    for rejections in 0..=MAX_REJECTIONS {
        let (alpha, r) = cfg.sample(&mut rng);
        let draw = ChannelDraw {
            index,
            alpha,
            r,
            rejections,
        };
        if accept(&draw) {
            return Ok(draw);
        }
    }
    Err(Error::param(
        "source",
        format!("pulse {index}: no acceptable draw after {MAX_REJECTIONS} attempts"),
    ))
}

pub fn draw_pulses(cfg: &SourceConfig, count: usize, master_seed: u64) -> Result<Vec<ChannelDraw>> {
    draw_pulses_filtered(cfg, count, master_seed, |_| true)
}

/// Draws `count` copies, each truncated to the region where `accept` holds.
pub fn draw_pulses_filtered<F>(cfg: &SourceConfig, count: usize, master_seed: u64, accept: F) -> Result<Vec<ChannelDraw>>
where
    F: Fn(&ChannelDraw) -> bool,
{
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    (0..count as u64).map(|i| draw_pulse(cfg, master_seed, i, &accept)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::QuadratureMoments;
    use proptest::prelude::*;
    use rand_distr::StandardNormal;

    fn space(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    fn g2(p: &[f64]) -> f64 {
        let n: f64 = p.iter().enumerate().map(|(k, w)| k as f64 * w).sum();
        let nn: f64 = p.iter().enumerate().map(|(k, w)| (k * k.saturating_sub(1)) as f64 * w).sum();
        nn / (n * n)
    }

    fn random_density(d: usize, seed: u64) -> DensityOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::<C64>::from_fn(d, d, |_, _| {
            C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        let m = &g * g.adjoint();
        let tr = m.trace().re;
        DensityOperator::from_matrix(&[d], m.map(|z| z / tr)).unwrap()
    }

    fn mean_n(rho: &DensityOperator) -> f64 {
        rho.photon_distribution(0).unwrap().iter().enumerate().map(|(k, w)| k as f64 * w).sum()
    }

    #[test]
    fn displacement_basics() {
        let s = space(60);
        let opts = ExpmOptions::default();
        let bound = LeakageBound::default();
        let vac = StateVector::vacuum(s);
        assert_eq!(displace(&vac, C64::new(0.0, 0.0), &bound, &opts).unwrap(), vac);
        let coh = displace(&vac, C64::new(3.0, 0.0), &bound, &opts).unwrap();
        assert!((g2(&coh.photon_distribution(0).unwrap()) - 1.0).abs() < 1e-8);
        let tight = LeakageBound {
            tail_width: 5,
            bound: 1e-30,
        };
        assert!(matches!(
            displace(&vac, C64::new(6.0, 0.0), &tight, &opts),
            Err(Error::LeakageExceeded { .. })
        ));
    }

    #[test]
    fn displacement_preserves_min_variance() {
        let s = space(90);
        let opts = ExpmOptions::default();
        let sq = displaced_squeezed(s, C64::new(0.0, 0.0), 0.5, 0.0, &opts).unwrap();
        let moved = displace(&sq, C64::new(5.0, 0.0), &LeakageBound::default(), &opts).unwrap();
        let v0 = QuadratureMoments::of(&sq, 0).unwrap();
        let v1 = QuadratureMoments::of(&moved, 0).unwrap();
        assert!((v0.min_variance() - v1.min_variance()).abs() < 1e-8);
        assert!((v0.min_variance() - 0.5 * (-1.0f64).exp()).abs() < 1e-10);
        assert!((v1.mean_a - C64::new(5.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn density_displacement_matches_pure() {
        let s = space(40);
        let opts = ExpmOptions::default();
        let psi = displaced_squeezed(s, C64::new(0.5, 0.0), 0.3, 0.0, &opts).unwrap();
        let alpha = C64::new(1.0, 2.0);
        let bound = LeakageBound::default();
        let a = DensityOperator::from_pure(&displace(&psi, alpha, &bound, &opts).unwrap());
        let b = displace_density(&DensityOperator::from_pure(&psi), alpha, &bound, &opts).unwrap();
        assert!(a.trace_distance(&b).unwrap() < 1e-10);
    }

    #[test]
    fn loss_validation_and_identity() {
        assert!(LossChannel::new(0.0).is_err());
        assert!(LossChannel::new(1.5).is_err());
        assert!(LossChannel::new(f64::NAN).is_err());
        let rho = random_density(8, 1);
        assert_eq!(pure_loss(&rho, 1.0).unwrap(), rho);
    }

    #[test]
    fn kraus_set_is_complete() {
        let s = space(40);
        for &eta in &[1.0, 0.9, 0.5, 0.1, 0.01, 1e-3] {
            let ch = LossChannel::new(eta).unwrap();
            assert!(ch.completeness_defect(s) < 1e-10, "eta {eta}");
            let rho = random_density(41, 7);
            let elementwise = ch.apply(&rho).unwrap();
            let mut kraus = DMatrix::<C64>::zeros(41, 41);
            for k in ch.kraus(s) {
                kraus += &k * rho.matrix() * k.adjoint();
            }
            let d = (elementwise.matrix() - kraus).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(d < 1e-14);
        }
    }

    #[test]
    fn coherent_maps_to_coherent() {
        let s = space(50);
        let alpha = C64::new(2.0, -1.5);
        let rho = DensityOperator::from_pure(&StateVector::coherent(s, alpha));
        for &eta in &[0.9, 0.4, 0.05] {
            let out = pure_loss(&rho, eta).unwrap();
            let want = StateVector::coherent(s, alpha * eta.sqrt());
            assert!(out.fidelity_with_pure(&want).unwrap() >= 1.0 - 1e-10);
        }
    }

    #[test]
    fn loss_keeps_g2() {
        let s = space(60);
        let opts = ExpmOptions::default();
        let rho = DensityOperator::from_pure(&displaced_squeezed(s, C64::new(2.0, 0.5), 0.4, 0.0, &opts).unwrap());
        let g0 = g2(&rho.photon_distribution(0).unwrap());
        for &eta in &[0.5, 0.1, 0.01, 1e-3] {
            let out = pure_loss(&rho, eta).unwrap();
            let g = g2(&out.photon_distribution(0).unwrap());
            assert!((g - g0).abs() <= 1e-8, "eta {eta}: {g} vs {g0}");
            assert!((mean_n(&out) - eta * mean_n(&rho)).abs() < 1e-10);
        }
    }

    #[test]
    fn loss_semigroup() {
        let rho = random_density(20, 3);
        let a = pure_loss(&pure_loss(&rho, 0.7).unwrap(), 0.3).unwrap();
        let b = pure_loss(&rho, 0.21).unwrap();
        assert!(a.trace_distance(&b).unwrap() < 1e-9);
    }

    #[test]
    fn loss_degrades_squeezing() {
        let s = space(40);
        let opts = ExpmOptions::default();
        let rho = DensityOperator::from_pure(&displaced_squeezed(s, C64::new(0.0, 0.0), 0.6, 0.0, &opts).unwrap());
        let mut last = QuadratureMoments::of(&rho, 0).unwrap().min_variance();
        for &eta in &[0.9, 0.7, 0.5, 0.3, 0.1] {
            let v = QuadratureMoments::of(&pure_loss(&rho, eta).unwrap(), 0).unwrap().min_variance();
            let want = eta * 0.5 * (-1.2f64).exp() + (1.0 - eta) * 0.5;
            assert!(v > last && v < 0.5);
            assert!((v - want).abs() < 1e-8);
            last = v;
        }
    }

    #[test]
    fn ancilla_path_matches_kraus() {
        let opts = ExpmOptions::default();
        for seed in 0..5 {
            let rho = random_density(10, 100 + seed);
            for &eta in &[0.9, 0.5, 0.1] {
                let d = bs_ancilla_loss(&rho, eta, &opts)
                    .unwrap()
                    .trace_distance(&pure_loss(&rho, eta).unwrap())
                    .unwrap();
                assert!(d <= 1e-10, "seed {seed} eta {eta}: {d:e}");
            }
        }
        let vac = DensityOperator::from_pure(&StateVector::vacuum(space(6)));
        assert!(bs_ancilla_loss(&vac, 0.3, &opts).unwrap().trace_distance(&vac).unwrap() < 1e-12);
        let big = DensityOperator::from_pure(&StateVector::vacuum(space(31)));
        assert!(bs_ancilla_loss(&big, 0.5, &opts).is_err());
    }

    #[test]
    fn degenerate_source_gives_identical_copies() {
        let cfg = SourceConfig {
            alpha: AlphaLaw::ComplexGaussian {
                mean: [1.0, 0.0],
                sigma: 0.0,
            },
            squeeze: SqueezeLaw::Uniform { min: 0.4, max: 0.4 },
            squeeze_phase: 0.0,
        };
        let d = draw_pulses(&cfg, 5, 9).unwrap();
        assert!(d.iter().all(|x| x.alpha == C64::new(1.0, 0.0) && x.r == 0.4));
    }

    #[test]
    fn draws_are_reproducible_per_index() {
        let cfg = SourceConfig::default();
        let all = draw_pulses(&cfg, 50, 42).unwrap();
        let one = draw_pulse(&cfg, 42, 17, |_| true).unwrap();
        assert_eq!(all[17], one);
        assert_ne!(all[17], draw_pulse(&cfg, 43, 17, |_| true).unwrap());
    }

    #[test]
    fn rejection_truncates_the_law() {
        let cfg = SourceConfig::default();
        let d = draw_pulses_filtered(&cfg, 200, 5, |x| x.alpha.norm() < 1.2).unwrap();
        assert!(d.iter().all(|x| x.alpha.norm() < 1.2));
        assert!(d.iter().any(|x| x.rejections > 0));
        assert!(draw_pulse(&cfg, 5, 0, |_| false).is_err());
    }

    #[test]
    fn invalid_source_is_rejected() {
        let mut cfg = SourceConfig::default();
        cfg.squeeze = SqueezeLaw::Uniform { min: 0.5, max: 0.3 };
        assert!(draw_pulses(&cfg, 1, 0).is_err());
        cfg = SourceConfig::default();
        cfg.alpha = AlphaLaw::ComplexGaussian {
            mean: [1.0, 0.0],
            sigma: -0.1,
        };
        assert!(draw_pulses(&cfg, 1, 0).is_err());
        assert!(draw_pulses(&SourceConfig::default(), 0, 0).is_err());
    }

    #[test]
    fn alpha_second_moment_matches_law() {
        let cfg = SourceConfig::default();
        let d = draw_pulses(&cfg, 10_000, 2024).unwrap();
        let xs: Vec<f64> = d.iter().map(|x| x.alpha.norm_sqr()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        // Var|α|² = 4σ²|μ|² + 4σ⁴ for independent Gaussian quadratures.
        let se = ((4.0 * 0.25 + 4.0 * 0.0625) / xs.len() as f64).sqrt();
        assert!((mean - cfg.mean_alpha_sq()).abs() < 3.0 * se, "{mean} vs {}", cfg.mean_alpha_sq());
        assert!((cfg.mean_alpha_sq() - 1.5).abs() < 1e-15);
        assert!(d.iter().all(|x| (0.3..0.5).contains(&x.r)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn loss_preserves_trace_and_positivity(eta in 1e-3f64..1.0, seed in 0u64..1000) {
            let rho = random_density(12, seed);
            let out = pure_loss(&rho, eta).unwrap();
            prop_assert!((out.trace() - 1.0).abs() < 1e-10);
            prop_assert!(out.min_eigenvalue() > -1e-12);
            prop_assert!((mean_n(&out) - eta * mean_n(&rho)).abs() < 1e-10);
        }
    }
}
