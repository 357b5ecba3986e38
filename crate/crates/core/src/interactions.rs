//! Beam-splitter couplings between an optical mode and a number-phase mode.
//!
//! Two-mode layout: the optical mode `a` is mode 0 and the partner (`b` or
//! `b_n`) is mode 1. All generators are anti-Hermitian, so `exp(θG)` is unitary.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    dims_of, embed, ExpmOptions, FockSpace, LinearOperator, QuantumState, SparseOperator, StateVector,
};
use crate::numberphase::NumberPhaseMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamSplitterVariant {
    Standard,
    NumberPhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterSpec {
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
    pub variant: BeamSplitterVariant,
}

impl BeamSplitterSpec {
    pub fn new(theta: f64, phi: f64, variant: BeamSplitterVariant) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return Err(Error::param("theta/phi", "must be finite"));
        }
        Ok(BeamSplitterSpec { theta, phi, variant })
    }

    pub fn standard(theta: f64) -> Self {
        BeamSplitterSpec {
            theta,
            phi: 0.0,
            variant: BeamSplitterVariant::Standard,
        }
    }

    pub fn number_phase(theta: f64) -> Self {
        BeamSplitterSpec {
            theta,
            phi: 0.0,
            variant: BeamSplitterVariant::NumberPhase,
        }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        BeamSplitterSpec { theta, ..self }
    }

    /// Transmission amplitude cos θ.
    pub fn t(&self) -> f64 {
        self.theta.cos()
    }

    /// Reflection amplitude sin θ.
    pub fn r(&self) -> f64 {
        self.theta.sin()
    }

    /// Protocol runs require θ ∈ [0, π/2].
    pub fn check_protocol_range(&self) -> Result<()> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return Err(Error::param(
                "theta",
                format!("must lie in [0, pi/2] for protocol runs (got {})", self.theta),
            ));
        }
        Ok(())
    }

    fn expect(&self, v: BeamSplitterVariant) -> Result<()> {
        if self.variant != v {
            return Err(Error::param(
                "variant",
                format!("expected {v:?}, splitter is {:?}", self.variant),
            ));
        }
        Ok(())
    }
}

/// Ladder operators of the optical mode and of the number-phase mode on the joint space.
pub struct TwoModeOperators {
    pub dims: Vec<usize>,
    pub a: SparseOperator,
    pub b: SparseOperator,
}

impl TwoModeOperators {
    pub fn number_phase(a_space: FockSpace, mode: &NumberPhaseMode) -> Self {
        let dims = dims_of(&[a_space, mode.space()]);
        TwoModeOperators {
            a: embed(&a_space.annihilation(), &dims, 0).expect("mode 0"),
            b: embed(mode.lowering(), &dims, 1).expect("mode 1"),
            dims,
        }
    }

    pub fn standard(s1: FockSpace, s2: FockSpace) -> Self {
        let dims = dims_of(&[s1, s2]);
        TwoModeOperators {
            a: embed(&s1.annihilation(), &dims, 0).expect("mode 0"),
            b: embed(&s2.annihilation(), &dims, 1).expect("mode 1"),
            dims,
        }
    }
}

/// G = e^{iφ} b_n† a − e^{−iφ} a† b_n, so exp(θG) = B_n(θ).
pub fn bn_bs_generator(spec: &BeamSplitterSpec, a_space: FockSpace, mode: &NumberPhaseMode) -> Result<SparseOperator> {
    spec.expect(BeamSplitterVariant::NumberPhase)?;
    let a = a_space.annihilation();
    let b = mode.lowering();
    let ph = C64::from_polar(1.0, spec.phi);
    let fwd = a.kron(&b.adjoint());
    let back = a.adjoint().kron(b);
    fwd.combine(ph, &back, -ph.conj())
}

/// Matrix-free form of [`bn_bs_generator`]: b_n and b_n† act on each mode-1 row of the
/// amplitude matrix through the FFT form of Φ, so a matvec costs O(D1·D2 log D2).
#[derive(Clone, Debug)]
pub struct BnCoupling {
    dims: Vec<usize>,
    mode: NumberPhaseMode,
    phase: C64,
    norm_bound: f64,
    defect: f64,
}

impl BnCoupling {
    pub fn new(spec: &BeamSplitterSpec, a_space: FockSpace, mode: &NumberPhaseMode) -> Result<Self> {
        spec.expect(BeamSplitterVariant::NumberPhase)?;
        let theta0 = mode.phase().theta0();
        let max_phase = theta0.abs().max((theta0 + 2.0 * std::f64::consts::PI).abs());
        let b_norm = (mode.space().n_max() as f64 + mode.asymmetry() * mode.gamma0() * max_phase)
            / (2.0 * mode.gamma0()).sqrt();
        let mut g = BnCoupling {
            dims: dims_of(&[a_space, mode.space()]),
            mode: mode.clone(),
            phase: C64::from_polar(1.0, spec.phi),
            norm_bound: 2.0 * (a_space.n_max() as f64).sqrt() * b_norm,
            defect: 0.0,
        };
        let x: Vec<C64> = (0..g.dim())
            .map(|k| C64::new((0.7 * k as f64).sin(), (1.3 * k as f64).cos()))
            .collect();
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        g.apply_into(&x, &mut y);
        let xx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let re: f64 = x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        g.defect = re.abs() / (xx * g.norm_bound.max(1.0));
        Ok(g)
    }

    pub fn mode(&self) -> &NumberPhaseMode {
        &self.mode
    }
}

impl LinearOperator for BnCoupling {
    fn dims(&self) -> &[usize] {
        &self.dims
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        let (d1, d2) = (self.dims[0], self.dims[1]);
        let mut lo = vec![C64::new(0.0, 0.0); d1 * d2];
        let mut hi = vec![C64::new(0.0, 0.0); d1 * d2];
        for ((xr, lr), hr) in x.chunks(d2).zip(lo.chunks_mut(d2)).zip(hi.chunks_mut(d2)) {
            self.mode.apply_ladder_pair(xr, lr, hr);
        }
        let (fwd, back) = (self.phase, -self.phase.conj());
        for (i, yr) in y.chunks_mut(d2).enumerate() {
            yr.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            if i + 1 < d1 {
                let c = fwd * ((i + 1) as f64).sqrt();
                for (yz, hz) in yr.iter_mut().zip(&hi[(i + 1) * d2..(i + 2) * d2]) {
                    *yz += c * hz;
                }
            }
            if i > 0 {
                let c = back * (i as f64).sqrt();
                for (yz, lz) in yr.iter_mut().zip(&lo[(i - 1) * d2..i * d2]) {
                    *yz += c * lz;
                }
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    fn anti_hermitian_defect(&self) -> f64 {
        self.defect
    }
}

/// G = e^{iφ} a† b − e^{−iφ} b† a, so exp(θG) = B(θ).
pub fn standard_bs_generator(spec: &BeamSplitterSpec, s1: FockSpace, s2: FockSpace) -> Result<SparseOperator> {
    spec.expect(BeamSplitterVariant::Standard)?;
    let a = s1.annihilation();
    let b = s2.annihilation();
    let ph = C64::from_polar(1.0, spec.phi);
    let fwd = a.adjoint().kron(&b);
    let back = a.kron(&b.adjoint());
    fwd.combine(ph, &back, -ph.conj())
}

/// Generator of B_n(θ) S(r_in) B_n(θ)† with the mode-1 squeezer S(r) = exp(r(a² − a†²)/2):
/// (r_in/2)[t²(a² − a†²) + r²(b_n² − b_n†²) + 2tr(a b_n − b_n† a†)].
pub fn transformed_squeeze_generator(
    r_in: f64,
    theta: f64,
    a_space: FockSpace,
    mode: &NumberPhaseMode,
) -> Result<SparseOperator> {
    let ops = TwoModeOperators::number_phase(a_space, mode);
    let (t, r) = (theta.cos(), theta.sin());
    let sq = |x: &SparseOperator| -> Result<SparseOperator> {
        let x2 = x.matmul(x)?;
        x2.sub(&x2.adjoint())
    };
    let ab = ops.a.matmul(&ops.b)?;
    let cross = ab.sub(&ab.adjoint())?;
    let half = C64::new(0.5 * r_in, 0.0);
    let g = sq(&ops.a)?
        .combine(C64::new(t * t, 0.0), &sq(&ops.b)?, C64::new(r * r, 0.0))?
        .combine(half, &cross, C64::new(r_in * t * r, 0.0))?;
    Ok(g)
}

/// Applies exp(θG) at the splitter's angle.
pub fn apply_beam_splitter<G: LinearOperator + ?Sized>(
    psi: &StateVector,
    generator: &G,
    spec: &BeamSplitterSpec,
    opts: &ExpmOptions,
) -> Result<StateVector> {
    psi.evolve(generator, spec.theta, opts)
}

/// Measured versus predicted means of ⟨B a B†⟩ and ⟨B b B†⟩ on a probe state.
#[derive(Clone, Copy, Debug)]
pub struct ConjugationReport {
    pub predicted_a: C64,
    pub measured_a: C64,
    pub predicted_b: C64,
    pub measured_b: C64,
}

impl ConjugationReport {
    pub fn relative_deviation_a(&self) -> f64 {
        (self.measured_a - self.predicted_a).norm() / self.predicted_a.norm().max(f64::MIN_POSITIVE)
    }

    pub fn relative_deviation_b(&self) -> f64 {
        (self.measured_b - self.predicted_b).norm() / self.predicted_b.norm().max(f64::MIN_POSITIVE)
    }

    pub fn max_relative_deviation(&self) -> f64 {
        self.relative_deviation_a().max(self.relative_deviation_b())
    }
}

/// For a [`bn_bs_generator`] coupling, compares ⟨ψ|B a B†|ψ⟩ and ⟨ψ|B b B†|ψ⟩ with the bosonic predictions
/// c⟨a⟩ + s e^{−iφ}⟨b⟩ and c⟨b⟩ − s e^{iφ}⟨a⟩ (c = cos θ, s = sin θ).
pub fn conjugation_check<G: LinearOperator + ?Sized>(
    spec: &BeamSplitterSpec,
    generator: &G,
    ops: &TwoModeOperators,
    probe: &StateVector,
    opts: &ExpmOptions,
) -> Result<ConjugationReport> {
    let a0 = probe.expectation(&ops.a)?;
    let b0 = probe.expectation(&ops.b)?;
    let out = probe.evolve(generator, -spec.theta, opts)?;
    let (c, s) = (spec.t(), spec.r());
    let ph = C64::from_polar(1.0, spec.phi);
    Ok(ConjugationReport {
        predicted_a: a0 * c + ph.conj() * b0 * s,
        measured_a: out.expectation(&ops.a)?,
        predicted_b: b0 * c - ph * a0 * s,
        measured_b: out.expectation(&ops.b)?,
    })
}

/// |⟨a†a⟩ − |⟨a⟩|²| / ⟨a†a⟩ for one mode; zero on coherent states.
pub fn normal_order_defect<S: QuantumState>(state: &S, mode: usize) -> Result<f64> {
    let rho = state.reduced(mode)?;
    let space = FockSpace::new(rho.dim() - 1)?;
    let n = rho.expectation(&space.number())?.re;
    let a = rho.expectation(&space.annihilation())?;
    if n <= 0.0 {
        return Err(Error::ZeroMeanPhotonNumber);
    }
    Ok((n - a.norm_sqr()).abs() / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::QuadratureMoments;
    use crate::numberphase::PhaseOperator;
    use nalgebra::DMatrix;
    use std::f64::consts::FRAC_PI_2;

    fn space(n: usize) -> FockSpace {
        FockSpace::new(n).unwrap()
    }

    fn probe_mode(nbar: f64) -> (FockSpace, NumberPhaseMode) {
        let n_max = (nbar + 8.0 * nbar.sqrt() + 20.0).ceil() as usize;
        let s2 = space(n_max);
        let mode = NumberPhaseMode::new(PhaseOperator::standard(s2), 2.0 * nbar, 1.0).unwrap();
        (s2, mode)
    }

    fn dense_expm(g: &SparseOperator, theta: f64) -> DMatrix<C64> {
        (g.to_dense() * C64::new(theta, 0.0)).exp()
    }

    #[test]
    fn variant_mismatch_is_rejected() {
        let (_, mode) = probe_mode(30.0);
        assert!(bn_bs_generator(&BeamSplitterSpec::standard(0.1), space(3), &mode).is_err());
        assert!(standard_bs_generator(&BeamSplitterSpec::number_phase(0.1), space(3), space(3)).is_err());
        assert!(BeamSplitterSpec::number_phase(2.0).check_protocol_range().is_err());
        assert!(BeamSplitterSpec::number_phase(FRAC_PI_2).check_protocol_range().is_ok());
    }

    #[test]
    fn generators_are_anti_hermitian() {
        let (_, mode) = probe_mode(30.0);
        let spec = BeamSplitterSpec::new(0.3, 0.7, BeamSplitterVariant::NumberPhase).unwrap();
        assert!(bn_bs_generator(&spec, space(6), &mode).unwrap().is_anti_hermitian(1e-12));
        let spec = BeamSplitterSpec::new(0.3, 0.7, BeamSplitterVariant::Standard).unwrap();
        assert!(standard_bs_generator(&spec, space(4), space(5)).unwrap().is_anti_hermitian(1e-12));
        assert!(transformed_squeeze_generator(0.2, 0.3, space(6), &mode)
            .unwrap()
            .is_anti_hermitian(1e-12));
    }

    #[test]
    fn zero_angle_is_identity() {
        let (s2, mode) = probe_mode(30.0);
        let g = bn_bs_generator(&BeamSplitterSpec::number_phase(0.0), space(5), &mode).unwrap();
        let psi = StateVector::coherent(space(5), C64::new(0.5, 0.2))
            .product(&StateVector::coherent(s2, C64::new(5.0, 0.0)))
            .unwrap();
        let out = apply_beam_splitter(&psi, &g, &BeamSplitterSpec::number_phase(0.0), &ExpmOptions::default()).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn full_swap_and_balanced_split() {
        let s = space(2);
        let g = standard_bs_generator(&BeamSplitterSpec::standard(FRAC_PI_2), s, s).unwrap();
        let psi = StateVector::basis_multi(&[3, 3], &[1, 0]).unwrap();
        let out = psi.evolve(&g, FRAC_PI_2, &ExpmOptions::default()).unwrap();
        let target = StateVector::basis_multi(&[3, 3], &[0, 1]).unwrap();
        assert!((out.fidelity(&target).unwrap() - 1.0).abs() < 1e-12);
        let phase = out.inner(&target).unwrap();
        assert!((phase.norm() - 1.0).abs() < 1e-12);

        let half = psi.evolve(&g, FRAC_PI_2 / 2.0, &ExpmOptions::default()).unwrap();
        let p1 = half.photon_distribution(0).unwrap();
        let p2 = half.photon_distribution(1).unwrap();
        assert!((p1[1] - 0.5).abs() < 1e-12 && (p2[1] - 0.5).abs() < 1e-12);
        assert!(p1[2] < 1e-14 && p2[2] < 1e-14);
    }

    #[test]
    fn squeezed_vacuum_covariance_interpolates() {
        let r = 0.5;
        let s = space(30);
        let sq = StateVector::vacuum(s)
            .evolve(&s.squeeze_generator(C64::new(r, 0.0)), 1.0, &ExpmOptions::default())
            .unwrap();
        let psi = sq.product(&StateVector::vacuum(s)).unwrap();
        let g = standard_bs_generator(&BeamSplitterSpec::standard(0.0), s, s).unwrap();
        for &theta in &[0.0, 0.3, 0.7, 1.2, FRAC_PI_2] {
            let out = psi.evolve(&g, theta, &ExpmOptions::default()).unwrap();
            let m = QuadratureMoments::of(&out, 1).unwrap();
            let (c2, s2) = (theta.cos().powi(2), theta.sin().powi(2));
            let vx = 0.5 * c2 + 0.5 * s2 * (-2.0 * r).exp();
            let vp = 0.5 * c2 + 0.5 * s2 * (2.0 * r).exp();
            assert!((m.var_x - vx).abs() < 1e-6, "theta {theta}: {} vs {vx}", m.var_x);
            assert!((m.var_p - vp).abs() < 1e-6);
        }
    }

    #[test]
    fn one_parameter_group() {
        let (s2, mode) = probe_mode(30.0);
        let s1 = space(12);
        let g = bn_bs_generator(&BeamSplitterSpec::number_phase(0.0), s1, &mode).unwrap();
        let psi = StateVector::coherent(s1, C64::new(1.5, 0.0))
            .product(&StateVector::coherent(s2, C64::new(30f64.sqrt(), 0.0)))
            .unwrap();
        let opts = ExpmOptions::default();
        let two = psi.evolve(&g, 0.1, &opts).unwrap().evolve(&g, 0.15, &opts).unwrap();
        let one = psi.evolve(&g, 0.25, &opts).unwrap();
        assert!(1.0 - one.fidelity(&two).unwrap() < 1e-8);
    }

    #[test]
    fn krylov_matches_dense_exponential() {
        let s = space(4);
        let spec = BeamSplitterSpec::new(0.0, 0.4, BeamSplitterVariant::Standard).unwrap();
        let g = standard_bs_generator(&spec, s, s).unwrap();
        let psi = StateVector::coherent(s, C64::new(0.6, 0.1))
            .product(&StateVector::basis(s, 1).unwrap())
            .unwrap();
        let out = psi.evolve(&g, 0.9, &ExpmOptions::default()).unwrap();
        let want = dense_expm(&g, 0.9) * nalgebra::DVector::from_column_slice(psi.amplitudes());
        for (x, y) in out.amplitudes().iter().zip(want.iter()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn conjugation_on_coherent_probes() {
        let nbar = 30.0;
        let (s2, mode) = probe_mode(nbar);
        let s1 = space((nbar / 4.0 + 8.0 * (nbar / 4.0f64).sqrt() + 20.0) as usize);
        let spec = BeamSplitterSpec::number_phase(0.2);
        let g = bn_bs_generator(&spec, s1, &mode).unwrap();
        let ops = TwoModeOperators::number_phase(s1, &mode);
        let probe = StateVector::coherent(s1, C64::new(0.5 * nbar.sqrt(), 0.0))
            .product(&StateVector::coherent(s2, C64::new(nbar.sqrt(), 0.0)))
            .unwrap();
        let opts = ExpmOptions {
            tol: 1e-14,
            ..ExpmOptions::default()
        };
        let rep = conjugation_check(&spec, &g, &ops, &probe, &opts).unwrap();
        assert!(rep.max_relative_deviation() < 1e-2, "{rep:?}");
    }

    #[test]
    fn coherent_products_stay_coherent() {
        let nbar = 40.0;
        let (s2, mode) = probe_mode(nbar);
        let s1 = space(30);
        let g = bn_bs_generator(&BeamSplitterSpec::number_phase(0.0), s1, &mode).unwrap();
        let psi = StateVector::coherent(s1, C64::new(2.0, 0.0))
            .product(&StateVector::coherent(s2, C64::new(nbar.sqrt(), 0.0)))
            .unwrap();
        let opts = ExpmOptions::default();
        for k in 1..=3 {
            let out = psi.evolve(&g, 0.1 * k as f64, &opts).unwrap();
            for m in 0..2 {
                let p = out.reduced(m).unwrap().purity();
                assert!(p >= 1.0 - 1e-3, "theta {} mode {m}: purity {p}", 0.1 * k as f64);
                assert!(normal_order_defect(&out, m).unwrap() <= 1e-3);
            }
        }
    }

    #[test]
    fn transformed_squeeze_limits() {
        let (s2, mode) = probe_mode(30.0);
        let s1 = space(6);
        let dims = dims_of(&[s1, s2]);
        let g0 = transformed_squeeze_generator(0.2, 0.0, s1, &mode).unwrap();
        let want0 = embed(&s1.squeeze_generator(C64::new(0.2, 0.0)), &dims, 0).unwrap();
        assert!(g0.max_abs_diff(&want0).unwrap() < 1e-14);

        let g1 = transformed_squeeze_generator(0.2, FRAC_PI_2, s1, &mode).unwrap();
        let b = mode.lowering();
        let b2 = b.matmul(b).unwrap();
        let single = b2.sub(&b2.adjoint()).unwrap().scale(C64::new(0.1, 0.0));
        let want1 = embed(&single, &dims, 1).unwrap();
        assert!(g1.max_abs_diff(&want1).unwrap() < 1e-12);
    }

    #[test]
    fn transformed_squeeze_matches_conjugated_squeezer() {
        let nbar = 40.0;
        let (s2, mode) = probe_mode(nbar);
        let s1 = space(40);
        let dims = dims_of(&[s1, s2]);
        let (r_in, theta) = (0.2, 0.3);
        let opts = ExpmOptions::default();
        let bs = bn_bs_generator(&BeamSplitterSpec::number_phase(theta), s1, &mode).unwrap();
        let sq = embed(&s1.squeeze_generator(C64::new(r_in, 0.0)), &dims, 0).unwrap();
        let direct = transformed_squeeze_generator(r_in, theta, s1, &mode).unwrap();
        let psi = StateVector::coherent(s1, C64::new(3.0, 0.0))
            .product(&StateVector::coherent(s2, C64::new(nbar.sqrt(), 0.0)))
            .unwrap();
        let lhs = psi
            .evolve(&bs, -theta, &opts)
            .and_then(|v| v.evolve(&sq, 1.0, &opts))
            .and_then(|v| v.evolve(&bs, theta, &opts))
            .unwrap();
        let rhs = psi.evolve(&direct, 1.0, &opts).unwrap();
        let f = lhs.fidelity(&rhs).unwrap();
        assert!(f >= 1.0 - 1e-3, "fidelity {f}");
    }

    #[test]
    fn matrix_free_coupling_matches_sparse_generator() {
        let (s2, mode) = probe_mode(30.0);
        let s1 = space(9);
        let spec = BeamSplitterSpec::new(0.0, 0.6, BeamSplitterVariant::NumberPhase).unwrap();
        let sparse = bn_bs_generator(&spec, s1, &mode).unwrap();
        let fast = BnCoupling::new(&spec, s1, &mode).unwrap();
        assert!(fast.anti_hermitian_defect() < 1e-14);
        let psi = StateVector::coherent(s1, C64::new(1.0, 0.5))
            .product(&StateVector::coherent(s2, C64::new(30f64.sqrt(), 0.2)))
            .unwrap();
        let mut y = vec![C64::new(0.0, 0.0); psi.dim()];
        fast.apply_into(psi.amplitudes(), &mut y);
        let want = sparse.apply(psi.amplitudes()).unwrap();
        let err = y.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err:e}");
        let gain = (y.iter().map(|z| z.norm_sqr()).sum::<f64>() / psi.norm().powi(2)).sqrt();
        assert!(gain <= fast.norm_bound());
        let opts = ExpmOptions::default();
        let a = psi.evolve(&fast, 0.4, &opts).unwrap();
        let b = psi.evolve(&sparse, 0.4, &opts).unwrap();
        assert!(1.0 - a.fidelity(&b).unwrap() < 1e-12);
        assert!(BnCoupling::new(&BeamSplitterSpec::standard(0.1), s1, &mode).is_err());
    }
}
