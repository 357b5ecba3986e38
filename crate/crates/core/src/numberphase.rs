//! Pegg–Barnett phase operator and the number-phase mode b_n built from (n̂, Φ̂).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockSpace, QuantumState, SparseOperator, StateVector};

/// Default phase window start, giving the window [−π, π).
pub const DEFAULT_THETA0: f64 = -PI;

/// Φ applied through the DFT that diagonalizes it.
#[derive(Clone)]
struct PhaseFft {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// e^{ikθ0}
    twiddle: Vec<C64>,
    /// θ_m / D
    weights: Vec<f64>,
}

impl std::fmt::Debug for PhaseFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PhaseFft").field("len", &self.twiddle.len()).finish()
    }
}

impl PhaseFft {
    fn new(d: usize, theta0: f64) -> Self {
        let mut planner = FftPlanner::new();
        let df = d as f64;
        PhaseFft {
            fwd: planner.plan_fft_forward(d),
            inv: planner.plan_fft_inverse(d),
            twiddle: (0..d).map(|k| C64::from_polar(1.0, k as f64 * theta0)).collect(),
            weights: (0..d).map(|m| (theta0 + 2.0 * PI * m as f64 / df) / df).collect(),
        }
    }

    fn apply(&self, x: &[C64], out: &mut [C64]) {
        for ((o, xk), t) in out.iter_mut().zip(x).zip(&self.twiddle) {
            *o = xk * t.conj();
        }
        self.fwd.process(out);
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o *= *w;
        }
        self.inv.process(out);
        for (o, t) in out.iter_mut().zip(&self.twiddle) {
            *o *= *t;
        }
    }
}

/// Hermitian phase operator Φ = Σ_m θ_m |θ_m⟩⟨θ_m| on a truncated space.
#[derive(Clone, Debug)]
pub struct PhaseOperator {
    space: FockSpace,
    theta0: f64,
    op: SparseOperator,
    fft: PhaseFft,
}

impl PhaseOperator {
    /// Builds Φ from its closed-form matrix elements:
    /// Φ_kk = θ0 + π(D−1)/D and, for d = j − k ≠ 0,
    /// Φ_jk = (2π/D) e^{i d θ0} / (e^{2πi d/D} − 1).
    pub fn new(space: FockSpace, theta0: f64) -> Self {
        let d = space.dim();
        let df = d as f64;
        let mut m = DMatrix::<C64>::zeros(d, d);
        let diag = theta0 + PI * (df - 1.0) / df;
        for j in 0..d {
            for k in 0..d {
                m[(j, k)] = if j == k {
                    C64::new(diag, 0.0)
                } else {
                    let dd = j as f64 - k as f64;
                    let num = C64::from_polar(2.0 * PI / df, dd * theta0);
                    num / (C64::from_polar(1.0, 2.0 * PI * dd / df) - 1.0)
                };
            }
        }
        // enforce exact Hermiticity against rounding in the closed form
        let m = (&m + m.adjoint()).map(|z| z * 0.5);
        PhaseOperator {
            space,
            theta0,
            op: SparseOperator::from_dense(&[d], &m).expect("square by construction"),
            fft: PhaseFft::new(d, theta0),
        }
    }

    pub fn standard(space: FockSpace) -> Self {
        Self::new(space, DEFAULT_THETA0)
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn operator(&self) -> &SparseOperator {
        &self.op
    }

    /// out = Φ x in O(D log D), without touching the dense matrix.
    pub fn apply_fft(&self, x: &[C64], out: &mut [C64]) {
        assert_eq!(x.len(), self.space.dim(), "phase operator dimension");
        self.fft.apply(x, out);
    }

    pub fn eigenphase(&self, m: usize) -> f64 {
        self.theta0 + 2.0 * PI * m as f64 / self.space.dim() as f64
    }

    /// |θ_m⟩ = D^{-1/2} Σ_k e^{ikθ_m}|k⟩.
    pub fn phase_state(&self, m: usize) -> StateVector {
        let d = self.space.dim();
        let th = self.eigenphase(m);
        let amps = (0..d)
            .map(|k| C64::from_polar(1.0 / (d as f64).sqrt(), k as f64 * th))
            .collect();
        StateVector::new(&[d], amps).expect("dimension matches")
    }

    /// Σ_m f(θ_m)|θ_m⟩⟨θ_m|.
    pub fn function_of(&self, f: impl Fn(f64) -> f64) -> SparseOperator {
        let d = self.space.dim();
        let mut m = DMatrix::<C64>::zeros(d, d);
        for idx in 0..d {
            let v = DVector::from_column_slice(self.phase_state(idx).amplitudes());
            m += (&v * v.adjoint()).map(|z| z * f(self.eigenphase(idx)));
        }
        let m = (&m + m.adjoint()).map(|z| z * 0.5);
        SparseOperator::from_dense(&[d], &m).expect("square by construction")
    }

    /// sin Φ, an alternative phase observable that stays bounded near the vacuum.
    pub fn sin_operator(&self) -> SparseOperator {
        self.function_of(f64::sin)
    }

    /// [n̂, Φ̂].
    pub fn commutator_with_number(&self) -> SparseOperator {
        let n = self.space.number();
        n.matmul(&self.op)
            .unwrap()
            .sub(&self.op.matmul(&n).unwrap())
            .unwrap()
    }
}

pub fn pegg_barnett_phi(space: FockSpace, theta0: f64) -> PhaseOperator {
    PhaseOperator::new(space, theta0)
}

/// ⟨[n̂, Φ̂]⟩ on a single-mode state; ideally i.
pub fn commutator_check<S: QuantumState>(state: &S, phase: &PhaseOperator) -> Result<C64> {
    state.expectation(&phase.commutator_with_number())
}

/// b_n = (n̂ + i s γ0 Φ̂)/√(2γ0), with γ0 frozen at construction.
#[derive(Clone, Debug)]
pub struct NumberPhaseMode {
    phase: PhaseOperator,
    gamma0: f64,
    s: f64,
    lowering: SparseOperator,
}

impl NumberPhaseMode {
    pub fn new(phase: PhaseOperator, gamma0: f64, s: f64) -> Result<Self> {
        if !(gamma0 > 0.0 && gamma0.is_finite()) {
            return Err(Error::param("gamma0", format!("must be positive (got {gamma0})")));
        }
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::param("s", format!("must be positive (got {s})")));
        }
        let n = phase.space.number();
        let norm = 1.0 / (2.0 * gamma0).sqrt();
        let lowering = n.combine(C64::new(norm, 0.0), &phase.op, C64::new(0.0, s * gamma0 * norm))?;
        Ok(NumberPhaseMode {
            phase,
            gamma0,
            s,
            lowering,
        })
    }

    /// γ0 = 2⟨n̂⟩ of a single-mode reference state.
    pub fn from_reference<S: QuantumState>(phase: PhaseOperator, reference: &S, s: f64) -> Result<Self> {
        let mean = reference.expectation(&phase.space.number())?.re;
        Self::new(phase, 2.0 * mean, s)
    }

    pub fn space(&self) -> FockSpace {
        self.phase.space
    }

    pub fn phase(&self) -> &PhaseOperator {
        &self.phase
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn asymmetry(&self) -> f64 {
        self.s
    }

    pub fn lowering(&self) -> &SparseOperator {
        &self.lowering
    }

    pub fn raising(&self) -> SparseOperator {
        self.lowering.adjoint()
    }

    /// max |b_n − (n̂ + i s γ0 Φ̂)/√(2γ0)| rebuilt from the stored parts.
    pub fn reconstruction_residual(&self) -> f64 {
        let norm = 1.0 / (2.0 * self.gamma0).sqrt();
        let rebuilt = self
            .phase
            .space
            .number()
            .combine(
                C64::new(norm, 0.0),
                &self.phase.op,
                C64::new(0.0, self.s * self.gamma0 * norm),
            )
            .unwrap();
        rebuilt.max_abs_diff(&self.lowering).unwrap()
    }

    /// b_n x and b_n† x from a single application of Φ.
    pub fn apply_ladder_pair(&self, x: &[C64], lower: &mut [C64], raise: &mut [C64]) {
        self.phase.apply_fft(x, raise);
        let norm = 1.0 / (2.0 * self.gamma0).sqrt();
        let c = self.s * self.gamma0;
        for (k, ((lo, hi), xk)) in lower.iter_mut().zip(raise.iter_mut()).zip(x).enumerate() {
            let nx = xk * k as f64;
            let phi = C64::new(-hi.im, hi.re) * c;
            *lo = (nx + phi) * norm;
            *hi = (nx - phi) * norm;
        }
    }

    /// [b_n, b_n†].
    pub fn commutator(&self) -> SparseOperator {
        let b = &self.lowering;
        let bd = b.adjoint();
        b.matmul(&bd).unwrap().sub(&bd.matmul(b).unwrap()).unwrap()
    }

    pub fn eigenvalue(&self, mean_number: f64, mean_phase: f64) -> NumberPhaseEigenvalue {
        NumberPhaseEigenvalue::from_number_phase(self, mean_number, mean_phase)
    }
}

pub fn bn_mode(phase: PhaseOperator, gamma0: f64, s: f64) -> Result<NumberPhaseMode> {
    NumberPhaseMode::new(phase, gamma0, s)
}

/// An eigenvalue β_n of b_n together with its number-phase reading.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberPhaseEigenvalue {
    pub beta_n: C64,
}

impl NumberPhaseEigenvalue {
    /// β_n = (n̄ + i s γ0 φ̄)/√(2γ0).
    pub fn from_number_phase(mode: &NumberPhaseMode, mean_number: f64, mean_phase: f64) -> Self {
        let norm = 1.0 / (2.0 * mode.gamma0).sqrt();
        NumberPhaseEigenvalue {
            beta_n: C64::new(mean_number * norm, mode.s * mode.gamma0 * mean_phase * norm),
        }
    }

    pub fn mean_number(&self, mode: &NumberPhaseMode) -> f64 {
        self.beta_n.re * (2.0 * mode.gamma0).sqrt()
    }

    pub fn mean_phase(&self, mode: &NumberPhaseMode) -> f64 {
        self.beta_n.im * (2.0 * mode.gamma0).sqrt() / (mode.s * mode.gamma0)
    }

    /// Coherent amplitude √n̄ e^{iφ̄} sharing this eigenvalue's mean number and phase.
    pub fn equivalent_coherent_amplitude(&self, mode: &NumberPhaseMode) -> Result<C64> {
        if self.beta_n.re <= 0.0 {
            return Err(Error::param(
                "beta_n",
                "a coherent equivalent needs Re(beta_n) > 0",
            ));
        }
        Ok(C64::from_polar(self.mean_number(mode).sqrt(), self.mean_phase(mode)))
    }
}

/// G = β_n b_n† − β_n* b_n, so that exp(G)† b_n exp(G) = b_n + β_n.
pub fn dn_generator(mode: &NumberPhaseMode, beta_n: C64) -> SparseOperator {
    let b = mode.lowering();
    b.adjoint().combine(beta_n, b, -beta_n.conj()).expect("same space")
}

/// G = (ξ b_n² − ξ* b_n†²)/2.
pub fn sn_generator(mode: &NumberPhaseMode, xi: C64) -> SparseOperator {
    let b = mode.lowering();
    let b2 = b.matmul(b).expect("same space");
    b2.combine(xi * 0.5, &b2.adjoint(), -xi.conj() * 0.5)
        .expect("same space")
}

#[derive(Clone, Copy, Debug)]
pub struct EigenSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Solutions with ‖(b_n − β_n)ψ‖ above this are reported as ill-conditioned.
    pub max_residual: f64,
}

impl Default for EigenSolveOptions {
    fn default() -> Self {
        EigenSolveOptions {
            tol: 1e-10,
            max_iter: 200,
            max_residual: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub state: StateVector,
    pub residual: f64,
    pub iterations: usize,
}

/// Approximate eigenstate of the non-normal b_n by inverse iteration on
/// A = (b_n − β_n)†(b_n − β_n).
///
/// A⁻¹ is applied as two LU solves with (b_n − β_n) and its adjoint, which
/// avoids squaring the condition number by forming A.
pub fn bn_eigenstate(mode: &NumberPhaseMode, beta_n: C64, opts: &EigenSolveOptions) -> Result<EigenSolution> {
    let d = mode.space().dim();
    let shifted = mode.lowering().to_dense() - DMatrix::<C64>::identity(d, d).map(|z| z * beta_n);
    let lu = shifted.clone().lu();
    let lu_adj = shifted.adjoint().lu();

    let guess = NumberPhaseEigenvalue { beta_n }
        .equivalent_coherent_amplitude(mode)
        .map(|alpha| StateVector::coherent(mode.space(), alpha))
        .unwrap_or_else(|_| {
            let amps = vec![C64::new(1.0 / (d as f64).sqrt(), 0.0); d];
            StateVector::new(&[d], amps).unwrap()
        });
    let mut x = DVector::from_column_slice(guess.amplitudes());
    let mut iterations = 0;
    for it in 1..=opts.max_iter {
        iterations = it;
        let mut y = lu_adj
            .solve(&x)
            .and_then(|t| lu.solve(&t))
            .ok_or(Error::IllConditioned { residual: f64::NAN })?;
        let ny = y.norm();
        y /= C64::new(ny, 0.0);
        // remove the arbitrary global phase before comparing iterates
        let ov = (y.adjoint() * &x)[(0, 0)];
        if ov.norm() > 0.0 {
            y *= ov / ov.norm();
        }
        let change = (&y - &x).norm();
        x = y;
        if change < opts.tol {
            break;
        }
    }
    // fix the global phase so the largest amplitude is real and positive
    let (kmax, _) = x
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (k, z)| if z.norm() > acc.1 { (k, z.norm()) } else { acc });
    let ph = x[kmax] / x[kmax].norm();
    x /= ph;
    let residual = (&shifted * &x).norm();
    if residual > opts.max_residual {
        return Err(Error::IllConditioned { residual });
    }
    Ok(EigenSolution {
        state: StateVector::new(&[d], x.iter().cloned().collect())?,
        residual,
        iterations,
    })
}
