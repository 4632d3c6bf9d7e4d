//! Exact normal-form algebra for the conditional evolution operators of a
//! linearly coupled bosonic bath.
//!
//! Every product of conditional evolutions and their adjoints is kept as
//!
//! ```text
//!     e^{iφ} · ∏_k D_k(α_k) · e^{-i H_E s / ħ}
//! ```
//!
//! with `D(α) = exp(α b† − ᾱ b)`. Two Weyl relations close the algebra:
//! a free rotation pushed through a displacement turns it into
//! `D(α e^{-iωs})`, and `D(α) D(β) = e^{i Im(α β̄)} D(α + β)`.
//! Thermal traces of such elements are Gaussian.
//!
//! With `H_E = Σ ħω b†b` and `V_1 = Σ ħω r (b + b†)` the excited-branch
//! propagator is, up to the constant energy shift `Σ ħω r²` that is absorbed
//! into the renormalized qubit splitting,
//!
//! ```text
//!     ŵ_1(t) = e^{-i Σ r² sin(ωt)} · ∏ D(r (e^{-iωt} − 1)) · ŵ_0(t).
//! ```

use num_complex::Complex;
use thiserror::Error;

use crate::params::{bose_occupation, units, ParamError};
use crate::real::Real;
use crate::scheme::{Backend, Pointer};

/// Largest free rotation (ps) tolerated when taking a thermal trace.
pub const ROTATION_TOLERANCE_PS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WeylError {
    #[error("mode count mismatch: {left} vs {right}")]
    ModeCountMismatch { left: usize, right: usize },
    #[error("thermal trace of an element with residual free rotation {0} ps")]
    ResidualRotation(f64),
    #[error("mode {index}: {reason}")]
    InvalidMode { index: usize, reason: String },
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Mode frequencies, coupling ratios and temperature of a bosonic bath.
#[derive(Debug, Clone, PartialEq)]
pub struct BathRef<T> {
    omega: Vec<T>,
    coupling: Vec<T>,
    temperature_k: T,
    // n̄ + ½ per mode; +∞ for a zero-frequency mode at finite temperature.
    width: Vec<T>,
}

impl<T: Real> BathRef<T> {
    /// Builds a bath from `(ω_k [rad/ps], r_k = f_k / ħω_k)` pairs.
    ///
    /// A zero-frequency mode carries no coupling (its weight `G(0)Δk`
    /// vanishes), so its ratio is stored as zero whatever was passed.
    pub fn new(modes: impl IntoIterator<Item = (T, T)>, temperature_k: T) -> Result<Self, WeylError> {
        if temperature_k < T::zero() || !temperature_k.is_finite() {
            return Err(ParamError::NegativeTemperature(temperature_k.to_f64_lossy()).into());
        }
        let mut omega = Vec::new();
        let mut coupling = Vec::new();
        let mut width = Vec::new();
        for (index, (w, r)) in modes.into_iter().enumerate() {
            if !(w >= T::zero() && w.is_finite()) {
                return Err(WeylError::InvalidMode { index, reason: format!("frequency {w} rad/ps") });
            }
            if !(r >= T::zero() && r.is_finite()) {
                return Err(WeylError::InvalidMode { index, reason: format!("coupling ratio {r}") });
            }
            let half = T::lit(0.5);
            if w == T::zero() {
                omega.push(w);
                coupling.push(T::zero());
                width.push(if temperature_k > T::zero() { T::infinity() } else { half });
            } else {
                omega.push(w);
                coupling.push(r);
                width.push(bose_occupation(units::energy_of(w), temperature_k)? + half);
            }
        }
        Ok(Self { omega, coupling, temperature_k, width })
    }

    pub fn n_modes(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn coupling(&self) -> &[T] {
        &self.coupling
    }

    pub fn temperature_k(&self) -> T {
        self.temperature_k
    }

    /// Thermal occupation of each mode.
    pub fn occupation(&self) -> Vec<T> {
        self.width.iter().map(|&w| w - T::lit(0.5)).collect()
    }
}

/// Normal form `e^{iφ} · ∏ D_k(α_k) · e^{-i H_E s/ħ}`.
///
/// The phase is accumulated, never reduced modulo 2π.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylElement<T> {
    pub phase: T,
    pub displacements: Vec<Complex<T>>,
    /// Free rotation time `s` (ps), applied rightmost.
    pub rotation: T,
}

impl<T: Real> WeylElement<T> {
    pub fn identity(n_modes: usize) -> Self {
        Self { phase: T::zero(), displacements: vec![Complex::new(T::zero(), T::zero()); n_modes], rotation: T::zero() }
    }

    /// Pure free evolution `e^{-i H_E s/ħ}`.
    pub fn rotation(n_modes: usize, s: T) -> Self {
        Self { rotation: s, ..Self::identity(n_modes) }
    }

    pub fn n_modes(&self) -> usize {
        self.displacements.len()
    }

    /// Conditional environment propagator `ŵ_branch(t)`.
    pub fn conditional_evolution(branch: Pointer, t: T, bath: &BathRef<T>) -> Self {
        match branch {
            Pointer::Zero => Self::rotation(bath.n_modes(), t),
            Pointer::One => {
                let mut phase = T::zero();
                let displacements = bath
                    .omega
                    .iter()
                    .zip(&bath.coupling)
                    .map(|(&w, &r)| {
                        let wt = w * t;
                        phase = phase - r * r * wt.sin();
                        Complex::new(r * (wt.cos() - T::one()), -r * wt.sin())
                    })
                    .collect();
                Self { phase, displacements, rotation: t }
            }
        }
    }

    /// Normal form of the operator product `self · rhs`.
    pub fn compose(&self, rhs: &Self, bath: &BathRef<T>) -> Result<Self, WeylError> {
        let n = bath.n_modes();
        for len in [self.n_modes(), rhs.n_modes()] {
            if len != n {
                return Err(WeylError::ModeCountMismatch { left: len, right: n });
            }
        }
        let mut phase = self.phase + rhs.phase;
        let displacements = self
            .displacements
            .iter()
            .zip(&rhs.displacements)
            .zip(&bath.omega)
            .map(|((&a, &b), &w)| {
                // Rotation of `self` pushed through the displacement of `rhs`.
                let rotated = b * Complex::from_polar(T::one(), -w * self.rotation);
                phase = phase + (a * rotated.conj()).im;
                a + rotated
            })
            .collect();
        Ok(Self { phase, displacements, rotation: self.rotation + rhs.rotation })
    }

    /// Normal form of the adjoint.
    ///
    /// # Panics
    /// If the element and bath disagree on the mode count.
    pub fn adjoint(&self, bath: &BathRef<T>) -> Self {
        assert_eq!(self.n_modes(), bath.n_modes(), "adjoint: element and bath mode counts differ");
        let displacements = self
            .displacements
            .iter()
            .zip(&bath.omega)
            .map(|(&a, &w)| -a * Complex::from_polar(T::one(), w * self.rotation))
            .collect();
        Self { phase: -self.phase, displacements, rotation: -self.rotation }
    }

    /// `Tr[ρ_th · self]` for the thermal state of `bath`.
    ///
    /// Only defined once the free rotation has cancelled; any residual
    /// rotation indicates a malformed trace expression.
    pub fn thermal_expectation(&self, bath: &BathRef<T>) -> Result<Complex<T>, WeylError> {
        if self.n_modes() != bath.n_modes() {
            return Err(WeylError::ModeCountMismatch { left: self.n_modes(), right: bath.n_modes() });
        }
        if self.rotation.abs() >= T::lit(ROTATION_TOLERANCE_PS) {
            return Err(WeylError::ResidualRotation(self.rotation.to_f64_lossy()));
        }
        let mut exponent = T::zero();
        for (a, &w) in self.displacements.iter().zip(&bath.width) {
            let a2 = a.norm_sqr();
            if a2 > T::zero() {
                exponent = exponent - a2 * w;
            }
        }
        Ok(Complex::from_polar(exponent.exp(), self.phase))
    }

    /// True when the element equals the identity within `tol`.
    pub fn is_identity(&self, tol: T) -> bool {
        self.phase.abs() <= tol && self.rotation.abs() <= tol && self.displacements.iter().all(|a| a.norm() <= tol)
    }
}

/// Word whose thermal trace is `X_ij(τ,t) = Tr[ŵ_0(t) ŵ_i(τ) R ŵ_j†(τ) ŵ_1†(t)]`,
/// rearranged cyclically as `Tr[R · ŵ_j†(τ) ŵ_1†(t) ŵ_0(t) ŵ_i(τ)]`.
pub fn cross_trace_word<T: Real>(
    bath: &BathRef<T>,
    i: Pointer,
    j: Pointer,
    tau: T,
    t: T,
) -> Result<WeylElement<T>, WeylError> {
    let wj_tau = WeylElement::conditional_evolution(j, tau, bath).adjoint(bath);
    let w1_t = WeylElement::conditional_evolution(Pointer::One, t, bath).adjoint(bath);
    let w0_t = WeylElement::conditional_evolution(Pointer::Zero, t, bath);
    let wi_tau = WeylElement::conditional_evolution(i, tau, bath);
    let mut word = wj_tau.compose(&w1_t, bath)?.compose(&w0_t, bath)?.compose(&wi_tau, bath)?;
    // The free rotations cancel exactly; drop what rounding leaves over.
    let scale = T::lit(8.0) * T::epsilon() * (tau.abs() + t.abs());
    if word.rotation.abs() <= scale {
        word.rotation = T::zero();
    }
    Ok(word)
}

/// Scheme backend evaluating every trace exactly through the Weyl algebra.
#[derive(Debug, Clone)]
pub struct WeylBackend<T> {
    bath: BathRef<T>,
}

impl<T: Real> WeylBackend<T> {
    pub fn new(bath: BathRef<T>) -> Self {
        Self { bath }
    }

    pub fn bath(&self) -> &BathRef<T> {
        &self.bath
    }
}

impl<T: Real> Backend<T> for WeylBackend<T> {
    type Error = WeylError;

    fn cross_trace(&self, i: Pointer, j: Pointer, tau: T, t: T) -> Result<Complex<T>, WeylError> {
        cross_trace_word(&self.bath, i, j, tau, t)?.thermal_expectation(&self.bath)
    }
}
