//! Protocol quantities of the intermediate-measurement scheme, computed over
//! any backend that can evaluate the cross traces
//!
//! ```text
//!     X_ij(τ,t) = Tr[ŵ_0(t) ŵ_i(τ) R(0) ŵ_j†(τ) ŵ_1†(t)].
//! ```
//!
//! With `θ = Δε τ / ħ` the fast qubit phase accumulated before the
//! measurement,
//!
//! ```text
//!     A   = ¼ (X_00 + X_11)(τ,t)
//!     B   = e^{-iθ} ¼ X_01(τ,t) + e^{iθ} ¼ X_10(τ,t)
//!     p±  = ½ (1 ± Re[e^{-iθ} X_01(τ,0)])
//!     p± D± = |A ± B|,      D(t) = |X_01(t,0)|
//! ```

mod envelope;

pub use envelope::{envelope_conditions_check, envelopes, envelopes_from_traces, EnvelopePoint, EnvelopeResiduals};

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::params::units;
use crate::real::Real;

/// Outcome probabilities below this are treated as a vanishing branch.
pub const PROBABILITY_FLOOR: f64 = 1e-14;
/// `1 − D(t)` below this leaves the normalized gain undefined.
pub const DECOHERENCE_FLOOR: f64 = 1e-12;

/// Qubit pointer state selecting a conditional environment evolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pointer {
    Zero,
    One,
}

impl Pointer {
    pub const ALL: [Pointer; 2] = [Pointer::Zero, Pointer::One];

    pub fn index(self) -> usize {
        match self {
            Pointer::Zero => 0,
            Pointer::One => 1,
        }
    }
}

/// The six traces a scheme point needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlowTraces<T> {
    pub x00: Complex<T>,
    pub x01: Complex<T>,
    pub x10: Complex<T>,
    pub x11: Complex<T>,
    /// `X_01(τ,0) = Tr R_01(τ)`.
    pub x01_tau: Complex<T>,
    /// `X_01(t,0)`, whose modulus is the standard coherence `D(t)`.
    pub x01_t: Complex<T>,
}

impl<T: Real> SlowTraces<T> {
    pub fn a(&self) -> Complex<T> {
        (self.x00 + self.x11).scale(T::lit(0.25))
    }

    pub fn b01(&self) -> Complex<T> {
        self.x01.scale(T::lit(0.25))
    }

    pub fn b10(&self) -> Complex<T> {
        self.x10.scale(T::lit(0.25))
    }

    pub fn coherence(&self) -> T {
        self.x01_t.norm()
    }

    /// `B(θ)`.
    pub fn b_at(&self, theta: T) -> Complex<T> {
        let e = Complex::from_polar(T::one(), -theta);
        e * self.b01() + e.conj() * self.b10()
    }

    /// `(p₊, p₋)` at fast phase `θ`.
    pub fn probabilities_at(&self, theta: T) -> (T, T) {
        let half = T::lit(0.5);
        let r = (Complex::from_polar(T::one(), -theta) * self.x01_tau).re;
        (half * (T::one() + r), half * (T::one() - r))
    }
}

/// Source of cross traces.
pub trait Backend<T: Real> {
    type Error: std::error::Error + Send + Sync + 'static;

    fn cross_trace(&self, i: Pointer, j: Pointer, tau: T, t: T) -> Result<Complex<T>, Self::Error>;

    /// Every trace needed at one `(τ, t)`; backends with shared
    /// intermediates override this.
    fn slow_traces(&self, tau: T, t: T) -> Result<SlowTraces<T>, Self::Error> {
        use Pointer::{One, Zero};
        Ok(SlowTraces {
            x00: self.cross_trace(Zero, Zero, tau, t)?,
            x01: self.cross_trace(Zero, One, tau, t)?,
            x10: self.cross_trace(One, Zero, tau, t)?,
            x11: self.cross_trace(One, One, tau, t)?,
            x01_tau: self.cross_trace(Zero, One, tau, T::zero())?,
            x01_t: self.cross_trace(Zero, One, t, T::zero())?,
        })
    }
}

impl<T: Real, B: Backend<T> + ?Sized> Backend<T> for &B {
    type Error = B::Error;

    fn cross_trace(&self, i: Pointer, j: Pointer, tau: T, t: T) -> Result<Complex<T>, Self::Error> {
        (**self).cross_trace(i, j, tau, t)
    }

    fn slow_traces(&self, tau: T, t: T) -> Result<SlowTraces<T>, Self::Error> {
        (**self).slow_traces(tau, t)
    }
}

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("backend: {0}")]
    Backend(#[source] Box<dyn std::error::Error + Send + Sync>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl SchemeError {
    fn backend(e: impl std::error::Error + Send + Sync + 'static) -> Self {
        SchemeError::Backend(Box::new(e))
    }
}

/// Every protocol output at one `(τ, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemePoint<T> {
    pub tau: T,
    pub t: T,
    /// Fast phase `Δε τ / ħ` reduced to `[0, 2π)`.
    pub theta: T,
    /// Standard coherence `D(t)`.
    pub coherence: T,
    pub d_plus: T,
    pub d_minus: T,
    pub p_plus: T,
    pub p_minus: T,
    pub g_plus: T,
    pub g_minus: T,
    pub g_av: T,
    /// `g_av / (1 − D(t))`; `None` when `D(t)` is within
    /// [`DECOHERENCE_FLOOR`] of one.
    pub g_av_norm: Option<T>,
    pub a: Complex<T>,
    pub b01: Complex<T>,
    pub b10: Complex<T>,
    /// `p₊` fell below [`PROBABILITY_FLOOR`]; `d_plus` is reported as 0.
    pub plus_degenerate: bool,
    pub minus_degenerate: bool,
}

impl<T: Real> SchemePoint<T> {
    /// Evaluates the protocol at fast phase `theta`, treating the traces as
    /// fixed.
    pub fn from_traces(traces: &SlowTraces<T>, tau: T, t: T, theta: T) -> Self {
        let floor = T::lit(PROBABILITY_FLOOR);
        let a = traces.a();
        let b = traces.b_at(theta);
        let (p_plus, p_minus) = traces.probabilities_at(theta);
        let coherence = traces.coherence();
        let (s_plus, s_minus) = ((a + b).norm(), (a - b).norm());
        let plus_degenerate = p_plus < floor;
        let minus_degenerate = p_minus < floor;
        let d_plus = if plus_degenerate { T::zero() } else { s_plus / p_plus };
        let d_minus = if minus_degenerate { T::zero() } else { s_minus / p_minus };
        // p₊g₊ + p₋g₋ with p₊ + p₋ = 1, written without the divisions.
        let g_av = s_plus + s_minus - coherence;
        Self {
            tau,
            t,
            theta,
            coherence,
            d_plus,
            d_minus,
            p_plus,
            p_minus,
            g_plus: d_plus - coherence,
            g_minus: d_minus - coherence,
            g_av,
            g_av_norm: normalized_gain(g_av, coherence),
            a,
            b01: traces.b01(),
            b10: traces.b10(),
            plus_degenerate,
            minus_degenerate,
        }
    }

    /// `B` at the point's own phase.
    pub fn b(&self) -> Complex<T> {
        let e = Complex::from_polar(T::one(), -self.theta);
        e * self.b01 + e.conj() * self.b10
    }

    /// `D_av = p₊D₊ + p₋D₋ = |A + B| + |A − B|`.
    pub fn d_av(&self) -> T {
        let b = self.b();
        (self.a + b).norm() + (self.a - b).norm()
    }

    /// Violated invariants at tolerance `tol`, described in words.
    pub fn invariant_violations(&self, tol: T) -> Vec<String> {
        let mut out = Vec::new();
        let one = T::one();
        let mut check = |ok: bool, what: &str| {
            if !ok {
                out.push(format!("τ = {}, t = {}: {what}", self.tau, self.t));
            }
        };
        check(self.p_plus >= -tol && self.p_plus <= one + tol, "p₊ outside [0, 1]");
        check(self.p_minus >= -tol && self.p_minus <= one + tol, "p₋ outside [0, 1]");
        check((self.p_plus + self.p_minus - one).abs() <= tol, "p₊ + p₋ ≠ 1");
        for (name, d) in [("D", self.coherence), ("D₊", self.d_plus), ("D₋", self.d_minus)] {
            check(d >= T::zero() && d <= one + tol, &format!("{name} = {d} outside [0, 1]"));
        }
        let (lower, upper) = sandwich(self.a, self.b());
        let d_av = self.d_av();
        check(d_av >= lower - tol, "D_av below 2 max(|A|, |B|)");
        check(d_av <= upper + tol, "D_av above 2 √(|A|² + |B|²)");
        if !self.plus_degenerate && !self.minus_degenerate {
            let weighted = self.p_plus * self.g_plus + self.p_minus * self.g_minus;
            check((weighted - self.g_av).abs() <= tol, "g_av ≠ p₊g₊ + p₋g₋");
        }
        out
    }
}

impl<T: Real> fmt::Display for SchemePoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "τ={} t={} D={} D+={} D-={} p+={} g_av={}",
            self.tau, self.t, self.coherence, self.d_plus, self.d_minus, self.p_plus, self.g_av
        )
    }
}

/// Largest absolute difference per scalar output between two evaluations
/// of the same points.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct Deviations {
    pub coherence: f64,
    pub p_plus: f64,
    pub p_minus: f64,
    pub d_plus: f64,
    pub d_minus: f64,
    pub g_av: f64,
}

impl Deviations {
    pub fn between<T: Real>(a: &SchemePoint<T>, b: &SchemePoint<T>) -> Self {
        let d = |x: T, y: T| (x - y).abs().to_f64_lossy();
        Self {
            coherence: d(a.coherence, b.coherence),
            p_plus: d(a.p_plus, b.p_plus),
            p_minus: d(a.p_minus, b.p_minus),
            d_plus: d(a.d_plus, b.d_plus),
            d_minus: d(a.d_minus, b.d_minus),
            g_av: d(a.g_av, b.g_av),
        }
    }

    /// Element-wise maximum.
    pub fn merge(self, o: Self) -> Self {
        Self {
            coherence: self.coherence.max(o.coherence),
            p_plus: self.p_plus.max(o.p_plus),
            p_minus: self.p_minus.max(o.p_minus),
            d_plus: self.d_plus.max(o.d_plus),
            d_minus: self.d_minus.max(o.d_minus),
            g_av: self.g_av.max(o.g_av),
        }
    }

    pub fn max(&self) -> f64 {
        [self.coherence, self.p_plus, self.p_minus, self.d_plus, self.d_minus, self.g_av]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Lower and upper bounds `2 max(|A|, |B|)` and `2 √(|A|² + |B|²)` on `D_av`.
pub fn sandwich<T: Real>(a: Complex<T>, b: Complex<T>) -> (T, T) {
    let two = T::lit(2.0);
    (two * a.norm().max(b.norm()), two * (a.norm_sqr() + b.norm_sqr()).sqrt())
}

pub(crate) fn normalized_gain<T: Real>(g_av: T, coherence: T) -> Option<T> {
    let room = T::one() - coherence;
    (room >= T::lit(DECOHERENCE_FLOOR)).then(|| g_av / room)
}

/// Fast phase `Δε τ / ħ` reduced to `[0, 2π)`, evaluated in `f64`.
pub fn fast_phase<T: Real>(delta_eps_ev: T, tau: T) -> T {
    let omega = units::angular_frequency(units::ev_to_mev(delta_eps_ev.to_f64_lossy()));
    T::lit((omega * tau.to_f64_lossy()).rem_euclid(TAU))
}

fn check_times<T: Real>(tau: T, t: T) -> Result<(), SchemeError> {
    if !(tau >= T::zero() && t >= T::zero() && tau.is_finite() && t.is_finite()) {
        return Err(SchemeError::InvalidArgument(format!(
            "times must be finite and non-negative (τ = {tau}, t = {t})"
        )));
    }
    Ok(())
}

/// `D(t) = |X_01(t, 0)|`.
pub fn standard_coherence<T: Real, B: Backend<T> + ?Sized>(b: &B, t: T) -> Result<T, SchemeError> {
    check_times(T::zero(), t)?;
    b.cross_trace(Pointer::Zero, Pointer::One, t, T::zero()).map(|x| x.norm()).map_err(SchemeError::backend)
}

pub fn scheme_point<T: Real, B: Backend<T> + ?Sized>(
    b: &B,
    delta_eps_ev: T,
    tau: T,
    t: T,
) -> Result<SchemePoint<T>, SchemeError> {
    check_times(tau, t)?;
    let traces = b.slow_traces(tau, t).map_err(SchemeError::backend)?;
    Ok(SchemePoint::from_traces(&traces, tau, t, fast_phase(delta_eps_ev, tau)))
}

/// Scheme points at fixed `τ` over a grid of post-measurement times.
pub fn coherence_vs_t<T: Real, B: Backend<T> + ?Sized>(
    b: &B,
    delta_eps_ev: T,
    tau: T,
    ts: &[T],
) -> Result<Vec<SchemePoint<T>>, SchemeError> {
    ts.iter().map(|&t| scheme_point(b, delta_eps_ev, tau, t)).collect()
}

/// Delay points distinguished by the fast phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialKind {
    /// `Δε τ/ħ = 2πj`: maximal gain of the `+` outcome.
    Max,
    /// `Δε τ/ħ = (2j+1)π`.
    Min,
    /// `Δε τ/ħ = (j+½)π`.
    Equal,
}

impl SpecialKind {
    pub const ALL: [SpecialKind; 3] = [SpecialKind::Min, SpecialKind::Max, SpecialKind::Equal];

    fn offset_and_period(self) -> (f64, f64) {
        match self {
            SpecialKind::Max => (0.0, TAU),
            SpecialKind::Min => (PI, TAU),
            SpecialKind::Equal => (0.5 * PI, PI),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SpecialKind::Max => "max",
            SpecialKind::Min => "min",
            SpecialKind::Equal => "equal",
        }
    }
}

impl std::str::FromStr for SpecialKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "max" => Ok(SpecialKind::Max),
            "min" => Ok(SpecialKind::Min),
            "equal" => Ok(SpecialKind::Equal),
            other => Err(format!("unknown kind {other:?} (expected min, max or equal)")),
        }
    }
}

/// The delay of the requested kind nearest `tau_target`; ties go to the
/// smaller delay.
pub fn special_tau(delta_eps_ev: f64, tau_target: f64, kind: SpecialKind) -> Result<f64, SchemeError> {
    if !(delta_eps_ev > 0.0 && delta_eps_ev.is_finite()) {
        return Err(SchemeError::InvalidArgument(format!("Δε must be positive, got {delta_eps_ev} eV")));
    }
    if !(tau_target >= 0.0 && tau_target.is_finite()) {
        return Err(SchemeError::InvalidArgument(format!("target delay must be non-negative, got {tau_target} ps")));
    }
    let omega = units::angular_frequency(units::ev_to_mev(delta_eps_ev));
    let (offset, period) = kind.offset_and_period();
    let x = (omega * tau_target - offset) / period;
    let j = (x - 0.5).ceil().max(0.0);
    Ok((offset + period * j) / omega)
}
