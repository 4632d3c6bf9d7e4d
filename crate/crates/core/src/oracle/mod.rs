//! Dense finite-dimensional pure-dephasing backend.
//!
//! The environment is given by Hermitian `H_E`, `V_0`, `V_1` (meV) and an
//! initial density matrix `R(0)`; conditional propagators are
//! `ŵ_i(t) = exp(-i (H_E + V_i) t / ħ)`, built from one eigendecomposition
//! per branch. Everything is `f64`.

mod fock;
mod joint;
mod random;
mod theorems;

pub use fock::{auto_truncation, build_fock, thermal_cutoff, thermal_tail, DEFAULT_DIMENSION_CAP, THERMAL_TAIL_TARGET};
pub use joint::{assemble, block_trace, joint_evolution_validate, Blocks, JointState};
pub use random::{random_commuting_env, random_generic_env, random_state_commuting_env};
pub use theorems::{overall_minimum, seed_minimum, TheoremKind, Witness};

use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::params::units::HBAR_MEV_PS;
use crate::scheme::{Backend, Pointer, SlowTraces};

pub type CMatrix = DMatrix<Complex64>;

/// Largest element-wise anti-Hermitian part accepted.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted in `R(0)`.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Largest deviation of `Tr R(0)` from one.
pub const TRACE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{name} is {rows}x{cols}, expected {dim}x{dim}")]
    Shape { name: &'static str, rows: usize, cols: usize, dim: usize },
    #[error("{name} is not Hermitian (residual {residual:e})")]
    NotHermitian { name: &'static str, residual: f64 },
    #[error("initial state has eigenvalue {0:e} < 0")]
    NotPositive(f64),
    #[error("initial state has trace {0}")]
    BadTrace(f64),
    #[error("product dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error(
        "mode {mode}: truncation at n_max = {n_max} leaves thermal weight {tail:e} \
         (need < {target:e}; n_max >= {needed} required)"
    )]
    Truncation { mode: usize, n_max: usize, tail: f64, target: f64, needed: usize },
    #[error("expected {expected} truncation levels, got {got}")]
    TruncationCount { expected: usize, got: usize },
    #[error("qubit amplitudes are not normalized (|α|² + |β|² = {0})")]
    InvalidAmplitudes(f64),
    #[error("environment dimension must be at least {min}, got {got}")]
    TooSmall { min: usize, got: usize },
}

pub(crate) fn hermiticity_residual(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `min eig(m) ≥ −POSITIVITY_TOL` for Hermitian `m`, by a diagonal
/// shortcut or a Cholesky factorization of the shifted matrix.
fn is_positive(m: &CMatrix) -> bool {
    let d = m.nrows();
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || m[(i, j)] == Complex64::new(0.0, 0.0)));
    if diagonal {
        return (0..d).all(|i| m[(i, i)].re >= -POSITIVITY_TOL);
    }
    let shifted = m + CMatrix::identity(d, d).scale(POSITIVITY_TOL);
    nalgebra::Cholesky::new(shifted).is_some()
}

fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Complex product through real products, which take the fast f64 kernel;
/// real factors skip their imaginary halves.
pub fn cmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let split = |m: &CMatrix| (m.map(|z| z.re), (!is_real(m)).then(|| m.map(|z| z.im)));
    let ((ar, ai), (br, bi)) = (split(a), split(b));
    let mut re = &ar * &br;
    let mut im = DMatrix::<f64>::zeros(ar.nrows(), br.ncols());
    if let Some(ai) = &ai {
        im += ai * &br;
    }
    if let Some(bi) = &bi {
        im += &ar * bi;
        if let Some(ai) = &ai {
            re -= ai * bi;
        }
    }
    re.zip_map(&im, Complex64::new)
}

/// Largest element modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    cmul(a, b) - cmul(b, a)
}

/// Pure-dephasing environment `(H_E, V_0, V_1, R(0))`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericEnvironment {
    h_e: CMatrix,
    v0: CMatrix,
    v1: CMatrix,
    r0: CMatrix,
}

impl GenericEnvironment {
    pub fn new(h_e: CMatrix, v0: CMatrix, v1: CMatrix, r0: CMatrix) -> Result<Self, OracleError> {
        let dim = h_e.nrows();
        if dim == 0 {
            return Err(OracleError::TooSmall { min: 1, got: 0 });
        }
        for (name, m) in [("H_E", &h_e), ("V_0", &v0), ("V_1", &v1), ("R(0)", &r0)] {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(OracleError::Shape { name, rows: m.nrows(), cols: m.ncols(), dim });
            }
            let residual = hermiticity_residual(m);
            if !(residual < HERMITICITY_TOL) {
                return Err(OracleError::NotHermitian { name, residual });
            }
        }
        let trace = r0.trace();
        if !((trace.re - 1.0).abs() <= TRACE_TOL && trace.im.abs() <= TRACE_TOL) {
            return Err(OracleError::BadTrace(trace.re));
        }
        if !is_positive(&r0) {
            return Err(OracleError::NotPositive(SymmetricEigen::new(r0).eigenvalues.min()));
        }
        Ok(Self { h_e, v0, v1, r0 })
    }

    pub fn dimension(&self) -> usize {
        self.h_e.nrows()
    }

    pub fn h_e(&self) -> &CMatrix {
        &self.h_e
    }

    pub fn v(&self, branch: Pointer) -> &CMatrix {
        match branch {
            Pointer::Zero => &self.v0,
            Pointer::One => &self.v1,
        }
    }

    pub fn r0(&self) -> &CMatrix {
        &self.r0
    }

    /// Spectral decomposition of `H_E + V_i`.
    pub fn spectrum(&self, branch: Pointer) -> Spectrum {
        Spectrum::new(&self.h_e + self.v(branch))
    }

    /// `(ŵ_0(t), ŵ_1(t))`.
    pub fn propagators(&self, t: f64) -> (CMatrix, CMatrix) {
        (self.spectrum(Pointer::Zero).propagator(t), self.spectrum(Pointer::One).propagator(t))
    }
}

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl Spectrum {
    pub fn new(h: CMatrix) -> Self {
        if is_real(&h) {
            let eig = SymmetricEigen::new(h.map(|z| z.re));
            return Self { values: eig.eigenvalues, vectors: eig.eigenvectors.map(|x| Complex64::new(x, 0.0)) };
        }
        let eig = SymmetricEigen::new(h);
        Self { values: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    /// `e^{-iλ_n t/ħ}` for every eigenvalue.
    pub fn phases(&self, t: f64) -> Vec<Complex64> {
        self.values.iter().map(|&l| Complex64::from_polar(1.0, -l * t / HBAR_MEV_PS)).collect()
    }

    /// `exp(-i H t / ħ)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, e) in self.phases(t).into_iter().enumerate() {
            let mut col = scaled.column_mut(j);
            col *= e;
        }
        cmul(&scaled, &self.vectors.adjoint())
    }
}

/// `‖[R(0), ŵ_0†(τ) ŵ_1(τ)]‖_max`; zero exactly when no qubit-environment
/// entanglement is generated at delay `τ`.
pub fn separability_norm(env: &GenericEnvironment, tau: f64) -> f64 {
    let (w0, w1) = env.propagators(tau);
    max_abs(&commutator(env.r0(), &cmul(&w0.adjoint(), &w1)))
}

/// Max-norms of `[ŵ_0(t), ŵ_1(t')]`, `[ŵ_0(t), R(0)]` and `[ŵ_1(t), R(0)]`.
pub fn commutation_norms(env: &GenericEnvironment, t: f64, t_prime: f64) -> (f64, f64, f64) {
    let w0 = env.spectrum(Pointer::Zero).propagator(t);
    let s1 = env.spectrum(Pointer::One);
    let (w1, w1_prime) = (s1.propagator(t), s1.propagator(t_prime));
    (max_abs(&commutator(&w0, &w1_prime)), max_abs(&commutator(&w0, env.r0())), max_abs(&commutator(&w1, env.r0())))
}

/// `V_0† S V_1`-frame matrices `S_ij(τ) = V_0† ŵ_i(τ) R ŵ_j†(τ) V_1`.
type DelaySlice = [CMatrix; 4];

/// Scheme backend by dense linear algebra.
///
/// In the eigenbases of the two branches
///
/// ```text
///     X_ij(τ,t) = Σ_ab e^{-iλ⁰_a t/ħ} e^{iλ¹_b t/ħ} S_ij(τ)_ab M_ba,
///     M = V_1† V_0,
/// ```
///
/// so each `t` costs `O(d²)` once the four `S_ij(τ)` are known. The last
/// delay is cached.
#[derive(Debug)]
pub struct OracleBackend {
    env: GenericEnvironment,
    s0: Spectrum,
    s1: Spectrum,
    // V_1† V_0 and V_0† V_1.
    m: CMatrix,
    m_adj: CMatrix,
    // V_a† R(0) V_b for a, b ∈ {0, 1}.
    p00: CMatrix,
    p01: CMatrix,
    p10: CMatrix,
    p11: CMatrix,
    cache: Mutex<Option<(f64, Arc<DelaySlice>)>>,
}

impl OracleBackend {
    pub fn new(env: GenericEnvironment) -> Self {
        let s0 = env.spectrum(Pointer::Zero);
        let s1 = env.spectrum(Pointer::One);
        let (v0, v1) = (&s0.vectors, &s1.vectors);
        let (v0_adj, v1_adj) = (v0.adjoint(), v1.adjoint());
        let m = cmul(&v1_adj, v0);
        let m_adj = m.adjoint();
        let r0 = env.r0();
        let p00 = cmul(&cmul(&v0_adj, r0), v0);
        let p01 = cmul(&cmul(&v0_adj, r0), v1);
        let p10 = p01.adjoint();
        let p11 = cmul(&cmul(&v1_adj, r0), v1);
        Self { env, s0, s1, m, m_adj, p00, p01, p10, p11, cache: Mutex::new(None) }
    }

    pub fn environment(&self) -> &GenericEnvironment {
        &self.env
    }

    fn delay_slice(&self, tau: f64) -> Arc<DelaySlice> {
        if let Some((cached, slice)) = self.cache.lock().expect("cache lock").as_ref() {
            if *cached == tau {
                return Arc::clone(slice);
            }
        }
        let e0 = self.s0.phases(tau);
        let e1 = self.s1.phases(tau);
        // diag(x) P diag(y)^*
        let sandwich = |x: &[Complex64], p: &CMatrix, y: &[Complex64]| {
            CMatrix::from_fn(p.nrows(), p.ncols(), |a, b| x[a] * p[(a, b)] * y[b].conj())
        };
        let s01 = sandwich(&e0, &self.p01, &e1);
        let s00 = cmul(&sandwich(&e0, &self.p00, &e0), &self.m_adj);
        let s11 = cmul(&self.m_adj, &sandwich(&e1, &self.p11, &e1));
        let s10 = cmul(&cmul(&self.m_adj, &sandwich(&e1, &self.p10, &e0)), &self.m_adj);
        let slice = Arc::new([s00, s01, s10, s11]);
        *self.cache.lock().expect("cache lock") = Some((tau, Arc::clone(&slice)));
        slice
    }

    fn contract(&self, s: &CMatrix, t: f64) -> Complex64 {
        let e0 = self.s0.phases(t);
        let e1 = self.s1.phases(t);
        let d = s.nrows();
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..d {
            let mut row = Complex64::new(0.0, 0.0);
            for b in 0..d {
                row += s[(a, b)] * self.m[(b, a)] * e1[b].conj();
            }
            acc += e0[a] * row;
        }
        acc
    }
}

impl Backend<f64> for OracleBackend {
    type Error = OracleError;

    fn cross_trace(&self, i: Pointer, j: Pointer, tau: f64, t: f64) -> Result<Complex64, OracleError> {
        let slice = self.delay_slice(tau);
        Ok(self.contract(&slice[2 * i.index() + j.index()], t))
    }

    fn slow_traces(&self, tau: f64, t: f64) -> Result<SlowTraces<f64>, OracleError> {
        let s = self.delay_slice(tau);
        Ok(SlowTraces {
            x00: self.contract(&s[0], t),
            x01: self.contract(&s[1], t),
            x10: self.contract(&s[2], t),
            x11: self.contract(&s[3], t),
            x01_tau: self.contract(&s[1], 0.0),
            // X_01(t, 0) = X_ij(0, t), and S_01(0) = P_01.
            x01_t: self.contract(&self.p01, t),
        })
    }
}
