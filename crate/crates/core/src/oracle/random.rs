//! Seeded random environments for the theorem sweeps.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{CMatrix, GenericEnvironment};

/// Regularization added to `M M†` before normalizing it into a state.
const STATE_FLOOR: f64 = 1e-6;

fn gaussian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let m = gaussian(rng, d);
    (&m + m.adjoint()).unscale(2.0)
}

fn density(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    let m = gaussian(rng, d);
    let rho = &m * m.adjoint() + CMatrix::identity(d, d).scale(STATE_FLOOR);
    let tr = rho.trace().re;
    let rho = rho.unscale(tr);
    // Remove the roundoff anti-Hermitian part.
    (&rho + rho.adjoint()).unscale(2.0)
}

fn unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    gaussian(rng, d).qr().q()
}

fn conjugated_diagonal(u: &CMatrix, rng: &mut ChaCha8Rng) -> CMatrix {
    let d = u.nrows();
    let diag = DVector::from_fn(d, |_, _| Complex64::new(rng.sample(StandardNormal), 0.0));
    let m = u * CMatrix::from_diagonal(&diag) * u.adjoint();
    (&m + m.adjoint()).unscale(2.0)
}

fn assert_dimension(d: usize) {
    assert!(d >= 2, "random environments need d >= 2, got {d}");
}

/// `H_E`, `V_0`, `V_1` diagonal in one shared random basis, with a random
/// full-rank initial state.
///
/// # Panics
/// If `d < 2`.
pub fn random_commuting_env(seed: u64, d: usize) -> GenericEnvironment {
    assert_dimension(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = unitary(&mut rng, d);
    let h_e = conjugated_diagonal(&u, &mut rng);
    let v0 = conjugated_diagonal(&u, &mut rng);
    let v1 = conjugated_diagonal(&u, &mut rng);
    let r0 = density(&mut rng, d);
    GenericEnvironment::new(h_e, v0, v1, r0).expect("generated environment is valid")
}

/// Unrelated random `H_E`, `V_0`, `V_1` with `R(0) = I/d`.
///
/// # Panics
/// If `d < 2`.
pub fn random_state_commuting_env(seed: u64, d: usize) -> GenericEnvironment {
    assert_dimension(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_e = hermitian(&mut rng, d);
    let v0 = hermitian(&mut rng, d);
    let v1 = hermitian(&mut rng, d);
    let r0 = CMatrix::identity(d, d).unscale(d as f64);
    GenericEnvironment::new(h_e, v0, v1, r0).expect("generated environment is valid")
}

/// Unrelated random `H_E`, `V_0`, `V_1` and initial state.
///
/// # Panics
/// If `d < 2`.
pub fn random_generic_env(seed: u64, d: usize) -> GenericEnvironment {
    assert_dimension(d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h_e = hermitian(&mut rng, d);
    let v0 = hermitian(&mut rng, d);
    let v1 = hermitian(&mut rng, d);
    let r0 = density(&mut rng, d);
    GenericEnvironment::new(h_e, v0, v1, r0).expect("generated environment is valid")
}
