//! Literal qubit-environment evolution through the measurement, used to
//! validate the trace formulas.

use num_complex::Complex64;

use super::{CMatrix, GenericEnvironment, OracleError, Spectrum};
use crate::params::units;
use crate::scheme::{Pointer, PROBABILITY_FLOOR};

/// Environment blocks `R_ij = ⟨i|σ|j⟩` of a qubit-environment state in the
/// pointer basis.
pub type Blocks = [[CMatrix; 2]; 2];

#[derive(Debug, Clone)]
pub struct JointState {
    /// State just before the measurement.
    pub sigma_tau: Blocks,
    pub p_plus: f64,
    pub p_minus: f64,
    /// Normalized environment states after each outcome (zero for a
    /// vanishing outcome).
    pub r_plus: CMatrix,
    pub r_minus: CMatrix,
    /// `|±⟩⟨±| ⊗ R_±` evolved for the post-measurement time.
    pub sigma_plus_t: Blocks,
    pub sigma_minus_t: Blocks,
}

impl JointState {
    /// Degree of coherence after outcome `+`; the prepared `|±⟩` has
    /// `|αβ*| = ½`.
    pub fn coherence_plus(&self) -> f64 {
        2.0 * self.sigma_plus_t[0][1].trace().norm()
    }

    pub fn coherence_minus(&self) -> f64 {
        2.0 * self.sigma_minus_t[0][1].trace().norm()
    }
}

pub fn block_trace(b: &Blocks) -> Complex64 {
    b[0][0].trace() + b[1][1].trace()
}

/// The full `2d × 2d` matrix.
pub fn assemble(b: &Blocks) -> CMatrix {
    let d = b[0][0].nrows();
    let mut out = CMatrix::zeros(2 * d, 2 * d);
    for (i, row) in b.iter().enumerate() {
        for (j, block) in row.iter().enumerate() {
            out.view_mut((i * d, j * d), (d, d)).copy_from(block);
        }
    }
    out
}

/// Evolves every block for time `s` with qubit energies `ε_0 − ε_1 = Δε`.
fn evolve(blocks: &Blocks, spectra: &[Spectrum; 2], delta_eps_mev: f64, s: f64) -> Blocks {
    let w = [spectra[0].propagator(s), spectra[1].propagator(s)];
    let qubit = |i: usize, j: usize| {
        let sign = i as f64 - j as f64;
        Complex64::from_polar(1.0, sign * delta_eps_mev * s / units::HBAR_MEV_PS)
    };
    std::array::from_fn(|i| std::array::from_fn(|j| (&w[i] * &blocks[i][j] * w[j].adjoint()).scale(1.0) * qubit(i, j)))
}

fn prepared(rho: &CMatrix, sign: f64) -> Blocks {
    let half = rho.scale(0.5);
    let off = half.scale(sign);
    [[half.clone(), off.clone()], [off, half]]
}

/// Prepares `(α|0⟩ + β|1⟩) ⊗ R(0)`, evolves it for `τ`, measures in the
/// `|±⟩` basis, re-prepares `|±⟩ ⊗ R_±` and evolves for `t`.
pub fn joint_evolution_validate(
    env: &GenericEnvironment,
    delta_eps_ev: f64,
    tau: f64,
    t: f64,
    alpha: Complex64,
    beta: Complex64,
) -> Result<JointState, OracleError> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(OracleError::InvalidAmplitudes(norm));
    }
    let de = units::ev_to_mev(delta_eps_ev);
    let spectra = [env.spectrum(Pointer::Zero), env.spectrum(Pointer::One)];
    let amp = [alpha, beta];
    let initial: Blocks = std::array::from_fn(|i| std::array::from_fn(|j| env.r0() * (amp[i] * amp[j].conj())));
    let sigma_tau = evolve(&initial, &spectra, de, tau);

    let branch = |sign: f64| {
        let s = Complex64::new(sign, 0.0);
        let tilde = (&sigma_tau[0][0] + &sigma_tau[1][1] + (&sigma_tau[0][1] + &sigma_tau[1][0]) * s).scale(0.5);
        let p = tilde.trace().re;
        let r = if p < PROBABILITY_FLOOR { CMatrix::zeros(tilde.nrows(), tilde.ncols()) } else { tilde.unscale(p) };
        let after = evolve(&prepared(&r, sign), &spectra, de, t);
        (p, r, after)
    };
    let (p_plus, r_plus, sigma_plus_t) = branch(1.0);
    let (p_minus, r_minus, sigma_minus_t) = branch(-1.0);
    Ok(JointState { sigma_tau, p_plus, p_minus, r_plus, r_minus, sigma_plus_t, sigma_minus_t })
}
