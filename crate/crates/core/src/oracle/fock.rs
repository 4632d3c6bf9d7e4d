//! Truncated Fock-space realization of a linearly coupled bosonic bath.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CMatrix, GenericEnvironment, OracleError};
use crate::params::units::HBAR_MEV_PS;
use crate::weyl::BathRef;

pub const DEFAULT_DIMENSION_CAP: usize = 4096;
/// Thermal weight allowed above the truncation level of each mode.
pub const THERMAL_TAIL_TARGET: f64 = 1e-10;

/// Thermal weight above level `n_max`: `(n̄ / (n̄ + 1))^{n_max + 1}`.
pub fn thermal_tail(occupation: f64, n_max: usize) -> f64 {
    if occupation <= 0.0 {
        return 0.0;
    }
    (occupation / (occupation + 1.0)).powi(n_max as i32 + 1)
}

/// Smallest `n_max` whose thermal tail is below [`THERMAL_TAIL_TARGET`].
pub fn thermal_cutoff(occupation: f64) -> usize {
    if occupation <= 0.0 {
        return 0;
    }
    let q = occupation / (occupation + 1.0);
    let mut n = (THERMAL_TAIL_TARGET.ln() / q.ln()).floor().max(1.0) as usize - 1;
    while thermal_tail(occupation, n) >= THERMAL_TAIL_TARGET {
        n += 1;
    }
    n
}

/// Levels per mode: the thermal cutoff plus room for the displacement by up
/// to `2r` that the excited branch produces.
pub fn auto_truncation(bath: &BathRef<f64>) -> Vec<usize> {
    bath.occupation()
        .iter()
        .zip(bath.coupling())
        .map(|(&n, &r)| {
            if r == 0.0 {
                return 0;
            }
            let reach = (n.sqrt() + 1.0) * 2.0 * r;
            thermal_cutoff(n) + (4.0 * reach * reach + 12.0 * reach).ceil() as usize + 12
        })
        .collect()
}

fn lowering(levels: usize) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(levels, levels);
    for n in 1..levels {
        b[(n - 1, n)] = (n as f64).sqrt();
    }
    b
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` on factor `k`.
fn embed(op: &DMatrix<f64>, k: usize, dims: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::identity(1, 1);
    for (m, &d) in dims.iter().enumerate() {
        let factor = if m == k { op.clone() } else { DMatrix::identity(d, d) };
        out = out.kronecker(&factor);
    }
    out
}

/// Dense environment `H_E = Σ ħω b†b`, `V_0 = 0`,
/// `V_1 = Σ ħω (r (b + b†) + r²)` and a product thermal `R(0)`,
/// with `n_max[k] + 1` levels for mode `k`.
///
/// The constant `ħωr²` in `V_1` removes the polaron shift so the qubit
/// splitting is the renormalized one, as in the Weyl engine. Modes without
/// coupling factor out of every trace and are left out.
pub fn build_fock(bath: &BathRef<f64>, n_max: &[usize], cap: usize) -> Result<GenericEnvironment, OracleError> {
    if n_max.len() != bath.n_modes() {
        return Err(OracleError::TruncationCount { expected: bath.n_modes(), got: n_max.len() });
    }
    let occupation = bath.occupation();
    let mut kept = Vec::new();
    for (mode, &n) in n_max.iter().enumerate() {
        if bath.coupling()[mode] == 0.0 {
            continue;
        }
        let tail = thermal_tail(occupation[mode], n);
        if tail >= THERMAL_TAIL_TARGET {
            return Err(OracleError::Truncation {
                mode,
                n_max: n,
                tail,
                target: THERMAL_TAIL_TARGET,
                needed: thermal_cutoff(occupation[mode]),
            });
        }
        kept.push(mode);
    }
    let dims: Vec<usize> = kept.iter().map(|&m| n_max[m] + 1).collect();
    let dim = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    if dim > cap {
        return Err(OracleError::DimensionCap { dim, cap });
    }

    let mut h_e = DMatrix::<f64>::zeros(dim, dim);
    let mut v1 = DMatrix::<f64>::zeros(dim, dim);
    let mut r0 = DMatrix::<f64>::identity(1, 1);
    for (slot, &mode) in kept.iter().enumerate() {
        let (w, r) = (bath.omega()[mode], bath.coupling()[mode]);
        let levels = dims[slot];
        let b = lowering(levels);
        let energy = HBAR_MEV_PS * w;
        h_e += embed(&(b.transpose() * &b), slot, &dims) * energy;
        let mut coupling = (&b + b.transpose()) * r;
        for n in 0..levels {
            coupling[(n, n)] += r * r;
        }
        v1 += embed(&coupling, slot, &dims) * energy;
        let q = if bath.temperature_k() > 0.0 { occupation[mode] / (occupation[mode] + 1.0) } else { 0.0 };
        let weights: Vec<f64> = (0..levels).map(|n| q.powi(n as i32)).collect();
        let z: f64 = weights.iter().sum();
        let rho = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(levels, weights.iter().map(|w| w / z)));
        r0 = r0.kronecker(&rho);
    }
    let complex = |m: DMatrix<f64>| -> CMatrix { m.map(|x| Complex64::new(x, 0.0)) };
    GenericEnvironment::new(complex(h_e), CMatrix::zeros(dim, dim), complex(v1), complex(r0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{max_abs, OracleBackend};
    use crate::scheme::{scheme_point, standard_coherence, Backend, Pointer};
    use crate::weyl::WeylBackend;

    #[test]
    fn tail_and_cutoff() {
        assert!(thermal_tail(4.06, 115) < 1e-10);
        let n = thermal_cutoff(4.06);
        assert!(thermal_tail(4.06, n) < THERMAL_TAIL_TARGET && thermal_tail(4.06, n - 1) >= THERMAL_TAIL_TARGET);
        assert_eq!(thermal_cutoff(0.0), 0);
        assert_eq!(thermal_cutoff(1e-12), 0);
    }

    #[test]
    fn zero_temperature_starts_in_the_vacuum() {
        let bath = BathRef::new([(1.0, 0.2)], 0.0).unwrap();
        let env = build_fock(&bath, &[6], DEFAULT_DIMENSION_CAP).unwrap();
        let mut vacuum = CMatrix::zeros(7, 7);
        vacuum[(0, 0)] = Complex64::new(1.0, 0.0);
        assert_eq!(env.r0(), &vacuum);
    }

    #[test]
    fn thermal_state_is_normalized() {
        let bath = BathRef::new([(6.0, 0.3), (9.0, 0.1)], 34.0).unwrap();
        let env = build_fock(&bath, &auto_truncation(&bath), DEFAULT_DIMENSION_CAP).unwrap();
        assert!((env.r0().trace().re - 1.0).abs() < 1e-12);
        assert_eq!(env.v(Pointer::Zero), &CMatrix::zeros(env.dimension(), env.dimension()));
        assert!(max_abs(&(env.h_e() * env.r0() - env.r0() * env.h_e())) < 1e-12);
    }

    #[test]
    fn errors_are_reported() {
        let bath = BathRef::new([(0.98, 0.3)], 34.0).unwrap();
        assert!(matches!(
            build_fock(&bath, &[10], DEFAULT_DIMENSION_CAP),
            Err(OracleError::Truncation { mode: 0, .. })
        ));
        assert!(matches!(build_fock(&bath, &[200], 100), Err(OracleError::DimensionCap { dim: 201, cap: 100 })));
        assert!(matches!(build_fock(&bath, &[], 100), Err(OracleError::TruncationCount { .. })));
    }

    #[test]
    fn uncoupled_modes_are_dropped() {
        let bath = BathRef::new([(0.0, 0.0), (1.5, 0.2)], 10.0).unwrap();
        let n = auto_truncation(&bath);
        assert_eq!(n[0], 0);
        assert_eq!(build_fock(&bath, &n, DEFAULT_DIMENSION_CAP).unwrap().dimension(), n[1] + 1);
    }

    #[test]
    fn single_mode_matches_weyl_engine() {
        for temp in [0.0, 10.0, 34.0] {
            let bath = BathRef::new([(0.98, 0.35)], temp).unwrap();
            let oracle = OracleBackend::new(build_fock(&bath, &auto_truncation(&bath), DEFAULT_DIMENSION_CAP).unwrap());
            let weyl = WeylBackend::new(bath);
            for k in 0..12 {
                let (tau, t) = (0.55 * k as f64, 0.8 * (11 - k) as f64);
                let a = scheme_point(&oracle, 1.0, tau, t).unwrap();
                let b = scheme_point(&weyl, 1.0, tau, t).unwrap();
                for (x, y) in [
                    (a.coherence, b.coherence),
                    (a.p_plus, b.p_plus),
                    (a.d_plus, b.d_plus),
                    (a.d_minus, b.d_minus),
                    (a.g_av, b.g_av),
                ] {
                    assert!((x - y).abs() < 1e-9, "T = {temp}, τ = {tau}, t = {t}: {x} vs {y}");
                }
                assert!((standard_coherence(&oracle, t).unwrap() - b.coherence).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_modes_match_weyl_engine() {
        let bath = BathRef::new([(5.0, 0.3), (7.5, 0.2)], 10.0).unwrap();
        let n = auto_truncation(&bath);
        let oracle = OracleBackend::new(build_fock(&bath, &n, DEFAULT_DIMENSION_CAP).unwrap());
        let weyl = WeylBackend::new(bath);
        for k in 0..10 {
            let (tau, t) = (0.31 * k as f64, 0.47 * (9 - k) as f64);
            let a = oracle.slow_traces(tau, t).unwrap();
            let b = weyl.slow_traces(tau, t).unwrap();
            for (x, y) in [
                (a.x00, b.x00),
                (a.x01, b.x01),
                (a.x10, b.x10),
                (a.x11, b.x11),
                (a.x01_tau, b.x01_tau),
                (a.x01_t, b.x01_t),
            ] {
                assert!((x - y).norm() < 1e-9, "{n:?} τ = {tau}, t = {t}: {x} vs {y}");
            }
        }
    }
}
