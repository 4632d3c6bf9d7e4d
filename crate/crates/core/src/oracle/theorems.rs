//! Sweeps of the minimum average gain over random environment families.

use serde::Serialize;

use super::{random_commuting_env, random_generic_env, random_state_commuting_env, GenericEnvironment, OracleBackend};
use crate::scheme::{envelopes, SchemeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremKind {
    /// `H_E`, `V_0`, `V_1` mutually commuting.
    Commuting,
    /// Maximally mixed initial environment state.
    StateCommuting,
    /// No structure.
    Generic,
}

impl TheoremKind {
    pub fn name(self) -> &'static str {
        match self {
            TheoremKind::Commuting => "commuting",
            TheoremKind::StateCommuting => "state-commuting",
            TheoremKind::Generic => "generic",
        }
    }

    pub fn environment(self, seed: u64, d: usize) -> GenericEnvironment {
        match self {
            TheoremKind::Commuting => random_commuting_env(seed, d),
            TheoremKind::StateCommuting => random_state_commuting_env(seed, d),
            TheoremKind::Generic => random_generic_env(seed, d),
        }
    }
}

impl std::str::FromStr for TheoremKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "commuting" => Ok(TheoremKind::Commuting),
            "state-commuting" => Ok(TheoremKind::StateCommuting),
            "generic" => Ok(TheoremKind::Generic),
            other => Err(format!("unknown theorem kind {other:?} (expected commuting, state-commuting or generic)")),
        }
    }
}

/// Where the smallest envelope value of `g_av` was found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub seed: u64,
    pub tau: f64,
    pub t: f64,
    pub theta: f64,
    pub g_av: f64,
}

/// Minimum over `taus × ts` of the lower envelope of `g_av` for one seeded
/// environment.
pub fn seed_minimum(
    kind: TheoremKind,
    seed: u64,
    d: usize,
    taus: &[f64],
    ts: &[f64],
    n_theta: usize,
) -> Result<Witness, SchemeError> {
    let backend = OracleBackend::new(kind.environment(seed, d));
    let mut best = Witness { seed, tau: f64::NAN, t: f64::NAN, theta: f64::NAN, g_av: f64::INFINITY };
    for &tau in taus {
        for &t in ts {
            let e = envelopes(&backend, tau, t, n_theta)?;
            if e.g_min < best.g_av {
                best = Witness { seed, tau, t, theta: e.theta_at_min, g_av: e.g_min };
            }
        }
    }
    Ok(best)
}

/// The most negative of several per-seed minima.
pub fn overall_minimum(witnesses: &[Witness]) -> Option<Witness> {
    witnesses.iter().copied().min_by(|a, b| a.g_av.total_cmp(&b.g_av))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, max: f64) -> Vec<f64> {
        (1..=n).map(|i| max * i as f64 / n as f64).collect()
    }

    #[test]
    fn commuting_families_never_lose_coherence() {
        let (taus, ts) = (grid(6, 4.0), grid(6, 4.0));
        for kind in [TheoremKind::Commuting, TheoremKind::StateCommuting] {
            for seed in 0..8 {
                let w = seed_minimum(kind, seed, 4, &taus, &ts, 256).unwrap();
                assert!(w.g_av >= -1e-10, "{kind:?} seed {seed}: {w:?}");
            }
        }
    }

    #[test]
    fn generic_environments_can_lose_coherence() {
        let (taus, ts) = (grid(8, 4.0), grid(8, 4.0));
        let found: Vec<Witness> =
            (0..10).map(|seed| seed_minimum(TheoremKind::Generic, seed, 4, &taus, &ts, 256).unwrap()).collect();
        assert!(overall_minimum(&found).unwrap().g_av < -1e-4);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [TheoremKind::Commuting, TheoremKind::StateCommuting, TheoremKind::Generic] {
            assert_eq!(kind.name().parse::<TheoremKind>().unwrap(), kind);
        }
        assert!("other".parse::<TheoremKind>().is_err());
    }
}
