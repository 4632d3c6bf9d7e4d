//! Deformation-potential spectral function and its discretizations.
//!
//! `G(k)` is the density of dimensionless coupling weight `|f_k / ħω_k|²`
//! per wave number, so that the total weight is `H = ∫ G(k) dk`:
//!
//! ```text
//!     G(k) = P · k · ∫_0^π sinΘ exp[-½ k² (l_z² cos²Θ + l_⊥² sin²Θ)] dΘ,
//!     P    = (σ_e − σ_h)² / (8π² ρ c³ ħ)            [nm²]
//! ```
//!
//! A mode `k` has `ω = c k` under linear dispersion and coupling ratio
//! `r = √H_i`.

use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::params::{units, BathChoice, MaterialParams};
use crate::real::Real;
use crate::weyl::{BathRef, WeylError};

/// Modes in the reference equally spaced discretization.
pub const STANDARD_MODE_COUNT: usize = 19;
/// Spacing of the equally spaced grid relative to the maximum of `G`.
pub const SPACING_FRACTION: f64 = 2.0 / 3.0;
/// Default quadrature cutoff in units of `argmax G`.
pub const DEFAULT_K_MAX_FACTOR: f64 = 16.0;

const THETA_NODES: usize = 64;
const ARGMAX_BRACKET: (f64, f64) = (1e-4, 2.0);
const ARGMAX_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error("wave number must be non-negative, got {0} nm^-1")]
    NegativeWaveNumber(f64),
    #[error("quadrature needs at least 2 nodes and k_max > 0 (got n = {nodes}, k_max = {k_max})")]
    InvalidQuadrature { nodes: usize, k_max: f64 },
    #[error("mode index {index} out of range for a {len}-mode grid")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("subset has no mode with positive weight")]
    ZeroWeightSubset,
    #[error("empty mode subset")]
    EmptySubset,
    #[error("subset rescaling requires an equally spaced reference grid")]
    NotEquallySpaced,
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

/// Gauss-Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and P_{n-1}(x).
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (x, 1.0) } else { (p1, p0) };
            dp = nf * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// 64-node rule on [0, π] for the polar-angle integral.
fn theta_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let (x, w) = gauss_legendre(THETA_NODES);
        let half = std::f64::consts::FRAC_PI_2;
        (x.iter().map(|&x| half * (x + 1.0)).collect(), w.iter().map(|&w| half * w).collect())
    })
}

/// `P = (σ_e − σ_h)² / (8π² ρ c³ ħ)` in nm².
pub fn spectral_prefactor_nm2(m: &MaterialParams) -> f64 {
    let sigma_j = m.sigma_diff_ev * units::JOULE_PER_EV;
    let pi = std::f64::consts::PI;
    let p_m2 = sigma_j * sigma_j / (8.0 * pi * pi * m.rho_kg_m3 * m.c_m_s.powi(3) * units::hbar_si());
    p_m2 * 1.0e18
}

/// Spectral function `G(k)` in nm.
pub fn spectral_g<T: Real>(k: T, m: &MaterialParams) -> Result<T, BathError> {
    if !(k >= T::zero()) {
        return Err(BathError::NegativeWaveNumber(k.to_f64_lossy()));
    }
    if k == T::zero() {
        return Ok(T::zero());
    }
    let (nodes, weights) = theta_rule();
    let lz2 = T::lit(m.l_z_nm * m.l_z_nm);
    let lp2 = T::lit(m.l_perp_nm * m.l_perp_nm);
    let half_k2 = T::lit(0.5) * k * k;
    let angular = nodes.iter().zip(weights).fold(T::zero(), |acc, (&th, &w)| {
        let (s, c) = T::lit(th).sin_cos();
        acc + T::lit(w) * s * (-half_k2 * (lz2 * c * c + lp2 * s * s)).exp()
    });
    Ok(T::lit(spectral_prefactor_nm2(m)) * k * angular)
}

fn g64(k: f64, m: &MaterialParams) -> f64 {
    spectral_g(k, m).expect("non-negative wave number")
}

/// Wave number of the maximum of `G`, by golden-section search.
pub fn argmax_g(m: &MaterialParams) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = ARGMAX_BRACKET;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g64(c, m), g64(d, m));
    while b - a > ARGMAX_TOL {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g64(c, m);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g64(d, m);
        }
    }
    0.5 * (a + b)
}

/// `∫_a^b G dk` by composite 64-node Gauss-Legendre.
pub fn integrate_g(m: &MaterialParams, a: f64, b: f64, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(64);
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + h * p as f64;
            x.iter().zip(&w).map(|(&x, &w)| 0.5 * h * w * g64(lo + 0.5 * h * (x + 1.0), m)).sum::<f64>()
        })
        .sum()
}

/// Total coupling weight `H = ∫_0^∞ G dk`.
pub fn total_weight(m: &MaterialParams) -> f64 {
    // The integrand falls off at least as fast as exp(-½ k² l_min²).
    let l_min = m.l_z_nm.min(m.l_perp_nm);
    integrate_g(m, 0.0, 12.0 / l_min, 96)
}

/// One bosonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode<T> {
    /// Wave number (nm⁻¹).
    pub k: T,
    /// Angular frequency `c k` (rad/ps).
    pub omega: T,
    /// Dimensionless weight `H_i = |f / ħω|²`.
    pub weight: T,
}

impl<T: Real> Mode<T> {
    pub fn new(k: T, weight: T, m: &MaterialParams) -> Self {
        Self { k, omega: T::lit(m.sound_speed_nm_per_ps()) * k, weight }
    }

    /// Coupling ratio `r = √H_i`.
    pub fn coupling(&self) -> T {
        self.weight.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    /// Equally spaced grid `k_i = i Δk`; `continuum_weight` is `∫ G dk`.
    EquallySpaced {
        delta_k: f64,
        continuum_weight: f64,
    },
    Quadrature {
        nodes: usize,
        k_max: f64,
    },
    SubsetRescaled {
        indices: Vec<usize>,
    },
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathSpec<T> {
    /// Modes sorted by wave number.
    pub modes: Vec<Mode<T>>,
    pub temperature_k: T,
    pub provenance: Provenance,
}

impl<T: Real> BathSpec<T> {
    pub fn total_weight(&self) -> T {
        self.modes.iter().fold(T::zero(), |acc, m| acc + m.weight)
    }

    pub fn to_bath_ref(&self) -> Result<BathRef<T>, WeylError> {
        BathRef::new(self.modes.iter().map(|m| (m.omega, m.coupling())), self.temperature_k)
    }
}

/// The reference 19-mode grid: `k_i = i Δk`, `Δk = (2/3) argmax G`,
/// `H_i = G(k_i) Δk`.
pub fn discretize_standard<T: Real>(m: &MaterialParams, temperature_k: T) -> BathSpec<T> {
    discretize_equally_spaced(m, temperature_k, STANDARD_MODE_COUNT)
}

/// Same spacing as [`discretize_standard`] with an arbitrary mode count.
pub fn discretize_equally_spaced<T: Real>(m: &MaterialParams, temperature_k: T, count: usize) -> BathSpec<T> {
    let delta_k = SPACING_FRACTION * argmax_g(m);
    let modes = (0..count)
        .map(|i| {
            let k = delta_k * i as f64;
            Mode::new(T::lit(k), T::lit(g64(k, m) * delta_k), m)
        })
        .collect();
    BathSpec {
        modes,
        temperature_k,
        provenance: Provenance::EquallySpaced { delta_k, continuum_weight: total_weight(m) },
    }
}

/// Dense Gauss-Legendre discretization of `(0, k_max]`, with
/// `H_i = G(k_i) w_i` summing to `∫_0^{k_max} G dk`.
pub fn quadrature_bath<T: Real>(
    m: &MaterialParams,
    temperature_k: T,
    nodes: usize,
    k_max: f64,
) -> Result<BathSpec<T>, BathError> {
    if nodes < 2 || !(k_max > 0.0 && k_max.is_finite()) {
        return Err(BathError::InvalidQuadrature { nodes, k_max });
    }
    let (x, w) = gauss_legendre(nodes);
    let modes = x
        .iter()
        .zip(&w)
        .map(|(&x, &w)| {
            let k = 0.5 * k_max * (x + 1.0);
            Mode::new(T::lit(k), T::lit(g64(k, m) * 0.5 * k_max * w), m)
        })
        .collect();
    Ok(BathSpec { modes, temperature_k, provenance: Provenance::Quadrature { nodes, k_max } })
}

pub fn default_k_max(m: &MaterialParams) -> f64 {
    DEFAULT_K_MAX_FACTOR * argmax_g(m)
}

/// Restricts an equally spaced grid to `indices`, scaling every kept weight
/// by the common factor `H / Σ_{i∈indices} H_i` so the total is `H = ∫ G dk`.
pub fn subset_rescaled<T: Real>(spec: &BathSpec<T>, indices: &[usize]) -> Result<BathSpec<T>, BathError> {
    let Provenance::EquallySpaced { continuum_weight, .. } = spec.provenance else {
        return Err(BathError::NotEquallySpaced);
    };
    if indices.is_empty() {
        return Err(BathError::EmptySubset);
    }
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let len = spec.modes.len();
    if let Some(&index) = sorted.iter().find(|&&i| i >= len) {
        return Err(BathError::IndexOutOfRange { index, len });
    }
    let kept: T = sorted.iter().fold(T::zero(), |acc, &i| acc + spec.modes[i].weight);
    if !(kept > T::zero()) {
        return Err(BathError::ZeroWeightSubset);
    }
    let scale = T::lit(continuum_weight) / kept;
    let modes = sorted.iter().map(|&i| Mode { weight: spec.modes[i].weight * scale, ..spec.modes[i] }).collect();
    Ok(BathSpec {
        modes,
        temperature_k: spec.temperature_k,
        provenance: Provenance::SubsetRescaled { indices: sorted },
    })
}

/// Resolves a configured bath choice.
pub fn build_bath<T: Real>(
    choice: &BathChoice,
    m: &MaterialParams,
    temperature_k: T,
) -> Result<BathSpec<T>, BathError> {
    match choice {
        BathChoice::Continuous { nodes, k_max_nm_inv } => {
            let k_max = k_max_nm_inv.unwrap_or_else(|| default_k_max(m));
            quadrature_bath(m, temperature_k, *nodes, k_max)
        }
        BathChoice::Grid19 => Ok(discretize_standard(m, temperature_k)),
        BathChoice::Subset(indices) => subset_rescaled(&discretize_standard(m, temperature_k), indices),
        BathChoice::Explicit(list) => {
            let mut modes: Vec<Mode<T>> = list.iter().map(|&(k, h)| Mode::new(T::lit(k), T::lit(h), m)).collect();
            modes.sort_by(|a, b| a.k.partial_cmp(&b.k).expect("finite wave numbers"));
            Ok(BathSpec { modes, temperature_k, provenance: Provenance::Explicit })
        }
    }
}
