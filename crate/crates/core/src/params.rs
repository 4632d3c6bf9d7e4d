//! Units, material parameters, run configuration and thermal occupation.
//!
//! Everything downstream works in one fixed unit system: energies in meV,
//! times in ps, lengths in nm, temperatures in K, angular frequencies in
//! rad/ps and wave numbers in nm⁻¹. Planck's constant is kept explicit, so a
//! phase is always `energy * time / HBAR_MEV_PS`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::real::Real;

/// Fixed conversion constants.
pub mod units {
    use crate::real::Real;

    /// Reduced Planck constant in meV·ps.
    pub const HBAR_MEV_PS: f64 = 0.6582120;
    /// Boltzmann constant in meV/K.
    pub const KB_MEV_PER_K: f64 = 0.08617333;
    pub const MEV_PER_EV: f64 = 1.0e3;
    /// Elementary charge, used to bring eV-valued material constants to SI.
    pub const JOULE_PER_EV: f64 = 1.602176634e-19;

    #[inline]
    pub fn hbar<T: Real>() -> T {
        T::lit(HBAR_MEV_PS)
    }

    #[inline]
    pub fn ev_to_mev<T: Real>(e_ev: T) -> T {
        e_ev * T::lit(MEV_PER_EV)
    }

    /// Energy (meV) to angular frequency (rad/ps).
    #[inline]
    pub fn angular_frequency<T: Real>(energy_mev: T) -> T {
        energy_mev / hbar::<T>()
    }

    /// Angular frequency (rad/ps) to energy (meV).
    #[inline]
    pub fn energy_of<T: Real>(omega_rad_ps: T) -> T {
        omega_rad_ps * hbar::<T>()
    }

    /// Sound speed in m/s to nm/ps.
    #[inline]
    pub fn speed_nm_per_ps(c_m_s: f64) -> f64 {
        c_m_s * 1.0e-3
    }

    /// ħ in J·s, consistent with [`HBAR_MEV_PS`].
    #[inline]
    pub fn hbar_si() -> f64 {
        HBAR_MEV_PS * 1.0e-3 * JOULE_PER_EV * 1.0e-12
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("mode energy must be positive, got {0} meV")]
    NonPositiveEnergy(f64),
    #[error("temperature must be non-negative, got {0} K")]
    NegativeTemperature(f64),
}

/// Bose-Einstein occupation `1 / (exp(E / k_B T) - 1)`; exactly zero at `T = 0`.
pub fn bose_occupation<T: Real>(energy_mev: T, temperature_k: T) -> Result<T, ParamError> {
    if !(energy_mev > T::zero()) {
        return Err(ParamError::NonPositiveEnergy(energy_mev.to_f64_lossy()));
    }
    if temperature_k < T::zero() || temperature_k.is_nan() {
        return Err(ParamError::NegativeTemperature(temperature_k.to_f64_lossy()));
    }
    if temperature_k == T::zero() {
        return Ok(T::zero());
    }
    let x = energy_mev / (T::lit(units::KB_MEV_PER_K) * temperature_k);
    Ok(T::one() / x.exp_m1())
}

/// Material constants of the quantum dot and its host crystal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaterialParams {
    /// Deformation-potential difference σ_e − σ_h (eV).
    pub sigma_diff_ev: f64,
    /// Crystal density (kg/m³).
    pub rho_kg_m3: f64,
    /// Longitudinal sound speed (m/s).
    pub c_m_s: f64,
    /// In-plane wave-function width (nm).
    pub l_perp_nm: f64,
    /// Growth-direction wave-function width (nm).
    pub l_z_nm: f64,
    /// Renormalized qubit splitting Δε (eV).
    pub delta_eps_ev: f64,
}

impl MaterialParams {
    /// Small self-assembled GaAs dot.
    pub const GAAS: Self =
        Self { sigma_diff_ev: 9.0, rho_kg_m3: 5360.0, c_m_s: 5100.0, l_perp_nm: 4.0, l_z_nm: 1.0, delta_eps_ev: 1.0 };

    pub fn sound_speed_nm_per_ps(&self) -> f64 {
        units::speed_nm_per_ps(self.c_m_s)
    }

    pub fn delta_eps_mev(&self) -> f64 {
        units::ev_to_mev(self.delta_eps_ev)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let fields = [
            ("sigma_diff_ev", self.sigma_diff_ev),
            ("rho_kg_m3", self.rho_kg_m3),
            ("c_m_s", self.c_m_s),
            ("l_perp_nm", self.l_perp_nm),
            ("l_z_nm", self.l_z_nm),
            ("delta_eps_ev", self.delta_eps_ev),
        ];
        for (key, value) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConfigError::invalid(key, format!("must be strictly positive, got {value}")));
            }
        }
        Ok(())
    }
}

impl Default for MaterialParams {
    fn default() -> Self {
        Self::GAAS
    }
}

/// Which backend evaluates the environment traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Weyl,
    Oracle,
}

impl FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "weyl" => Ok(Self::Weyl),
            "oracle" => Ok(Self::Oracle),
            other => Err(format!("expected `weyl` or `oracle`, got `{other}`")),
        }
    }
}

/// Bath construction requested by a run.
///
/// Textual forms (the `bath` config key and the `--bath` CLI flag):
/// `continuous`, `continuous:<nodes>`, `continuous:<nodes>:<k_max_nm_inv>`,
/// `grid19`, `subset:<i>,<j>,...` (indices into the 19-mode grid, rescaled
/// to the full weight) and `modes:<k>/<H>,<k>/<H>,...` (explicit wave numbers
/// in nm⁻¹ and dimensionless weights).
#[derive(Debug, Clone, PartialEq)]
pub enum BathChoice {
    Continuous { nodes: usize, k_max_nm_inv: Option<f64> },
    Grid19,
    Subset(Vec<usize>),
    Explicit(Vec<(f64, f64)>),
}

pub const DEFAULT_QUADRATURE_NODES: usize = 1500;

impl Default for BathChoice {
    fn default() -> Self {
        Self::Continuous { nodes: DEFAULT_QUADRATURE_NODES, k_max_nm_inv: None }
    }
}

impl fmt::Display for BathChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Continuous { nodes, k_max_nm_inv: None } => write!(f, "continuous:{nodes}"),
            Self::Continuous { nodes, k_max_nm_inv: Some(k) } => write!(f, "continuous:{nodes}:{k}"),
            Self::Grid19 => f.write_str("grid19"),
            Self::Subset(idx) => {
                let list: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                write!(f, "subset:{}", list.join(","))
            }
            Self::Explicit(modes) => {
                let list: Vec<String> = modes.iter().map(|(k, h)| format!("{k}/{h}")).collect();
                write!(f, "modes:{}", list.join(","))
            }
        }
    }
}

impl FromStr for BathChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        match (head, rest) {
            ("continuous", None) => Ok(Self::default()),
            ("continuous", Some(rest)) => {
                let mut parts = rest.split(':');
                let nodes =
                    parts.next().unwrap_or_default().parse::<usize>().map_err(|e| format!("bad node count: {e}"))?;
                let k_max = match parts.next() {
                    Some(k) => Some(k.parse::<f64>().map_err(|e| format!("bad k_max: {e}"))?),
                    None => None,
                };
                if parts.next().is_some() {
                    return Err("too many fields in `continuous:` spec".into());
                }
                if nodes < 2 {
                    return Err(format!("continuous bath needs at least 2 nodes, got {nodes}"));
                }
                if let Some(k) = k_max {
                    if !(k > 0.0) {
                        return Err(format!("k_max must be positive, got {k}"));
                    }
                }
                Ok(Self::Continuous { nodes, k_max_nm_inv: k_max })
            }
            ("grid19", None) => Ok(Self::Grid19),
            ("subset", Some(rest)) => {
                let idx = rest
                    .split(',')
                    .map(|t| t.trim().parse::<usize>().map_err(|e| format!("bad mode index `{t}`: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if idx.is_empty() {
                    return Err("empty subset".into());
                }
                Ok(Self::Subset(idx))
            }
            ("modes", Some(rest)) => {
                let modes = rest
                    .split(',')
                    .map(|t| {
                        let (k, h) = t.split_once('/').ok_or_else(|| format!("expected <k>/<H>, got `{t}`"))?;
                        let k: f64 = k.trim().parse().map_err(|e| format!("bad wave number `{k}`: {e}"))?;
                        let h: f64 = h.trim().parse().map_err(|e| format!("bad weight `{h}`: {e}"))?;
                        if !(k >= 0.0 && h >= 0.0 && k.is_finite() && h.is_finite()) {
                            return Err(format!("mode `{t}` must have finite k >= 0 and H >= 0"));
                        }
                        Ok((k, h))
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                Ok(Self::Explicit(modes))
            }
            _ => Err(format!("unrecognized bath spec `{s}`")),
        }
    }
}

impl Serialize for BathChoice {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Uniform grid `start:stop:count` (inclusive endpoints).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self, String> {
        if count == 0 {
            return Err("grid needs at least one point".into());
        }
        if !(start.is_finite() && stop.is_finite()) {
            return Err("grid bounds must be finite".into());
        }
        if count > 1 && !(stop > start) {
            return Err(format!("grid must be strictly increasing, got {start}..{stop}"));
        }
        Ok(Self { start, stop, count })
    }

    pub fn step(&self) -> f64 {
        if self.count > 1 {
            (self.stop - self.start) / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn points(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.count).map(|i| self.start + h * i as f64).collect()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected start:stop:count, got `{s}`"));
        };
        let start: f64 = a.parse().map_err(|e| format!("bad grid start `{a}`: {e}"))?;
        let stop: f64 = b.parse().map_err(|e| format!("bad grid stop `{b}`: {e}"))?;
        let count: usize = n.parse().map_err(|e| format!("bad grid count `{n}`: {e}"))?;
        Self::new(start, stop, count)
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeConfig {
    pub material: MaterialParams,
    pub temperature_k: f64,
    /// Delay (measurement) times τ in ps.
    pub tau_grid: Grid,
    /// Post-measurement times t in ps.
    pub t_grid: Grid,
    pub backend: BackendKind,
    pub bath: BathChoice,
    /// Resolution of the fast-phase scan used for envelopes.
    pub envelope_points: usize,
}

pub const DEFAULT_TEMPERATURE_K: f64 = 34.0;
pub const DEFAULT_ENVELOPE_POINTS: usize = 4096;
pub const MIN_ENVELOPE_POINTS: usize = 16;

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            material: MaterialParams::GAAS,
            temperature_k: DEFAULT_TEMPERATURE_K,
            tau_grid: Grid { start: 0.0, stop: 8.0, count: 401 },
            t_grid: Grid { start: 0.0, stop: 40.0, count: 401 },
            backend: BackendKind::Weyl,
            bath: BathChoice::default(),
            envelope_points: DEFAULT_ENVELOPE_POINTS,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config syntax error: {0}")]
    Syntax(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config key `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
}

impl ConfigError {
    fn invalid(key: &str, reason: impl Into<String>) -> Self {
        Self::InvalidValue { key: key.to_owned(), reason: reason.into() }
    }

    /// Key the error refers to, if any.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::UnknownKey(k) => Some(k),
            Self::InvalidValue { key, .. } => Some(key),
            _ => None,
        }
    }
}

/// Reads and validates a config file (flat TOML `key = value` pairs).
pub fn load_config(path: impl AsRef<Path>) -> Result<SchemeConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    parse_config(&text)
}

/// Parses config text; keys absent from the text keep their defaults.
pub fn parse_config(text: &str) -> Result<SchemeConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut cfg = SchemeConfig::default();

    for (key, value) in &table {
        match key.as_str() {
            "sigma_diff_ev" => cfg.material.sigma_diff_ev = number(key, value)?,
            "rho_kg_m3" => cfg.material.rho_kg_m3 = number(key, value)?,
            "c_m_s" => cfg.material.c_m_s = number(key, value)?,
            "l_perp_nm" => cfg.material.l_perp_nm = number(key, value)?,
            "l_z_nm" => cfg.material.l_z_nm = number(key, value)?,
            "delta_eps_ev" => cfg.material.delta_eps_ev = number(key, value)?,
            "temperature_k" => cfg.temperature_k = number(key, value)?,
            "backend" => cfg.backend = parsed(key, value)?,
            "bath" => cfg.bath = parsed(key, value)?,
            "tau_grid" => cfg.tau_grid = parsed(key, value)?,
            "t_grid" => cfg.t_grid = parsed(key, value)?,
            "envelope_points" => {
                let n = value.as_integer().ok_or_else(|| ConfigError::invalid(key, "expected an integer"))?;
                if n < MIN_ENVELOPE_POINTS as i64 {
                    return Err(ConfigError::invalid(key, format!("must be at least {MIN_ENVELOPE_POINTS}, got {n}")));
                }
                cfg.envelope_points = n as usize;
            }
            other => return Err(ConfigError::UnknownKey(other.to_owned())),
        }
    }

    cfg.material.validate()?;
    if !(cfg.temperature_k >= 0.0 && cfg.temperature_k.is_finite()) {
        return Err(ConfigError::invalid("temperature_k", format!("must be non-negative, got {}", cfg.temperature_k)));
    }
    Ok(cfg)
}

fn number(key: &str, value: &toml::Value) -> Result<f64, ConfigError> {
    match value {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::invalid(key, "expected a number")),
    }
}

fn parsed<V: FromStr<Err = String>>(key: &str, value: &toml::Value) -> Result<V, ConfigError> {
    let s = value.as_str().ok_or_else(|| ConfigError::invalid(key, "expected a string"))?;
    s.parse().map_err(|reason: String| ConfigError::invalid(key, reason))
}
