use dephasing_core::bath::{build_bath, BathSpec};
use dephasing_core::num_complex::Complex64;
use dephasing_core::oracle::{auto_truncation, build_fock, OracleBackend, OracleError, DEFAULT_DIMENSION_CAP};
use dephasing_core::params::{BackendKind, SchemeConfig};
use dephasing_core::scheme::{Backend, Pointer, SlowTraces};
use dephasing_core::weyl::{WeylBackend, WeylError};
use thiserror::Error;

use crate::CliError;

#[derive(Debug, Error)]
pub enum AnyError {
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

pub enum AnyBackend {
    Weyl(WeylBackend<f64>),
    Oracle(Box<OracleBackend>),
}

impl Backend<f64> for AnyBackend {
    type Error = AnyError;

    fn cross_trace(&self, i: Pointer, j: Pointer, tau: f64, t: f64) -> Result<Complex64, AnyError> {
        match self {
            AnyBackend::Weyl(b) => Ok(b.cross_trace(i, j, tau, t)?),
            AnyBackend::Oracle(b) => Ok(b.cross_trace(i, j, tau, t)?),
        }
    }

    fn slow_traces(&self, tau: f64, t: f64) -> Result<SlowTraces<f64>, AnyError> {
        match self {
            AnyBackend::Weyl(b) => Ok(b.slow_traces(tau, t)?),
            AnyBackend::Oracle(b) => Ok(b.slow_traces(tau, t)?),
        }
    }
}

pub fn bath_spec(cfg: &SchemeConfig) -> Result<BathSpec<f64>, CliError> {
    build_bath(&cfg.bath, &cfg.material, cfg.temperature_k).map_err(|e| CliError::Usage(format!("bath: {e}")))
}

/// Backend selected by the config, over the configured bath.
pub fn from_config(cfg: &SchemeConfig) -> Result<AnyBackend, CliError> {
    let bath = bath_spec(cfg)?.to_bath_ref().map_err(|e| CliError::Usage(format!("bath: {e}")))?;
    match cfg.backend {
        BackendKind::Weyl => Ok(AnyBackend::Weyl(WeylBackend::new(bath))),
        BackendKind::Oracle => {
            let env = build_fock(&bath, &auto_truncation(&bath), DEFAULT_DIMENSION_CAP)
                .map_err(|e| CliError::Usage(format!("oracle backend: {e}")))?;
            Ok(AnyBackend::Oracle(Box::new(OracleBackend::new(env))))
        }
    }
}
