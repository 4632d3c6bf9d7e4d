//! Measurement-based control of qubit pure dephasing.
//!
//! A qubit prepared in `|+⟩` dephases through its coupling to an
//! environment; it is measured in the `|±⟩` basis after a delay `τ`,
//! re-prepared in the observed state, and its coherence is followed for a
//! further time `t`. The crate computes every protocol quantity
//! ([`scheme`]) over two interchangeable backends:
//!
//! - [`weyl`]: exact, closed-form traces for linearly coupled bosonic baths,
//!   generic over `f32`/`f64`;
//! - [`oracle`]: dense linear algebra on any finite-dimensional environment.
//!
//! [`bath`] turns the deformation-potential phonon coupling of a quantum
//! dot into discrete modes, and [`params`] holds material constants, units
//! and run configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod oracle;
pub mod params;
pub mod real;
pub mod scheme;
pub mod weyl;

pub use num_complex;
pub use real::Real;

pub type WeylElement64 = weyl::WeylElement<f64>;
pub type WeylElement32 = weyl::WeylElement<f32>;
pub type BathRef64 = weyl::BathRef<f64>;
pub type WeylBackend64 = weyl::WeylBackend<f64>;
pub type BathSpec64 = bath::BathSpec<f64>;
pub type Mode64 = bath::Mode<f64>;
pub type SchemePoint64 = scheme::SchemePoint<f64>;
pub type EnvelopePoint64 = scheme::EnvelopePoint<f64>;
pub type SlowTraces64 = scheme::SlowTraces<f64>;
