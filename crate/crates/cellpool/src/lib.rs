//! Capacity analysis for pooled cellular networks.
//!
//! Two operators can share infrastructure, spectrum, or both. This crate
//! quantifies what their subscribers gain, along two independent paths that
//! cross-check each other:
//!
//! * **Closed-form path** ([`analytic`]): average user rate and throughput
//!   under nearest-station association in a Poisson network, reduced to
//!   one-dimensional integrals and evaluated by adaptive quadrature.
//!   [`mc`] re-derives the same quantities by direct Monte Carlo sampling
//!   of station geometry and fading, with confidence intervals, so the two
//!   engines validate each other without sharing code paths.
//! * **Frame-level path** ([`simulator`]): an OFDMA system simulation on a
//!   concrete deployment ([`deployment`], [`channel`]) where a centralized
//!   greedy proportional-fair allocator ([`scheduler`]) hands out
//!   subchannel-slot tiles with interference awareness.
//!
//! Three sharing strategies are compared throughout ([`Strategy`]): no
//! cooperation, roaming onto either operator's stations while spectrum stays
//! separate, and a full merger pooling stations and spectrum.
//!
//! [`ingest`] loads station layouts (CSV, planar or geographic) and scenario
//! configs (TOML with unit suffixes); everything downstream works in linear
//! SI units. All randomness flows from one seed through named substreams
//! ([`rng`]), making every result reproducible bit for bit.

pub mod analytic;
pub mod channel;
pub mod deployment;
pub mod error;
pub mod ingest;
pub mod mc;
pub mod quad;
pub mod rng;
pub mod scheduler;
pub mod simulator;
pub mod stats;
pub mod units;

pub use analytic::{OperatorParams, QuadratureConfig, RadioParams, RateResult, Strategy};
pub use error::{Error, Result};
pub use simulator::{ScenarioConfig, ThroughputReport};
