//! Fractional Hawkes process (FHP) and ETAS models for earthquake catalogs.
//!
//! The crate is organized by task:
//!
//! * [`mlf`]: Mittag-Leffler function, the fractional kernel, and variates;
//! * [`model`]: catalogs, parameter vectors, intensities, compensators and
//!   log-likelihoods;
//! * [`estimate`]: multi-start maximum likelihood, Hessians, confidence
//!   intervals and AIC comparison;
//! * [`simulate`]: synthetic catalogs and parameter-recovery studies;
//! * [`diagnose`]: residual (transformed-time) analysis;
//! * [`catalog`]: CSV ingestion and the canonical catalog file format.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod diagnose;
pub mod error;
pub mod estimate;
pub mod mlf;
pub mod model;
pub mod rng;
pub mod simulate;

pub use catalog::{ingest, summarize, CatalogSummary, IngestSpec, Region};
pub use diagnose::{residuals, ResidualSeries};
pub use error::{Error, Result, StartDiagnostic};
pub use mlf::{ml, ml_kernel, ml_random, ml_survival, MittagLeffler, MlArgs, MlKernel};
pub use estimate::{compare_aic, fit, AicEntry, FitOptions, FitRecord, FitResult};
pub use model::{Catalog, CatalogMeta, EtasParams, Event, FhpParams, ModelKind, ModelParams};
