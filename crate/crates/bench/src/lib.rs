//! Benchmarks live in `benches/`. This crate holds the shared fixtures.

use fhp_core::simulate::{simulate_fhp, SimConfig, Stop};
use fhp_core::{Catalog, FhpParams};

/// Parameters of the reference synthetic catalogs.
pub fn reference_params() -> FhpParams {
    FhpParams::new(1.0, (-1.0f64).exp(), 1.5, 0.7, 1.0)
}

/// A reproducible synthetic catalog of `n` events.
pub fn synthetic_catalog(n: usize, seed: u64) -> Catalog {
    simulate_fhp(&SimConfig::new(reference_params(), Stop::Count(n), seed))
        .expect("reference simulation")
}
