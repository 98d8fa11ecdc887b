//! Benchmark fixtures for `warped-core`; the benches live in `benches/`.

use warped_core::atlas::{self, Built, Params};
use warped_core::{MetricChart, WarpedSpec};

/// Assembled Schwarzschild exterior chart with `m = 1`.
pub fn schwarzschild() -> MetricChart {
    match atlas::build("schwarzschild_exterior", &Params::new().with("m", 1.0)).expect("builtin") {
        Built::Warped(spec) => spec.assemble().expect("assembles"),
        Built::Chart(chart) => chart,
    }
}

/// Equatorial Schwarzschild as a warped product with a one-dimensional fiber.
pub fn equatorial() -> WarpedSpec {
    match atlas::build("schwarzschild_equatorial", &Params::new()).expect("builtin") {
        Built::Warped(spec) => spec,
        Built::Chart(_) => unreachable!("equatorial chart is warped"),
    }
}
