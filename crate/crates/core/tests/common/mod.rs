//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warped_core::atlas::{self, Built, Params};
use warped_core::geodesic::{integrate_direct, integrate_reduced, reduce, GeodesicState, Trajectory};
use warped_core::ode::OdeOptions;
use warped_core::{MetricChart, WarpedSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn warped(id: &str, params: &Params) -> WarpedSpec {
    match atlas::build(id, params).unwrap() {
        Built::Warped(s) => s,
        Built::Chart(_) => panic!("{id} is not a warped product"),
    }
}

pub fn chart(id: &str, params: &Params) -> MetricChart {
    atlas::build(id, params).unwrap().chart().unwrap()
}

/// Chart id, warped spec and sampling region.
pub type Bundled = (String, WarpedSpec, Vec<(f64, f64)>);

/// Every bundled solution that is built as a warped product.
pub fn bundled_warped() -> Vec<Bundled> {
    atlas::list()
        .into_iter()
        .filter_map(|info| {
            let built = atlas::build(info.id, &Params::new()).unwrap();
            let region = atlas::sample_region(info.id, &Params::new()).unwrap();
            built.warped().cloned().map(|s| (info.id.to_string(), s, region))
        })
        .collect()
}

/// Central-difference oracle for `∂_k g_ij`, step `h`.
pub fn fd_metric_derivative(chart: &MetricChart, x: &[f64], h: f64) -> Vec<f64> {
    let n = chart.dim();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
        xp[k] += h;
        xm[k] -= h;
        let (gp, gm) = (chart.metric_values(&xp), chart.metric_values(&xm));
        for c in 0..n * n {
            out[k * n * n + c] = (gp[c] - gm[c]) / (2.0 * h);
        }
    }
    out
}

/// Christoffel symbols from finite differences of `g` and a plain
/// matrix inverse; independent of the forward-mode path.
pub fn fd_christoffel(chart: &MetricChart, x: &[f64], h: f64) -> Vec<f64> {
    let n = chart.dim();
    let dg = fd_metric_derivative(chart, x, h);
    let g = nalgebra::DMatrix::from_row_slice(n, n, &chart.metric_values(x));
    let ginv = g.try_inverse().unwrap();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += 0.5
                        * ginv[(k, l)]
                        * (dg[i * n * n + j * n + l] + dg[j * n * n + i * n + l] - dg[l * n * n + i * n + j]);
                }
                out[(k * n + i) * n + j] = s;
            }
        }
    }
    out
}

/// Options for cross-trajectory comparison: both runs land on the same
/// grid, with relative error control so Killing charges stay accurate
/// where the warping grows exponentially.
///
/// Pure relative control is slow when a component is zero up to roundoff,
/// so runs with exactly vanishing velocity components use [`grid_default`].
pub fn grid_options(step: f64) -> OdeOptions {
    OdeOptions { sample_every: Some(step), ..OdeOptions::relative(1e-12) }
}

pub fn grid_default(step: f64) -> OdeOptions {
    OdeOptions { sample_every: Some(step), ..OdeOptions::default() }
}

/// Largest coordinate difference between two trajectories sampled on the
/// same grid, or `None` if the grids differ.
pub fn grid_sup_difference(a: &Trajectory, b: &Trajectory) -> Option<f64> {
    if a.samples.len() != b.samples.len() {
        return None;
    }
    let mut worst = 0.0f64;
    for (p, q) in a.samples.iter().zip(&b.samples) {
        if (p.tau - q.tau).abs() > 1e-12 {
            return None;
        }
        for (u, v) in p.x.iter().chain(&p.v).zip(q.x.iter().chain(&q.v)) {
            worst = worst.max((u - v).abs());
        }
    }
    Some(worst)
}

/// Random initial state on the equatorial Schwarzschild chart `(r, t, φ)`,
/// unit timelike or unit spacelike.
pub fn schwarzschild_state(rng: &mut ChaCha8Rng, m: f64, timelike: bool) -> GeodesicState {
    loop {
        let r = rng.random_range(6.0 * m..12.0 * m);
        let x = vec![r, rng.random_range(-1.0..1.0), rng.random_range(-PI..PI)];
        let lapse = 1.0 - 2.0 * m / r;
        if timelike {
            let vr = rng.random_range(-0.2..0.2);
            let vphi = rng.random_range(-0.07..0.07) * (6.0 * m / r);
            let vt = ((1.0 + vr * vr / lapse + r * r * vphi * vphi) / lapse).sqrt();
            return GeodesicState::new(x, vec![vr, vt, vphi]);
        }
        let v = [rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5), rng.random_range(-0.1..0.1)];
        let norm = -lapse * v[1] * v[1] + v[0] * v[0] / lapse + r * r * v[2] * v[2];
        if norm > 0.05 {
            let s = norm.sqrt();
            return GeodesicState::new(x, v.iter().map(|c| c / s).collect());
        }
    }
}

/// Random unit-speed initial state on `dt² + e^t dx²`.
pub fn hyperbolic_state(rng: &mut ChaCha8Rng) -> GeodesicState {
    let t: f64 = rng.random_range(-1.0..1.0);
    let a: f64 = rng.random_range(-PI..PI);
    GeodesicState::new(vec![t, rng.random_range(-1.0..1.0)], vec![a.cos(), a.sin() * (-0.5 * t).exp()])
}

/// A reduced/direct pair over `[0, tau]` that stays inside the chart.
pub struct ReductionCase {
    pub init: GeodesicState,
    pub direct: Trajectory,
    pub reduced: Trajectory,
}

/// Draws initial states until both integrations complete `tau` in the
/// domain; returns `count` such cases.
pub fn reduction_cases(
    spec: &WarpedSpec,
    count: usize,
    seed: u64,
    tau: f64,
    mut draw: impl FnMut(&mut ChaCha8Rng, usize) -> GeodesicState,
) -> Vec<ReductionCase> {
    let chart = spec.assemble().unwrap();
    let opts = grid_options(0.5);
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < 50 * count, "could not find {count} admissible initial states");
        let init = draw(&mut rng, out.len());
        let direct = integrate_direct(&chart, &init, tau, &opts).unwrap();
        if !direct.termination.is_completed() {
            continue;
        }
        let reduced = integrate_reduced(&reduce(spec, &init).unwrap(), tau, &opts).unwrap();
        if !reduced.termination.is_completed() {
            continue;
        }
        out.push(ReductionCase { init, direct, reduced });
    }
    out
}
