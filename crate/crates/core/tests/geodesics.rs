mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use warped_core::atlas::{self, Params};
use warped_core::expr::Expression;
use warped_core::geodesic::{
    clairaut_charge, integrate_direct, integrate_mechanical, integrate_reduced, reduce, ReducedPotential,
};
use warped_core::ode::{OdeOptions, Termination};
use warped_core::tensor::christoffel;
use warped_core::{GeodesicState, GeometryError, KillingCandidate, MetricChart, SmoothFn, Trajectory};

#[test]
fn circular_orbit_at_six_masses() {
    let spec = warped("schwarzschild_equatorial", &Params::new());
    let chart = spec.assemble().unwrap();
    let x = vec![6.0, 0.0, 0.0];
    // Γ^r_tt t'² + Γ^r_φφ φ'² = 0, then normalise to ⟨v,v⟩ = −1
    let gamma = christoffel(&chart, &x).unwrap();
    let ratio = (-gamma.get(0, 1, 1) / gamma.get(0, 2, 2)).sqrt();
    let g = chart.metric_values(&x);
    let vt = (-1.0 / (g[4] + g[8] * ratio * ratio)).sqrt();
    let init = GeodesicState::new(x, vec![0.0, vt, ratio * vt]);
    let traj = integrate_direct(&chart, &init, 100.0, &OdeOptions::default()).unwrap();
    assert!(traj.termination.is_completed());
    let worst = traj.samples.iter().map(|s| (s.x[0] - 6.0).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-6, "radius drift {worst:e}");
}

#[test]
fn polar_geodesics_are_straight_lines() {
    let chart = warped("polar_plane", &Params::new()).assemble().unwrap();
    let init = GeodesicState::new(vec![1.0, 0.3], vec![0.2, 0.7]);
    let traj = integrate_direct(&chart, &init, 3.0, &OdeOptions::default()).unwrap();
    let cart = |s: &GeodesicState| (s.x[0] * s.x[1].cos(), s.x[0] * s.x[1].sin());
    let (p0, p1) = (cart(&traj.samples[0]), cart(traj.last()));
    let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
    let len = (dx * dx + dy * dy).sqrt();
    for s in &traj.samples {
        let p = cart(s);
        let dev = ((p.0 - p0.0) * dy - (p.1 - p0.1) * dx).abs() / len;
        assert!(dev < 1e-7, "{dev:e}");
    }
}

#[test]
fn kepler_circular_orbit_has_period_two_pi() {
    let chart = atlas::build("euclidean", &Params::new()).unwrap().chart().unwrap();
    let v = Expression::parse("-1/sqrt(x0^2 + x1^2 + x2^2)", chart.coords()).unwrap();
    let init = GeodesicState::new(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]);
    let traj = integrate_mechanical(&chart, &v, &init, 2.0 * PI, &OdeOptions::default()).unwrap();
    let end = traj.last();
    assert!((end.x[0] - 1.0).abs() < 1e-6 && end.x[1].abs() < 1e-6, "{:?}", end.x);
    let half = traj.at(PI).unwrap();
    assert!((half.x[0] + 1.0).abs() < 1e-6);
    assert!(traj.monitor("energy").unwrap().relative_drift() < 1e-9);
}

#[test]
fn zero_potential_is_geodesic_flow() {
    let chart = warped("schwarzschild_exterior", &Params::new()).assemble().unwrap();
    let zero = Expression::parse("0", chart.coords()).unwrap();
    let init = GeodesicState::new(vec![8.0, 0.0, 1.2, 0.0], vec![0.1, 1.2, 0.01, 0.03]);
    let opts = grid_default(0.5);
    let a = integrate_mechanical(&chart, &zero, &init, 20.0, &opts).unwrap();
    let b = integrate_direct(&chart, &init, 20.0, &opts).unwrap();
    assert!(grid_sup_difference(&a, &b).unwrap() < 1e-12);
}

/// Motion under `V` on `L ×_w N` projects to motion on `L` under `V + c/w`.
#[test]
fn mechanics_splits_on_warped_products() {
    let spec = warped("polar_plane", &Params::new());
    let chart = spec.assemble().unwrap();
    let full_v = Expression::parse("-1/r + 0.1*r^2", chart.coords()).unwrap();
    let base_v = Expression::parse("-1/r + 0.1*r^2", spec.base().coords()).unwrap();
    let init = GeodesicState::new(vec![1.5, 0.2], vec![0.3, 0.4]);
    let opts = grid_options(0.25);
    let full = integrate_mechanical(&chart, &full_v, &init, 20.0, &opts).unwrap();
    let c1 = 1.5 * 1.5 * 0.4;
    let reduced_potential = ReducedPotential {
        base_potential: Some(Arc::new(base_v)),
        warping: spec.warping_fn().clone(),
        coefficient: 0.5 * c1 * c1,
    };
    let base_init = GeodesicState::new(vec![1.5], vec![0.3]);
    let base = integrate_mechanical(spec.base(), &reduced_potential, &base_init, 20.0, &opts).unwrap();
    assert!(full.termination.is_completed() && base.termination.is_completed());
    assert_eq!(full.samples.len(), base.samples.len());
    for (f, b) in full.samples.iter().zip(&base.samples) {
        assert!((f.x[0] - b.x[0]).abs() < 1e-8 && (f.v[0] - b.v[0]).abs() < 1e-8);
    }
    assert!(full.monitor("energy").unwrap().relative_drift() < 1e-9);
}

#[test]
fn naive_gravity_gives_attractive_newtonian_potential() {
    let spec = warped("naive_gravity", &Params::new());
    let region = atlas::sample_region("naive_gravity", &Params::new()).unwrap();
    let mut rng = rng(11);
    for _ in 0..20 {
        let mut x = atlas::sample_points(&region, 1, rng.random()).pop().unwrap();
        x[3] = 0.0;
        let v: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let problem = reduce(&spec, &GeodesicState::new(x.clone(), v)).unwrap();
        assert_eq!(problem.c0, -1.0);
        let c = problem.potential_coefficient();
        assert!(c <= 0.0);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let value = problem.potential().eval_f64(&x[..3])[0];
        assert!((value - c / r).abs() < 1e-12 * (1.0 + value.abs()));
    }
}

#[test]
fn hyperbolic_plane_reduces_to_exponential_force() {
    let spec = warped("hyperbolic_warped", &Params::new());
    let problem = reduce(&spec, &GeodesicState::new(vec![0.3, 0.0], vec![0.5, 0.8])).unwrap();
    let c = problem.potential_coefficient();
    for t in [-1.0, 0.0, 2.0] {
        let value = problem.potential().eval_f64(&[t])[0];
        assert!((value - c * (-t).exp()).abs() < 1e-12);
    }
}

#[test]
fn zero_charge_reduction_matches_direct() {
    let spec = warped("schwarzschild_equatorial", &Params::new());
    let init = GeodesicState::new(vec![8.0, 0.0, 0.5], vec![0.1, 1.3, 0.0]);
    let opts = grid_default(0.5);
    let reduced = integrate_reduced(&reduce(&spec, &init).unwrap(), 20.0, &opts).unwrap();
    let direct = integrate_direct(&spec.assemble().unwrap(), &init, 20.0, &opts).unwrap();
    assert!(grid_sup_difference(&reduced, &direct).unwrap() < 1e-8);
}

#[test]
fn radial_infall_stops_at_the_horizon() {
    let chart = warped("schwarzschild_exterior", &Params::new()).assemble().unwrap();
    let lapse: f64 = 1.0 - 2.0 / 3.0;
    let init = GeodesicState::new(vec![3.0, 0.0, 1.0, 0.0], vec![0.0, 1.0 / lapse.sqrt(), 0.0, 0.0]);
    let traj = integrate_direct(&chart, &init, 100.0, &OdeOptions::default()).unwrap();
    assert!(matches!(traj.termination, Termination::DomainExit { .. } | Termination::StepSizeUnderflow { .. }));
    assert!(traj.last().x[0] < 2.1 && traj.samples.len() > 2);
}

#[test]
fn non_killing_fields_are_rejected() {
    let chart = warped("schwarzschild_exterior", &Params::new()).assemble().unwrap();
    let state = GeodesicState::new(vec![5.0, 0.0, 1.0, 0.0], vec![0.1, 1.0, 0.0, 0.1]);
    let radial = KillingCandidate::coordinate(&chart, 0).unwrap();
    assert!(matches!(clairaut_charge(&chart, &state, &radial), Err(GeometryError::NotKilling { .. })));
    let time = KillingCandidate::coordinate(&chart, 1).unwrap();
    let e = clairaut_charge(&chart, &state, &time).unwrap();
    assert!((e - (-(1.0 - 2.0 / 5.0))).abs() < 1e-14);
}

const WARPED: &[&str] = &["schwarzschild_exterior", "hyperbolic_warped", "robertson_walker", "polar_euclidean3", "naive_gravity"];

/// Condition number of `g` above which a sample is treated as sitting on
/// a coordinate singularity, like the horizon of the exterior chart.
const CHART_CONDITION_LIMIT: f64 = 1e6;

fn condition(chart: &MetricChart, x: &[f64]) -> f64 {
    let n = chart.dim();
    let g = nalgebra::DMatrix::from_row_slice(n, n, &chart.metric_values(x));
    let eig = nalgebra::SymmetricEigen::new(g).eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v.abs()), b.max(v.abs())));
    hi / lo
}

/// `max_τ |⟨v,v⟩(τ) − ⟨v,v⟩(0)|` divided by `1 + max_τ Σ |g_ij v^i v^j|`,
/// over the leading samples where the chart is well conditioned.
/// Near a curvature singularity the individual terms of `⟨v,v⟩` grow
/// without bound while their sum stays fixed, so the drift is measured
/// against the terms rather than the sum.
fn scaled_norm_drift(chart: &MetricChart, traj: &Trajectory) -> f64 {
    let n = chart.dim();
    let n0 = traj.samples[0].norm(chart);
    let (mut drift, mut scale) = (0.0f64, 0.0f64);
    for s in traj.samples.iter().take_while(|s| condition(chart, &s.x) < CHART_CONDITION_LIMIT) {
        let g = chart.metric_values(&s.x);
        let terms: f64 = (0..n * n).map(|c| (g[c] * s.v[c / n] * s.v[c % n]).abs()).sum();
        drift = drift.max((s.norm(chart) - n0).abs());
        scale = scale.max(terms);
    }
    drift / (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// `⟨v,v⟩` and its causal character are preserved by the direct
    /// integrator over `τ ≤ 100`, up to where the metric degenerates.
    #[test]
    fn norm_is_conserved(idx in 0..WARPED.len(), seed in any::<u64>()) {
        let id = WARPED[idx];
        let chart = warped(id, &Params::new()).assemble().unwrap();
        let region = atlas::sample_region(id, &Params::new()).unwrap();
        let mut rng = rng(seed);
        let x = atlas::sample_points(&region, 1, rng.random()).pop().unwrap();
        let v: Vec<f64> = (0..x.len()).map(|_| rng.random_range(-0.5..0.5)).collect();
        let init = GeodesicState::new(x, v);
        let traj = integrate_direct(&chart, &init, 100.0, &OdeOptions::default()).unwrap();
        let drift = scaled_norm_drift(&chart, &traj);
        prop_assert!(drift < 1e-9, "{}: {:e}", id, drift);
        let n0 = traj.monitor("norm").unwrap().values[0];
        if n0.abs() > 1e-6 {
            let regular = traj.samples.iter().take_while(|s| condition(&chart, &s.x) < CHART_CONDITION_LIMIT).count();
            prop_assert!(traj.monitor("norm").unwrap().values[..regular].iter().all(|n| n.signum() == n0.signum()));
        }
        let taus: Vec<f64> = traj.samples.iter().map(|s| s.tau).collect();
        prop_assert!(taus.windows(2).all(|w| w[1] > w[0]));
    }
}
