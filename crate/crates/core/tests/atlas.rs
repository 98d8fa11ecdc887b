mod common;

use std::f64::consts::PI;

use common::*;
use proptest::prelude::*;
use warped_core::atlas::{self, classify_physical, kruskal, perfect_fluid, polar_model, Params, Physicality};
use warped_core::atlas::{solutions, Quadric};
use warped_core::tensor::curvature;
use warped_core::warped::detect_warped_structure;
use warped_core::GeometryError;

/// `Σ_ab J_ab ∂_i X^a ∂_j X^b` for `J = diag(−1, 1, …)` by central
/// differences of an embedding `X`.
fn fd_pullback(map: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<f64> {
    let n = x.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let (mut xp, mut xm) = (x.to_vec(), x.to_vec());
            xp[i] += h;
            xm[i] -= h;
            map(&xp).iter().zip(map(&xm)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = cols[i]
                .iter()
                .zip(&cols[j])
                .enumerate()
                .map(|(a, (u, v))| if a == 0 { -u * v } else { u * v })
                .sum();
        }
    }
    out
}

#[test]
fn robertson_walker_fluid_matches_friedmann() {
    for k in [-1i32, 0, 1] {
        let params = Params::new().with("k", k as f64);
        let spec = warped("robertson_walker", &params);
        let points = atlas::sample_points(&atlas::sample_region("robertson_walker", &params).unwrap(), 25, 7);
        let report = perfect_fluid(&spec, &points).unwrap();
        for s in &report.samples {
            let t = s.point[0];
            // a(t) = t: 8πμ = 3(ȧ² + k)/a², 8πp = −2ä/a − (ȧ² + k)/a²
            let mu = 3.0 * (1.0 + k as f64) / (8.0 * PI * t * t);
            let p = -(1.0 + k as f64) / (8.0 * PI * t * t);
            assert!((s.mu - mu).abs() < 1e-9 * (1.0 + mu.abs()), "k={k}: mu {} vs {mu}", s.mu);
            assert!((s.p - p).abs() < 1e-9 * (1.0 + p.abs()), "k={k}: p {} vs {p}", s.p);
        }
        assert!(report.offdiag_residual < 1e-10 && report.isotropy_residual < 1e-10);
    }
}

#[test]
fn exponential_scale_is_de_sitter_vacuum_energy() {
    // a = e^t, k = 0: μ = −p = 3/(8π)
    let params = Params::new().with_text("scale", "exp(2*t)");
    let spec = warped("robertson_walker", &params);
    let points = atlas::sample_points(&atlas::sample_region("robertson_walker", &params).unwrap(), 10, 8);
    for s in perfect_fluid(&spec, &points).unwrap().samples {
        assert!((s.mu - 3.0 / (8.0 * PI)).abs() < 1e-10);
        assert!((s.p + 3.0 / (8.0 * PI)).abs() < 1e-10);
    }
}

#[test]
fn deformed_fiber_is_not_a_fluid() {
    let params = Params::new().with_text("fiber", "deformed");
    let spec = warped("robertson_walker", &params);
    let points = atlas::sample_points(&atlas::sample_region("robertson_walker", &params).unwrap(), 10, 9);
    assert!(matches!(perfect_fluid(&spec, &points), Err(GeometryError::NotFluidForm { .. })));
    let wrong_base = warped("schwarzschild_static", &Params::new());
    assert!(matches!(perfect_fluid(&wrong_base, &points), Err(GeometryError::BadParams(_))));
}

#[test]
fn physicality_of_bundled_spacetimes() {
    let expect = [
        ("robertson_walker", Physicality::Physical),
        ("schwarzschild_static", Physicality::Physical),
        ("naive_gravity", Physicality::Physical),
        ("polar_interior", Physicality::Physical),
        ("schwarzschild_exterior", Physicality::AntiPhysical),
        ("schwarzschild_blackhole", Physicality::AntiPhysical),
        ("polar_exterior", Physicality::AntiPhysical),
    ];
    for (id, want) in expect {
        assert_eq!(classify_physical(&warped(id, &Params::new())).unwrap(), want, "{id}");
    }
    assert!(matches!(
        classify_physical(&warped("polar_euclidean3", &Params::new())),
        Err(GeometryError::NotLorentzian { .. })
    ));
}

#[test]
fn every_bundled_warped_product_is_detected() {
    for (id, spec, region) in bundled_warped() {
        let chart = spec.assemble().unwrap();
        let points = atlas::sample_points(&region, 15, 41);
        let det = detect_warped_structure(&chart, &spec.base_axes(), &spec.fiber_axes(), &points, 1e-8).unwrap();
        assert!(det.detected, "{id}: {:?} / {:?}", det.base.verdict, det.fiber.verdict);
        let nb = spec.base().dim();
        let w0 = spec.warping(&points[0][..nb]);
        for (x, r) in &det.reconstructed {
            let want = spec.warping(&x[..nb]) / w0;
            assert!((r - want).abs() < 1e-10 * (1.0 + want), "{id}");
        }
    }
}

#[test]
fn polar_charts_pull_back_minkowski() {
    let center = [0.3, -0.2, 0.1, 0.5];
    let model = polar_model(&solutions::minkowski(1, 3).unwrap(), Some(&center)).unwrap();
    let mut rng = rng(5);
    for (spec, id) in [(&model.interior, "polar_interior"), (&model.exterior, "polar_exterior")] {
        let chart = spec.assemble().unwrap();
        let region = atlas::sample_region(id, &Params::new()).unwrap();
        for x in atlas::sample_points(&region, 10, rand::Rng::random(&mut rng)) {
            let map = |p: &[f64]| {
                if id == "polar_interior" {
                    model.interior_to_ambient(p)
                } else {
                    model.exterior_to_ambient(p)
                }
            };
            let pulled = fd_pullback(map, &x, 1e-6);
            let g = chart.metric_values(&x);
            let scale = 1.0 + g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for (a, b) in pulled.iter().zip(&g) {
                assert!((a - b).abs() < 1e-7 * scale, "{id} at {x:?}: {pulled:?} vs {g:?}");
            }
        }
    }
}

#[test]
fn quadric_points_lie_on_the_level_set() {
    for (p, q, c) in [(2, 2, -1.0), (1, 3, 1.0), (0, 3, 2.0), (2, 3, -0.5)] {
        let quad = Quadric::new(p, q, c).unwrap();
        let half = (c.abs() / (2.0 * quad.dim() as f64)).sqrt();
        for u in atlas::sample_points(&vec![(-half, half); quad.dim()], 10, 3) {
            let x = quad.embed(&u);
            let level: f64 = x.iter().enumerate().map(|(i, xi)| if i < p { -xi * xi } else { xi * xi }).sum();
            assert!((level - c).abs() < 1e-13, "S^{{{p},{q}}}({c})");
        }
    }
    assert!(Quadric::new(0, 3, -1.0).is_err());
    assert!(Quadric::new(2, 0, 1.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kruskal_round_trip(r in 2.05f64..60.0, t in -15.0f64..15.0, m in 0.5f64..3.0) {
        let k = kruskal(m).unwrap();
        let r = r * m;
        let (x, y) = k.transition_map(r, t).unwrap();
        prop_assert!(x > 0.0 && y > 0.0);
        let (r2, t2) = k.inverse_transition(x, y).unwrap();
        prop_assert!((r2 - r).abs() < 1e-10 * r, "{} vs {}", r2, r);
        prop_assert!((t2 - t).abs() < 1e-9 * (1.0 + t.abs()), "{} vs {}", t2, t);
        let lapse = 1.0 - 2.0 * m / r;
        prop_assert!(k.pullback_residual(r, t).unwrap() < 1e-9 * (1.0 + 1.0 / lapse));
    }

    #[test]
    fn kruskal_boost_is_an_isometry(x in -2.0f64..2.0, y in -0.45f64..0.45, s in -2.0f64..2.0) {
        let k = kruskal(1.0).unwrap();
        prop_assume!(x * y > -0.9);
        prop_assert!(k.flow_residual(s, x, y) < 1e-10 * (1.0 + k.conformal_factor(x * y)));
    }

    /// Vacuum on both sides of the horizon, including the black-hole
    /// quadrants where `xy < 0`.
    #[test]
    fn kruskal_is_ricci_flat(x in -1.5f64..1.5, y in -0.6f64..0.6, theta in 0.4f64..2.7) {
        prop_assume!(x * y > -0.9);
        let k = kruskal(1.0).unwrap();
        let c = curvature(k.chart(), &[x, y, theta, 0.3]).unwrap();
        prop_assert!(c.max_abs_ricci() < 1e-9 * (1.0 + c.riemann.max_abs()), "{:e}", c.max_abs_ricci());
    }
}
