mod common;

use std::sync::Arc;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use warped_core::atlas::{self, Params};
use warped_core::geodesic::integrate_direct;
use warped_core::killing::killing_residual;
use warped_core::warped::{
    classify_foliation, detect_warped_structure, lie_derivative_identity_check, NormalCoordinateField, Verdict,
};
use warped_core::{GeodesicState, KillingCandidate, Scalar, Smooth};

/// Rotation of the round fiber `S²` about its first axis, written in
/// `(θ, φ)` and padded with zeros on the base coordinates.
struct LiftedRotation {
    base_dim: usize,
}

impl Smooth for LiftedRotation {
    fn input_dim(&self) -> usize {
        self.base_dim + 2
    }
    fn output_dim(&self) -> usize {
        self.base_dim + 2
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (theta, phi) = (x[self.base_dim], x[self.base_dim + 1]);
        let mut out = vec![S::cst(0.0); self.base_dim + 2];
        out[self.base_dim] = -phi.sin();
        out[self.base_dim + 1] = -(theta.cos() / theta.sin()) * phi.cos();
        out
    }
}

#[test]
fn fiber_isometries_lift() {
    for id in ["schwarzschild_exterior", "polar_euclidean3", "schwarzschild_blackhole"] {
        let spec = warped(id, &Params::new());
        let chart = spec.assemble().unwrap();
        let points = atlas::sample_points(&atlas::sample_region(id, &Params::new()).unwrap(), 20, 11);
        let nb = spec.base().dim();
        let lifted = KillingCandidate::new("rotation", chart.clone(), Arc::new(LiftedRotation { base_dim: nb })).unwrap();
        assert!(killing_residual(&lifted, &points).unwrap() < 1e-10, "{id}");
    }

    // rotations of the flat fiber of R x_{e^t} R^2 lift, its dilation does not
    let spec = warped("hyperbolic_warped", &Params::new().with("n", 3.0));
    let chart = spec.assemble().unwrap();
    let points = atlas::sample_points(&atlas::sample_region("hyperbolic_warped", &Params::new().with("n", 3.0)).unwrap(), 20, 12);
    let mut rot = DMatrix::zeros(3, 3);
    rot[(1, 2)] = -1.0;
    rot[(2, 1)] = 1.0;
    let lifted = KillingCandidate::affine("rotation", &chart, rot, vec![0.0; 3]).unwrap();
    assert!(killing_residual(&lifted, &points).unwrap() < 1e-12);
    let dilation = KillingCandidate::affine("dilation", &chart, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 1.0, 1.0])), vec![0.0; 3])
        .unwrap();
    assert!(killing_residual(&dilation, &points).unwrap() > 1e-2);
    // the base translation is not an isometry once w varies along it
    let time = KillingCandidate::coordinate(&chart, 0).unwrap();
    assert!(killing_residual(&time, &points).unwrap() > 1e-2);
}

#[test]
fn base_geodesics_lift_with_fixed_fiber_point() {
    for id in ["schwarzschild_exterior", "schwarzschild_static", "naive_gravity"] {
        let spec = warped(id, &Params::new());
        let chart = spec.assemble().unwrap();
        let region = atlas::sample_region(id, &Params::new()).unwrap();
        let x = atlas::sample_points(&region, 1, 21).pop().unwrap();
        let nb = spec.base().dim();
        let mut v = vec![0.0; x.len()];
        for (i, vi) in v.iter_mut().take(nb).enumerate() {
            *vi = 0.05 * (i as f64 + 1.0);
        }
        let lifted = integrate_direct(&chart, &GeodesicState::new(x.clone(), v.clone()), 5.0, &grid_default(0.5)).unwrap();
        let base =
            integrate_direct(spec.base(), &GeodesicState::new(x[..nb].to_vec(), v[..nb].to_vec()), 5.0, &grid_default(0.5))
                .unwrap();
        assert_eq!(lifted.samples.len(), base.samples.len(), "{id}");
        for (l, b) in lifted.samples.iter().zip(&base.samples) {
            for i in 0..nb {
                assert!((l.x[i] - b.x[i]).abs() < 1e-8 && (l.v[i] - b.v[i]).abs() < 1e-8, "{id}");
            }
            for i in nb..x.len() {
                assert_eq!(l.x[i], x[i], "{id}");
                assert_eq!(l.v[i], 0.0, "{id}");
            }
        }
    }
}

#[test]
fn detection_is_stable_across_tolerances() {
    for (id, spec, region) in bundled_warped() {
        let chart = spec.assemble().unwrap();
        let points = atlas::sample_points(&region, 12, 31);
        let verdicts: Vec<_> = [1e-9, 1e-8, 1e-6]
            .iter()
            .map(|&tol| {
                let det = detect_warped_structure(&chart, &spec.base_axes(), &spec.fiber_axes(), &points, tol).unwrap();
                (det.detected, det.base.verdict, det.fiber.verdict)
            })
            .collect();
        assert!(verdicts.windows(2).all(|w| w[0] == w[1]), "{id}: {verdicts:?}");
        assert!(verdicts[0].0, "{id}");
    }
}

#[test]
fn twisted_exp_fiber_is_umbilic_but_not_spherical() {
    let chart = chart("twisted_exp", &Params::new());
    let points = atlas::sample_points(&atlas::sample_region("twisted_exp", &Params::new()).unwrap(), 20, 5);
    let fiber = classify_foliation(&chart, &[1], &points, 1e-8).unwrap();
    // a one-dimensional leaf is always umbilic
    assert_eq!(fiber.verdict, Verdict::UmbilicOnly);
    assert!(fiber.spherical_residual > 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The shape vector of the fibers is `−½ ∇w / w` on every bundled
    /// warped product.
    #[test]
    fn fiber_shape_vector_is_log_gradient(idx in 0..11usize, seed in any::<u64>()) {
        let all = bundled_warped();
        let (id, spec, region) = &all[idx % all.len()];
        let chart = spec.assemble().unwrap();
        let x = atlas::sample_points(region, 1, seed).pop().unwrap();
        let report = classify_foliation(&chart, &spec.fiber_axes(), std::slice::from_ref(&x), 1e-8).unwrap();
        let want = spec.expected_shape_vector(&x).unwrap();
        let scale = 1.0 + want.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        for (got, want) in report.shape_vector[0].iter().zip(&want) {
            prop_assert!((got - want).abs() < 1e-10 * scale, "{}: {:?} vs {:?}", id, report.shape_vector[0], want);
        }
    }

    /// `L_X f = −2⟨II, X⟩` for normal projections of coordinate fields,
    /// on warped charts and on a graph chart with oblique coordinates.
    #[test]
    fn lie_derivative_matches_second_fundamental_form(idx in 0..11usize, seed in any::<u64>()) {
        let all = bundled_warped();
        let (id, spec, region) = &all[idx % all.len()];
        let product = spec.assemble().unwrap();
        let x = atlas::sample_points(region, 1, seed).pop().unwrap();
        for axis in spec.base_axes() {
            let field = NormalCoordinateField::new(product.clone(), spec.fiber_axes(), axis);
            let r = lie_derivative_identity_check(&product, &spec.fiber_axes(), &field, &x).unwrap();
            let g = product.metric_values(&x);
            prop_assert!(r < 1e-9 * (1.0 + g.iter().fold(0.0f64, |a, b| a.max(b.abs()))), "{}: {:e}", id, r);
        }

        let quadric = chart("pseudo_sphere", &Params::new());
        let y = atlas::sample_points(&atlas::sample_region("pseudo_sphere", &Params::new()).unwrap(), 1, seed).pop().unwrap();
        let field = NormalCoordinateField::new(quadric.clone(), vec![0, 1], 2);
        let r = lie_derivative_identity_check(&quadric, &[0, 1], &field, &y).unwrap();
        prop_assert!(r < 1e-9, "pseudo_sphere: {:e}", r);
    }
}
