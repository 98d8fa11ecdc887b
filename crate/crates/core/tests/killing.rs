mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;
use warped_core::atlas::{self, Params, Quadric};
use warped_core::killing::lie_algebra::{
    basis, emptiness_certificate, j_matrix, membership_residual, random_square_zero, square_zero_span,
};
use warped_core::killing::{
    affine_acceleration, classify_killing, curvature_identity, desitter_no_lightlike, KillingCandidate, KillingKind,
};
use warped_core::{GeometryError, Scalar, Smooth};

fn points(id: &str, count: usize, seed: u64) -> Vec<Vec<f64>> {
    atlas::sample_points(&atlas::sample_region(id, &Params::new()).unwrap(), count, seed)
}

/// `∂_φ = −y ∂_x + x ∂_y` on Euclidean 3-space.
fn rotation3() -> DMatrix<f64> {
    let mut a = DMatrix::zeros(3, 3);
    a[(0, 1)] = -1.0;
    a[(1, 0)] = 1.0;
    a
}

#[test]
fn classic_examples() {
    let ext = chart("schwarzschild_exterior", &Params::new());
    let time = KillingCandidate::coordinate(&ext, 1).unwrap();
    let cls = classify_killing(&time, &points("schwarzschild_exterior", 20, 1)).unwrap();
    assert_eq!(cls.kind, KillingKind::Varying);
    assert!(!cls.is_geodesic && cls.max_acceleration > 1e-3);

    let euc = chart("euclidean", &Params::new());
    let rot = KillingCandidate::affine("rotation", &euc, rotation3(), vec![0.0; 3]).unwrap();
    let cls = classify_killing(&rot, &points("euclidean", 20, 2)).unwrap();
    assert_eq!(cls.kind, KillingKind::Varying);

    let shift = KillingCandidate::coordinate(&euc, 2).unwrap();
    assert_eq!(classify_killing(&shift, &points("euclidean", 5, 3)).unwrap().kind, KillingKind::ConstantLength(1.0));

    let mink = chart("minkowski", &Params::new());
    let null = KillingCandidate::affine("null", &mink, DMatrix::zeros(4, 4), vec![1.0, 1.0, 0.0, 0.0]).unwrap();
    let cls = classify_killing(&null, &points("minkowski", 10, 4)).unwrap();
    assert_eq!(cls.kind, KillingKind::Lightlike);
    assert!(cls.is_geodesic && cls.max_acceleration == 0.0);

    let dilation = KillingCandidate::affine("dilation", &euc, DMatrix::identity(3, 3), vec![0.0; 3]).unwrap();
    assert!(matches!(classify_killing(&dilation, &points("euclidean", 5, 5)), Err(GeometryError::NotKilling { .. })));
}

#[test]
fn curvature_identity_needs_constant_length() {
    let euc = chart("euclidean", &Params::new());
    let rot = KillingCandidate::affine("rotation", &euc, rotation3(), vec![0.0; 3]).unwrap();
    let cls = classify_killing(&rot, &points("euclidean", 10, 6)).unwrap();
    let err = curvature_identity(&rot, &cls, &[1.0, 0.0, 0.0], &[0.5, 0.5, 0.5]).unwrap_err();
    assert!(matches!(err, GeometryError::NotGeodesicKilling { .. }));
}

/// Hopf field `(−x1, x0, −x3, x2)` on the unit `S³`.
struct Hopf;

impl Smooth for Hopf {
    fn input_dim(&self) -> usize {
        4
    }
    fn output_dim(&self) -> usize {
        4
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![-x[1], x[0], -x[3], x[2]]
    }
}

#[test]
fn hopf_field_has_constant_length_on_the_sphere() {
    let q = Quadric::new(0, 4, 1.0).unwrap();
    let mut a = DMatrix::zeros(4, 4);
    a[(0, 1)] = -1.0;
    a[(1, 0)] = 1.0;
    a[(2, 3)] = -1.0;
    a[(3, 2)] = 1.0;
    let field = q.linear_field("hopf", &a).unwrap();
    let pts = atlas::sample_points(&[(-0.35, 0.35); 3], 20, 7);
    let cls = classify_killing(&field, &pts).unwrap();
    assert!(matches!(cls.kind, KillingKind::ConstantLength(l) if (l - 1.0).abs() < 1e-10));
    // the ambient field is the same map, checked in the embedding
    for u in &pts {
        let x = q.embed(u);
        let v: Vec<f64> = Hopf.eval(&x);
        let len: f64 = v.iter().map(|c| c * c).sum();
        assert!((len - 1.0).abs() < 1e-12);
    }
    let mut rng = rng(8);
    for u in &pts {
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let id = curvature_identity(&field, &cls, &y, u).unwrap();
        assert!(id.residual < 1e-9, "{id:?}");
    }
}

#[test]
fn flat_affine_fields_are_geodesic_iff_square_zero() {
    let mut rng = rng(9);
    let mink = chart("minkowski", &Params::new().with("p", 2.0).with("q", 2.0));
    let pts = points("minkowski", 10, 10);
    let a = random_square_zero(2, 2, &mut rng).unwrap();
    assert!(affine_acceleration(&a, &[0.0; 4], &pts) < 1e-12);
    // a in the image of A with A a = 0 keeps the field geodesic
    let b: Vec<f64> = (&a * DVector::from_vec(vec![0.3, -0.1, 0.7, 0.2])).iter().cloned().collect();
    assert!(affine_acceleration(&a, &b, &pts) < 1e-12);
    let cand = KillingCandidate::affine("square-zero", &mink, a.clone(), b).unwrap();
    assert_eq!(classify_killing(&cand, &pts).unwrap().kind, KillingKind::Lightlike);

    let rotation = basis(2, 2)[0].clone();
    assert!(affine_acceleration(&rotation, &[0.0; 4], &pts) > 1e-3);
}

#[test]
fn compact_certificates_match_closed_form() {
    // unit skew A with eigenvalues ±iλ_k: ‖A²‖_F is smallest when the
    // ⌊n/2⌋ rotation planes share the norm equally, 1/√(2⌊n/2⌋)
    for n in [3usize, 4, 5] {
        let cert = emptiness_certificate(0, n, 3, 40);
        let want = 1.0 / ((2 * (n / 2)) as f64).sqrt();
        assert!((cert.min_square_norm - want).abs() < 1e-6, "o({n}): {} vs {want}", cert.min_square_norm);
        assert!(cert.certified_empty);
    }
}

#[test]
fn de_sitter_has_no_lightlike_killing_fields() {
    for d in 2..=4 {
        let cert = desitter_no_lightlike(d, 17).unwrap();
        assert!(cert.certified_empty, "dS_{d}: {}", cert.min_square_norm);
        let a = cert.argmin.matrix();
        assert!(membership_residual(&a, 1, d + 1) < 1e-12);
        assert!((a.norm() - 1.0).abs() < 1e-10);
        assert!(((&a * &a).norm() - cert.min_square_norm).abs() < 1e-10);
    }
    assert!(desitter_no_lightlike(1, 0).is_err());
}

#[test]
fn square_zero_elements_span_the_algebra() {
    for (p, q) in [(2, 2), (2, 3), (3, 3), (2, 4)] {
        let span = square_zero_span(p, q, 5).unwrap();
        assert_eq!(span.span_dim, span.algebra_dim, "o({p},{q})");
        assert!(span.max_square_residual < 1e-12 && span.max_membership_residual < 1e-12);
    }
    for (p, q) in [(1, 3), (0, 4)] {
        let span = square_zero_span(p, q, 5).unwrap();
        assert_eq!(span.span_dim, 0);
        assert!(span.certificate.unwrap().certified_empty);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// On `S^{p,q}(c)`, `⟨R(X,Y)Y,X⟩ = (⟨X,X⟩⟨Y,Y⟩ − ⟨X,Y⟩²)/c`, which for
    /// lightlike `X` is `−⟨X,Y⟩²/c`; the derivative side must agree.
    #[test]
    fn lightlike_fields_on_anti_de_sitter(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let (p, q, c) = (2, 2, -1.0);
        let quad = Quadric::new(p, q, c).unwrap();
        let a = random_square_zero(p, q, &mut rng).unwrap();
        let field = quad.linear_field("x -> Ax", &a).unwrap();
        let u = atlas::sample_points(&atlas::sample_region("pseudo_sphere", &Params::new()).unwrap(), 1, seed).pop().unwrap();
        let cls = classify_killing(&field, std::slice::from_ref(&u)).unwrap();
        prop_assert_eq!(cls.kind, KillingKind::Lightlike);
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let id = curvature_identity(&field, &cls, &y, &u).unwrap();
        let g = field.chart().metric_values(&u);
        let x = field.covariant_derivative(&u).unwrap().0;
        let xy: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| g[i * 3 + j] * x[i] * y[j]).sum();
        prop_assert!((id.curvature_side + xy * xy / c).abs() < 1e-9 * (1.0 + xy * xy));
        prop_assert!(id.residual < 1e-9 * (1.0 + xy * xy));
        // lightlike direction on AdS: the curvature side is −⟨X,Y⟩²/c ≥ 0
        prop_assert!(id.curvature_side >= -1e-12);
    }

    #[test]
    fn square_zero_generators_are_members(seed in any::<u64>(), p in 2usize..4, q in 2usize..4) {
        let a = random_square_zero(p, q, &mut rng(seed)).unwrap();
        let j = j_matrix(p, q);
        prop_assert!((a.transpose() * &j + &j * &a).amax() < 1e-12);
        prop_assert!((&a * &a).amax() < 1e-12);
        prop_assert!((a.norm() - 1.0).abs() < 1e-12);
    }
}
