//! Square-zero elements of `o(p,q)`.
//!
//! `A ∈ o(p,q)` iff `AᵀJ + JA = 0` with `J = diag(−I_p, I_q)`. A linear
//! field `x ↦ Ax` is then Killing on every quadric `{xᵀJx = c}`, and its
//! length `xᵀAᵀJAx = −xᵀJA²x` vanishes identically iff `A² = 0`.
//!
//! For `p, q ≥ 2` the conjugates of one square-zero element span the whole
//! algebra. For `min(p,q) ≤ 1` there are none; this is certified by
//! minimising `‖A²‖_F` over the unit sphere of `o(p,q)` from many seeded
//! random starts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::linalg;

pub fn j_matrix(p: usize, q: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p + q, p + q, |i, j| if i != j { 0.0 } else if i < p { -1.0 } else { 1.0 })
}

/// `‖AᵀJ + JA‖_max`.
pub fn membership_residual(a: &DMatrix<f64>, p: usize, q: usize) -> f64 {
    let j = j_matrix(p, q);
    linalg::max_abs(&(a.transpose() * &j + &j * a))
}

/// Orthogonal projection onto `o(p,q)`: `(A − J Aᵀ J) / 2`.
pub fn project(a: &DMatrix<f64>, p: usize, q: usize) -> DMatrix<f64> {
    let j = j_matrix(p, q);
    (a - &j * a.transpose() * &j) * 0.5
}

/// Frobenius-orthonormal basis of `o(p,q)`.
pub fn basis(p: usize, q: usize) -> Vec<DMatrix<f64>> {
    let n = p + q;
    let sign = |i: usize| if i < p { -1.0 } else { 1.0 };
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = std::f64::consts::FRAC_1_SQRT_2;
            e[(j, i)] = -sign(i) * sign(j) * std::f64::consts::FRAC_1_SQRT_2;
            out.push(e);
        }
    }
    out
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let norm = a.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / 2f64.powi(squarings as i32);
    let n = a.nrows();
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..20 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// An element of `o(p,q)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoOrthogonalElement {
    pub p: usize,
    pub q: usize,
    /// Row-major entries.
    pub entries: Vec<f64>,
}

impl PseudoOrthogonalElement {
    pub fn new(a: &DMatrix<f64>, p: usize, q: usize) -> Result<Self> {
        if a.nrows() != p + q || a.ncols() != p + q {
            return Err(GeometryError::DimensionMismatch { expected: p + q, got: a.nrows() });
        }
        let r = membership_residual(a, p, q);
        if r >= 1e-10 * (1.0 + a.amax()) {
            return Err(GeometryError::BadParams(format!("matrix is not in o({p},{q}): residual {r:e}")));
        }
        let entries = (0..p + q).flat_map(|i| (0..p + q).map(move |j| a[(i, j)])).collect();
        Ok(Self { p, q, entries })
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p + self.q, self.p + self.q, &self.entries)
    }

    pub fn membership_residual(&self) -> f64 {
        membership_residual(&self.matrix(), self.p, self.q)
    }

    /// `‖A²‖_F`.
    pub fn square_norm(&self) -> f64 {
        let a = self.matrix();
        (&a * &a).norm()
    }
}

/// The generator `B` of `o(2,2)`: ones at `(1,3)` and `(2,4)`, skew for
/// the split form `Q′ = dx dt − dy dz` on coordinates `(x, y, z, t)`.
pub fn split_generator() -> DMatrix<f64> {
    let mut b = DMatrix::zeros(4, 4);
    b[(0, 2)] = 1.0;
    b[(1, 3)] = 1.0;
    b
}

/// Gram matrix of `Q′ = dx dt − dy dz`.
pub fn split_form() -> DMatrix<f64> {
    let mut s = DMatrix::zeros(4, 4);
    s[(0, 3)] = 0.5;
    s[(3, 0)] = 0.5;
    s[(1, 2)] = -0.5;
    s[(2, 1)] = -0.5;
    s
}

/// `u = M x` taking `Q′` to `−u1² − u2² + u3² + u4²`.
pub fn split_to_diagonal() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            0.5, 0.0, 0.0, -0.5, //
            0.0, 0.5, 0.5, 0.0, //
            0.5, 0.0, 0.0, 0.5, //
            0.0, 0.5, -0.5, 0.0,
        ],
    )
}

/// `B` expressed in the diagonal basis: `M B M⁻¹ ∈ o(2,2)`.
pub fn generator_in_o22() -> DMatrix<f64> {
    let m = split_to_diagonal();
    let minv = m.clone().try_inverse().expect("change of basis is invertible");
    m * split_generator() * minv
}

/// `exp(X) A exp(−X)`; stays in `o(p,q)` when `A` and `X` do.
pub fn conjugate(a: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    expm(x) * a * expm(&(-x))
}

/// The `o(2,2)` generator placed on axes `(0, 1, p, p + 1)` of `o(p,q)`;
/// `None` when `min(p,q) < 2`.
pub fn embedded_generator(p: usize, q: usize) -> Option<DMatrix<f64>> {
    if p.min(q) < 2 {
        return None;
    }
    let b = generator_in_o22();
    let axes = [0, 1, p, p + 1];
    let mut out = DMatrix::zeros(p + q, p + q);
    for (a, &i) in axes.iter().enumerate() {
        for (c, &j) in axes.iter().enumerate() {
            out[(i, j)] = b[(a, c)];
        }
    }
    Some(out)
}

/// A random square-zero element of unit Frobenius norm: the embedded
/// generator, reflected in axis 0 with probability ½, conjugated by
/// `exp(X)` with `X` uniform in the unit cube of basis coordinates.
///
/// The reflection matters: `exp(o(p,q))` only reaches the identity
/// component of `O(p,q)`, and for `o(2,2) = sl(2) ⊕ sl(2)` the orbit of
/// the generator under that component stays inside one simple ideal.
pub fn random_square_zero<R: Rng>(p: usize, q: usize, rng: &mut R) -> Option<DMatrix<f64>> {
    let mut seed = embedded_generator(p, q)?;
    if rng.random_bool(0.5) {
        seed.row_mut(0).neg_mut();
        seed.column_mut(0).neg_mut();
    }
    let x = basis(p, q).iter().fold(DMatrix::zeros(p + q, p + q), |acc, e| acc + e * rng.random_range(-1.0..1.0));
    let a = conjugate(&seed, &x);
    let norm = a.norm();
    Some(a / norm)
}

/// Outcome of the multistart search for square-zero elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmptinessCertificate {
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub starts: usize,
    pub threshold: f64,
    /// Smallest `‖A²‖_F` found with `‖A‖_F = 1`.
    pub min_square_norm: f64,
    pub argmin: PseudoOrthogonalElement,
    /// `min_square_norm > threshold`.
    pub certified_empty: bool,
    pub trace: OptimizerTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    pub total_iterations: usize,
    pub max_final_gradient: f64,
    pub worst_local_minimum: f64,
    pub median_local_minimum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquareZeroSpan {
    pub p: usize,
    pub q: usize,
    pub algebra_dim: usize,
    /// Dimension of the span of the square-zero elements found.
    pub span_dim: usize,
    /// Square-zero elements used, with their residuals.
    pub generators: usize,
    pub max_square_residual: f64,
    pub max_membership_residual: f64,
    /// Present when no square-zero element exists (`min(p,q) ≤ 1`).
    pub certificate: Option<EmptinessCertificate>,
}

pub const CERTIFICATE_THRESHOLD: f64 = 0.1;
pub const CERTIFICATE_STARTS: usize = 100;

/// Dimension of the span of square-zero elements of `o(p,q)`.
///
/// For `p, q ≥ 2` the `o(2,2)` generator is embedded on two negative and
/// two positive axes and conjugated by `exp(X)` for random `X ∈ o(p,q)`.
/// Otherwise the span is `0`, backed by an [`EmptinessCertificate`].
pub fn square_zero_span(p: usize, q: usize, seed: u64) -> Result<SquareZeroSpan> {
    let n = p + q;
    if !(2..=8).contains(&n) {
        return Err(GeometryError::BadParams(format!("need 2 <= p + q <= 8, got {n}")));
    }
    let algebra_dim = n * (n - 1) / 2;
    if p.min(q) <= 1 {
        let cert = emptiness_certificate(p, q, seed, CERTIFICATE_STARTS);
        return Ok(SquareZeroSpan {
            p,
            q,
            algebra_dim,
            span_dim: 0,
            generators: 0,
            max_square_residual: 0.0,
            max_membership_residual: 0.0,
            certificate: Some(cert),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = 3 * algebra_dim;
    let mut stacked = DMatrix::zeros(count, n * n);
    let (mut sq, mut mem) = (0.0f64, 0.0f64);
    for row in 0..count {
        let a = random_square_zero(p, q, &mut rng).expect("min(p,q) >= 2");
        sq = sq.max(linalg::max_abs(&(&a * &a)));
        mem = mem.max(membership_residual(&a, p, q));
        for (c, v) in a.transpose().iter().enumerate() {
            stacked[(row, c)] = *v;
        }
    }
    Ok(SquareZeroSpan {
        p,
        q,
        algebra_dim,
        span_dim: linalg::rank(&stacked, 1e-9),
        generators: count,
        max_square_residual: sq,
        max_membership_residual: mem,
        certificate: None,
    })
}

/// `(‖A²‖_F², Euclidean gradient)` for `A = Σ c_k E_k`.
fn objective(c: &[f64], basis: &[DMatrix<f64>]) -> (f64, Vec<f64>) {
    let a = basis.iter().zip(c).fold(DMatrix::zeros(basis[0].nrows(), basis[0].ncols()), |acc, (e, &ck)| acc + e * ck);
    let m = &a * &a;
    let grad = (&m * a.transpose() + a.transpose() * &m) * 2.0;
    let f = m.norm_squared();
    (f, basis.iter().map(|e| e.dot(&grad)).collect())
}

fn normalize(c: &mut [f64]) {
    let n = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    c.iter_mut().for_each(|v| *v /= n);
}

/// Riemannian gradient descent on the unit sphere with Armijo backtracking.
fn local_min(mut c: Vec<f64>, basis: &[DMatrix<f64>]) -> (f64, Vec<f64>, usize, f64) {
    normalize(&mut c);
    let (mut f, mut g) = objective(&c, basis);
    let mut step = 1.0;
    let mut iters = 0;
    let mut gnorm = f64::INFINITY;
    while iters < 5000 {
        iters += 1;
        let radial: f64 = g.iter().zip(&c).map(|(a, b)| a * b).sum();
        let tangent: Vec<f64> = g.iter().zip(&c).map(|(a, b)| a - radial * b).collect();
        gnorm = tangent.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-10 {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial: Vec<f64> = c.iter().zip(&tangent).map(|(a, b)| a - step * b).collect();
            normalize(&mut trial);
            let (ft, gt) = objective(&trial, basis);
            if ft <= f - 1e-4 * step * gnorm * gnorm {
                c = trial;
                f = ft;
                g = gt;
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (f.sqrt(), c, iters, gnorm)
}

/// Minimises `‖A²‖_F` on the unit sphere of `o(p,q)` from `starts` random
/// points; start `k` is seeded with `seed + k`, so the result does not
/// depend on thread scheduling.
pub fn emptiness_certificate(p: usize, q: usize, seed: u64, starts: usize) -> EmptinessCertificate {
    let basis = basis(p, q);
    let runs: Vec<(f64, Vec<f64>, usize, f64)> = (0..starts as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let c: Vec<f64> = (0..basis.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            local_min(c, &basis)
        })
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one start");
    let mut finals: Vec<f64> = runs.iter().map(|r| r.0).collect();
    finals.sort_by(f64::total_cmp);
    let a = basis.iter().zip(&best.1).fold(DMatrix::zeros(p + q, p + q), |acc, (e, &ck)| acc + e * ck);
    let entries = (0..p + q).flat_map(|i| (0..p + q).map(move |j| (i, j))).map(|(i, j)| a[(i, j)]).collect();
    EmptinessCertificate {
        p,
        q,
        seed,
        starts,
        threshold: CERTIFICATE_THRESHOLD,
        min_square_norm: best.0,
        argmin: PseudoOrthogonalElement { p, q, entries },
        certified_empty: best.0 > CERTIFICATE_THRESHOLD,
        trace: OptimizerTrace {
            total_iterations: runs.iter().map(|r| r.2).sum(),
            max_final_gradient: runs.iter().map(|r| r.3).fold(0.0, f64::max),
            worst_local_minimum: *finals.last().unwrap_or(&0.0),
            median_local_minimum: finals.get(finals.len() / 2).copied().unwrap_or(0.0),
        },
    }
}

/// No lightlike Killing field on `d`-dimensional de Sitter space: the
/// certificate that `o(1, d+1)` has no square-zero element of unit norm.
pub fn desitter_no_lightlike(d: usize, seed: u64) -> Result<EmptinessCertificate> {
    if !(2..=6).contains(&d) {
        return Err(GeometryError::BadParams(format!("de Sitter dimension must be in 2..=6, got {d}")));
    }
    Ok(emptiness_certificate(1, d + 1, seed, CERTIFICATE_STARTS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_generator_is_skew_for_split_form() {
        let (b, s) = (split_generator(), split_form());
        assert_eq!(linalg::max_abs(&(b.transpose() * &s + &s * &b)), 0.0);
        assert_eq!(linalg::max_abs(&(&b * &b)), 0.0);
    }

    #[test]
    fn change_of_basis_diagonalises_split_form() {
        let m = split_to_diagonal();
        let diag = m.transpose() * j_matrix(2, 2) * m;
        assert!(linalg::max_abs(&(diag - split_form())) < 1e-15);
    }

    #[test]
    fn conjugated_generator_is_square_zero_member() {
        let a = generator_in_o22();
        assert!(membership_residual(&a, 2, 2) < 1e-14);
        assert!(linalg::max_abs(&(&a * &a)) < 1e-14);
        assert!(PseudoOrthogonalElement::new(&a, 2, 2).is_ok());
    }

    #[test]
    fn basis_is_orthonormal_and_in_algebra() {
        let b = basis(1, 3);
        assert_eq!(b.len(), 6);
        for (i, e) in b.iter().enumerate() {
            assert!(membership_residual(e, 1, 3) == 0.0);
            for (j, f) in b.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((e.dot(f) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let a = DMatrix::from_fn(4, 4, |i, j| (i * 4 + j) as f64 * 0.1 - 0.7);
        let pa = project(&a, 2, 2);
        assert!(membership_residual(&pa, 2, 2) < 1e-14);
        assert!(linalg::max_abs(&(project(&pa, 2, 2) - &pa)) < 1e-14);
    }

    #[test]
    fn exponential_of_algebra_element_preserves_form() {
        let x = basis(2, 1).iter().enumerate().fold(DMatrix::zeros(3, 3), |acc, (k, e)| acc + e * (0.7 + k as f64));
        let g = expm(&x);
        let j = j_matrix(2, 1);
        assert!(linalg::max_abs(&(g.transpose() * &j * &g - &j)) < 1e-11);
    }

    #[test]
    fn compact_case_has_no_square_zero_element() {
        // o(0,3): A² = −AᵀA, so ‖A²‖ ≥ ‖A‖²/2 on the unit sphere
        let cert = emptiness_certificate(0, 3, 7, 8);
        assert!(cert.certified_empty);
        assert!(cert.min_square_norm > 0.5);
    }
}
