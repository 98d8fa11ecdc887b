//! Killing fields: verification, classification and the curvature identity
//! for Killing fields of constant length.
//!
//! A vector field `X` is Killing iff `∇X` is skew: `⟨∇_Y X, Z⟩ + ⟨Y, ∇_Z X⟩ = 0`.
//! If it also has constant length it is geodesic (`∇_X X = 0`) and
//! `⟨R(X,Y)Y,X⟩ = ⟨∇_Y X, ∇_Y X⟩` for every `Y`. For a lightlike `X` on a
//! Lorentzian manifold this forces every non-degenerate plane containing
//! `X` to have sectional curvature `≤ 0`.
//!
//! The matrix side lives in [`lie_algebra`]: square-zero elements of
//! `o(p,q)`, which are exactly the linear Killing fields of the quadrics
//! `S^{p,q}(c)` with `⟨X,X⟩ = 0`.

pub mod lie_algebra;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::ad::{jacobian, Scalar, SharedFn, Smooth};
use crate::chart::MetricChart;
use crate::error::{GeometryError, Result};
use crate::linalg;
use crate::tensor::{connection_at, curvature, Tolerances};

pub use lie_algebra::{
    desitter_no_lightlike, square_zero_span, EmptinessCertificate, PseudoOrthogonalElement, SquareZeroSpan,
};

/// A closed-form vector field on a chart, candidate for being Killing.
#[derive(Clone)]
pub struct KillingCandidate {
    label: String,
    chart: MetricChart,
    field: SharedFn,
}

impl std::fmt::Debug for KillingCandidate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KillingCandidate").field("label", &self.label).field("chart", &self.chart.name()).finish()
    }
}

impl KillingCandidate {
    pub fn new(label: impl Into<String>, chart: MetricChart, field: SharedFn) -> Result<Self> {
        let n = chart.dim();
        if field.input_dim() != n || field.output_dim() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: field.output_dim() });
        }
        Ok(Self { label: label.into(), chart, field })
    }

    /// The coordinate field `∂_axis`.
    pub fn coordinate(chart: &MetricChart, axis: usize) -> Result<Self> {
        let n = chart.dim();
        if axis >= n {
            return Err(GeometryError::BadParams(format!("axis {axis} out of range for dimension {n}")));
        }
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        let label = format!("d/d{}", chart.coords()[axis]);
        Self::new(label, chart.clone(), Arc::new(AffineField::translation(v)))
    }

    /// `X(x) = A x + a` in the chart's coordinates.
    pub fn affine(label: impl Into<String>, chart: &MetricChart, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let n = chart.dim();
        if a.nrows() != n || a.ncols() != n || b.len() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: b.len() });
        }
        Self::new(label, chart.clone(), Arc::new(AffineField { a, b }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn chart(&self) -> &MetricChart {
        &self.chart
    }

    pub fn field_fn(&self) -> &SharedFn {
        &self.field
    }

    /// `(X(x), ∇X)` with `∇X` stored `[i * n + j] = ∇_j X^i`.
    pub fn covariant_derivative(&self, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        self.chart.check_domain(x)?;
        let n = self.chart.dim();
        let (_, _, gamma) = connection_at(&self.chart, x, Tolerances::default().degeneracy)?;
        let (xv, jac) = jacobian(self.field.as_ref(), x);
        let mut nabla = jac;
        for i in 0..n {
            for j in 0..n {
                nabla[i * n + j] += (0..n).map(|k| gamma[(i * n + j) * n + k] * xv[k]).sum::<f64>();
            }
        }
        Ok((xv, nabla))
    }

    /// `∇_X X` at `x`.
    pub fn acceleration(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.chart.dim();
        let (xv, nabla) = self.covariant_derivative(x)?;
        Ok((0..n).map(|i| (0..n).map(|j| nabla[i * n + j] * xv[j]).sum()).collect())
    }

    /// `⟨X, X⟩` at `x`.
    pub fn squared_length(&self, x: &[f64]) -> f64 {
        let n = self.chart.dim();
        let g = self.chart.metric_values(x);
        let xv = self.field.eval_f64(x);
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| g[i * n + j] * xv[i] * xv[j]).sum()
    }
}

/// `x ↦ A x + b`.
pub struct AffineField {
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
}

impl AffineField {
    pub fn translation(b: Vec<f64>) -> Self {
        Self { a: DMatrix::zeros(b.len(), b.len()), b }
    }
}

impl Smooth for AffineField {
    fn input_dim(&self) -> usize {
        self.b.len()
    }
    fn output_dim(&self) -> usize {
        self.b.len()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.b.len();
        (0..n)
            .map(|i| (0..n).fold(S::cst(self.b[i]), |acc, j| if self.a[(i, j)] == 0.0 { acc } else { acc + x[j] * self.a[(i, j)] }))
            .collect()
    }
}

/// `max |⟨∇_Y X, Z⟩ + ⟨Y, ∇_Z X⟩|` over points and orthonormal `Y, Z`.
pub fn killing_residual(cand: &KillingCandidate, points: &[Vec<f64>]) -> Result<f64> {
    let n = cand.chart.dim();
    let mut worst = 0.0f64;
    for x in points {
        let (_, nabla) = cand.covariant_derivative(x)?;
        let g = linalg::to_matrix(&cand.chart.metric_values(x), n);
        // L[j][k] = ⟨∇_j X, ∂_k⟩
        let l = DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| g[(i, k)] * nabla[i * n + j]).sum());
        let sym = &l + l.transpose();
        let (e, _) = linalg::orthonormal_frame(&g);
        worst = worst.max(linalg::max_abs(&(e.transpose() * sym * e)));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KillingKind {
    /// `⟨X,X⟩` varies over the samples.
    Varying,
    /// `⟨X,X⟩` is constant and non-zero.
    ConstantLength(f64),
    /// `⟨X,X⟩ ≡ 0`.
    Lightlike,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillingClassification {
    pub kind: KillingKind,
    /// Constant length, hence geodesic.
    pub is_geodesic: bool,
    pub killing_residual: f64,
    pub mean_squared_length: f64,
    pub length_spread: f64,
    /// Largest `|∇_X X|` (coordinate max-norm) over the samples.
    pub max_acceleration: f64,
}

/// Classifies a Killing field by the behaviour of `⟨X,X⟩` on `samples`.
pub fn classify_killing(cand: &KillingCandidate, samples: &[Vec<f64>]) -> Result<KillingClassification> {
    if samples.is_empty() {
        return Err(GeometryError::BadParams("no sample points".into()));
    }
    let residual = killing_residual(cand, samples)?;
    if residual >= 1e-8 {
        return Err(GeometryError::NotKilling { label: cand.label.clone(), residual });
    }
    let lengths: Vec<f64> = samples.iter().map(|x| cand.squared_length(x)).collect();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let (lo, hi) = lengths.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let spread = hi - lo;
    let constant = spread < 1e-8 * (1.0 + mean.abs());
    let kind = if !constant {
        KillingKind::Varying
    } else if mean.abs() < 1e-8 {
        KillingKind::Lightlike
    } else {
        KillingKind::ConstantLength(mean)
    };
    let mut max_acceleration = 0.0f64;
    for x in samples {
        max_acceleration = cand.acceleration(x)?.iter().fold(max_acceleration, |a, b| a.max(b.abs()));
    }
    Ok(KillingClassification {
        kind,
        is_geodesic: constant,
        killing_residual: residual,
        mean_squared_length: mean,
        length_spread: spread,
        max_acceleration,
    })
}

/// Both sides of `⟨R(X,Y)Y,X⟩ = ⟨∇_Y X, ∇_Y X⟩` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureIdentity {
    pub curvature_side: f64,
    pub derivative_side: f64,
    pub residual: f64,
}

/// Evaluates the curvature identity for a geodesic Killing field.
///
/// The curvature side is the numerator of the sectional curvature of
/// `span(X, Y)`, so the identity says that numerator is `|∇_Y X|²`.
pub fn curvature_identity(
    cand: &KillingCandidate,
    classification: &KillingClassification,
    y: &[f64],
    x: &[f64],
) -> Result<CurvatureIdentity> {
    if !classification.is_geodesic {
        return Err(GeometryError::NotGeodesicKilling { label: cand.label.clone() });
    }
    let n = cand.chart.dim();
    if y.len() != n {
        return Err(GeometryError::DimensionMismatch { expected: n, got: y.len() });
    }
    let (xv, nabla) = cand.covariant_derivative(x)?;
    let curv = curvature(&cand.chart, x)?;
    let lhs = curv.curvature_form(&xv, y);
    let dyx = DVector::from_fn(n, |i, _| (0..n).map(|j| nabla[i * n + j] * y[j]).sum());
    let rhs = linalg::form(&curv.metric, &dyx, &dyx);
    Ok(CurvatureIdentity { curvature_side: lhs, derivative_side: rhs, residual: (lhs - rhs).abs() })
}

/// Largest `|A(Ax + a)|` over `samples`: the acceleration `∇_X X` of the
/// flat Killing field `X(x) = Ax + a`. It vanishes identically iff
/// `A² = 0` and `Aa = 0`.
pub fn affine_acceleration(a: &DMatrix<f64>, b: &[f64], samples: &[Vec<f64>]) -> f64 {
    let bv = DVector::from_column_slice(b);
    samples
        .iter()
        .map(|x| {
            let xv = DVector::from_column_slice(x);
            let acc = a * (a * xv + &bv);
            acc.amax()
        })
        .fold(0.0, f64::max)
}
