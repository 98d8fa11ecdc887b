//! Graph charts on the quadrics `S^{p,q}(c) = {x ∈ R^{p,q} : xᵀJx = c}`.
//!
//! One ambient coordinate `x_s` is solved for, on its positive branch:
//! a positive-direction index when `c > 0`, a negative one when `c < 0`.
//! The induced metric in the remaining coordinates is
//! `g_ab = J_ab + J_ss ∂_a x_s ∂_b x_s`; it has signature `(p, q − 1)` for
//! `c > 0`, `(p − 1, q)` for `c < 0`, and constant curvature `1/c`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::ad::{Scalar, Smooth};
use crate::chart::{MetricChart, Signature};
use crate::error::{GeometryError, Result};
use crate::killing::lie_algebra::membership_residual;
use crate::killing::KillingCandidate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadric {
    p: usize,
    q: usize,
    c: f64,
}

impl Quadric {
    pub fn new(p: usize, q: usize, c: f64) -> Result<Self> {
        let n = p + q;
        if !(c.is_finite() && c != 0.0) {
            return Err(GeometryError::BadParams(format!("quadric level must be finite and non-zero, got {c}")));
        }
        if !(2..=7).contains(&n) {
            return Err(GeometryError::BadParams(format!("ambient dimension must be in 2..=7, got {n}")));
        }
        if (c > 0.0 && q == 0) || (c < 0.0 && p == 0) {
            return Err(GeometryError::BadParams(format!("S^{{{p},{q}}}({c}) is empty")));
        }
        Ok(Self { p, q, c })
    }

    pub fn level(&self) -> f64 {
        self.c
    }

    pub fn ambient_dim(&self) -> usize {
        self.p + self.q
    }

    pub fn dim(&self) -> usize {
        self.p + self.q - 1
    }

    pub fn signature(&self) -> Signature {
        if self.c > 0.0 {
            Signature::new(self.p, self.q - 1)
        } else {
            Signature::new(self.p - 1, self.q)
        }
    }

    /// Ambient index eliminated by the graph chart.
    pub fn solved_axis(&self) -> usize {
        if self.c > 0.0 {
            self.p + self.q - 1
        } else {
            0
        }
    }

    fn j(&self, i: usize) -> f64 {
        if i < self.p {
            -1.0
        } else {
            1.0
        }
    }

    /// Ambient indices of the chart coordinates, in order.
    pub fn chart_axes(&self) -> Vec<usize> {
        let s = self.solved_axis();
        (0..self.ambient_dim()).filter(|&i| i != s).collect()
    }

    /// `x_s²`; the chart is valid where this is positive.
    pub fn radicand<S: Scalar>(&self, u: &[S]) -> S {
        let s = self.solved_axis();
        let js = self.j(s);
        let acc = self.chart_axes().iter().zip(u).fold(S::cst(self.c), |acc, (&a, &ua)| acc - ua * ua * self.j(a));
        acc * js
    }

    /// Ambient point of chart coordinates `u`.
    pub fn embed<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        let s = self.solved_axis();
        let xs = self.radicand(u).sqrt();
        let mut x = Vec::with_capacity(self.ambient_dim());
        let mut it = u.iter();
        for i in 0..self.ambient_dim() {
            x.push(if i == s { xs } else { *it.next().expect("chart coordinate") });
        }
        x
    }

    pub fn chart(&self, name: impl Into<String>) -> Result<MetricChart> {
        let coords = self.chart_axes().iter().map(|i| format!("x{i}")).collect();
        let me = *self;
        MetricChart::new(
            name,
            coords,
            self.signature(),
            Arc::new(QuadricMetric { quadric: *self }),
            Arc::new(move |u: &[f64]| me.radicand(u) > 0.0),
        )
    }

    /// The linear field `x ↦ Ax` restricted to the quadric, for `A ∈ o(p,q)`.
    pub fn linear_field(&self, label: impl Into<String>, a: &DMatrix<f64>) -> Result<KillingCandidate> {
        let n = self.ambient_dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: a.nrows() });
        }
        let r = membership_residual(a, self.p, self.q);
        if r >= 1e-10 * (1.0 + a.amax()) {
            return Err(GeometryError::BadParams(format!("matrix is not in o({},{}): residual {r:e}", self.p, self.q)));
        }
        let chart = self.chart(format!("S^{{{},{}}}({})", self.p, self.q, self.c))?;
        KillingCandidate::new(label, chart, Arc::new(QuadricLinearField { quadric: *self, a: a.clone() }))
    }
}

struct QuadricMetric {
    quadric: Quadric,
}

impl Smooth for QuadricMetric {
    fn input_dim(&self) -> usize {
        self.quadric.dim()
    }
    fn output_dim(&self) -> usize {
        self.quadric.dim().pow(2)
    }
    fn eval<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        let q = &self.quadric;
        let n = q.dim();
        let axes = q.chart_axes();
        let s = q.solved_axis();
        // ∂_a x_s = −J_aa J_ss u_a / x_s, so J_ss ∂_a x_s ∂_b x_s = J_ss J_aa J_bb u_a u_b / x_s²
        let inv = S::cst(1.0) / q.radicand(u);
        let mut g = vec![S::cst(0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                let coef = q.j(s) * q.j(axes[a]) * q.j(axes[b]);
                let mut v = u[a] * u[b] * inv * coef;
                if a == b {
                    v = v + q.j(axes[a]);
                }
                g[a * n + b] = v;
            }
        }
        g
    }
}

struct QuadricLinearField {
    quadric: Quadric,
    a: DMatrix<f64>,
}

impl Smooth for QuadricLinearField {
    fn input_dim(&self) -> usize {
        self.quadric.dim()
    }
    fn output_dim(&self) -> usize {
        self.quadric.dim()
    }
    fn eval<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        let x = self.quadric.embed(u);
        let n = x.len();
        self.quadric
            .chart_axes()
            .iter()
            .map(|&i| (0..n).fold(S::cst(0.0), |acc, j| if self.a[(i, j)] == 0.0 { acc } else { acc + x[j] * self.a[(i, j)] }))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::sectional_curvature;

    #[test]
    fn signatures() {
        assert_eq!(Quadric::new(2, 2, -1.0).unwrap().signature(), Signature::new(1, 2));
        assert_eq!(Quadric::new(1, 3, 1.0).unwrap().signature(), Signature::new(1, 2));
        assert_eq!(Quadric::new(1, 3, -1.0).unwrap().signature(), Signature::new(0, 3));
        assert!(Quadric::new(0, 3, -1.0).is_err());
    }

    #[test]
    fn embedding_lies_on_quadric() {
        let q = Quadric::new(2, 2, -1.0).unwrap();
        let x = q.embed(&[0.3, -0.2, 0.5]);
        let qx = -x[0] * x[0] - x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        assert!((qx + 1.0).abs() < 1e-14);
    }

    #[test]
    fn round_sphere_has_unit_curvature() {
        let chart = Quadric::new(0, 3, 1.0).unwrap().chart("S2").unwrap();
        let k = sectional_curvature(&chart, &[0.2, -0.1], &[1.0, 0.0], &[0.3, 1.0]).unwrap();
        assert!((k - 1.0).abs() < 1e-10, "{k}");
    }

    #[test]
    fn curvature_is_inverse_level() {
        let chart = Quadric::new(1, 3, 4.0).unwrap().chart("dS").unwrap();
        let k = sectional_curvature(&chart, &[0.3, 0.5, -0.4], &[1.0, 0.2, 0.0], &[0.0, 1.0, 0.5]).unwrap();
        assert!((k - 0.25).abs() < 1e-10, "{k}");
    }
}
