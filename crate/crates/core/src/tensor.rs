//! Pointwise metric, connection and curvature evaluation.
//!
//! Index conventions:
//!
//! - `Γ^k_ij` is stored upper index first.
//! - `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l` with `R(X,Y) = ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]`.
//! - `Ric_jk = R^i_ijk`, so round spheres have positive Ricci curvature.
//!
//! With this sign, `⟨R(u,v)v,u⟩` is the numerator of the sectional curvature.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::ad::{Dual, Scalar};
use crate::chart::MetricChart;
use crate::error::{GeometryError, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Threshold for structural identities (symmetry, Bianchi, ...).
    pub structural: f64,
    /// `|det g|` at or below this is treated as degenerate.
    pub degeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { structural: 1e-8, degeneracy: 1e-10 }
    }
}

pub(crate) fn det_of(g: &[f64], n: usize) -> f64 {
    linalg::to_matrix(g, n).determinant()
}

pub(crate) fn check_nondegenerate(g: &[f64], n: usize, tol: f64) -> Result<()> {
    let det = det_of(g, n);
    if !det.is_finite() || det.abs() <= tol {
        return Err(GeometryError::DegenerateMetric { det });
    }
    Ok(())
}

/// `g_ij(x)` with domain and degeneracy checks.
pub fn eval_metric(chart: &MetricChart, x: &[f64]) -> Result<DMatrix<f64>> {
    eval_metric_with(chart, x, &Tolerances::default())
}

pub fn eval_metric_with(chart: &MetricChart, x: &[f64], tol: &Tolerances) -> Result<DMatrix<f64>> {
    chart.check_domain(x)?;
    let n = chart.dim();
    let g = chart.metric_values(x);
    check_nondegenerate(&g, n, tol.degeneracy)?;
    Ok(linalg::to_matrix(&g, n))
}

/// Connection coefficients `Γ^k_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `Γ^k_ij u^i v^j` for each `k`.
    pub fn contract(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let n = self.dim;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += self.get(k, i, j) * u[i] * v[j];
                    }
                }
                s
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)` from the metric, its
/// inverse and its first derivatives (`dg[(k*n + i)*n + j] = ∂_k g_ij`).
pub(crate) fn christoffel_from<S: Scalar>(ginv: &[S], dg: &[S], n: usize) -> Vec<S> {
    let d = |k: usize, i: usize, j: usize| dg[(k * n + i) * n + j];
    // first kind: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first = vec![S::cst(0.0); n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in i..n {
                let v = (d(i, j, l) + d(j, i, l) - d(l, i, j)) * 0.5;
                first[(l * n + i) * n + j] = v;
                first[(l * n + j) * n + i] = v;
            }
        }
    }
    let mut out = vec![S::cst(0.0); n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut s = S::cst(0.0);
                for l in 0..n {
                    s = s + ginv[k * n + l] * first[(l * n + i) * n + j];
                }
                out[(k * n + i) * n + j] = s;
                out[(k * n + j) * n + i] = s;
            }
        }
    }
    out
}

/// Christoffel symbols together with `g` and `g^{-1}` at `x`.
pub(crate) fn connection_at(
    chart: &MetricChart,
    x: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let n = chart.dim();
    let (g, dg) = chart.metric_with_derivatives(x);
    check_nondegenerate(&g, n, tol)?;
    let ginv = linalg::inverse(&g, n).ok_or(GeometryError::DegenerateMetric { det: 0.0 })?;
    let gamma = christoffel_from(&ginv, &dg, n);
    Ok((g, ginv, gamma))
}

pub fn christoffel(chart: &MetricChart, x: &[f64]) -> Result<Christoffel> {
    chart.check_domain(x)?;
    let (_, _, data) = connection_at(chart, x, Tolerances::default().degeneracy)?;
    Ok(Christoffel { dim: chart.dim(), data })
}

/// Christoffel symbols as dual numbers: values plus their first partials.
pub(crate) fn christoffel_dual(chart: &MetricChart, x: &[f64], tol: f64) -> Result<(Vec<Dual>, Vec<Dual>)> {
    let n = chart.dim();
    let jets = chart.metric_jets(x);
    let g: Vec<Dual> = jets.iter().map(|j| j.to_dual()).collect();
    let gv: Vec<f64> = g.iter().map(|d| d.v).collect();
    check_nondegenerate(&gv, n, tol)?;
    let mut dg = vec![Dual::cst(0.0); n * n * n];
    for (c, j) in jets.iter().enumerate() {
        for k in 0..n {
            dg[k * n * n + c] = j.partial(k);
        }
    }
    let ginv = linalg::inverse(&g, n).ok_or(GeometryError::DegenerateMetric { det: 0.0 })?;
    Ok((g, christoffel_from(&ginv, &dg, n)))
}

/// Riemann tensor `R^l_ijk`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim;
        self.data[((l * n + i) * n + j) * n + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, &b| a.max(b.abs()))
    }

    /// `R(u,v)w` as a vector.
    pub fn apply(&self, u: &[f64], v: &[f64], w: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (l, o) in out.iter_mut().enumerate() {
            for i in 0..n {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if v[j] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        *o += self.get(l, i, j, k) * u[i] * v[j] * w[k];
                    }
                }
            }
        }
        out
    }
}

/// Everything curvature-related at one point.
#[derive(Debug, Clone)]
pub struct CurvatureAtPoint {
    pub metric: DMatrix<f64>,
    pub christoffel: Christoffel,
    pub riemann: Riemann,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
    pub einstein: DMatrix<f64>,
}

impl CurvatureAtPoint {
    /// `⟨R(u,v)v, u⟩`.
    pub fn curvature_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let r = self.riemann.apply(u, v, v);
        let (rv, uv) = (DVector::from_vec(r), DVector::from_column_slice(u));
        linalg::form(&self.metric, &rv, &uv)
    }

    /// `R_lijk = g_lm R^m_ijk`.
    pub fn lowered(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        (0..self.riemann.dim)
            .map(|m| self.metric[(l, m)] * self.riemann.get(m, i, j, k))
            .sum()
    }

    /// Largest `|R_lijk + R_ljki + R_lkij|`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.riemann.dim;
        let mut worst = 0.0f64;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let s = self.lowered(l, i, j, k) + self.lowered(l, j, k, i) + self.lowered(l, k, i, j);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest difference between `Ric` and a fresh contraction of `R`.
    pub fn ricci_trace_residual(&self) -> f64 {
        let n = self.riemann.dim;
        let mut worst = 0.0f64;
        for j in 0..n {
            for k in 0..n {
                let tr: f64 = (0..n).map(|i| self.riemann.get(i, i, j, k)).sum();
                worst = worst.max((tr - self.ricci[(j, k)]).abs());
            }
        }
        worst
    }

    pub fn max_abs_ricci(&self) -> f64 {
        linalg::max_abs(&self.ricci)
    }
}

pub fn curvature(chart: &MetricChart, x: &[f64]) -> Result<CurvatureAtPoint> {
    curvature_with(chart, x, &Tolerances::default())
}

pub fn curvature_with(chart: &MetricChart, x: &[f64], tol: &Tolerances) -> Result<CurvatureAtPoint> {
    chart.check_domain(x)?;
    let n = chart.dim();
    let (g, gamma) = christoffel_dual(chart, x, tol.degeneracy)?;
    let idx = |k: usize, i: usize, j: usize| (k * n + i) * n + j;
    let mut riemann = vec![0.0; n * n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = gamma[idx(l, j, k)].d[i] - gamma[idx(l, i, k)].d[j];
                    for m in 0..n {
                        r += gamma[idx(l, i, m)].v * gamma[idx(m, j, k)].v
                            - gamma[idx(l, j, m)].v * gamma[idx(m, i, k)].v;
                    }
                    riemann[((l * n + i) * n + j) * n + k] = r;
                }
            }
        }
    }
    let riemann = Riemann { dim: n, data: riemann };
    let ricci = DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| riemann.get(i, i, j, k)).sum());
    let metric = DMatrix::from_fn(n, n, |i, j| g[i * n + j].v);
    let ginv = metric
        .clone()
        .try_inverse()
        .ok_or(GeometryError::DegenerateMetric { det: 0.0 })?;
    let scalar = ginv.component_mul(&ricci).sum();
    let einstein = &ricci - &metric * (0.5 * scalar);
    let christoffel = Christoffel { dim: n, data: gamma.iter().map(|d| d.v).collect() };
    Ok(CurvatureAtPoint { metric, christoffel, riemann, ricci, scalar, einstein })
}

/// Sectional curvature of `span(u, v)`.
pub fn sectional_curvature(chart: &MetricChart, x: &[f64], u: &[f64], v: &[f64]) -> Result<f64> {
    sectional_curvature_with(chart, x, u, v, &Tolerances::default())
}

pub fn sectional_curvature_with(
    chart: &MetricChart,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    let curv = curvature_with(chart, x, tol)?;
    let (uu, vv) = (DVector::from_column_slice(u), DVector::from_column_slice(v));
    let gram = linalg::form(&curv.metric, &uu, &uu) * linalg::form(&curv.metric, &vv, &vv)
        - linalg::form(&curv.metric, &uu, &vv).powi(2);
    if gram.abs() <= tol.degeneracy {
        return Err(GeometryError::DegeneratePlane { gram: gram.abs() });
    }
    Ok(curv.curvature_form(u, v) / gram)
}

/// Stress-energy `T = (1/8π)(Ric − ½ R g)`.
pub fn stress_energy(chart: &MetricChart, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(curvature(chart, x)?.einstein / (8.0 * PI))
}

/// Largest `|∂_k g_ij − Γ^l_ki g_lj − Γ^l_kj g_il|`.
pub fn metric_compatibility_residual(chart: &MetricChart, x: &[f64]) -> Result<f64> {
    chart.check_domain(x)?;
    let n = chart.dim();
    let (g, dg) = chart.metric_with_derivatives(x);
    let (_, _, gamma) = connection_at(chart, x, Tolerances::default().degeneracy)?;
    let gm = |k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j];
    let mut worst = 0.0f64;
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut r = dg[(k * n + i) * n + j];
                for l in 0..n {
                    r -= gm(l, k, i) * g[l * n + j] + gm(l, k, j) * g[i * n + l];
                }
                worst = worst.max(r.abs());
            }
        }
    }
    Ok(worst)
}
