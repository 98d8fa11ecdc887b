//! Warped products `L ×_w N` and coordinate-foliation diagnostics.
//!
//! A warped product carries the block metric `h(x) ⊕ w(x)·g(y)`. Its base
//! leaves `L × {y}` are totally geodesic and its fiber leaves `{x} × N` are
//! spherical: umbilic with shape vector `n = −½ ∇w / w` parallel along the
//! leaf. [`classify_foliation`] measures both properties on coordinate
//! slices of an arbitrary chart and [`detect_warped_structure`] turns them
//! into a yes/no answer with a reconstructed warping function.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ad::{eval, Dual, Scalar, SharedFn, Smooth, SmoothFn};
use crate::chart::{MetricChart, Signature};
use crate::error::{GeometryError, Result};
use crate::linalg;
use crate::tensor::{christoffel_dual, Tolerances};

/// Base chart, fiber chart and a positive warping function on the base.
#[derive(Clone)]
pub struct WarpedSpec {
    label: String,
    base: MetricChart,
    fiber: MetricChart,
    warping: SharedFn,
    probes: Vec<Vec<f64>>,
}

impl std::fmt::Debug for WarpedSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WarpedSpec")
            .field("label", &self.label)
            .field("base", &self.base)
            .field("fiber", &self.fiber)
            .finish()
    }
}

impl WarpedSpec {
    pub fn new(
        label: impl Into<String>,
        base: MetricChart,
        fiber: MetricChart,
        warping: SharedFn,
    ) -> Result<Self> {
        if warping.input_dim() != base.dim() || warping.output_dim() != 1 {
            return Err(GeometryError::DimensionMismatch {
                expected: base.dim(),
                got: warping.input_dim(),
            });
        }
        if base.dim() + fiber.dim() > crate::ad::MAX_VARS {
            return Err(GeometryError::BadParams(format!(
                "total dimension {} exceeds {}",
                base.dim() + fiber.dim(),
                crate::ad::MAX_VARS
            )));
        }
        Ok(Self { label: label.into(), base, fiber, warping, probes: Vec::new() })
    }

    /// Base points at which [`WarpedSpec::assemble`] checks `w > 0`.
    pub fn with_probes(mut self, probes: Vec<Vec<f64>>) -> Self {
        self.probes = probes;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn base(&self) -> &MetricChart {
        &self.base
    }

    pub fn fiber(&self) -> &MetricChart {
        &self.fiber
    }

    pub fn warping_fn(&self) -> &SharedFn {
        &self.warping
    }

    pub fn probes(&self) -> &[Vec<f64>] {
        &self.probes
    }

    pub fn dim(&self) -> usize {
        self.base.dim() + self.fiber.dim()
    }

    pub fn base_axes(&self) -> Vec<usize> {
        (0..self.base.dim()).collect()
    }

    pub fn fiber_axes(&self) -> Vec<usize> {
        (self.base.dim()..self.dim()).collect()
    }

    pub fn signature(&self) -> Signature {
        let (b, f) = (self.base.signature(), self.fiber.signature());
        Signature::new(b.negative + f.negative, b.positive + f.positive)
    }

    pub fn warping<S: Scalar>(&self, x_base: &[S]) -> S {
        eval(self.warping.as_ref(), x_base)[0]
    }

    /// `∇w` on the base, index raised with `h`.
    pub fn warping_gradient(&self, x_base: &[f64]) -> Result<Vec<f64>> {
        let n = self.base.dim();
        let (_, dw) = crate::ad::jacobian(self.warping.as_ref(), x_base);
        let h = self.base.metric_values(x_base);
        let hinv = linalg::inverse(&h, n).ok_or(GeometryError::DegenerateMetric { det: 0.0 })?;
        Ok((0..n).map(|i| (0..n).map(|j| hinv[i * n + j] * dw[j]).sum()).collect())
    }

    /// `−½ (∇w / w, 0)` at a full-chart point.
    pub fn expected_shape_vector(&self, x: &[f64]) -> Result<Vec<f64>> {
        let nb = self.base.dim();
        let w = self.warping(&x[..nb]);
        let grad = self.warping_gradient(&x[..nb])?;
        let mut n: Vec<f64> = grad.iter().map(|g| -0.5 * g / w).collect();
        n.resize(self.dim(), 0.0);
        Ok(n)
    }

    /// Product chart over `(x, y)` with metric `h(x) ⊕ w(x) g(y)`.
    pub fn assemble(&self) -> Result<MetricChart> {
        for p in &self.probes {
            let w = self.warping(p.as_slice());
            if !(w > 0.0) {
                return Err(GeometryError::NonPositiveWarping { point: p.clone(), value: w });
            }
        }
        let nb = self.base.dim();
        let metric = ProductMetric {
            base: self.base.metric_fn().clone(),
            fiber: self.fiber.metric_fn().clone(),
            warping: self.warping.clone(),
            base_dim: nb,
            fiber_dim: self.fiber.dim(),
            warping_on_full: false,
        };
        let (bd, fd, w) = (self.base.domain_fn().clone(), self.fiber.domain_fn().clone(), self.warping.clone());
        let domain = Arc::new(move |x: &[f64]| bd(&x[..nb]) && fd(&x[nb..]) && w.eval_f64(&x[..nb])[0] > 0.0);
        let coords = self.base.coords().iter().chain(self.fiber.coords()).cloned().collect();
        MetricChart::new(self.label.clone(), coords, self.signature(), Arc::new(metric), domain)
    }
}

/// Twisted product `h(x) ⊕ w(x, y) g(y)`: the warping may depend on the
/// fiber too. With `w` a function of `x` alone this is a warped product.
pub fn twisted_product(
    label: impl Into<String>,
    base: &MetricChart,
    fiber: &MetricChart,
    warping: SharedFn,
) -> Result<MetricChart> {
    let nb = base.dim();
    let total = nb + fiber.dim();
    if warping.input_dim() != total || warping.output_dim() != 1 {
        return Err(GeometryError::DimensionMismatch { expected: total, got: warping.input_dim() });
    }
    let metric = ProductMetric {
        base: base.metric_fn().clone(),
        fiber: fiber.metric_fn().clone(),
        warping: warping.clone(),
        base_dim: nb,
        fiber_dim: fiber.dim(),
        warping_on_full: true,
    };
    let (bd, fd) = (base.domain_fn().clone(), fiber.domain_fn().clone());
    let domain = Arc::new(move |x: &[f64]| bd(&x[..nb]) && fd(&x[nb..]) && warping.eval_f64(x)[0] > 0.0);
    let (b, f) = (base.signature(), fiber.signature());
    let coords = base.coords().iter().chain(fiber.coords()).cloned().collect();
    MetricChart::new(
        label,
        coords,
        Signature::new(b.negative + f.negative, b.positive + f.positive),
        Arc::new(metric),
        domain,
    )
}

struct ProductMetric {
    base: SharedFn,
    fiber: SharedFn,
    warping: SharedFn,
    base_dim: usize,
    fiber_dim: usize,
    warping_on_full: bool,
}

impl Smooth for ProductMetric {
    fn input_dim(&self) -> usize {
        self.base_dim + self.fiber_dim
    }
    fn output_dim(&self) -> usize {
        (self.base_dim + self.fiber_dim).pow(2)
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (nb, nf) = (self.base_dim, self.fiber_dim);
        let n = nb + nf;
        let h = eval(self.base.as_ref(), &x[..nb]);
        let g = eval(self.fiber.as_ref(), &x[nb..]);
        let w = if self.warping_on_full {
            eval(self.warping.as_ref(), x)[0]
        } else {
            eval(self.warping.as_ref(), &x[..nb])[0]
        };
        let mut out = vec![S::cst(0.0); n * n];
        for i in 0..nb {
            for j in 0..nb {
                out[i * n + j] = h[i * nb + j];
            }
        }
        for a in 0..nf {
            for b in 0..nf {
                out[(nb + a) * n + nb + b] = w * g[a * nf + b];
            }
        }
        out
    }
}

/// Second fundamental form of a coordinate leaf at one point.
#[derive(Debug, Clone)]
pub struct SecondFundamentalForm {
    leaf_axes: Vec<usize>,
    dim: usize,
    /// Induced metric on the leaf in coordinate basis.
    pub induced: DMatrix<f64>,
    /// `II(∂_a, ∂_b)` for leaf axes `a, b`, stored `a * k + b`.
    values: Vec<Vec<f64>>,
    shape: Vec<f64>,
}

impl SecondFundamentalForm {
    pub fn leaf_axes(&self) -> &[usize] {
        &self.leaf_axes
    }

    /// Normal vector `II(∂_a, ∂_b)` (full-chart components), `a, b` being
    /// positions within `leaf_axes`.
    pub fn get(&self, a: usize, b: usize) -> &[f64] {
        &self.values[a * self.leaf_axes.len() + b]
    }

    /// `II` on arbitrary leaf-tangent coefficient vectors.
    pub fn apply(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let k = self.leaf_axes.len();
        let mut out = vec![0.0; self.dim];
        for a in 0..k {
            for b in 0..k {
                let c = u[a] * v[b];
                if c != 0.0 {
                    for (o, x) in out.iter_mut().zip(self.get(a, b)) {
                        *o += c * x;
                    }
                }
            }
        }
        out
    }

    /// Best umbilic fit `n = (1/k) tr_f II`.
    pub fn shape_vector(&self) -> &[f64] {
        &self.shape
    }

    /// Largest component of `II` over an orthonormal leaf basis.
    pub fn norm(&self) -> f64 {
        let (e, _) = linalg::orthonormal_frame(&self.induced);
        let k = self.leaf_axes.len();
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in a..k {
                let ea: Vec<f64> = e.column(a).iter().cloned().collect();
                let eb: Vec<f64> = e.column(b).iter().cloned().collect();
                worst = self.apply(&ea, &eb).iter().fold(worst, |m, x| m.max(x.abs()));
            }
        }
        worst
    }

    /// Largest component of `II(e_a, e_b) − ⟨e_a, e_b⟩ n` over an
    /// orthonormal leaf basis.
    pub fn umbilic_residual(&self) -> f64 {
        let (e, signs) = linalg::orthonormal_frame(&self.induced);
        let k = self.leaf_axes.len();
        let mut worst = 0.0f64;
        for a in 0..k {
            for b in a..k {
                let ea: Vec<f64> = e.column(a).iter().cloned().collect();
                let eb: Vec<f64> = e.column(b).iter().cloned().collect();
                let ii = self.apply(&ea, &eb);
                let f = if a == b { signs[a] } else { 0.0 };
                for (x, nv) in ii.iter().zip(&self.shape) {
                    worst = worst.max((x - f * nv).abs());
                }
            }
        }
        worst
    }
}

/// Leaf-level quantities at one point, generic so that the shape vector
/// can be differentiated.
struct LeafGeometry<S> {
    values: Vec<Vec<S>>,
    shape: Vec<S>,
    induced: Vec<S>,
    finv: Vec<S>,
}

fn leaf_geometry<S: Scalar>(g: &[S], gamma: &[S], n: usize, leaf: &[usize]) -> Option<LeafGeometry<S>> {
    let k = leaf.len();
    let induced: Vec<S> = (0..k * k).map(|c| g[leaf[c / k] * n + leaf[c % k]]).collect();
    let finv = linalg::inverse(&induced, k)?;
    let project = |v: &[S]| normal_part(g, n, leaf, &finv, v);
    let mut values = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k {
            let nab: Vec<S> = (0..n).map(|m| gamma[(m * n + leaf[a]) * n + leaf[b]]).collect();
            values.push(project(&nab));
        }
    }
    let mut shape = vec![S::cst(0.0); n];
    for a in 0..k {
        for b in 0..k {
            let fab = finv[a * k + b];
            for m in 0..n {
                shape[m] = shape[m] + fab * values[a * k + b][m];
            }
        }
    }
    let kk = k as f64;
    shape.iter_mut().for_each(|s| *s = *s / kk);
    Some(LeafGeometry { values, shape, induced, finv })
}

/// `v − Σ ∂_a f^{ab} ⟨∂_b, v⟩`.
fn normal_part<S: Scalar>(g: &[S], n: usize, leaf: &[usize], finv: &[S], v: &[S]) -> Vec<S> {
    let k = leaf.len();
    let inner: Vec<S> = leaf
        .iter()
        .map(|&b| (0..n).fold(S::cst(0.0), |s, m| s + g[b * n + m] * v[m]))
        .collect();
    let mut out = v.to_vec();
    for a in 0..k {
        let mut c = S::cst(0.0);
        for b in 0..k {
            c = c + finv[a * k + b] * inner[b];
        }
        out[leaf[a]] = out[leaf[a]] - c;
    }
    out
}

fn validate_axes(chart: &MetricChart, axes: &[usize]) -> Result<()> {
    let n = chart.dim();
    let mut seen = vec![false; n];
    for &a in axes {
        if a >= n || seen[a] {
            return Err(GeometryError::BadParams(format!("invalid leaf axes {axes:?} for dimension {n}")));
        }
        seen[a] = true;
    }
    if axes.is_empty() {
        return Err(GeometryError::BadParams("empty leaf axes".into()));
    }
    Ok(())
}

fn check_leaf(induced: &[f64], axes: &[usize], tol: f64) -> Result<()> {
    let k = axes.len();
    let det = linalg::to_matrix(induced, k).determinant();
    if !det.is_finite() || det.abs() <= tol {
        return Err(GeometryError::DegenerateLeaf { axes: axes.to_vec(), det });
    }
    Ok(())
}

/// Second fundamental form of the coordinate slice spanned by `leaf_axes`.
pub fn second_fundamental_form(chart: &MetricChart, leaf_axes: &[usize], x: &[f64]) -> Result<SecondFundamentalForm> {
    validate_axes(chart, leaf_axes)?;
    chart.check_domain(x)?;
    let n = chart.dim();
    let tol = Tolerances::default().degeneracy;
    let (g, _, gamma) = crate::tensor::connection_at(chart, x, tol)?;
    let k = leaf_axes.len();
    let induced: Vec<f64> = (0..k * k).map(|c| g[leaf_axes[c / k] * n + leaf_axes[c % k]]).collect();
    check_leaf(&induced, leaf_axes, tol)?;
    let geo = leaf_geometry(&g, &gamma, n, leaf_axes).ok_or(GeometryError::DegenerateLeaf {
        axes: leaf_axes.to_vec(),
        det: 0.0,
    })?;
    Ok(SecondFundamentalForm {
        leaf_axes: leaf_axes.to_vec(),
        dim: n,
        induced: linalg::to_matrix(&geo.induced, k),
        values: geo.values,
        shape: geo.shape,
    })
}

/// Largest normal component of `∇_u n` over an orthonormal leaf basis.
pub fn spherical_residual_at(chart: &MetricChart, leaf_axes: &[usize], x: &[f64]) -> Result<f64> {
    validate_axes(chart, leaf_axes)?;
    chart.check_domain(x)?;
    let n = chart.dim();
    let k = leaf_axes.len();
    let (g, gamma) = christoffel_dual(chart, x, Tolerances::default().degeneracy)?;
    let geo = leaf_geometry(&g, &gamma, n, leaf_axes).ok_or(GeometryError::DegenerateLeaf {
        axes: leaf_axes.to_vec(),
        det: 0.0,
    })?;
    let gv: Vec<f64> = g.iter().map(|d| d.v).collect();
    let gammav: Vec<f64> = gamma.iter().map(|d| d.v).collect();
    let finv: Vec<f64> = geo.finv.iter().map(|d| d.v).collect();
    let shape: Vec<f64> = geo.shape.iter().map(|d| d.v).collect();
    // ∇_{∂_a} n for each leaf axis a
    let mut cov: Vec<Vec<f64>> = Vec::with_capacity(k);
    for &a in leaf_axes {
        let v: Vec<f64> = (0..n)
            .map(|m| geo.shape[m].d[a] + (0..n).map(|l| gammav[(m * n + a) * n + l] * shape[l]).sum::<f64>())
            .collect();
        cov.push(normal_part(&gv, n, leaf_axes, &finv, &v));
    }
    let induced: Vec<f64> = geo.induced.iter().map(|d: &Dual| d.v).collect();
    let (e, _) = linalg::orthonormal_frame(&linalg::to_matrix(&induced, k));
    let mut worst = 0.0f64;
    for c in 0..k {
        for m in 0..n {
            let s: f64 = (0..k).map(|a| e[(a, c)] * cov[a][m]).sum();
            worst = worst.max(s.abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Geodesic,
    SphericalUmbilic,
    UmbilicOnly,
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoliationReport {
    pub leaf_axes: Vec<usize>,
    pub orthogonal_residual: f64,
    pub second_fundamental_norm: f64,
    pub umbilic_residual: f64,
    pub spherical_residual: f64,
    pub shape_vector: Vec<Vec<f64>>,
    pub verdict: Verdict,
    /// Set when the leaf and its complement are not orthogonal; the verdict
    /// is then forced to `None`.
    pub non_orthogonal: bool,
}

/// Classifies the coordinate foliation with leaves spanned by `leaf_axes`.
///
/// A residual counts as zero at a sample when it is below
/// `tol · (1 + max |g_ij|)` there.
pub fn classify_foliation(
    chart: &MetricChart,
    leaf_axes: &[usize],
    region: &[Vec<f64>],
    tol: f64,
) -> Result<FoliationReport> {
    validate_axes(chart, leaf_axes)?;
    if region.is_empty() {
        return Err(GeometryError::BadParams("empty sample region".into()));
    }
    let n = chart.dim();
    let complement: Vec<usize> = (0..n).filter(|i| !leaf_axes.contains(i)).collect();
    let degeneracy = Tolerances::default().degeneracy;

    let mut report = FoliationReport {
        leaf_axes: leaf_axes.to_vec(),
        orthogonal_residual: 0.0,
        second_fundamental_norm: 0.0,
        umbilic_residual: 0.0,
        spherical_residual: 0.0,
        shape_vector: Vec::with_capacity(region.len()),
        verdict: Verdict::None,
        non_orthogonal: false,
    };
    let (mut orth_ok, mut geo_ok, mut umb_ok, mut sph_ok) = (true, true, true, true);
    for x in region {
        chart.check_domain(x)?;
        let g = chart.metric_values(x);
        let scale = tol * (1.0 + g.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        if !complement.is_empty() {
            let kc = complement.len();
            let comp: Vec<f64> = (0..kc * kc).map(|c| g[complement[c / kc] * n + complement[c % kc]]).collect();
            check_leaf(&comp, &complement, degeneracy)?;
        }
        let orth = leaf_axes
            .iter()
            .flat_map(|&i| complement.iter().map(move |&j| (i, j)))
            .fold(0.0f64, |a, (i, j)| a.max(g[i * n + j].abs()));
        let sff = second_fundamental_form(chart, leaf_axes, x)?;
        let norm = sff.norm();
        let umb = sff.umbilic_residual();
        let sph = spherical_residual_at(chart, leaf_axes, x)?;

        orth_ok &= orth < scale;
        geo_ok &= norm < scale;
        umb_ok &= umb < scale;
        sph_ok &= sph < scale;
        report.orthogonal_residual = report.orthogonal_residual.max(orth);
        report.second_fundamental_norm = report.second_fundamental_norm.max(norm);
        report.umbilic_residual = report.umbilic_residual.max(umb);
        report.spherical_residual = report.spherical_residual.max(sph);
        report.shape_vector.push(sff.shape_vector().to_vec());
    }
    report.non_orthogonal = !orth_ok;
    report.verdict = if !orth_ok {
        Verdict::None
    } else if geo_ok {
        Verdict::Geodesic
    } else if umb_ok && sph_ok {
        Verdict::SphericalUmbilic
    } else if umb_ok {
        Verdict::UmbilicOnly
    } else {
        Verdict::None
    };
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WarpedDetection {
    pub detected: bool,
    pub base: FoliationReport,
    pub fiber: FoliationReport,
    /// `(sample point, w / w(reference))` for every region sample.
    pub reconstructed: Vec<(Vec<f64>, f64)>,
}

/// Decides whether the split `(axes_l, axes_n)` is a local warped product
/// with `axes_n` as normal factor, and if so reconstructs `w` normalised to
/// 1 at the first sample's base point.
pub fn detect_warped_structure(
    chart: &MetricChart,
    axes_l: &[usize],
    axes_n: &[usize],
    region: &[Vec<f64>],
    tol: f64,
) -> Result<WarpedDetection> {
    let n = chart.dim();
    let mut all: Vec<usize> = axes_l.iter().chain(axes_n).cloned().collect();
    all.sort_unstable();
    if all != (0..n).collect::<Vec<_>>() {
        return Err(GeometryError::BadParams(format!(
            "split {axes_l:?} / {axes_n:?} does not partition {n} coordinates"
        )));
    }
    let base = classify_foliation(chart, axes_l, region, tol)?;
    let fiber = classify_foliation(chart, axes_n, region, tol)?;
    let detected = !base.non_orthogonal
        && base.verdict == Verdict::Geodesic
        && matches!(fiber.verdict, Verdict::SphericalUmbilic | Verdict::Geodesic);

    let mut reconstructed = Vec::new();
    if detected {
        let reference = &region[0];
        // fiber-block component with the largest magnitude at the reference
        let g0 = chart.metric_values(reference);
        let (a, b) = axes_n
            .iter()
            .flat_map(|&a| axes_n.iter().map(move |&b| (a, b)))
            .max_by(|p, q| g0[p.0 * n + p.1].abs().total_cmp(&g0[q.0 * n + q.1].abs()))
            .unwrap();
        for x in region {
            let mut at_ref = x.clone();
            for &i in axes_l {
                at_ref[i] = reference[i];
            }
            chart.check_domain(&at_ref)?;
            let num = chart.metric_values(x)[a * n + b];
            let den = chart.metric_values(&at_ref)[a * n + b];
            reconstructed.push((x.clone(), num / den));
        }
    }
    Ok(WarpedDetection { detected, base, fiber, reconstructed })
}

/// Normal projection of the coordinate field `∂_axis` onto the orthogonal
/// complement of a coordinate leaf, as a smooth vector field.
pub struct NormalCoordinateField {
    chart: MetricChart,
    leaf_axes: Vec<usize>,
    axis: usize,
}

impl NormalCoordinateField {
    pub fn new(chart: MetricChart, leaf_axes: Vec<usize>, axis: usize) -> Self {
        Self { chart, leaf_axes, axis }
    }
}

impl Smooth for NormalCoordinateField {
    fn input_dim(&self) -> usize {
        self.chart.dim()
    }
    fn output_dim(&self) -> usize {
        self.chart.dim()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let n = self.chart.dim();
        let g = self.chart.components(x);
        let k = self.leaf_axes.len();
        let induced: Vec<S> = (0..k * k).map(|c| g[self.leaf_axes[c / k] * n + self.leaf_axes[c % k]]).collect();
        let finv = linalg::inverse(&induced, k).unwrap_or_else(|| vec![S::cst(f64::NAN); k * k]);
        let mut e = vec![S::cst(0.0); n];
        e[self.axis] = S::cst(1.0);
        normal_part(&g, n, &self.leaf_axes, &finv, &e)
    }
}

/// `max |(L_X f)(e_a, e_b) + 2⟨II(e_a, e_b), X⟩|` over an orthonormal leaf
/// basis, for a vector field `X` normal to the leaf.
pub fn lie_derivative_identity_check(
    chart: &MetricChart,
    leaf_axes: &[usize],
    field: &dyn SmoothFn,
    x: &[f64],
) -> Result<f64> {
    validate_axes(chart, leaf_axes)?;
    chart.check_domain(x)?;
    let n = chart.dim();
    if field.input_dim() != n || field.output_dim() != n {
        return Err(GeometryError::DimensionMismatch { expected: n, got: field.output_dim() });
    }
    let sff = second_fundamental_form(chart, leaf_axes, x)?;
    let (g, dg) = chart.metric_with_derivatives(x);
    let (xv, jac) = crate::ad::jacobian(field, x);
    let k = leaf_axes.len();
    let scale = 1.0 + g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    for &i in leaf_axes {
        let dot: f64 = (0..n).map(|m| g[i * n + m] * xv[m]).sum();
        if dot.abs() > 1e-8 * scale * (1.0 + xv.iter().fold(0.0f64, |a, b| a.max(b.abs()))) {
            return Err(GeometryError::BadParams(format!(
                "field is not normal to the leaf (⟨X, ∂_{i}⟩ = {dot:e})"
            )));
        }
    }
    let mut diff = DMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            let (i, j) = (leaf_axes[a], leaf_axes[b]);
            let mut lie = 0.0;
            for m in 0..n {
                lie += xv[m] * dg[(m * n + i) * n + j]
                    + g[m * n + j] * jac[m * n + i]
                    + g[i * n + m] * jac[m * n + j];
            }
            let ii = sff.get(a, b);
            let pairing: f64 = (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).map(|(p, q)| g[p * n + q] * ii[p] * xv[q]).sum();
            diff[(a, b)] = lie + 2.0 * pairing;
        }
    }
    let (e, _) = linalg::orthonormal_frame(&sff.induced);
    Ok(linalg::max_abs(&(e.transpose() * diff * e)))
}
