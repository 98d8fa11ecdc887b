//! Coordinate charts carrying a metric in closed form.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::ad::{eval, Dual, Jet2, Scalar, SharedFn, Smooth, MAX_VARS};
use crate::error::{GeometryError, Result};

/// Signature `(p, q)`: `p` negative and `q` positive directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub negative: usize,
    pub positive: usize,
}

impl Signature {
    pub const fn new(negative: usize, positive: usize) -> Self {
        Self { negative, positive }
    }

    pub fn dim(&self) -> usize {
        self.negative + self.positive
    }

    pub fn is_definite(&self) -> bool {
        self.negative == 0 || self.positive == 0
    }

    pub fn is_lorentzian(&self) -> bool {
        self.negative == 1 && self.positive >= 1
    }

    pub fn flipped(&self) -> Self {
        Self::new(self.positive, self.negative)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.negative, self.positive)
    }
}

pub type DomainFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// A coordinate chart with a smooth metric.
///
/// The metric map takes `dim` coordinates to the `dim * dim` row-major
/// components `g_ij`. Its first and second derivatives are obtained by
/// forward-mode evaluation of the same map.
#[derive(Clone)]
pub struct MetricChart {
    name: String,
    coords: Vec<String>,
    signature: Signature,
    metric: SharedFn,
    domain: DomainFn,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("coords", &self.coords)
            .field("signature", &self.signature)
            .finish()
    }
}

impl MetricChart {
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        signature: Signature,
        metric: SharedFn,
        domain: DomainFn,
    ) -> Result<Self> {
        let dim = coords.len();
        if dim == 0 || dim > MAX_VARS {
            return Err(GeometryError::BadParams(format!(
                "chart dimension must be in 1..={MAX_VARS}, got {dim}"
            )));
        }
        if signature.dim() != dim {
            return Err(GeometryError::DimensionMismatch { expected: dim, got: signature.dim() });
        }
        if metric.input_dim() != dim || metric.output_dim() != dim * dim {
            return Err(GeometryError::DimensionMismatch {
                expected: dim * dim,
                got: metric.output_dim(),
            });
        }
        Ok(Self { name: name.into(), coords, signature, metric, domain })
    }

    /// Chart whose domain is all of `R^n`.
    pub fn everywhere(
        name: impl Into<String>,
        coords: Vec<String>,
        signature: Signature,
        metric: SharedFn,
    ) -> Result<Self> {
        Self::new(name, coords, signature, metric, Arc::new(|_: &[f64]| true))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn metric_fn(&self) -> &SharedFn {
        &self.metric
    }

    pub fn domain_fn(&self) -> &DomainFn {
        &self.domain
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().all(|v| v.is_finite()) && (self.domain)(x)
    }

    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if !self.in_domain(x) {
            return Err(GeometryError::OutOfDomain { chart: self.name.clone(), point: x.to_vec() });
        }
        Ok(())
    }

    /// Metric components at any scalar type, no domain check.
    pub fn components<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        eval(self.metric.as_ref(), x)
    }

    /// `g_ij(x)` row-major.
    pub fn metric_values(&self, x: &[f64]) -> Vec<f64> {
        self.metric.eval_f64(x)
    }

    /// `(g_ij, d_k g_ij)`; derivatives stored at `k * n * n + i * n + j`.
    pub fn metric_with_derivatives(&self, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let vars: Vec<Dual> = x.iter().enumerate().map(|(i, &v)| Dual::var(v, i)).collect();
        let out = self.metric.eval_dual(&vars);
        let g = out.iter().map(|d| d.v).collect();
        let mut dg = vec![0.0; n * n * n];
        for (c, d) in out.iter().enumerate() {
            for k in 0..n {
                dg[k * n * n + c] = d.d[k];
            }
        }
        (g, dg)
    }

    /// Metric components as second-order jets seeded at `x`.
    pub fn metric_jets(&self, x: &[f64]) -> Vec<Jet2> {
        let vars: Vec<Jet2> = x.iter().enumerate().map(|(i, &v)| Jet2::var(v, i)).collect();
        self.metric.eval_jet(&vars)
    }

    /// Same chart under a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same metric restricted to a smaller domain.
    pub fn restricted(mut self, extra: DomainFn) -> Self {
        let base = self.domain.clone();
        self.domain = Arc::new(move |x: &[f64]| base(x) && extra(x));
        self
    }
}

pub fn coord_names(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Constant diagonal metric `diag(entries)`.
pub struct ConstantDiagonal {
    pub entries: Vec<f64>,
}

impl Smooth for ConstantDiagonal {
    fn input_dim(&self) -> usize {
        self.entries.len()
    }
    fn output_dim(&self) -> usize {
        self.entries.len().pow(2)
    }
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        let n = self.entries.len();
        let mut g = vec![S::cst(0.0); n * n];
        for (i, &e) in self.entries.iter().enumerate() {
            g[i * n + i] = S::cst(e);
        }
        g
    }
}

/// Constant symmetric metric given row-major.
pub struct ConstantMetric {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl Smooth for ConstantMetric {
    fn input_dim(&self) -> usize {
        self.n
    }
    fn output_dim(&self) -> usize {
        self.n * self.n
    }
    fn eval<S: Scalar>(&self, _x: &[S]) -> Vec<S> {
        self.entries.iter().map(|&e| S::cst(e)).collect()
    }
}

/// Flat `R^{p,q}` in Cartesian coordinates, negative directions first.
pub fn pseudo_euclidean(p: usize, q: usize) -> Result<MetricChart> {
    let entries: Vec<f64> = (0..p).map(|_| -1.0).chain((0..q).map(|_| 1.0)).collect();
    let coords = (0..p + q).map(|i| format!("x{i}")).collect();
    MetricChart::everywhere(
        format!("flat({p},{q})"),
        coords,
        Signature::new(p, q),
        Arc::new(ConstantDiagonal { entries }),
    )
}
