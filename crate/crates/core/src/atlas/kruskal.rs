//! Kruskal form of the Schwarzschild metric.
//!
//! With `s = r / 2m` the null coordinates satisfy `xy = u = (s − 1) e^s`,
//! which ranges over `(−1, ∞)` as `r` ranges over `(0, ∞)`; so `c(m) = −1`.
//! The metric is `F(xy) dx dy + r² dσ²` with
//! `F(u) = (32 m³ / r(u)) e^{−r(u)/2m}`, which blows up as `u → −1`.
//! On the quadrant `x, y > 0` the transition from exterior `(r, t)` is
//! `x = √(s−1) e^{s/2} e^{t/4m}`, `y = √(s−1) e^{s/2} e^{−t/4m}`,
//! so `t = 2m ln(x/y)` and the axes `xy = 0` are the horizon `r = 2m`.

use std::sync::Arc;

use crate::ad::{Dual, Scalar, Smooth};
use crate::chart::{coord_names, MetricChart, Signature};
use crate::error::{GeometryError, Result};

/// Lower bound `c(m)` of `xy` on the chart.
pub const XY_LOWER_BOUND: f64 = -1.0;

/// `s` with `(s − 1) e^s = u`, for `u > −1`.
///
/// Newton on the monotone branch `s > 0`, safeguarded by bisection.
pub fn solve_s(u: f64) -> f64 {
    if !(u > XY_LOWER_BOUND) || !u.is_finite() {
        return f64::NAN;
    }
    if u == 0.0 {
        return 1.0;
    }
    let f = |s: f64| (s - 1.0) * s.exp() - u;
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fs = f(s);
        if fs == 0.0 {
            return s;
        }
        if fs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let step = fs / (s * s.exp());
        let mut next = s - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * (1.0 + s) || hi - lo <= 1e-15 * (1.0 + s) {
            return next;
        }
        s = next;
    }
    s
}

/// `s(u)` with exact first and second derivatives by implicit
/// differentiation: `s' = 1/(s e^s)`, `s'' = −(1+s)/(s³ e^{2s})`.
fn s_of<S: Scalar>(u: S) -> S {
    let s = solve_s(u.value());
    let es = s.exp();
    u.chain(s, 1.0 / (s * es), -(1.0 + s) / (s * s * s * es * es))
}

#[derive(Debug, Clone)]
pub struct KruskalChart {
    mass: f64,
    chart: MetricChart,
}

struct KruskalMetric {
    m: f64,
}

impl KruskalMetric {
    fn f_and_r<S: Scalar>(&self, u: S) -> (S, S) {
        let m = self.m;
        let s = s_of(u);
        let r = s * (2.0 * m);
        ((-s).exp() * (32.0 * m * m * m) / r, r)
    }
}

impl Smooth for KruskalMetric {
    fn input_dim(&self) -> usize {
        4
    }
    fn output_dim(&self) -> usize {
        16
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let (f, r) = self.f_and_r(x[0] * x[1]);
        let zero = S::cst(0.0);
        let half = f * 0.5;
        let r2 = r * r;
        let sin = x[2].sin();
        vec![
            zero, half, zero, zero, //
            half, zero, zero, zero, //
            zero, zero, r2, zero, //
            zero, zero, zero, r2 * sin * sin,
        ]
    }
}

impl KruskalChart {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(GeometryError::BadParams(format!("mass must be positive, got {m}")));
        }
        let chart = MetricChart::new(
            format!("kruskal(m={m})"),
            coord_names(&["x", "y", "theta", "phi"]),
            Signature::new(1, 3),
            Arc::new(KruskalMetric { m }),
            Arc::new(|p: &[f64]| p[0] * p[1] > XY_LOWER_BOUND && p[2] > 0.0 && p[2] < std::f64::consts::PI),
        )?;
        Ok(Self { mass: m, chart })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn chart(&self) -> &MetricChart {
        &self.chart
    }

    /// `F(u)`.
    pub fn conformal_factor(&self, u: f64) -> f64 {
        KruskalMetric { m: self.mass }.f_and_r(u).0
    }

    /// `r(u) = b(u) + 2m`.
    pub fn radius(&self, u: f64) -> f64 {
        2.0 * self.mass * solve_s(u)
    }

    /// `b(u) = r(u) − 2m`.
    pub fn b(&self, u: f64) -> f64 {
        2.0 * self.mass * (solve_s(u) - 1.0)
    }

    fn transition_generic<S: Scalar>(&self, r: S, t: S) -> (S, S) {
        let m = self.mass;
        let s = r / (2.0 * m);
        let amp = (s - 1.0).sqrt() * (s * 0.5).exp();
        let phase = t / (4.0 * m);
        (amp * phase.exp(), amp * (-phase).exp())
    }

    /// Exterior `(r, t)` with `r > 2m` to Kruskal `(x, y)` with `x, y > 0`.
    pub fn transition_map(&self, r: f64, t: f64) -> Result<(f64, f64)> {
        if !(r > 2.0 * self.mass) || !t.is_finite() {
            return Err(GeometryError::OutOfDomain { chart: "schwarzschild exterior".into(), point: vec![r, t] });
        }
        Ok(self.transition_generic(r, t))
    }

    /// Inverse of [`KruskalChart::transition_map`] on `x, y > 0`.
    pub fn inverse_transition(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        if !(x > 0.0 && y > 0.0) {
            return Err(GeometryError::OutOfDomain { chart: self.chart.name().into(), point: vec![x, y] });
        }
        Ok((self.radius(x * y), 2.0 * self.mass * (x / y).ln()))
    }

    /// Largest difference between the pullback of `F(xy) dx dy` by the
    /// transition map and `dr²/(1 − 2m/r) − (1 − 2m/r) dt²` at `(r, t)`.
    pub fn pullback_residual(&self, r: f64, t: f64) -> Result<f64> {
        self.transition_map(r, t)?;
        let (x, y) = self.transition_generic(Dual::var(r, 0), Dual::var(t, 1));
        let f = self.conformal_factor(x.v * y.v);
        let pull = |a: usize, b: usize| 0.5 * f * (x.d[a] * y.d[b] + y.d[a] * x.d[b]);
        let lapse = 1.0 - 2.0 * self.mass / r;
        let want = [[1.0 / lapse, 0.0], [0.0, -lapse]];
        let mut worst = 0.0f64;
        for (a, row) in want.iter().enumerate() {
            for (b, w) in row.iter().enumerate() {
                worst = worst.max((pull(a, b) - w).abs());
            }
        }
        Ok(worst)
    }

    /// `φ^s(x, y) = (e^s x, e^{−s} y)`.
    pub fn flow(&self, s: f64, x: f64, y: f64) -> (f64, f64) {
        (s.exp() * x, (-s).exp() * y)
    }

    /// Largest difference between `(φ^s)^*(F dx dy)` and `F dx dy` at `(x, y)`.
    pub fn flow_residual(&self, s: f64, x: f64, y: f64) -> f64 {
        let (xs, ys) = (Dual::var(x, 0) * s.exp(), Dual::var(y, 1) * (-s).exp());
        let f_image = self.conformal_factor(xs.v * ys.v);
        let f_here = self.conformal_factor(x * y);
        let mut worst = 0.0f64;
        for a in 0..2 {
            for b in 0..2 {
                let pulled = 0.5 * f_image * (xs.d[a] * ys.d[b] + ys.d[a] * xs.d[b]);
                let here = if a != b { 0.5 * f_here } else { 0.0 };
                worst = worst.max((pulled - here).abs());
            }
        }
        worst
    }
}

pub fn kruskal(m: f64) -> Result<KruskalChart> {
    KruskalChart::new(m)
}
