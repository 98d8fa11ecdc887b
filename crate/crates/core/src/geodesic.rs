//! Geodesics, mechanical systems and the warped-product reduction.
//!
//! On `M = L ×_w (R, c0 dy²)` the charge `c1 = ⟨γ', ∂_y⟩ = c0 w y'` is
//! conserved, and the base curve solves the mechanical system
//! `x'' = −∇(c/w)` with `c = ½ c1² / c0`. [`integrate_reduced`] integrates
//! that base system and rebuilds the fiber coordinate from
//! `y' = c1 / (c0 w(x))`; [`integrate_direct`] solves the full geodesic
//! equation and serves as its cross-check.

use serde::{Deserialize, Serialize};

use crate::ad::{eval, jacobian, Scalar, SharedFn, Smooth, SmoothFn};
use crate::chart::MetricChart;
use crate::error::{GeometryError, Result};
use crate::killing::{killing_residual, KillingCandidate};
use crate::linalg;
use crate::ode::{self, IntegratorStats, OdeOptions, OdeSystem, Termination};
use crate::tensor::{christoffel_from, det_of, Tolerances};
use crate::warped::WarpedSpec;

/// Position, velocity and affine parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub tau: f64,
}

impl GeodesicState {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        Self { x, v, tau: 0.0 }
    }

    pub fn at(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// `⟨v, v⟩` in `chart`.
    pub fn norm(&self, chart: &MetricChart) -> f64 {
        let n = chart.dim();
        let g = chart.metric_values(&self.x);
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += g[i * n + j] * self.v[i] * self.v[j];
            }
        }
        s
    }
}

/// A named conserved quantity sampled along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monitor {
    pub name: String,
    pub values: Vec<f64>,
}

impl Monitor {
    /// Peak-to-peak variation.
    pub fn drift(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if self.values.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    /// Largest `|q(τ) − q(0)| / (1 + |q(0)|)`.
    pub fn relative_drift(&self) -> f64 {
        let Some(&q0) = self.values.first() else { return 0.0 };
        self.values.iter().fold(0.0f64, |a, &q| a.max((q - q0).abs())) / (1.0 + q0.abs())
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<GeodesicState>,
    /// `(x', v')` at each sample, used for dense output.
    derivatives: Vec<Vec<f64>>,
    pub monitors: Vec<Monitor>,
    pub stats: IntegratorStats,
    pub termination: Termination,
}

impl Trajectory {
    pub fn monitor(&self, name: &str) -> Option<&Monitor> {
        self.monitors.iter().find(|m| m.name == name)
    }

    pub fn last(&self) -> &GeodesicState {
        self.samples.last().expect("trajectory has at least the initial state")
    }

    pub fn tau_range(&self) -> (f64, f64) {
        (self.samples[0].tau, self.last().tau)
    }

    /// State at `tau` by cubic Hermite interpolation.
    pub fn at(&self, tau: f64) -> Option<GeodesicState> {
        let ts: Vec<f64> = self.samples.iter().map(|s| s.tau).collect();
        let ys: Vec<Vec<f64>> = self.samples.iter().map(|s| [s.x.as_slice(), &s.v].concat()).collect();
        let y = ode::hermite(&ts, &ys, &self.derivatives, tau)?;
        let n = y.len() / 2;
        Some(GeodesicState { x: y[..n].to_vec(), v: y[n..].to_vec(), tau })
    }

    /// Adds the charge `⟨v, K(x)⟩` as monitor `charge:<label>`.
    pub fn track_charge(&mut self, chart: &MetricChart, field: &KillingCandidate) {
        let values = self.samples.iter().map(|s| charge(chart, s, field)).collect();
        self.monitors.push(Monitor { name: format!("charge:{}", field.label()), values });
    }

    /// Largest coordinate difference to `other` over common `taus`
    /// (positions and velocities).
    pub fn sup_difference(&self, other: &Trajectory, taus: &[f64]) -> Option<f64> {
        let mut worst = 0.0f64;
        for &t in taus {
            let (a, b) = (self.at(t)?, other.at(t)?);
            for (p, q) in a.x.iter().chain(&a.v).zip(b.x.iter().chain(&b.v)) {
                worst = worst.max((p - q).abs());
            }
        }
        Some(worst)
    }
}

fn charge(chart: &MetricChart, state: &GeodesicState, field: &KillingCandidate) -> f64 {
    let n = chart.dim();
    let g = chart.metric_values(&state.x);
    let k = field.field_fn().eval_f64(&state.x);
    (0..n).map(|i| (0..n).map(|j| g[i * n + j] * state.v[i] * k[j]).sum::<f64>()).sum()
}

/// `Γ^k_ij v^i v^j` at `x`.
fn connection_term(chart: &MetricChart, x: &[f64], v: &[f64]) -> std::result::Result<(Vec<f64>, Vec<f64>), String> {
    let n = chart.dim();
    let (g, dg) = chart.metric_with_derivatives(x);
    let ginv = linalg::inverse(&g, n).ok_or_else(|| "degenerate metric".to_string())?;
    let gamma = christoffel_from(&ginv, &dg, n);
    let mut acc = vec![0.0; n];
    for (k, a) in acc.iter_mut().enumerate() {
        for i in 0..n {
            for j in 0..n {
                *a += gamma[(k * n + i) * n + j] * v[i] * v[j];
            }
        }
    }
    Ok((acc, ginv))
}

/// `γ'' = −Γ(γ', γ') − ∇V` on a chart; `V` optional.
struct MechanicalSystem<'a> {
    chart: &'a MetricChart,
    potential: Option<&'a dyn SmoothFn>,
}

impl OdeSystem for MechanicalSystem<'_> {
    fn dim(&self) -> usize {
        2 * self.chart.dim()
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> std::result::Result<(), String> {
        let n = self.chart.dim();
        let (x, v) = y.split_at(n);
        let (acc, ginv) = connection_term(self.chart, x, v)?;
        dy[..n].copy_from_slice(v);
        for k in 0..n {
            dy[n + k] = -acc[k];
        }
        if let Some(pot) = self.potential {
            let (_, dv) = jacobian(pot, x);
            for k in 0..n {
                dy[n + k] -= (0..n).map(|l| ginv[k * n + l] * dv[l]).sum::<f64>();
            }
        }
        Ok(())
    }

    fn admissible(&self, _t: f64, y: &[f64]) -> bool {
        self.chart.in_domain(&y[..self.chart.dim()])
    }

    fn fatal(&self, _t: f64, y: &[f64]) -> Option<String> {
        let n = self.chart.dim();
        let det = det_of(&self.chart.metric_values(&y[..n]), n);
        if !(det.abs() > Tolerances::default().degeneracy) {
            return Some(format!("metric degenerates: det g = {det:e}"));
        }
        let pot = self.potential?;
        let v = pot.eval_f64(&y[..self.chart.dim()])[0];
        (!v.is_finite()).then(|| format!("potential singularity: V = {v}"))
    }
}

fn trajectory_from(sol: ode::OdeSolution, n: usize) -> Trajectory {
    let samples = sol
        .ts
        .iter()
        .zip(&sol.ys)
        .map(|(&t, y)| GeodesicState { x: y[..n].to_vec(), v: y[n..2 * n].to_vec(), tau: t })
        .collect();
    Trajectory { samples, derivatives: sol.dys, monitors: Vec::new(), stats: sol.stats, termination: sol.termination }
}

fn check_init(chart: &MetricChart, init: &GeodesicState) -> Result<()> {
    chart.check_domain(&init.x)?;
    if init.v.len() != chart.dim() {
        return Err(GeometryError::DimensionMismatch { expected: chart.dim(), got: init.v.len() });
    }
    Ok(())
}

/// Integrates the geodesic equation `x''^k + Γ^k_ij x'^i x'^j = 0`.
///
/// Leaving the chart domain or hitting a step-size underflow ends the run
/// early; the partial trajectory is returned with the reason in
/// `termination`. The monitor `norm` records `⟨v, v⟩`.
pub fn integrate_direct(chart: &MetricChart, init: &GeodesicState, tau_end: f64, opts: &OdeOptions) -> Result<Trajectory> {
    check_init(chart, init)?;
    let sys = MechanicalSystem { chart, potential: None };
    let y0 = [init.x.as_slice(), &init.v].concat();
    let mut traj = trajectory_from(ode::integrate(&sys, init.tau, &y0, tau_end, opts), chart.dim());
    let norms = traj.samples.iter().map(|s| s.norm(chart)).collect();
    traj.monitors.push(Monitor { name: "norm".into(), values: norms });
    Ok(traj)
}

/// Integrates `γ'' = −∇V`; the monitor `energy` records `½⟨γ',γ'⟩ + V`.
pub fn integrate_mechanical(
    chart: &MetricChart,
    potential: &dyn SmoothFn,
    init: &GeodesicState,
    tau_end: f64,
    opts: &OdeOptions,
) -> Result<Trajectory> {
    check_init(chart, init)?;
    if potential.input_dim() != chart.dim() || potential.output_dim() != 1 {
        return Err(GeometryError::DimensionMismatch { expected: chart.dim(), got: potential.input_dim() });
    }
    let sys = MechanicalSystem { chart, potential: Some(potential) };
    let y0 = [init.x.as_slice(), &init.v].concat();
    let mut traj = trajectory_from(ode::integrate(&sys, init.tau, &y0, tau_end, opts), chart.dim());
    let energy = traj
        .samples
        .iter()
        .map(|s| 0.5 * s.norm(chart) + potential.eval_f64(&s.x)[0])
        .collect();
    traj.monitors.push(Monitor { name: "energy".into(), values: energy });
    Ok(traj)
}

/// `⟨v, K(x)⟩` after checking that `K` is Killing at `x`.
pub fn clairaut_charge(chart: &MetricChart, state: &GeodesicState, field: &KillingCandidate) -> Result<f64> {
    let residual = killing_residual(field, std::slice::from_ref(&state.x))?;
    if residual >= 1e-8 {
        return Err(GeometryError::NotKilling { label: field.label().to_string(), residual });
    }
    Ok(charge(chart, state, field))
}

/// Coordinates `k` with `∂_k g = 0` at every sample, i.e. coordinate
/// Killing directions (up to `tol` relative to the metric scale).
pub fn coordinate_killing_axes(chart: &MetricChart, samples: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let n = chart.dim();
    (0..n)
        .filter(|&k| {
            samples.iter().all(|x| {
                let (g, dg) = chart.metric_with_derivatives(x);
                let scale = 1.0 + g.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                dg[k * n * n..(k + 1) * n * n].iter().all(|d| d.abs() <= tol * scale)
            })
        })
        .collect()
}

/// `V(x) + c / w(x)` on the base of a warped product.
pub struct ReducedPotential {
    pub base_potential: Option<SharedFn>,
    pub warping: SharedFn,
    pub coefficient: f64,
}

impl Smooth for ReducedPotential {
    fn input_dim(&self) -> usize {
        self.warping.input_dim()
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let w = eval(self.warping.as_ref(), x)[0];
        let mut v = S::cst(self.coefficient) / w;
        if let Some(p) = &self.base_potential {
            v = v + eval(p.as_ref(), x)[0];
        }
        vec![v]
    }
}

/// Geodesic problem on `L ×_w (R, c0 dy²)` reduced to the base.
#[derive(Debug, Clone)]
pub struct ReducedGeodesicProblem {
    pub spec: WarpedSpec,
    /// Sign of the fiber metric.
    pub c0: f64,
    /// Clairaut charge `⟨γ', ∂_y⟩`.
    pub c1: f64,
    /// `⟨γ', γ'⟩` of the full geodesic.
    pub energy: f64,
    pub base_x: Vec<f64>,
    pub base_v: Vec<f64>,
    pub fiber_y: f64,
    /// Fiber velocity at the start; needed only by the coupled mode.
    pub fiber_v: f64,
    pub tau0: f64,
}

impl ReducedGeodesicProblem {
    /// `c` in the base potential `c / w`, i.e. `½ c1² / c0`.
    pub fn potential_coefficient(&self) -> f64 {
        0.5 * self.c1 * self.c1 / self.c0
    }

    pub fn potential(&self) -> ReducedPotential {
        ReducedPotential {
            base_potential: None,
            warping: self.spec.warping_fn().clone(),
            coefficient: self.potential_coefficient(),
        }
    }
}

/// Splits a full-chart geodesic initial state on a warped product with
/// 1-dimensional fiber into its Clairaut charge and base problem.
pub fn reduce(spec: &WarpedSpec, init: &GeodesicState) -> Result<ReducedGeodesicProblem> {
    let fiber = spec.fiber();
    if fiber.dim() != 1 {
        return Err(GeometryError::FiberNotOneDimensional { dim: fiber.dim() });
    }
    let nb = spec.base().dim();
    if init.x.len() != nb + 1 || init.v.len() != nb + 1 {
        return Err(GeometryError::DimensionMismatch { expected: nb + 1, got: init.x.len() });
    }
    let (gy, dgy) = fiber.metric_with_derivatives(&init.x[nb..]);
    let c0 = gy[0];
    if (c0.abs() - 1.0).abs() > 1e-12 || dgy[0] != 0.0 {
        return Err(GeometryError::FiberNotUnit { value: c0 });
    }
    spec.base().check_domain(&init.x[..nb])?;
    let w = spec.warping(&init.x[..nb]);
    if !(w > 0.0) {
        return Err(GeometryError::NonPositiveWarping { point: init.x[..nb].to_vec(), value: w });
    }
    let vy = init.v[nb];
    let c1 = c0 * w * vy;
    let h = spec.base().metric_values(&init.x[..nb]);
    let base_norm: f64 = (0..nb)
        .flat_map(|i| (0..nb).map(move |j| (i, j)))
        .map(|(i, j)| h[i * nb + j] * init.v[i] * init.v[j])
        .sum();
    Ok(ReducedGeodesicProblem {
        spec: spec.clone(),
        c0,
        c1,
        energy: base_norm + c0 * w * vy * vy,
        base_x: init.x[..nb].to_vec(),
        base_v: init.v[..nb].to_vec(),
        fiber_y: init.x[nb],
        fiber_v: vy,
        tau0: init.tau,
    })
}

/// How the fiber coordinate is recovered from the base motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FiberCoupling {
    /// `y' = c1 / (c0 w)` from the Clairaut integral.
    Clairaut,
    /// `y'' = −(d/dτ log w) y'` with the base driven by `½ c0 y'² ∇w`;
    /// also valid when the fiber velocity is lightlike.
    Coupled,
}

struct ReducedSystem<'a> {
    problem: &'a ReducedGeodesicProblem,
    coupling: FiberCoupling,
}

impl ReducedSystem<'_> {
    fn base_dim(&self) -> usize {
        self.problem.spec.base().dim()
    }
}

impl OdeSystem for ReducedSystem<'_> {
    fn dim(&self) -> usize {
        match self.coupling {
            FiberCoupling::Clairaut => 2 * self.base_dim() + 1,
            FiberCoupling::Coupled => 2 * self.base_dim() + 2,
        }
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> std::result::Result<(), String> {
        let nb = self.base_dim();
        let spec = &self.problem.spec;
        let (x, v) = (&y[..nb], &y[nb..2 * nb]);
        let (acc, hinv) = connection_term(spec.base(), x, v)?;
        let (w, dw) = jacobian(spec.warping_fn().as_ref(), x);
        let w = w[0];
        if !(w > 0.0) || !w.is_finite() {
            return Err(format!("potential singularity: w = {w}"));
        }
        let grad: Vec<f64> = (0..nb).map(|k| (0..nb).map(|l| hinv[k * nb + l] * dw[l]).sum()).collect();
        dy[..nb].copy_from_slice(v);
        let (c0, c1) = (self.problem.c0, self.problem.c1);
        match self.coupling {
            FiberCoupling::Clairaut => {
                // −∇(c/w) = c ∇w / w²
                let c = self.problem.potential_coefficient();
                for k in 0..nb {
                    dy[nb + k] = -acc[k] + c * grad[k] / (w * w);
                }
                dy[2 * nb] = c1 / (c0 * w);
            }
            FiberCoupling::Coupled => {
                let u = y[2 * nb + 1];
                for k in 0..nb {
                    dy[nb + k] = -acc[k] + 0.5 * c0 * u * u * grad[k];
                }
                let dlogw: f64 = (0..nb).map(|l| dw[l] * v[l]).sum::<f64>() / w;
                dy[2 * nb] = u;
                dy[2 * nb + 1] = -dlogw * u;
            }
        }
        Ok(())
    }

    fn admissible(&self, _t: f64, y: &[f64]) -> bool {
        self.problem.spec.base().in_domain(&y[..self.base_dim()])
    }

    fn fatal(&self, _t: f64, y: &[f64]) -> Option<String> {
        let w = self.problem.spec.warping(&y[..self.base_dim()]);
        (!(w > 1e-300) || !w.is_finite()).then(|| format!("potential singularity: w = {w}"))
    }
}

/// Integrates the reduced problem and reassembles full-chart states.
///
/// Monitors: `norm` (full `⟨γ',γ'⟩`), `clairaut` (`c0 w y'`) and
/// `fiber_speed` (`⟨y',y'⟩ w = c0 w² y'²`, equal to `c1²/c0` in exact
/// arithmetic).
pub fn integrate_reduced(problem: &ReducedGeodesicProblem, tau_end: f64, opts: &OdeOptions) -> Result<Trajectory> {
    integrate_reduced_with(problem, tau_end, opts, FiberCoupling::Clairaut)
}

pub fn integrate_reduced_with(
    problem: &ReducedGeodesicProblem,
    tau_end: f64,
    opts: &OdeOptions,
    coupling: FiberCoupling,
) -> Result<Trajectory> {
    let spec = &problem.spec;
    let nb = spec.base().dim();
    spec.base().check_domain(&problem.base_x)?;
    let sys = ReducedSystem { problem, coupling };
    let mut y0 = [problem.base_x.as_slice(), &problem.base_v, &[problem.fiber_y]].concat();
    if coupling == FiberCoupling::Coupled {
        y0.push(problem.fiber_v);
    }
    let sol = ode::integrate(&sys, problem.tau0, &y0, tau_end, opts);

    let (c0, c1) = (problem.c0, problem.c1);
    let mut samples = Vec::with_capacity(sol.ts.len());
    let mut derivatives = Vec::with_capacity(sol.ts.len());
    let (mut norm, mut clairaut, mut speed) = (Vec::new(), Vec::new(), Vec::new());
    for ((&t, y), dy) in sol.ts.iter().zip(&sol.ys).zip(&sol.dys) {
        let x = &y[..nb];
        let (wv, dw) = jacobian(spec.warping_fn().as_ref(), x);
        let w = wv[0];
        let vy = match coupling {
            FiberCoupling::Clairaut => c1 / (c0 * w),
            FiberCoupling::Coupled => y[2 * nb + 1],
        };
        let dlogw: f64 = (0..nb).map(|l| dw[l] * y[nb + l]).sum::<f64>() / w;
        let mut full_x = x.to_vec();
        full_x.push(y[2 * nb]);
        let mut full_v = y[nb..2 * nb].to_vec();
        full_v.push(vy);
        let mut d = dy[..2 * nb].to_vec();
        d.insert(nb, vy);
        d.push(-dlogw * vy);
        derivatives.push(d);

        let h = spec.base().metric_values(x);
        let base_norm: f64 = (0..nb)
            .flat_map(|i| (0..nb).map(move |j| (i, j)))
            .map(|(i, j)| h[i * nb + j] * full_v[i] * full_v[j])
            .sum();
        norm.push(base_norm + c0 * w * vy * vy);
        clairaut.push(c0 * w * vy);
        speed.push(c0 * vy * vy * w * w);
        samples.push(GeodesicState { x: full_x, v: full_v, tau: t });
    }
    Ok(Trajectory {
        samples,
        derivatives,
        monitors: vec![
            Monitor { name: "norm".into(), values: norm },
            Monitor { name: "clairaut".into(), values: clairaut },
            Monitor { name: "fiber_speed".into(), values: speed },
        ],
        stats: sol.stats,
        termination: sol.termination,
    })
}
