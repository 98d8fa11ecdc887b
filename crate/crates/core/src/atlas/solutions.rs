//! Closed-form metrics and warping functions of the bundled solutions.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::ad::{Scalar, SharedFn, Smooth};
use crate::chart::{coord_names, pseudo_euclidean, ConstantDiagonal, MetricChart, Signature};
use crate::error::{GeometryError, Result};
use crate::expr::Expression;
use crate::warped::{twisted_product, WarpedSpec};

use super::quadric::Quadric;

/// `scale · x_axis^power`.
pub struct CoordPower {
    pub dim: usize,
    pub axis: usize,
    pub power: i32,
    pub scale: f64,
}

impl Smooth for CoordPower {
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x[self.axis].powi(self.power) * self.scale]
    }
}

/// `e^{rate · x_0}`.
pub struct ExpRate {
    pub rate: f64,
}

impl Smooth for ExpRate {
    fn input_dim(&self) -> usize {
        1
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![(x[0] * self.rate).exp()]
    }
}

/// `sign · (1 − 2m / x_0)` on a `dim`-dimensional base.
pub struct Lapse {
    pub dim: usize,
    pub m: f64,
    pub sign: f64,
}

impl Smooth for Lapse {
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![(S::cst(1.0) - S::cst(2.0 * self.m) / x[0]) * self.sign]
    }
}

/// Euclidean norm of the coordinate vector.
pub struct Radius {
    pub dim: usize,
}

impl Smooth for Radius {
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        vec![x.iter().fold(S::cst(0.0), |acc, &v| acc + v * v).sqrt()]
    }
}

/// `dr² / (1 − 2m/r) − (1 − 2m/r) dt²` on `(r, t)`.
pub struct SchwarzschildPlane {
    pub m: f64,
}

impl Smooth for SchwarzschildPlane {
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        4
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let lapse = S::cst(1.0) - S::cst(2.0 * self.m) / x[0];
        let zero = S::cst(0.0);
        vec![S::cst(1.0) / lapse, zero, zero, -lapse]
    }
}

/// `dr² / (1 − 2m/r) + r² (dθ² + sin²θ dφ²)` on `(r, θ, φ)`.
pub struct SchwarzschildSpatial {
    pub m: f64,
}

impl Smooth for SchwarzschildSpatial {
    fn input_dim(&self) -> usize {
        3
    }
    fn output_dim(&self) -> usize {
        9
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let lapse = S::cst(1.0) - S::cst(2.0 * self.m) / x[0];
        let r2 = x[0] * x[0];
        let s = x[1].sin();
        let zero = S::cst(0.0);
        vec![S::cst(1.0) / lapse, zero, zero, zero, r2, zero, zero, zero, r2 * s * s]
    }
}

/// `dθ² + sin²θ dφ²`.
pub struct RoundSphere2;

impl Smooth for RoundSphere2 {
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        4
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let s = x[0].sin();
        let zero = S::cst(0.0);
        vec![S::cst(1.0), zero, zero, s * s]
    }
}

/// `dx² + e^x dy² + dz²`: a 3-metric of non-constant curvature.
pub struct DeformedFlat3;

impl Smooth for DeformedFlat3 {
    fn input_dim(&self) -> usize {
        3
    }
    fn output_dim(&self) -> usize {
        9
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let zero = S::cst(0.0);
        let one = S::cst(1.0);
        vec![one, zero, zero, zero, x[0].exp(), zero, zero, zero, one]
    }
}

/// Warping of the twisted plane on full coordinates `(x, y)`.
pub struct TwistedWarp {
    pub epsilon: f64,
    /// `e^x (1 + ε y²)` when `true`, `e^{x (1 + ε y²)}` otherwise.
    pub separable: bool,
}

impl Smooth for TwistedWarp {
    fn input_dim(&self) -> usize {
        2
    }
    fn output_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        let bump = S::cst(1.0) + x[1] * x[1] * self.epsilon;
        if self.separable {
            vec![x[0].exp() * bump]
        } else {
            vec![(x[0] * bump).exp()]
        }
    }
}

fn line(name: &str, sign: f64, domain: Option<crate::chart::DomainFn>) -> Result<MetricChart> {
    let sig = if sign < 0.0 { Signature::new(1, 0) } else { Signature::new(0, 1) };
    let metric = Arc::new(ConstantDiagonal { entries: vec![sign] });
    match domain {
        Some(d) => MetricChart::new(name, coord_names(&[name]), sig, metric, d),
        None => MetricChart::everywhere(name, coord_names(&[name]), sig, metric),
    }
}

fn positive_half_line(name: &str, sign: f64) -> Result<MetricChart> {
    line(name, sign, Some(Arc::new(|x: &[f64]| x[0] > 0.0)))
}

pub fn round_sphere2() -> Result<MetricChart> {
    MetricChart::new(
        "S2",
        coord_names(&["theta", "phi"]),
        Signature::new(0, 2),
        Arc::new(RoundSphere2),
        Arc::new(|x: &[f64]| x[0] > 0.0 && x[0] < PI),
    )
}

pub fn euclidean(n: usize) -> Result<MetricChart> {
    Ok(pseudo_euclidean(0, n)?.renamed(format!("euclidean({n})")))
}

pub fn minkowski(p: usize, q: usize) -> Result<MetricChart> {
    Ok(pseudo_euclidean(p, q)?.renamed(format!("minkowski({p},{q})")))
}

pub fn polar_plane() -> Result<WarpedSpec> {
    let circle = line("theta", 1.0, None)?;
    WarpedSpec::new("polar_plane", positive_half_line("r", 1.0)?, circle, Arc::new(CoordPower { dim: 1, axis: 0, power: 2, scale: 1.0 }))
}

pub fn polar_euclidean3() -> Result<WarpedSpec> {
    WarpedSpec::new(
        "polar_euclidean3",
        positive_half_line("r", 1.0)?,
        round_sphere2()?,
        Arc::new(CoordPower { dim: 1, axis: 0, power: 2, scale: 1.0 }),
    )
}

/// `R ×_{e^{rate t}} R^{n−1}`; curvature `−rate²/4`.
pub fn hyperbolic_warped(n: usize, rate: f64) -> Result<WarpedSpec> {
    if n < 2 {
        return Err(GeometryError::BadParams(format!("hyperbolic_warped needs n >= 2, got {n}")));
    }
    let fiber = if n == 2 { line("x", 1.0, None)? } else { euclidean(n - 1)? };
    WarpedSpec::new(format!("hyperbolic_warped(n={n},rate={rate})"), line("t", 1.0, None)?, fiber, Arc::new(ExpRate { rate }))
}

/// Spatial fiber of a Robertson-Walker model.
pub fn rw_fiber(k: i32, deformed: bool) -> Result<MetricChart> {
    if deformed {
        return MetricChart::everywhere("deformed", coord_names(&["x", "y", "z"]), Signature::new(0, 3), Arc::new(DeformedFlat3));
    }
    match k {
        0 => euclidean(3),
        1 => Quadric::new(0, 4, 1.0)?.chart("S3"),
        -1 => Quadric::new(1, 3, -1.0)?.chart("H3"),
        _ => Err(GeometryError::BadParams(format!("k must be -1, 0 or 1, got {k}"))),
    }
}

/// `(I, −dt²) ×_w N_k` with `w` given as an expression in `t`.
pub fn robertson_walker(scale: &str, k: i32, deformed: bool) -> Result<WarpedSpec> {
    let base = positive_half_line("t", -1.0)?;
    let w = Expression::parse(scale, base.coords())?;
    WarpedSpec::new(format!("robertson_walker(w={scale},k={k})"), base, rw_fiber(k, deformed)?, Arc::new(w))
}

fn check_mass(m: f64) -> Result<()> {
    if m > 0.0 && m.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::BadParams(format!("mass must be positive, got {m}")))
    }
}

fn schwarzschild_plane(m: f64, interior: bool) -> Result<MetricChart> {
    check_mass(m)?;
    let domain: crate::chart::DomainFn = if interior {
        Arc::new(move |x: &[f64]| x[0] > 0.0 && x[0] < 2.0 * m)
    } else {
        Arc::new(move |x: &[f64]| x[0] > 2.0 * m)
    };
    MetricChart::new(
        if interior { "L-" } else { "L+" },
        coord_names(&["r", "t"]),
        Signature::new(1, 1),
        Arc::new(SchwarzschildPlane { m }),
        domain,
    )
}

fn r_squared(dim: usize) -> SharedFn {
    Arc::new(CoordPower { dim, axis: 0, power: 2, scale: 1.0 })
}

/// `L⁺ ×_{r²} S²` with `L⁺ = (2m, ∞) × R`.
pub fn schwarzschild_exterior(m: f64) -> Result<WarpedSpec> {
    WarpedSpec::new(format!("schwarzschild_exterior(m={m})"), schwarzschild_plane(m, false)?, round_sphere2()?, r_squared(2))
}

/// `L⁻ ×_{r²} S²` with `L⁻ = (0, 2m) × R`.
pub fn schwarzschild_blackhole(m: f64) -> Result<WarpedSpec> {
    WarpedSpec::new(format!("schwarzschild_blackhole(m={m})"), schwarzschild_plane(m, true)?, round_sphere2()?, r_squared(2))
}

/// Equatorial slice `L⁺ ×_{r²} S¹`.
pub fn schwarzschild_equatorial(m: f64) -> Result<WarpedSpec> {
    WarpedSpec::new(format!("schwarzschild_equatorial(m={m})"), schwarzschild_plane(m, false)?, line("phi", 1.0, None)?, r_squared(2))
}

/// Static split `(r, θ, φ) ×_w (R, ±dt²)`.
///
/// Exterior: Riemannian base, fiber `−dt²`, `w = 1 − 2m/r`.
/// Interior: Lorentzian base (`r` is timelike), fiber `+dt²`,
/// `w = 2m/r − 1`.
pub fn schwarzschild_static(m: f64, interior: bool) -> Result<WarpedSpec> {
    check_mass(m)?;
    let (sig, domain): (Signature, crate::chart::DomainFn) = if interior {
        (Signature::new(1, 2), Arc::new(move |x: &[f64]| x[0] > 0.0 && x[0] < 2.0 * m && x[1] > 0.0 && x[1] < PI))
    } else {
        (Signature::new(0, 3), Arc::new(move |x: &[f64]| x[0] > 2.0 * m && x[1] > 0.0 && x[1] < PI))
    };
    let base = MetricChart::new("static", coord_names(&["r", "theta", "phi"]), sig, Arc::new(SchwarzschildSpatial { m }), domain)?;
    let (fiber_sign, w_sign) = if interior { (1.0, -1.0) } else { (-1.0, 1.0) };
    let label = format!("schwarzschild_static(m={m},{})", if interior { "interior" } else { "exterior" });
    WarpedSpec::new(label, base, line("t", fiber_sign, None)?, Arc::new(Lapse { dim: 3, m, sign: w_sign }))
}

/// `(R³ \ 0, Euclidean) ×_r (R, −dt²)`.
pub fn naive_gravity() -> Result<WarpedSpec> {
    let base = euclidean(3)?.restricted(Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum::<f64>() > 0.0));
    WarpedSpec::new("naive_gravity", base, line("t", -1.0, None)?, Arc::new(Radius { dim: 3 }))
}

/// `dx² + w(x, y) dy²` with `w` twisted by `ε`.
pub fn twisted_plane(epsilon: f64, separable: bool) -> Result<MetricChart> {
    let label = if separable { "twisted_plane" } else { "twisted_exp" };
    twisted_product(label, &line("x", 1.0, None)?, &line("y", 1.0, None)?, Arc::new(TwistedWarp { epsilon, separable }))
}
