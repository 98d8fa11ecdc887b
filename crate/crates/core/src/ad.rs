//! Forward-mode differentiation for closed-form metric components.
//!
//! Every smooth map in this crate (metric components, warping functions,
//! potentials, Killing fields) is written once against the [`Scalar`] trait
//! and evaluated with one of three number types:
//!
//! - `f64` for plain values,
//! - [`Dual`] for values plus the gradient,
//! - [`Jet2`] for values, gradient and Hessian.
//!
//! Derivatives are exact up to round-off. Finite differences only appear in
//! tests as an independent oracle.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

/// Maximum number of independent variables a [`Dual`] or [`Jet2`] tracks.
pub const MAX_VARS: usize = 6;

/// Number type usable inside a smooth closed-form expression.
pub trait Scalar:
    Copy
    + Send
    + Sync
    + fmt::Debug
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;

    fn value(&self) -> f64;

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.value()`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self;

    /// Dispatches a type-erased smooth map to the evaluator for `Self`.
    fn eval_fn(f: &dyn SmoothFn, x: &[Self]) -> Vec<Self>;

    fn exp(self) -> Self {
        let e = self.value().exp();
        self.chain(e, e, e)
    }

    fn ln(self) -> Self {
        let v = self.value();
        self.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
    }

    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * s * s))
    }

    fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(s, c, -s)
    }

    fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.chain(c, -s, -c)
    }

    fn sinh(self) -> Self {
        let v = self.value();
        self.chain(v.sinh(), v.cosh(), v.sinh())
    }

    fn cosh(self) -> Self {
        let v = self.value();
        self.chain(v.cosh(), v.sinh(), v.cosh())
    }

    fn tanh(self) -> Self {
        let t = self.value().tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }

    fn atan(self) -> Self {
        let v = self.value();
        let d = 1.0 / (1.0 + v * v);
        self.chain(v.atan(), d, -2.0 * v * d * d)
    }

    fn acos(self) -> Self {
        let v = self.value();
        let s = 1.0 - v * v;
        self.chain(v.acos(), -1.0 / s.sqrt(), -v / (s * s.sqrt()))
    }

    /// Integer power by repeated multiplication; exact at zero.
    fn powi(self, n: i32) -> Self {
        if n < 0 {
            return Self::cst(1.0) / self.powi(-n);
        }
        let mut acc = Self::cst(1.0);
        for _ in 0..n {
            acc = acc * self;
        }
        acc
    }

    fn powf(self, p: f64) -> Self {
        if p.fract() == 0.0 && p.abs() <= 16.0 {
            return self.powi(p as i32);
        }
        let v = self.value();
        self.chain(
            v.powf(p),
            p * v.powf(p - 1.0),
            p * (p - 1.0) * v.powf(p - 2.0),
        )
    }

    fn square(self) -> Self {
        self * self
    }
}

/// A smooth map `R^n -> R^m` written once for every [`Scalar`] type.
pub trait Smooth: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S>;
}

/// Object-safe view of [`Smooth`]; blanket-implemented.
pub trait SmoothFn: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval_f64(&self, x: &[f64]) -> Vec<f64>;
    fn eval_dual(&self, x: &[Dual]) -> Vec<Dual>;
    fn eval_jet(&self, x: &[Jet2]) -> Vec<Jet2>;
}

impl<T: Smooth> SmoothFn for T {
    fn input_dim(&self) -> usize {
        Smooth::input_dim(self)
    }
    fn output_dim(&self) -> usize {
        Smooth::output_dim(self)
    }
    fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.eval(x)
    }
    fn eval_dual(&self, x: &[Dual]) -> Vec<Dual> {
        self.eval(x)
    }
    fn eval_jet(&self, x: &[Jet2]) -> Vec<Jet2> {
        self.eval(x)
    }
}

pub type SharedFn = Arc<dyn SmoothFn>;

/// Evaluates a type-erased map at any scalar type.
pub fn eval<S: Scalar>(f: &dyn SmoothFn, x: &[S]) -> Vec<S> {
    S::eval_fn(f, x)
}

/// Value and Jacobian (row-major, `m x n`) of `f` at `x`.
pub fn jacobian(f: &dyn SmoothFn, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    assert!(n <= MAX_VARS, "at most {MAX_VARS} variables supported");
    let vars: Vec<Dual> = x.iter().enumerate().map(|(i, &v)| Dual::var(v, i)).collect();
    let out = f.eval_dual(&vars);
    let values = out.iter().map(|d| d.v).collect();
    let mut jac = Vec::with_capacity(out.len() * n);
    for d in &out {
        jac.extend_from_slice(&d.d[..n]);
    }
    (values, jac)
}

/// Value, gradient and Hessian of the first output of `f` at `x`.
pub fn hessian(f: &dyn SmoothFn, x: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let n = x.len();
    assert!(n <= MAX_VARS, "at most {MAX_VARS} variables supported");
    let vars: Vec<Jet2> = x.iter().enumerate().map(|(i, &v)| Jet2::var(v, i)).collect();
    let out = f.eval_jet(&vars)[0];
    let mut h = Vec::with_capacity(n * n);
    for i in 0..n {
        h.extend_from_slice(&out.h[i][..n]);
    }
    (out.v, out.g[..n].to_vec(), h)
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn chain(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    fn eval_fn(f: &dyn SmoothFn, x: &[Self]) -> Vec<Self> {
        f.eval_f64(x)
    }
}

/// First-order dual number: value plus gradient.
#[derive(Clone, Copy, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; MAX_VARS],
}

impl Dual {
    pub fn new(v: f64, d: [f64; MAX_VARS]) -> Self {
        Self { v, d }
    }

    /// The `i`-th independent variable at value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; MAX_VARS];
        d[i] = 1.0;
        Self { v, d }
    }

    /// Directional derivative along `u`.
    pub fn along(&self, u: &[f64]) -> f64 {
        u.iter().zip(self.d.iter()).map(|(a, b)| a * b).sum()
    }
}

impl fmt::Debug for Dual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dual({}, {:?})", self.v, self.d)
    }
}

impl Scalar for Dual {
    #[inline]
    fn cst(v: f64) -> Self {
        Self { v, d: [0.0; MAX_VARS] }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    #[inline]
    fn chain(self, f0: f64, f1: f64, _f2: f64) -> Self {
        let mut d = self.d;
        d.iter_mut().for_each(|x| *x *= f1);
        Self { v: f0, d }
    }
    fn eval_fn(f: &dyn SmoothFn, x: &[Self]) -> Vec<Self> {
        f.eval_dual(x)
    }
}

impl Add for Dual {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..MAX_VARS {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl Sub for Dual {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..MAX_VARS {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl Mul for Dual {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; MAX_VARS];
        for i in 0..MAX_VARS {
            d[i] = self.v * o.d[i] + o.v * self.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl Div for Dual {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let q = self.v * inv;
        let mut d = [0.0; MAX_VARS];
        for i in 0..MAX_VARS {
            d[i] = (self.d[i] - q * o.d[i]) * inv;
        }
        Self { v: q, d }
    }
}

impl Neg for Dual {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

/// Second-order jet: value, gradient and (symmetric) Hessian.
#[derive(Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; MAX_VARS],
    pub h: [[f64; MAX_VARS]; MAX_VARS],
}

impl Jet2 {
    pub fn var(v: f64, i: usize) -> Self {
        let mut g = [0.0; MAX_VARS];
        g[i] = 1.0;
        Self { v, g, h: [[0.0; MAX_VARS]; MAX_VARS] }
    }

    /// The value/gradient part as a dual number.
    pub fn to_dual(&self) -> Dual {
        Dual { v: self.v, d: self.g }
    }

    /// `d/dx_k` of this jet, itself carrying its gradient.
    pub fn partial(&self, k: usize) -> Dual {
        Dual { v: self.g[k], d: self.h[k] }
    }
}

impl fmt::Debug for Jet2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet2({}, {:?}, ..)", self.v, self.g)
    }
}

impl Scalar for Jet2 {
    #[inline]
    fn cst(v: f64) -> Self {
        Self { v, g: [0.0; MAX_VARS], h: [[0.0; MAX_VARS]; MAX_VARS] }
    }
    #[inline]
    fn value(&self) -> f64 {
        self.v
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::cst(f0);
        for i in 0..MAX_VARS {
            out.g[i] = f1 * self.g[i];
            for j in 0..MAX_VARS {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
            }
        }
        out
    }
    fn eval_fn(f: &dyn SmoothFn, x: &[Self]) -> Vec<Self> {
        f.eval_jet(x)
    }
}

impl Add for Jet2 {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..MAX_VARS {
            self.g[i] += o.g[i];
            for j in 0..MAX_VARS {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..MAX_VARS {
            self.g[i] -= o.g[i];
            for j in 0..MAX_VARS {
                self.h[i][j] -= o.h[i][j];
            }
        }
        self
    }
}

impl Mul for Jet2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::cst(self.v * o.v);
        for i in 0..MAX_VARS {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for j in 0..MAX_VARS {
                out.h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + o.g[i] * self.g[j];
            }
        }
        out
    }
}

impl Div for Jet2 {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        self * o.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }
}

impl Neg for Jet2 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

macro_rules! scalar_f64_ops {
    ($t:ty) => {
        impl Add<f64> for $t {
            type Output = $t;
            #[inline]
            fn add(mut self, o: f64) -> $t {
                self.v += o;
                self
            }
        }
        impl Sub<f64> for $t {
            type Output = $t;
            #[inline]
            fn sub(mut self, o: f64) -> $t {
                self.v -= o;
                self
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            #[inline]
            fn mul(self, o: f64) -> $t {
                self.chain(self.v * o, o, 0.0)
            }
        }
        impl Div<f64> for $t {
            type Output = $t;
            #[inline]
            fn div(self, o: f64) -> $t {
                self * (1.0 / o)
            }
        }
        impl Add<$t> for f64 {
            type Output = $t;
            #[inline]
            fn add(self, o: $t) -> $t {
                o + self
            }
        }
        impl Sub<$t> for f64 {
            type Output = $t;
            #[inline]
            fn sub(self, o: $t) -> $t {
                -o + self
            }
        }
        impl Mul<$t> for f64 {
            type Output = $t;
            #[inline]
            fn mul(self, o: $t) -> $t {
                o * self
            }
        }
        impl Div<$t> for f64 {
            type Output = $t;
            #[inline]
            fn div(self, o: $t) -> $t {
                <$t>::cst(self) / o
            }
        }
    };
}

scalar_f64_ops!(Dual);
scalar_f64_ops!(Jet2);
