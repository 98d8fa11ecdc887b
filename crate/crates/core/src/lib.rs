//! Numerical engine for pseudo-Riemannian warped products.
//!
//! The crate is organised bottom-up:
//!
//! - [`ad`]: forward-mode differentiation used for every metric derivative,
//! - [`chart`] and [`tensor`]: metrics, Christoffel symbols and curvature,
//! - [`warped`]: warped-product assembly and foliation diagnostics,
//! - [`ode`] and [`geodesic`]: adaptive integration of geodesics, the
//!   Clairaut/Maupertuis reduction and mechanical systems,
//! - [`atlas`]: exact solutions (constant curvature, Robertson-Walker,
//!   Schwarzschild, Kruskal),
//! - [`killing`]: Killing-field checks and square-zero elements of `o(p,q)`,
//! - [`expr`]: a small differentiable expression language.

pub mod ad;
pub mod atlas;
pub mod chart;
pub mod error;
pub mod expr;
pub mod geodesic;
pub mod killing;
pub mod linalg;
pub mod ode;
pub mod tensor;
pub mod warped;

pub use ad::{Dual, Jet2, Scalar, SharedFn, Smooth, SmoothFn};
pub use chart::{MetricChart, Signature};
pub use error::{GeometryError, Result};
pub use geodesic::{GeodesicState, Trajectory};
pub use killing::KillingCandidate;
pub use tensor::{CurvatureAtPoint, Tolerances};
pub use warped::{FoliationReport, Verdict, WarpedSpec};
