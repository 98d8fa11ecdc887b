//! Perfect-fluid extraction from the Einstein tensor.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::linalg;
use crate::tensor::stress_energy;
use crate::warped::WarpedSpec;

/// Isotropy spread above which `T` is not of perfect-fluid form.
pub const FLUID_ISOTROPY_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidSample {
    pub point: Vec<f64>,
    pub mu: f64,
    pub p: f64,
    pub offdiag_residual: f64,
    pub isotropy_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidReport {
    pub samples: Vec<FluidSample>,
    pub offdiag_residual: f64,
    pub isotropy_residual: f64,
}

/// Orthonormal frame by Gram–Schmidt on the coordinate basis, so the first
/// vector is `∂_0 / |∂_0|`.
fn adapted_frame(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut frame: Vec<(DVector<f64>, f64)> = Vec::with_capacity(n);
    for a in 0..n {
        let mut v = DVector::from_fn(n, |i, _| if i == a { 1.0 } else { 0.0 });
        for (e, sign) in &frame {
            v -= e * (linalg::form(g, &v, e) * sign);
        }
        let norm = linalg::form(g, &v, &v);
        if norm.abs() < 1e-12 {
            return Err(GeometryError::DegenerateMetric { det: norm.abs() });
        }
        frame.push((v / norm.abs().sqrt(), norm.signum()));
    }
    Ok(DMatrix::from_columns(&frame.into_iter().map(|(e, _)| e).collect::<Vec<_>>()))
}

/// Energy density and pressure of `T = (μ + p) ω⊗ω + p g` on a
/// Robertson-Walker-type product `(I, −dt²) ×_w N`.
///
/// In an orthonormal frame starting with `∂_t`, `μ = T(e_0, e_0)`, `p` is
/// the mean of the eigenvalues of the spatial block, the isotropy residual
/// is their spread and the off-diagonal residual is `max |T(e_0, e_i)|`.
pub fn perfect_fluid(spec: &WarpedSpec, points: &[Vec<f64>]) -> Result<FluidReport> {
    let base = spec.base().signature();
    if spec.base().dim() != 1 || base.negative != 1 {
        return Err(GeometryError::BadParams("perfect_fluid expects a base (I, -dt^2)".into()));
    }
    let chart = spec.assemble()?;
    let mut samples = Vec::with_capacity(points.len());
    for x in points {
        let t = stress_energy(&chart, x)?;
        let g = linalg::to_matrix(&chart.metric_values(x), chart.dim());
        let e = adapted_frame(&g)?;
        let tf = e.transpose() * t * &e;
        let n = tf.nrows();
        let spatial = tf.view((1, 1), (n - 1, n - 1)).into_owned();
        let eig = SymmetricEigen::new(spatial).eigenvalues;
        let (lo, hi) = eig.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let offdiag = (1..n).map(|i| tf[(0, i)].abs()).fold(0.0, f64::max);
        samples.push(FluidSample {
            point: x.clone(),
            mu: tf[(0, 0)],
            p: eig.mean(),
            offdiag_residual: offdiag,
            isotropy_residual: hi - lo,
        });
    }
    let isotropy = samples.iter().map(|s| s.isotropy_residual).fold(0.0, f64::max);
    if isotropy > FLUID_ISOTROPY_LIMIT {
        return Err(GeometryError::NotFluidForm { isotropy });
    }
    Ok(FluidReport {
        offdiag_residual: samples.iter().map(|s| s.offdiag_residual).fold(0.0, f64::max),
        isotropy_residual: isotropy,
        samples,
    })
}
