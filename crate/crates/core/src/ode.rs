//! Adaptive Dormand–Prince 5(4) integration with cubic Hermite dense output.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    /// Initial step; estimated from the right-hand side when `None`.
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Record states only on the grid `t0 + k * sample_every` (landing on it
    /// exactly) instead of at every accepted step.
    pub sample_every: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-10,
            h_init: None,
            h_min: 1e-13,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
            sample_every: None,
        }
    }
}

impl OdeOptions {
    /// Pure relative error control. Needed when a component decays
    /// exponentially but is later multiplied by a growing factor, as the
    /// fiber velocity is in a Killing charge `w · y'`.
    pub fn relative(rtol: f64) -> Self {
        Self { atol: 1e-300, rtol, ..Self::default() }
    }
}

/// Why an integration stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    Completed,
    /// The state left the region accepted by [`OdeSystem::admissible`].
    DomainExit { t: f64 },
    /// The step size fell below `h_min`, typically at a coordinate
    /// singularity.
    StepSizeUnderflow { t: f64, h: f64 },
    MaxSteps { t: f64 },
    /// The system reported a fatal condition.
    Stopped { t: f64, reason: String },
}

impl Termination {
    pub fn is_completed(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest normalised local error estimate among accepted steps.
    pub max_error_estimate: f64,
}

/// First-order system `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;

    /// Writes `f(t, y)` into `dy`. An `Err` rejects the current step.
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), String>;

    /// Checked after each accepted step; `false` ends the run with
    /// [`Termination::DomainExit`].
    fn admissible(&self, _t: f64, _y: &[f64]) -> bool {
        true
    }

    /// Checked after each accepted step; `Some(reason)` ends the run with
    /// [`Termination::Stopped`].
    fn fatal(&self, _t: f64, _y: &[f64]) -> Option<String> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub dys: Vec<Vec<f64>>,
    pub stats: IntegratorStats,
    pub termination: Termination,
}

impl OdeSolution {
    /// Cubic Hermite interpolation between recorded samples; `None` outside
    /// the covered interval.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        hermite(&self.ts, &self.ys, &self.dys, t)
    }
}

pub(crate) fn hermite(ts: &[f64], ys: &[Vec<f64>], dys: &[Vec<f64>], t: f64) -> Option<Vec<f64>> {
    let (first, last) = (*ts.first()?, *ts.last()?);
    if t < first || t > last {
        return None;
    }
    let i = match ts.binary_search_by(|p| p.total_cmp(&t)) {
        Ok(i) => return Some(ys[i].clone()),
        Err(i) => i - 1,
    };
    let h = ts[i + 1] - ts[i];
    let s = (t - ts[i]) / h;
    let (h00, h10, h01, h11) = (
        2.0 * s.powi(3) - 3.0 * s * s + 1.0,
        s.powi(3) - 2.0 * s * s + s,
        -2.0 * s.powi(3) + 3.0 * s * s,
        s.powi(3) - s * s,
    );
    Some(
        (0..ys[i].len())
            .map(|k| h00 * ys[i][k] + h10 * h * dys[i][k] + h01 * ys[i + 1][k] + h11 * h * dys[i + 1][k])
            .collect(),
    )
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights minus embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates `sys` from `(t0, y0)` to `t_end > t0`.
pub fn integrate<S: OdeSystem + ?Sized>(sys: &S, t0: f64, y0: &[f64], t_end: f64, opts: &OdeOptions) -> OdeSolution {
    let n = sys.dim();
    assert_eq!(y0.len(), n, "initial state has wrong dimension");
    let mut stats = IntegratorStats::default();
    let mut sol = OdeSolution {
        ts: vec![t0],
        ys: vec![y0.to_vec()],
        dys: Vec::new(),
        stats,
        termination: Termination::Completed,
    };
    let mut k = vec![vec![0.0; n]; 7];
    if let Err(reason) = sys.rhs(t0, y0, &mut k[0]) {
        sol.dys.push(vec![f64::NAN; n]);
        sol.termination = Termination::Stopped { t: t0, reason };
        return sol;
    }
    stats.rhs_evals += 1;
    sol.dys.push(k[0].clone());

    let scale = |y: &[f64], z: &[f64], i: usize| opts.atol + opts.rtol * y[i].abs().max(z[i].abs());
    let span = t_end - t0;
    let mut h = opts.h_init.unwrap_or_else(|| {
        let d0 = (0..n).map(|i| (y0[i] / scale(y0, y0, i)).powi(2)).sum::<f64>().sqrt();
        let d1 = (0..n).map(|i| (k[0][i] / scale(y0, y0, i)).powi(2)).sum::<f64>().sqrt();
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min(span.abs())
    });
    h = h.min(opts.h_max);

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut next_sample = opts.sample_every.map(|dt| (1usize, dt));

    while t < t_end {
        if stats.accepted + stats.rejected >= opts.max_steps {
            sol.termination = Termination::MaxSteps { t };
            break;
        }
        let mut target = t_end;
        if let Some((idx, dt)) = next_sample {
            target = target.min(t0 + idx as f64 * dt);
        }
        let mut step = h.min(target - t);
        let lands = step >= target - t;
        if lands {
            step = target - t;
        }

        let mut failed = false;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += step * A[s][j] * kj[i];
                }
                ytmp[i] = acc;
            }
            let (_, tail) = k.split_at_mut(s);
            stats.rhs_evals += 1;
            if sys.rhs(t + C[s] * step, &ytmp, &mut tail[0]).is_err() || tail[0].iter().any(|v| !v.is_finite()) {
                failed = true;
                break;
            }
        }
        let err = if failed {
            f64::INFINITY
        } else {
            // stage 7 is evaluated at the 5th-order solution
            ynew.copy_from_slice(&ytmp);
            let mut acc = 0.0;
            for i in 0..n {
                let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * step;
                acc += (e / scale(&y, &ynew, i)).powi(2);
            }
            (acc / n as f64).sqrt()
        };

        if err <= 1.0 {
            t = if lands { target } else { t + step };
            y.copy_from_slice(&ynew);
            stats.accepted += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err);
            let k7 = k[6].clone();
            k[0].copy_from_slice(&k7);

            if !sys.admissible(t, &y) {
                sol.termination = Termination::DomainExit { t };
                break;
            }
            if let Some(reason) = sys.fatal(t, &y) {
                sol.termination = Termination::Stopped { t, reason };
                break;
            }
            let record = match next_sample.as_mut() {
                None => true,
                Some((idx, dt)) => {
                    if lands && (t0 + *idx as f64 * *dt - target).abs() <= 1e-12 * (1.0 + target.abs()) {
                        *idx += 1;
                    }
                    lands
                }
            };
            if record {
                sol.ts.push(t);
                sol.ys.push(y.clone());
                sol.dys.push(k[0].clone());
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !lands || step >= h {
                h = (step * factor).min(opts.h_max);
            }
        } else {
            stats.rejected += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.25 };
            h = step * factor;
            if h < opts.h_min * (1.0 + t.abs()) {
                sol.termination = Termination::StepSizeUnderflow { t, h };
                break;
            }
        }
    }
    sol.stats = stats;
    sol
}
