//! Task execution.

use std::sync::Arc;

use serde_json::json;
use warped_core::atlas::{self, perfect_fluid};
use warped_core::expr::Expression;
use warped_core::geodesic::{integrate_direct, integrate_mechanical, integrate_reduced, reduce};
use warped_core::killing::{classify_killing, curvature_identity, killing_residual, square_zero_span, KillingKind};
use warped_core::ode::OdeOptions;
use warped_core::tensor::curvature;
use warped_core::warped::{classify_foliation, detect_warped_structure};
use warped_core::{GeodesicState, GeometryError, KillingCandidate, MetricChart, Scalar, Smooth, Trajectory};

use crate::error::{CliError, CliResult};
use crate::manifest::{
    ClassifyTask, CurvatureTask, FluidTask, GeodesicTask, KillingTask, Manifest, MechanicalTask, ResolvedChart, Sampling,
    Task,
};
use crate::output::{Artifact, Table};

/// Settings shared by every task, after command-line overrides.
pub struct Context {
    pub seed: u64,
    pub tol: Option<f64>,
}

pub const DEFAULT_SAMPLES: usize = 20;
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

/// Vector field whose components are expressions.
struct ExprField(Vec<Expression>);

impl Smooth for ExprField {
    fn input_dim(&self) -> usize {
        self.0.len()
    }
    fn output_dim(&self) -> usize {
        self.0.len()
    }
    fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        self.0.iter().map(|e| e.eval(x)[0]).collect()
    }
}

pub fn run(manifest: &Manifest, chart: &ResolvedChart, ctx: &Context) -> CliResult<Artifact> {
    match &manifest.task {
        Task::Geodesic(t) => geodesic(chart, t, ctx, false),
        Task::ReducedGeodesic(t) => geodesic(chart, t, ctx, true),
        Task::Mechanical(t) => mechanical(chart, t, ctx),
        Task::Curvature(t) => curvature_grid(chart, t),
        Task::Classify(t) => classify(chart, t, ctx),
        Task::Fluid(t) => fluid(chart, t, ctx),
        Task::Killing(t) => killing(chart, t, ctx),
        Task::Certify(t) => Ok(Artifact {
            table: None,
            report: serde_json::to_value(square_zero_span(t.p, t.q, ctx.seed)?).expect("serializes"),
            partial: None,
        }),
    }
}

fn check_len(what: &str, got: usize, want: usize) -> CliResult<()> {
    if got == want {
        Ok(())
    } else {
        Err(CliError::Manifest(format!("{what} has {got} entries, the chart has dimension {want}")))
    }
}

fn ode_options(tau: f64, sample_every: Option<f64>, atol: Option<f64>, ctx: &Context) -> CliResult<OdeOptions> {
    if !tau.is_finite() {
        return Err(CliError::Manifest(format!("tau must be finite, got {tau}")));
    }
    if let Some(s) = sample_every {
        if !(s > 0.0 && s.is_finite()) {
            return Err(CliError::Manifest(format!("sample_every must be positive, got {s}")));
        }
    }
    let mut opts = OdeOptions { sample_every, ..OdeOptions::default() };
    if let Some(rtol) = ctx.tol {
        opts.rtol = rtol;
    }
    if let Some(a) = atol {
        opts.atol = a;
    }
    Ok(opts)
}

fn trajectory_table(chart: &MetricChart, traj: &Trajectory) -> Table {
    let coords = chart.coords();
    let mut columns = vec!["tau".to_string()];
    columns.extend(coords.iter().cloned());
    columns.extend(coords.iter().map(|c| format!("v_{c}")));
    columns.extend(traj.monitors.iter().map(|m| m.name.clone()));
    let rows = traj
        .samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let mut row = vec![s.tau];
            row.extend(&s.x);
            row.extend(&s.v);
            row.extend(traj.monitors.iter().map(|m| m.values[k]));
            row
        })
        .collect();
    Table { columns, rows }
}

fn trajectory_artifact(chart: &MetricChart, traj: Trajectory, extra: serde_json::Value) -> Artifact {
    let partial = (!traj.termination.is_completed()).then(|| format!("{:?}", traj.termination));
    let monitors: serde_json::Map<String, serde_json::Value> = traj
        .monitors
        .iter()
        .map(|m| (m.name.clone(), json!({ "drift": m.drift(), "relative_drift": m.relative_drift() })))
        .collect();
    let report = json!({
        "termination": traj.termination,
        "stats": traj.stats,
        "tau_range": traj.tau_range(),
        "monitors": monitors,
        "details": extra,
    });
    Artifact { table: Some(trajectory_table(chart, &traj)), report, partial }
}

fn geodesic(chart: &ResolvedChart, t: &GeodesicTask, ctx: &Context, reduced: bool) -> CliResult<Artifact> {
    let c = &chart.chart;
    check_len("x", t.x.len(), c.dim())?;
    check_len("v", t.v.len(), c.dim())?;
    c.check_domain(&t.x)?;
    let opts = ode_options(t.tau, t.sample_every, t.atol, ctx)?;
    let mut init = GeodesicState::new(t.x.clone(), t.v.clone());
    if let Some(target) = t.normalize {
        let n = init.norm(c);
        if n == 0.0 || target == 0.0 || n.signum() != target.signum() {
            return Err(CliError::Manifest(format!("cannot rescale v with <v,v> = {n} to {target}")));
        }
        let k = (target / n).sqrt();
        init.v.iter_mut().for_each(|v| *v *= k);
    }
    if !reduced {
        let traj = integrate_direct(c, &init, t.tau, &opts)?;
        return Ok(trajectory_artifact(c, traj, json!({ "initial": init })));
    }
    let spec = chart
        .warped
        .as_ref()
        .ok_or_else(|| CliError::Manifest("reduced-geodesic needs a warped chart".into()))?;
    let problem = reduce(spec, &init)?;
    let traj = integrate_reduced(&problem, t.tau, &opts)?;
    let details = json!({
        "initial": init,
        "c0": problem.c0,
        "c1": problem.c1,
        "energy": problem.energy,
        "potential_coefficient": problem.potential_coefficient(),
    });
    Ok(trajectory_artifact(c, traj, details))
}

fn mechanical(chart: &ResolvedChart, t: &MechanicalTask, ctx: &Context) -> CliResult<Artifact> {
    let c = &chart.chart;
    check_len("x", t.x.len(), c.dim())?;
    check_len("v", t.v.len(), c.dim())?;
    c.check_domain(&t.x)?;
    let potential = Expression::parse(&t.potential, c.coords()).map_err(GeometryError::from)?;
    let opts = ode_options(t.tau, t.sample_every, t.atol, ctx)?;
    let init = GeodesicState::new(t.x.clone(), t.v.clone());
    let traj = integrate_mechanical(c, &potential, &init, t.tau, &opts)?;
    Ok(trajectory_artifact(c, traj, json!({ "initial": init, "potential": t.potential })))
}

fn curvature_grid(chart: &ResolvedChart, t: &CurvatureTask) -> CliResult<Artifact> {
    let c = &chart.chart;
    check_len("at", t.at.len(), c.dim())?;
    let axes = t.grid.iter().map(|g| chart.axis(&g.axis)).collect::<CliResult<Vec<_>>>()?;
    for g in &t.grid {
        if g.count == 0 || (g.count > 1 && !(g.to - g.from).is_finite()) {
            return Err(CliError::Manifest(format!("grid axis `{}` needs count >= 1 and a finite range", g.axis)));
        }
    }
    let mut columns: Vec<String> = t.grid.iter().map(|g| g.axis.clone()).collect();
    columns.extend(["max_abs_ricci", "max_abs_riemann", "scalar"].map(String::from));
    let total: usize = t.grid.iter().map(|g| g.count).product();
    let (mut rows, mut outside) = (Vec::with_capacity(total), 0usize);
    for flat in 0..total {
        let mut x = t.at.clone();
        let mut rest = flat;
        let mut swept = vec![0.0; t.grid.len()];
        for (k, g) in t.grid.iter().enumerate().rev() {
            let i = rest % g.count;
            rest /= g.count;
            let v = if g.count == 1 { g.from } else { g.from + (g.to - g.from) * i as f64 / (g.count - 1) as f64 };
            x[axes[k]] = v;
            swept[k] = v;
        }
        if !c.in_domain(&x) {
            outside += 1;
            continue;
        }
        let curv = curvature(c, &x)?;
        swept.extend([curv.max_abs_ricci(), curv.riemann.max_abs(), curv.scalar]);
        rows.push(swept);
    }
    let max_ricci = rows.iter().map(|r| r[r.len() - 3]).fold(0.0, f64::max);
    let partial = (outside > 0).then(|| format!("{outside} of {total} grid points lie outside the chart domain"));
    Ok(Artifact {
        table: Some(Table { columns, rows }),
        report: json!({ "points": total - outside, "outside": outside, "max_abs_ricci": max_ricci }),
        partial,
    })
}

fn sample_points(chart: &ResolvedChart, s: &Sampling, seed: u64) -> CliResult<Vec<Vec<f64>>> {
    let n = chart.chart.dim();
    let points = if let Some(p) = &s.points {
        if s.samples.is_some() || s.region.is_some() {
            return Err(CliError::Manifest("give either `points` or `samples`/`region`, not both".into()));
        }
        p.clone()
    } else {
        let region = s.region.clone().or_else(|| chart.region.clone()).ok_or_else(|| {
            CliError::Manifest("this chart has no default sampling region; give `region` or `points`".into())
        })?;
        check_len("region", region.len(), n)?;
        atlas::sample_points(&region, s.samples.unwrap_or(DEFAULT_SAMPLES), seed)
    };
    if points.is_empty() {
        return Err(CliError::Manifest("no sample points".into()));
    }
    for p in &points {
        check_len("sample point", p.len(), n)?;
        chart.chart.check_domain(p)?;
    }
    Ok(points)
}

fn classify(chart: &ResolvedChart, t: &ClassifyTask, ctx: &Context) -> CliResult<Artifact> {
    let tol = ctx.tol.unwrap_or(DEFAULT_CLASSIFY_TOL);
    let leaf = t.leaf.iter().map(|a| chart.axis(a)).collect::<CliResult<Vec<_>>>()?;
    let points = sample_points(chart, &t.sampling, ctx.seed)?;
    let foliation = classify_foliation(&chart.chart, &leaf, &points, tol)?;
    let mut report = json!({ "tol": tol, "samples": points.len(), "verdict": foliation.verdict, "foliation": foliation });
    if let Some(normal) = &t.normal {
        let normal = normal.iter().map(|a| chart.axis(a)).collect::<CliResult<Vec<_>>>()?;
        let det = detect_warped_structure(&chart.chart, &normal, &leaf, &points, tol)?;
        report["detected"] = json!(det.detected);
        report["detection"] = serde_json::to_value(&det).expect("serializes");
    }
    Ok(Artifact { table: None, report, partial: None })
}

fn fluid(chart: &ResolvedChart, t: &FluidTask, ctx: &Context) -> CliResult<Artifact> {
    let spec = chart.warped.as_ref().ok_or_else(|| CliError::Manifest("fluid needs a warped chart".into()))?;
    let points = sample_points(chart, &t.sampling, ctx.seed)?;
    let report = perfect_fluid(spec, &points)?;
    let mut columns: Vec<String> = chart.chart.coords().to_vec();
    columns.extend(["mu", "p", "offdiag_residual", "isotropy_residual"].map(String::from));
    let rows = report
        .samples
        .iter()
        .map(|s| {
            let mut row = s.point.clone();
            row.extend([s.mu, s.p, s.offdiag_residual, s.isotropy_residual]);
            row
        })
        .collect();
    Ok(Artifact {
        table: Some(Table { columns, rows }),
        report: serde_json::to_value(&report).expect("serializes"),
        partial: None,
    })
}

fn killing(chart: &ResolvedChart, t: &KillingTask, ctx: &Context) -> CliResult<Artifact> {
    let c = &chart.chart;
    check_len("field", t.field.len(), c.dim())?;
    let components = t
        .field
        .iter()
        .map(|e| Expression::parse(e, c.coords()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(GeometryError::from)?;
    let label = t.label.clone().unwrap_or_else(|| "X".into());
    let cand = KillingCandidate::new(label, c.clone(), Arc::new(ExprField(components)))?;
    let points = sample_points(chart, &t.sampling, ctx.seed)?;
    let cls = match classify_killing(&cand, &points) {
        Ok(cls) => cls,
        Err(GeometryError::NotKilling { .. }) => {
            let residual = killing_residual(&cand, &points)?;
            return Ok(Artifact {
                table: None,
                report: json!({ "killing": false, "killing_residual": residual, "samples": points.len() }),
                partial: None,
            });
        }
        Err(e) => return Err(e.into()),
    };
    let mut report = json!({ "killing": true, "samples": points.len(), "classification": cls });
    if cls.is_geodesic {
        // `⟨R(X,Y)Y,X⟩ = |∇_Y X|²` against random directions `Y`
        let ys = atlas::sample_points(&vec![(-1.0, 1.0); c.dim()], points.len(), ctx.seed.wrapping_add(1));
        let mut worst = 0.0f64;
        let mut min_numerator = f64::INFINITY;
        for (x, y) in points.iter().zip(&ys) {
            let id = curvature_identity(&cand, &cls, y, x)?;
            worst = worst.max(id.residual);
            min_numerator = min_numerator.min(id.curvature_side);
        }
        report["curvature_identity_residual"] = json!(worst);
        if cls.kind == KillingKind::Lightlike {
            // the plane span(X, Y) has sectional curvature numerator / −⟨X,Y⟩²
            report["min_curvature_numerator"] = json!(min_numerator);
        }
    }
    Ok(Artifact { table: None, report, partial: None })
}
