//! `warped doctor`: invariant checks over every bundled solution.

use warped_core::atlas::{self, kruskal, Params};
use warped_core::killing::square_zero_span;
use warped_core::tensor::{curvature, metric_compatibility_residual};
use warped_core::warped::detect_warped_structure;

pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

fn check(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), pass, detail: detail.into() }
}

const POINTS: usize = 8;
const TOL: f64 = 1e-8;

fn builtin_checks(id: &str, seed: u64, out: &mut Vec<Check>) {
    let params = Params::new();
    let built = match atlas::build(id, &params) {
        Ok(b) => b,
        Err(e) => return out.push(check(format!("{id}: builds"), false, e.to_string())),
    };
    let chart = match built.chart() {
        Ok(c) => c,
        Err(e) => return out.push(check(format!("{id}: builds"), false, e.to_string())),
    };
    let region = atlas::sample_region(id, &params).expect("registered id has a region");
    let points = atlas::sample_points(&region, POINTS, seed);
    let (mut compat, mut bianchi, mut trace, mut symmetry) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for x in &points {
        let curv = match curvature(&chart, x) {
            Ok(c) => c,
            Err(e) => return out.push(check(format!("{id}: curvature"), false, format!("at {x:?}: {e}"))),
        };
        let scale = 1.0 + curv.riemann.max_abs();
        let g_scale = 1.0 + curv.metric.amax();
        compat = compat.max(metric_compatibility_residual(&chart, x).unwrap_or(f64::INFINITY) / g_scale);
        bianchi = bianchi.max(curv.bianchi_residual() / scale);
        trace = trace.max(curv.ricci_trace_residual() / scale);
        symmetry = symmetry.max((&curv.ricci - curv.ricci.transpose()).amax() / scale);
    }
    let worst = compat.max(bianchi).max(trace).max(symmetry);
    out.push(check(
        format!("{id}: tensor identities"),
        worst < TOL,
        format!("compatibility {compat:.2e}, bianchi {bianchi:.2e}, ricci trace {trace:.2e}, ricci symmetry {symmetry:.2e}"),
    ));

    if let Some(spec) = built.warped() {
        let det = detect_warped_structure(&chart, &spec.base_axes(), &spec.fiber_axes(), &points, TOL);
        let (pass, detail) = match det {
            Ok(d) => (d.detected, format!("base {:?}, fiber {:?}", d.base.verdict, d.fiber.verdict)),
            Err(e) => (false, e.to_string()),
        };
        out.push(check(format!("{id}: warped structure detected"), pass, detail));
    }
}

pub fn run(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for info in atlas::list() {
        builtin_checks(info.id, seed, &mut out);
    }

    let ext = atlas::build("schwarzschild_exterior", &Params::new()).and_then(|b| b.chart());
    let ricci = ext.map(|chart| {
        atlas::sample_points(&[(2.2, 50.0), (-5.0, 5.0), (0.3, 2.8), (-3.0, 3.0)], 100, seed)
            .iter()
            .map(|x| curvature(&chart, x).map_or(f64::INFINITY, |c| c.max_abs_ricci()))
            .fold(0.0, f64::max)
    });
    match ricci {
        Ok(r) => out.push(check("schwarzschild: Ricci flat", r < TOL, format!("max |Ric| {r:.2e}"))),
        Err(e) => out.push(check("schwarzschild: Ricci flat", false, e.to_string())),
    }

    let k = kruskal(1.0).expect("m = 1 is valid");
    let pullback = atlas::sample_points(&[(2.2, 30.0), (-5.0, 5.0)], 50, seed)
        .iter()
        .map(|p| k.pullback_residual(p[0], p[1]).unwrap_or(f64::INFINITY) / (1.0 + 1.0 / (1.0 - 2.0 / p[0])))
        .fold(0.0, f64::max);
    out.push(check("kruskal: pullback of exterior", pullback < TOL, format!("{pullback:.2e}")));

    match square_zero_span(2, 2, seed) {
        Ok(s) => out.push(check("o(2,2): square-zero span", s.span_dim == 6, format!("span {} of {}", s.span_dim, s.algebra_dim))),
        Err(e) => out.push(check("o(2,2): square-zero span", false, e.to_string())),
    }
    out
}
