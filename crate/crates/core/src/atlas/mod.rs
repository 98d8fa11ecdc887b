//! Exact solutions and the analyses attached to them.
//!
//! Every solution is addressable by a string id through [`build`]; [`list`]
//! enumerates the ids with their parameters. Builders return either a bare
//! [`MetricChart`] or a [`WarpedSpec`] when the solution is a warped product.

pub mod fluid;
pub mod kruskal;
pub mod quadric;
pub mod solutions;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chart::{MetricChart, Signature};
use crate::error::{GeometryError, Result};
use crate::warped::WarpedSpec;

pub use fluid::{perfect_fluid, FluidReport, FluidSample};
pub use kruskal::{kruskal, KruskalChart};
pub use quadric::Quadric;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

/// Named builder parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(BTreeMap<String, ParamValue>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.0.insert(key.to_string(), ParamValue::Num(value));
        self
    }

    pub fn with_text(mut self, key: &str, value: &str) -> Self {
        self.0.insert(key.to_string(), ParamValue::Text(value.to_string()));
        self
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn num(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(ParamValue::Num(v)) => Ok(*v),
            Some(ParamValue::Text(t)) => Err(GeometryError::BadParams(format!("`{key}` must be a number, got \"{t}\""))),
        }
    }

    pub fn count(&self, key: &str, default: usize) -> Result<usize> {
        let v = self.num(key, default as f64)?;
        if v < 0.0 || v.fract() != 0.0 || v > 64.0 {
            return Err(GeometryError::BadParams(format!("`{key}` must be a small non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }

    pub fn text(&self, key: &str, default: &str) -> Result<String> {
        match self.0.get(key) {
            None => Ok(default.to_string()),
            Some(ParamValue::Text(t)) => Ok(t.clone()),
            Some(ParamValue::Num(v)) => Err(GeometryError::BadParams(format!("`{key}` must be a string, got {v}"))),
        }
    }
}

/// What a builder produced.
#[derive(Debug, Clone)]
pub enum Built {
    Chart(MetricChart),
    Warped(WarpedSpec),
}

impl Built {
    /// The chart, assembling it for warped products.
    pub fn chart(&self) -> Result<MetricChart> {
        match self {
            Built::Chart(c) => Ok(c.clone()),
            Built::Warped(s) => s.assemble(),
        }
    }

    pub fn warped(&self) -> Option<&WarpedSpec> {
        match self {
            Built::Warped(s) => Some(s),
            Built::Chart(_) => None,
        }
    }
}

/// A registered solution id.
#[derive(Debug, Clone, Serialize)]
pub struct BuiltinInfo {
    pub id: &'static str,
    pub summary: &'static str,
    /// `(name, default)` pairs.
    pub params: &'static [(&'static str, &'static str)],
}

type Region = Vec<(f64, f64)>;

struct Builtin {
    info: BuiltinInfo,
    build: fn(&Params) -> Result<(Built, Region)>,
}

macro_rules! builtin {
    ($id:literal, $summary:literal, [$(($k:literal, $d:literal)),*], $f:expr) => {
        Builtin {
            info: BuiltinInfo { id: $id, summary: $summary, params: &[$(($k, $d)),*] },
            build: $f,
        }
    };
}

fn mass(p: &Params) -> Result<f64> {
    p.num("m", 1.0)
}

fn with_probes(spec: WarpedSpec, region: &Region) -> (Built, Region) {
    let nb = spec.base().dim();
    let lo: Vec<f64> = region[..nb].iter().map(|r| r.0).collect();
    let hi: Vec<f64> = region[..nb].iter().map(|r| r.1).collect();
    let mid: Vec<f64> = region[..nb].iter().map(|r| 0.5 * (r.0 + r.1)).collect();
    (Built::Warped(spec.with_probes(vec![lo, mid, hi])), region.clone())
}

fn angles(region: &mut Region) {
    region.push((0.3, 2.8));
    region.push((-3.0, 3.0));
}

fn quadric_region(q: &Quadric) -> Region {
    // keep the radicand positive: at most `dim` coordinates of the wrong sign
    let half = (q.level().abs() / (2.0 * q.dim() as f64)).sqrt();
    vec![(-half, half); q.dim()]
}

fn registry() -> Vec<Builtin> {
    vec![
        builtin!("minkowski", "flat R^{p,q} in Cartesian coordinates", [("p", "1"), ("q", "3")], |p| {
            let c = solutions::minkowski(p.count("p", 1)?, p.count("q", 3)?)?;
            let n = c.dim();
            Ok((Built::Chart(c), vec![(-2.0, 2.0); n]))
        }),
        builtin!("euclidean", "flat R^n in Cartesian coordinates", [("n", "3")], |p| {
            let c = solutions::euclidean(p.count("n", 3)?)?;
            let n = c.dim();
            Ok((Built::Chart(c), vec![(-2.0, 2.0); n]))
        }),
        builtin!("pseudo_sphere", "quadric S^{p,q}(c) in a graph chart, curvature 1/c", [("p", "2"), ("q", "2"), ("c", "-1")], |p| {
            let q = Quadric::new(p.count("p", 2)?, p.count("q", 2)?, p.num("c", -1.0)?)?;
            let name = format!("S^{{{},{}}}({})", p.count("p", 2)?, p.count("q", 2)?, q.level());
            Ok((Built::Chart(q.chart(name)?), quadric_region(&q)))
        }),
        builtin!("unit_sphere", "round S^n as the quadric S^{0,n+1}(1)", [("n", "2")], |p| {
            let n = p.count("n", 2)?;
            let q = Quadric::new(0, n + 1, 1.0)?;
            Ok((Built::Chart(q.chart(format!("S{n}"))?), quadric_region(&q)))
        }),
        builtin!("polar_plane", "R+ x_{r^2} S^1: the Euclidean plane in polar coordinates", [], |_| {
            let region = vec![(0.5, 3.0), (-3.0, 3.0)];
            Ok(with_probes(solutions::polar_plane()?, &region))
        }),
        builtin!("polar_euclidean3", "R+ x_{r^2} S^2: Euclidean 3-space in polar coordinates", [], |_| {
            let mut region = vec![(0.5, 3.0)];
            angles(&mut region);
            Ok(with_probes(solutions::polar_euclidean3()?, &region))
        }),
        builtin!("polar_interior", "inside the light cone of R^{1,n}: (R+, -d rho^2) x_{rho^2} H^n", [("n", "3")], |p| {
            let model = polar_model(&solutions::minkowski(1, p.count("n", 3)?)?, None)?;
            let n = model.interior.fiber().dim();
            let mut region = vec![(0.5, 3.0)];
            region.extend(vec![(-1.0, 1.0); n]);
            Ok(with_probes(model.interior, &region))
        }),
        builtin!("polar_exterior", "outside the light cone of R^{1,n}: (R+, d rho^2) x_{rho^2} dS_n", [("n", "3")], |p| {
            let model = polar_model(&solutions::minkowski(1, p.count("n", 3)?)?, None)?;
            let q = Quadric::new(1, model.exterior.fiber().dim(), 1.0)?;
            let mut region = vec![(0.5, 3.0)];
            region.extend(quadric_region(&q));
            Ok(with_probes(model.exterior, &region))
        }),
        builtin!("hyperbolic_warped", "R x_{e^{rate t}} R^{n-1}, curvature -rate^2/4", [("n", "2"), ("rate", "1")], |p| {
            let spec = solutions::hyperbolic_warped(p.count("n", 2)?, p.num("rate", 1.0)?)?;
            let region = vec![(-1.0, 1.0)].into_iter().chain(vec![(-2.0, 2.0); spec.fiber().dim()]).collect();
            Ok(with_probes(spec, &region))
        }),
        builtin!(
            "robertson_walker",
            "(I, -dt^2) x_w N_k with w an expression in t",
            [("scale", "t^2"), ("k", "0"), ("fiber", "standard")],
            |p| {
                let k = p.num("k", 0.0)?;
                if k.fract() != 0.0 {
                    return Err(GeometryError::BadParams(format!("k must be -1, 0 or 1, got {k}")));
                }
                let fiber = p.text("fiber", "standard")?;
                let deformed = match fiber.as_str() {
                    "standard" => false,
                    "deformed" => true,
                    other => return Err(GeometryError::BadParams(format!("fiber must be standard or deformed, got {other}"))),
                };
                let spec = solutions::robertson_walker(&p.text("scale", "t^2")?, k as i32, deformed)?;
                let fiber_box = match (deformed, k as i32) {
                    (true, _) => vec![(-1.0, 1.0); 3],
                    (false, 0) => vec![(-2.0, 2.0); 3],
                    (false, 1) => vec![(-0.5, 0.5); 3],
                    _ => vec![(-1.0, 1.0); 3],
                };
                let region = vec![(0.5, 3.0)].into_iter().chain(fiber_box).collect();
                Ok(with_probes(spec, &region))
            }
        ),
        builtin!("schwarzschild_exterior", "L+ x_{r^2} S^2 on (r, t, theta, phi), r > 2m", [("m", "1")], |p| {
            let m = mass(p)?;
            let mut region = vec![(2.5 * m, 20.0 * m), (-5.0, 5.0)];
            angles(&mut region);
            Ok(with_probes(solutions::schwarzschild_exterior(m)?, &region))
        }),
        builtin!("schwarzschild_blackhole", "L- x_{r^2} S^2 on (r, t, theta, phi), 0 < r < 2m", [("m", "1")], |p| {
            let m = mass(p)?;
            let mut region = vec![(0.3 * m, 1.8 * m), (-5.0, 5.0)];
            angles(&mut region);
            Ok(with_probes(solutions::schwarzschild_blackhole(m)?, &region))
        }),
        builtin!("schwarzschild_equatorial", "equatorial slice L+ x_{r^2} S^1 on (r, t, phi)", [("m", "1")], |p| {
            let m = mass(p)?;
            let region = vec![(2.5 * m, 20.0 * m), (-5.0, 5.0), (-3.0, 3.0)];
            Ok(with_probes(solutions::schwarzschild_equatorial(m)?, &region))
        }),
        builtin!(
            "schwarzschild_static",
            "static split (r, theta, phi) x_w (R, -+dt^2); region exterior or interior",
            [("m", "1"), ("region", "exterior")],
            |p| {
                let m = mass(p)?;
                let interior = match p.text("region", "exterior")?.as_str() {
                    "exterior" => false,
                    "interior" => true,
                    other => return Err(GeometryError::BadParams(format!("region must be exterior or interior, got {other}"))),
                };
                let mut region = vec![if interior { (0.3 * m, 1.8 * m) } else { (2.5 * m, 20.0 * m) }];
                angles(&mut region);
                region.push((-5.0, 5.0));
                Ok(with_probes(solutions::schwarzschild_static(m, interior)?, &region))
            }
        ),
        builtin!("kruskal", "Kruskal chart F(xy) dx dy + r^2 dsigma^2 on (x, y, theta, phi)", [("m", "1")], |p| {
            let k = kruskal(mass(p)?)?;
            let mut region = vec![(-1.0, 1.0), (-0.5, 0.5)];
            angles(&mut region);
            Ok((Built::Chart(k.chart().clone()), region))
        }),
        builtin!("naive_gravity", "(R^3 minus 0) x_r (R, -dt^2)", [], |_| {
            let region = vec![(0.5, 2.0), (0.5, 2.0), (0.5, 2.0), (-2.0, 2.0)];
            Ok(with_probes(solutions::naive_gravity()?, &region))
        }),
        builtin!("twisted_plane", "dx^2 + e^x (1 + eps y^2) dy^2", [("epsilon", "0.1")], |p| {
            let c = solutions::twisted_plane(p.num("epsilon", 0.1)?, true)?;
            Ok((Built::Chart(c), vec![(-1.0, 1.0), (-1.0, 1.0)]))
        }),
        builtin!("twisted_exp", "dx^2 + e^{x (1 + eps y^2)} dy^2", [("epsilon", "0.1")], |p| {
            let c = solutions::twisted_plane(p.num("epsilon", 0.1)?, false)?;
            Ok((Built::Chart(c), vec![(-1.0, 1.0), (-1.0, 1.0)]))
        }),
    ]
}

pub fn list() -> Vec<BuiltinInfo> {
    registry().into_iter().map(|b| b.info).collect()
}

fn build_entry(id: &str, params: &Params) -> Result<(Built, Region)> {
    let entry = registry()
        .into_iter()
        .find(|b| b.info.id == id)
        .ok_or_else(|| GeometryError::UnknownSolution(id.to_string()))?;
    for key in params.keys() {
        if !entry.info.params.iter().any(|(k, _)| *k == key) {
            return Err(GeometryError::BadParams(format!("`{id}` has no parameter `{key}`")));
        }
    }
    (entry.build)(params)
}

pub fn build(id: &str, params: &Params) -> Result<Built> {
    Ok(build_entry(id, params)?.0)
}

/// Coordinate box inside the domain of the built solution, used for
/// sampling in tests and by the CLI.
pub fn sample_region(id: &str, params: &Params) -> Result<Vec<(f64, f64)>> {
    Ok(build_entry(id, params)?.1)
}

/// `count` points drawn uniformly from `region` with a fixed seed.
pub fn sample_points(region: &[(f64, f64)], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| region.iter().map(|&(lo, hi)| rng.random_range(lo..hi)).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Physicality {
    /// Both factors definite: time lives entirely in one factor.
    Physical,
    /// One factor is Lorentzian.
    AntiPhysical,
}

pub fn classify_physical(spec: &WarpedSpec) -> Result<Physicality> {
    let total = spec.signature();
    if total.negative != 1 || total.positive == 0 {
        return Err(GeometryError::NotLorentzian { negative: total.negative, positive: total.positive });
    }
    if spec.base().signature().is_definite() && spec.fiber().signature().is_definite() {
        Ok(Physicality::Physical)
    } else {
        Ok(Physicality::AntiPhysical)
    }
}

/// Polar decomposition of Minkowski space around a point.
#[derive(Debug, Clone)]
pub struct PolarModel {
    /// Inside the light cone: `(R+, −dρ²) ×_{ρ²} H^n`.
    pub interior: WarpedSpec,
    /// Outside the light cone: `(R+, dρ²) ×_{ρ²} dS_n`.
    pub exterior: WarpedSpec,
    pub center: Vec<f64>,
    fibers: (Quadric, Quadric),
}

impl PolarModel {
    /// Ambient point `center + ρ u` of an interior chart point `(ρ, u)`.
    pub fn interior_to_ambient(&self, point: &[f64]) -> Vec<f64> {
        self.to_ambient(&self.fibers.0, point)
    }

    pub fn exterior_to_ambient(&self, point: &[f64]) -> Vec<f64> {
        self.to_ambient(&self.fibers.1, point)
    }

    fn to_ambient(&self, q: &Quadric, point: &[f64]) -> Vec<f64> {
        let u = q.embed(&point[1..]);
        u.iter().zip(&self.center).map(|(ui, c)| c + point[0] * ui).collect()
    }
}

/// Interior and exterior polar models of a flat Lorentzian chart.
///
/// Only Minkowski space in Cartesian coordinates `diag(−1, 1, …, 1)` is
/// supported; `center` defaults to the origin.
pub fn polar_model(ambient: &MetricChart, center: Option<&[f64]>) -> Result<PolarModel> {
    let n1 = ambient.dim();
    let unsupported = |why: &str| GeometryError::UnsupportedAmbient(format!("{}: {why}", ambient.name()));
    if ambient.signature() != Signature::new(1, n1 - 1) || n1 < 2 {
        return Err(unsupported("polar models need Minkowski space R^{1,n}"));
    }
    let center = center.map_or_else(|| vec![0.0; n1], <[f64]>::to_vec);
    if center.len() != n1 {
        return Err(GeometryError::DimensionMismatch { expected: n1, got: center.len() });
    }
    let probe: Vec<f64> = center.iter().map(|c| c + 0.37).collect();
    for x in [&center, &probe] {
        if !ambient.in_domain(x) {
            return Err(unsupported("chart does not cover the probe points"));
        }
        let (g, dg) = ambient.metric_with_derivatives(x);
        let flat = (0..n1 * n1).all(|c| {
            let (i, j) = (c / n1, c % n1);
            let want = if i != j { 0.0 } else if i == 0 { -1.0 } else { 1.0 };
            (g[c] - want).abs() < 1e-12
        });
        if !flat || dg.iter().any(|d| d.abs() > 1e-12) {
            return Err(unsupported("only flat Minkowski coordinates are supported"));
        }
    }
    let n = n1 - 1;
    let hyperbolic = Quadric::new(1, n, -1.0)?;
    let de_sitter = Quadric::new(1, n, 1.0)?;
    let rho = |sign: f64| {
        let sig = if sign < 0.0 { Signature::new(1, 0) } else { Signature::new(0, 1) };
        MetricChart::new(
            "rho",
            vec!["rho".to_string()],
            sig,
            std::sync::Arc::new(crate::chart::ConstantDiagonal { entries: vec![sign] }),
            std::sync::Arc::new(|x: &[f64]| x[0] > 0.0),
        )
    };
    let w = || -> crate::ad::SharedFn { std::sync::Arc::new(solutions::CoordPower { dim: 1, axis: 0, power: 2, scale: 1.0 }) };
    let interior = WarpedSpec::new(format!("polar_interior(n={n})"), rho(-1.0)?, hyperbolic.chart(format!("H{n}"))?, w())?;
    let exterior = WarpedSpec::new(format!("polar_exterior(n={n})"), rho(1.0)?, de_sitter.chart(format!("dS{n}"))?, w())?;
    Ok(PolarModel { interior, exterior, center, fibers: (hyperbolic, de_sitter) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{curvature, eval_metric};

    #[test]
    fn every_builtin_builds_and_samples_inside_domain() {
        for info in list() {
            let built = build(info.id, &Params::new()).unwrap_or_else(|e| panic!("{}: {e}", info.id));
            let chart = built.chart().unwrap();
            let region = sample_region(info.id, &Params::new()).unwrap();
            assert_eq!(region.len(), chart.dim(), "{}", info.id);
            for x in sample_points(&region, 20, 1) {
                assert!(chart.in_domain(&x), "{} at {x:?}", info.id);
                eval_metric(&chart, &x).unwrap();
            }
        }
    }

    #[test]
    fn unknown_ids_and_params_are_rejected() {
        assert!(matches!(build("nope", &Params::new()), Err(GeometryError::UnknownSolution(_))));
        assert!(matches!(build("kruskal", &Params::new().with("mass", 1.0)), Err(GeometryError::BadParams(_))));
        assert!(matches!(build("schwarzschild_exterior", &Params::new().with("m", -1.0)), Err(GeometryError::BadParams(_))));
    }

    #[test]
    fn schwarzschild_components() {
        let chart = build("schwarzschild_exterior", &Params::new()).unwrap().chart().unwrap();
        let g = eval_metric(&chart, &[4.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((g[(0, 0)] - 2.0).abs() < 1e-15 && (g[(1, 1)] + 0.5).abs() < 1e-15);
        assert!(!chart.in_domain(&[1.5, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn polar_models_are_flat_and_classified() {
        let model = polar_model(&solutions::minkowski(1, 3).unwrap(), None).unwrap();
        assert_eq!(classify_physical(&model.interior).unwrap(), Physicality::Physical);
        assert_eq!(classify_physical(&model.exterior).unwrap(), Physicality::AntiPhysical);
        let chart = model.interior.assemble().unwrap();
        assert!(curvature(&chart, &[1.3, 0.2, -0.4, 0.1]).unwrap().riemann.max_abs() < 1e-10);
        let err = polar_model(&solutions::euclidean(3).unwrap(), None).unwrap_err();
        assert!(matches!(err, GeometryError::UnsupportedAmbient(_)));
    }

    #[test]
    fn params_round_trip_through_toml_values() {
        let p: Params = serde_json::from_str(r#"{"m": 2, "region": "interior"}"#).unwrap();
        assert_eq!(p.num("m", 1.0).unwrap(), 2.0);
        assert_eq!(p.text("region", "exterior").unwrap(), "interior");
        assert!(p.text("m", "").is_err());
    }
}
