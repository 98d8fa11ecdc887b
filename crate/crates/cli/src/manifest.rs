//! Manifest schema and the charts it describes.
//!
//! See `manifests/README.md` for the format.

use std::sync::Arc;

use serde::Deserialize;
use warped_core::atlas::{self, Built, Params};
use warped_core::expr::{DiagonalExprMetric, Expression};
use warped_core::{GeometryError, MetricChart, Signature, WarpedSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    /// Seed for sample points and optimizer starts; `--seed` overrides.
    #[serde(default)]
    pub seed: u64,
    /// Task tolerance; `--tol` overrides.
    pub tol: Option<f64>,
    pub chart: ChartSpec,
    pub task: Task,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub builtin: Option<String>,
    #[serde(default)]
    pub params: Params,
    pub diagonal: Option<DiagonalSpec>,
    pub warped: Option<WarpedChartSpec>,
}

/// A chart with metric `diag(e_1, …, e_n)` given by expressions.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalSpec {
    pub coords: Vec<String>,
    pub diagonal: Vec<String>,
    /// Point where the signature is read off; all ones by default.
    pub probe: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarpedChartSpec {
    pub base: DiagonalSpec,
    pub fiber: DiagonalSpec,
    /// Expression in the base coordinates.
    pub warping: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File name, relative to `--out`.
    pub path: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Geodesic(GeodesicTask),
    ReducedGeodesic(GeodesicTask),
    Mechanical(MechanicalTask),
    Curvature(CurvatureTask),
    Classify(ClassifyTask),
    Fluid(FluidTask),
    Killing(KillingTask),
    Certify(CertifyTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Geodesic(_) => "geodesic",
            Task::ReducedGeodesic(_) => "reduced-geodesic",
            Task::Mechanical(_) => "mechanical",
            Task::Curvature(_) => "curvature",
            Task::Classify(_) => "classify",
            Task::Fluid(_) => "fluid",
            Task::Killing(_) => "killing",
            Task::Certify(_) => "certify",
        }
    }

    pub fn default_format(&self) -> Format {
        match self {
            Task::Geodesic(_) | Task::ReducedGeodesic(_) | Task::Mechanical(_) | Task::Curvature(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicTask {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    /// Final affine parameter.
    pub tau: f64,
    /// Output grid spacing; every accepted step when absent.
    pub sample_every: Option<f64>,
    /// Rescale `v` so that `⟨v,v⟩` equals this value.
    pub normalize: Option<f64>,
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanicalTask {
    /// Potential, an expression in the chart coordinates.
    pub potential: String,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub tau: f64,
    pub sample_every: Option<f64>,
    pub atol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    pub axis: String,
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureTask {
    /// Values of the coordinates not swept by `grid`.
    pub at: Vec<f64>,
    pub grid: Vec<GridAxis>,
}

/// Where reports are evaluated: explicit `points`, or `samples` random
/// points in `region` (the builtin's sample box by default).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampling {
    pub points: Option<Vec<Vec<f64>>>,
    pub samples: Option<usize>,
    pub region: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyTask {
    /// Coordinate names spanning the leaves.
    pub leaf: Vec<String>,
    /// Complementary coordinates; when given, the split is also tested as
    /// a warped product with these as fiber.
    pub normal: Option<Vec<String>>,
    #[serde(default)]
    pub sampling: Sampling,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluidTask {
    #[serde(default)]
    pub sampling: Sampling,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KillingTask {
    pub label: Option<String>,
    /// Components of the field, expressions in the chart coordinates.
    pub field: Vec<String>,
    #[serde(default)]
    pub sampling: Sampling,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyTask {
    pub p: usize,
    pub q: usize,
}

/// A chart from a manifest, with its sampling box when one is known.
pub struct ResolvedChart {
    pub chart: MetricChart,
    pub warped: Option<WarpedSpec>,
    pub region: Option<Vec<(f64, f64)>>,
}

impl ResolvedChart {
    pub fn axis(&self, name: &str) -> CliResult<usize> {
        self.chart.coords().iter().position(|c| c == name).ok_or_else(|| {
            CliError::Manifest(format!("chart {} has no coordinate `{name}` (has {:?})", self.chart.name(), self.chart.coords()))
        })
    }
}

pub fn parse(path: &str, text: &str) -> CliResult<Manifest> {
    toml::from_str(text).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        CliError::parse(path, text, offset, e.message())
    })
}

fn diagonal_chart(name: &str, spec: &DiagonalSpec) -> CliResult<MetricChart> {
    let n = spec.coords.len();
    if n == 0 || spec.diagonal.len() != n {
        return Err(CliError::Manifest(format!(
            "{name}: {} coordinates but {} diagonal entries",
            n,
            spec.diagonal.len()
        )));
    }
    let entries = spec
        .diagonal
        .iter()
        .map(|e| Expression::parse(e, &spec.coords))
        .collect::<Result<Vec<_>, _>>()
        .map_err(GeometryError::from)?;
    let probe = spec.probe.clone().unwrap_or_else(|| vec![1.0; n]);
    if probe.len() != n {
        return Err(CliError::Manifest(format!("{name}: probe has {} entries, expected {n}", probe.len())));
    }
    let (mut negative, mut positive) = (0, 0);
    for e in &entries {
        let v = e.value(&probe);
        if v < 0.0 {
            negative += 1;
        } else if v > 0.0 {
            positive += 1;
        } else {
            return Err(GeometryError::DegenerateMetric { det: 0.0 }.into());
        }
    }
    Ok(MetricChart::everywhere(
        name,
        spec.coords.clone(),
        Signature::new(negative, positive),
        Arc::new(DiagonalExprMetric { entries }),
    )?)
}

pub fn resolve_chart(spec: &ChartSpec) -> CliResult<ResolvedChart> {
    let given = [spec.builtin.is_some(), spec.diagonal.is_some(), spec.warped.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(CliError::Manifest("[chart] needs exactly one of `builtin`, `diagonal` or `warped`".into()));
    }
    if let Some(id) = &spec.builtin {
        let built = atlas::build(id, &spec.params)?;
        let region = atlas::sample_region(id, &spec.params)?;
        return Ok(match built {
            Built::Chart(chart) => ResolvedChart { chart, warped: None, region: Some(region) },
            Built::Warped(w) => ResolvedChart { chart: w.assemble()?, warped: Some(w), region: Some(region) },
        });
    }
    if spec.params != Params::new() {
        return Err(CliError::Manifest("[chart.params] only applies to builtin charts".into()));
    }
    if let Some(d) = &spec.diagonal {
        return Ok(ResolvedChart { chart: diagonal_chart("diagonal", d)?, warped: None, region: None });
    }
    let w = spec.warped.as_ref().expect("checked above");
    let base = diagonal_chart("base", &w.base)?;
    let fiber = diagonal_chart("fiber", &w.fiber)?;
    let warping = Expression::parse(&w.warping, base.coords()).map_err(GeometryError::from)?;
    let probe = w.base.probe.clone().unwrap_or_else(|| vec![1.0; base.dim()]);
    let label = format!("warped(w={})", w.warping);
    let spec = WarpedSpec::new(label, base, fiber, Arc::new(warping))?.with_probes(vec![probe]);
    Ok(ResolvedChart { chart: spec.assemble()?, warped: Some(spec), region: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_geodesic_manifest() {
        let m = parse(
            "m.toml",
            r#"
            [chart]
            builtin = "schwarzschild_exterior"
            params = { m = 1 }

            [task]
            kind = "geodesic"
            x = [6.0, 0.0, 1.5707963267948966, 0.0]
            v = [0.0, 1.0, 0.0, 0.1]
            tau = 10
            "#,
        )
        .unwrap();
        assert!(matches!(m.task, Task::Geodesic(_)));
        let c = resolve_chart(&m.chart).unwrap();
        assert_eq!(c.chart.dim(), 4);
        assert!(c.warped.is_some());
    }

    #[test]
    fn warped_expression_chart_compiles() {
        let m = parse(
            "m.toml",
            r#"
            [chart.warped]
            warping = "exp(t)"
            base = { coords = ["t"], diagonal = ["1"] }
            fiber = { coords = ["x"], diagonal = ["1"] }

            [task]
            kind = "curvature"
            at = [0.0, 0.0]
            grid = [{ axis = "t", from = -1, to = 1, count = 3 }]
            "#,
        )
        .unwrap();
        let c = resolve_chart(&m.chart).unwrap();
        let spec = c.warped.unwrap();
        let grad = spec.warping_gradient(&[0.3]).unwrap();
        assert!((grad[0] - 0.3f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn non_smooth_warping_is_rejected() {
        let m = parse(
            "m.toml",
            r#"
            [chart.warped]
            warping = "abs(t)"
            base = { coords = ["t"], diagonal = ["1"] }
            fiber = { coords = ["x"], diagonal = ["1"] }

            [task]
            kind = "certify"
            p = 2
            q = 2
            "#,
        )
        .unwrap();
        let err = resolve_chart(&m.chart).err().unwrap();
        assert!(matches!(
            err,
            CliError::Geometry(GeometryError::Expression(warped_core::expr::ExprError::NotDifferentiable { .. }))
        ));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse("bad.toml", "[chart]\nbuiltin = \"kruskal\"\n[task]\nkind = \"orbit\"\n").unwrap_err();
        match err {
            CliError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
        let err = parse("bad.toml", "[chart]\nbuiltin = \n").unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn unknown_builtin_is_reported() {
        let spec = ChartSpec { builtin: Some("nope".into()), ..Default::default() };
        assert!(matches!(resolve_chart(&spec), Err(CliError::Geometry(GeometryError::UnknownSolution(_)))));
    }
}
