//! `warped`: run geometry tasks described by TOML manifests.

mod compare;
mod doctor;
mod error;
mod manifest;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use warped_core::atlas;

use crate::error::{CliError, CliResult};
use crate::manifest::Format;
use crate::output::Provenance;

#[derive(Parser)]
#[command(name = "warped", version, about = "Warped-product geometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled solutions and the task kinds.
    List {
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run the task in a manifest and write its output file.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Task tolerance: relative ODE tolerance or classification threshold.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Sup-norm difference of two trajectory CSVs sampled on the same grid.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Fail when the difference exceeds this.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Run the invariant suite over every bundled solution.
    Doctor {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// How a command ended, mapped to the process exit code.
enum Outcome {
    Done,
    /// Output written, but the computation stopped at a domain boundary.
    Partial,
}

const TASKS: &[&str] =
    &["geodesic", "reduced-geodesic", "mechanical", "curvature", "classify", "fluid", "killing", "certify"];

fn list(format: Option<Format>) -> CliResult<Outcome> {
    let infos = atlas::list();
    if format == Some(Format::Json) {
        let doc = json!({ "solutions": infos, "tasks": TASKS });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializes"));
        return Ok(Outcome::Done);
    }
    if format == Some(Format::Csv) {
        println!("id,params,summary");
        for i in &infos {
            let params: Vec<String> = i.params.iter().map(|(k, d)| format!("{k}={d}")).collect();
            println!("{},\"{}\",\"{}\"", i.id, params.join(" "), i.summary);
        }
        return Ok(Outcome::Done);
    }
    println!("solutions:");
    for i in &infos {
        let params: Vec<String> = i.params.iter().map(|(k, d)| format!("{k}={d}")).collect();
        let params = if params.is_empty() { String::new() } else { format!(" [{}]", params.join(", ")) };
        println!("  {:<26}{}{}", i.id, i.summary, params);
    }
    println!("tasks: {}", TASKS.join(", "));
    Ok(Outcome::Done)
}

fn run(manifest_path: &Path, out: &Path, tol: Option<f64>, seed: Option<u64>, format: Option<Format>) -> CliResult<Outcome> {
    let shown = manifest_path.display().to_string();
    let text = std::fs::read_to_string(manifest_path).map_err(|e| CliError::io(&shown, e))?;
    let manifest = manifest::parse(&shown, &text)?;
    let chart = manifest::resolve_chart(&manifest.chart)?;
    let ctx = tasks::Context { seed: seed.unwrap_or(manifest.seed), tol: tol.or(manifest.tol) };
    if let Some(t) = ctx.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Manifest(format!("tolerance must be positive, got {t}")));
        }
    }
    let format = format.or(manifest.output.format).unwrap_or_else(|| manifest.task.default_format());
    let name = manifest.output.path.clone().unwrap_or_else(|| format!("{}.{}", manifest.task.name(), format.extension()));
    let path = out.join(name);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))?;
    }

    let artifact = tasks::run(&manifest, &chart, &ctx)?;
    let provenance = Provenance {
        tool: "warped",
        version: env!("CARGO_PKG_VERSION"),
        manifest_sha256: output::sha256_hex(text.as_bytes()),
        task: manifest.task.name(),
        chart: chart.chart.name().to_string(),
        seed: ctx.seed,
        tol: ctx.tol,
    };
    output::write(&path, format, &artifact, &provenance)?;
    println!("{}", path.display());
    match &artifact.partial {
        Some(why) => {
            eprintln!("warped: partial output, {why}");
            Ok(Outcome::Partial)
        }
        None => Ok(Outcome::Done),
    }
}

fn compare(a: &Path, b: &Path, tol: Option<f64>, format: Option<Format>) -> CliResult<Outcome> {
    let cmp = compare::compare(&output::read_csv(a)?, &output::read_csv(b)?)?;
    if format == Some(Format::Json) {
        println!("{}", serde_json::to_string_pretty(&cmp).expect("serializes"));
    } else {
        println!(
            "sup difference {} over {} rows ({} unmatched), columns {}",
            output::format_float(cmp.sup_difference),
            cmp.rows,
            cmp.unmatched_rows,
            cmp.columns.join(",")
        );
        if let (Some(c), Some(t)) = (&cmp.worst_column, cmp.worst_tau) {
            println!("worst at tau = {t} in column {c}");
        }
    }
    match tol {
        Some(t) if !(cmp.sup_difference <= t) => {
            Err(CliError::Failed(format!("sup difference {:e} exceeds tolerance {t:e}", cmp.sup_difference)))
        }
        _ => Ok(Outcome::Done),
    }
}

fn doctor(seed: u64) -> CliResult<Outcome> {
    let checks = doctor::run(seed);
    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("doctor: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        Ok(Outcome::Done)
    } else {
        Err(CliError::Failed(format!("{failed} invariant checks failed")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::List { format } => list(format),
        Command::Run { manifest, out, tol, seed, format } => run(&manifest, &out, tol, seed, format),
        Command::Compare { a, b, tol, format } => compare(&a, &b, tol, format),
        Command::Doctor { seed } => doctor(seed),
    };
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("warped: error: {e}");
            ExitCode::from(1)
        }
    }
}
