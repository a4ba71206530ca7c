//! Batch front end: load a CSV, replay gestures from a JSON file, write
//! predicates, categories, a plain-text report and an optional SVG.

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use serde::Deserialize;
use serde_json::{json, Value};

use predbridge_core::{
    load_csv_path, normalize, run_query, Algorithm, ContrastBackground, Error, Gesture, IngestConfig, QueryConfig,
    QueryResult, RegressionConfig, RpiConfig,
};

const OUTPUTS: [&str; 4] = ["predicates.json", "categories.json", "report.txt", "projection.svg"];

#[derive(Parser, Debug)]
#[command(version, about = "Explain brushed patterns in a 2D projection with interval predicates")]
struct Args {
    /// CSV with numeric dimensions and optional `x`,`y` projection columns.
    #[arg(long)]
    input: PathBuf,
    /// JSON file holding one gesture or an array of gestures.
    #[arg(long)]
    gestures: PathBuf,
    #[arg(long, value_enum, default_value = "regression")]
    algorithm: AlgorithmArg,
    /// JSON file with optional `regression`, `rpi`, `ingest` and
    /// `contrast_background` sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `regression.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
    /// Also write `projection.svg` colored by the last brush's categories.
    #[arg(long)]
    svg: bool,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum AlgorithmArg {
    Regression,
    Rpi,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    regression: RegressionConfig,
    rpi: RpiConfig,
    ingest: IngestConfig,
    contrast_background: ContrastBackground,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GestureFile {
    One(Gesture),
    Many(Vec<Gesture>),
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {what} {}", path.display()))
}

/// Serializes through `Value`, whose maps are ordered, so key order is
/// stable across runs.
fn sorted_json(v: &impl serde::Serialize) -> Result<String> {
    let value = serde_json::to_value(v)?;
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

fn report(results: &[QueryResult]) -> String {
    let mut out = String::new();
    for (g, r) in results.iter().enumerate() {
        out += &format!("gesture {} ({}, {:?})\n", g + 1, r.gesture, r.algorithm);
        if let Some(n) = r.ambiguous_count {
            out += &format!("  ambiguous rows: {n}\n");
        }
        for w in &r.warnings {
            out += &format!("  warning: {w}\n");
        }
        for b in &r.brushes {
            let c = &b.counts;
            out += &format!(
                "  {}: F1 {:.4}  accuracy {:.4}  TP {} FP {} FN {} TN {}\n",
                b.label,
                b.f1,
                c.accuracy(),
                c.tp,
                c.fp,
                c.fn_,
                c.tn
            );
            if b.predicate.clauses.is_empty() {
                out += "    predicate: (all rows)\n";
            }
            for cl in &b.predicate.clauses {
                out += &format!("    {} in [{}, {}]\n", cl.dim, cl.lo, cl.hi);
            }
            if !b.dropped_dims.is_empty() {
                out += &format!("    dropped dims: {}\n", b.dropped_dims.join(", "));
            }
            if let (Some(it), Some(conv)) = (b.iterations, b.converged) {
                out += &format!("    iterations: {it} ({})\n", if conv { "converged" } else { "iteration cap" });
            }
        }
    }
    out
}

fn run(args: &Args) -> Result<()> {
    let cfg: FileConfig = match &args.config {
        Some(p) => read_json(p, "config")?,
        None => FileConfig::default(),
    };
    let gestures = match read_json::<GestureFile>(&args.gestures, "gestures")? {
        GestureFile::One(g) => vec![g],
        GestureFile::Many(v) => v,
    };
    if gestures.is_empty() {
        bail!("gesture file {} holds no gestures", args.gestures.display());
    }

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let wanted = if args.svg { &OUTPUTS[..] } else { &OUTPUTS[..3] };
    if !args.force {
        if let Some(existing) = wanted.iter().map(|f| args.out.join(f)).find(|p| p.exists()) {
            bail!("{} exists; pass --force to overwrite", existing.display());
        }
    }

    let (ds, load) = load_csv_path(&args.input, &cfg.ingest).with_context(|| format!("loading {}", args.input.display()))?;
    if !load.rows_rejected.is_empty() {
        eprintln!("warning: {} rows rejected", load.rows_rejected.len());
    }
    let view = normalize(&ds);
    let mut qcfg = QueryConfig {
        regression: cfg.regression,
        rpi: cfg.rpi,
        contrast_background: cfg.contrast_background,
    };
    if let Some(seed) = args.seed {
        qcfg.regression.seed = seed;
    }
    let algorithm = match args.algorithm {
        AlgorithmArg::Regression => Algorithm::Regression,
        AlgorithmArg::Rpi => Algorithm::Rpi,
    };

    let results = gestures
        .iter()
        .map(|g| run_query(&ds, &view, g, algorithm, &qcfg))
        .collect::<predbridge_core::Result<Vec<_>>>()?;

    let predicates = if results.len() == 1 { sorted_json(&results[0])? } else { sorted_json(&results)? };
    let categories: Vec<Value> = results
        .iter()
        .enumerate()
        .flat_map(|(g, r)| {
            r.brushes.iter().map(move |b| {
                json!({ "gesture": g + 1, "label": b.label, "counts": b.counts, "categories": b.categories, "rows": b.rows })
            })
        })
        .collect();

    fs::write(args.out.join("predicates.json"), predicates)?;
    fs::write(args.out.join("categories.json"), sorted_json(&categories)?)?;
    fs::write(args.out.join("report.txt"), report(&results))?;
    if args.svg {
        let last = results.last().and_then(|r| r.brushes.last()).expect("at least one brush");
        fs::write(args.out.join("projection.svg"), svg::projection(&ds, last))?;
    }
    Ok(())
}

/// 2 for optimizer divergence, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Divergence { .. }) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn divergence_maps_to_exit_2() {
        let div = Error::Divergence {
            iteration: 3,
            last_loss: 0.5,
            last_finite: Vec::new(),
        };
        assert_eq!(exit_code(&anyhow::Error::from(div)), 2);
        assert_eq!(exit_code(&anyhow::Error::from(Error::EmptyDataset)), 1);
        assert_eq!(exit_code(&anyhow::anyhow!("missing file")), 1);
    }
}
