//! One gesture in, predicates out: the request/response shape shared by the
//! HTTP service and the batch CLI.

use serde::{Deserialize, Serialize};

use crate::data::{categorize_labels, evaluate_predicate, Dataset, LabeledSelection, PointCategory, Predicate, PredicateWire};
use crate::error::Result;
use crate::ingest::{normalize, NormalizedView};
use crate::metrics::{confusion, Confusion};
use crate::regression::{fit, RegressionConfig};
use crate::rpi::{rpi_fit, RpiConfig};
use crate::selection::{discretize_drag, select, select_contrast, ContrastBackground, DragPath, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Gesture {
    Select { region: Region },
    Contrast { region_p: Region, region_b: Region },
    Draw { path: DragPath },
}

impl Gesture {
    pub fn name(&self) -> &'static str {
        match self {
            Gesture::Select { .. } => "select",
            Gesture::Contrast { .. } => "contrast",
            Gesture::Draw { .. } => "draw",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    #[default]
    Regression,
    Rpi,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConfig {
    pub regression: RegressionConfig,
    pub rpi: RpiConfig,
    pub contrast_background: ContrastBackground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWire {
    pub predicate: PredicateWire,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrushResult {
    /// `selection`, `region_p` / `region_b`, or `step_<t>` (1-based).
    pub label: String,
    pub region: Region,
    pub predicate: PredicateWire,
    pub f1: f64,
    pub counts: Confusion,
    /// One category per row of `rows` (or of the dataset when absent).
    pub categories: Vec<PointCategory>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<usize>>,
    pub dropped_dims: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    /// Full RPI beam, best first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beam: Option<Vec<ScoredWire>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRange {
    pub lo: f64,
    pub hi: f64,
    /// False when the brush's predicate has no clause on this dimension and
    /// the range is the full extent.
    pub constrained: bool,
}

/// Interval bars for one dimension: one range per brush.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimIntervals {
    pub dim: String,
    pub extent: [f64; 2],
    pub ranges: Vec<IntervalRange>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub gesture: String,
    pub algorithm: Algorithm,
    pub brushes: Vec<BrushResult>,
    /// Union of constrained dimensions across brushes, in column order.
    pub dims: Vec<String>,
    pub predicate_view: Vec<DimIntervals>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ambiguous_count: Option<usize>,
    pub warnings: Vec<String>,
}

struct Induced {
    predicate: Predicate,
    dropped_dims: Vec<usize>,
    iterations: Option<usize>,
    converged: Option<bool>,
    beam: Option<Vec<(Predicate, f64)>>,
}

fn induce(
    brushes: &[LabeledSelection],
    ds: &Dataset,
    view: &NormalizedView,
    algorithm: Algorithm,
    cfg: &QueryConfig,
) -> Result<Vec<Induced>> {
    match algorithm {
        Algorithm::Regression => Ok(fit(brushes, ds, view, &cfg.regression)?
            .into_iter()
            .map(|r| Induced {
                predicate: r.hard,
                dropped_dims: r.dropped_dims,
                iterations: Some(r.iterations),
                converged: Some(r.converged),
                beam: None,
            })
            .collect()),
        Algorithm::Rpi => brushes
            .iter()
            .map(|sel| {
                let beam = rpi_fit(sel, ds, &cfg.rpi)?;
                Ok(Induced {
                    predicate: beam[0].predicate.clone(),
                    dropped_dims: Vec::new(),
                    iterations: None,
                    converged: None,
                    beam: Some(beam.into_iter().map(|s| (s.predicate, s.f1)).collect()),
                })
            })
            .collect(),
    }
}

fn brush_result(
    label: String,
    region: Region,
    sel: &LabeledSelection,
    induced: Induced,
    fit_ds: &Dataset,
    rows: Option<Vec<usize>>,
) -> Result<BrushResult> {
    let member = evaluate_predicate(&induced.predicate, fit_ds)?;
    let counts = confusion(&member, sel.labels())?;
    let names = fit_ds.dim_names();
    Ok(BrushResult {
        label,
        region,
        predicate: induced.predicate.to_wire(fit_ds),
        f1: counts.f1(),
        counts,
        categories: categorize_labels(sel.labels(), &member)?,
        rows,
        dropped_dims: induced.dropped_dims.iter().map(|&j| names[j].clone()).collect(),
        iterations: induced.iterations,
        converged: induced.converged,
        beam: induced.beam.map(|b| {
            b.into_iter()
                .map(|(p, f1)| ScoredWire {
                    predicate: p.to_wire(fit_ds),
                    f1,
                })
                .collect()
        }),
    })
}

fn predicate_view(ds: &Dataset, brushes: &[BrushResult]) -> (Vec<String>, Vec<DimIntervals>) {
    let dims: Vec<usize> = (0..ds.n_dims())
        .filter(|&j| {
            let name = &ds.dim_names()[j];
            brushes.iter().any(|b| b.predicate.clauses.iter().any(|c| &c.dim == name))
        })
        .collect();
    let view = dims
        .iter()
        .map(|&j| {
            let name = &ds.dim_names()[j];
            let e = ds.extents()[j];
            DimIntervals {
                dim: name.clone(),
                extent: [e.min, e.max],
                ranges: brushes
                    .iter()
                    .map(|b| match b.predicate.clauses.iter().find(|c| &c.dim == name) {
                        Some(c) => IntervalRange {
                            lo: c.lo,
                            hi: c.hi,
                            constrained: true,
                        },
                        None => IntervalRange {
                            lo: e.min,
                            hi: e.max,
                            constrained: false,
                        },
                    })
                    .collect(),
            }
        })
        .collect();
    (dims.iter().map(|&j| ds.dim_names()[j].clone()).collect(), view)
}

/// Runs one gesture end to end. `view` must be `normalize(ds)`.
pub fn run_query(
    ds: &Dataset,
    view: &NormalizedView,
    gesture: &Gesture,
    algorithm: Algorithm,
    cfg: &QueryConfig,
) -> Result<QueryResult> {
    let mut warnings = Vec::new();
    let mut ambiguous_count = None;

    let brushes = match gesture {
        Gesture::Select { region } => {
            let sel = select(region, ds)?;
            let induced = induce(std::slice::from_ref(&sel), ds, view, algorithm, cfg)?;
            induced
                .into_iter()
                .map(|ind| brush_result("selection".into(), region.clone(), &sel, ind, ds, None))
                .collect::<Result<Vec<_>>>()?
        }
        Gesture::Contrast { region_p, region_b } => {
            let c = select_contrast(region_p, region_b, ds, cfg.contrast_background)?;
            ambiguous_count = Some(c.ambiguous_count);
            let (fit_ds, rows) = match cfg.contrast_background {
                ContrastBackground::Pair => (ds.subset(&c.rows)?, Some(c.rows.clone())),
                ContrastBackground::Global => (ds.clone(), None),
            };
            let fit_view = normalize(&fit_ds);
            let mut out = Vec::with_capacity(2);
            for (label, region, sel) in [("region_p", region_p, &c.first), ("region_b", region_b, &c.second)] {
                let ind = induce(std::slice::from_ref(sel), &fit_ds, &fit_view, algorithm, cfg)?
                    .pop()
                    .expect("one result per brush");
                out.push(brush_result(label.into(), region.clone(), sel, ind, &fit_ds, rows.clone())?);
            }
            out
        }
        Gesture::Draw { path } => {
            let seq = discretize_drag(path, ds)?;
            warnings.extend(seq.warnings.iter().cloned());
            let induced = induce(&seq.steps, ds, view, algorithm, cfg)?;
            induced
                .into_iter()
                .zip(seq.steps.iter().zip(&seq.step_regions))
                .enumerate()
                .map(|(t, (ind, (sel, region)))| {
                    brush_result(format!("step_{}", t + 1), region.clone(), sel, ind, ds, None)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let (dims, predicate_view) = predicate_view(ds, &brushes);
    Ok(QueryResult {
        gesture: gesture.name().into(),
        algorithm,
        brushes,
        dims,
        predicate_view,
        ambiguous_count,
        warnings,
    })
}
