//! Gesture handling: turns boxes, lassos, two-region contrasts and drag
//! paths in projection space into labeled selections.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabeledSelection};
use crate::error::{Error, Result};

/// Maximum number of brushes a drag is discretized into.
pub const MAX_DRAG_STEPS: usize = 32;

/// Step spacing as a fraction of the start box's shorter side.
pub const DRAG_STRIDE_FRACTION: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Region {
    Box { x0: f64, y0: f64, x1: f64, y1: f64 },
    Lasso { points: Vec<[f64; 2]> },
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        match self {
            Region::Box { x0, y0, x1, y1 } => {
                if ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
                    return Err(Error::InvalidInput("box has non-finite corner".into()));
                }
                if !(x0 < x1 && y0 < y1) {
                    return Err(Error::InvalidInput("box needs x0 < x1 and y0 < y1".into()));
                }
            }
            Region::Lasso { points } => {
                if points.len() < 3 {
                    return Err(Error::InvalidInput("lasso needs at least 3 vertices".into()));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("lasso has non-finite vertex".into()));
                }
            }
        }
        Ok(())
    }

    /// Box bounds are inclusive; lassos use the even-odd rule.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self {
            Region::Box { x0, y0, x1, y1 } => *x0 <= p[0] && p[0] <= *x1 && *y0 <= p[1] && p[1] <= *y1,
            Region::Lasso { points } => {
                let mut inside = false;
                let mut j = points.len() - 1;
                for i in 0..points.len() {
                    let (a, b) = (points[i], points[j]);
                    if (a[1] > p[1]) != (b[1] > p[1])
                        && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
                    {
                        inside = !inside;
                    }
                    j = i;
                }
                inside
            }
        }
    }

    pub fn translated(&self, d: [f64; 2]) -> Region {
        match self {
            Region::Box { x0, y0, x1, y1 } => Region::Box {
                x0: x0 + d[0],
                y0: y0 + d[1],
                x1: x1 + d[0],
                y1: y1 + d[1],
            },
            Region::Lasso { points } => Region::Lasso {
                points: points.iter().map(|p| [p[0] + d[0], p[1] + d[1]]).collect(),
            },
        }
    }

    fn membership(&self, ds: &Dataset) -> Vec<bool> {
        ds.projection().iter().map(|&p| self.contains(p)).collect()
    }
}

/// Labels rows inside `region` as pattern points, all others as background.
pub fn select(region: &Region, ds: &Dataset) -> Result<LabeledSelection> {
    region.validate()?;
    LabeledSelection::new(region.membership(ds))
}

/// What the two contrast selections are compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContrastBackground {
    /// Only rows in either region take part; each region is the other's
    /// background.
    #[default]
    Pair,
    /// Each region is contrasted against every other row of the dataset.
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastSelection {
    /// Dataset rows the two selections are defined over, ascending.
    pub rows: Vec<usize>,
    /// Labels over `rows`: first region positive.
    pub first: LabeledSelection,
    /// Labels over `rows`: second region positive.
    pub second: LabeledSelection,
    /// Rows inside both regions; they are assigned to the first.
    pub ambiguous_count: usize,
}

pub fn select_contrast(
    region_p: &Region,
    region_b: &Region,
    ds: &Dataset,
    background: ContrastBackground,
) -> Result<ContrastSelection> {
    region_p.validate()?;
    region_b.validate()?;
    let in_p = region_p.membership(ds);
    let in_b_raw = region_b.membership(ds);
    let ambiguous_count = in_p.iter().zip(&in_b_raw).filter(|(p, b)| **p && **b).count();
    let in_b: Vec<bool> = in_p.iter().zip(&in_b_raw).map(|(p, b)| *b && !*p).collect();

    if !in_p.contains(&true) {
        return Err(Error::EmptySelection("first contrast region contains no points".into()));
    }
    if !in_b.contains(&true) {
        return Err(Error::EmptySelection("second contrast region contains no points".into()));
    }

    let rows: Vec<usize> = match background {
        ContrastBackground::Pair => (0..ds.n_rows()).filter(|&i| in_p[i] || in_b[i]).collect(),
        ContrastBackground::Global => (0..ds.n_rows()).collect(),
    };
    let first = LabeledSelection::new(rows.iter().map(|&i| in_p[i]).collect())?;
    let second = LabeledSelection::new(rows.iter().map(|&i| in_b[i]).collect())?;
    Ok(ContrastSelection {
        rows,
        first,
        second,
        ambiguous_count,
    })
}

/// A box dragged along a polyline of centroid offsets from its start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragPath {
    pub start: Region,
    pub waypoints: Vec<[f64; 2]>,
}

impl DragPath {
    fn vertices(&self) -> Vec<[f64; 2]> {
        std::iter::once([0.0, 0.0]).chain(self.waypoints.iter().copied()).collect()
    }

    pub fn length(&self) -> f64 {
        self.vertices()
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .sum()
    }

    /// Offset of the centroid after travelling arc-length `s` along the path.
    pub fn offset_at(&self, s: f64) -> [f64; 2] {
        let verts = self.vertices();
        let mut remaining = s.max(0.0);
        for w in verts.windows(2) {
            let seg = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            if seg > 0.0 && remaining <= seg {
                let t = remaining / seg;
                return [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
            }
            remaining -= seg;
        }
        verts[verts.len() - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrushSequence {
    pub steps: Vec<LabeledSelection>,
    pub step_regions: Vec<Region>,
    pub warnings: Vec<String>,
}

impl BrushSequence {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Arc-length positions at which brush steps are taken along a path of
/// length `length` with the given `stride`.
///
/// One step every `stride`, plus the endpoint when it falls between
/// strides; resampled uniformly to [`MAX_DRAG_STEPS`] when that is exceeded.
pub fn drag_positions(length: f64, stride: f64) -> Vec<f64> {
    let tol = 1e-9;
    let k_max = (length / stride + tol).floor() as usize;
    let mut pos: Vec<f64> = (0..=k_max).map(|k| k as f64 * stride).collect();
    if length - k_max as f64 * stride > tol * stride {
        pos.push(length);
    }
    if pos.len() > MAX_DRAG_STEPS {
        let last = (MAX_DRAG_STEPS - 1) as f64;
        pos = (0..MAX_DRAG_STEPS).map(|k| length * k as f64 / last).collect();
    }
    pos
}

pub fn discretize_drag(path: &DragPath, ds: &Dataset) -> Result<BrushSequence> {
    path.start.validate()?;
    let Region::Box { x0, y0, x1, y1 } = path.start else {
        return Err(Error::InvalidInput("drag must start from a box".into()));
    };
    if path.waypoints.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("drag path has non-finite waypoint".into()));
    }
    let length = path.length();
    if length.is_nan() || length <= 0.0 {
        return Err(Error::InvalidInput("drag path has zero length".into()));
    }
    let stride = DRAG_STRIDE_FRACTION * (x1 - x0).min(y1 - y0);

    let mut steps = Vec::new();
    let mut step_regions = Vec::new();
    let mut warnings = Vec::new();
    for (k, s) in drag_positions(length, stride).into_iter().enumerate() {
        let region = path.start.translated(path.offset_at(s));
        match LabeledSelection::new(region.membership(ds)) {
            Ok(sel) => {
                steps.push(sel);
                step_regions.push(region);
            }
            Err(e) => {
                let msg = format!("dropped drag step {k}: {e}");
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    if steps.is_empty() {
        return Err(Error::EmptySelection("every drag step is empty".into()));
    }
    if steps.len() < 2 {
        return Err(Error::EmptySelection("drag yields fewer than two non-empty steps".into()));
    }
    Ok(BrushSequence {
        steps,
        step_regions,
        warnings,
    })
}
