//! Core domain types: datasets, interval clauses, conjunctive predicates,
//! binary selections, and exact predicate evaluation.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed `[min, max]` of one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min: f64,
    pub max: f64,
}

impl Extent {
    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    pub fn is_constant(&self) -> bool {
        self.max == self.min
    }
}

/// An N x M table of finite reals with a 2D projection per row.
///
/// Values are stored row-major. Extents are computed at construction from
/// the values themselves, so they cannot go stale: the type is immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim_names: Vec<String>,
    values: Vec<f64>,
    extents: Vec<Extent>,
    projection: Vec<[f64; 2]>,
    row_ids: Vec<u64>,
}

impl Dataset {
    /// Builds a dataset from row-major `values` (`projection.len()` rows).
    pub fn new(
        dim_names: Vec<String>,
        values: Vec<f64>,
        projection: Vec<[f64; 2]>,
        row_ids: Vec<u64>,
    ) -> Result<Self> {
        let m = dim_names.len();
        let n = projection.len();
        if m == 0 {
            return Err(Error::NoNumericDimensions);
        }
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.len() != n * m {
            return Err(Error::InvalidInput(format!(
                "expected {} values for {n} rows x {m} dims, got {}",
                n * m,
                values.len()
            )));
        }
        if row_ids.len() != n {
            return Err(Error::InvalidInput(format!(
                "expected {n} row ids, got {}",
                row_ids.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &dim_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate dimension name {name:?}")));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at row {}, dim {}",
                pos / m,
                pos % m
            )));
        }
        if projection.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite projection coordinate".into()));
        }

        let mut extents = vec![
            Extent {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY
            };
            m
        ];
        for row in values.chunks_exact(m) {
            for (e, &v) in extents.iter_mut().zip(row) {
                e.min = e.min.min(v);
                e.max = e.max.max(v);
            }
        }

        Ok(Self {
            dim_names,
            values,
            extents,
            projection,
            row_ids,
        })
    }

    /// Convenience constructor with row ids `0..n`.
    pub fn from_rows(dim_names: Vec<String>, rows: &[Vec<f64>], projection: Vec<[f64; 2]>) -> Result<Self> {
        let m = dim_names.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::InvalidInput(format!("row {bad} has wrong arity")));
        }
        let values = rows.iter().flatten().copied().collect();
        let ids = (0..rows.len() as u64).collect();
        Self::new(dim_names, values, projection, ids)
    }

    pub fn n_rows(&self) -> usize {
        self.projection.len()
    }

    pub fn n_dims(&self) -> usize {
        self.dim_names.len()
    }

    pub fn dim_names(&self) -> &[String] {
        &self.dim_names
    }

    pub fn dim_index(&self, name: &str) -> Option<usize> {
        self.dim_names.iter().position(|d| d == name)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.n_dims();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_dims())
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_dims() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn extents(&self) -> &[Extent] {
        &self.extents
    }

    pub fn projection(&self) -> &[[f64; 2]] {
        &self.projection
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    /// Restricts the dataset to `rows` (in the given order).
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if let Some(&bad) = rows.iter().find(|&&i| i >= self.n_rows()) {
            return Err(Error::InvalidInput(format!("row index {bad} out of range")));
        }
        let values = rows.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        let projection = rows.iter().map(|&i| self.projection[i]).collect();
        let ids = rows.iter().map(|&i| self.row_ids[i]).collect();
        Self::new(self.dim_names.clone(), values, projection, ids)
    }
}

/// One interval constraint `lo <= x[dim] <= hi`, in original units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Clause {
    pub fn new(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidPredicate(format!("non-finite bound on dim {dim}")));
        }
        if lo > hi {
            return Err(Error::InvalidPredicate(format!(
                "clause on dim {dim} has lo {lo} > hi {hi}"
            )));
        }
        Ok(Self { dim, lo, hi })
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

/// A conjunction of clauses, at most one per dimension.
///
/// Clauses are kept sorted by dimension index. The empty predicate accepts
/// every row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predicate {
    clauses: Vec<Clause>,
}

impl Predicate {
    pub fn new(mut clauses: Vec<Clause>) -> Result<Self> {
        clauses.sort_by_key(|c| c.dim);
        for w in clauses.windows(2) {
            if w[0].dim == w[1].dim {
                return Err(Error::InvalidPredicate(format!(
                    "two clauses on dimension {}",
                    w[0].dim
                )));
            }
        }
        for c in &clauses {
            Clause::new(c.dim, c.lo, c.hi)?;
        }
        Ok(Self { clauses })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.clauses.iter().map(|c| c.dim)
    }

    pub fn clause_for(&self, dim: usize) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.dim == dim)
    }

    /// Membership of a single row. Panics if a clause indexes past `row`.
    #[inline]
    pub fn contains(&self, row: &[f64]) -> bool {
        self.clauses.iter().all(|c| c.contains(row[c.dim]))
    }

    fn check_dims(&self, n_dims: usize) -> Result<()> {
        match self.clauses.iter().find(|c| c.dim >= n_dims) {
            Some(c) => Err(Error::InvalidPredicate(format!(
                "dimension index {} out of range (M = {n_dims})",
                c.dim
            ))),
            None => Ok(()),
        }
    }

    pub fn to_wire(&self, ds: &Dataset) -> PredicateWire {
        PredicateWire {
            clauses: self
                .clauses
                .iter()
                .map(|c| ClauseWire {
                    dim: ds.dim_names()[c.dim].clone(),
                    lo: c.lo,
                    hi: c.hi,
                })
                .collect(),
        }
    }

    pub fn from_wire(wire: &PredicateWire, ds: &Dataset) -> Result<Self> {
        let clauses = wire
            .clauses
            .iter()
            .map(|c| {
                let dim = ds
                    .dim_index(&c.dim)
                    .ok_or_else(|| Error::InvalidPredicate(format!("unknown dimension {:?}", c.dim)))?;
                Clause::new(dim, c.lo, c.hi)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(clauses)
    }
}

/// Wire form of a predicate: dimensions by name, bounds in original units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredicateWire {
    pub clauses: Vec<ClauseWire>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseWire {
    pub dim: String,
    pub lo: f64,
    pub hi: f64,
}

/// Binary labels splitting rows into pattern points (true) and background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSelection {
    labels: Vec<bool>,
    n_positive: usize,
}

impl LabeledSelection {
    /// Fails unless there is at least one positive and one background row.
    pub fn new(labels: Vec<bool>) -> Result<Self> {
        let n_positive = labels.iter().filter(|&&y| y).count();
        if n_positive == 0 {
            return Err(Error::EmptySelection("no points selected".into()));
        }
        if n_positive == labels.len() {
            return Err(Error::EmptySelection("no background points".into()));
        }
        Ok(Self { labels, n_positive })
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.n_positive
    }

    pub fn n_background(&self) -> usize {
        self.labels.len() - self.n_positive
    }
}

/// Agreement between predicate membership and the user's selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointCategory {
    #[serde(rename = "TP")]
    TruePositive,
    #[serde(rename = "FP")]
    FalsePositive,
    #[serde(rename = "FN")]
    FalseNegative,
    #[serde(rename = "TN")]
    TrueNegative,
}

impl PointCategory {
    pub fn of(selected: bool, member: bool) -> Self {
        match (selected, member) {
            (true, true) => Self::TruePositive,
            (false, true) => Self::FalsePositive,
            (true, false) => Self::FalseNegative,
            (false, false) => Self::TrueNegative,
        }
    }

    /// Display color: TP purple, FP red, FN blue, TN grey.
    pub fn color(&self) -> &'static str {
        match self {
            Self::TruePositive => "#7b3294",
            Self::FalsePositive => "#d7191c",
            Self::FalseNegative => "#2c7bb6",
            Self::TrueNegative => "#bababa",
        }
    }
}

/// Exact membership of every row; endpoints are inclusive.
pub fn evaluate_predicate(pred: &Predicate, ds: &Dataset) -> Result<Vec<bool>> {
    pred.check_dims(ds.n_dims())?;
    Ok(ds.rows().map(|row| pred.contains(row)).collect())
}

/// Per-row category comparing `labels` against predicate membership.
pub fn categorize_labels(labels: &[bool], membership: &[bool]) -> Result<Vec<PointCategory>> {
    if labels.len() != membership.len() {
        return Err(Error::InvalidInput(format!(
            "label length {} does not match row count {}",
            labels.len(),
            membership.len()
        )));
    }
    Ok(labels
        .iter()
        .zip(membership)
        .map(|(&y, &m)| PointCategory::of(y, m))
        .collect())
}

pub fn categorize(pred: &Predicate, sel: &LabeledSelection, ds: &Dataset) -> Result<Vec<PointCategory>> {
    if sel.len() != ds.n_rows() {
        return Err(Error::InvalidInput(format!(
            "selection has {} labels for {} rows",
            sel.len(),
            ds.n_rows()
        )));
    }
    let membership = evaluate_predicate(pred, ds)?;
    categorize_labels(sel.labels(), &membership)
}

/// Result of [`clamp_to_extent`]: the clamped predicate plus the dimensions
/// whose clause missed the extent entirely and collapsed to a point.
#[derive(Debug, Clone, PartialEq)]
pub struct ClampedPredicate {
    pub predicate: Predicate,
    pub degenerate_dims: Vec<usize>,
}

/// Intersects each clause with its dimension's extent for display.
pub fn clamp_to_extent(pred: &Predicate, ds: &Dataset) -> Result<ClampedPredicate> {
    pred.check_dims(ds.n_dims())?;
    let mut degenerate_dims = Vec::new();
    let clauses = pred
        .clauses()
        .iter()
        .map(|c| {
            let e = ds.extents()[c.dim];
            let (lo, hi) = (c.lo.max(e.min), c.hi.min(e.max));
            if lo > hi {
                degenerate_dims.push(c.dim);
                // Nearest bound: the whole interval lies on one side.
                let p = if c.lo > e.max { e.max } else { e.min };
                Clause { dim: c.dim, lo: p, hi: p }
            } else {
                Clause { dim: c.dim, lo, hi }
            }
        })
        .collect();
    Ok(ClampedPredicate {
        predicate: Predicate { clauses },
        degenerate_dims,
    })
}
