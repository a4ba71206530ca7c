//! Recursive predicate induction: a greedy, bottom-up beam search over
//! bin-aligned interval clauses, scored by F1 against the selection.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::data::{Clause, Dataset, LabeledSelection, Predicate};
use crate::error::{Error, Result};
use crate::metrics::confusion;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpiConfig {
    /// Equal-frequency bins per dimension.
    pub bins_per_dim: usize,
    /// Clause cap; `None` means the number of dimensions.
    pub max_clauses: Option<usize>,
    pub beam_width: usize,
    pub min_improvement: f64,
}

impl Default for RpiConfig {
    fn default() -> Self {
        Self {
            bins_per_dim: 20,
            max_clauses: None,
            beam_width: 3,
            min_improvement: 1e-4,
        }
    }
}

impl RpiConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins_per_dim < 2 {
            return Err(Error::InvalidInput("bins_per_dim must be at least 2".into()));
        }
        if self.beam_width == 0 {
            return Err(Error::InvalidInput("beam_width must be at least 1".into()));
        }
        if self.min_improvement.is_nan() || self.min_improvement < 0.0 {
            return Err(Error::InvalidInput("min_improvement must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPredicate {
    pub predicate: Predicate,
    pub f1: f64,
}

pub fn f1_score(pred_labels: &[bool], truth: &[bool]) -> Result<f64> {
    Ok(confusion(pred_labels, truth)?.f1())
}

/// Equal-frequency bin edges per dimension (`bins + 1` strictly increasing
/// values, fewer with heavy ties; empty for constant dimensions).
///
/// Interior edges sit midway between consecutive sorted values so that
/// every row falls in exactly one bin unless values tie across an edge.
pub fn bin_edges(ds: &Dataset, bins: usize) -> Vec<Vec<f64>> {
    (0..ds.n_dims())
        .map(|j| {
            let mut col = ds.column(j);
            col.sort_by(f64::total_cmp);
            let n = col.len();
            if col[0] == col[n - 1] {
                return Vec::new();
            }
            let mut edges = vec![col[0]];
            for k in 1..bins {
                let idx = ((k * n) as f64 / bins as f64).round() as usize;
                let idx = idx.clamp(1, n - 1);
                edges.push(0.5 * (col[idx - 1] + col[idx]));
            }
            edges.push(col[n - 1]);
            edges.dedup();
            edges
        })
        .collect()
}

/// A contiguous run of bins `first..=last` on one dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct BinRun {
    dim: usize,
    first: usize,
    last: usize,
}

impl BinRun {
    fn clause(&self, edges: &[Vec<f64>]) -> Clause {
        let e = &edges[self.dim];
        Clause {
            dim: self.dim,
            lo: e[self.first],
            hi: e[self.last + 1],
        }
    }
}

fn candidate_runs(edges: &[Vec<f64>]) -> Vec<BinRun> {
    let mut out = Vec::new();
    for (dim, e) in edges.iter().enumerate() {
        let bins = e.len().saturating_sub(1);
        for first in 0..bins {
            for last in first..bins {
                out.push(BinRun { dim, first, last });
            }
        }
    }
    out
}

/// Every contiguous run of equal-frequency bins on every dimension, as
/// clauses in original units.
pub fn candidate_clauses(ds: &Dataset, cfg: &RpiConfig) -> Result<Vec<Clause>> {
    cfg.validate()?;
    let edges = bin_edges(ds, cfg.bins_per_dim);
    Ok(candidate_runs(&edges).iter().map(|r| r.clause(&edges)).collect())
}

struct Search<'a> {
    ds: &'a Dataset,
    labels: &'a [bool],
    edges: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
struct State {
    runs: Vec<BinRun>,
    clauses: Vec<Clause>,
    f1: f64,
}

impl Search<'_> {
    fn state(&self, mut runs: Vec<BinRun>) -> Result<State> {
        runs.sort();
        let clauses: Vec<Clause> = runs.iter().map(|r| r.clause(&self.edges)).collect();
        let member: Vec<bool> = self
            .ds
            .rows()
            .map(|row| clauses.iter().all(|c| c.contains(row[c.dim])))
            .collect();
        let f1 = f1_score(&member, self.labels)?;
        Ok(State { runs, clauses, f1 })
    }

    fn bins(&self, dim: usize) -> usize {
        self.edges[dim].len() - 1
    }

    /// Moves one endpoint of one clause by a single bin.
    fn refinements(&self, s: &State) -> Vec<Vec<BinRun>> {
        let mut out = Vec::new();
        for (k, r) in s.runs.iter().enumerate() {
            let mut moves = Vec::with_capacity(4);
            if r.first > 0 {
                moves.push((r.first - 1, r.last));
            }
            if r.first < r.last {
                moves.push((r.first + 1, r.last));
                moves.push((r.first, r.last - 1));
            }
            if r.last + 1 < self.bins(r.dim) {
                moves.push((r.first, r.last + 1));
            }
            for (first, last) in moves {
                let mut runs = s.runs.clone();
                runs[k] = BinRun { first, last, ..*r };
                out.push(runs);
            }
        }
        out
    }
}

/// Best first: higher F1, then fewer clauses, then lower dimension
/// indices, then lower lower bounds.
fn rank(a: &State, b: &State) -> Ordering {
    b.f1.total_cmp(&a.f1)
        .then(a.runs.len().cmp(&b.runs.len()))
        .then_with(|| a.runs.iter().map(|r| r.dim).cmp(b.runs.iter().map(|r| r.dim)))
        .then_with(|| {
            a.clauses
                .iter()
                .zip(&b.clauses)
                .map(|(x, y)| x.lo.total_cmp(&y.lo))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.runs.cmp(&b.runs))
}

fn keep_top(mut pool: Vec<State>, width: usize) -> Vec<State> {
    pool.sort_by(rank);
    let mut seen = HashSet::new();
    pool.retain(|s| seen.insert(s.runs.clone()));
    pool.truncate(width);
    pool
}

/// Beam search from single-clause predicates, alternately adding a clause on
/// an unused dimension and nudging an existing endpoint by one bin, until
/// the best F1 stops improving by `min_improvement`.
pub fn rpi_fit(sel: &LabeledSelection, ds: &Dataset, cfg: &RpiConfig) -> Result<Vec<ScoredPredicate>> {
    cfg.validate()?;
    if sel.len() != ds.n_rows() {
        return Err(Error::InvalidInput(format!(
            "selection has {} labels for {} rows",
            sel.len(),
            ds.n_rows()
        )));
    }
    let search = Search {
        ds,
        labels: sel.labels(),
        edges: bin_edges(ds, cfg.bins_per_dim),
    };
    let candidates = candidate_runs(&search.edges);
    if candidates.is_empty() {
        return Ok(vec![ScoredPredicate {
            predicate: Predicate::empty(),
            f1: f1_score(&vec![true; ds.n_rows()], sel.labels())?,
        }]);
    }
    let max_clauses = cfg.max_clauses.unwrap_or(ds.n_dims()).max(1);

    let level1 = candidates
        .iter()
        .map(|&r| search.state(vec![r]))
        .collect::<Result<Vec<_>>>()?;
    let mut beam = keep_top(level1, cfg.beam_width);
    let mut best = beam[0].f1;

    // Refinements alone could in principle cycle through equal scores; the
    // improvement threshold stops that, this bound is a backstop.
    let max_levels = ds.n_dims() * cfg.bins_per_dim * 4;
    for _ in 0..max_levels {
        let mut pool = beam.clone();
        for s in &beam {
            if s.runs.len() < max_clauses {
                for c in candidates.iter().filter(|c| s.runs.iter().all(|r| r.dim != c.dim)) {
                    let mut runs = s.runs.clone();
                    runs.push(*c);
                    pool.push(search.state(runs)?);
                }
            }
            for runs in search.refinements(s) {
                pool.push(search.state(runs)?);
            }
        }
        let next = keep_top(pool, cfg.beam_width);
        let improvement = next[0].f1 - best;
        beam = next;
        if improvement < cfg.min_improvement {
            break;
        }
        best = beam[0].f1;
    }

    beam.into_iter()
        .map(|s| {
            Ok(ScoredPredicate {
                predicate: Predicate::new(s.clauses)?,
                f1: s.f1,
            })
        })
        .collect()
}
