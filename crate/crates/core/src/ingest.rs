//! CSV loading, projection attachment (or a PCA fallback), and min-max
//! normalization for the optimizer.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    /// Columns holding the 2D projection, e.g. `("x", "y")`.
    pub projection_columns: Option<(String, String)>,
    /// Explicit dimension columns; default is every numeric column that is
    /// not a projection column.
    pub dimension_columns: Option<Vec<String>>,
    pub pca_fallback: bool,
    /// When no projection columns are named, use columns literally called
    /// `x` and `y` if both exist.
    pub auto_projection: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            projection_columns: None,
            dimension_columns: None,
            pca_fallback: true,
            auto_projection: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    /// 1-based line in the source file (the header is line 1).
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionSource {
    Columns,
    Pca,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_loaded: usize,
    pub rows_rejected: Vec<RejectedRow>,
    pub constant_dims: Vec<String>,
    pub ignored_columns: Vec<String>,
    pub projection_source: ProjectionSource,
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn find_column(headers: &[String], name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::InvalidInput(format!("unknown column {name:?}")))
}

pub fn load_csv_path(path: impl AsRef<Path>, cfg: &IngestConfig) -> Result<(Dataset, LoadReport)> {
    load_csv(File::open(path)?, cfg)
}

/// Reads a headed CSV into a [`Dataset`].
///
/// A column is numeric when at least half of its non-empty cells parse as
/// finite reals; other columns are ignored and listed in the report. Rows
/// with an unparseable cell in any selected column are rejected.
pub fn load_csv<R: Read>(reader: R, cfg: &IngestConfig) -> Result<(Dataset, LoadReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);

    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Format("missing header row".into()));
    }
    if headers.iter().all(|h| parse_cell(h).is_some()) {
        return Err(Error::Format("missing header row (first row is numeric)".into()));
    }
    for (i, h) in headers.iter().enumerate() {
        if headers[..i].contains(h) {
            return Err(Error::Format(format!("duplicate column {h:?}")));
        }
    }

    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let projection_cols = match &cfg.projection_columns {
        Some((x, y)) => Some((find_column(&headers, x)?, find_column(&headers, y)?)),
        None if cfg.auto_projection => {
            match (headers.iter().position(|h| h == "x"), headers.iter().position(|h| h == "y")) {
                (Some(x), Some(y)) => Some((x, y)),
                _ => None,
            }
        }
        None => None,
    };
    if projection_cols.is_none() && !cfg.pca_fallback {
        return Err(Error::MissingProjection);
    }

    let mut ignored_columns = Vec::new();
    let dim_cols: Vec<usize> = match &cfg.dimension_columns {
        Some(names) => names
            .iter()
            .map(|n| find_column(&headers, n))
            .collect::<Result<_>>()?,
        None => (0..headers.len())
            .filter(|&c| projection_cols.is_none_or(|(x, y)| c != x && c != y))
            .filter(|&c| {
                let (mut nonempty, mut numeric) = (0usize, 0usize);
                for (_, rec) in &records {
                    let cell = rec.get(c).unwrap_or("").trim();
                    if !cell.is_empty() {
                        nonempty += 1;
                        numeric += usize::from(parse_cell(cell).is_some());
                    }
                }
                let keep = numeric > 0 && 2 * numeric >= nonempty;
                if !keep {
                    warn!("ignoring non-numeric column {:?}", headers[c]);
                    ignored_columns.push(headers[c].clone());
                }
                keep
            })
            .collect(),
    };
    if dim_cols.is_empty() {
        return Err(Error::NoNumericDimensions);
    }

    let mut values = Vec::with_capacity(records.len() * dim_cols.len());
    let mut projection = Vec::with_capacity(records.len());
    let mut row_ids = Vec::with_capacity(records.len());
    let mut rows_rejected = Vec::new();

    'rows: for (idx, (line, rec)) in records.iter().enumerate() {
        if rec.len() != headers.len() {
            rows_rejected.push(RejectedRow {
                line: *line,
                reason: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
            continue;
        }
        let mut row = Vec::with_capacity(dim_cols.len());
        let cols = dim_cols
            .iter()
            .chain(projection_cols.iter().flat_map(|(x, y)| [x, y]));
        for &c in cols {
            match parse_cell(&rec[c]) {
                Some(v) => row.push(v),
                None => {
                    rows_rejected.push(RejectedRow {
                        line: *line,
                        reason: format!("column {:?}: cannot parse {:?} as a finite number", headers[c], &rec[c]),
                    });
                    continue 'rows;
                }
            }
        }
        if projection_cols.is_some() {
            let y = row.pop().unwrap_or_default();
            let x = row.pop().unwrap_or_default();
            projection.push([x, y]);
        }
        values.extend(row);
        row_ids.push(idx as u64);
    }

    if row_ids.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let m = dim_cols.len();
    let projection_source = if projection_cols.is_some() {
        ProjectionSource::Columns
    } else {
        projection = pca_2d(&values, m)?;
        ProjectionSource::Pca
    };

    let names = dim_cols.iter().map(|&c| headers[c].clone()).collect();
    let ds = Dataset::new(names, values, projection, row_ids)?;
    let constant_dims = ds
        .extents()
        .iter()
        .zip(ds.dim_names())
        .filter(|(e, _)| e.is_constant())
        .map(|(_, n)| n.clone())
        .collect();

    let report = LoadReport {
        rows_loaded: ds.n_rows(),
        rows_rejected,
        constant_dims,
        ignored_columns,
        projection_source,
    };
    Ok((ds, report))
}

/// Projects row-major `values` (rows of width `m`) onto the top two
/// principal axes of the mean-centred covariance.
///
/// Each axis is signed so that its largest-magnitude loading is positive.
pub fn pca_2d(values: &[f64], m: usize) -> Result<Vec<[f64; 2]>> {
    if m < 2 {
        return Err(Error::InvalidInput("PCA needs at least two dimensions".into()));
    }
    let n = values.len() / m;
    if n < 2 || values.len() != n * m {
        return Err(Error::InvalidInput("PCA needs at least two complete rows".into()));
    }
    let x = DMatrix::from_row_slice(n, m, values);
    let mean = x.row_mean();
    let mut centred = x;
    for mut row in centred.row_iter_mut() {
        row -= &mean;
    }
    let cov = centred.transpose() * &centred / (n as f64 - 1.0);
    let scale = cov.diagonal().iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    if scale == 0.0 || eig.eigenvalues[order[0]] <= 1e-12 * scale {
        return Err(Error::DegenerateProjection("data has zero variance".into()));
    }

    let axes: Vec<Vec<f64>> = order[..2]
        .iter()
        .map(|&k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let pivot = v
                .iter()
                .enumerate()
                .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
            if v[pivot] < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    Ok(centred
        .row_iter()
        .map(|row| {
            let dot = |axis: &[f64]| row.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>();
            [dot(&axes[0]), dot(&axes[1])]
        })
        .collect())
}

/// Per-dimension min-max scaled copy of a dataset's values.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedView {
    values: Vec<f64>,
    n_dims: usize,
    offset: Vec<f64>,
    scale: Vec<f64>,
    constant: Vec<bool>,
}

impl NormalizedView {
    pub fn n_rows(&self) -> usize {
        self.values.len() / self.n_dims
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_dims)
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.constant[j]
    }

    pub fn constant_dims(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_dims).filter(|&j| self.constant[j])
    }

    pub fn normalize_value(&self, j: usize, x: f64) -> f64 {
        if self.constant[j] {
            0.5
        } else {
            (x - self.offset[j]) / self.scale[j]
        }
    }

    /// Maps a normalized coordinate back to original units. Constant
    /// dimensions map to their single value.
    pub fn denormalize_value(&self, j: usize, v: f64) -> f64 {
        if self.constant[j] {
            self.offset[j]
        } else {
            self.offset[j] + v * self.scale[j]
        }
    }
}

pub fn normalize(ds: &Dataset) -> NormalizedView {
    let m = ds.n_dims();
    let offset: Vec<f64> = ds.extents().iter().map(|e| e.min).collect();
    let scale: Vec<f64> = ds.extents().iter().map(|e| e.width()).collect();
    let constant: Vec<bool> = ds.extents().iter().map(|e| e.is_constant()).collect();
    let values = ds
        .rows()
        .flat_map(|row| {
            row.iter().enumerate().map(|(j, &x)| {
                if constant[j] {
                    0.5
                } else {
                    (x - offset[j]) / scale[j]
                }
            })
        })
        .collect();
    NormalizedView {
        values,
        n_dims: m,
        offset,
        scale,
        constant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(s: &str, cfg: &IngestConfig) -> Result<(Dataset, LoadReport)> {
        load_csv(s.as_bytes(), cfg)
    }

    #[test]
    fn projection_columns_partition() {
        let cfg = IngestConfig {
            projection_columns: Some(("x".into(), "y".into())),
            ..Default::default()
        };
        let (ds, rep) = load("a,b,x,y\n1,2,0,0\n3,4,1,0\n5,6,0,1\n", &cfg).unwrap();
        assert_eq!(ds.n_dims(), 2);
        assert_eq!(ds.dim_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(ds.projection(), &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(rep.rows_loaded, 3);
        assert_eq!(rep.projection_source, ProjectionSource::Columns);
    }

    #[test]
    fn nan_row_rejected_and_reported() {
        let (ds, rep) = load("a,b,x,y\n1,2,0,0\nNaN,4,1,0\n5,6,0,1\n", &IngestConfig::default()).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(rep.rows_rejected.len(), 1);
        assert_eq!(rep.rows_rejected[0].line, 3);
        assert_eq!(ds.row_ids(), &[0, 2]);
    }

    #[test]
    fn text_columns_ignored() {
        let (ds, rep) = load("name,a,b,x,y\nfoo,1,2,0,0\nbar,3,5,1,0\n", &IngestConfig::default()).unwrap();
        assert_eq!(ds.dim_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(rep.ignored_columns, vec!["name".to_string()]);
    }

    #[test]
    fn all_text_is_an_error() {
        let r = load("name,kind\nfoo,bar\nbaz,qux\n", &IngestConfig::default());
        assert!(matches!(r, Err(Error::NoNumericDimensions)));
    }

    #[test]
    fn missing_header_and_empty() {
        assert!(matches!(load("1,2\n3,4\n", &IngestConfig::default()), Err(Error::Format(_))));
        assert!(matches!(load("", &IngestConfig::default()), Err(Error::Format(_))));
        assert!(matches!(load("a,b,x,y\n", &IngestConfig::default()), Err(Error::EmptyDataset)));
        assert!(matches!(
            load("a,b,x,y\nq,1,2,zz\n", &IngestConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn missing_projection_without_fallback() {
        let cfg = IngestConfig {
            pca_fallback: false,
            ..Default::default()
        };
        assert!(matches!(load("a,b\n1,2\n3,4\n", &cfg), Err(Error::MissingProjection)));
    }

    #[test]
    fn pca_fallback_used_without_xy() {
        let (_, rep) = load("a,b\n1,2\n3,5\n4,4\n", &IngestConfig::default()).unwrap();
        assert_eq!(rep.projection_source, ProjectionSource::Pca);
    }

    #[test]
    fn constant_dims_reported() {
        let (_, rep) = load("a,c,x,y\n1,7,0,0\n2,7,1,1\n", &IngestConfig::default()).unwrap();
        assert_eq!(rep.constant_dims, vec!["c".to_string()]);
    }

    #[test]
    fn pca_line_has_zero_second_component() {
        let vals: Vec<f64> = (0..10).flat_map(|i| [i as f64, 2.0 * i as f64 + 1.0]).collect();
        let p = pca_2d(&vals, 2).unwrap();
        assert!(p.iter().all(|q| q[1].abs() < 1e-9));
    }

    #[test]
    fn pca_two_rows_distinct() {
        let p = pca_2d(&[0.0, 1.0, 2.0, 3.0, 1.0, 5.0], 3).unwrap();
        assert_ne!(p[0], p[1]);
    }

    #[test]
    fn pca_recovers_axes_up_to_sign() {
        // Spread 3 along x, 1 along y: PC1 = x-axis, PC2 = y-axis.
        let pts = [(-3.0, 0.0), (3.0, 0.0), (0.0, -1.0), (0.0, 1.0)];
        let vals: Vec<f64> = pts.iter().flat_map(|&(a, b)| [a, b]).collect();
        let p = pca_2d(&vals, 2).unwrap();
        for (q, &(a, b)) in p.iter().zip(&pts) {
            assert!((q[0].abs() - f64::abs(a)).abs() < 1e-9);
            assert!((q[1].abs() - f64::abs(b)).abs() < 1e-9);
        }
    }

    #[test]
    fn pca_rank_zero_is_degenerate() {
        assert!(matches!(pca_2d(&[1.0; 8], 2), Err(Error::DegenerateProjection(_))));
    }

    #[test]
    fn normalize_examples() {
        let rows = vec![vec![2.0, 7.0], vec![4.0, 7.0], vec![6.0, 7.0]];
        let ds = Dataset::from_rows(vec!["a".into(), "c".into()], &rows, vec![[0.0; 2]; 3]).unwrap();
        let v = normalize(&ds);
        let col0: Vec<f64> = v.rows().map(|r| r[0]).collect();
        assert_eq!(col0, vec![0.0, 0.5, 1.0]);
        assert!(v.rows().all(|r| r[1] == 0.5));
        assert!(v.is_constant(1) && !v.is_constant(0));
        assert_eq!(v.denormalize_value(1, 0.5), 7.0);
    }
}
