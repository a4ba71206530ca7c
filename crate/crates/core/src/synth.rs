//! Seeded synthetic datasets with known ground-truth selections, used by
//! tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, LabeledSelection};
use crate::error::Result;

/// Uniform points whose columns are rescaled to span exactly `[0, 1]`, so
/// original and normalized units coincide.
pub fn uniform_unit(n: usize, m: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| rng.random::<f64>()).collect()).collect();
    for j in 0..m {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
        for r in rows.iter_mut() {
            r[j] = (r[j] - lo) / (hi - lo);
        }
    }
    rows
}

#[derive(Debug, Clone)]
pub struct PlantedBox {
    pub dataset: Dataset,
    /// `(dim, lo, hi)` of the planted box.
    pub box_dims: Vec<(usize, f64, f64)>,
    pub selection: LabeledSelection,
}

/// Uniform data in `m` dimensions labeled by membership in an axis-aligned
/// box on `box_dims`. The projection is the first two planted dimensions, so
/// brushing `[lo, hi]^2` in projection space selects exactly the box.
pub fn planted_box(n: usize, m: usize, box_dims: &[(usize, f64, f64)], seed: u64) -> Result<PlantedBox> {
    let rows = uniform_unit(n, m, seed);
    let labels: Vec<bool> = rows
        .iter()
        .map(|r| box_dims.iter().all(|&(j, lo, hi)| lo <= r[j] && r[j] <= hi))
        .collect();
    let (px, py) = match box_dims {
        [a, b, ..] => (a.0, b.0),
        [a] => (a.0, (a.0 + 1) % m),
        [] => (0, 1 % m),
    };
    let projection = rows.iter().map(|r| [r[px], r[py]]).collect();
    let names = (0..m).map(|j| format!("d{j}")).collect();
    let dataset = Dataset::from_rows(names, &rows, projection)?;
    Ok(PlantedBox {
        dataset,
        box_dims: box_dims.to_vec(),
        selection: LabeledSelection::new(labels)?,
    })
}

/// The default acceptance fixture: 1000 points, 10 dims, box `[0.3, 0.6]` on
/// dims 2 and 7.
pub fn default_planted_box(seed: u64) -> Result<PlantedBox> {
    planted_box(1000, 10, &[(2, 0.3, 0.6), (7, 0.3, 0.6)], seed)
}

/// A box on dims 0 and 1 of width `width` sliding along dim 0 by `shift`
/// per step; returns the dataset and one selection per step.
pub fn sliding_boxes(
    n: usize,
    m: usize,
    steps: usize,
    width: f64,
    shift: f64,
    seed: u64,
) -> Result<(Dataset, Vec<LabeledSelection>)> {
    let rows = uniform_unit(n, m, seed);
    let projection = rows.iter().map(|r| [r[0], r[1]]).collect();
    let names = (0..m).map(|j| format!("d{j}")).collect();
    let ds = Dataset::from_rows(names, &rows, projection)?;
    let y_lo = 0.5 - width / 2.0;
    let sels = (0..steps)
        .map(|t| {
            let x_lo = 0.2 + shift * t as f64;
            LabeledSelection::new(
                rows.iter()
                    .map(|r| {
                        (x_lo..=x_lo + width).contains(&r[0]) && (y_lo..=y_lo + width).contains(&r[1])
                    })
                    .collect(),
            )
        })
        .collect::<Result<_>>()?;
    Ok((ds, sels))
}

/// Serializes dimensions plus projection (`x`, `y`) as CSV with
/// round-trippable float formatting.
pub fn to_csv(ds: &Dataset) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = ds.dim_names().iter().map(String::as_str).collect();
    header.extend(["x", "y"]);
    w.write_record(&header).expect("in-memory write");
    for (row, p) in ds.rows().zip(ds.projection()) {
        let rec: Vec<String> = row.iter().chain(p.iter()).map(|v| format!("{v:?}")).collect();
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
