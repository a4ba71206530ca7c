//! Static scatter of the projection, colored by point category.

use std::fmt::Write;

use predbridge_core::{BrushResult, Dataset, PointCategory};

const SIZE: f64 = 600.0;
const MARGIN: f64 = 20.0;
const OUTSIDE: &str = "#eeeeee";

pub fn projection(ds: &Dataset, brush: &BrushResult) -> String {
    let proj = ds.projection();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in proj {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let span = |k: usize| if hi[k] > lo[k] { hi[k] - lo[k] } else { 1.0 };
    let inner = SIZE - 2.0 * MARGIN;
    let px = |p: [f64; 2]| {
        (
            MARGIN + (p[0] - lo[0]) / span(0) * inner,
            SIZE - MARGIN - (p[1] - lo[1]) / span(1) * inner,
        )
    };

    // Categories index the fitted rows, which for a contrast pair are a
    // subset of the dataset; rows outside it are drawn faintly.
    let mut color = vec![OUTSIDE; ds.n_rows()];
    match &brush.rows {
        Some(rows) => rows.iter().zip(&brush.categories).for_each(|(&i, c)| color[i] = c.color()),
        None => color.iter_mut().zip(&brush.categories).for_each(|(s, c)| *s = c.color()),
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{h}" viewBox="0 0 {SIZE} {h}">"#,
        h = SIZE + 30.0
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    // Background categories first so highlighted points stay visible.
    let mut order: Vec<usize> = (0..ds.n_rows()).collect();
    order.sort_by_key(|&i| match color[i] {
        OUTSIDE => 0,
        c if c == PointCategory::TrueNegative.color() => 1,
        _ => 2,
    });
    for i in order {
        let (x, y) = px(proj[i]);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, color[i]);
    }
    let counts = &brush.counts;
    let legend = [
        (PointCategory::TruePositive, "TP", counts.tp),
        (PointCategory::FalsePositive, "FP", counts.fp),
        (PointCategory::FalseNegative, "FN", counts.fn_),
        (PointCategory::TrueNegative, "TN", counts.tn),
    ];
    for (k, (cat, name, n)) in legend.iter().enumerate() {
        let x = MARGIN + k as f64 * 110.0;
        let y = SIZE + 12.0;
        let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="5" fill="{}"/>"#, cat.color());
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{name} {n}</text>"#,
            x + 9.0,
            y + 4.0
        );
    }
    out.push_str("</svg>\n");
    out
}
