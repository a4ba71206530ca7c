//! Engine behaviour checked against independent brute-force oracles.

use predbridge_core::rpi::{candidate_clauses, f1_score};
use predbridge_core::selection::{discretize_drag, DRAG_STRIDE_FRACTION};
use predbridge_core::synth::{planted_box, uniform_unit};
use predbridge_core::*;

/// Cyclic Jacobi eigen-decomposition of a small symmetric matrix.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| a[i][i]).collect();
    let vecs = (0..n).map(|k| (0..n).map(|i| v[i][k]).collect()).collect();
    (vals, vecs)
}

#[test]
fn pca_matches_brute_force_eigendecomposition() {
    // 10 x 4 table with distinct variances.
    let rows: Vec<Vec<f64>> = (0..10)
        .map(|i| {
            let t = i as f64;
            vec![3.0 * t.sin() + 0.1 * t, 1.5 * (0.7 * t).cos(), 0.2 * t * t - 1.0, 0.05 * (1.3 * t).sin()]
        })
        .collect();
    let (n, m) = (rows.len(), 4);
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let got = pca_2d(&flat, m).unwrap();

    let mean: Vec<f64> = (0..m).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let cov: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n as f64 - 1.0))
                .collect()
        })
        .collect();
    let (vals, vecs) = jacobi_eigen(cov);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));

    for (k, &idx) in order[..2].iter().enumerate() {
        let mut axis = vecs[idx].clone();
        let pivot = (0..m).max_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs())).unwrap();
        if axis[pivot] < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        for (i, r) in rows.iter().enumerate() {
            let expected: f64 = (0..m).map(|j| (r[j] - mean[j]) * axis[j]).sum();
            assert!((got[i][k] - expected).abs() < 1e-8, "row {i} pc {k}: {} vs {expected}", got[i][k]);
        }
    }
    // Variance ordering.
    let var = |k: usize| got.iter().map(|p| p[k] * p[k]).sum::<f64>();
    assert!(var(0) >= var(1));
}

#[test]
fn csv_without_projection_uses_pca() {
    let text = "a,b,c\n1,2,0\n2,4.5,1\n3,5.5,0\n4,8,1\n5,10.2,0\n";
    let (ds, report) = load_csv(text.as_bytes(), &IngestConfig::default()).unwrap();
    assert_eq!(report.projection_source, predbridge_core::ingest::ProjectionSource::Pca);
    let expected = pca_2d(ds.values(), 3).unwrap();
    assert_eq!(ds.projection(), expected.as_slice());
}

#[test]
fn curved_drag_step_count_matches_arc_length() {
    // Dense grid; box with min side 0.2 dragged along a bent path of length
    // 5.5 * 0.2 = 1.1.
    let mut pts = Vec::new();
    for i in 0..60 {
        for j in 0..60 {
            pts.push([i as f64 / 40.0, j as f64 / 40.0]);
        }
    }
    let rows: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
    let ds = Dataset::from_rows(vec!["a".into(), "b".into()], &rows, pts).unwrap();
    let path = DragPath {
        start: Region::Box { x0: 0.1, y0: 0.1, x1: 0.3, y1: 0.4 },
        waypoints: vec![[0.3, 0.4], [0.9, 0.4], [0.9, 0.5]],
    };
    // Arc length computed directly: 0.5 + 0.6 + 0.1.
    let length = 0.5 + 0.6 + 0.1;
    let stride = DRAG_STRIDE_FRACTION * 0.2;
    assert!((length / stride - 12.0).abs() < 1e-12);
    let seq = discretize_drag(&path, &ds).unwrap();
    assert_eq!(seq.len(), (length / stride + 1e-9).floor() as usize + 1);

    // Consecutive boxes overlap.
    for w in seq.step_regions.windows(2) {
        let (Region::Box { x0: a0, y0: b0, x1: a1, y1: b1 }, Region::Box { x0: c0, y0: d0, x1: c1, y1: d1 }) = (&w[0], &w[1]) else {
            panic!("box steps expected");
        };
        assert!(a0.max(*c0) < a1.min(*c1) && b0.max(*d0) < b1.min(*d1));
    }
}

#[test]
fn planted_box_recovery_small() {
    let pb = planted_box(600, 6, &[(1, 0.3, 0.6), (4, 0.3, 0.6)], 3).unwrap();
    let view = normalize(&pb.dataset);
    let res = fit(std::slice::from_ref(&pb.selection), &pb.dataset, &view, &RegressionConfig::default()).unwrap();
    let r = &res[0];
    assert_eq!(r.hard.dims().collect::<Vec<_>>(), vec![1, 4]);
    for c in r.hard.clauses() {
        assert!((c.lo - 0.3).abs() <= 0.05 && (c.hi - 0.6).abs() <= 0.05, "{c:?}");
    }
    assert!(r.f1 >= 0.9);
    assert_eq!(r.dropped_dims, vec![0, 2, 3, 5]);
}

#[test]
fn fit_is_bitwise_deterministic() {
    let pb = planted_box(400, 5, &[(0, 0.2, 0.5), (3, 0.4, 0.8)], 4).unwrap();
    let view = normalize(&pb.dataset);
    let cfg = RegressionConfig::default();
    let a = fit(std::slice::from_ref(&pb.selection), &pb.dataset, &view, &cfg).unwrap();
    let b = fit(std::slice::from_ref(&pb.selection), &pb.dataset, &view, &cfg).unwrap();
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a[0].loss_trace), bits(&b[0].loss_trace));
    assert_eq!(a, b);
}

#[test]
fn fit_rejects_mismatched_brush() {
    let pb = planted_box(100, 3, &[(0, 0.2, 0.5), (1, 0.2, 0.5)], 1).unwrap();
    let view = normalize(&pb.dataset);
    let short = LabeledSelection::new(vec![true, false]).unwrap();
    assert!(fit(&[short], &pb.dataset, &view, &RegressionConfig::default()).is_err());
    assert!(matches!(
        fit(&[], &pb.dataset, &view, &RegressionConfig::default()),
        Err(Error::EmptySelection(_))
    ));
}

#[test]
fn divergence_is_reported() {
    // An absurd steepness overflows |u|^b; either the clip keeps the loss
    // finite or divergence is reported with the last finite iterate.
    let pb = planted_box(50, 2, &[(0, 0.2, 0.5), (1, 0.2, 0.5)], 1).unwrap();
    let view = normalize(&pb.dataset);
    let cfg = RegressionConfig {
        b: 1e6,
        learning_rate: 1e3,
        max_iters: 20,
        ..Default::default()
    };
    match fit(std::slice::from_ref(&pb.selection), &pb.dataset, &view, &cfg) {
        Err(Error::Divergence { last_finite, .. }) => assert_eq!(last_finite.len(), 1),
        Ok(r) => assert!(r[0].loss_trace.iter().all(|l| l.is_finite())),
        Err(e) => panic!("unexpected error {e}"),
    }
}

/// Exhaustive best F1 over all 1- and 2-clause predicates from the
/// candidate set.
fn exhaustive_best(ds: &Dataset, labels: &[bool], cands: &[Clause]) -> f64 {
    let member = |c: &[&Clause]| -> Vec<bool> { ds.rows().map(|r| c.iter().all(|cl| cl.lo <= r[cl.dim] && r[cl.dim] <= cl.hi)).collect() };
    let mut best = 0.0f64;
    for (i, a) in cands.iter().enumerate() {
        best = best.max(f1_score(&member(&[a]), labels).unwrap());
        for b in &cands[i + 1..] {
            if b.dim != a.dim {
                best = best.max(f1_score(&member(&[a, b]), labels).unwrap());
            }
        }
    }
    best
}

#[test]
fn rpi_close_to_exhaustive_on_two_clause_truth() {
    let cfg = RpiConfig {
        bins_per_dim: 5,
        ..Default::default()
    };
    let rows = uniform_unit(100, 3, 21);
    let ds = Dataset::from_rows(vec!["a".into(), "b".into(), "c".into()], &rows, vec![[0.0, 0.0]; 100]).unwrap();
    let cands = candidate_clauses(&ds, &cfg).unwrap();
    let truth = Predicate::new(vec![cands[1], cands[20]]).unwrap();
    let labels = evaluate_predicate(&truth, &ds).unwrap();
    let sel = LabeledSelection::new(labels.clone()).unwrap();
    let best = exhaustive_best(&ds, &labels, &cands);
    let got = rpi_fit(&sel, &ds, &cfg).unwrap();
    assert!(got[0].f1 >= 0.9 * best, "{} vs {best}", got[0].f1);
    let single_best = cands
        .iter()
        .map(|c| f1_score(&evaluate_predicate(&Predicate::new(vec![*c]).unwrap(), &ds).unwrap(), &labels).unwrap())
        .fold(0.0, f64::max);
    assert!(got[0].f1 >= single_best);
}
