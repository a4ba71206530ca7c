//! Differentiable predicate regression.
//!
//! An axis-aligned box with midpoint `mu` and half-widths `r = 1/a` is
//! relaxed into the bump
//!
//! ```text
//! f(x) = 1 / (1 + sum_j |a_j (x_j - mu_j)|^b)
//! ```
//!
//! which is 1 at the centre and exactly 0.5 on any single-dimension face of
//! the box. The parameters are fitted by minimizing binary cross-entropy
//! against the brush labels plus `gamma_1 * ||a||_1`; for a sequence of
//! brushes, squared differences between consecutive `(a, mu)` couple the
//! steps. A dimension whose fitted interval covers the whole normalized
//! extent `[0, 1]` carries no constraint and is dropped from the hard
//! predicate.
//!
//! All optimizer-side quantities live in min-max normalized units; hard
//! predicates are converted back to original units on extraction.

use serde::{Deserialize, Serialize};

use crate::data::{evaluate_predicate, Clause, Dataset, LabeledSelection, Predicate};
use crate::error::{Error, Result};
use crate::ingest::NormalizedView;
use crate::metrics::{confusion, Confusion};

/// Number of iterations the relative loss change is measured over.
pub const CONVERGENCE_WINDOW: usize = 10;

/// Initial half-width floor (normalized units).
pub const MIN_INITIAL_RANGE: f64 = 0.05;

/// Box on midpoints `mu` are kept inside during descent (normalized units).
pub const MU_BOUNDS: (f64, f64) = (-0.5, 1.5);

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Optimizer-side parameters of one soft predicate, in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftPredicate {
    pub mu: Vec<f64>,
    /// Inverse half-widths; 0 means unconstrained.
    pub a: Vec<f64>,
    /// Steepness exponent.
    pub b: f64,
}

impl SoftPredicate {
    pub fn new(mu: Vec<f64>, a: Vec<f64>, b: f64) -> Result<Self> {
        if mu.len() != a.len() {
            return Err(Error::InvalidInput(format!(
                "{} midpoints but {} inverse ranges",
                mu.len(),
                a.len()
            )));
        }
        if !(b > 1.0 && b.is_finite()) {
            return Err(Error::InvalidInput(format!("steepness b must exceed 1, got {b}")));
        }
        if a.iter().any(|&v| !(v >= 0.0 && v.is_finite())) || mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("inverse ranges must be finite and non-negative".into()));
        }
        Ok(Self { mu, a, b })
    }

    pub fn n_dims(&self) -> usize {
        self.mu.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionConfig {
    /// L1 weight on `a`.
    pub gamma_1: f64,
    /// Weight on squared differences of consecutive `a`.
    pub gamma_a: f64,
    /// Weight on squared differences of consecutive `mu`.
    pub gamma_mu: f64,
    pub b: f64,
    pub learning_rate: f64,
    pub max_iters: usize,
    /// Relative loss change over [`CONVERGENCE_WINDOW`] iterations below
    /// which descent stops.
    pub convergence_tol: f64,
    pub prob_clip: f64,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            gamma_1: 0.0075,
            gamma_a: 1.0,
            gamma_mu: 1.0,
            b: 7.0,
            learning_rate: 0.05,
            max_iters: 500,
            convergence_tol: 1e-6,
            prob_clip: 1e-7,
            seed: 0,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.gamma_1, self.gamma_a, self.gamma_mu, self.convergence_tol];
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidInput("max_iters must be at least 1".into()));
        }
        if !(self.b > 1.0 && self.b.is_finite()) {
            return Err(Error::InvalidInput("b must exceed 1".into()));
        }
        if !(self.prob_clip > 0.0 && self.prob_clip < 0.5) {
            return Err(Error::InvalidInput("prob_clip must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

/// Fitted result for one brush.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    /// Hard predicate in original units.
    pub hard: Predicate,
    pub soft: SoftPredicate,
    /// Joint loss per iteration (shared by every step of a sequence).
    pub loss_trace: Vec<f64>,
    pub f1: f64,
    pub confusion: Confusion,
    pub converged: bool,
    pub iterations: usize,
    /// Dimensions removed because their interval covered the extent.
    pub dropped_dims: Vec<usize>,
}

/// `|u|^(b-1)`, using integer powers when `b` is integral.
#[inline]
fn pow_bm1(u: f64, b: f64) -> f64 {
    let e = b - 1.0;
    if e.fract() == 0.0 && e < 64.0 {
        u.powi(e as i32)
    } else {
        u.powf(e)
    }
}

#[inline]
fn bump_sum(x: &[f64], soft: &SoftPredicate) -> f64 {
    x.iter()
        .zip(&soft.mu)
        .zip(&soft.a)
        .map(|((&xj, &mu), &a)| {
            let u = (a * (xj - mu)).abs();
            pow_bm1(u, soft.b) * u
        })
        .sum()
}

/// Soft membership `1 / (1 + sum_j |a_j (x_j - mu_j)|^b)` of a normalized
/// point.
pub fn proxy(x: &[f64], soft: &SoftPredicate) -> f64 {
    1.0 / (1.0 + bump_sum(x, soft))
}

fn check_labels(x: &[f64], m: usize, labels: &[bool]) -> Result<()> {
    if m == 0 || x.len() != labels.len() * m {
        return Err(Error::InvalidInput(format!(
            "{} values do not form {} rows of width {m}",
            x.len(),
            labels.len()
        )));
    }
    Ok(())
}

/// Mean binary cross-entropy of the proxy against `labels`; `x` holds
/// row-major normalized points and probabilities are clipped to
/// `[clip, 1 - clip]`.
pub fn bce_loss(soft: &SoftPredicate, x: &[f64], labels: &[bool], clip: f64) -> Result<f64> {
    check_labels(x, soft.n_dims(), labels)?;
    if labels.is_empty() {
        return Err(Error::InvalidInput("loss needs at least one point".into()));
    }
    let total: f64 = x
        .chunks_exact(soft.n_dims())
        .zip(labels)
        .map(|(row, &y)| {
            let f = proxy(row, soft).clamp(clip, 1.0 - clip);
            if y {
                -f.ln()
            } else {
                -(1.0 - f).ln()
            }
        })
        .sum();
    Ok(total / labels.len() as f64)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `sum_{t>=2} gamma_a ||a_t - a_{t-1}||^2 + gamma_mu ||mu_t - mu_{t-1}||^2`.
pub fn smoothness_loss(seq: &[SoftPredicate], gamma_a: f64, gamma_mu: f64) -> f64 {
    seq.windows(2)
        .map(|w| gamma_a * sq_dist(&w[1].a, &w[0].a) + gamma_mu * sq_dist(&w[1].mu, &w[0].mu))
        .sum()
}

fn check_seq(seq: &[SoftPredicate], x: &[f64], brushes: &[&[bool]]) -> Result<()> {
    if seq.len() != brushes.len() {
        return Err(Error::InvalidInput(format!(
            "{} soft predicates for {} brushes",
            seq.len(),
            brushes.len()
        )));
    }
    if seq.is_empty() {
        return Err(Error::InvalidInput("empty brush sequence".into()));
    }
    let m = seq[0].n_dims();
    if seq.iter().any(|s| s.n_dims() != m) {
        return Err(Error::InvalidInput("soft predicates disagree on dimension count".into()));
    }
    for labels in brushes {
        check_labels(x, m, labels)?;
    }
    Ok(())
}

/// Joint objective over a sequence of brushes sharing the point set `x`:
/// per-step BCE, per-step L1 on `a`, and the smoothness coupling.
pub fn total_loss(
    seq: &[SoftPredicate],
    x: &[f64],
    brushes: &[&[bool]],
    cfg: &RegressionConfig,
) -> Result<f64> {
    check_seq(seq, x, brushes)?;
    let mut loss = 0.0;
    for (soft, labels) in seq.iter().zip(brushes) {
        loss += bce_loss(soft, x, labels, cfg.prob_clip)?;
        loss += cfg.gamma_1 * soft.a.iter().map(|v| v.abs()).sum::<f64>();
    }
    Ok(loss + smoothness_loss(seq, cfg.gamma_a, cfg.gamma_mu))
}

/// Gradient of the joint objective with respect to one step's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGradient {
    pub a: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Joint loss and its analytic gradient in one pass over the data.
///
/// The L1 subgradient at `a_j = 0` is taken as 0, and clipped probabilities
/// contribute no gradient.
pub fn loss_and_gradients(
    seq: &[SoftPredicate],
    x: &[f64],
    brushes: &[&[bool]],
    cfg: &RegressionConfig,
) -> Result<(f64, Vec<StepGradient>)> {
    check_seq(seq, x, brushes)?;
    let m = seq[0].n_dims();
    let clip = cfg.prob_clip;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(seq.len());
    let mut powers = vec![0.0; m];

    for (soft, labels) in seq.iter().zip(brushes) {
        let n = labels.len() as f64;
        let b = soft.b;
        let mut g = StepGradient {
            a: vec![0.0; m],
            mu: vec![0.0; m],
        };
        let mut bce = 0.0;
        for (row, &y) in x.chunks_exact(m).zip(labels.iter()) {
            let mut s = 0.0;
            for j in 0..m {
                let u = (soft.a[j] * (row[j] - soft.mu[j])).abs();
                powers[j] = pow_bm1(u, b);
                s += powers[j] * u;
            }
            let f = 1.0 / (1.0 + s);
            let fc = f.clamp(clip, 1.0 - clip);
            bce -= if y { fc.ln() } else { (1.0 - fc).ln() };
            if fc != f {
                continue;
            }
            // dL/ds = dL/df * df/ds with df/ds = -f^2.
            let dl_df = if y { -1.0 / f } else { 1.0 / (1.0 - f) };
            let dl_ds = -dl_df * f * f / n;
            for j in 0..m {
                if powers[j] == 0.0 {
                    continue;
                }
                let d = row[j] - soft.mu[j];
                let k = dl_ds * b * powers[j];
                g.a[j] += k * soft.a[j].signum() * d.abs();
                g.mu[j] -= k * soft.a[j].abs() * d.signum();
            }
        }
        loss += bce / n;
        for j in 0..m {
            let a = soft.a[j];
            loss += cfg.gamma_1 * a.abs();
            if a != 0.0 {
                g.a[j] += cfg.gamma_1 * a.signum();
            }
        }
        grads.push(g);
    }

    for t in 1..seq.len() {
        let (prev, cur) = (&seq[t - 1], &seq[t]);
        loss += cfg.gamma_a * sq_dist(&cur.a, &prev.a) + cfg.gamma_mu * sq_dist(&cur.mu, &prev.mu);
        for j in 0..m {
            let da = 2.0 * cfg.gamma_a * (cur.a[j] - prev.a[j]);
            let dm = 2.0 * cfg.gamma_mu * (cur.mu[j] - prev.mu[j]);
            grads[t].a[j] += da;
            grads[t - 1].a[j] -= da;
            grads[t].mu[j] += dm;
            grads[t - 1].mu[j] -= dm;
        }
    }
    Ok((loss, grads))
}

pub fn gradients(
    seq: &[SoftPredicate],
    x: &[f64],
    brushes: &[&[bool]],
    cfg: &RegressionConfig,
) -> Result<Vec<StepGradient>> {
    loss_and_gradients(seq, x, brushes, cfg).map(|(_, g)| g)
}

/// Reads the hard box `[mu - 1/a, mu + 1/a]` out of a soft predicate.
///
/// Dimensions whose interval contains the full normalized extent are
/// returned in the second element instead of as clauses; constant
/// dimensions never appear in either. Kept intervals are clipped to the
/// extent and converted to original units.
pub fn extract_hard(soft: &SoftPredicate, view: &NormalizedView) -> Result<(Predicate, Vec<usize>)> {
    if soft.n_dims() != view.n_dims() {
        return Err(Error::InvalidInput("soft predicate and view disagree on dimensions".into()));
    }
    let mut clauses = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..soft.n_dims() {
        if view.is_constant(j) {
            continue;
        }
        let a = soft.a[j];
        if a <= 0.0 {
            dropped.push(j);
            continue;
        }
        let r = 1.0 / a;
        let (lo, hi) = (soft.mu[j] - r, soft.mu[j] + r);
        if lo <= 0.0 && hi >= 1.0 {
            dropped.push(j);
            continue;
        }
        let lo = view.denormalize_value(j, lo.clamp(0.0, 1.0));
        let hi = view.denormalize_value(j, hi.clamp(0.0, 1.0));
        clauses.push(Clause::new(j, lo, hi)?);
    }
    Ok((Predicate::new(clauses)?, dropped))
}

/// Starting point: centred on the mean of the positives, half-width the
/// positives' half-extent (floored at [`MIN_INITIAL_RANGE`]).
pub fn initialize(view: &NormalizedView, labels: &[bool], b: f64) -> Result<SoftPredicate> {
    let m = view.n_dims();
    let mut sum = vec![0.0; m];
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    let mut count = 0usize;
    for (row, _) in view.rows().zip(labels).filter(|(_, &y)| y) {
        count += 1;
        for j in 0..m {
            sum[j] += row[j];
            lo[j] = lo[j].min(row[j]);
            hi[j] = hi[j].max(row[j]);
        }
    }
    if count == 0 {
        return Err(Error::EmptySelection("no positive points to initialize from".into()));
    }
    let mut mu = Vec::with_capacity(m);
    let mut a = Vec::with_capacity(m);
    for j in 0..m {
        if view.is_constant(j) {
            mu.push(0.5);
            a.push(0.0);
        } else {
            mu.push((sum[j] / count as f64).clamp(MU_BOUNDS.0, MU_BOUNDS.1));
            a.push(1.0 / ((hi[j] - lo[j]) / 2.0).max(MIN_INITIAL_RANGE));
        }
    }
    SoftPredicate::new(mu, a, b)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Returns the step to subtract for each parameter.
    fn step(&mut self, grad: &[f64], lr: f64) -> Vec<f64> {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        grad.iter()
            .enumerate()
            .map(|(k, &g)| {
                self.m[k] = ADAM_BETA1 * self.m[k] + (1.0 - ADAM_BETA1) * g;
                self.v[k] = ADAM_BETA2 * self.v[k] + (1.0 - ADAM_BETA2) * g * g;
                lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + ADAM_EPS)
            })
            .collect()
    }
}

/// Fits one soft predicate per brush, jointly, over the rows of `ds`.
///
/// `view` must be the normalization of `ds`. Returns one result per brush
/// in order; with a single brush the smoothness term vanishes.
pub fn fit(
    brushes: &[LabeledSelection],
    ds: &Dataset,
    view: &NormalizedView,
    cfg: &RegressionConfig,
) -> Result<Vec<RegressionResult>> {
    cfg.validate()?;
    if brushes.is_empty() {
        return Err(Error::EmptySelection("no brushes to fit".into()));
    }
    if view.n_rows() != ds.n_rows() || view.n_dims() != ds.n_dims() {
        return Err(Error::InvalidInput("view does not match dataset".into()));
    }
    if let Some(b) = brushes.iter().find(|b| b.len() != ds.n_rows()) {
        return Err(Error::InvalidInput(format!(
            "brush has {} labels for {} rows",
            b.len(),
            ds.n_rows()
        )));
    }

    let m = view.n_dims();
    let x: Vec<f64> = view.rows().flatten().copied().collect();
    let labels: Vec<&[bool]> = brushes.iter().map(|b| b.labels()).collect();
    let active: Vec<bool> = (0..m).map(|j| !view.is_constant(j)).collect();

    let mut seq = brushes
        .iter()
        .map(|b| initialize(view, b.labels(), cfg.b))
        .collect::<Result<Vec<_>>>()?;
    let mut adam = Adam::new(seq.len() * 2 * m);
    let mut loss_trace = Vec::with_capacity(cfg.max_iters + 1);
    let mut converged = false;
    let mut last_finite = seq.clone();

    let mut iter = 0;
    loop {
        let (loss, grads) = loss_and_gradients(&seq, &x, &labels, cfg)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                iteration: iter,
                last_loss: loss_trace.last().copied().unwrap_or(f64::NAN),
                last_finite,
            });
        }
        loss_trace.push(loss);
        last_finite.clone_from(&seq);

        if let Some(&past) = loss_trace.len().checked_sub(CONVERGENCE_WINDOW + 1).map(|k| &loss_trace[k]) {
            if (past - loss).abs() <= cfg.convergence_tol * past.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        if iter == cfg.max_iters {
            break;
        }
        iter += 1;

        let flat: Vec<f64> = grads
            .iter()
            .flat_map(|g| g.a.iter().chain(&g.mu).copied())
            .collect();
        let step = adam.step(&flat, cfg.learning_rate);
        for (t, soft) in seq.iter_mut().enumerate() {
            let base = t * 2 * m;
            for j in (0..m).filter(|&j| active[j]) {
                soft.a[j] = (soft.a[j] - step[base + j]).max(0.0);
                soft.mu[j] = (soft.mu[j] - step[base + m + j]).clamp(MU_BOUNDS.0, MU_BOUNDS.1);
            }
        }
    }

    seq.into_iter()
        .zip(brushes)
        .map(|(soft, brush)| {
            let (hard, dropped_dims) = extract_hard(&soft, view)?;
            let member = evaluate_predicate(&hard, ds)?;
            let conf = confusion(&member, brush.labels())?;
            Ok(RegressionResult {
                hard,
                soft,
                loss_trace: loss_trace.clone(),
                f1: conf.f1(),
                confusion: conf,
                converged,
                iterations: iter,
                dropped_dims,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::normalize;

    fn soft(mu: &[f64], a: &[f64], b: f64) -> SoftPredicate {
        SoftPredicate::new(mu.to_vec(), a.to_vec(), b).unwrap()
    }

    #[test]
    fn proxy_peak_and_face() {
        let s = soft(&[0.3, 0.6], &[2.0, 5.0], 7.0);
        assert_eq!(proxy(&[0.3, 0.6], &s), 1.0);
        let face = soft(&[0.3, 0.6], &[4.0, 0.0], 7.0);
        assert!((proxy(&[0.3 + 0.25, 0.0], &face) - 0.5).abs() < 1e-12);
        let exact = soft(&[0.25], &[4.0], 7.0);
        assert_eq!(proxy(&[0.5], &exact), 0.5);
    }

    #[test]
    fn proxy_figure_parameters() {
        let s = soft(&[0.0, 0.0], &[1.0, 0.5], 7.0);
        assert!((proxy(&[1.0, 2.0], &s) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bce_examples() {
        // One point at the face: f = 0.5.
        let s = soft(&[0.0], &[1.0], 7.0);
        let l = bce_loss(&s, &[1.0], &[true], 1e-7).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        let l = bce_loss(&s, &[1.0, -1.0], &[true, false], 1e-7).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bce_perfect_fit_limit() {
        // y = 1 at the peak (f = 1 clipped), y = 0 far away (f ~ 0 clipped).
        let s = soft(&[0.0], &[100.0], 7.0);
        let l = bce_loss(&s, &[0.0, 1.0], &[true, false], 1e-7).unwrap();
        assert!((l - -(1.0f64 - 1e-7).ln()).abs() < 1e-15);
        assert!(l < 1.1e-7);
    }

    #[test]
    fn smoothness_examples() {
        let p = soft(&[0.1, 0.2], &[1.0, 1.0], 7.0);
        assert_eq!(smoothness_loss(std::slice::from_ref(&p), 1.0, 1.0), 0.0);
        assert_eq!(smoothness_loss(&[p.clone(), p.clone()], 1.0, 1.0), 0.0);
        let q = soft(&[0.2, 0.2], &[1.0, 1.0], 7.0);
        assert!((smoothness_loss(&[p, q], 1.0, 1.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn total_loss_reductions() {
        let x = [0.2, 0.9];
        let y: &[bool] = &[true, false];
        let s = soft(&[0.25], &[3.0], 7.0);
        let cfg = RegressionConfig {
            gamma_1: 0.0,
            ..Default::default()
        };
        let t = total_loss(std::slice::from_ref(&s), &x, &[y], &cfg).unwrap();
        assert_eq!(t, bce_loss(&s, &x, y, cfg.prob_clip).unwrap());

        let z = soft(&[0.25], &[0.0], 7.0);
        let cfg = RegressionConfig {
            gamma_1: 3.0,
            ..Default::default()
        };
        let t = total_loss(std::slice::from_ref(&z), &x, &[y], &cfg).unwrap();
        assert_eq!(t, bce_loss(&z, &x, y, cfg.prob_clip).unwrap());

        assert!(matches!(
            total_loss(&[z.clone(), z], &x, &[y], &cfg),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn total_loss_two_steps_term_by_term() {
        // 2 points, 1 dim, T = 2; terms written out by hand.
        let x = [0.2, 0.8];
        let (y0, y1): (&[bool], &[bool]) = (&[true, false], &[false, true]);
        let s0 = soft(&[0.3], &[2.0], 3.0);
        let s1 = soft(&[0.6], &[4.0], 3.0);
        let cfg = RegressionConfig {
            gamma_1: 0.1,
            gamma_a: 0.5,
            gamma_mu: 2.0,
            ..Default::default()
        };
        let f = |x: f64, mu: f64, a: f64| 1.0 / (1.0 + (a * (x - mu)).abs().powi(3));
        let bce0 = -(f(0.2, 0.3, 2.0).ln() + (1.0 - f(0.8, 0.3, 2.0)).ln()) / 2.0;
        let bce1 = -((1.0 - f(0.2, 0.6, 4.0)).ln() + f(0.8, 0.6, 4.0).ln()) / 2.0;
        let l1 = 0.1 * (2.0 + 4.0);
        let smooth = 0.5 * 4.0 + 2.0 * 0.09;
        let expected = bce0 + bce1 + l1 + smooth;
        let got = total_loss(&[s0, s1], &x, &[y0, y1], &cfg).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn combined_pass_matches_total_loss() {
        let x = [0.1, 0.4, 0.5, 0.5, 0.9, 0.7];
        let y: &[bool] = &[true, true, false];
        let s = soft(&[0.3, 0.5], &[2.0, 1.5], 5.0);
        let cfg = RegressionConfig::default();
        let (l, _) = loss_and_gradients(std::slice::from_ref(&s), &x, &[y], &cfg).unwrap();
        let t = total_loss(std::slice::from_ref(&s), &x, &[y], &cfg).unwrap();
        assert!((l - t).abs() < 1e-14);
    }

    #[test]
    fn centre_is_stationary_in_mu() {
        let x = [0.4, 0.6, 0.4, 0.6];
        let y: &[bool] = &[true, false];
        let s = soft(&[0.4, 0.6], &[2.0, 2.0], 7.0);
        let g = gradients(&[s], &x, &[y], &RegressionConfig::default()).unwrap();
        assert!(g[0].mu.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn l1_gradient_is_gamma() {
        // Point at the centre contributes nothing to dL/da.
        let x = [0.5];
        let y: &[bool] = &[true];
        let s = soft(&[0.5], &[3.0], 7.0);
        let cfg = RegressionConfig {
            gamma_1: 0.3,
            ..Default::default()
        };
        let g = gradients(&[s], &x, &[y], &cfg).unwrap();
        assert_eq!(g[0].a[0], 0.3);
    }

    /// Central differences of `total_loss`, independent of the analytic path.
    fn fd_gradient(seq: &[SoftPredicate], x: &[f64], y: &[&[bool]], cfg: &RegressionConfig) -> Vec<StepGradient> {
        let h = 1e-5;
        let l = |s: &[SoftPredicate]| total_loss(s, x, y, cfg).unwrap();
        (0..seq.len())
            .map(|t| {
                let m = seq[t].n_dims();
                let mut g = StepGradient {
                    a: vec![0.0; m],
                    mu: vec![0.0; m],
                };
                for j in 0..m {
                    let mut p = seq.to_vec();
                    let mut q = seq.to_vec();
                    p[t].a[j] += h;
                    q[t].a[j] -= h;
                    g.a[j] = (l(&p) - l(&q)) / (2.0 * h);
                    let mut p = seq.to_vec();
                    let mut q = seq.to_vec();
                    p[t].mu[j] += h;
                    q[t].mu[j] -= h;
                    g.mu[j] = (l(&p) - l(&q)) / (2.0 * h);
                }
                g
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences_5d() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (n, m, t) = (30, 5, 3);
        let x: Vec<f64> = (0..n * m).map(|_| rng.random::<f64>()).collect();
        let ys: Vec<Vec<bool>> = (0..t).map(|_| (0..n).map(|_| rng.random_bool(0.4)).collect()).collect();
        let yrefs: Vec<&[bool]> = ys.iter().map(|v| v.as_slice()).collect();
        let seq: Vec<SoftPredicate> = (0..t)
            .map(|_| {
                let mu = (0..m).map(|_| rng.random_range(0.2..0.8)).collect();
                let a = (0..m).map(|_| rng.random_range(0.5..3.0)).collect();
                SoftPredicate::new(mu, a, 5.0).unwrap()
            })
            .collect();
        let cfg = RegressionConfig::default();
        let an = gradients(&seq, &x, &yrefs, &cfg).unwrap();
        let fd = fd_gradient(&seq, &x, &yrefs, &cfg);
        for (ga, gf) in an.iter().zip(&fd) {
            for (u, v) in ga.a.iter().chain(&ga.mu).zip(gf.a.iter().chain(&gf.mu)) {
                let rel = (u - v).abs() / u.abs().max(v.abs()).max(1e-8);
                assert!(rel <= 1e-4, "analytic {u} vs fd {v}");
            }
        }
    }

    fn view_of(rows: &[Vec<f64>]) -> (Dataset, NormalizedView) {
        let m = rows[0].len();
        let names = (0..m).map(|j| format!("d{j}")).collect();
        let ds = Dataset::from_rows(names, rows, vec![[0.0, 0.0]; rows.len()]).unwrap();
        let v = normalize(&ds);
        (ds, v)
    }

    #[test]
    fn extract_examples() {
        let (_, v) = view_of(&[vec![0.0, 10.0], vec![1.0, 20.0]]);
        let s = soft(&[0.5, 0.5], &[0.0, 1.0], 7.0);
        let (p, dropped) = extract_hard(&s, &v).unwrap();
        assert!(p.is_empty());
        assert_eq!(dropped, vec![0, 1]);

        let s = soft(&[0.5, 0.5], &[4.0, 4.0], 7.0);
        let (p, dropped) = extract_hard(&s, &v).unwrap();
        assert!(dropped.is_empty());
        assert_eq!(p.clauses()[0], Clause { dim: 0, lo: 0.25, hi: 0.75 });
        assert_eq!(p.clauses()[1], Clause { dim: 1, lo: 12.5, hi: 17.5 });
    }

    #[test]
    fn extract_clips_outside_extent() {
        let (_, v) = view_of(&[vec![0.0], vec![1.0]]);
        let s = soft(&[1.4], &[10.0], 7.0);
        let (p, _) = extract_hard(&s, &v).unwrap();
        assert_eq!(p.clauses()[0], Clause { dim: 0, lo: 1.0, hi: 1.0 });
    }

    #[test]
    fn constant_dims_never_emitted() {
        let (_, v) = view_of(&[vec![0.0, 3.0], vec![1.0, 3.0]]);
        let s = soft(&[0.5, 0.5], &[4.0, 4.0], 7.0);
        let (p, dropped) = extract_hard(&s, &v).unwrap();
        assert_eq!(p.dims().collect::<Vec<_>>(), vec![0]);
        assert!(dropped.is_empty());
    }

    #[test]
    fn fit_small_interval() {
        // 1-D: positives in the middle fifth.
        let rows: Vec<Vec<f64>> = (0..101).map(|i| vec![i as f64 / 100.0]).collect();
        let labels: Vec<bool> = rows.iter().map(|r| (0.4..=0.6).contains(&r[0])).collect();
        let (ds, v) = view_of(&rows);
        let sel = LabeledSelection::new(labels).unwrap();
        let res = fit(&[sel], &ds, &v, &RegressionConfig::default()).unwrap();
        assert_eq!(res.len(), 1);
        assert!(res[0].f1 > 0.9, "f1 {}", res[0].f1);
        assert_eq!(res[0].hard.len(), 1);
        assert!(!res[0].loss_trace.is_empty());
    }

    #[test]
    fn invalid_config_rejected() {
        let bad = RegressionConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RegressionConfig {
            max_iters: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let cfg: RegressionConfig = serde_json::from_str(r#"{"gamma_1": 0.2}"#).unwrap();
        assert_eq!(cfg.gamma_1, 0.2);
        assert_eq!(cfg.b, 7.0);
    }
}
