//! Bottom-up box growth by gradient ascent on a smoothed coverage objective.
//!
//! Numeric features are scaled to `[0, 1]` over the limiting box. Each
//! numeric dimension carries bounds `l <= u`; each categorical dimension a
//! weight in `[0, 1]` per level. Row membership is
//!
//! ```text
//! m(x) = prod_j σ((x_j - l_j) / t) · σ((u_j - x_j) / t) · prod_c w_c(x_c)
//! ```
//!
//! and the objective is soft coverage minus hinge penalties on soft
//! precision below `τ` and on the point's own membership. After every Adam
//! step the exact box (weights thresholded at 0.5) is checked against the
//! data and the best pure box seen is kept.

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::{Dim, Hyperbox, LevelSet};
use crate::region::ClosenessRegion;
use crate::result::{IrdResult, Method};
use crate::space::{Dataset, FeatureSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaireConfig {
    /// Exact precision a box needs to become the best candidate.
    pub precision_threshold: f64,
    /// Iterations allowed after the exact precision first falls below the
    /// threshold.
    pub max_extra_iterations: usize,
    /// Hard cap on optimizer steps.
    pub max_iterations: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Sigmoid temperature in scaled units.
    pub temperature: f64,
    pub lambda_precision: f64,
    pub lambda_locality: f64,
    /// Step for finite-difference gradients.
    pub fd_step: f64,
    /// Use finite differences instead of the analytic gradient.
    pub finite_differences: bool,
}

impl Default for MaireConfig {
    fn default() -> Self {
        MaireConfig {
            precision_threshold: 1.0,
            max_extra_iterations: 100,
            max_iterations: 1000,
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            temperature: 0.05,
            lambda_precision: 10.0,
            lambda_locality: 10.0,
            fd_step: 1e-6,
            finite_differences: false,
        }
    }
}

impl MaireConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.precision_threshold;
        if !(t > 0.0 && t <= 1.0) {
            return Err(IrdError::Config(format!(
                "precision threshold must lie in (0, 1], got {t}"
            )));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("temperature", self.temperature),
            ("fd_step", self.fd_step),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ] {
            if !(v > 0.0) {
                return Err(IrdError::Config(format!("{name} must be positive")));
            }
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(IrdError::Config("Adam betas must be below 1".into()));
        }
        if self.lambda_precision < 0.0 || self.lambda_locality < 0.0 {
            return Err(IrdError::Config(
                "penalty weights must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
enum Slot {
    /// Scaled numeric dimension with parameter offsets for `l` and `u`.
    Numeric {
        lo: f64,
        width: f64,
        l: usize,
        u: usize,
    },
    /// Numeric dimension with zero width in the limits.
    Frozen,
    Levels(Vec<Weight>),
}

#[derive(Debug, Clone, Copy)]
enum Weight {
    /// Parameter offset.
    Free(usize),
    Fixed(f64),
}

/// The smoothed problem in scaled coordinates.
#[derive(Debug, Clone)]
pub struct SmoothProblem {
    slots: Vec<Slot>,
    /// Scaled rows inside the limits.
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
    point: Vec<f64>,
    limits: Hyperbox,
    x: Vec<f64>,
    n_params: usize,
    temperature: f64,
    tau: f64,
    lambda_p: f64,
    lambda_l: f64,
}

impl SmoothProblem {
    pub fn new(
        data: &Dataset,
        x: &[f64],
        region: &ClosenessRegion,
        limits: &Hyperbox,
        cfg: &MaireConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        data.space().check_len(limits.len())?;
        if !limits.contains(x)? {
            return Err(IrdError::precondition(
                "point of interest lies outside the limiting box",
            ));
        }
        let scores = data.require_scores()?;
        let mut n_params = 0;
        let slots: Vec<Slot> = limits
            .dims()
            .iter()
            .enumerate()
            .map(|(j, d)| match d {
                Dim::Interval { lower, upper } if upper > lower => {
                    n_params += 2;
                    Slot::Numeric {
                        lo: *lower,
                        width: upper - lower,
                        l: n_params - 2,
                        u: n_params - 1,
                    }
                }
                Dim::Interval { .. } => Slot::Frozen,
                Dim::Levels(set) => {
                    let own = x[j] as usize;
                    Slot::Levels(
                        (0..set.universe())
                            .map(|c| {
                                if c == own {
                                    Weight::Fixed(1.0)
                                } else if !set.contains(c) {
                                    Weight::Fixed(0.0)
                                } else {
                                    n_params += 1;
                                    Weight::Free(n_params - 1)
                                }
                            })
                            .collect(),
                    )
                }
            })
            .collect();
        let scale = |r: &[f64]| -> Vec<f64> {
            r.iter()
                .zip(&slots)
                .map(|(&v, s)| match s {
                    Slot::Numeric { lo, width, .. } => (v - lo) / width,
                    _ => v,
                })
                .collect()
        };
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (r, &s) in data.rows().iter().zip(scores) {
            if limits.covers(r) {
                rows.push(scale(r));
                labels.push(region.contains(s));
            }
        }
        Ok(SmoothProblem {
            point: scale(x),
            slots,
            rows,
            labels,
            limits: limits.clone(),
            x: x.to_vec(),
            n_params,
            temperature: cfg.temperature,
            tau: cfg.precision_threshold,
            lambda_p: cfg.lambda_precision,
            lambda_l: cfg.lambda_locality,
        })
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Parameters describing `bx` (which must lie in the limits).
    pub fn params_for(&self, bx: &Hyperbox) -> Vec<f64> {
        let mut theta = vec![0.0; self.n_params];
        for (slot, d) in self.slots.iter().zip(bx.dims()) {
            match (slot, d) {
                (Slot::Numeric { lo, width, l, u }, Dim::Interval { lower, upper }) => {
                    theta[*l] = ((lower - lo) / width).clamp(0.0, 1.0);
                    theta[*u] = ((upper - lo) / width).clamp(0.0, 1.0);
                }
                (Slot::Levels(levels), Dim::Levels(set)) => {
                    for (c, p) in levels.iter().enumerate() {
                        if let Weight::Free(k) = p {
                            theta[*k] = if set.contains(c) { 1.0 } else { 0.0 };
                        }
                    }
                }
                _ => {}
            }
        }
        theta
    }

    /// Keeps the point inside and every parameter in `[0, 1]`.
    pub fn project(&self, theta: &mut [f64]) {
        for (j, slot) in self.slots.iter().enumerate() {
            match slot {
                Slot::Numeric { l, u, .. } => {
                    let z = self.point[j];
                    theta[*l] = theta[*l].clamp(0.0, z);
                    theta[*u] = theta[*u].clamp(z, 1.0);
                }
                Slot::Levels(levels) => {
                    for k in levels.iter().filter_map(|p| match p {
                        Weight::Free(k) => Some(*k),
                        Weight::Fixed(_) => None,
                    }) {
                        theta[k] = theta[k].clamp(0.0, 1.0);
                    }
                }
                Slot::Frozen => {}
            }
        }
    }

    /// Per-dimension membership factors of a scaled row. Numeric dimensions
    /// contribute `(σ(a), σ(b))`, categorical ones `(w, 1)`, frozen ones
    /// `(1, 1)`.
    fn factors(&self, theta: &[f64], row: &[f64]) -> Vec<(f64, f64)> {
        let t = self.temperature;
        self.slots
            .iter()
            .zip(row)
            .map(|(slot, &v)| match slot {
                Slot::Numeric { l, u, .. } => {
                    (sigmoid((v - theta[*l]) / t), sigmoid((theta[*u] - v) / t))
                }
                Slot::Frozen => (1.0, 1.0),
                Slot::Levels(levels) => match levels[v as usize] {
                    Weight::Free(k) => (theta[k], 1.0),
                    Weight::Fixed(w) => (w, 1.0),
                },
            })
            .collect()
    }

    /// Smoothed membership of a scaled row.
    pub fn membership(&self, theta: &[f64], row: &[f64]) -> f64 {
        self.factors(theta, row)
            .iter()
            .map(|(a, b)| a * b)
            .product()
    }

    /// Mean membership over the working rows.
    pub fn soft_coverage(&self, theta: &[f64]) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows
            .iter()
            .map(|r| self.membership(theta, r))
            .sum::<f64>()
            / self.rows.len() as f64
    }

    fn parts(&self, theta: &[f64]) -> (f64, f64, f64) {
        let mut s = 0.0;
        let mut sy = 0.0;
        for (r, &ok) in self.rows.iter().zip(&self.labels) {
            let m = self.membership(theta, r);
            s += m;
            if ok {
                sy += m;
            }
        }
        let n = self.rows.len().max(1) as f64;
        let prec = if s > 0.0 { sy / s } else { 1.0 };
        (s / n, prec, self.membership(theta, &self.point))
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        let (cov, prec, mx) = self.parts(theta);
        cov - self.lambda_p * (self.tau - prec).max(0.0) - self.lambda_l * (1.0 - mx)
    }

    /// Gradient of the membership of a scaled row.
    fn membership_gradient(&self, theta: &[f64], row: &[f64], grad: &mut [f64], weight: f64) {
        let f = self.factors(theta, row);
        let m: f64 = f.iter().map(|(a, b)| a * b).product();
        let t = self.temperature;
        for (j, slot) in self.slots.iter().enumerate() {
            match slot {
                Slot::Numeric { l, u, .. } => {
                    let (sa, sb) = f[j];
                    grad[*l] += weight * -m * (1.0 - sa) / t;
                    grad[*u] += weight * m * (1.0 - sb) / t;
                }
                Slot::Levels(levels) => {
                    if let Weight::Free(k) = levels[row[j] as usize] {
                        let others: f64 = f
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != j)
                            .map(|(_, (a, b))| a * b)
                            .product();
                        grad[k] += weight * others;
                    }
                }
                Slot::Frozen => {}
            }
        }
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let n = self.rows.len().max(1) as f64;
        let mut d_cov = vec![0.0; self.n_params];
        let mut d_pos = vec![0.0; self.n_params];
        let (mut s, mut sy) = (0.0, 0.0);
        for (r, &ok) in self.rows.iter().zip(&self.labels) {
            let m = self.membership(theta, r);
            s += m;
            self.membership_gradient(theta, r, &mut d_cov, 1.0);
            if ok {
                sy += m;
                self.membership_gradient(theta, r, &mut d_pos, 1.0);
            }
        }
        let mut grad: Vec<f64> = d_cov.iter().map(|g| g / n).collect();
        if s > 0.0 && self.tau - sy / s > 0.0 {
            for k in 0..self.n_params {
                let d_prec = (d_pos[k] * s - sy * d_cov[k]) / (s * s);
                grad[k] += self.lambda_p * d_prec;
            }
        }
        self.membership_gradient(theta, &self.point, &mut grad, self.lambda_l);
        grad
    }

    /// Central finite-difference gradient.
    pub fn fd_gradient(&self, theta: &[f64], h: f64) -> Vec<f64> {
        let mut probe = theta.to_vec();
        (0..self.n_params)
            .map(|k| {
                probe[k] = theta[k] + h;
                let up = self.objective(&probe);
                probe[k] = theta[k] - h;
                let down = self.objective(&probe);
                probe[k] = theta[k];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    /// The exact box for `theta` in original units.
    pub fn materialize(&self, theta: &[f64]) -> Hyperbox {
        let dims = self
            .slots
            .iter()
            .zip(self.limits.dims())
            .enumerate()
            .map(|(j, (slot, limit))| match (slot, limit) {
                (Slot::Numeric { lo, width, l, u }, Dim::Interval { lower, upper }) => {
                    let a = (lo + theta[*l] * width).clamp(*lower, self.x[j]);
                    let b = (lo + theta[*u] * width).clamp(self.x[j], *upper);
                    Dim::interval(a, b)
                }
                (Slot::Levels(levels), Dim::Levels(set)) => Dim::Levels(LevelSet::from_levels(
                    set.universe(),
                    levels.iter().enumerate().filter_map(|(c, p)| {
                        let w = match p {
                            Weight::Free(k) => theta[*k],
                            Weight::Fixed(w) => *w,
                        };
                        (w >= 0.5).then_some(c)
                    }),
                )),
                (_, d) => d.clone(),
            })
            .collect();
        Hyperbox::from_dims(dims)
    }

    /// `(in-region, total)` covered working rows of an exact box in original
    /// units.
    fn exact_counts(&self, bx: &Hyperbox) -> (usize, usize) {
        let mut pos = 0;
        let mut total = 0;
        for (r, &ok) in self.rows.iter().zip(&self.labels) {
            let inside = bx
                .dims()
                .iter()
                .zip(&self.slots)
                .zip(r)
                .all(|((d, slot), &v)| {
                    let v = match slot {
                        Slot::Numeric { lo, width, .. } => lo + v * width,
                        _ => v,
                    };
                    d.contains(v)
                });
            if inside {
                total += 1;
                pos += ok as usize;
            }
        }
        (pos, total)
    }
}

/// Objective value and gradient of the smoothed problem at `theta`.
pub fn smoothed_objective(
    problem: &SmoothProblem,
    theta: &[f64],
    analytic: bool,
    fd_step: f64,
) -> (f64, Vec<f64>) {
    let g = if analytic {
        problem.gradient(theta)
    } else {
        problem.fd_gradient(theta, fd_step)
    };
    (problem.objective(theta), g)
}

/// Grows a box from `initial` inside `limits`, using the scored rows of
/// `data` that lie in `limits`.
pub fn maire_search(
    data: &Dataset,
    x: &[f64],
    region: &ClosenessRegion,
    initial: &Hyperbox,
    limits: &Hyperbox,
    cfg: &MaireConfig,
) -> Result<IrdResult> {
    if !initial.contains(x)? {
        return Err(IrdError::precondition(
            "point of interest lies outside the initial box",
        ));
    }
    if !initial.is_subbox(limits)? {
        return Err(IrdError::precondition(
            "initial box exceeds the limiting box",
        ));
    }
    let problem = SmoothProblem::new(data, x, region, limits, cfg)?;
    let space: &FeatureSpace = data.space();
    let precision_of = |(pos, total): (usize, usize)| {
        if total == 0 {
            1.0
        } else {
            pos as f64 / total as f64
        }
    };

    let mut theta = problem.params_for(initial);
    problem.project(&mut theta);
    let mut result = IrdResult::new(initial.clone(), Method::Maire, 0);

    let start = problem.materialize(&theta);
    let start_counts = problem.exact_counts(&start);
    let mut best: Option<(Hyperbox, usize, f64)> = None;
    if precision_of(start_counts) >= cfg.precision_threshold {
        let size = start.relative_size(space);
        best = Some((start.clone(), start_counts.1, size));
    }

    let mut m1 = vec![0.0; problem.n_params()];
    let mut m2 = vec![0.0; problem.n_params()];
    let mut dropped_at: Option<usize> = None;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        if dropped_at.is_some_and(|d| iterations - d >= cfg.max_extra_iterations) {
            break;
        }
        iterations += 1;
        let (_, grad) = smoothed_objective(&problem, &theta, !cfg.finite_differences, cfg.fd_step);
        let k = iterations as i32;
        for i in 0..theta.len() {
            m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * grad[i];
            m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let m_hat = m1[i] / (1.0 - cfg.beta1.powi(k));
            let v_hat = m2[i] / (1.0 - cfg.beta2.powi(k));
            theta[i] += cfg.learning_rate * m_hat / (v_hat.sqrt() + 1e-12);
        }
        problem.project(&mut theta);

        let bx = problem.materialize(&theta);
        let counts = problem.exact_counts(&bx);
        if precision_of(counts) >= cfg.precision_threshold {
            let size = bx.relative_size(space);
            let better = best
                .as_ref()
                .is_none_or(|(_, cov, s)| counts.1 > *cov || (counts.1 == *cov && size > *s));
            if better {
                best = Some((bx.clone(), counts.1, size));
            }
        } else if dropped_at.is_none() {
            dropped_at = Some(iterations);
        }
        if &bx == limits {
            break;
        }
    }

    result.iterations = iterations;
    result.budget_exhausted = iterations >= cfg.max_iterations;
    match best {
        Some((bx, _, _)) => result.bbox = bx,
        None => {
            result.pure = false;
            result.bbox = start;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::precision;
    use crate::space::{Feature, FeatureDomain, Instance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn y() -> ClosenessRegion {
        ClosenessRegion::new(0.5, 1.0).unwrap()
    }

    fn data_1d(values: &[f64], labels: &[bool], lo: f64, hi: f64) -> Dataset {
        let s = Arc::new(
            FeatureSpace::new(vec![Feature::new("x", FeatureDomain::numeric(lo, hi))]).unwrap(),
        );
        Dataset::with_scores(
            s,
            values.iter().map(|&v| Instance::new(vec![v])).collect(),
            labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
        )
        .unwrap()
    }

    fn mixed() -> Dataset {
        let s = Arc::new(
            FeatureSpace::new(vec![
                Feature::new("a", FeatureDomain::numeric(0.0, 1.0)),
                Feature::new("b", FeatureDomain::numeric(-5.0, 5.0)),
                Feature::new("c", FeatureDomain::categorical(["p", "q", "r"])),
            ])
            .unwrap(),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rows = Vec::new();
        let mut scores = Vec::new();
        for _ in 0..60 {
            let r = vec![
                rng.gen::<f64>(),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(0..3) as f64,
            ];
            scores.push(if r[0] + r[1] / 10.0 > 0.2 || r[2] == 2.0 {
                1.0
            } else {
                0.0
            });
            rows.push(Instance::new(r));
        }
        Dataset::with_scores(s, rows, scores).unwrap()
    }

    #[test]
    fn membership_examples() {
        let d = data_1d(&[0.5], &[true], 0.0, 1.0);
        let p = SmoothProblem::new(
            &d,
            &[0.5],
            &y(),
            &Hyperbox::full(d.space()),
            &MaireConfig {
                temperature: 1e-4,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((p.membership(&[0.2, 0.8], &[0.5]) - 1.0).abs() < 1e-12);
        assert!((p.membership(&[0.5, 0.8], &[0.5]) - 0.5).abs() < 1e-12);
        let degenerate = [0.5, 0.5];
        assert!((p.membership(&degenerate, &[0.5]) - 0.25).abs() < 1e-12);
        assert_eq!(
            p.soft_coverage(&degenerate),
            p.membership(&degenerate, &[0.5])
        );
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let d = mixed();
        let x = [0.7, 1.0, 0.0];
        let limits = Hyperbox::full(d.space());
        let cfg = MaireConfig::default();
        let p = SmoothProblem::new(&d, &x, &y(), &limits, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let mut theta: Vec<f64> = (0..p.n_params()).map(|_| rng.gen::<f64>()).collect();
            p.project(&mut theta);
            let a = p.gradient(&theta);
            let f = p.fd_gradient(&theta, cfg.fd_step);
            let diff: f64 = a
                .iter()
                .zip(&f)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            let scale = a
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt()
                .max(f.iter().map(|v| v * v).sum::<f64>().sqrt());
            assert!(diff <= 1e-4 * scale.max(1e-12), "{a:?} vs {f:?}");
        }
    }

    #[test]
    fn constant_predictor_grows_to_the_limits() {
        let vals: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let d = data_1d(&vals, &[true; 11], 0.0, 1.0);
        let limits = Hyperbox::from_dims(vec![Dim::interval(0.0, 1.0)]);
        let init = Hyperbox::point(d.space(), &[0.3]).unwrap();
        let r = maire_search(&d, &[0.3], &y(), &init, &limits, &MaireConfig::default()).unwrap();
        assert_eq!(r.bbox, limits);
    }

    #[test]
    fn negatives_at_both_ends_stop_growth() {
        let vals: Vec<f64> = (0..=20).map(|i| i as f64).collect();
        let labels: Vec<bool> = vals.iter().map(|&v| (4.0..=15.0).contains(&v)).collect();
        let d = data_1d(&vals, &labels, 0.0, 20.0);
        let limits = Hyperbox::full(d.space());
        let init = Hyperbox::point(d.space(), &[10.0]).unwrap();
        let r = maire_search(&d, &[10.0], &y(), &init, &limits, &MaireConfig::default()).unwrap();
        assert!(r.pure);
        assert_eq!(precision(&r.bbox, &d, &y()).unwrap(), 1.0);
        // inside the largest pure interval (3, 16) around the point, and grown
        let (l, u) = r.bbox.dim(0).bounds().unwrap();
        assert!(l > 3.0 && u < 16.0, "[{l}, {u}]");
        assert!(l < 10.0 && u > 10.0);
    }

    #[test]
    fn immutable_dims_stay_degenerate() {
        let d = mixed();
        let x = [0.7, 1.0, 2.0];
        let limits = Hyperbox::full(d.space()).with_dim(1, Dim::interval(1.0, 1.0));
        let init = Hyperbox::point(d.space(), &x).unwrap();
        let r = maire_search(&d, &x, &y(), &init, &limits, &MaireConfig::default()).unwrap();
        assert_eq!(r.bbox.dim(1), &Dim::interval(1.0, 1.0));
        assert!(r.bbox.is_subbox(&limits).unwrap());
    }

    #[test]
    fn result_is_pure_on_mixed_data() {
        let d = mixed();
        let x = [0.7, 1.0, 0.0];
        let limits = Hyperbox::full(d.space());
        let init = Hyperbox::point(d.space(), &x).unwrap();
        let r = maire_search(&d, &x, &y(), &init, &limits, &MaireConfig::default()).unwrap();
        assert_eq!(precision(&r.bbox, &d, &y()).unwrap(), 1.0);
        assert!(r.bbox.covers(&x));
    }

    #[test]
    fn affine_rescaling_gives_the_same_box() {
        let vals: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let labels: Vec<bool> = vals.iter().map(|&v| (0.2..=0.8).contains(&v)).collect();
        let d = data_1d(&vals, &labels, 0.0, 1.0);
        let scaled: Vec<f64> = vals.iter().map(|v| 3.0 + 7.0 * v).collect();
        let d2 = data_1d(&scaled, &labels, 3.0, 10.0);
        let cfg = MaireConfig::default();
        let a = maire_search(
            &d,
            &[0.5],
            &y(),
            &Hyperbox::point(d.space(), &[0.5]).unwrap(),
            &Hyperbox::full(d.space()),
            &cfg,
        )
        .unwrap();
        let b = maire_search(
            &d2,
            &[6.5],
            &y(),
            &Hyperbox::point(d2.space(), &[6.5]).unwrap(),
            &Hyperbox::full(d2.space()),
            &cfg,
        )
        .unwrap();
        let (l1, u1) = a.bbox.dim(0).bounds().unwrap();
        let (l2, u2) = b.bbox.dim(0).bounds().unwrap();
        assert!(((l2 - 3.0) / 7.0 - l1).abs() < 1e-9);
        assert!(((u2 - 3.0) / 7.0 - u1).abs() < 1e-9);
    }
}
