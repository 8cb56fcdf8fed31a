//! Sampling-based refinement of a box: peel edge slabs that fresh uniform
//! samples show to be impure, then paste pure slabs with halving step sizes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::{Dim, Hyperbox, LevelSet};
use crate::localization::sample_uniform_with;
use crate::predictor::{CallCounter, Predictor};
use crate::region::ClosenessRegion;
use crate::space::{FeatureDomain, FeatureSpace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PostprocConfig {
    /// Samples per candidate slab; the initial check uses five times as many.
    pub eval_samples: usize,
    /// Slab width as a share of the feature's domain.
    pub rel_box_size: f64,
    /// Pasting stops once the slab share falls below this value.
    pub min_rel_size: f64,
    pub seed: u64,
    /// Peel plus paste iterations before giving up.
    pub max_iterations: usize,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        PostprocConfig {
            eval_samples: 100,
            rel_box_size: 0.1,
            min_rel_size: 0.05,
            seed: 0,
            max_iterations: 10_000,
        }
    }
}

impl PostprocConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_samples < 1 {
            return Err(IrdError::Config("eval_samples must be at least 1".into()));
        }
        if !(self.min_rel_size > 0.0
            && self.min_rel_size <= self.rel_box_size
            && self.rel_box_size < 1.0)
        {
            return Err(IrdError::Config(format!(
                "need 0 < min_rel_size <= rel_box_size < 1, got {} and {}",
                self.min_rel_size, self.rel_box_size
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    pub bbox: Hyperbox,
    pub predictor_calls: usize,
    pub peels: usize,
    pub pastes: usize,
    /// Set when the iteration watchdog stopped the refinement.
    pub watchdog: bool,
}

fn precision_on<P: Predictor + ?Sized, R: Rng>(
    sub: &Hyperbox,
    predictor: &P,
    region: &ClosenessRegion,
    space: &Arc<FeatureSpace>,
    n: usize,
    rng: &mut R,
) -> Result<f64> {
    let sample = sample_uniform_with(sub, space, n, rng)?;
    let scores = predictor.score_batch(sample.rows())?;
    let inside = scores.iter().filter(|&&s| region.contains(s)).count();
    Ok(inside as f64 / n as f64)
}

/// Share of `m` uniform samples in `sub` whose prediction lies in `region`.
pub fn subbox_precision<P: Predictor + ?Sized>(
    sub: &Hyperbox,
    predictor: &P,
    region: &ClosenessRegion,
    space: &Arc<FeatureSpace>,
    m: usize,
    seed: u64,
) -> Result<f64> {
    if m == 0 {
        return Err(IrdError::precondition(
            "subbox precision needs at least one sample",
        ));
    }
    precision_on(
        sub,
        predictor,
        region,
        space,
        m,
        &mut ChaCha8Rng::seed_from_u64(seed),
    )
}

/// Slab width per numeric feature; integer features round to at least 1.
fn slab_widths(space: &FeatureSpace, share: f64) -> Vec<f64> {
    space
        .features()
        .iter()
        .map(|f| match &f.domain {
            FeatureDomain::Numeric { min, max, integer } => {
                let s = (max - min) * share;
                if *integer {
                    s.round().max(1.0)
                } else {
                    s
                }
            }
            FeatureDomain::Categorical { .. } => 0.0,
        })
        .collect()
}

/// Whether every integer dimension of `bx` still holds an integer.
fn samplable(bx: &Hyperbox, space: &FeatureSpace) -> bool {
    bx.dims().iter().enumerate().all(|(j, d)| match d {
        Dim::Interval { lower, upper } if space.domain(j).is_integer() => {
            lower.ceil() <= upper.floor()
        }
        _ => true,
    })
}

struct Candidate {
    /// The slab itself, sampled to judge it.
    slab: Hyperbox,
    /// The box after peeling or pasting the slab.
    result: Hyperbox,
    /// Slab volume relative to the box it is cut from or added to.
    share: f64,
}

fn peel_candidates(bx: &Hyperbox, x: &[f64], widths: &[f64]) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (j, dim) in bx.dims().iter().enumerate() {
        match dim {
            Dim::Interval { lower, upper } => {
                let width = upper - lower;
                let cut = (lower + widths[j]).min(x[j]);
                if cut > *lower {
                    out.push(Candidate {
                        slab: bx.with_dim(j, Dim::interval(*lower, cut)),
                        result: bx.with_dim(j, Dim::interval(cut, *upper)),
                        share: (cut - lower) / width,
                    });
                }
                let cut = (upper - widths[j]).max(x[j]);
                if cut < *upper {
                    out.push(Candidate {
                        slab: bx.with_dim(j, Dim::interval(cut, *upper)),
                        result: bx.with_dim(j, Dim::interval(*lower, cut)),
                        share: (upper - cut) / width,
                    });
                }
            }
            Dim::Levels(set) => {
                let own = x[j] as usize;
                for level in set.iter().filter(|&l| l != own) {
                    let mut rest = set.clone();
                    rest.remove(level);
                    out.push(Candidate {
                        slab: bx.with_dim(j, Dim::Levels(LevelSet::single(set.universe(), level))),
                        result: bx.with_dim(j, Dim::Levels(rest)),
                        share: 1.0 / set.len() as f64,
                    });
                }
            }
        }
    }
    out
}

fn paste_candidates(
    bx: &Hyperbox,
    limits: &Hyperbox,
    widths: &[f64],
    step: f64,
    space: &FeatureSpace,
) -> Vec<Candidate> {
    let mut out = Vec::new();
    for (j, (dim, limit)) in bx.dims().iter().zip(limits.dims()).enumerate() {
        match (dim, limit) {
            (
                Dim::Interval { lower, upper },
                Dim::Interval {
                    lower: lmin,
                    upper: lmax,
                },
            ) => {
                let mut s = widths[j] * step;
                if space.domain(j).is_integer() {
                    s = s.round().max(1.0);
                }
                let width = space.domain(j).width();
                let share = |a: f64, b: f64| if width > 0.0 { (b - a) / width } else { 0.0 };
                if lower > lmin {
                    let to = (lower - s).max(*lmin);
                    out.push(Candidate {
                        slab: bx.with_dim(j, Dim::interval(to, *lower)),
                        result: bx.with_dim(j, Dim::interval(to, *upper)),
                        share: share(to, *lower),
                    });
                }
                if upper < lmax {
                    let to = (upper + s).min(*lmax);
                    out.push(Candidate {
                        slab: bx.with_dim(j, Dim::interval(*upper, to)),
                        result: bx.with_dim(j, Dim::interval(*lower, to)),
                        share: share(*upper, to),
                    });
                }
            }
            (Dim::Levels(set), Dim::Levels(allowed)) => {
                for level in allowed.iter().filter(|&l| !set.contains(l)) {
                    let mut wider = set.clone();
                    wider.insert(level);
                    out.push(Candidate {
                        slab: bx.with_dim(j, Dim::Levels(LevelSet::single(set.universe(), level))),
                        result: bx.with_dim(j, Dim::Levels(wider)),
                        share: 1.0 / set.universe() as f64,
                    });
                }
            }
            _ => {}
        }
    }
    out
}

/// Size of `bx` over the dimensions that `limits` leaves free to move.
fn free_size(bx: &Hyperbox, limits: &Hyperbox, space: &FeatureSpace) -> f64 {
    bx.dims()
        .iter()
        .zip(limits.dims())
        .enumerate()
        .filter(|(_, (_, l))| !l.is_degenerate())
        .map(|(j, (d, _))| match (d, space.domain(j)) {
            (Dim::Interval { lower, upper }, FeatureDomain::Numeric { min, max, .. })
                if max > min =>
            {
                (upper - lower) / (max - min)
            }
            (Dim::Levels(set), FeatureDomain::Categorical { levels, .. }) => {
                set.len() as f64 / levels.len() as f64
            }
            _ => 1.0,
        })
        .product()
}

/// Refines `bx` against `predictor` inside `limits`.
pub fn postprocess<P: Predictor + ?Sized>(
    bx: &Hyperbox,
    x: &[f64],
    region: &ClosenessRegion,
    predictor: &P,
    space: &Arc<FeatureSpace>,
    limits: &Hyperbox,
    cfg: &PostprocConfig,
) -> Result<Refined> {
    cfg.validate()?;
    bx.validate(space)?;
    if !bx.contains(x)? {
        return Err(IrdError::precondition(
            "point of interest lies outside the box",
        ));
    }
    if !bx.is_subbox(limits)? {
        return Err(IrdError::precondition("box exceeds the largest local box"));
    }
    let counter = CallCounter::new(predictor);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let m = cfg.eval_samples;
    let widths = slab_widths(space, cfg.rel_box_size);
    let mut bx = bx.clone();
    let mut iterations = 0;
    let mut peels = 0;
    let mut pastes = 0;
    let mut watchdog = false;

    if precision_on(&bx, &counter, region, space, 5 * m, &mut rng)? < 1.0 {
        loop {
            if iterations >= cfg.max_iterations {
                watchdog = true;
                break;
            }
            iterations += 1;
            let mut impure = Vec::new();
            for c in peel_candidates(&bx, x, &widths)
                .into_iter()
                .filter(|c| samplable(&c.slab, space))
            {
                let p = precision_on(&c.slab, &counter, region, space, m, &mut rng)?;
                if p < 1.0 {
                    impure.push((c, p));
                }
            }
            // lowest precision per unit of size, then lower precision, then
            // larger size, then candidate order
            let Some((best, _)) = impure.into_iter().min_by(|(a, pa), (b, pb)| {
                (pa / a.share)
                    .total_cmp(&(pb / b.share))
                    .then(pa.total_cmp(pb))
                    .then(b.share.total_cmp(&a.share))
            }) else {
                break;
            };
            bx = best.result;
            peels += 1;
        }
    }

    let mut step = 1.0;
    while !watchdog && step * cfg.rel_box_size >= cfg.min_rel_size {
        if iterations >= cfg.max_iterations {
            watchdog = true;
            break;
        }
        iterations += 1;
        let mut pure = Vec::new();
        for c in paste_candidates(&bx, limits, &widths, step, space)
            .into_iter()
            .filter(|c| samplable(&c.slab, space))
        {
            if precision_on(&c.slab, &counter, region, space, m, &mut rng)? == 1.0 {
                pure.push(c);
            }
        }
        // the largest candidate must also pass a 5M-sample confirmation;
        // thin off-region slivers often slip past M samples
        let mut pasted = false;
        while !pure.is_empty() {
            let sizes: Vec<f64> = pure
                .iter()
                .map(|c| free_size(&c.result, limits, space))
                .collect();
            let top = sizes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let ties: Vec<usize> = (0..pure.len()).filter(|&i| sizes[i] == top).collect();
            let pick = pure.swap_remove(ties[rng.gen_range(0..ties.len())]);
            if precision_on(&pick.slab, &counter, region, space, 5 * m, &mut rng)? == 1.0 {
                bx = pick.result;
                pastes += 1;
                pasted = true;
                break;
            }
        }
        if !pasted {
            step /= 2.0;
        }
    }
    if watchdog {
        log::warn!(
            "post-processing stopped by its iteration watchdog after {iterations} iterations"
        );
    }

    Ok(Refined {
        bbox: bx,
        predictor_calls: counter.count(),
        peels,
        pastes,
        watchdog,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{FnPredictor, HyperboxModel};
    use crate::space::Feature;

    fn y() -> ClosenessRegion {
        ClosenessRegion::new(0.5, 1.0).unwrap()
    }

    fn unit(p: usize) -> Arc<FeatureSpace> {
        Arc::new(
            FeatureSpace::new(
                (0..p)
                    .map(|j| Feature::new(format!("x{j}"), FeatureDomain::numeric(0.0, 1.0)))
                    .collect(),
            )
            .unwrap(),
        )
    }

    fn rect(b: &[(f64, f64)]) -> Hyperbox {
        Hyperbox::from_dims(b.iter().map(|&(l, u)| Dim::interval(l, u)).collect())
    }

    #[test]
    fn subbox_precision_examples() {
        let s = unit(2);
        let full = Hyperbox::full(&s);
        let on = FnPredictor(|_: &[f64]| 1.0);
        let off = FnPredictor(|_: &[f64]| 0.0);
        assert_eq!(subbox_precision(&full, &on, &y(), &s, 50, 1).unwrap(), 1.0);
        assert_eq!(subbox_precision(&full, &off, &y(), &s, 50, 1).unwrap(), 0.0);
        let half = FnPredictor(|x: &[f64]| if x[0] < 0.5 { 1.0 } else { 0.0 });
        let p = subbox_precision(&full, &half, &y(), &s, 10_000, 1).unwrap();
        assert!((p - 0.5).abs() < 0.02, "{p}");
        assert!(subbox_precision(&full, &half, &y(), &s, 0, 1).is_err());
    }

    #[test]
    fn pasting_recovers_the_true_box() {
        let s = unit(2);
        let truth = rect(&[(0.2, 0.7), (0.1, 0.9)]);
        let model = HyperboxModel::new(truth.clone());
        let start = rect(&[(0.4, 0.5), (0.4, 0.5)]);
        let limits = Hyperbox::full(&s);
        let cfg = PostprocConfig::default();
        let r = postprocess(&start, &[0.45, 0.45], &y(), &model, &s, &limits, &cfg).unwrap();
        assert!(!r.watchdog);
        for j in 0..2 {
            let (l, u) = r.bbox.dim(j).bounds().unwrap();
            let (tl, tu) = truth.dim(j).bounds().unwrap();
            assert!((l - tl).abs() <= cfg.min_rel_size, "dim {j}: {l} vs {tl}");
            assert!((u - tu).abs() <= cfg.min_rel_size, "dim {j}: {u} vs {tu}");
        }
    }

    #[test]
    fn pure_box_equal_to_limits_is_unchanged() {
        let s = unit(2);
        let limits = rect(&[(0.2, 0.7), (0.1, 0.9)]);
        let model = HyperboxModel::new(limits.clone());
        let r = postprocess(
            &limits,
            &[0.45, 0.45],
            &y(),
            &model,
            &s,
            &limits,
            &PostprocConfig::default(),
        )
        .unwrap();
        assert_eq!(r.bbox, limits);
        assert_eq!((r.peels, r.pastes), (0, 0));
    }

    #[test]
    fn off_region_corner_is_peeled() {
        let s = unit(2);
        let model = FnPredictor(|x: &[f64]| if x[0] > 0.8 && x[1] > 0.8 { 0.0 } else { 1.0 });
        let full = Hyperbox::full(&s);
        let cfg = PostprocConfig::default();
        let r = postprocess(&full, &[0.3, 0.3], &y(), &model, &s, &full, &cfg).unwrap();
        assert!(r.peels >= 1);
        let check = subbox_precision(&r.bbox, &model, &y(), &s, 5 * cfg.eval_samples, 99).unwrap();
        assert_eq!(check, 1.0);
        assert!(r.bbox.covers(&[0.3, 0.3]));
    }

    #[test]
    fn call_count_is_exact() {
        let s = unit(1);
        let model = HyperboxModel::new(rect(&[(0.0, 0.6)]));
        let counter = CallCounter::new(&model);
        let start = rect(&[(0.2, 0.4)]);
        let r = postprocess(
            &start,
            &[0.3],
            &y(),
            &counter,
            &s,
            &Hyperbox::full(&s),
            &PostprocConfig::default(),
        )
        .unwrap();
        assert_eq!(r.predictor_calls, counter.count());
        assert_eq!(r.predictor_calls % 100, 0);
    }

    #[test]
    fn integer_slabs_are_whole_numbers() {
        let s = FeatureSpace::new(vec![
            Feature::new("n", FeatureDomain::integer(0.0, 4.0)),
            Feature::new("x", FeatureDomain::numeric(0.0, 1.0)),
        ])
        .unwrap();
        assert_eq!(slab_widths(&s, 0.1), vec![1.0, 0.1]);
    }

    #[test]
    fn stays_inside_the_limits() {
        let s = unit(2);
        let model = FnPredictor(|_: &[f64]| 1.0);
        let limits = rect(&[(0.1, 0.6), (0.3, 0.3)]);
        let start = rect(&[(0.2, 0.3), (0.3, 0.3)]);
        let r = postprocess(
            &start,
            &[0.25, 0.3],
            &y(),
            &model,
            &s,
            &limits,
            &PostprocConfig::default(),
        )
        .unwrap();
        assert_eq!(r.bbox, limits);
    }
}
