//! Search-space restriction, working-dataset selection and box initialization.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::{Dim, Hyperbox, LevelSet};
use crate::predictor::Predictor;
use crate::region::ClosenessRegion;
use crate::space::{Dataset, FeatureDomain, FeatureSpace, Instance};

pub const DEFAULT_GRID_STEPS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataScheme {
    /// Training rows that fall inside the largest local box.
    Train,
    /// Uniform samples from the largest local box; `multiplier` times the
    /// training-set size.
    Sampled { multiplier: f64 },
}

impl DataScheme {
    pub fn name(&self) -> &'static str {
        match self {
            DataScheme::Train => "train",
            DataScheme::Sampled { .. } => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizationConfig {
    /// Points of the equidistant grid scanned per numeric feature.
    pub grid_steps: usize,
    /// Features that must keep the value of the point of interest.
    pub immutable: BTreeSet<usize>,
    pub scheme: DataScheme,
    pub seed: u64,
}

impl Default for LocalizationConfig {
    fn default() -> Self {
        LocalizationConfig {
            grid_steps: DEFAULT_GRID_STEPS,
            immutable: BTreeSet::new(),
            scheme: DataScheme::Train,
            seed: 0,
        }
    }
}

impl LocalizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_steps < 2 {
            return Err(IrdError::Config("grid_steps must be at least 2".into()));
        }
        if let DataScheme::Sampled { multiplier } = self.scheme {
            if !(multiplier > 0.0) {
                return Err(IrdError::Config(
                    "sampling multiplier must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `k`-th of `steps` equidistant points on `[min, max]`.
fn grid_point(min: f64, max: f64, k: usize, steps: usize) -> f64 {
    if k + 1 == steps {
        return max;
    }
    min + (max - min) * (k as f64) / ((steps - 1) as f64)
}

/// Computes the largest local box around `x`.
///
/// Each mutable numeric feature is varied alone on an equidistant grid,
/// scanning outward from `x_j` in both directions; the bound is the last grid
/// value before the first one whose prediction leaves `region`. Categorical
/// features keep every level whose substitution stays inside `region`.
/// Immutable features are pinned to `x_j`.
pub fn largest_local_box<P: Predictor + ?Sized>(
    predictor: &P,
    x: &[f64],
    region: &ClosenessRegion,
    space: &FeatureSpace,
    cfg: &LocalizationConfig,
) -> Result<Hyperbox> {
    cfg.validate()?;
    space.validate_values(x)?;
    let own = predictor.score(x)?;
    if !region.contains(own) {
        return Err(IrdError::precondition(format!(
            "prediction {own} of the point of interest is outside [{}, {}]",
            region.lo, region.hi
        )));
    }
    let mut probe = x.to_vec();
    let mut dims = Vec::with_capacity(space.len());
    for (j, feature) in space.features().iter().enumerate() {
        let xj = x[j];
        let dim = match &feature.domain {
            FeatureDomain::Numeric { .. } if cfg.immutable.contains(&j) => Dim::interval(xj, xj),
            FeatureDomain::Numeric { min, max, .. } => {
                let (min, max) = (*min, *max);
                let steps = cfg.grid_steps;
                let mut lower = xj;
                for k in (0..steps).rev() {
                    let g = grid_point(min, max, k, steps);
                    if g >= xj {
                        continue;
                    }
                    probe[j] = g;
                    if !region.contains(predictor.score(&probe)?) {
                        break;
                    }
                    lower = g;
                }
                let mut upper = xj;
                for k in 0..steps {
                    let g = grid_point(min, max, k, steps);
                    if g <= xj {
                        continue;
                    }
                    probe[j] = g;
                    if !region.contains(predictor.score(&probe)?) {
                        break;
                    }
                    upper = g;
                }
                probe[j] = xj;
                Dim::interval(lower, upper)
            }
            FeatureDomain::Categorical { levels, .. } => {
                let own_level = xj as usize;
                if cfg.immutable.contains(&j) {
                    Dim::Levels(LevelSet::single(levels.len(), own_level))
                } else {
                    let mut set = LevelSet::single(levels.len(), own_level);
                    for c in 0..levels.len() {
                        if c == own_level {
                            continue;
                        }
                        probe[j] = c as f64;
                        if region.contains(predictor.score(&probe)?) {
                            set.insert(c);
                        }
                    }
                    probe[j] = xj;
                    Dim::Levels(set)
                }
            }
        };
        dims.push(dim);
    }
    Ok(Hyperbox::from_dims(dims))
}

/// Rows of `train` inside `bx`, order preserved; cached scores follow.
pub fn select_dataset(train: &Dataset, bx: &Hyperbox) -> Result<Dataset> {
    train.space().check_len(bx.len())?;
    let keep: Vec<usize> = (0..train.len())
        .filter(|&i| bx.covers(train.row(i)))
        .collect();
    Ok(train.subset(&keep))
}

/// Draws `n` points uniformly from `bx`. Integer features are drawn from the
/// integers inside their interval; categorical features uniformly from the
/// level subset.
pub fn sample_uniform_with<R: Rng + ?Sized>(
    bx: &Hyperbox,
    space: &std::sync::Arc<FeatureSpace>,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    space.check_len(bx.len())?;
    bx.validate(space)?;
    let levels: Vec<Vec<usize>> = bx
        .dims()
        .iter()
        .map(|d| d.levels().map(|s| s.iter().collect()).unwrap_or_default())
        .collect();
    for (j, (dim, f)) in bx.dims().iter().zip(space.features()).enumerate() {
        if let (Dim::Interval { lower, upper }, true) = (dim, f.domain.is_integer()) {
            if lower.ceil() > upper.floor() {
                return Err(IrdError::domain(format!(
                    "integer feature {j}: [{lower}, {upper}] contains no integer"
                )));
            }
        }
    }
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let values: Vec<f64> = bx
            .dims()
            .iter()
            .zip(space.features())
            .zip(&levels)
            .map(|((dim, f), lv)| match dim {
                Dim::Interval { lower, upper } => {
                    if f.domain.is_integer() {
                        let (lo, hi) = (lower.ceil() as i64, upper.floor() as i64);
                        rng.gen_range(lo..=hi) as f64
                    } else if lower == upper {
                        *lower
                    } else {
                        rng.gen_range(*lower..=*upper)
                    }
                }
                Dim::Levels(_) => *lv.choose(rng).expect("level sets are non-empty") as f64,
            })
            .collect();
        rows.push(Instance::new(values));
    }
    Dataset::new(std::sync::Arc::clone(space), rows)
}

/// Seeded convenience wrapper around [`sample_uniform_with`].
pub fn sample_uniform(
    bx: &Hyperbox,
    space: &std::sync::Arc<FeatureSpace>,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    sample_uniform_with(bx, space, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Start from the largest local box and shrink.
    TopDown,
    /// Start from the degenerate box at the point and grow.
    BottomUp,
}

pub fn init_box(
    strategy: InitStrategy,
    largest: &Hyperbox,
    x: &[f64],
    space: &FeatureSpace,
) -> Result<Hyperbox> {
    if !largest.contains(x)? {
        return Err(IrdError::precondition(
            "point of interest lies outside the largest local box",
        ));
    }
    match strategy {
        InitStrategy::TopDown => Ok(largest.clone()),
        InitStrategy::BottomUp => Hyperbox::point(space, x),
    }
}
