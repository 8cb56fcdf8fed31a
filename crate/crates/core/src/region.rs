//! Closeness regions: the prediction interval an explanation must stay inside.

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};

/// Closed prediction interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessRegion {
    pub lo: f64,
    pub hi: f64,
}

impl ClosenessRegion {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IrdError::domain(format!(
                "invalid closeness region [{lo}, {hi}]"
            )));
        }
        Ok(ClosenessRegion { lo, hi })
    }

    /// Region for a probability-valued predictor; must lie inside `[0, 1]`.
    pub fn probability(lo: f64, hi: f64) -> Result<Self> {
        let r = ClosenessRegion::new(lo, hi)?;
        if lo < 0.0 || hi > 1.0 {
            return Err(IrdError::domain(format!(
                "classification region [{lo}, {hi}] is not inside [0, 1]"
            )));
        }
        Ok(r)
    }

    #[inline]
    pub fn contains(&self, score: f64) -> bool {
        self.lo <= score && score <= self.hi
    }
}

#[inline]
pub fn in_region(score: f64, region: &ClosenessRegion) -> bool {
    region.contains(score)
}

/// How the closeness region is derived from the model output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskMode {
    /// Probability of the class of interest; region `[0.5, 1]`.
    Binary,
    /// Probability of the most likely class (emitted by the predictor);
    /// region `f(x') ± sd`, clipped to `[0, 1]`.
    #[serde(alias = "external")]
    Multiclass,
    /// Real-valued output; region `f(x') ± sd`.
    Regression,
}

impl std::str::FromStr for TaskMode {
    type Err = IrdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(TaskMode::Binary),
            "multiclass" | "external" => Ok(TaskMode::Multiclass),
            "regression" => Ok(TaskMode::Regression),
            other => Err(IrdError::Config(format!("unknown task mode `{other}`"))),
        }
    }
}

/// Population standard deviation.
pub fn population_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Builds the closeness region for a point whose prediction is `score`.
///
/// `train_scores` are the model's predictions on the training data; their
/// population standard deviation is the half-width for regression and
/// multiclass tasks.
pub fn make_region(score: f64, mode: TaskMode, train_scores: &[f64]) -> Result<ClosenessRegion> {
    match mode {
        TaskMode::Binary => ClosenessRegion::probability(0.5, 1.0),
        TaskMode::Regression | TaskMode::Multiclass => {
            if train_scores.is_empty() {
                return Err(IrdError::precondition(
                    "training predictions are required to size the region",
                ));
            }
            let delta = population_sd(train_scores);
            let (mut lo, mut hi) = (score - delta, score + delta);
            if mode == TaskMode::Multiclass {
                lo = lo.clamp(0.0, 1.0);
                hi = hi.clamp(0.0, 1.0);
            }
            ClosenessRegion::new(lo, hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_closed() {
        let r = ClosenessRegion::new(0.5, 1.0).unwrap();
        assert!(in_region(0.5, &r));
        assert!(!in_region(0.49, &r));
        assert!(!in_region(1.0, &ClosenessRegion::new(0.3, 0.6).unwrap()));
    }

    #[test]
    fn rejects_bad_regions() {
        assert!(ClosenessRegion::new(1.0, 0.0).is_err());
        assert!(ClosenessRegion::probability(0.5, 1.2).is_err());
    }

    #[test]
    fn binary_region_is_upper_half() {
        let r = make_region(0.8, TaskMode::Binary, &[]).unwrap();
        assert_eq!((r.lo, r.hi), (0.5, 1.0));
    }

    #[test]
    fn regression_region_uses_population_sd() {
        // values 8, 12 -> mean 10, population sd 2
        let r = make_region(10.0, TaskMode::Regression, &[8.0, 12.0]).unwrap();
        assert_eq!((r.lo, r.hi), (8.0, 12.0));
    }

    #[test]
    fn multiclass_region_is_clipped() {
        // values 0.3, 0.9 -> population sd 0.3
        let r = make_region(0.9, TaskMode::Multiclass, &[0.3, 0.9]).unwrap();
        assert!((r.lo - 0.6).abs() < 1e-12);
        assert_eq!(r.hi, 1.0);
    }

    #[test]
    fn regression_needs_training_scores() {
        assert!(make_region(1.0, TaskMode::Regression, &[]).is_err());
    }
}
