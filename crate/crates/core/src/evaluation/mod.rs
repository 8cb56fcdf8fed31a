//! Quality measures for regional descriptors.

mod level_set;

pub use level_set::{connected_level_set, LevelSetConfig};

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::{Dim, Hyperbox};
use crate::predictor::Predictor;
use crate::region::ClosenessRegion;
use crate::space::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub locality: bool,
    pub coverage: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage_l: Option<f64>,
    pub precision: f64,
    pub maximal: bool,
    pub predictor_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robustness: Option<f64>,
}

impl QualityReport {
    /// Locality, coverage, precision and maximality of `bx` on `eval`.
    pub fn measure(
        bx: &Hyperbox,
        x: &[f64],
        eval: &Dataset,
        region: &ClosenessRegion,
    ) -> Result<Self> {
        Ok(QualityReport {
            locality: locality(bx, x)?,
            coverage: coverage(bx, eval)?,
            coverage_l: None,
            precision: precision(bx, eval, region)?,
            maximal: maximality(bx, eval, region)?,
            predictor_calls: 0,
            robustness: None,
        })
    }
}

fn check_dims(bx: &Hyperbox, data: &Dataset) -> Result<()> {
    data.space().check_len(bx.len())
}

/// Share of rows of `eval` inside `bx`.
pub fn coverage(bx: &Hyperbox, eval: &Dataset) -> Result<f64> {
    check_dims(bx, eval)?;
    if eval.is_empty() {
        return Err(IrdError::domain(
            "coverage needs a non-empty evaluation set",
        ));
    }
    let inside = eval.rows().iter().filter(|r| bx.covers(r)).count();
    Ok(inside as f64 / eval.len() as f64)
}

/// `(in-box rows in region, in-box rows)`.
pub fn purity_counts(
    bx: &Hyperbox,
    eval: &Dataset,
    region: &ClosenessRegion,
) -> Result<(usize, usize)> {
    check_dims(bx, eval)?;
    let scores = eval.require_scores()?;
    let mut pos = 0;
    let mut total = 0;
    for (row, &s) in eval.rows().iter().zip(scores) {
        if bx.covers(row) {
            total += 1;
            if region.contains(s) {
                pos += 1;
            }
        }
    }
    Ok((pos, total))
}

/// Share of in-box rows whose cached score lies in `region`; 1 for a box
/// without rows.
pub fn precision(bx: &Hyperbox, eval: &Dataset, region: &ClosenessRegion) -> Result<f64> {
    let (pos, total) = purity_counts(bx, eval, region)?;
    Ok(if total == 0 {
        1.0
    } else {
        pos as f64 / total as f64
    })
}

pub fn locality(bx: &Hyperbox, x: &[f64]) -> Result<bool> {
    bx.contains(x)
}

/// Single-dimension extensions of `bx` snapped to the evaluation data: per
/// numeric side the nearest value of `eval` beyond the bound, per categorical
/// dimension each absent level that occurs in `eval`.
pub fn data_extensions(bx: &Hyperbox, eval: &Dataset) -> Result<Vec<Hyperbox>> {
    check_dims(bx, eval)?;
    let mut out = Vec::new();
    for (j, dim) in bx.dims().iter().enumerate() {
        match dim {
            Dim::Interval { lower, upper } => {
                let below = eval
                    .rows()
                    .iter()
                    .map(|r| r[j])
                    .filter(|v| v < lower)
                    .fold(f64::NEG_INFINITY, f64::max);
                if below.is_finite() {
                    out.push(bx.with_dim(j, Dim::interval(below, *upper)));
                }
                let above = eval
                    .rows()
                    .iter()
                    .map(|r| r[j])
                    .filter(|v| v > upper)
                    .fold(f64::INFINITY, f64::min);
                if above.is_finite() {
                    out.push(bx.with_dim(j, Dim::interval(*lower, above)));
                }
            }
            Dim::Levels(set) => {
                let mut present = vec![false; set.universe()];
                for r in eval.rows() {
                    present[r[j] as usize] = true;
                }
                for level in (0..set.universe()).filter(|&l| present[l] && !set.contains(l)) {
                    let mut wider = set.clone();
                    wider.insert(level);
                    out.push(bx.with_dim(j, Dim::Levels(wider)));
                }
            }
        }
    }
    Ok(out)
}

/// True when no data-snapped single-dimension extension of `bx` keeps
/// precision 1 on `eval`.
pub fn maximality(bx: &Hyperbox, eval: &Dataset, region: &ClosenessRegion) -> Result<bool> {
    for ext in data_extensions(bx, eval)? {
        if precision(&ext, eval, region)? == 1.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

fn membership(bx: &Hyperbox, eval: &Dataset) -> Vec<bool> {
    eval.rows().iter().map(|r| bx.covers(r)).collect()
}

/// Minimum Jaccard overlap, on the rows of `eval`, between `original` and
/// each rerun. Two boxes that both cover no row overlap fully.
pub fn robustness(original: &Hyperbox, reruns: &[Hyperbox], eval: &Dataset) -> Result<f64> {
    check_dims(original, eval)?;
    if reruns.is_empty() {
        return Err(IrdError::precondition(
            "robustness needs at least one rerun",
        ));
    }
    if eval.is_empty() {
        return Err(IrdError::domain(
            "robustness needs a non-empty evaluation set",
        ));
    }
    let base = membership(original, eval);
    let mut worst = 1.0f64;
    for bx in reruns {
        check_dims(bx, eval)?;
        let other = membership(bx, eval);
        let both = base.iter().zip(&other).filter(|(a, b)| **a && **b).count();
        let either = base.iter().zip(&other).filter(|(a, b)| **a || **b).count();
        let j = if either == 0 {
            1.0
        } else {
            both as f64 / either as f64
        };
        worst = worst.min(j);
    }
    Ok(worst)
}

/// Coverage of `bx` restricted to the given level-set rows of `eval`.
pub fn coverage_on(bx: &Hyperbox, eval: &Dataset, members: &[usize]) -> Result<f64> {
    check_dims(bx, eval)?;
    if members.is_empty() {
        return Err(IrdError::domain("connected level set is empty"));
    }
    let inside = members.iter().filter(|&&i| bx.covers(eval.row(i))).count();
    Ok(inside as f64 / members.len() as f64)
}

/// Coverage of `bx` relative to the connected level set of `x` in `eval`.
pub fn coverage_l<P: Predictor + ?Sized>(
    bx: &Hyperbox,
    x: &[f64],
    eval: &Dataset,
    region: &ClosenessRegion,
    predictor: &P,
    cfg: &LevelSetConfig,
) -> Result<f64> {
    let members = connected_level_set(x, eval, region, predictor, cfg)?;
    coverage_on(bx, eval, &members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbox::LevelSet;
    use crate::space::{Feature, FeatureDomain, FeatureSpace, Instance};
    use std::sync::Arc;

    fn line(values: &[f64], scores: &[f64]) -> Dataset {
        let s = Arc::new(
            FeatureSpace::new(vec![Feature::new("x", FeatureDomain::numeric(0.0, 10.0))]).unwrap(),
        );
        let rows = values.iter().map(|&v| Instance::new(vec![v])).collect();
        Dataset::with_scores(s, rows, scores.to_vec()).unwrap()
    }

    fn iv(l: f64, u: f64) -> Hyperbox {
        Hyperbox::from_dims(vec![Dim::interval(l, u)])
    }

    fn y() -> ClosenessRegion {
        ClosenessRegion::new(0.5, 1.0).unwrap()
    }

    #[test]
    fn coverage_examples() {
        let d = line(&(0..10).map(|i| i as f64).collect::<Vec<_>>(), &[1.0; 10]);
        assert_eq!(coverage(&iv(0.0, 2.0), &d).unwrap(), 0.3);
        assert_eq!(coverage(&iv(0.0, 10.0), &d).unwrap(), 1.0);
        assert_eq!(coverage(&iv(4.0, 4.0), &d).unwrap(), 0.1);
        let empty = Dataset::empty(Arc::clone(d.space_arc()));
        assert!(matches!(
            coverage(&iv(0.0, 1.0), &empty),
            Err(IrdError::Domain(_))
        ));
    }

    #[test]
    fn precision_examples() {
        let d = line(&[1.0, 2.0, 3.0], &[0.6, 0.7, 0.4]);
        assert_eq!(precision(&iv(1.0, 2.0), &d, &y()).unwrap(), 1.0);
        let d2 = line(&[1.0, 2.0], &[0.6, 0.4]);
        assert_eq!(precision(&iv(1.0, 2.0), &d2, &y()).unwrap(), 0.5);
        assert_eq!(precision(&iv(5.0, 6.0), &d, &y()).unwrap(), 1.0);
    }

    #[test]
    fn locality_examples() {
        assert!(locality(&iv(0.0, 1.0), &[0.5]).unwrap());
        assert!(locality(&iv(0.0, 1.0), &[1.0]).unwrap());
        let b = Hyperbox::from_dims(vec![Dim::interval(0.0, 1.0), Dim::interval(0.0, 1.0)]);
        assert!(!locality(&b, &[0.5, 1.5]).unwrap());
    }

    #[test]
    fn maximality_examples() {
        let d = line(&[1.0, 2.0, 3.0, 4.0], &[0.6, 0.7, 0.8, 0.1]);
        // hull of all rows: nothing left to add
        assert!(maximality(&iv(1.0, 4.0), &d, &y()).unwrap());
        // 1 can be added below without losing purity
        assert!(!maximality(&iv(2.0, 3.0), &d, &y()).unwrap());
        // blocked above by the off-region row at 4, nothing below
        assert!(maximality(&iv(1.0, 3.0), &d, &y()).unwrap());
    }

    #[test]
    fn maximality_uses_levels_present_in_data() {
        let s = Arc::new(
            FeatureSpace::new(vec![Feature::new(
                "c",
                FeatureDomain::categorical(["a", "b", "c"]),
            )])
            .unwrap(),
        );
        let rows = vec![Instance::new(vec![0.0]), Instance::new(vec![1.0])];
        let d = Dataset::with_scores(s, rows, vec![1.0, 0.0]).unwrap();
        let only_a = Hyperbox::from_dims(vec![Dim::Levels(LevelSet::single(3, 0))]);
        // adding b is impure; c never occurs
        assert!(maximality(&only_a, &d, &y()).unwrap());
    }

    #[test]
    fn robustness_examples() {
        let d = line(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0; 5]);
        let b = iv(1.0, 3.0);
        assert_eq!(robustness(&b, &[b.clone(), b.clone()], &d).unwrap(), 1.0);
        assert_eq!(robustness(&b, &[iv(4.0, 5.0)], &d).unwrap(), 0.0);
        assert_eq!(robustness(&b, &[iv(2.0, 4.0)], &d).unwrap(), 0.5);
        assert_eq!(robustness(&iv(8.0, 9.0), &[iv(9.0, 9.5)], &d).unwrap(), 1.0);
        assert!(robustness(&b, &[], &d).is_err());
    }

    #[test]
    fn coverage_on_members() {
        let d = line(&[1.0, 2.0, 3.0, 4.0, 5.0], &[1.0; 5]);
        let all: Vec<usize> = (0..5).collect();
        assert_eq!(coverage_on(&iv(0.0, 10.0), &d, &all).unwrap(), 1.0);
        assert_eq!(coverage_on(&iv(3.0, 3.0), &d, &all).unwrap(), 0.2);
        assert_eq!(
            coverage_on(&iv(1.0, 2.0), &d, &all).unwrap(),
            coverage(&iv(1.0, 2.0), &d).unwrap()
        );
        assert!(coverage_on(&iv(1.0, 2.0), &d, &[]).is_err());
    }

    #[test]
    fn report_bundles_the_measures() {
        let d = line(&[1.0, 2.0, 3.0, 4.0], &[0.6, 0.7, 0.8, 0.1]);
        let r = QualityReport::measure(&iv(1.0, 3.0), &[2.0], &d, &y()).unwrap();
        assert!(r.locality && r.maximal);
        assert_eq!(r.coverage, 0.75);
        assert_eq!(r.precision, 1.0);
    }
}
