//! Connected level set of the point of interest within an evaluation set.
//!
//! A row belongs to the set when its score lies in the closeness region and
//! some tested path from the point to the row stays inside the region. Paths
//! consist of three legs: nominal features switched one at a time, ordinal
//! features stepped through their intermediate levels, then a straight line
//! over the numeric features checked at `q` equidistant steps. Every leg ends
//! in the same state whatever ordering is used, so the legs are checked
//! independently.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::predictor::Predictor;
use crate::region::ClosenessRegion;
use crate::space::{Dataset, FeatureDomain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LevelSetConfig {
    /// Equidistant steps along the numeric leg.
    pub q: usize,
    /// Maximum number of feature orders tried per categorical leg.
    pub perm_cap: usize,
    pub seed: u64,
}

impl Default for LevelSetConfig {
    fn default() -> Self {
        LevelSetConfig {
            q: 20,
            perm_cap: 100,
            seed: 0,
        }
    }
}

impl LevelSetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q < 2 {
            return Err(IrdError::Config("level-set q must be at least 2".into()));
        }
        if self.perm_cap < 1 {
            return Err(IrdError::Config("perm_cap must be at least 1".into()));
        }
        Ok(())
    }
}

fn factorial_at_most(k: usize, cap: usize) -> bool {
    let mut f = 1usize;
    for i in 2..=k {
        f = f.saturating_mul(i);
        if f > cap {
            return false;
        }
    }
    true
}

fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Feature orders to test: all of them when there are at most `cap`,
/// otherwise the first `cap` draws of a seeded shuffle sequence (so a larger
/// cap only adds orders).
fn orders(features: &[usize], cap: usize, seed: u64) -> Vec<Vec<usize>> {
    if factorial_at_most(features.len(), cap) {
        let mut p = features.to_vec();
        p.sort_unstable();
        let mut out = vec![p.clone()];
        while next_permutation(&mut p) {
            out.push(p.clone());
        }
        out
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..cap)
            .map(|_| {
                let mut p = features.to_vec();
                p.shuffle(&mut rng);
                p
            })
            .collect()
    }
}

struct PathCheck<'a, P: ?Sized> {
    predictor: &'a P,
    region: &'a ClosenessRegion,
    target: &'a [f64],
}

impl<P: Predictor + ?Sized> PathCheck<'_, P> {
    fn ok(&self, point: &[f64]) -> Result<bool> {
        if point == self.target {
            return Ok(true);
        }
        Ok(self.region.contains(self.predictor.score(point)?))
    }

    /// Tries each order, moving one feature at a time toward the target and
    /// checking every intermediate point.
    fn leg(&self, start: &[f64], orders: &[Vec<usize>], ordinal: bool) -> Result<bool> {
        'orders: for order in orders {
            let mut state = start.to_vec();
            for &j in order {
                let goal = self.target[j];
                if ordinal {
                    let step = if goal > state[j] { 1.0 } else { -1.0 };
                    while state[j] != goal {
                        state[j] += step;
                        if !self.ok(&state)? {
                            continue 'orders;
                        }
                    }
                } else {
                    state[j] = goal;
                    if !self.ok(&state)? {
                        continue 'orders;
                    }
                }
            }
            return Ok(true);
        }
        Ok(orders.is_empty())
    }

    fn line(&self, start: &[f64], numeric: &[usize], q: usize) -> Result<bool> {
        if numeric.is_empty() {
            return Ok(true);
        }
        let mut point = start.to_vec();
        for k in 1..q {
            let t = k as f64 / q as f64;
            for &j in numeric {
                point[j] = start[j] + (self.target[j] - start[j]) * t;
            }
            if !self.ok(&point)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Indices of rows of `eval` in the connected level set of `x`.
pub fn connected_level_set<P: Predictor + ?Sized>(
    x: &[f64],
    eval: &Dataset,
    region: &ClosenessRegion,
    predictor: &P,
    cfg: &LevelSetConfig,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    let space = eval.space();
    space.validate_values(x)?;
    let scores = eval.require_scores()?;
    let own = predictor.score(x)?;
    if !region.contains(own) {
        return Err(IrdError::precondition(format!(
            "prediction {own} of the point of interest is outside [{}, {}]",
            region.lo, region.hi
        )));
    }

    let kinds: Vec<u8> = space
        .features()
        .iter()
        .map(|f| match &f.domain {
            FeatureDomain::Numeric { .. } => 0,
            FeatureDomain::Categorical { ordered: false, .. } => 1,
            FeatureDomain::Categorical { ordered: true, .. } => 2,
        })
        .collect();

    let members: Vec<Option<usize>> = (0..eval.len())
        .into_par_iter()
        .map(|i| -> Result<Option<usize>> {
            if !region.contains(scores[i]) {
                return Ok(None);
            }
            let target = eval.row(i).values();
            let differing = |kind: u8| -> Vec<usize> {
                (0..x.len())
                    .filter(|&j| kinds[j] == kind && x[j] != target[j])
                    .collect()
            };
            let check = PathCheck {
                predictor,
                region,
                target,
            };
            let mut state = x.to_vec();

            let nominal = differing(1);
            if !check.leg(&state, &orders(&nominal, cfg.perm_cap, cfg.seed), false)? {
                return Ok(None);
            }
            for &j in &nominal {
                state[j] = target[j];
            }

            let ordinal = differing(2);
            if !check.leg(&state, &orders(&ordinal, cfg.perm_cap, cfg.seed), true)? {
                return Ok(None);
            }
            for &j in &ordinal {
                state[j] = target[j];
            }

            if !check.line(&state, &differing(0), cfg.q)? {
                return Ok(None);
            }
            Ok(Some(i))
        })
        .collect::<Result<_>>()?;
    Ok(members.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::FnPredictor;
    use crate::space::{Feature, FeatureSpace, Instance};
    use std::sync::Arc;

    fn dataset(space: FeatureSpace, rows: Vec<Vec<f64>>, f: &dyn Fn(&[f64]) -> f64) -> Dataset {
        let scores = rows.iter().map(|r| f(r)).collect();
        let rows = rows.into_iter().map(Instance::new).collect();
        Dataset::with_scores(Arc::new(space), rows, scores).unwrap()
    }

    fn unit(p: usize) -> FeatureSpace {
        FeatureSpace::new(
            (0..p)
                .map(|j| Feature::new(format!("x{j}"), FeatureDomain::numeric(0.0, 1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn permutation_enumeration() {
        assert_eq!(orders(&[2, 0, 1], 100, 0).len(), 6);
        assert_eq!(orders(&[], 100, 0), vec![Vec::<usize>::new()]);
        let sampled = orders(&[0, 1, 2, 3, 4], 10, 7);
        assert_eq!(sampled.len(), 10);
        assert_eq!(&orders(&[0, 1, 2, 3, 4], 20, 7)[..10], &sampled[..]);
    }

    #[test]
    fn one_dimensional_path_at_q_10() {
        let f = |x: &[f64]| x[0];
        let data = dataset(
            unit(1),
            vec![vec![0.4], vec![0.5], vec![0.6], vec![0.9]],
            &f,
        );
        let region = ClosenessRegion::new(0.3, 0.7).unwrap();
        let cfg = LevelSetConfig {
            q: 10,
            ..Default::default()
        };
        let got = connected_level_set(&[0.5], &data, &region, &FnPredictor(f), &cfg).unwrap();
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn gaps_disconnect_in_region_rows() {
        // region holds at both ends but not in the middle
        let f = |x: &[f64]| if (0.4..0.6).contains(&x[0]) { 0.0 } else { 1.0 };
        let data = dataset(unit(1), vec![vec![0.1], vec![0.9], vec![0.5]], &f);
        let region = ClosenessRegion::new(0.5, 1.0).unwrap();
        let got = connected_level_set(
            &[0.2],
            &data,
            &region,
            &FnPredictor(f),
            &LevelSetConfig::default(),
        )
        .unwrap();
        assert_eq!(got, vec![0]);
    }

    #[test]
    fn nominal_orders_search_for_a_detour() {
        // switching c0 first passes through (1,0), which is off-region;
        // switching c1 first passes through (0,1), which is fine
        let space = FeatureSpace::new(vec![
            Feature::new("c0", FeatureDomain::categorical(["a", "b"])),
            Feature::new("c1", FeatureDomain::categorical(["a", "b"])),
        ])
        .unwrap();
        let f = |x: &[f64]| if x[0] == 1.0 && x[1] == 0.0 { 0.0 } else { 1.0 };
        let data = dataset(space, vec![vec![1.0, 1.0]], &f);
        let region = ClosenessRegion::new(0.5, 1.0).unwrap();
        let got = connected_level_set(
            &[0.0, 0.0],
            &data,
            &region,
            &FnPredictor(f),
            &LevelSetConfig::default(),
        )
        .unwrap();
        assert_eq!(got, vec![0]);
    }

    #[test]
    fn ordinal_legs_visit_intermediate_levels() {
        let space = FeatureSpace::new(vec![Feature::new(
            "o",
            FeatureDomain::ordinal(["lo", "mid", "hi"]),
        )])
        .unwrap();
        let f = |x: &[f64]| if x[0] == 1.0 { 0.0 } else { 1.0 };
        let data = dataset(space, vec![vec![2.0], vec![0.0]], &f);
        let region = ClosenessRegion::new(0.5, 1.0).unwrap();
        let got = connected_level_set(
            &[0.0],
            &data,
            &region,
            &FnPredictor(f),
            &LevelSetConfig::default(),
        )
        .unwrap();
        assert_eq!(got, vec![1]);
    }

    #[test]
    fn off_region_rows_and_the_point_itself() {
        let f = |x: &[f64]| x[0];
        let data = dataset(unit(1), vec![vec![0.5], vec![0.2]], &f);
        let region = ClosenessRegion::new(0.3, 0.7).unwrap();
        let got = connected_level_set(
            &[0.5],
            &data,
            &region,
            &FnPredictor(f),
            &LevelSetConfig::default(),
        )
        .unwrap();
        assert_eq!(got, vec![0]);
    }
}
