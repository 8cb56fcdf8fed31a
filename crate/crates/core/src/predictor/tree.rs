//! Greedy CART with squared-error splits.
//!
//! For 0/1 targets the squared-error reduction is proportional to the Gini
//! reduction, so the same criterion serves classification and regression.
//! Leaves predict the mean target of their rows.

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::{Dim, Hyperbox, LevelSet};
use crate::space::{Dataset, FeatureDomain, FeatureSpace};

use super::Predictor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for CartParams {
    fn default() -> Self {
        CartParams {
            max_depth: 5,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// `x_j <= threshold` goes left.
    Threshold(f64),
    /// Levels in the set go left.
    Levels(LevelSet),
}

impl SplitRule {
    fn goes_left(&self, value: f64) -> bool {
        match self {
            SplitRule::Threshold(t) => value <= *t,
            SplitRule::Levels(set) => set.contains(value as usize),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        rows: usize,
    },
    Split {
        feature: usize,
        rule: SplitRule,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct TreeModel {
    nodes: Vec<Node>,
    n_features: usize,
}

impl TreeModel {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Node indices visited from the root to the leaf of `x`.
    pub fn path(&self, x: &[f64]) -> Vec<usize> {
        let mut path = vec![0];
        let mut i = 0;
        while let Node::Split {
            feature,
            rule,
            left,
            right,
        } = &self.nodes[i]
        {
            i = if rule.goes_left(x[*feature]) {
                *left
            } else {
                *right
            };
            path.push(i);
        }
        path
    }

    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let leaf = *self.path(x).last().unwrap();
        match &self.nodes[leaf] {
            Node::Leaf { value, .. } => *value,
            Node::Split { .. } => unreachable!("paths end at leaves"),
        }
    }

    /// Intersection of the split half-spaces along the path of `x` with the
    /// full domain box.
    pub fn terminal_box(&self, x: &[f64], space: &FeatureSpace) -> Result<Hyperbox> {
        space.check_len(x.len())?;
        let mut bx = Hyperbox::full(space);
        let path = self.path(x);
        for pair in path.windows(2) {
            let Node::Split {
                feature,
                rule,
                left,
                ..
            } = &self.nodes[pair[0]]
            else {
                unreachable!()
            };
            let went_left = pair[1] == *left;
            let dim = match (bx.dim(*feature), rule) {
                (Dim::Interval { lower, upper }, SplitRule::Threshold(t)) => {
                    if went_left {
                        Dim::interval(*lower, upper.min(*t))
                    } else {
                        Dim::interval(lower.max(*t), *upper)
                    }
                }
                (Dim::Levels(current), SplitRule::Levels(set)) => {
                    let keep = current.iter().filter(|&l| set.contains(l) == went_left);
                    Dim::Levels(LevelSet::from_levels(current.universe(), keep))
                }
                _ => return Err(IrdError::domain("split kind does not match feature kind")),
            };
            bx.set_dim(*feature, dim);
        }
        Ok(bx)
    }
}

impl Predictor for TreeModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(IrdError::DimensionMismatch {
                expected: self.n_features,
                found: x.len(),
            });
        }
        Ok(self.leaf_value(x))
    }
}

struct Candidate {
    feature: usize,
    rule: SplitRule,
    gain: f64,
}

/// Fits a CART tree. Ties between equally good splits go to the lowest feature
/// index, then the lowest threshold (or shortest level prefix).
pub fn train_cart(data: &Dataset, target: &[f64], params: CartParams) -> Result<TreeModel> {
    if target.len() != data.len() {
        return Err(IrdError::precondition(format!(
            "{} targets for {} rows",
            target.len(),
            data.len()
        )));
    }
    if params.min_leaf == 0 {
        return Err(IrdError::Config("min_leaf must be at least 1".into()));
    }
    if data.len() < params.min_leaf {
        return Err(IrdError::precondition(format!(
            "{} rows is fewer than min_leaf = {}",
            data.len(),
            params.min_leaf
        )));
    }
    let mut nodes = Vec::new();
    let all: Vec<usize> = (0..data.len()).collect();
    grow(data, target, params, all, 0, &mut nodes);
    Ok(TreeModel {
        nodes,
        n_features: data.space().len(),
    })
}

fn grow(
    data: &Dataset,
    target: &[f64],
    params: CartParams,
    rows: Vec<usize>,
    depth: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let mean = rows.iter().map(|&i| target[i]).sum::<f64>() / rows.len() as f64;
    nodes.push(Node::Leaf {
        value: mean,
        rows: rows.len(),
    });
    if depth >= params.max_depth || rows.len() < 2 * params.min_leaf {
        return id;
    }
    let Some(best) = best_split(data, target, params.min_leaf, &rows) else {
        return id;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = rows
        .iter()
        .partition(|&&i| best.rule.goes_left(data.row(i)[best.feature]));
    let left = grow(data, target, params, l, depth + 1, nodes);
    let right = grow(data, target, params, r, depth + 1, nodes);
    nodes[id] = Node::Split {
        feature: best.feature,
        rule: best.rule,
        left,
        right,
    };
    id
}

fn best_split(
    data: &Dataset,
    target: &[f64],
    min_leaf: usize,
    rows: &[usize],
) -> Option<Candidate> {
    let n = rows.len() as f64;
    let total: f64 = rows.iter().map(|&i| target[i]).sum();
    let parent = total * total / n;
    let tol = 1e-12 * (1.0 + parent.abs());
    let mut best: Option<Candidate> = None;

    let mut consider = |feature: usize, rule: SplitRule, gain: f64| {
        if gain > tol && best.as_ref().is_none_or(|b| gain > b.gain + tol) {
            best = Some(Candidate {
                feature,
                rule,
                gain,
            });
        }
    };

    for (j, f) in data.space().features().iter().enumerate() {
        match &f.domain {
            FeatureDomain::Numeric { .. } => {
                let mut sorted: Vec<(f64, f64)> =
                    rows.iter().map(|&i| (data.row(i)[j], target[i])).collect();
                sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut left_sum = 0.0;
                for k in 0..sorted.len() - 1 {
                    left_sum += sorted[k].1;
                    if sorted[k].0 == sorted[k + 1].0 {
                        continue;
                    }
                    let nl = (k + 1) as f64;
                    let nr = n - nl;
                    if (k + 1) < min_leaf || sorted.len() - (k + 1) < min_leaf {
                        continue;
                    }
                    let right_sum = total - left_sum;
                    let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
                    let threshold = 0.5 * (sorted[k].0 + sorted[k + 1].0);
                    consider(j, SplitRule::Threshold(threshold), gain);
                }
            }
            FeatureDomain::Categorical { levels, .. } => {
                let mut sums = vec![0.0; levels.len()];
                let mut counts = vec![0usize; levels.len()];
                for &i in rows {
                    let l = data.row(i)[j] as usize;
                    sums[l] += target[i];
                    counts[l] += 1;
                }
                let mut present: Vec<usize> =
                    (0..levels.len()).filter(|&l| counts[l] > 0).collect();
                present.sort_by(|&a, &b| {
                    let (ma, mb) = (sums[a] / counts[a] as f64, sums[b] / counts[b] as f64);
                    ma.total_cmp(&mb).then(a.cmp(&b))
                });
                let (mut left_sum, mut left_n) = (0.0, 0usize);
                for k in 0..present.len().saturating_sub(1) {
                    left_sum += sums[present[k]];
                    left_n += counts[present[k]];
                    let right_n = rows.len() - left_n;
                    if left_n < min_leaf || right_n < min_leaf {
                        continue;
                    }
                    let right_sum = total - left_sum;
                    let gain = left_sum * left_sum / left_n as f64
                        + right_sum * right_sum / right_n as f64
                        - parent;
                    let set = LevelSet::from_levels(levels.len(), present[..=k].iter().copied());
                    consider(j, SplitRule::Levels(set), gain);
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Feature, Instance};
    use std::sync::Arc;

    fn one_d(xs: &[f64], domain: (f64, f64)) -> Dataset {
        let space = Arc::new(
            FeatureSpace::new(vec![Feature::new(
                "x",
                FeatureDomain::numeric(domain.0, domain.1),
            )])
            .unwrap(),
        );
        Dataset::new(space, xs.iter().map(|&x| Instance::new(vec![x])).collect()).unwrap()
    }

    #[test]
    fn splits_at_the_midpoint() {
        let data = one_d(&[0.0, 1.0, 9.0, 10.0], (0.0, 10.0));
        let tree = train_cart(
            &data,
            &[0.0, 0.0, 1.0, 1.0],
            CartParams {
                max_depth: 1,
                min_leaf: 1,
            },
        )
        .unwrap();
        match tree.root() {
            Node::Split { feature, rule, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*rule, SplitRule::Threshold(5.0));
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(tree.score(&[2.0]).unwrap(), 0.0);
        assert_eq!(tree.score(&[7.0]).unwrap(), 1.0);
    }

    #[test]
    fn constant_target_gives_a_single_leaf() {
        let data = one_d(&[0.0, 1.0, 2.0, 3.0], (0.0, 3.0));
        let tree = train_cart(
            &data,
            &[1.0; 4],
            CartParams {
                max_depth: 4,
                min_leaf: 1,
            },
        )
        .unwrap();
        assert_eq!(tree.nodes().len(), 1);
    }

    #[test]
    fn min_leaf_equal_to_n_gives_a_single_leaf() {
        let data = one_d(&[0.0, 1.0, 9.0, 10.0], (0.0, 10.0));
        let tree = train_cart(
            &data,
            &[0.0, 0.0, 1.0, 1.0],
            CartParams {
                max_depth: 4,
                min_leaf: 4,
            },
        )
        .unwrap();
        assert_eq!(tree.nodes().len(), 1);
        assert_eq!(tree.score(&[0.0]).unwrap(), 0.5);
    }

    #[test]
    fn terminal_box_of_single_leaf_is_the_domain() {
        let data = one_d(&[0.0, 1.0], (0.0, 10.0));
        let tree = train_cart(&data, &[1.0, 1.0], CartParams::default()).unwrap_err();
        assert!(matches!(tree, IrdError::Precondition(_)));
        let tree = train_cart(
            &data,
            &[1.0, 1.0],
            CartParams {
                max_depth: 3,
                min_leaf: 1,
            },
        )
        .unwrap();
        let bx = tree.terminal_box(&[3.0], data.space()).unwrap();
        assert_eq!(bx, Hyperbox::full(data.space()));
    }

    #[test]
    fn terminal_box_follows_one_split() {
        let data = one_d(&[0.0, 1.0, 9.0, 10.0], (0.0, 10.0));
        let tree = train_cart(
            &data,
            &[0.0, 0.0, 1.0, 1.0],
            CartParams {
                max_depth: 1,
                min_leaf: 1,
            },
        )
        .unwrap();
        let bx = tree.terminal_box(&[3.0], data.space()).unwrap();
        assert_eq!(bx.dim(0), &Dim::interval(0.0, 5.0));
    }

    #[test]
    fn terminal_box_nested_splits_in_2d() {
        // Target is 1 only in the quadrant x > 5, y <= 5. Hand trace: root
        // splits x at 5 (ties broken towards feature 0), right child splits
        // y at 5.
        let space = Arc::new(
            FeatureSpace::new(vec![
                Feature::new("x", FeatureDomain::numeric(0.0, 10.0)),
                Feature::new("y", FeatureDomain::numeric(0.0, 10.0)),
            ])
            .unwrap(),
        );
        let pts = [
            (1.0, 1.0),
            (1.0, 9.0),
            (9.0, 1.0),
            (9.0, 9.0),
            (2.0, 2.0),
            (2.0, 8.0),
            (8.0, 2.0),
            (8.0, 8.0),
        ];
        let rows = pts
            .iter()
            .map(|&(a, b)| Instance::new(vec![a, b]))
            .collect();
        let data = Dataset::new(space, rows).unwrap();
        let target: Vec<f64> = pts
            .iter()
            .map(|&(a, b)| if a > 5.0 && b <= 5.0 { 1.0 } else { 0.0 })
            .collect();
        let tree = train_cart(
            &data,
            &target,
            CartParams {
                max_depth: 2,
                min_leaf: 1,
            },
        )
        .unwrap();
        let bx = tree.terminal_box(&[8.5, 1.5], data.space()).unwrap();
        assert_eq!(bx.dim(0), &Dim::interval(5.0, 10.0));
        assert_eq!(bx.dim(1), &Dim::interval(0.0, 5.0));
        assert!(bx.covers(&[8.5, 1.5]));
    }

    #[test]
    fn categorical_split_groups_levels_by_mean() {
        let space = Arc::new(
            FeatureSpace::new(vec![Feature::new(
                "c",
                FeatureDomain::categorical(["a", "b", "c"]),
            )])
            .unwrap(),
        );
        let levels = [0.0, 1.0, 2.0, 0.0, 1.0, 2.0];
        let rows = levels.iter().map(|&l| Instance::new(vec![l])).collect();
        let data = Dataset::new(space, rows).unwrap();
        let target = [1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        let tree = train_cart(
            &data,
            &target,
            CartParams {
                max_depth: 1,
                min_leaf: 1,
            },
        )
        .unwrap();
        assert_eq!(tree.score(&[1.0]).unwrap(), 0.0);
        assert_eq!(tree.score(&[2.0]).unwrap(), 1.0);
        let bx = tree.terminal_box(&[0.0], data.space()).unwrap();
        assert_eq!(bx.dim(0), &Dim::Levels(LevelSet::from_levels(3, [0, 2])));
    }
}
