//! Branch and bound search for the largest pure box around the point of
//! interest.
//!
//! A node is a box together with the working rows it covers. Expanding an
//! impure node picks one covered negative row and creates one child per
//! dimension that separates it from the point: numeric bounds snap to the
//! nearest data value on the point's side, categorical children drop the
//! negative's level. Every pure box containing the point that fits in the
//! parent fits in one of the children, so the search is exhaustive up to
//! pruning by the positive-count bound.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::{Dim, Hyperbox};
use crate::region::ClosenessRegion;
use crate::result::{IrdResult, Method};
use crate::space::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaxboxConfig {
    /// Node expansions before the search returns its incumbent.
    pub max_nodes: usize,
    /// Drop nodes whose bound cannot beat the incumbent.
    pub prune: bool,
}

impl Default for MaxboxConfig {
    fn default() -> Self {
        MaxboxConfig {
            max_nodes: 20_000,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnbNode {
    pub bx: Hyperbox,
    pub depth: usize,
    pub pos: usize,
    pub neg: usize,
    /// Covered working rows.
    pub rows: Vec<usize>,
    seq: usize,
}

impl BnbNode {
    fn new(bx: Hyperbox, depth: usize, rows: Vec<usize>, labels: &[bool], seq: usize) -> Self {
        let pos = rows.iter().filter(|&&i| labels[i]).count();
        BnbNode {
            neg: rows.len() - pos,
            pos,
            bx,
            depth,
            rows,
            seq,
        }
    }

    pub fn is_pure(&self) -> bool {
        self.neg == 0
    }
}

/// Coverage bound for any descendant: shrinking only loses rows.
pub fn upper_bound_coverage(node: &BnbNode) -> usize {
    node.pos
}

/// Selection order: `Greater` means `a` is expanded before `b`.
fn priority(a: &BnbNode, b: &BnbNode, incumbent: bool) -> Ordering {
    let primary = if incumbent {
        // pos / neg compared without division; neg = 0 is an infinite ratio
        ((a.pos as u128) * (b.neg as u128)).cmp(&((b.pos as u128) * (a.neg as u128)))
    } else {
        a.depth
            .cmp(&b.depth)
            .then(upper_bound_coverage(a).cmp(&upper_bound_coverage(b)))
    };
    primary.then(b.seq.cmp(&a.seq))
}

/// Removes and returns the node to expand next. Without an incumbent the
/// deepest node wins (bound as tiebreak); with one, the best positive to
/// negative ratio. Remaining ties go to the earliest inserted node.
pub fn choose_best(candidates: &mut Vec<BnbNode>, incumbent: bool) -> Result<BnbNode> {
    let best = (0..candidates.len())
        .max_by(|&i, &j| priority(&candidates[i], &candidates[j], incumbent))
        .ok_or_else(|| IrdError::precondition("no candidates to choose from"))?;
    Ok(candidates.remove(best))
}

/// Per-dimension sorted distinct data values (plus the point's value) that
/// numeric bounds snap to.
#[derive(Debug, Clone)]
pub struct SnapGrid {
    values: Vec<Vec<f64>>,
}

impl SnapGrid {
    pub fn new(data: &Dataset, rows: &[usize], x: &[f64]) -> Self {
        let values = (0..x.len())
            .map(|j| {
                let mut v: Vec<f64> = rows.iter().map(|&i| data.row(i)[j]).chain([x[j]]).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            })
            .collect();
        SnapGrid { values }
    }

    fn below(&self, j: usize, v: f64) -> Option<f64> {
        let vals = &self.values[j];
        let k = vals.partition_point(|&w| w < v);
        k.checked_sub(1).map(|k| vals[k])
    }

    fn above(&self, j: usize, v: f64) -> Option<f64> {
        let vals = &self.values[j];
        let k = vals.partition_point(|&w| w <= v);
        vals.get(k).copied()
    }
}

/// Children of `node` that exclude `neg` while keeping `x`.
pub fn branch(
    node: &BnbNode,
    neg: &[f64],
    x: &[f64],
    snaps: &SnapGrid,
    data: &Dataset,
    labels: &[bool],
) -> Vec<BnbNode> {
    let mut children = Vec::new();
    for (j, dim) in node.bx.dims().iter().enumerate() {
        let new_dim = match dim {
            Dim::Interval { lower, upper } => {
                if neg[j] > x[j] {
                    match snaps.below(j, neg[j]) {
                        Some(u) if u >= x[j] => Dim::interval(*lower, u),
                        _ => continue,
                    }
                } else if neg[j] < x[j] {
                    match snaps.above(j, neg[j]) {
                        Some(l) if l <= x[j] => Dim::interval(l, *upper),
                        _ => continue,
                    }
                } else {
                    continue;
                }
            }
            Dim::Levels(set) => {
                let level = neg[j] as usize;
                if level == x[j] as usize {
                    continue;
                }
                let mut set = set.clone();
                set.remove(level);
                Dim::Levels(set)
            }
        };
        let bx = node.bx.with_dim(j, new_dim);
        let dim = bx.dim(j);
        let rows = node
            .rows
            .iter()
            .copied()
            .filter(|&i| dim.contains(data.row(i)[j]))
            .collect();
        children.push(BnbNode::new(bx, node.depth + 1, rows, labels, 0));
    }
    children
}

/// Covered negative whose best child keeps the most positives; ties go to
/// the lowest row index.
fn pick_negative(node: &BnbNode, x: &[f64], data: &Dataset, labels: &[bool]) -> usize {
    let p = x.len();
    let positives: Vec<usize> = node.rows.iter().copied().filter(|&i| labels[i]).collect();
    // sorted positive values per numeric dim; level counts per categorical dim
    let sorted: Vec<Option<Vec<f64>>> = node
        .bx
        .dims()
        .iter()
        .enumerate()
        .map(|(j, d)| match d {
            Dim::Interval { .. } => {
                let mut v: Vec<f64> = positives.iter().map(|&i| data.row(i)[j]).collect();
                v.sort_by(f64::total_cmp);
                Some(v)
            }
            Dim::Levels(_) => None,
        })
        .collect();
    let level_counts: Vec<Vec<usize>> = node
        .bx
        .dims()
        .iter()
        .enumerate()
        .map(|(j, d)| match d {
            Dim::Levels(set) => {
                let mut c = vec![0; set.universe()];
                for &i in &positives {
                    c[data.row(i)[j] as usize] += 1;
                }
                c
            }
            Dim::Interval { .. } => Vec::new(),
        })
        .collect();

    let mut best: Option<(usize, usize)> = None;
    for &i in node.rows.iter().filter(|&&i| !labels[i]) {
        let neg = data.row(i);
        let mut kept = 0;
        for j in 0..p {
            let k = match &sorted[j] {
                Some(vals) if neg[j] > x[j] => vals.partition_point(|&v| v < neg[j]),
                Some(vals) if neg[j] < x[j] => vals.len() - vals.partition_point(|&v| v <= neg[j]),
                Some(_) => continue,
                None => {
                    let level = neg[j] as usize;
                    if level == x[j] as usize {
                        continue;
                    }
                    positives.len() - level_counts[j][level]
                }
            };
            kept = kept.max(k);
        }
        if best.is_none_or(|(_, b)| kept > b) {
            best = Some((i, kept));
        }
    }
    best.map(|(i, _)| i)
        .expect("impure node has a negative row")
}

struct Queued {
    node: BnbNode,
    incumbent: bool,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        priority(&self.node, &other.node, self.incumbent)
    }
}

fn box_key(bx: &Hyperbox) -> Vec<u64> {
    let mut key = Vec::new();
    for d in bx.dims() {
        match d {
            Dim::Interval { lower, upper } => {
                key.push(lower.to_bits());
                key.push(upper.to_bits());
            }
            Dim::Levels(set) => {
                for start in (0..set.universe()).step_by(64) {
                    let end = (start + 64).min(set.universe());
                    key.push(
                        (start..end)
                            .filter(|&l| set.contains(l))
                            .fold(0u64, |w, l| w | 1 << (l - start)),
                    );
                }
            }
        }
    }
    key
}

/// Largest pure box around `x` with respect to the scored rows of `data`
/// that lie in `initial`.
pub fn maxbox_search(
    data: &Dataset,
    x: &[f64],
    region: &ClosenessRegion,
    initial: &Hyperbox,
    cfg: &MaxboxConfig,
) -> Result<IrdResult> {
    if !initial.contains(x)? {
        return Err(IrdError::precondition(
            "point of interest lies outside the initial box",
        ));
    }
    data.space().check_len(initial.len())?;
    let scores = data.require_scores()?;
    let labels: Vec<bool> = scores.iter().map(|&s| region.contains(s)).collect();
    let rows: Vec<usize> = (0..data.len())
        .filter(|&i| initial.covers(data.row(i)))
        .collect();
    let snaps = SnapGrid::new(data, &rows, x);

    let root = BnbNode::new(initial.clone(), 0, rows, &labels, 0);
    let mut result = IrdResult::new(initial.clone(), Method::MaxBox, 0);
    if root.is_pure() {
        return Ok(result);
    }

    let mut seq = 1;
    let mut heap = BinaryHeap::new();
    heap.push(Queued {
        node: root,
        incumbent: false,
    });
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    let mut best: Option<BnbNode> = None;
    let mut expansions = 0;

    while let Some(Queued { node, .. }) = heap.pop() {
        let best_cov = best.as_ref().map(|b| b.pos);
        if cfg.prune && best_cov.is_some_and(|b| upper_bound_coverage(&node) <= b) {
            continue;
        }
        if node.is_pure() {
            if best_cov.is_none_or(|b| node.pos > b) {
                let first = best.is_none();
                best = Some(node);
                let incumbent = best.as_ref().unwrap().pos;
                // switch to ratio ordering and drop hopeless nodes
                heap = heap
                    .into_iter()
                    .filter(|q| !cfg.prune || upper_bound_coverage(&q.node) > incumbent)
                    .map(|q| Queued {
                        node: q.node,
                        incumbent: true,
                    })
                    .collect();
                if first {
                    log::trace!("maxbox: first incumbent after {expansions} expansions");
                }
            }
            continue;
        }
        if expansions >= cfg.max_nodes {
            result.budget_exhausted = true;
            break;
        }
        expansions += 1;
        let neg = pick_negative(&node, x, data, &labels);
        for mut child in branch(&node, data.row(neg), x, &snaps, data, &labels) {
            if cfg.prune
                && best
                    .as_ref()
                    .is_some_and(|b| upper_bound_coverage(&child) <= b.pos)
            {
                continue;
            }
            if !seen.insert(box_key(&child.bx)) {
                continue;
            }
            child.seq = seq;
            seq += 1;
            heap.push(Queued {
                node: child,
                incumbent: best.is_some(),
            });
        }
    }

    result.iterations = expansions;
    match best {
        Some(node) => result.bbox = node.bx,
        None => {
            let space = data.space();
            let point = Hyperbox::point(space, x)?;
            result.pure = !data
                .rows()
                .iter()
                .zip(&labels)
                .any(|(r, &ok)| !ok && point.covers(r));
            result.bbox = point;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{coverage, precision};
    use crate::hyperbox::LevelSet;
    use crate::space::{Feature, FeatureDomain, FeatureSpace, Instance};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn y() -> ClosenessRegion {
        ClosenessRegion::new(0.5, 1.0).unwrap()
    }

    fn numeric_data(rows: &[Vec<f64>], labels: &[bool], max: f64) -> Dataset {
        let p = rows[0].len();
        let space = FeatureSpace::new(
            (0..p)
                .map(|j| Feature::new(format!("x{j}"), FeatureDomain::numeric(0.0, max)))
                .collect(),
        )
        .unwrap();
        let scores = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
        Dataset::with_scores(
            Arc::new(space),
            rows.iter().map(|r| Instance::new(r.clone())).collect(),
            scores,
        )
        .unwrap()
    }

    fn line_example() -> Dataset {
        let rows: Vec<Vec<f64>> = (1..=5).map(|v| vec![v as f64]).collect();
        numeric_data(&rows, &[false, true, true, true, false], 10.0)
    }

    #[test]
    fn one_dimensional_example() {
        let d = line_example();
        let init = Hyperbox::from_dims(vec![Dim::interval(1.0, 5.0)]);
        let r = maxbox_search(&d, &[3.0], &y(), &init, &MaxboxConfig::default()).unwrap();
        assert_eq!(r.bbox.dim(0), &Dim::interval(2.0, 4.0));
        assert_eq!(coverage(&r.bbox, &d).unwrap(), 0.6);
        assert_eq!(precision(&r.bbox, &d, &y()).unwrap(), 1.0);
    }

    #[test]
    fn pure_initial_is_returned() {
        let d = numeric_data(&[vec![1.0], vec![2.0]], &[true, true], 10.0);
        let init = Hyperbox::from_dims(vec![Dim::interval(0.0, 10.0)]);
        let r = maxbox_search(&d, &[1.5], &y(), &init, &MaxboxConfig::default()).unwrap();
        assert_eq!(r.bbox, init);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn surrounded_point_gets_the_smallest_snapped_box() {
        let d = numeric_data(&[vec![2.0], vec![4.0]], &[false, false], 10.0);
        let init = Hyperbox::from_dims(vec![Dim::interval(0.0, 10.0)]);
        let r = maxbox_search(&d, &[3.0], &y(), &init, &MaxboxConfig::default()).unwrap();
        assert_eq!(r.bbox.dim(0), &Dim::interval(3.0, 3.0));
        assert!(r.pure);
    }

    #[test]
    fn point_outside_initial_is_rejected() {
        let d = line_example();
        let init = Hyperbox::from_dims(vec![Dim::interval(1.0, 2.0)]);
        let err = maxbox_search(&d, &[3.0], &y(), &init, &MaxboxConfig::default()).unwrap_err();
        assert!(matches!(err, IrdError::Precondition(_)));
    }

    fn node_for(d: &Dataset, bx: Hyperbox) -> (BnbNode, Vec<bool>) {
        let labels: Vec<bool> = d
            .scores()
            .unwrap()
            .iter()
            .map(|&s| y().contains(s))
            .collect();
        let rows = (0..d.len()).filter(|&i| bx.covers(d.row(i))).collect();
        (BnbNode::new(bx, 0, rows, &labels, 0), labels)
    }

    #[test]
    fn branch_snaps_below_the_negative() {
        let d = line_example();
        let (node, labels) = node_for(&d, Hyperbox::from_dims(vec![Dim::interval(1.0, 5.0)]));
        let snaps = SnapGrid::new(&d, &node.rows, &[3.0]);
        let kids = branch(&node, &[5.0], &[3.0], &snaps, &d, &labels);
        assert_eq!(kids.len(), 1);
        assert_eq!(kids[0].bx.dim(0), &Dim::interval(1.0, 4.0));
        assert_eq!((kids[0].pos, kids[0].neg), (3, 1));
    }

    #[test]
    fn branch_in_two_dimensions() {
        let rows = vec![vec![1.0, 1.0], vec![4.0, 4.0], vec![2.0, 3.0]];
        let d = numeric_data(&rows, &[true, false, true], 10.0);
        let (node, labels) = node_for(&d, Hyperbox::from_dims(vec![Dim::interval(0.0, 10.0); 2]));
        let x = [2.0, 2.0];
        let snaps = SnapGrid::new(&d, &node.rows, &x);
        let kids = branch(&node, &[4.0, 4.0], &x, &snaps, &d, &labels);
        assert_eq!(kids.len(), 2);
        for k in &kids {
            assert!(!k.bx.covers(&[4.0, 4.0]));
            assert!(k.bx.covers(&x));
        }
        // the same point cannot be separated from itself
        assert!(branch(&node, &x, &x, &snaps, &d, &labels).is_empty());
    }

    #[test]
    fn branch_drops_categorical_levels() {
        let space = FeatureSpace::new(vec![Feature::new(
            "c",
            FeatureDomain::categorical(["a", "b", "c"]),
        )])
        .unwrap();
        let d = Dataset::with_scores(
            Arc::new(space),
            vec![Instance::new(vec![0.0]), Instance::new(vec![1.0])],
            vec![1.0, 0.0],
        )
        .unwrap();
        let (node, labels) = node_for(
            &d,
            Hyperbox::from_dims(vec![Dim::Levels(LevelSet::full(3))]),
        );
        let snaps = SnapGrid::new(&d, &node.rows, &[0.0]);
        let kids = branch(&node, &[1.0], &[0.0], &snaps, &d, &labels);
        assert_eq!(kids.len(), 1);
        assert_eq!(
            kids[0].bx.dim(0),
            &Dim::Levels(LevelSet::from_levels(3, [0, 2]))
        );
    }

    fn bare(depth: usize, pos: usize, neg: usize, seq: usize) -> BnbNode {
        BnbNode {
            bx: Hyperbox::from_dims(vec![]),
            depth,
            pos,
            neg,
            rows: vec![],
            seq,
        }
    }

    #[test]
    fn bound_is_the_positive_count() {
        assert_eq!(upper_bound_coverage(&bare(0, 7, 0, 0)), 7);
        assert_eq!(upper_bound_coverage(&bare(0, 7, 2, 0)), 7);
        assert_eq!(upper_bound_coverage(&bare(0, 0, 0, 0)), 0);
    }

    #[test]
    fn choose_best_rules() {
        let mut one = vec![bare(1, 1, 1, 0)];
        assert_eq!(choose_best(&mut one, false).unwrap().depth, 1);
        assert!(one.is_empty());
        assert!(choose_best(&mut one, false).is_err());

        let mut by_depth = vec![bare(2, 9, 1, 0), bare(5, 1, 1, 1)];
        assert_eq!(choose_best(&mut by_depth, false).unwrap().depth, 5);

        let mut by_ratio = vec![bare(9, 5, 2, 0), bare(0, 7, 1, 1)];
        assert_eq!(choose_best(&mut by_ratio, true).unwrap().pos, 7);

        let mut tie = vec![bare(3, 4, 1, 0), bare(3, 4, 1, 1)];
        assert_eq!(choose_best(&mut tie, false).unwrap().seq, 0);
    }

    fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>, Vec<f64>)> {
        (1usize..=2, 1usize..=10).prop_flat_map(|(p, n)| {
            (
                proptest::collection::vec(proptest::collection::vec(0u8..6, p), n),
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(0u8..6, p),
            )
                .prop_map(|(rows, labels, x)| {
                    (
                        rows.into_iter()
                            .map(|r| r.into_iter().map(f64::from).collect())
                            .collect(),
                        labels,
                        x.into_iter().map(f64::from).collect(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn pruning_never_changes_the_coverage((rows, labels, x) in instance()) {
            let d = numeric_data(&rows, &labels, 6.0);
            let init = Hyperbox::full(d.space());
            let pruned = maxbox_search(&d, &x, &y(), &init, &MaxboxConfig::default()).unwrap();
            let full = maxbox_search(&d, &x, &y(), &init, &MaxboxConfig { prune: false, ..Default::default() }).unwrap();
            prop_assert_eq!(coverage(&pruned.bbox, &d).unwrap(), coverage(&full.bbox, &d).unwrap());
        }

        #[test]
        fn result_is_pure_local_and_deterministic((rows, labels, x) in instance()) {
            let d = numeric_data(&rows, &labels, 6.0);
            let init = Hyperbox::full(d.space());
            let a = maxbox_search(&d, &x, &y(), &init, &MaxboxConfig::default()).unwrap();
            let b = maxbox_search(&d, &x, &y(), &init, &MaxboxConfig::default()).unwrap();
            prop_assert!(a.bbox.covers(&x));
            prop_assert!(a.bbox.is_subbox(&init).unwrap());
            // a negative row sitting on the point itself cannot be separated
            if !a.pure {
                prop_assert!(rows.iter().zip(&labels).any(|(r, &l)| !l && r == &x));
            } else {
                prop_assert_eq!(precision(&a.bbox, &d, &y()).unwrap(), 1.0);
            }
            prop_assert_eq!(a.bbox, b.bbox);
        }
    }
}
