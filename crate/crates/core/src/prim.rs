//! Peeling and pasting search: quantile peels until the box is pure on the
//! working data, then pure pastes that add the most rows.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::{Dim, Hyperbox};
use crate::region::ClosenessRegion;
use crate::result::{IrdResult, Method};
use crate::space::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PrimConfig {
    /// Share of in-box rows removed per peel and added per paste.
    pub alpha: f64,
    /// Seed for breaking ties between equally good candidates.
    pub seed: u64,
}

impl Default for PrimConfig {
    fn default() -> Self {
        PrimConfig {
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl PrimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(IrdError::Config(format!(
                "alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

fn quantile_rank(alpha: f64, m: usize) -> usize {
    ((alpha * m as f64).ceil() as usize).clamp(1, m)
}

fn next_above(values: &[f64], v: f64) -> Option<f64> {
    values
        .iter()
        .copied()
        .filter(|&w| w > v)
        .min_by(f64::total_cmp)
}

fn next_below(values: &[f64], v: f64) -> Option<f64> {
    values
        .iter()
        .copied()
        .filter(|&w| w < v)
        .max_by(f64::total_cmp)
}

/// Boxes obtained by one peel of `bx`: per numeric dimension the lower and
/// upper quantile slab of the covered rows (clamped so `x` stays inside),
/// per categorical dimension the removal of each level other than `x`'s.
/// Peels that remove no covered row are left out.
pub fn peel_candidates(bx: &Hyperbox, data: &Dataset, x: &[f64], alpha: f64) -> Vec<Hyperbox> {
    let rows: Vec<&[f64]> = data
        .rows()
        .iter()
        .map(|r| r.values())
        .filter(|r| bx.covers(r))
        .collect();
    let m = rows.len();
    let mut out = Vec::new();
    if m == 0 {
        return out;
    }
    let k = quantile_rank(alpha, m);
    for (j, dim) in bx.dims().iter().enumerate() {
        match dim {
            Dim::Interval { lower, upper } => {
                let mut vals: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                vals.sort_by(f64::total_cmp);
                let snaps: Vec<f64> = vals.iter().copied().chain([x[j]]).collect();

                let q = vals[k - 1];
                let (new_lower, removes) = if q < x[j] {
                    (
                        next_above(&snaps, q).unwrap_or(x[j]),
                        vals.iter().filter(|&&v| v <= q).count(),
                    )
                } else {
                    (x[j], vals.iter().filter(|&&v| v < x[j]).count())
                };
                if removes > 0 {
                    out.push(bx.with_dim(j, Dim::interval(new_lower, *upper)));
                }

                let q = vals[m - k];
                let (new_upper, removes) = if q > x[j] {
                    (
                        next_below(&snaps, q).unwrap_or(x[j]),
                        vals.iter().filter(|&&v| v >= q).count(),
                    )
                } else {
                    (x[j], vals.iter().filter(|&&v| v > x[j]).count())
                };
                if removes > 0 {
                    out.push(bx.with_dim(j, Dim::interval(*lower, new_upper)));
                }
            }
            Dim::Levels(set) => {
                let own = x[j] as usize;
                for level in set.iter().filter(|&l| l != own) {
                    if rows.iter().any(|r| r[j] as usize == level) {
                        let mut s = set.clone();
                        s.remove(level);
                        out.push(bx.with_dim(j, Dim::Levels(s)));
                    }
                }
            }
        }
    }
    out
}

/// Boxes obtained by one pure paste onto `bx`, staying inside `within`: per
/// numeric side, the slab reaching the `⌈α·m⌉`-th nearest outside value (or
/// the farthest one) among rows that match the box on every other dimension;
/// per categorical dimension each level of `within` absent from the box.
/// Only candidates with precision 1 on the rows of `within` are kept.
pub fn paste_candidates(
    bx: &Hyperbox,
    within: &Hyperbox,
    data: &Dataset,
    x: &[f64],
    region: &ClosenessRegion,
    alpha: f64,
) -> Result<Vec<Hyperbox>> {
    let scores = data.require_scores()?;
    let rows: Vec<(&[f64], bool)> = data
        .rows()
        .iter()
        .zip(scores)
        .filter(|(r, _)| within.covers(r))
        .map(|(r, &s)| (r.values(), region.contains(s)))
        .collect();
    let inside = rows.iter().filter(|(r, _)| bx.covers(r)).count();
    let number_added = ((alpha * inside as f64).ceil() as usize).max(1);
    let pure = |cand: &Hyperbox| rows.iter().all(|(r, ok)| *ok || !cand.covers(r));

    let mut out = Vec::new();
    for (j, dim) in bx.dims().iter().enumerate() {
        match dim {
            Dim::Interval { lower, upper } => {
                let others = |r: &[f64]| {
                    bx.dims()
                        .iter()
                        .enumerate()
                        .all(|(k, d)| k == j || d.contains(r[k]))
                };
                let mut below: Vec<f64> = rows
                    .iter()
                    .map(|(r, _)| *r)
                    .filter(|r| r[j] < *lower && others(r))
                    .map(|r| r[j])
                    .collect();
                below.sort_by(|a, b| b.total_cmp(a));
                below.dedup();
                if !below.is_empty() {
                    let v = below[(number_added - 1).min(below.len() - 1)];
                    out.push(bx.with_dim(j, Dim::interval(v, *upper)));
                }
                let mut above: Vec<f64> = rows
                    .iter()
                    .map(|(r, _)| *r)
                    .filter(|r| r[j] > *upper && others(r))
                    .map(|r| r[j])
                    .collect();
                above.sort_by(f64::total_cmp);
                above.dedup();
                if !above.is_empty() {
                    let v = above[(number_added - 1).min(above.len() - 1)];
                    out.push(bx.with_dim(j, Dim::interval(*lower, v)));
                }
            }
            Dim::Levels(set) => {
                let Some(allowed) = within.dim(j).levels() else {
                    continue;
                };
                for level in allowed.iter().filter(|&l| !set.contains(l)) {
                    let mut s = set.clone();
                    s.insert(level);
                    out.push(bx.with_dim(j, Dim::Levels(s)));
                }
            }
        }
    }
    debug_assert!(bx.covers(x));
    out.retain(|c| pure(c));
    Ok(out)
}

/// `(in-region, total)` counts of covered rows.
fn counts(bx: &Hyperbox, data: &Dataset, labels: &[bool]) -> (usize, usize) {
    data.rows()
        .iter()
        .zip(labels)
        .filter(|(r, _)| bx.covers(r))
        .fold((0, 0), |(p, t), (_, &ok)| (p + ok as usize, t + 1))
}

/// Compares `p1/t1` with `p2/t2`, an empty box counting as precision 1.
fn cmp_precision((p1, t1): (usize, usize), (p2, t2): (usize, usize)) -> Ordering {
    let (p1, t1) = if t1 == 0 { (1, 1) } else { (p1, t1) };
    let (p2, t2) = if t2 == 0 { (1, 1) } else { (p2, t2) };
    (p1 * t2).cmp(&(p2 * t1))
}

/// Indices of the maximal elements under `cmp`.
fn argmax_all<T>(items: &[T], cmp: impl Fn(&T, &T) -> Ordering) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        match best.first().map(|&b| cmp(item, &items[b])) {
            None | Some(Ordering::Greater) => best = vec![i],
            Some(Ordering::Equal) => best.push(i),
            Some(Ordering::Less) => {}
        }
    }
    best
}

pub fn prim_search(
    data: &Dataset,
    x: &[f64],
    region: &ClosenessRegion,
    initial: &Hyperbox,
    cfg: &PrimConfig,
) -> Result<IrdResult> {
    cfg.validate()?;
    if !initial.contains(x)? {
        return Err(IrdError::precondition(
            "point of interest lies outside the initial box",
        ));
    }
    data.space().check_len(initial.len())?;
    let labels: Vec<bool> = data
        .require_scores()?
        .iter()
        .map(|&s| region.contains(s))
        .collect();
    let keep: Vec<usize> = (0..data.len())
        .filter(|&i| initial.covers(data.row(i)))
        .collect();
    let data = data.subset(&keep);
    let labels: Vec<bool> = keep.iter().map(|&i| labels[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut result = IrdResult::new(initial.clone(), Method::Prim, cfg.seed);
    let mut bx = initial.clone();
    let mut iterations = 0;

    loop {
        let (pos, total) = counts(&bx, &data, &labels);
        if pos == total {
            break;
        }
        let cands = peel_candidates(&bx, &data, x, cfg.alpha);
        if cands.is_empty() {
            result.pure = false;
            break;
        }
        let scored: Vec<(usize, usize)> = cands.iter().map(|c| counts(c, &data, &labels)).collect();
        let best = argmax_all(&scored, |a, b| cmp_precision(*a, *b).then(a.1.cmp(&b.1)));
        let pick = best[rng.gen_range(0..best.len())];
        bx = cands[pick].clone();
        iterations += 1;
    }

    if result.pure {
        loop {
            let cands = paste_candidates(&bx, initial, &data, x, region, cfg.alpha)?;
            if cands.is_empty() {
                break;
            }
            let cover: Vec<usize> = cands.iter().map(|c| counts(c, &data, &labels).1).collect();
            let best = argmax_all(&cover, |a, b| a.cmp(b));
            let pick = best[rng.gen_range(0..best.len())];
            bx = cands[pick].clone();
            iterations += 1;
        }
    }

    result.bbox = bx;
    result.iterations = iterations;
    Ok(result)
}
