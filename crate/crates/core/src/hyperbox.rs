//! Axis-aligned hyperboxes over a [`FeatureSpace`].
//!
//! Numeric dimensions are closed intervals `[lower, upper]`; categorical
//! dimensions are non-empty subsets of the feature's levels.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::space::{FeatureDomain, FeatureSpace};

/// Subset of a categorical feature's levels, stored as a membership mask
/// indexed by level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelSet {
    mask: Vec<bool>,
}

impl LevelSet {
    pub fn full(level_count: usize) -> Self {
        LevelSet {
            mask: vec![true; level_count],
        }
    }

    pub fn single(level_count: usize, level: usize) -> Self {
        let mut mask = vec![false; level_count];
        mask[level] = true;
        LevelSet { mask }
    }

    pub fn from_levels(level_count: usize, levels: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; level_count];
        for l in levels {
            mask[l] = true;
        }
        LevelSet { mask }
    }

    pub fn contains(&self, level: usize) -> bool {
        self.mask.get(level).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    /// Number of levels of the underlying feature.
    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    pub fn insert(&mut self, level: usize) {
        self.mask[level] = true;
    }

    pub fn remove(&mut self, level: usize) {
        self.mask[level] = false;
    }

    pub fn is_subset(&self, other: &LevelSet) -> bool {
        self.mask.len() == other.mask.len()
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dim {
    Interval { lower: f64, upper: f64 },
    Levels(LevelSet),
}

impl Dim {
    pub fn interval(lower: f64, upper: f64) -> Self {
        Dim::Interval { lower, upper }
    }

    pub fn contains(&self, value: f64) -> bool {
        match self {
            Dim::Interval { lower, upper } => *lower <= value && value <= *upper,
            Dim::Levels(set) => value >= 0.0 && set.contains(value as usize),
        }
    }

    pub fn is_subset(&self, other: &Dim) -> bool {
        match (self, other) {
            (
                Dim::Interval { lower, upper },
                Dim::Interval {
                    lower: ol,
                    upper: ou,
                },
            ) => ol <= lower && upper <= ou,
            (Dim::Levels(a), Dim::Levels(b)) => a.is_subset(b),
            _ => false,
        }
    }

    /// True for a point interval or a single level.
    pub fn is_degenerate(&self) -> bool {
        match self {
            Dim::Interval { lower, upper } => lower == upper,
            Dim::Levels(set) => set.len() == 1,
        }
    }

    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Dim::Interval { lower, upper } => Some((*lower, *upper)),
            Dim::Levels(_) => None,
        }
    }

    pub fn levels(&self) -> Option<&LevelSet> {
        match self {
            Dim::Levels(set) => Some(set),
            Dim::Interval { .. } => None,
        }
    }
}

/// Which side of a dimension [`Hyperbox::shrink`] / [`Hyperbox::extend`] moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Lower(f64),
    Upper(f64),
    /// A level to remove (shrink) or add (extend).
    Level(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Hyperbox {
    dims: Vec<Dim>,
}

impl Hyperbox {
    /// Builds a box from raw dimensions without checking them against a space;
    /// see [`Hyperbox::validate`].
    pub fn from_dims(dims: Vec<Dim>) -> Self {
        Hyperbox { dims }
    }

    /// The whole feature space.
    pub fn full(space: &FeatureSpace) -> Self {
        let dims = space
            .features()
            .iter()
            .map(|f| match &f.domain {
                FeatureDomain::Numeric { min, max, .. } => Dim::interval(*min, *max),
                FeatureDomain::Categorical { levels, .. } => {
                    Dim::Levels(LevelSet::full(levels.len()))
                }
            })
            .collect();
        Hyperbox { dims }
    }

    /// The degenerate box containing only `x`.
    pub fn point(space: &FeatureSpace, x: &[f64]) -> Result<Self> {
        space.check_len(x.len())?;
        let dims = space
            .features()
            .iter()
            .zip(x)
            .map(|(f, &v)| match &f.domain {
                FeatureDomain::Numeric { .. } => Dim::interval(v, v),
                FeatureDomain::Categorical { levels, .. } => {
                    Dim::Levels(LevelSet::single(levels.len(), v as usize))
                }
            })
            .collect();
        Ok(Hyperbox { dims })
    }

    /// Checks the box invariants against `space`.
    pub fn validate(&self, space: &FeatureSpace) -> Result<()> {
        space.check_len(self.dims.len())?;
        for (j, (dim, f)) in self.dims.iter().zip(space.features()).enumerate() {
            match (dim, &f.domain) {
                (Dim::Interval { lower, upper }, FeatureDomain::Numeric { min, max, .. }) => {
                    if !(lower <= upper) {
                        return Err(IrdError::domain(format!(
                            "dim {j}: inverted interval [{lower}, {upper}]"
                        )));
                    }
                    if lower < min || upper > max {
                        return Err(IrdError::domain(format!(
                            "dim {j}: [{lower}, {upper}] exceeds domain [{min}, {max}]"
                        )));
                    }
                }
                (Dim::Levels(set), FeatureDomain::Categorical { levels, .. }) => {
                    if set.universe() != levels.len() || set.is_empty() {
                        return Err(IrdError::domain(format!("dim {j}: invalid level set")));
                    }
                }
                _ => {
                    return Err(IrdError::domain(format!(
                        "dim {j}: kind does not match feature `{}`",
                        f.name
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> &[Dim] {
        &self.dims
    }

    pub fn dim(&self, j: usize) -> &Dim {
        &self.dims[j]
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Closed-interval membership test.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dims.len() {
            return Err(IrdError::DimensionMismatch {
                expected: self.dims.len(),
                found: x.len(),
            });
        }
        Ok(self.covers(x))
    }

    /// Unchecked variant of [`Hyperbox::contains`] for hot loops; `x` must have
    /// one value per dimension.
    #[inline]
    pub fn covers(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), self.dims.len());
        self.dims.iter().zip(x).all(|(d, &v)| d.contains(v))
    }

    /// Whether every dimension of `self` lies inside the matching dimension of
    /// `outer`.
    pub fn is_subbox(&self, outer: &Hyperbox) -> Result<bool> {
        if self.dims.len() != outer.dims.len() {
            return Err(IrdError::DimensionMismatch {
                expected: outer.dims.len(),
                found: self.dims.len(),
            });
        }
        Ok(self
            .dims
            .iter()
            .zip(&outer.dims)
            .all(|(a, b)| a.is_subset(b)))
    }

    /// Product over dimensions of the box's share of the feature domain.
    /// Numeric features with a zero-width domain contribute a factor of 1.
    pub fn relative_size(&self, space: &FeatureSpace) -> f64 {
        self.dims
            .iter()
            .zip(space.features())
            .map(|(dim, f)| match (dim, &f.domain) {
                (Dim::Interval { lower, upper }, FeatureDomain::Numeric { min, max, .. }) => {
                    let width = max - min;
                    if width > 0.0 {
                        ((upper - lower) / width).clamp(0.0, 1.0)
                    } else {
                        1.0
                    }
                }
                (Dim::Levels(set), FeatureDomain::Categorical { levels, .. }) => {
                    set.len() as f64 / levels.len() as f64
                }
                _ => 0.0,
            })
            .product()
    }

    /// Copy of the box with dimension `j` replaced.
    pub fn with_dim(&self, j: usize, dim: Dim) -> Hyperbox {
        let mut dims = self.dims.clone();
        dims[j] = dim;
        Hyperbox { dims }
    }

    pub(crate) fn set_dim(&mut self, j: usize, dim: Dim) {
        self.dims[j] = dim;
    }

    /// Moves one side of dimension `j` inward (or removes a level), yielding a
    /// subbox.
    pub fn shrink(&self, j: usize, bound: Bound) -> Result<Hyperbox> {
        let dim = self.dim_checked(j)?;
        let new = match (dim, bound) {
            (Dim::Interval { lower, upper }, Bound::Lower(v)) => {
                if !(v >= *lower && v <= *upper) {
                    return Err(IrdError::domain(format!(
                        "cannot shrink lower bound of [{lower}, {upper}] to {v}"
                    )));
                }
                Dim::interval(v, *upper)
            }
            (Dim::Interval { lower, upper }, Bound::Upper(v)) => {
                if !(v <= *upper && v >= *lower) {
                    return Err(IrdError::domain(format!(
                        "cannot shrink upper bound of [{lower}, {upper}] to {v}"
                    )));
                }
                Dim::interval(*lower, v)
            }
            (Dim::Levels(set), Bound::Level(l)) => {
                if l >= set.universe() {
                    return Err(IrdError::domain(format!("level {l} out of range")));
                }
                let mut set = set.clone();
                set.remove(l);
                if set.is_empty() {
                    return Err(IrdError::domain(format!(
                        "removing level {l} would empty dimension {j}"
                    )));
                }
                Dim::Levels(set)
            }
            _ => {
                return Err(IrdError::domain(format!(
                    "bound kind does not match dim {j}"
                )))
            }
        };
        Ok(self.with_dim(j, new))
    }

    /// Moves one side of dimension `j` outward (or adds a level), yielding a
    /// superbox. Domain limits are not checked here.
    pub fn extend(&self, j: usize, bound: Bound) -> Result<Hyperbox> {
        let dim = self.dim_checked(j)?;
        let new = match (dim, bound) {
            (Dim::Interval { lower, upper }, Bound::Lower(v)) => {
                if !(v <= *lower) {
                    return Err(IrdError::domain(format!(
                        "cannot extend lower bound of [{lower}, {upper}] to {v}"
                    )));
                }
                Dim::interval(v, *upper)
            }
            (Dim::Interval { lower, upper }, Bound::Upper(v)) => {
                if !(v >= *upper) {
                    return Err(IrdError::domain(format!(
                        "cannot extend upper bound of [{lower}, {upper}] to {v}"
                    )));
                }
                Dim::interval(*lower, v)
            }
            (Dim::Levels(set), Bound::Level(l)) => {
                if l >= set.universe() {
                    return Err(IrdError::domain(format!("level {l} out of range")));
                }
                let mut set = set.clone();
                set.insert(l);
                Dim::Levels(set)
            }
            _ => {
                return Err(IrdError::domain(format!(
                    "bound kind does not match dim {j}"
                )))
            }
        };
        Ok(self.with_dim(j, new))
    }

    fn dim_checked(&self, j: usize) -> Result<&Dim> {
        self.dims.get(j).ok_or(IrdError::DimensionMismatch {
            expected: self.dims.len(),
            found: j + 1,
        })
    }

    /// Renders the box with feature names and level labels.
    pub fn display<'a>(&'a self, space: &'a FeatureSpace) -> BoxDisplay<'a> {
        BoxDisplay { bx: self, space }
    }
}

pub struct BoxDisplay<'a> {
    bx: &'a Hyperbox,
    space: &'a FeatureSpace,
}

impl fmt::Display for BoxDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, dim) in self.bx.dims.iter().enumerate() {
            if j > 0 {
                write!(f, " x ")?;
            }
            write!(
                f,
                "{}: {}",
                self.space.feature(j).name,
                format_dim(self.space, j, dim)
            )?;
        }
        Ok(())
    }
}

/// `[l, u]` for intervals, `{a, b}` for level sets.
pub fn format_dim(space: &FeatureSpace, j: usize, dim: &Dim) -> String {
    match dim {
        Dim::Interval { lower, upper } => format!("[{lower}, {upper}]"),
        Dim::Levels(set) => {
            let names: Vec<String> = set
                .iter()
                .map(|l| space.format_value(j, l as f64))
                .collect();
            format!("{{{}}}", names.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::Feature;
    use proptest::prelude::*;

    fn space() -> FeatureSpace {
        FeatureSpace::new(vec![
            Feature::new("x", FeatureDomain::numeric(0.0, 1.0)),
            Feature::new("c", FeatureDomain::categorical(["a", "b"])),
        ])
        .unwrap()
    }

    fn bx(lo: f64, hi: f64, levels: &[usize]) -> Hyperbox {
        Hyperbox::from_dims(vec![
            Dim::interval(lo, hi),
            Dim::Levels(LevelSet::from_levels(2, levels.iter().copied())),
        ])
    }

    #[test]
    fn contains_examples() {
        assert!(bx(0.0, 1.0, &[0, 1]).contains(&[0.5, 0.0]).unwrap());
        assert!(bx(0.0, 1.0, &[0, 1]).contains(&[1.0, 1.0]).unwrap());
        assert!(!bx(0.0, 1.0, &[0]).contains(&[0.5, 1.0]).unwrap());
        assert!(matches!(
            bx(0.0, 1.0, &[0]).contains(&[0.5]),
            Err(IrdError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn subbox_examples() {
        assert!(bx(0.2, 0.8, &[0])
            .is_subbox(&bx(0.0, 1.0, &[0, 1]))
            .unwrap());
        assert!(!bx(0.0, 1.0, &[0])
            .is_subbox(&bx(0.2, 0.8, &[0, 1]))
            .unwrap());
        assert!(!bx(0.2, 0.8, &[0, 1])
            .is_subbox(&bx(0.0, 1.0, &[1]))
            .unwrap());
    }

    #[test]
    fn relative_size_examples() {
        let s = space();
        assert_eq!(Hyperbox::full(&s).relative_size(&s), 1.0);
        assert_eq!(bx(0.0, 0.5, &[0]).relative_size(&s), 0.25);
        assert_eq!(bx(0.3, 0.3, &[0, 1]).relative_size(&s), 0.0);

        let flat =
            FeatureSpace::new(vec![Feature::new("z", FeatureDomain::numeric(2.0, 2.0))]).unwrap();
        assert_eq!(Hyperbox::full(&flat).relative_size(&flat), 1.0);
    }

    #[test]
    fn shrink_extend_examples() {
        let b = bx(0.0, 1.0, &[0]);
        assert_eq!(
            b.shrink(0, Bound::Upper(0.7)).unwrap().dim(0),
            &Dim::interval(0.0, 0.7)
        );
        assert_eq!(
            b.extend(1, Bound::Level(1)).unwrap().dim(1),
            &Dim::Levels(LevelSet::full(2))
        );
        assert!(matches!(
            b.shrink(0, Bound::Lower(1.5)),
            Err(IrdError::Domain(_))
        ));
        assert!(b.shrink(1, Bound::Level(0)).is_err());
        assert!(b.extend(0, Bound::Upper(0.5)).is_err());
        assert!(b.shrink(0, Bound::Level(0)).is_err());
    }

    #[test]
    fn point_box_is_degenerate_and_valid() {
        let s = space();
        let p = Hyperbox::point(&s, &[0.4, 1.0]).unwrap();
        p.validate(&s).unwrap();
        assert!(p.dims().iter().all(Dim::is_degenerate));
        assert!(p.covers(&[0.4, 1.0]));
        assert!(!p.covers(&[0.41, 1.0]));
    }

    #[test]
    fn validate_rejects_out_of_domain() {
        let s = space();
        assert!(bx(-0.1, 0.5, &[0]).validate(&s).is_err());
        assert!(bx(0.6, 0.5, &[0]).validate(&s).is_err());
        assert!(Hyperbox::from_dims(vec![Dim::interval(0.0, 1.0)])
            .validate(&s)
            .is_err());
    }

    fn arb_box() -> impl Strategy<Value = Hyperbox> {
        (0.0..1.0f64, 0.0..1.0f64, 1usize..4).prop_map(|(a, b, mask)| {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let levels: Vec<usize> = (0..2).filter(|l| mask & (1 << l) != 0).collect();
            bx(lo, hi, &levels)
        })
    }

    proptest! {
        #[test]
        fn contains_is_monotone(a in arb_box(), b in arb_box(), x in 0.0..1.0f64, c in 0usize..2) {
            let p = [x, c as f64];
            if a.is_subbox(&b).unwrap() && a.contains(&p).unwrap() {
                prop_assert!(b.contains(&p).unwrap());
            }
        }

        #[test]
        fn shrink_then_extend_round_trips(b in arb_box(), t in 0.0..1.0f64) {
            let (lo, hi) = b.dim(0).bounds().unwrap();
            let v = lo + t * (hi - lo);
            let back = b.shrink(0, Bound::Upper(v)).unwrap().extend(0, Bound::Upper(hi)).unwrap();
            prop_assert_eq!(&back, &b);
            let back = b.shrink(0, Bound::Lower(v)).unwrap().extend(0, Bound::Lower(lo)).unwrap();
            prop_assert_eq!(back, b);
        }

        #[test]
        fn relative_size_is_monotone(a in arb_box(), b in arb_box()) {
            let s = space();
            let (sa, sb) = (a.relative_size(&s), b.relative_size(&s));
            prop_assert!((0.0..=1.0).contains(&sa));
            if a.is_subbox(&b).unwrap() {
                prop_assert!(sa <= sb);
            }
        }
    }
}
