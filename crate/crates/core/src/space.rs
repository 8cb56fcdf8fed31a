//! Feature space, instances and datasets.
//!
//! Every instance is stored as a dense `f64` vector aligned with the feature
//! order of its [`FeatureSpace`]. Numeric features hold their value directly;
//! categorical features hold the index of their level in
//! [`FeatureDomain::Categorical::levels`].

use std::collections::HashSet;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureDomain {
    Numeric {
        min: f64,
        max: f64,
        #[serde(default)]
        integer: bool,
    },
    /// `ordered` marks ordinal features; the level order is only consulted
    /// by the level-set path search.
    Categorical {
        levels: Vec<String>,
        #[serde(default)]
        ordered: bool,
    },
}

impl FeatureDomain {
    pub fn numeric(min: f64, max: f64) -> Self {
        FeatureDomain::Numeric {
            min,
            max,
            integer: false,
        }
    }

    pub fn integer(min: f64, max: f64) -> Self {
        FeatureDomain::Numeric {
            min,
            max,
            integer: true,
        }
    }

    pub fn categorical<S: Into<String>>(levels: impl IntoIterator<Item = S>) -> Self {
        FeatureDomain::Categorical {
            levels: levels.into_iter().map(Into::into).collect(),
            ordered: false,
        }
    }

    pub fn ordinal<S: Into<String>>(levels: impl IntoIterator<Item = S>) -> Self {
        FeatureDomain::Categorical {
            levels: levels.into_iter().map(Into::into).collect(),
            ordered: true,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, FeatureDomain::Numeric { .. })
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, FeatureDomain::Numeric { integer: true, .. })
    }

    /// Number of levels for categorical features, `None` for numeric ones.
    pub fn level_count(&self) -> Option<usize> {
        match self {
            FeatureDomain::Categorical { levels, .. } => Some(levels.len()),
            FeatureDomain::Numeric { .. } => None,
        }
    }

    /// Width of a numeric domain; 0 for categorical features.
    pub fn width(&self) -> f64 {
        match self {
            FeatureDomain::Numeric { min, max, .. } => max - min,
            FeatureDomain::Categorical { .. } => 0.0,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            FeatureDomain::Numeric { min, max, .. } => {
                if !min.is_finite() || !max.is_finite() {
                    return Err(IrdError::domain(format!(
                        "feature `{name}` has a non-finite range"
                    )));
                }
                if min > max {
                    return Err(IrdError::domain(format!(
                        "feature `{name}`: min {min} exceeds max {max}"
                    )));
                }
            }
            FeatureDomain::Categorical { levels, .. } => {
                if levels.is_empty() {
                    return Err(IrdError::domain(format!("feature `{name}` has no levels")));
                }
                let mut seen = HashSet::new();
                for level in levels {
                    if !seen.insert(level.as_str()) {
                        return Err(IrdError::domain(format!(
                            "feature `{name}` repeats level `{level}`"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that `value` is admissible: inside `[min, max]` (integral for
    /// integer features) or a valid level index.
    pub fn admits(&self, value: f64) -> bool {
        match self {
            FeatureDomain::Numeric { min, max, integer } => {
                value.is_finite()
                    && value >= *min
                    && value <= *max
                    && (!integer || value.fract() == 0.0)
            }
            FeatureDomain::Categorical { levels, .. } => {
                value >= 0.0 && value.fract() == 0.0 && (value as usize) < levels.len()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub name: String,
    pub domain: FeatureDomain,
}

impl Feature {
    pub fn new(name: impl Into<String>, domain: FeatureDomain) -> Self {
        Feature {
            name: name.into(),
            domain,
        }
    }
}

/// The universe of admissible instances: an ordered list of named features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Feature>", into = "Vec<Feature>")]
pub struct FeatureSpace {
    features: Vec<Feature>,
}

impl TryFrom<Vec<Feature>> for FeatureSpace {
    type Error = IrdError;

    fn try_from(features: Vec<Feature>) -> Result<Self> {
        FeatureSpace::new(features)
    }
}

impl From<FeatureSpace> for Vec<Feature> {
    fn from(space: FeatureSpace) -> Self {
        space.features
    }
}

impl FeatureSpace {
    pub fn new(features: Vec<Feature>) -> Result<Self> {
        let mut names = HashSet::new();
        for f in &features {
            f.domain.validate(&f.name)?;
            if !names.insert(f.name.as_str()) {
                return Err(IrdError::domain(format!(
                    "duplicate feature name `{}`",
                    f.name
                )));
            }
        }
        Ok(FeatureSpace { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> &Feature {
        &self.features[j]
    }

    pub fn domain(&self, j: usize) -> &FeatureDomain {
        &self.features[j].domain
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    /// Index of `level` within categorical feature `j`.
    pub fn level_index(&self, j: usize, level: &str) -> Result<usize> {
        match &self.features[j].domain {
            FeatureDomain::Categorical { levels, .. } => {
                levels.iter().position(|l| l == level).ok_or_else(|| {
                    IrdError::domain(format!(
                        "unknown level `{level}` for feature `{}`",
                        self.features[j].name
                    ))
                })
            }
            FeatureDomain::Numeric { .. } => Err(IrdError::domain(format!(
                "feature `{}` is numeric",
                self.features[j].name
            ))),
        }
    }

    /// Human-readable rendering of a single feature value.
    pub fn format_value(&self, j: usize, value: f64) -> String {
        match &self.features[j].domain {
            FeatureDomain::Categorical { levels, .. } => levels
                .get(value as usize)
                .cloned()
                .unwrap_or_else(|| format!("#{value}")),
            FeatureDomain::Numeric { .. } => format!("{value}"),
        }
    }

    pub fn check_len(&self, found: usize) -> Result<()> {
        if found != self.len() {
            return Err(IrdError::DimensionMismatch {
                expected: self.len(),
                found,
            });
        }
        Ok(())
    }

    /// Verifies that `values` is a valid instance of this space.
    pub fn validate_values(&self, values: &[f64]) -> Result<()> {
        self.check_len(values.len())?;
        for (j, (&v, f)) in values.iter().zip(&self.features).enumerate() {
            if !f.domain.admits(v) {
                return Err(IrdError::domain(format!(
                    "value {v} is not admissible for feature {j} (`{}`)",
                    f.name
                )));
            }
        }
        Ok(())
    }
}

/// One point of the feature space, aligned with its space's feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instance(Vec<f64>);

impl Instance {
    pub fn new(values: Vec<f64>) -> Self {
        Instance(values)
    }

    pub fn validated(space: &FeatureSpace, values: Vec<f64>) -> Result<Self> {
        space.validate_values(&values)?;
        Ok(Instance(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    /// Copy of `self` with feature `j` replaced by `value`.
    pub fn with(&self, j: usize, value: f64) -> Instance {
        let mut v = self.0.clone();
        v[j] = value;
        Instance(v)
    }
}

impl Deref for Instance {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Instance {
    fn from(v: Vec<f64>) -> Self {
        Instance(v)
    }
}

/// Rows of a feature space with an optional cache of prediction scores.
#[derive(Debug, Clone)]
pub struct Dataset {
    space: Arc<FeatureSpace>,
    rows: Vec<Instance>,
    scores: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(space: Arc<FeatureSpace>, rows: Vec<Instance>) -> Result<Self> {
        for row in &rows {
            space.validate_values(row)?;
        }
        Ok(Dataset {
            space,
            rows,
            scores: None,
        })
    }

    pub fn with_scores(
        space: Arc<FeatureSpace>,
        rows: Vec<Instance>,
        scores: Vec<f64>,
    ) -> Result<Self> {
        let mut data = Dataset::new(space, rows)?;
        data.set_scores(scores)?;
        Ok(data)
    }

    pub fn empty(space: Arc<FeatureSpace>) -> Self {
        Dataset {
            space,
            rows: Vec::new(),
            scores: None,
        }
    }

    pub fn space(&self) -> &FeatureSpace {
        &self.space
    }

    pub fn space_arc(&self) -> &Arc<FeatureSpace> {
        &self.space
    }

    pub fn rows(&self) -> &[Instance] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Instance {
        &self.rows[i]
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    /// Cached scores, or a precondition error when they have not been set.
    pub fn require_scores(&self) -> Result<&[f64]> {
        self.scores
            .as_deref()
            .ok_or_else(|| IrdError::precondition("dataset has no cached prediction scores"))
    }

    pub fn set_scores(&mut self, scores: Vec<f64>) -> Result<()> {
        if scores.len() != self.rows.len() {
            return Err(IrdError::precondition(format!(
                "{} scores for {} rows",
                scores.len(),
                self.rows.len()
            )));
        }
        self.scores = Some(scores);
        Ok(())
    }

    pub fn clear_scores(&mut self) {
        self.scores = None;
    }

    /// Rows at `indices`, with scores filtered in lockstep.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            space: Arc::clone(&self.space),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            scores: self
                .scores
                .as_ref()
                .map(|s| indices.iter().map(|&i| s[i]).collect()),
        }
    }

    /// Smallest and largest observed value of numeric feature `j`.
    pub fn observed_range(&self, j: usize) -> Option<(f64, f64)> {
        self.rows
            .iter()
            .map(|r| r[j])
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}
