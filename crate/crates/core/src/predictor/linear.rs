//! Linear and logistic regression with one-hot encoded categoricals.

use nalgebra::{DMatrix, DVector};

use crate::error::{IrdError, Result};
use crate::space::{Dataset, FeatureDomain, FeatureSpace};

use super::Predictor;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    Numeric {
        col: usize,
    },
    /// Levels `1..levels` occupy `first..first + levels - 1`; level 0 is the
    /// reference.
    OneHot {
        first: usize,
    },
}

#[derive(Debug, Clone)]
pub struct LinearModel {
    layout: Vec<Column>,
    intercept: f64,
    coefficients: Vec<f64>,
    logistic: bool,
}

fn layout(space: &FeatureSpace) -> (Vec<Column>, usize) {
    let mut width = 0;
    let cols = space
        .features()
        .iter()
        .map(|f| match &f.domain {
            FeatureDomain::Numeric { .. } => {
                width += 1;
                Column::Numeric { col: width - 1 }
            }
            FeatureDomain::Categorical { levels, .. } => {
                let first = width;
                width += levels.len() - 1;
                Column::OneHot { first }
            }
        })
        .collect();
    (cols, width)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl LinearModel {
    /// `coefficients` has one entry per encoded column: one per numeric
    /// feature and `levels - 1` per categorical feature, in feature order.
    pub fn new(
        space: &FeatureSpace,
        intercept: f64,
        coefficients: Vec<f64>,
        logistic: bool,
    ) -> Result<Self> {
        let (layout, width) = layout(space);
        if coefficients.len() != width {
            return Err(IrdError::DimensionMismatch {
                expected: width,
                found: coefficients.len(),
            });
        }
        Ok(LinearModel {
            layout,
            intercept,
            coefficients,
            logistic,
        })
    }

    pub fn encoded_width(space: &FeatureSpace) -> usize {
        layout(space).1
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn is_logistic(&self) -> bool {
        self.logistic
    }

    pub fn linear_predictor(&self, x: &[f64]) -> f64 {
        let mut z = self.intercept;
        for (col, &v) in self.layout.iter().zip(x) {
            match *col {
                Column::Numeric { col } => z += self.coefficients[col] * v,
                Column::OneHot { first } => {
                    let level = v as usize;
                    if level > 0 {
                        z += self.coefficients[first + level - 1];
                    }
                }
            }
        }
        z
    }
}

impl Predictor for LinearModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.layout.len() {
            return Err(IrdError::DimensionMismatch {
                expected: self.layout.len(),
                found: x.len(),
            });
        }
        let z = self.linear_predictor(x);
        super::check_score(if self.logistic { sigmoid(z) } else { z })
    }
}

fn design(data: &Dataset) -> (DMatrix<f64>, Vec<Column>) {
    let (cols, width) = layout(data.space());
    let mut x = DMatrix::zeros(data.len(), width + 1);
    for (i, row) in data.rows().iter().enumerate() {
        x[(i, 0)] = 1.0;
        for (col, &v) in cols.iter().zip(row.iter()) {
            match *col {
                Column::Numeric { col } => x[(i, col + 1)] = v,
                Column::OneHot { first } => {
                    let level = v as usize;
                    if level > 0 {
                        x[(i, first + level)] = 1.0;
                    }
                }
            }
        }
    }
    (x, cols)
}

/// Solves `(XᵀWX + λD) β = rhs` where `D` leaves the intercept unpenalized.
fn solve_penalized(xtwx: DMatrix<f64>, rhs: DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let mut a = xtwx;
    for k in 1..a.nrows() {
        a[(k, k)] += ridge;
    }
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    a.svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|e| IrdError::Predictor(format!("linear solve failed: {e}")))
}

fn check_target(data: &Dataset, target: &[f64]) -> Result<()> {
    if target.len() != data.len() || data.is_empty() {
        return Err(IrdError::precondition(format!(
            "{} targets for {} rows",
            target.len(),
            data.len()
        )));
    }
    Ok(())
}

const RIDGE: f64 = 1e-6;

/// Ordinary least squares (with a negligible ridge for rank deficiency).
pub fn train_linear(data: &Dataset, target: &[f64]) -> Result<LinearModel> {
    check_target(data, target)?;
    let (x, layout) = design(data);
    let y = DVector::from_column_slice(target);
    let beta = solve_penalized(x.transpose() * &x, x.transpose() * y, RIDGE)?;
    Ok(LinearModel {
        layout,
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        logistic: false,
    })
}

/// Logistic regression fitted by iteratively reweighted least squares.
/// `target` must be 0/1.
pub fn train_logistic(data: &Dataset, target: &[f64]) -> Result<LinearModel> {
    check_target(data, target)?;
    if target.iter().any(|&t| t != 0.0 && t != 1.0) {
        return Err(IrdError::precondition(
            "logistic regression needs 0/1 targets",
        ));
    }
    let (x, layout) = design(data);
    let y = DVector::from_column_slice(target);
    let mut beta = DVector::zeros(x.ncols());
    for _ in 0..100 {
        let eta = &x * &beta;
        let p = eta.map(sigmoid);
        let w = p.map(|pi| (pi * (1.0 - pi)).max(1e-10));
        let mut xtw = x.transpose();
        for (i, wi) in w.iter().enumerate() {
            xtw.column_mut(i).scale_mut(*wi);
        }
        let hessian = &xtw * &x;
        // Newton step expressed as a weighted least squares update
        let grad = x.transpose() * (&y - &p) - {
            let mut pen = beta.clone() * RIDGE;
            pen[0] = 0.0;
            pen
        };
        let step = solve_penalized(hessian, grad, RIDGE)?;
        beta += &step;
        if step.amax() < 1e-10 {
            break;
        }
    }
    Ok(LinearModel {
        layout,
        intercept: beta[0],
        coefficients: beta.iter().skip(1).copied().collect(),
        logistic: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Feature, Instance};
    use std::sync::Arc;

    fn space() -> FeatureSpace {
        FeatureSpace::new(vec![
            Feature::new("x", FeatureDomain::numeric(0.0, 1.0)),
            Feature::new("c", FeatureDomain::categorical(["a", "b", "c"])),
        ])
        .unwrap()
    }

    #[test]
    fn scores_the_linear_predictor() {
        let s = FeatureSpace::new(vec![
            Feature::new("x", FeatureDomain::numeric(0.0, 1.0)),
            Feature::new("y", FeatureDomain::numeric(0.0, 1.0)),
        ])
        .unwrap();
        let m = LinearModel::new(&s, 0.0, vec![1.0, 0.0], false).unwrap();
        assert_eq!(m.score(&[0.3, 0.9]).unwrap(), 0.3);
    }

    #[test]
    fn zero_logistic_is_one_half() {
        let m = LinearModel::new(&space(), 0.0, vec![0.0; 3], true).unwrap();
        assert_eq!(m.score(&[0.7, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn one_hot_uses_first_level_as_reference() {
        let m = LinearModel::new(&space(), 1.0, vec![0.0, 2.0, 3.0], false).unwrap();
        assert_eq!(m.score(&[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(m.score(&[0.0, 1.0]).unwrap(), 3.0);
        assert_eq!(m.score(&[0.0, 2.0]).unwrap(), 4.0);
        assert!(LinearModel::new(&space(), 0.0, vec![0.0; 2], false).is_err());
    }

    #[test]
    fn least_squares_recovers_exact_coefficients() {
        let s = Arc::new(space());
        let rows: Vec<Instance> = (0..30)
            .map(|i| Instance::new(vec![(i % 10) as f64 / 10.0, (i % 3) as f64]))
            .collect();
        let target: Vec<f64> = rows
            .iter()
            .map(|r| 0.5 + 2.0 * r[0] + [0.0, -1.0, 4.0][r[1] as usize])
            .collect();
        let data = Dataset::new(s, rows).unwrap();
        let m = train_linear(&data, &target).unwrap();
        assert!((m.intercept() - 0.5).abs() < 1e-4);
        for (got, want) in m.coefficients().iter().zip([2.0, -1.0, 4.0]) {
            assert!((got - want).abs() < 1e-4, "{got} vs {want}");
        }
    }

    #[test]
    fn logistic_separates_a_threshold() {
        let s = Arc::new(
            FeatureSpace::new(vec![Feature::new("x", FeatureDomain::numeric(0.0, 1.0))]).unwrap(),
        );
        let xs: Vec<f64> = (0..40).map(|i| i as f64 / 39.0).collect();
        // noisy labels keep the maximum-likelihood estimate finite
        let target: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| if (x > 0.5) ^ (i % 7 == 0) { 1.0 } else { 0.0 })
            .collect();
        let data = Dataset::new(s, xs.iter().map(|&x| Instance::new(vec![x])).collect()).unwrap();
        let m = train_logistic(&data, &target).unwrap();
        assert!(m.score(&[0.05]).unwrap() < 0.5);
        assert!(m.score(&[0.95]).unwrap() > 0.5);
        assert!(m.coefficients()[0] > 0.0);
    }
}
