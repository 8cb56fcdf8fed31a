//! Model kinds available to the harness and the per-point predictors built
//! from them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::predictor::{
    train_cart, train_linear, train_logistic, CartParams, ExternalPredictor, HyperboxModel,
    LinearModel, Predictor, TreeModel, PREDICTOR_CMD_ENV,
};
use crate::space::{Dataset, FeatureSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Scores 1 inside the CART terminal box of the explained point, 0
    /// elsewhere. The ground truth is known, which makes it the reference
    /// model for recovery checks.
    Tree,
    /// The CART tree itself, scoring leaf means.
    Cart,
    Linear,
    Logistic,
    /// Child process named by `IRD_PREDICTOR_CMD`.
    External,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Tree => "tree",
            ModelKind::Cart => "cart",
            ModelKind::Linear => "linear",
            ModelKind::Logistic => "logistic",
            ModelKind::External => "external",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = IrdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "cart" => Ok(ModelKind::Cart),
            "linear" => Ok(ModelKind::Linear),
            "logistic" => Ok(ModelKind::Logistic),
            "external" => Ok(ModelKind::External),
            other => Err(IrdError::Config(format!("unknown model `{other}`"))),
        }
    }
}

/// A fitted model. For [`ModelKind::Tree`] the predictor depends on the
/// explained point, see [`TrainedModel::predictor_for`].
pub enum TrainedModel {
    Tree(TreeModel),
    Cart(TreeModel),
    Linear(LinearModel),
    External(Arc<ExternalPredictor>),
}

impl std::fmt::Debug for TrainedModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self {
            TrainedModel::Tree(_) => "tree",
            TrainedModel::Cart(_) => "cart",
            TrainedModel::Linear(_) => "linear",
            TrainedModel::External(_) => "external",
        };
        write!(f, "TrainedModel({kind})")
    }
}

/// Fits `kind` on `data`. The external model is spawned from
/// `IRD_PREDICTOR_CMD` and needs no training.
pub fn train_model(
    kind: ModelKind,
    data: &Dataset,
    target: &[f64],
    cart: CartParams,
) -> Result<TrainedModel> {
    Ok(match kind {
        ModelKind::Tree => TrainedModel::Tree(train_cart(data, target, cart)?),
        ModelKind::Cart => TrainedModel::Cart(train_cart(data, target, cart)?),
        ModelKind::Linear => TrainedModel::Linear(train_linear(data, target)?),
        ModelKind::Logistic => TrainedModel::Linear(train_logistic(data, target)?),
        ModelKind::External => {
            let cmd = std::env::var(PREDICTOR_CMD_ENV)
                .map_err(|_| IrdError::Config(format!("{PREDICTOR_CMD_ENV} is not set")))?;
            TrainedModel::External(Arc::new(ExternalPredictor::spawn(
                &cmd,
                Arc::clone(data.space_arc()),
            )?))
        }
    })
}

impl TrainedModel {
    /// The predictor to explain at `x`.
    pub fn predictor_for(
        &self,
        x: &[f64],
        space: &FeatureSpace,
    ) -> Result<Box<dyn Predictor + '_>> {
        Ok(match self {
            TrainedModel::Tree(tree) => Box::new(HyperboxModel::new(tree.terminal_box(x, space)?)),
            TrainedModel::Cart(tree) => Box::new(tree),
            TrainedModel::Linear(m) => Box::new(m),
            TrainedModel::External(p) => Box::new(Arc::clone(p)),
        })
    }

    pub fn tree(&self) -> Option<&TreeModel> {
        match self {
            TrainedModel::Tree(t) | TrainedModel::Cart(t) => Some(t),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Feature, FeatureDomain, Instance};

    fn data() -> (Dataset, Vec<f64>) {
        let s = Arc::new(
            FeatureSpace::new(vec![Feature::new("a", FeatureDomain::numeric(0.0, 10.0))]).unwrap(),
        );
        let rows = [0.0, 1.0, 2.0, 8.0, 9.0, 10.0]
            .iter()
            .map(|&v| Instance::new(vec![v]))
            .collect();
        (
            Dataset::new(s, rows).unwrap(),
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0],
        )
    }

    #[test]
    fn tree_kind_scores_the_terminal_box() {
        let (d, y) = data();
        let cart = CartParams {
            max_depth: 1,
            min_leaf: 1,
        };
        let m = train_model(ModelKind::Tree, &d, &y, cart).unwrap();
        let p = m.predictor_for(&[9.0], d.space()).unwrap();
        assert_eq!(p.score(&[9.5]).unwrap(), 1.0);
        assert_eq!(p.score(&[1.0]).unwrap(), 0.0);
        let p = m.predictor_for(&[1.0], d.space()).unwrap();
        assert_eq!(p.score(&[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn logistic_scores_are_probabilities() {
        let (d, y) = data();
        let m = train_model(ModelKind::Logistic, &d, &y, CartParams::default()).unwrap();
        let p = m.predictor_for(&[0.0], d.space()).unwrap();
        for v in [0.0, 5.0, 10.0] {
            let s = p.score(&[v]).unwrap();
            assert!((0.0..=1.0).contains(&s));
        }
        assert!(p.score(&[10.0]).unwrap() > p.score(&[0.0]).unwrap());
    }

    #[test]
    fn parses_kind_names() {
        for k in [
            ModelKind::Tree,
            ModelKind::Cart,
            ModelKind::Linear,
            ModelKind::Logistic,
            ModelKind::External,
        ] {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
