//! Black-box prediction contract and built-in models.
//!
//! Every search method only sees a model through [`Predictor`], which keeps
//! them model-agnostic. [`CallCounter`] wraps any predictor to count scored
//! instances.

mod external;
mod linear;
mod tree;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

pub use external::{ExternalPredictor, HANDSHAKE, PREDICTOR_CMD_ENV};
pub use linear::{train_linear, train_logistic, LinearModel};
pub use tree::{train_cart, CartParams, Node, SplitRule, TreeModel};

use crate::error::{IrdError, Result};
use crate::hyperbox::Hyperbox;
use crate::space::Instance;

/// A deterministic scalar prediction function.
pub trait Predictor: Send + Sync {
    fn score(&self, x: &[f64]) -> Result<f64>;

    fn score_batch(&self, xs: &[Instance]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.score(x)).collect()
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn score(&self, x: &[f64]) -> Result<f64> {
        (**self).score(x)
    }

    fn score_batch(&self, xs: &[Instance]) -> Result<Vec<f64>> {
        (**self).score_batch(xs)
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn score(&self, x: &[f64]) -> Result<f64> {
        (**self).score(x)
    }

    fn score_batch(&self, xs: &[Instance]) -> Result<Vec<f64>> {
        (**self).score_batch(xs)
    }
}

impl<P: Predictor + ?Sized> Predictor for Arc<P> {
    fn score(&self, x: &[f64]) -> Result<f64> {
        (**self).score(x)
    }

    fn score_batch(&self, xs: &[Instance]) -> Result<Vec<f64>> {
        (**self).score_batch(xs)
    }
}

pub(crate) fn check_score(score: f64) -> Result<f64> {
    if score.is_nan() {
        return Err(IrdError::Predictor("predictor returned NaN".into()));
    }
    if !score.is_finite() {
        return Err(IrdError::Predictor(format!("predictor returned {score}")));
    }
    Ok(score)
}

/// Counts every instance passed to the wrapped predictor.
#[derive(Debug)]
pub struct CallCounter<P> {
    inner: P,
    count: AtomicUsize,
}

impl<P: Predictor> CallCounter<P> {
    pub fn new(inner: P) -> Self {
        CallCounter {
            inner,
            count: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: Predictor> Predictor for CallCounter<P> {
    fn score(&self, x: &[f64]) -> Result<f64> {
        self.count.fetch_add(1, Ordering::SeqCst);
        self.inner.score(x)
    }

    fn score_batch(&self, xs: &[Instance]) -> Result<Vec<f64>> {
        self.count.fetch_add(xs.len(), Ordering::SeqCst);
        self.inner.score_batch(xs)
    }
}

/// Adapts a closure into a [`Predictor`].
pub struct FnPredictor<F>(pub F);

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn score(&self, x: &[f64]) -> Result<f64> {
        check_score((self.0)(x))
    }
}

/// Scores 1 inside a fixed box and 0 outside; the terminal-node model derived
/// from a CART tree for one point of interest.
#[derive(Debug, Clone)]
pub struct HyperboxModel {
    pub bx: Hyperbox,
}

impl HyperboxModel {
    pub fn new(bx: Hyperbox) -> Self {
        HyperboxModel { bx }
    }
}

impl Predictor for HyperboxModel {
    fn score(&self, x: &[f64]) -> Result<f64> {
        Ok(if self.bx.contains(x)? { 1.0 } else { 0.0 })
    }
}
