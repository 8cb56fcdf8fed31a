//! The full generation framework: largest local box, working data,
//! initialization, search and optional post-processing.

use serde::{Deserialize, Serialize};

use crate::error::{IrdError, Result};
use crate::hyperbox::Hyperbox;
use crate::localization::{
    init_box, largest_local_box, sample_uniform, select_dataset, DataScheme, InitStrategy,
    LocalizationConfig,
};
use crate::maire::{maire_search, MaireConfig};
use crate::maxbox::{maxbox_search, MaxboxConfig};
use crate::postprocess::{postprocess, PostprocConfig};
use crate::predictor::{CallCounter, Predictor};
use crate::prim::{prim_search, PrimConfig};
use crate::region::ClosenessRegion;
use crate::result::{IrdResult, Method};
use crate::space::Dataset;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub localization: LocalizationConfig,
    pub maxbox: MaxboxConfig,
    pub prim: PrimConfig,
    pub maire: MaireConfig,
    /// Post-processing settings; `None` skips the step.
    pub postproc: Option<PostprocConfig>,
}

/// Largest local box and working data for one point of interest.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub x: Vec<f64>,
    pub region: ClosenessRegion,
    pub bbar: Hyperbox,
    /// Scored working rows inside `bbar`.
    pub working: Dataset,
    pub bbar_calls: usize,
    /// Calls spent scoring the working rows.
    pub data_calls: usize,
}

/// Computes the largest local box and the working data. Training rows reuse
/// their cached scores when present.
pub fn prepare<P: Predictor + ?Sized>(
    predictor: &P,
    train: &Dataset,
    x: &[f64],
    region: &ClosenessRegion,
    cfg: &LocalizationConfig,
) -> Result<Prepared> {
    let counter = CallCounter::new(predictor);
    let bbar = largest_local_box(&counter, x, region, train.space(), cfg)?;
    let bbar_calls = counter.count();
    let mut working = match cfg.scheme {
        DataScheme::Train => select_dataset(train, &bbar)?,
        DataScheme::Sampled { multiplier } => {
            let n = (multiplier * train.len() as f64).round() as usize;
            sample_uniform(&bbar, train.space_arc(), n, cfg.seed)?
        }
    };
    if working.scores().is_none() {
        let scores = counter.score_batch(working.rows())?;
        working.set_scores(scores)?;
    }
    Ok(Prepared {
        x: x.to_vec(),
        region: *region,
        bbar,
        working,
        bbar_calls,
        data_calls: counter.count() - bbar_calls,
    })
}

pub fn default_init(method: Method) -> InitStrategy {
    match method {
        Method::MaxBox | Method::Prim => InitStrategy::TopDown,
        Method::Maire => InitStrategy::BottomUp,
    }
}

/// Runs one search method on prepared data, then post-processes when
/// configured. `seed` drives tie-breaking and post-processing samples.
pub fn search<P: Predictor + ?Sized>(
    predictor: &P,
    prepared: &Prepared,
    method: Method,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<IrdResult> {
    let space = prepared.working.space_arc();
    let x = &prepared.x;
    let initial = init_box(default_init(method), &prepared.bbar, x, space)?;
    let mut result = match method {
        Method::MaxBox => maxbox_search(
            &prepared.working,
            x,
            &prepared.region,
            &initial,
            &cfg.maxbox,
        )?,
        Method::Prim => {
            let prim = PrimConfig {
                seed,
                ..cfg.prim.clone()
            };
            prim_search(&prepared.working, x, &prepared.region, &initial, &prim)?
        }
        Method::Maire => maire_search(
            &prepared.working,
            x,
            &prepared.region,
            &initial,
            &prepared.bbar,
            &cfg.maire,
        )?,
    };
    result.seed = seed;
    if let Some(pp) = &cfg.postproc {
        let pp = PostprocConfig { seed, ..pp.clone() };
        let refined = postprocess(
            &result.bbox,
            x,
            &prepared.region,
            predictor,
            space,
            &prepared.bbar,
            &pp,
        )?;
        result.bbox = refined.bbox;
        result.predictor_calls += refined.predictor_calls;
        result.iterations += refined.peels + refined.pastes;
        result.budget_exhausted |= refined.watchdog;
    }
    if !result.bbox.is_subbox(&prepared.bbar)? {
        return Err(IrdError::precondition("search left the largest local box"));
    }
    Ok(result)
}

/// [`prepare`] followed by [`search`]; the result's call count covers every
/// prediction made.
pub fn explain<P: Predictor + ?Sized>(
    predictor: &P,
    train: &Dataset,
    x: &[f64],
    region: &ClosenessRegion,
    method: Method,
    cfg: &PipelineConfig,
) -> Result<(Prepared, IrdResult)> {
    let prepared = prepare(predictor, train, x, region, &cfg.localization)?;
    let mut result = search(predictor, &prepared, method, cfg, cfg.localization.seed)?;
    result.predictor_calls += prepared.bbar_calls + prepared.data_calls;
    Ok((prepared, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::precision;
    use crate::hyperbox::Dim;
    use crate::predictor::FnPredictor;
    use crate::space::{Feature, FeatureDomain, FeatureSpace, Instance};
    use std::sync::Arc;

    fn train() -> (Dataset, FnPredictor<impl Fn(&[f64]) -> f64 + Send + Sync>) {
        let s = Arc::new(
            FeatureSpace::new(vec![
                Feature::new("a", FeatureDomain::numeric(0.0, 1.0)),
                Feature::new("b", FeatureDomain::numeric(0.0, 1.0)),
            ])
            .unwrap(),
        );
        let f = FnPredictor(|x: &[f64]| if x[0] < 0.6 && x[1] > 0.2 { 1.0 } else { 0.0 });
        let rows: Vec<Instance> = (0..100)
            .map(|i| Instance::new(vec![(i % 10) as f64 / 9.0, (i / 10) as f64 / 9.0]))
            .collect();
        let scores = f.score_batch(&rows).unwrap();
        (Dataset::with_scores(s, rows, scores).unwrap(), f)
    }

    #[test]
    fn every_method_returns_a_local_subbox_of_bbar() {
        let (data, f) = train();
        let region = ClosenessRegion::new(0.5, 1.0).unwrap();
        let x = [0.3, 0.5];
        for scheme in [DataScheme::Train, DataScheme::Sampled { multiplier: 2.0 }] {
            for post in [None, Some(PostprocConfig::default())] {
                let cfg = PipelineConfig {
                    localization: LocalizationConfig {
                        scheme,
                        ..Default::default()
                    },
                    postproc: post,
                    ..Default::default()
                };
                for method in Method::ALL {
                    let counter = CallCounter::new(&f);
                    let (prep, r) = explain(&counter, &data, &x, &region, method, &cfg).unwrap();
                    assert!(r.bbox.covers(&x));
                    assert!(r.bbox.is_subbox(&prep.bbar).unwrap());
                    assert_eq!(r.predictor_calls, counter.count());
                    if cfg.postproc.is_none() && method != Method::Maire {
                        assert_eq!(precision(&r.bbox, &prep.working, &region).unwrap(), 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn train_scheme_uses_cached_scores() {
        let (data, f) = train();
        let region = ClosenessRegion::new(0.5, 1.0).unwrap();
        let prep = prepare(
            &f,
            &data,
            &[0.3, 0.5],
            &region,
            &LocalizationConfig::default(),
        )
        .unwrap();
        assert_eq!(prep.data_calls, 0);
        assert_eq!(prep.bbar.dim(0), &Dim::interval(0.0, 0.575));
    }
}
