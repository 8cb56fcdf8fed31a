//! The benchmark loop: pick points, explain each with every configured
//! method, scheme and post-processing setting, and measure the results.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, SchemeKind};
use super::data::load_csv;
use super::model::train_model;
use super::{derive_seed, immutable_indices, localization_config};
use crate::error::{IrdError, Result};
use crate::evaluation::{
    connected_level_set, coverage_on, robustness, LevelSetConfig, QualityReport,
};
use crate::localization::sample_uniform;
use crate::pipeline::{prepare, search, PipelineConfig};
use crate::predictor::{CallCounter, Predictor};
use crate::region::{make_region, ClosenessRegion};
use crate::result::Method;
use crate::space::Dataset;

/// One candidate point of interest and whether it was explained.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRecord {
    pub row: usize,
    pub score: f64,
    pub region: ClosenessRegion,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    /// All predictions for this cell: largest local box, working data and
    /// search.
    pub predictor_calls: usize,
    pub bbar_calls: usize,
    pub iterations: usize,
    pub pure: bool,
    pub budget_exhausted: bool,
    pub train: QualityReport,
    pub sampled: QualityReport,
    pub relative_size: f64,
    pub bbox: String,
}

/// Result of one (point, scheme, method, post-processing) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub point: usize,
    pub row: usize,
    pub method: Method,
    pub scheme: SchemeKind,
    pub postproc: bool,
    pub seed: u64,
    pub outcome: std::result::Result<CellMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub points: Vec<PointRecord>,
    pub rows: Vec<ResultRow>,
}

/// Seeded split of the rows into candidate points and training rows. The
/// candidate pool holds four times as many rows as points are explained so
/// that points whose prediction misses their region can be replaced.
pub fn split_rows(n_rows: usize, n_points: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let pool = (4 * n_points).min(n_rows / 2);
    if pool < n_points {
        return Err(IrdError::Config(format!(
            "{n_rows} rows are too few to hold out {n_points} points"
        )));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0])));
    let candidates = order[..pool].to_vec();
    let mut train = order[pool..].to_vec();
    train.sort_unstable();
    Ok((candidates, train))
}

struct Point {
    index: usize,
    row: usize,
    x: Vec<f64>,
    region: ClosenessRegion,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let loaded = load_csv(&cfg.data, &cfg.target, &cfg.typing)?;
    let all = &loaded.data;
    let space = loaded.space().clone();
    let immutable = immutable_indices(&space, &cfg.immutable)?;
    let (candidates, train_rows) = split_rows(all.len(), cfg.n_points, cfg.seed)?;
    let train_base = all.subset(&train_rows);
    let train_target: Vec<f64> = train_rows.iter().map(|&i| loaded.target[i]).collect();
    let model = train_model(cfg.model, &train_base, &train_target, cfg.cart)?;

    let mut records = Vec::new();
    let mut points = Vec::new();
    for &row in &candidates {
        if points.len() == cfg.n_points {
            break;
        }
        let x = all.row(row).values().to_vec();
        let predictor = model.predictor_for(&x, &space)?;
        let train_scores = predictor.score_batch(train_base.rows())?;
        let score = predictor.score(&x)?;
        let region = make_region(score, cfg.mode, &train_scores)?;
        let accepted = region.contains(score);
        if !accepted {
            log::info!(
                "row {row}: prediction {score} outside [{}, {}], drawing another point",
                region.lo,
                region.hi
            );
        }
        records.push(PointRecord {
            row,
            score,
            region,
            accepted,
        });
        if accepted {
            points.push(Point {
                index: points.len(),
                row,
                x,
                region,
            });
        }
    }
    if points.len() < cfg.n_points {
        log::warn!(
            "only {} of {} points have predictions inside their region",
            points.len(),
            cfg.n_points
        );
    }

    let rows: Vec<Vec<ResultRow>> = points
        .par_iter()
        .map(|p| run_point(cfg, p, &model, &train_base, &immutable))
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput {
        points: records,
        rows: rows.into_iter().flatten().collect(),
    })
}

fn method_index(m: Method) -> u64 {
    Method::ALL.iter().position(|&a| a == m).unwrap() as u64
}

fn run_point(
    cfg: &ExperimentConfig,
    p: &Point,
    model: &super::model::TrainedModel,
    train_base: &Dataset,
    immutable: &std::collections::BTreeSet<usize>,
) -> Result<Vec<ResultRow>> {
    let space = train_base.space_arc();
    let predictor = model.predictor_for(&p.x, space)?;
    let mut train_eval = train_base.clone();
    train_eval.set_scores(predictor.score_batch(train_base.rows())?)?;

    let schemes = cfg.schemes.to_vec();
    let postprocs = cfg.postproc.to_vec();
    let pi = p.index as u64;

    let mut prepared = Vec::with_capacity(schemes.len());
    for (si, &scheme) in schemes.iter().enumerate() {
        let loc = localization_config(
            cfg.grid_steps,
            immutable,
            scheme,
            cfg.multiplier,
            derive_seed(cfg.seed, &[1, pi, si as u64]),
        );
        prepared.push((
            scheme,
            loc.clone(),
            prepare(&*predictor, train_base, &p.x, &p.region, &loc),
        ));
    }
    // The largest local box does not depend on the scheme.
    let bbar = match prepared.iter().find_map(|(_, _, r)| r.as_ref().ok()) {
        Some(prep) => prep.bbar.clone(),
        None => {
            let msg = prepared[0]
                .2
                .as_ref()
                .err()
                .map(ToString::to_string)
                .unwrap_or_default();
            return Ok(failed_rows(cfg, p, &schemes, &postprocs, &msg));
        }
    };
    let mut sampled_eval = sample_uniform(
        &bbar,
        space,
        cfg.eval_samples,
        derive_seed(cfg.seed, &[2, pi]),
    )?;
    sampled_eval.set_scores(predictor.score_batch(sampled_eval.rows())?)?;

    let members = |eval: &Dataset, tag: u64| -> Result<Option<Vec<usize>>> {
        if !cfg.coverage_l {
            return Ok(None);
        }
        let ls = LevelSetConfig {
            seed: derive_seed(cfg.seed, &[4, pi, tag]),
            ..cfg.level_set.clone()
        };
        let m = connected_level_set(&p.x, eval, &p.region, &*predictor, &ls)?;
        Ok((!m.is_empty()).then_some(m))
    };
    let train_members = members(&train_eval, 0)?;
    let sampled_members = members(&sampled_eval, 1)?;

    let mut cells = Vec::new();
    for (si, (scheme, loc, prep)) in prepared.iter().enumerate() {
        for &method in &cfg.methods {
            for (bi, &post) in postprocs.iter().enumerate() {
                let seed = derive_seed(
                    cfg.seed,
                    &[3, pi, si as u64, method_index(method), bi as u64],
                );
                cells.push((si, *scheme, loc, prep, method, post, seed));
            }
        }
    }
    let rows = cells
        .into_par_iter()
        .map(|(_, scheme, loc, prep, method, post, seed)| {
            let outcome = match prep {
                Err(e) => Err(e.to_string()),
                Ok(prep) => {
                    let pipeline = PipelineConfig {
                        localization: loc.clone(),
                        maxbox: cfg.maxbox.clone(),
                        prim: cfg.prim.clone(),
                        maire: cfg.maire.clone(),
                        postproc: post.then(|| cfg.postproc_config.clone()),
                    };
                    run_cell(
                        &*predictor,
                        prep,
                        method,
                        &pipeline,
                        seed,
                        cfg.robustness_runs,
                        (&train_eval, train_members.as_deref()),
                        (&sampled_eval, sampled_members.as_deref()),
                        &p.x,
                        &p.region,
                    )
                    .map_err(|e| e.to_string())
                }
            };
            if let Err(e) = &outcome {
                log::warn!(
                    "point {} {} {} postproc={post}: {e}",
                    p.index,
                    method,
                    scheme.name()
                );
            }
            ResultRow {
                point: p.index,
                row: p.row,
                method,
                scheme,
                postproc: post,
                seed,
                outcome,
            }
        })
        .collect();
    Ok(rows)
}

fn failed_rows(
    cfg: &ExperimentConfig,
    p: &Point,
    schemes: &[SchemeKind],
    postprocs: &[bool],
    msg: &str,
) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for (si, &scheme) in schemes.iter().enumerate() {
        for &method in &cfg.methods {
            for (bi, &post) in postprocs.iter().enumerate() {
                rows.push(ResultRow {
                    point: p.index,
                    row: p.row,
                    method,
                    scheme,
                    postproc: post,
                    seed: derive_seed(
                        cfg.seed,
                        &[
                            3,
                            p.index as u64,
                            si as u64,
                            method_index(method),
                            bi as u64,
                        ],
                    ),
                    outcome: Err(msg.to_string()),
                });
            }
        }
    }
    rows
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    predictor: &dyn Predictor,
    prep: &crate::pipeline::Prepared,
    method: Method,
    pipeline: &PipelineConfig,
    seed: u64,
    runs: usize,
    train: (&Dataset, Option<&[usize]>),
    sampled: (&Dataset, Option<&[usize]>),
    x: &[f64],
    region: &ClosenessRegion,
) -> Result<CellMetrics> {
    let counter = CallCounter::new(predictor);
    let result = search(&counter, prep, method, pipeline, seed)?;
    let search_calls = counter.count();
    let mut reruns = Vec::with_capacity(runs);
    for r in 0..runs {
        reruns.push(
            search(
                predictor,
                prep,
                method,
                pipeline,
                derive_seed(seed, &[r as u64 + 1]),
            )?
            .bbox,
        );
    }
    let report = |(eval, members): (&Dataset, Option<&[usize]>)| -> Result<QualityReport> {
        let mut q = QualityReport::measure(&result.bbox, x, eval, region)?;
        q.coverage_l = members
            .map(|m| coverage_on(&result.bbox, eval, m))
            .transpose()?;
        Ok(q)
    };
    let mut train_q = report(train)?;
    let mut sampled_q = report(sampled)?;
    let calls = prep.bbar_calls + prep.data_calls + search_calls;
    train_q.predictor_calls = calls;
    sampled_q.predictor_calls = calls;
    sampled_q.robustness = Some(robustness(&result.bbox, &reruns, sampled.0)?);
    let space = prep.working.space();
    Ok(CellMetrics {
        predictor_calls: calls,
        bbar_calls: prep.bbar_calls,
        iterations: result.iterations,
        pure: result.pure,
        budget_exhausted: result.budget_exhausted,
        train: train_q,
        sampled: sampled_q,
        relative_size: result.bbox.relative_size(space),
        bbox: result.bbox.display(space).to_string(),
    })
}

const RESULT_HEADER: [&str; 25] = [
    "point",
    "row",
    "method",
    "scheme",
    "postproc",
    "seed",
    "status",
    "predictor_calls",
    "bbar_calls",
    "iterations",
    "pure",
    "budget_exhausted",
    "train_locality",
    "train_coverage",
    "train_coverage_l",
    "train_precision",
    "train_maximal",
    "sampled_locality",
    "sampled_coverage",
    "sampled_coverage_l",
    "sampled_precision",
    "sampled_maximal",
    "robustness",
    "relative_size",
    "box",
];

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn quality_cells(q: &QualityReport) -> [String; 5] {
    [
        flag(q.locality),
        q.coverage.to_string(),
        opt(q.coverage_l),
        q.precision.to_string(),
        flag(q.maximal),
    ]
}

fn to_csv(header: &[&str], records: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| IrdError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

impl ExperimentOutput {
    pub fn results_csv(&self) -> Result<String> {
        let records: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let mut rec = vec![
                    r.point.to_string(),
                    r.row.to_string(),
                    r.method.name().to_string(),
                    r.scheme.name().to_string(),
                    flag(r.postproc),
                    r.seed.to_string(),
                ];
                match &r.outcome {
                    Ok(m) => {
                        rec.extend([
                            "ok".to_string(),
                            m.predictor_calls.to_string(),
                            m.bbar_calls.to_string(),
                            m.iterations.to_string(),
                            flag(m.pure),
                            flag(m.budget_exhausted),
                        ]);
                        rec.extend(quality_cells(&m.train));
                        rec.extend(quality_cells(&m.sampled));
                        rec.extend([
                            opt(m.sampled.robustness),
                            m.relative_size.to_string(),
                            m.bbox.clone(),
                        ]);
                    }
                    Err(e) => {
                        rec.push(format!("error: {e}"));
                        rec.resize(RESULT_HEADER.len(), String::new());
                    }
                }
                rec
            })
            .collect();
        to_csv(&RESULT_HEADER, &records)
    }

    /// Means per method, scheme and post-processing setting over the cells
    /// that succeeded.
    pub fn aggregate_csv(&self) -> Result<String> {
        let header = [
            "method",
            "scheme",
            "postproc",
            "n_ok",
            "n_failed",
            "predictor_calls",
            "train_locality",
            "train_coverage",
            "train_coverage_l",
            "train_precision",
            "train_maximal",
            "sampled_locality",
            "sampled_coverage",
            "sampled_coverage_l",
            "sampled_precision",
            "sampled_maximal",
            "robustness",
            "relative_size",
        ];
        let mut keys: Vec<(Method, SchemeKind, bool)> = Vec::new();
        for r in &self.rows {
            let k = (r.method, r.scheme, r.postproc);
            if !keys.contains(&k) {
                keys.push(k);
            }
        }
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        let mut records = Vec::new();
        for (method, scheme, post) in keys {
            let group: Vec<&ResultRow> = self
                .rows
                .iter()
                .filter(|r| (r.method, r.scheme, r.postproc) == (method, scheme, post))
                .collect();
            let ok: Vec<&CellMetrics> = group
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let mean = |f: &dyn Fn(&CellMetrics) -> Option<f64>| -> String {
                let vals: Vec<f64> = ok.iter().filter_map(|m| f(m)).collect();
                if vals.is_empty() {
                    String::new()
                } else {
                    (vals.iter().sum::<f64>() / vals.len() as f64).to_string()
                }
            };
            let mut rec = vec![
                method.name().to_string(),
                scheme.name().to_string(),
                flag(post),
                ok.len().to_string(),
                (group.len() - ok.len()).to_string(),
                mean(&|m| Some(m.predictor_calls as f64)),
            ];
            let picks: [fn(&CellMetrics) -> &QualityReport; 2] = [|m| &m.train, |m| &m.sampled];
            for pick in picks {
                rec.push(mean(&|m| Some(b(pick(m).locality))));
                rec.push(mean(&|m| Some(pick(m).coverage)));
                rec.push(mean(&|m| pick(m).coverage_l));
                rec.push(mean(&|m| Some(pick(m).precision)));
                rec.push(mean(&|m| Some(b(pick(m).maximal))));
            }
            rec.push(mean(&|m| m.sampled.robustness));
            rec.push(mean(&|m| Some(m.relative_size)));
            records.push(rec);
        }
        to_csv(&header, &records)
    }

    pub fn points_csv(&self) -> Result<String> {
        let records: Vec<Vec<String>> = self
            .points
            .iter()
            .map(|p| {
                vec![
                    p.row.to_string(),
                    p.score.to_string(),
                    p.region.lo.to_string(),
                    p.region.hi.to_string(),
                    if p.accepted { "explained" } else { "resampled" }.to_string(),
                ]
            })
            .collect();
        to_csv(
            &["row", "score", "region_lo", "region_hi", "status"],
            &records,
        )
    }

    /// Writes `results.csv`, `aggregate.csv` and `points.csv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.results_csv()?)?;
        std::fs::write(dir.join("aggregate.csv"), self.aggregate_csv()?)?;
        std::fs::write(dir.join("points.csv"), self.points_csv()?)?;
        Ok(())
    }

    /// Short human-readable summary of the aggregate table.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let ok = self.rows.iter().filter(|r| r.outcome.is_ok()).count();
        let _ = writeln!(
            s,
            "{} points, {} cells, {} failed",
            self.points.iter().filter(|p| p.accepted).count(),
            self.rows.len(),
            self.rows.len() - ok
        );
        s
    }
}
