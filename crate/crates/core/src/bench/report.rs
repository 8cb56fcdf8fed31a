//! Single-point explanations: aligned text table and a JSON box document
//! that `evaluate_box` can re-check later.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SchemeKind;
use super::data::{load_csv, load_points, LoadedData, Typing};
use super::model::{train_model, ModelKind, TrainedModel};
use super::{immutable_indices, localization_config};
use crate::error::{IrdError, Result};
use crate::evaluation::QualityReport;
use crate::hyperbox::{Dim, Hyperbox};
use crate::localization::sample_uniform;
use crate::pipeline::{explain, PipelineConfig};
use crate::postprocess::PostprocConfig;
use crate::predictor::{CallCounter, CartParams, Predictor};
use crate::region::{make_region, ClosenessRegion, TaskMode};
use crate::result::{IrdResult, Method};
use crate::space::{Dataset, FeatureDomain, FeatureSpace};

fn default_multiplier() -> f64 {
    2.0
}
fn default_grid_steps() -> usize {
    crate::localization::DEFAULT_GRID_STEPS
}

/// Everything needed to reproduce one explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainSetup {
    pub data: PathBuf,
    pub target: String,
    #[serde(default)]
    pub typing: Typing,
    pub model: ModelKind,
    #[serde(default)]
    pub cart: CartParams,
    pub mode: TaskMode,
    pub method: Method,
    pub scheme: SchemeKind,
    #[serde(default = "default_multiplier")]
    pub multiplier: f64,
    pub postproc: bool,
    pub seed: u64,
    #[serde(default)]
    pub immutable: Vec<String>,
    #[serde(default = "default_grid_steps")]
    pub grid_steps: usize,
    /// Row of the point file, or of the data when no point file is given. A
    /// data row is left out of training.
    pub point_index: usize,
    #[serde(default)]
    pub point_file: Option<PathBuf>,
}

/// Machine-readable explanation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxDocument {
    pub setup: ExplainSetup,
    pub space: FeatureSpace,
    pub x: Vec<f64>,
    pub score: f64,
    pub region: ClosenessRegion,
    pub bbar: Hyperbox,
    pub result: IrdResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub feature: String,
    pub value: String,
    pub ird: String,
    pub one_dim: String,
    pub range: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub method: Method,
    pub postproc: bool,
    pub score: f64,
    pub region: ClosenessRegion,
    pub predictor_calls: usize,
    pub rows: Vec<ReportRow>,
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{v:.0}");
    }
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn fmt_dim(space: &FeatureSpace, j: usize, dim: &Dim) -> String {
    match dim {
        Dim::Interval { lower, upper } if lower == upper => fmt_num(*lower),
        Dim::Interval { lower, upper } => format!("[{}, {}]", fmt_num(*lower), fmt_num(*upper)),
        Dim::Levels(set) => {
            let names: Vec<String> = set
                .iter()
                .map(|l| space.format_value(j, l as f64))
                .collect();
            if names.len() == 1 {
                names[0].clone()
            } else {
                format!("{{{}}}", names.join(", "))
            }
        }
    }
}

fn fmt_value(space: &FeatureSpace, j: usize, v: f64) -> String {
    match space.domain(j) {
        FeatureDomain::Numeric { .. } => fmt_num(v),
        FeatureDomain::Categorical { .. } => space.format_value(j, v),
    }
}

fn observed_range(data: &Dataset, j: usize) -> String {
    let space = data.space();
    match space.domain(j) {
        FeatureDomain::Numeric { .. } => match data.observed_range(j) {
            Some((lo, hi)) => fmt_dim(space, j, &Dim::interval(lo, hi)),
            None => String::new(),
        },
        FeatureDomain::Categorical { levels, .. } => {
            let mut seen = vec![false; levels.len()];
            for r in data.rows() {
                seen[r[j] as usize] = true;
            }
            let names: Vec<&str> = levels
                .iter()
                .zip(&seen)
                .filter(|(_, &s)| s)
                .map(|(l, _)| l.as_str())
                .collect();
            format!("{{{}}}", names.join(", "))
        }
    }
}

impl ExplainReport {
    pub fn build(
        space: &FeatureSpace,
        x: &[f64],
        bx: &Hyperbox,
        bbar: &Hyperbox,
        train: &Dataset,
    ) -> Vec<ReportRow> {
        (0..space.len())
            .map(|j| ReportRow {
                feature: space.feature(j).name.clone(),
                value: fmt_value(space, j, x[j]),
                ird: fmt_dim(space, j, bx.dim(j)),
                one_dim: fmt_dim(space, j, bbar.dim(j)),
                range: observed_range(train, j),
            })
            .collect()
    }

    /// Aligned text table preceded by the prediction, region and method.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "prediction {} in Y' = [{}, {}]",
            fmt_num(self.score),
            fmt_num(self.region.lo),
            fmt_num(self.region.hi)
        );
        let _ = writeln!(
            out,
            "method {}{}, {} predictor calls",
            self.method,
            if self.postproc {
                " + post-processing"
            } else {
                ""
            },
            self.predictor_calls
        );
        let header = ["Feature", "value", "IRD", "1-dim IRD", "Range"];
        let cells: Vec<[&str; 5]> = self
            .rows
            .iter()
            .map(|r| [r.feature.as_str(), &r.value, &r.ird, &r.one_dim, &r.range])
            .collect();
        let mut widths = header.map(str::len);
        for c in &cells {
            for (w, s) in widths.iter_mut().zip(c) {
                *w = (*w).max(s.chars().count());
            }
        }
        let line = |c: [&str; 5]| {
            let parts: Vec<String> = c
                .iter()
                .zip(&widths)
                .map(|(s, w)| format!("{s:<w$}"))
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let _ = writeln!(out, "{}", line(header));
        let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
        let _ = writeln!(out, "{}", "-".repeat(total));
        for c in cells {
            let _ = writeln!(out, "{}", line(c));
        }
        out
    }
}

/// Training data, trained model and the point to explain for a setup.
pub struct Context {
    pub loaded: LoadedData,
    pub train: Dataset,
    pub model: TrainedModel,
    pub x: Vec<f64>,
}

/// Loads `data` (which overrides the setup's path) and rebuilds the model.
pub fn build_context(setup: &ExplainSetup, data: &Path) -> Result<Context> {
    let loaded = load_csv(data, &setup.target, &setup.typing)?;
    let space = loaded.space().clone();
    let (x, train_rows): (Vec<f64>, Vec<usize>) = match &setup.point_file {
        Some(file) => {
            let points = load_points(file, &space)?;
            let x = points.get(setup.point_index).ok_or_else(|| {
                IrdError::Config(format!("point file has no row {}", setup.point_index))
            })?;
            (x.values().to_vec(), (0..loaded.data.len()).collect())
        }
        None => {
            if setup.point_index >= loaded.data.len() {
                return Err(IrdError::Config(format!(
                    "data has no row {}",
                    setup.point_index
                )));
            }
            let x = loaded.data.row(setup.point_index).values().to_vec();
            (
                x,
                (0..loaded.data.len())
                    .filter(|&i| i != setup.point_index)
                    .collect(),
            )
        }
    };
    let train = loaded.data.subset(&train_rows);
    let target: Vec<f64> = train_rows.iter().map(|&i| loaded.target[i]).collect();
    let model = train_model(setup.model, &train, &target, setup.cart)?;
    Ok(Context {
        loaded,
        train,
        model,
        x,
    })
}

/// Explains one point. Fails with a precondition error when the prediction
/// at the point lies outside its closeness region.
pub fn explain_point(setup: &ExplainSetup) -> Result<(ExplainReport, BoxDocument)> {
    let Context {
        loaded,
        mut train,
        model,
        x,
    } = build_context(setup, &setup.data)?;
    let space = loaded.space().clone();
    let predictor = model.predictor_for(&x, &space)?;
    train.set_scores(predictor.score_batch(train.rows())?)?;
    let score = predictor.score(&x)?;
    let region = make_region(score, setup.mode, train.require_scores()?)?;
    if !region.contains(score) {
        return Err(IrdError::Precondition(format!(
            "prediction {score} at the point of interest is outside [{}, {}]",
            region.lo, region.hi
        )));
    }
    let immutable = immutable_indices(&space, &setup.immutable)?;
    let cfg = PipelineConfig {
        localization: localization_config(
            setup.grid_steps,
            &immutable,
            setup.scheme,
            setup.multiplier,
            setup.seed,
        ),
        postproc: setup.postproc.then(PostprocConfig::default),
        ..Default::default()
    };
    let counter = CallCounter::new(&*predictor);
    let (prepared, mut result) = explain(&counter, &train, &x, &region, setup.method, &cfg)?;
    let mut q = QualityReport::measure(&result.bbox, &x, &train, &region)?;
    q.predictor_calls = counter.count();
    result.quality_train = Some(q);
    let report = ExplainReport {
        method: setup.method,
        postproc: setup.postproc,
        score,
        region,
        predictor_calls: counter.count(),
        rows: ExplainReport::build(&space, &x, &result.bbox, &prepared.bbar, &train),
    };
    let doc = BoxDocument {
        setup: setup.clone(),
        space: (*space).clone(),
        x,
        score,
        region,
        bbar: prepared.bbar,
        result,
    };
    Ok((report, doc))
}

/// Re-measures a saved box on the training rows or on `samples` uniform
/// points of the largest local box. The model is rebuilt from the document's
/// setup using the data at `data`.
pub fn evaluate_box(
    doc: &BoxDocument,
    data: &Path,
    eval: SchemeKind,
    samples: usize,
    seed: u64,
) -> Result<QualityReport> {
    let ctx = build_context(&doc.setup, data)?;
    if **ctx.loaded.space() != doc.space {
        return Err(IrdError::Config(
            "data does not match the feature space of the box document".into(),
        ));
    }
    let space = ctx.loaded.space().clone();
    doc.result.bbox.validate(&space)?;
    let predictor = ctx.model.predictor_for(&doc.x, &space)?;
    let mut e = match eval {
        SchemeKind::Train => ctx.train,
        SchemeKind::Sampled => sample_uniform(&doc.bbar, &space, samples, seed)?,
    };
    let counter = CallCounter::new(&*predictor);
    e.set_scores(counter.score_batch(e.rows())?)?;
    let mut q = QualityReport::measure(&doc.result.bbox, &doc.x, &e, &doc.region)?;
    q.predictor_calls = counter.count();
    Ok(q)
}
