//! Experiment harness: CSV ingestion, model training, the benchmark loop and
//! explanation reports.

pub mod config;
pub mod data;
pub mod model;
pub mod report;
pub mod run;

use std::collections::BTreeSet;

pub use config::{ExperimentConfig, OneOrMany, SchemeKind};
pub use data::{load_csv, load_points, ColumnType, LoadedData, Typing};
pub use model::{train_model, ModelKind, TrainedModel};
pub use report::{evaluate_box, explain_point, BoxDocument, ExplainReport, ExplainSetup};
pub use run::{run_experiment, split_rows, ExperimentOutput, ResultRow};

use crate::error::{IrdError, Result};
use crate::localization::{DataScheme, LocalizationConfig};
use crate::space::FeatureSpace;

/// Mixes `base` with a path of indices into an independent seed
/// (splitmix64 finalizer).
pub fn derive_seed(base: u64, path: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    path.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}

pub fn immutable_indices(space: &FeatureSpace, names: &[String]) -> Result<BTreeSet<usize>> {
    names
        .iter()
        .map(|n| {
            space
                .index_of(n)
                .ok_or_else(|| IrdError::Config(format!("immutable feature `{n}` does not exist")))
        })
        .collect()
}

pub fn localization_config(
    grid_steps: usize,
    immutable: &BTreeSet<usize>,
    scheme: SchemeKind,
    multiplier: f64,
    seed: u64,
) -> LocalizationConfig {
    LocalizationConfig {
        grid_steps,
        immutable: immutable.clone(),
        scheme: match scheme {
            SchemeKind::Train => DataScheme::Train,
            SchemeKind::Sampled => DataScheme::Sampled { multiplier },
        },
        seed,
    }
}
