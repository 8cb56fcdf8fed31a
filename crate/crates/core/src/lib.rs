//! Interpretable regional descriptors (IRDs): maximal hyperboxes around a
//! point of interest inside which a black-box model's prediction stays in a
//! user-defined closeness region.
//!
//! The crate follows a four-step generation framework:
//!
//! 1. [`localization::largest_local_box`] restricts the search space to the
//!    largest local box found by axis-wise grid scans from the point.
//! 2. [`localization::select_dataset`] / [`localization::sample_uniform`]
//!    provide the working dataset inside that box.
//! 3. [`localization::init_box`] picks a top-down or bottom-up start.
//! 4. A search method ([`maxbox`], [`prim`], [`maire`]) optimizes the box,
//!    optionally refined by [`postprocess`].
//!
//! [`evaluation`] implements the quality measures and [`bench`] the CSV
//! driven experiment harness.

pub mod bench;
pub mod error;
pub mod evaluation;
pub mod hyperbox;
pub mod localization;
pub mod maire;
pub mod maxbox;
pub mod pipeline;
pub mod postprocess;
pub mod predictor;
pub mod prim;
pub mod region;
pub mod result;
pub mod space;

pub use error::{IrdError, Result};
pub use hyperbox::{Bound, Dim, Hyperbox, LevelSet};
pub use predictor::{CallCounter, Predictor};
pub use region::{ClosenessRegion, TaskMode};
pub use result::{IrdResult, Method};
pub use space::{Dataset, Feature, FeatureDomain, FeatureSpace, Instance};
