use serde::{Deserialize, Serialize};

use crate::evaluation::QualityReport;
use crate::hyperbox::Hyperbox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[serde(rename = "maxbox")]
    MaxBox,
    Prim,
    Maire,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MaxBox, Method::Prim, Method::Maire];

    pub fn name(self) -> &'static str {
        match self {
            Method::MaxBox => "maxbox",
            Method::Prim => "prim",
            Method::Maire => "maire",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::IrdError;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "maxbox" => Ok(Method::MaxBox),
            "prim" => Ok(Method::Prim),
            "maire" => Ok(Method::Maire),
            other => Err(crate::IrdError::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// A returned regional descriptor and how it was obtained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrdResult {
    #[serde(rename = "box")]
    pub bbox: Hyperbox,
    pub method: Method,
    pub seed: u64,
    /// Search iterations (node expansions, peel/paste steps or optimizer
    /// steps, depending on the method).
    pub iterations: usize,
    pub predictor_calls: usize,
    /// False when the search stopped without reaching precision 1 on its
    /// working data.
    pub pure: bool,
    /// Set when an iteration or node budget cut the search short.
    #[serde(default)]
    pub budget_exhausted: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_train: Option<QualityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_sampled: Option<QualityReport>,
}

impl IrdResult {
    pub fn new(bbox: Hyperbox, method: Method, seed: u64) -> Self {
        IrdResult {
            bbox,
            method,
            seed,
            iterations: 0,
            predictor_calls: 0,
            pure: true,
            budget_exhausted: false,
            quality_train: None,
            quality_sampled: None,
        }
    }
}
