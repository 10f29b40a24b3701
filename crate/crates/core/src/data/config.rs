use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, FeatureKind, FeatureMeta, LabelSpec, Subscales};
use crate::train::MonotoneDirection;

pub(crate) const DEFAULT_MAX_LEAVES: usize = 5;

fn default_max_leaves() -> usize {
    DEFAULT_MAX_LEAVES
}

/// One entry of the `features` list in a dataset config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    pub name: String,
    #[serde(default)]
    pub kind: FeatureKind,
    #[serde(default)]
    pub monotone: MonotoneDirection,
    #[serde(default)]
    pub special_values: Vec<f64>,
    #[serde(default = "default_max_leaves")]
    pub max_leaves: usize,
    /// Overrides the dataset-wide `special_value_threshold` for this feature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower_bound: Option<f64>,
    /// Fixed level order for a categorical feature. Without it levels are
    /// recorded in order of first appearance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<String>>,
}

/// Dataset description: label mapping, per-feature metadata and the
/// optional subscale partition.
///
/// ```json
/// {
///   "name": "heloc",
///   "label": "RiskPerformance",
///   "positive_label": "Bad",
///   "special_value_threshold": -0.5,
///   "features": [
///     {"name": "ExternalRiskEstimate", "monotone": "decreasing", "special_values": [-7, -8, -9]}
///   ],
///   "subscales": {"ExternalRiskEstimate": ["ExternalRiskEstimate"]}
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub label: String,
    pub positive_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negative_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub special_value_threshold: Option<f64>,
    pub features: Vec<FeatureConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subscales: Option<serde_json::Map<String, serde_json::Value>>,
}

impl DatasetConfig {
    pub fn from_json(text: &str) -> Result<Self, DataError> {
        serde_json::from_str(text).map_err(|e| DataError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn label_spec(&self) -> LabelSpec {
        LabelSpec {
            column: self.label.clone(),
            positive: self.positive_label.clone(),
            negative: self.negative_label.clone(),
        }
    }

    /// Subscales in declaration order.
    pub fn subscale_list(&self) -> Result<Option<Subscales>, DataError> {
        let Some(map) = &self.subscales else {
            return Ok(None);
        };
        map.iter()
            .map(|(name, members)| {
                let members: Vec<String> = serde_json::from_value(members.clone()).map_err(|e| {
                    DataError::Config(format!("subscale `{name}` must be a list of feature names: {e}"))
                })?;
                Ok((name.clone(), members))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    /// Metadata for each configured feature; categorical levels are filled
    /// from the config when given and left empty otherwise.
    pub(crate) fn feature_metas(&self) -> Result<Vec<FeatureMeta>, DataError> {
        self.features
            .iter()
            .map(|fc| {
                if fc.max_leaves < 2 && fc.kind == FeatureKind::Continuous {
                    return Err(DataError::Config(format!(
                        "feature `{}`: max_leaves must be at least 2",
                        fc.name
                    )));
                }
                if fc.kind == FeatureKind::Indicator {
                    return Err(DataError::Config(format!(
                        "feature `{}`: kind `indicator` is reserved for engineered columns",
                        fc.name
                    )));
                }
                let meta = FeatureMeta {
                    name: fc.name.clone(),
                    kind: fc.kind,
                    monotone: fc.monotone,
                    special_values: fc.special_values.clone(),
                    max_leaves: fc.max_leaves,
                    lower_bound: fc.lower_bound.or(self.special_value_threshold),
                    subscale: None,
                    levels: fc.levels.clone().unwrap_or_default(),
                    origin: None,
                    masked: false,
                };
                meta.validate()?;
                Ok(meta)
            })
            .collect()
    }
}
