//! Datasets, their feature configuration, and the preprocessing that turns
//! categorical levels and special values into indicator columns.

mod config;
mod csv_io;
mod synth;

use std::collections::HashMap;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::train::MonotoneDirection;

pub use config::{DatasetConfig, FeatureConfig};
pub use csv_io::{load_csv, read_csv, write_csv, write_csv_to};
pub use synth::{synth_logistic, FeatureDistribution, SynthSpec};

/// Named groups of feature names, in declaration order.
pub type Subscales = Vec<(String, Vec<String>)>;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric { line: u64, column: String, value: String },
    #[error("line {line}, column `{column}`: unknown level `{value}`")]
    UnknownLevel { line: u64, column: String, value: String },
    #[error("line {line}, label column `{column}`: unexpected label `{value}`")]
    UnknownLabel { line: u64, column: String, value: String },
    #[error("dataset has no rows")]
    Empty,
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

/// Whether a column holds a measurement, a coded category, or an engineered
/// 0/1 indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    #[default]
    Continuous,
    Categorical,
    Indicator,
}

/// What an engineered indicator column marks.
#[derive(Debug, Clone, PartialEq)]
pub enum IndicatorOf {
    Level(usize),
    Special(f64),
}

/// Provenance of an engineered column.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnOrigin {
    pub source: String,
    pub marks: IndicatorOf,
}

/// Per-feature metadata.
///
/// Categorical columns store the level index (into `levels`) as a float.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub monotone: MonotoneDirection,
    pub special_values: Vec<f64>,
    pub max_leaves: usize,
    /// Values at or below this bound are special; they are screened out of
    /// binning. `None` means only the listed special values are special.
    pub lower_bound: Option<f64>,
    pub subscale: Option<String>,
    pub levels: Vec<String>,
    /// Set on indicator columns created by [`preprocess`].
    pub origin: Option<ColumnOrigin>,
    /// Set on continuous columns whose special values were replaced by NaN.
    pub masked: bool,
}

impl FeatureMeta {
    pub fn continuous(name: impl Into<String>, monotone: MonotoneDirection) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::Continuous,
            monotone,
            special_values: Vec::new(),
            max_leaves: config::DEFAULT_MAX_LEAVES,
            lower_bound: None,
            subscale: None,
            levels: Vec::new(),
            origin: None,
            masked: false,
        }
    }

    pub fn categorical(name: impl Into<String>, levels: Vec<String>) -> Self {
        Self {
            kind: FeatureKind::Categorical,
            levels,
            ..Self::continuous(name, MonotoneDirection::Unconstrained)
        }
    }

    /// Whether `x` is a special value for this feature.
    pub fn is_special(&self, x: f64) -> bool {
        self.special_values.contains(&x) || self.lower_bound.is_some_and(|b| x <= b)
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.kind == FeatureKind::Categorical && self.monotone != MonotoneDirection::Unconstrained {
            return Err(DataError::Config(format!(
                "categorical feature `{}` cannot carry a monotone constraint",
                self.name
            )));
        }
        if let Some(bound) = self.lower_bound {
            if let Some(s) = self.special_values.iter().find(|&&s| s > bound) {
                return Err(DataError::Config(format!(
                    "feature `{}`: special value {s} lies above the special-value threshold {bound}",
                    self.name
                )));
            }
        }
        if self.special_values.iter().any(|s| !s.is_finite()) {
            return Err(DataError::Config(format!("feature `{}`: special values must be finite", self.name)));
        }
        Ok(())
    }
}

/// How label strings in a file map to the binary target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpec {
    pub column: String,
    pub positive: String,
    pub negative: Option<String>,
}

impl Default for LabelSpec {
    fn default() -> Self {
        Self { column: "label".into(), positive: "1".into(), negative: Some("0".into()) }
    }
}

/// A feature matrix with binary labels and per-column metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    features: Vec<FeatureMeta>,
    x: Array2<f64>,
    y: Vec<u8>,
    subscales: Subscales,
    label: LabelSpec,
}

impl Dataset {
    pub fn new(
        id: impl Into<String>,
        features: Vec<FeatureMeta>,
        x: Array2<f64>,
        y: Vec<u8>,
    ) -> Result<Self, DataError> {
        let ds = Self {
            id: id.into(),
            features,
            x,
            y,
            subscales: Vec::new(),
            label: LabelSpec::default(),
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Attaches a subscale partition. Every feature must belong to exactly
    /// one subscale; subscales must be non-empty.
    pub fn with_subscales(mut self, subscales: Subscales) -> Result<Self, DataError> {
        let mut seen: HashMap<&str, &str> = HashMap::new();
        for (name, members) in &subscales {
            if members.is_empty() {
                return Err(DataError::Config(format!("subscale `{name}` is empty")));
            }
            for m in members {
                if self.column_index(m).is_none() {
                    return Err(DataError::Config(format!("subscale `{name}` names unknown feature `{m}`")));
                }
                if let Some(prev) = seen.insert(m, name) {
                    return Err(DataError::Config(format!(
                        "feature `{m}` belongs to both subscale `{prev}` and `{name}`"
                    )));
                }
            }
        }
        if let Some(f) = self.features.iter().find(|f| f.origin.is_none() && !seen.contains_key(f.name.as_str())) {
            return Err(DataError::Config(format!("feature `{}` is not assigned to any subscale", f.name)));
        }
        for f in &mut self.features {
            if let Some(s) = seen.get(f.name.as_str()) {
                f.subscale = Some((*s).to_string());
            }
        }
        self.subscales = subscales;
        Ok(self)
    }

    pub fn with_label_spec(mut self, label: LabelSpec) -> Self {
        self.label = label;
        self
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.y.is_empty() {
            return Err(DataError::Empty);
        }
        if self.x.nrows() != self.y.len() {
            return Err(DataError::Invalid(format!(
                "{} feature rows but {} labels",
                self.x.nrows(),
                self.y.len()
            )));
        }
        if self.x.ncols() != self.features.len() {
            return Err(DataError::Invalid(format!(
                "{} columns but {} feature descriptions",
                self.x.ncols(),
                self.features.len()
            )));
        }
        if self.y.iter().any(|&v| v > 1) {
            return Err(DataError::Invalid("labels must be 0 or 1".into()));
        }
        let mut names = HashMap::new();
        for (i, f) in self.features.iter().enumerate() {
            if names.insert(f.name.as_str(), i).is_some() {
                return Err(DataError::Invalid(format!("duplicate feature name `{}`", f.name)));
            }
            f.validate()?;
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn features(&self) -> &[FeatureMeta] {
        &self.features
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureMeta> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    pub fn subscales(&self) -> &[(String, Vec<String>)] {
        &self.subscales
    }

    pub fn label_spec(&self) -> &LabelSpec {
        &self.label
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn column(&self, index: usize) -> ArrayView1<'_, f64> {
        self.x.column(index)
    }

    /// Rows at `indices`, in the given order.
    pub fn subset_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            id: self.id.clone(),
            features: self.features.clone(),
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            subscales: self.subscales.clone(),
            label: self.label.clone(),
        }
    }

    /// Only the named columns, in the given order. Subscale structure is
    /// dropped.
    pub fn select_features(&self, names: &[String]) -> Result<Dataset, DataError> {
        let idx = names
            .iter()
            .map(|n| self.column_index(n).ok_or_else(|| DataError::MissingColumn(n.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dataset {
            id: self.id.clone(),
            features: idx.iter().map(|&i| self.features[i].clone()).collect(),
            x: self.x.select(Axis(1), &idx),
            y: self.y.clone(),
            subscales: Vec::new(),
            label: self.label.clone(),
        })
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v == 1).count();
        (self.y.len() - pos, pos)
    }
}

/// Expands categorical levels and special values into 0/1 indicator columns.
///
/// Continuous columns pass through with their special values replaced by NaN
/// (marked `masked`); one indicator per listed special value is appended
/// after all pass-through columns, named `feature=value`. Categorical
/// columns become one indicator per level, `feature=level`. All engineered
/// columns are unconstrained. Indicator columns and masked columns are left
/// alone, so applying this twice is the same as applying it once.
pub fn preprocess(ds: &Dataset) -> Dataset {
    let m = ds.n_samples();
    let mut metas: Vec<FeatureMeta> = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut appended: Vec<(FeatureMeta, Vec<f64>)> = Vec::new();

    for (j, f) in ds.features.iter().enumerate() {
        let col = ds.x.column(j);
        match f.kind {
            FeatureKind::Indicator => {
                metas.push(f.clone());
                columns.push(col.to_vec());
            }
            FeatureKind::Continuous if f.masked => {
                metas.push(f.clone());
                columns.push(col.to_vec());
            }
            FeatureKind::Continuous => {
                let masked: Vec<f64> = col.iter().map(|&v| if f.is_special(v) { f64::NAN } else { v }).collect();
                let mut meta = f.clone();
                meta.masked = true;
                metas.push(meta);
                columns.push(masked);
                for &s in &f.special_values {
                    let ind = col.iter().map(|&v| if v == s { 1.0 } else { 0.0 }).collect();
                    appended.push((indicator_meta(f, format!("{}={}", f.name, s), IndicatorOf::Special(s)), ind));
                }
            }
            FeatureKind::Categorical => {
                for (lvl, name) in f.levels.iter().enumerate() {
                    let code = lvl as f64;
                    let ind = col.iter().map(|&v| if v == code { 1.0 } else { 0.0 }).collect();
                    metas.push(indicator_meta(f, format!("{}={}", f.name, name), IndicatorOf::Level(lvl)));
                    columns.push(ind);
                }
            }
        }
    }
    for (meta, col) in appended {
        metas.push(meta);
        columns.push(col);
    }

    let mut x = Array2::zeros((m, columns.len()));
    for (j, col) in columns.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            x[[i, j]] = v;
        }
    }
    Dataset {
        id: ds.id.clone(),
        features: metas,
        x,
        y: ds.y.clone(),
        subscales: ds.subscales.clone(),
        label: ds.label.clone(),
    }
}

fn indicator_meta(source: &FeatureMeta, name: String, marks: IndicatorOf) -> FeatureMeta {
    FeatureMeta {
        name,
        kind: FeatureKind::Indicator,
        monotone: MonotoneDirection::Unconstrained,
        special_values: Vec::new(),
        max_leaves: source.max_leaves,
        lower_bound: None,
        subscale: source.subscale.clone(),
        levels: Vec::new(),
        origin: Some(ColumnOrigin { source: source.name.clone(), marks }),
        masked: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn heloc_like() -> Dataset {
        let mut f = FeatureMeta::continuous("ExternalRiskEstimate", MonotoneDirection::Decreasing);
        f.special_values = vec![-7.0, -8.0, -9.0];
        f.lower_bound = Some(-0.5);
        let x = array![[60.0], [-9.0], [72.0], [-7.0]];
        Dataset::new("heloc", vec![f], x, vec![1, 0, 0, 1]).unwrap()
    }

    #[test]
    fn special_value_indicators() {
        let eng = preprocess(&heloc_like());
        let names: Vec<_> = eng.features().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(
            names,
            ["ExternalRiskEstimate", "ExternalRiskEstimate=-7", "ExternalRiskEstimate=-8", "ExternalRiskEstimate=-9"]
        );
        assert!(eng.x()[[1, 0]].is_nan());
        assert_eq!(eng.x()[[0, 0]], 60.0);
        assert_eq!(eng.column(3).to_vec(), vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(eng.column(1).to_vec(), vec![0.0, 0.0, 0.0, 1.0]);
        assert_eq!(eng.column(2).iter().sum::<f64>(), 0.0);
    }

    #[test]
    fn single_occurrence_special() {
        let mut f = FeatureMeta::continuous("a", MonotoneDirection::Increasing);
        f.special_values = vec![-9.0];
        let ds = Dataset::new("d", vec![f], array![[1.0], [2.0], [-9.0]], vec![0, 1, 1]).unwrap();
        let eng = preprocess(&ds);
        assert_eq!(eng.n_features(), 2);
        assert_eq!(eng.column(1).to_vec(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn plain_continuous_is_identity() {
        let f = FeatureMeta::continuous("a", MonotoneDirection::Increasing);
        let ds = Dataset::new("d", vec![f], array![[1.0], [2.0]], vec![0, 1]).unwrap();
        let eng = preprocess(&ds);
        assert_eq!(eng.x(), ds.x());
        assert_eq!(eng.features()[0].name, "a");
    }

    #[test]
    fn categorical_one_hot_and_idempotence() {
        let c = FeatureMeta::categorical("housing", vec!["own".into(), "rent".into(), "free".into()]);
        let ds = Dataset::new("d", vec![c], array![[0.0], [2.0], [1.0], [2.0]], vec![0, 1, 1, 0]).unwrap();
        let eng = preprocess(&ds);
        assert_eq!(eng.n_features(), 3);
        for row in eng.x().rows() {
            assert_eq!(row.sum(), 1.0);
        }
        assert_eq!(eng.features()[2].name, "housing=free");
        let twice = preprocess(&eng);
        assert_eq!(twice.features(), eng.features());
        let (a, b) = (twice.x(), eng.x());
        assert!(a.iter().zip(b).all(|(p, q)| p == q || (p.is_nan() && q.is_nan())));

        let twice = preprocess(&preprocess(&heloc_like()));
        assert_eq!(twice.n_features(), 4);
    }

    #[test]
    fn categorical_with_constraint_rejected() {
        let mut c = FeatureMeta::categorical("c", vec!["a".into()]);
        c.monotone = MonotoneDirection::Increasing;
        assert!(matches!(Dataset::new("d", vec![c], array![[0.0]], vec![1]), Err(DataError::Config(_))));
    }

    #[test]
    fn special_above_threshold_rejected() {
        let mut f = FeatureMeta::continuous("a", MonotoneDirection::Increasing);
        f.special_values = vec![3.0];
        f.lower_bound = Some(-0.5);
        assert!(Dataset::new("d", vec![f], array![[0.0]], vec![1]).is_err());
    }

    #[test]
    fn subscale_partition_checked() {
        let a = FeatureMeta::continuous("a", MonotoneDirection::Increasing);
        let b = FeatureMeta::continuous("b", MonotoneDirection::Increasing);
        let ds = Dataset::new("d", vec![a, b], array![[0.0, 1.0]], vec![1]).unwrap();
        assert!(ds.clone().with_subscales(vec![("s".into(), vec!["a".into()])]).is_err());
        assert!(ds
            .clone()
            .with_subscales(vec![("s".into(), vec!["a".into()]), ("t".into(), vec![])])
            .is_err());
        assert!(ds
            .clone()
            .with_subscales(vec![("s".into(), vec!["a".into(), "b".into()]), ("t".into(), vec!["b".into()])])
            .is_err());
        let ok = ds
            .with_subscales(vec![("s".into(), vec!["a".into()]), ("t".into(), vec!["b".into()])])
            .unwrap();
        assert_eq!(ok.feature("b").unwrap().subscale.as_deref(), Some("t"));
    }
}
