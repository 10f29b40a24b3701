use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Deserializer, Serialize};

use super::TrainError;

/// Sign constraint attached to a feature.
///
/// Deserialises from `"increasing" | "decreasing" | "unconstrained"` or the
/// integers `1 | -1 | 0`; always serialises as the lowercase name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MonotoneDirection {
    Increasing,
    Decreasing,
    #[default]
    Unconstrained,
}

impl MonotoneDirection {
    pub fn is_constrained(self) -> bool {
        self != Self::Unconstrained
    }

    /// Projects a coefficient onto the feasible half-line.
    pub fn project(self, beta: f64) -> f64 {
        match self {
            Self::Increasing => beta.max(0.0),
            Self::Decreasing => beta.min(0.0),
            Self::Unconstrained => beta,
        }
    }
}

impl fmt::Display for MonotoneDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Increasing => "increasing",
            Self::Decreasing => "decreasing",
            Self::Unconstrained => "unconstrained",
        })
    }
}

impl std::str::FromStr for MonotoneDirection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "increasing" | "1" | "+1" => Ok(Self::Increasing),
            "decreasing" | "-1" => Ok(Self::Decreasing),
            "unconstrained" | "0" | "none" => Ok(Self::Unconstrained),
            other => Err(format!("unknown monotone direction `{other}`")),
        }
    }
}

impl<'de> Deserialize<'de> for MonotoneDirection {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(1) => Ok(Self::Increasing),
            Raw::Int(-1) => Ok(Self::Decreasing),
            Raw::Int(0) => Ok(Self::Unconstrained),
            Raw::Int(other) => Err(serde::de::Error::custom(format!("monotone direction must be -1, 0 or 1, got {other}"))),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Which family of indicator columns a [`BinEncoding`] produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncodingKind {
    /// Column `j` is `1[x <= θ_j]`.
    LeftHalfIntervals,
    /// Column `j` is `1[x >= θ_j]`.
    RightHalfIntervals,
    /// Column `j` is `1[θ_j < x <= θ_{j+1}]`, with `θ_{L+1} = +inf`.
    TwoSidedOneHot,
}

impl EncodingKind {
    pub fn for_direction(direction: MonotoneDirection) -> Self {
        match direction {
            MonotoneDirection::Decreasing => Self::LeftHalfIntervals,
            MonotoneDirection::Increasing => Self::RightHalfIntervals,
            MonotoneDirection::Unconstrained => Self::TwoSidedOneHot,
        }
    }
}

/// Indicator encoding of one binned feature.
///
/// The threshold list carries the structural end points:
///
/// * decreasing: `θ_1 < … < θ_L = +inf`
/// * increasing: `θ_1 > … > θ_L = φ` (the special-value bound, `-inf` if none)
/// * unconstrained: `φ = θ_1 < … < θ_L`, intervals `(θ_j, θ_{j+1}]`
///
/// so every encoding has one column per bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEncoding {
    pub feature: String,
    pub direction: MonotoneDirection,
    pub kind: EncodingKind,
    thresholds: Vec<f64>,
}

impl BinEncoding {
    /// Builds an encoding from an explicit threshold list, checking it
    /// against the invariants above.
    pub fn new(feature: impl Into<String>, direction: MonotoneDirection, thresholds: Vec<f64>) -> Result<Self, TrainError> {
        let feature = feature.into();
        let bad = |why: &str| TrainError::InvalidEncoding(format!("feature `{feature}`: {why}"));
        if thresholds.is_empty() || thresholds.iter().any(|t| t.is_nan()) {
            return Err(bad("needs at least one non-NaN threshold"));
        }
        let ascending = thresholds.windows(2).all(|w| w[0] < w[1]);
        let descending = thresholds.windows(2).all(|w| w[0] > w[1]);
        let last = *thresholds.last().unwrap();
        match direction {
            MonotoneDirection::Decreasing => {
                if !ascending || last != f64::INFINITY {
                    return Err(bad("decreasing thresholds must increase and end at +inf"));
                }
            }
            MonotoneDirection::Increasing => {
                if !descending || last == f64::INFINITY || thresholds[..thresholds.len() - 1].iter().any(|t| !t.is_finite()) {
                    return Err(bad("increasing thresholds must decrease and end at the lower bound"));
                }
            }
            MonotoneDirection::Unconstrained => {
                if !ascending || thresholds[0] == f64::INFINITY || thresholds[1..].iter().any(|t| !t.is_finite()) {
                    return Err(bad("unconstrained thresholds must increase from the lower bound"));
                }
            }
        }
        Ok(Self { kind: EncodingKind::for_direction(direction), feature, direction, thresholds })
    }

    /// Builds the encoding for a feature split at `splits` (ascending, finite).
    pub fn from_splits(
        feature: impl Into<String>,
        direction: MonotoneDirection,
        splits: &[f64],
        lower_bound: Option<f64>,
    ) -> Result<Self, TrainError> {
        let phi = lower_bound.unwrap_or(f64::NEG_INFINITY);
        let thresholds = match direction {
            MonotoneDirection::Decreasing => splits.iter().copied().chain([f64::INFINITY]).collect(),
            MonotoneDirection::Increasing => splits.iter().rev().copied().chain([phi]).collect(),
            MonotoneDirection::Unconstrained => [phi].into_iter().chain(splits.iter().copied()).collect(),
        };
        Self::new(feature, direction, thresholds)
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// The interior split points, ascending.
    pub fn splits(&self) -> Vec<f64> {
        let n = self.thresholds.len();
        match self.direction {
            MonotoneDirection::Decreasing => self.thresholds[..n - 1].to_vec(),
            MonotoneDirection::Increasing => self.thresholds[..n - 1].iter().rev().copied().collect(),
            MonotoneDirection::Unconstrained => self.thresholds[1..].to_vec(),
        }
    }

    /// Lower bound φ, if finite.
    pub fn lower_bound(&self) -> Option<f64> {
        let phi = match self.direction {
            MonotoneDirection::Decreasing => return None,
            MonotoneDirection::Increasing => *self.thresholds.last().unwrap(),
            MonotoneDirection::Unconstrained => self.thresholds[0],
        };
        phi.is_finite().then_some(phi)
    }

    pub fn n_columns(&self) -> usize {
        self.thresholds.len()
    }

    /// Indicator `j` at `x`. NaN activates nothing.
    pub fn indicator(&self, j: usize, x: f64) -> bool {
        let t = &self.thresholds;
        match self.kind {
            EncodingKind::LeftHalfIntervals => x <= t[j],
            EncodingKind::RightHalfIntervals => x >= t[j],
            EncodingKind::TwoSidedOneHot => x > t[j] && t.get(j + 1).is_none_or(|&hi| x <= hi),
        }
    }

    /// One encoded row.
    pub fn encode(&self, x: f64) -> Vec<f64> {
        (0..self.n_columns()).map(|j| if self.indicator(j, x) { 1.0 } else { 0.0 }).collect()
    }

    /// Column names: `f<=θ`, `f>=θ` or `f in (a,b]`.
    pub fn column_names(&self) -> Vec<String> {
        let f = &self.feature;
        let t = &self.thresholds;
        (0..t.len())
            .map(|j| match self.kind {
                EncodingKind::LeftHalfIntervals => format!("{f}<={}", t[j]),
                EncodingKind::RightHalfIntervals => format!("{f}>={}", t[j]),
                EncodingKind::TwoSidedOneHot => {
                    let hi = t.get(j + 1).copied().unwrap_or(f64::INFINITY);
                    format!("{f} in ({},{hi}]", t[j])
                }
            })
            .collect()
    }

    /// Index of the column that is identically one on every value above
    /// the lower bound, if the encoding has one.
    pub fn always_on_column(&self) -> Option<usize> {
        match self.kind {
            EncodingKind::TwoSidedOneHot => None,
            _ => Some(self.n_columns() - 1),
        }
    }
}

/// Encodes each value as one row of 0/1 indicators.
pub fn encode_monotone(values: &[f64], encoding: &BinEncoding) -> Array2<f64> {
    let mut out = Array2::zeros((values.len(), encoding.n_columns()));
    for (i, &x) in values.iter().enumerate() {
        for j in 0..encoding.n_columns() {
            if encoding.indicator(j, x) {
                out[[i, j]] = 1.0;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decreasing_examples() {
        let enc = BinEncoding::new("f", MonotoneDirection::Decreasing, vec![2.0, f64::INFINITY]).unwrap();
        assert_eq!(enc.encode(1.0), vec![1.0, 1.0]);
        assert_eq!(enc.encode(3.0), vec![0.0, 1.0]);
        assert_eq!(enc.encode(2.0), vec![1.0, 1.0]);
        assert_eq!(enc.column_names(), vec!["f<=2", "f<=inf"]);
    }

    #[test]
    fn increasing_uses_closed_lower_ends() {
        let enc = BinEncoding::from_splits("f", MonotoneDirection::Increasing, &[1.0, 4.0], Some(0.0)).unwrap();
        assert_eq!(enc.thresholds(), &[4.0, 1.0, 0.0]);
        assert_eq!(enc.encode(4.0), vec![1.0, 1.0, 1.0]);
        assert_eq!(enc.encode(3.9), vec![0.0, 1.0, 1.0]);
        assert_eq!(enc.encode(0.5), vec![0.0, 0.0, 1.0]);
        assert_eq!(enc.splits(), vec![1.0, 4.0]);
        assert_eq!(enc.lower_bound(), Some(0.0));
    }

    #[test]
    fn invalid_threshold_lists_rejected() {
        assert!(BinEncoding::new("f", MonotoneDirection::Decreasing, vec![2.0, 1.0, f64::INFINITY]).is_err());
        assert!(BinEncoding::new("f", MonotoneDirection::Decreasing, vec![1.0, 2.0]).is_err());
        assert!(BinEncoding::new("f", MonotoneDirection::Increasing, vec![1.0, 2.0]).is_err());
        assert!(BinEncoding::new("f", MonotoneDirection::Unconstrained, vec![]).is_err());
    }

    #[test]
    fn nan_encodes_to_zero_row() {
        for dir in [MonotoneDirection::Decreasing, MonotoneDirection::Increasing, MonotoneDirection::Unconstrained] {
            let enc = BinEncoding::from_splits("f", dir, &[0.0, 1.0], None).unwrap();
            assert!(enc.encode(f64::NAN).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn direction_parsing() {
        let d: MonotoneDirection = serde_json::from_str("-1").unwrap();
        assert_eq!(d, MonotoneDirection::Decreasing);
        let d: MonotoneDirection = serde_json::from_str("\"Increasing\"").unwrap();
        assert_eq!(d, MonotoneDirection::Increasing);
        assert!(serde_json::from_str::<MonotoneDirection>("2").is_err());
        assert_eq!(serde_json::to_string(&MonotoneDirection::Unconstrained).unwrap(), "\"unconstrained\"");
    }

    proptest! {
        #[test]
        fn one_hot_rows_sum_to_one(
            mut splits in proptest::collection::vec(-50.0f64..50.0, 0..6),
            x in -100.0f64..100.0,
            phi in proptest::option::of(-200.0f64..-100.0),
        ) {
            splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
            splits.dedup();
            let enc = BinEncoding::from_splits("f", MonotoneDirection::Unconstrained, &splits, phi).unwrap();
            let row = enc.encode(x);
            prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
        }

        #[test]
        fn half_interval_rows_are_nested(
            mut splits in proptest::collection::vec(-50.0f64..50.0, 0..6),
            x in -100.0f64..100.0,
        ) {
            splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
            splits.dedup();
            for dir in [MonotoneDirection::Decreasing, MonotoneDirection::Increasing] {
                let enc = BinEncoding::from_splits("f", dir, &splits, None).unwrap();
                let row = enc.encode(x);
                // once a column switches on, every later column is on
                let first = row.iter().position(|&v| v == 1.0).unwrap();
                prop_assert!(row[first..].iter().all(|&v| v == 1.0));
                prop_assert_eq!(*row.last().unwrap(), 1.0);
            }
        }
    }
}
