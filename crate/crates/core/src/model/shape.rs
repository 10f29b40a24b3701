use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::train::{BinEncoding, EncodingKind};

/// Which end of each piece is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Pieces `(-inf, t1), [t1, t2), …, [tn, inf)`.
    LeftClosed,
    /// Pieces `(-inf, t1], (t1, t2], …, (tn, inf)`.
    RightClosed,
}

/// Step function with `n` finite thresholds and `n + 1` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    thresholds: Vec<f64>,
    values: Vec<f64>,
    orientation: Orientation,
}

impl PiecewiseConstant {
    pub fn new(thresholds: Vec<f64>, values: Vec<f64>, orientation: Orientation) -> Result<Self, ModelError> {
        let pc = Self { thresholds, values, orientation };
        pc.validate()?;
        Ok(pc)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.values.len() != self.thresholds.len() + 1 {
            return Err(ModelError::InvalidShape(format!(
                "{} thresholds need {} values, got {}",
                self.thresholds.len(),
                self.thresholds.len() + 1,
                self.values.len()
            )));
        }
        if self.thresholds.iter().any(|t| !t.is_finite()) || !self.thresholds.windows(2).all(|w| w[0] < w[1]) {
            return Err(ModelError::InvalidShape("thresholds must be finite and strictly increasing".into()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidShape("piece values must be finite".into()));
        }
        Ok(())
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Index of the piece containing `x`.
    pub fn piece(&self, x: f64) -> usize {
        match self.orientation {
            Orientation::RightClosed => self.thresholds.partition_point(|&t| t < x),
            Orientation::LeftClosed => self.thresholds.partition_point(|&t| t <= x),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.piece(x)]
    }
}

/// A fixed-level lookup for categorical features. Inputs are level codes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalShape {
    levels: Vec<String>,
    values: Vec<f64>,
}

impl CategoricalShape {
    pub fn new(levels: Vec<String>, values: Vec<f64>) -> Result<Self, ModelError> {
        let c = Self { levels, values };
        c.validate()?;
        Ok(c)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.levels.len() != self.values.len() {
            return Err(ModelError::InvalidShape(format!(
                "{} levels but {} values",
                self.levels.len(),
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidShape("level values must be finite".into()));
        }
        Ok(())
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_of(&self, level: &str) -> Option<f64> {
        self.levels.iter().position(|l| l == level).map(|i| self.values[i])
    }

    fn eval_code(&self, code: f64) -> Option<f64> {
        if code >= 0.0 && code.fract() == 0.0 {
            self.values.get(code as usize).copied()
        } else {
            None
        }
    }
}

/// Weighted sum of the indicator columns of a [`BinEncoding`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSet {
    pub encoding: BinEncoding,
    weights: Vec<f64>,
}

impl IndicatorSet {
    pub fn new(encoding: BinEncoding, weights: Vec<f64>) -> Result<Self, ModelError> {
        let s = Self { encoding, weights };
        s.validate()?;
        Ok(s)
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if self.weights.len() != self.encoding.n_columns() {
            return Err(ModelError::InvalidShape(format!(
                "{} weights for {} indicator columns",
                self.weights.len(),
                self.encoding.n_columns()
            )));
        }
        if self.weights.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidShape("indicator weights must be finite".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sum of the weights of the active columns, in column order.
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (j, w) in self.weights.iter().enumerate() {
            if self.encoding.indicator(j, x) {
                acc += w;
            }
        }
        acc
    }

    /// The same function as a step function over the interior splits.
    ///
    /// Piece values are produced by [`IndicatorSet::eval`] at a point inside
    /// each piece, so both forms agree bit-for-bit above the lower bound.
    pub fn to_piecewise(&self) -> PiecewiseConstant {
        let splits = self.encoding.splits();
        let orientation = match self.encoding.kind {
            EncodingKind::RightHalfIntervals => Orientation::LeftClosed,
            _ => Orientation::RightClosed,
        };
        let n = splits.len();
        let reps: Vec<f64> = (0..=n)
            .map(|k| match (orientation, n) {
                (_, 0) => f64::MAX,
                (Orientation::RightClosed, _) if k < n => splits[k],
                (Orientation::RightClosed, _) => splits[n - 1].next_up(),
                (Orientation::LeftClosed, _) if k == 0 => splits[0].next_down(),
                (Orientation::LeftClosed, _) => splits[k - 1],
            })
            .collect();
        let values = reps.iter().map(|&x| self.eval(x)).collect();
        PiecewiseConstant { thresholds: splits, values, orientation }
    }
}

/// Univariate transform applied to one feature before its coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeFunction {
    Identity,
    PiecewiseConstant(PiecewiseConstant),
    IndicatorSet(IndicatorSet),
    Categorical(CategoricalShape),
}

impl ShapeFunction {
    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        match self {
            Self::Identity => Ok(()),
            Self::PiecewiseConstant(p) => p.validate(),
            Self::IndicatorSet(s) => s.validate(),
            Self::Categorical(c) => c.validate(),
        }
    }

    /// Shape value at `x`; for categorical shapes `x` is a level code.
    pub fn eval(&self, x: f64) -> Option<f64> {
        match self {
            Self::Identity => Some(x),
            Self::PiecewiseConstant(p) => Some(p.eval(x)),
            Self::IndicatorSet(s) => Some(s.eval(x)),
            Self::Categorical(c) => c.eval_code(x),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }
}

/// Fixed logit contributions for special values of a feature.
///
/// A value is special if it is listed in `outputs` or lies at or below
/// `cut`. Listed values contribute their output; other values at or below
/// the cut contribute zero. The coefficient does not apply.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SpecialValues {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<(f64, f64)>,
}

impl SpecialValues {
    pub fn is_empty(&self) -> bool {
        self.cut.is_none() && self.outputs.is_empty()
    }

    /// `Some(output)` if `x` is special.
    pub fn lookup(&self, x: f64) -> Option<f64> {
        if let Some(&(_, out)) = self.outputs.iter().find(|(v, _)| *v == x) {
            return Some(out);
        }
        self.cut.filter(|&c| x <= c).map(|_| 0.0)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.cut.is_some_and(|c| c.is_nan())
            || self.outputs.iter().any(|(v, o)| !v.is_finite() || !o.is_finite())
        {
            return Err(ModelError::InvalidShape("special values and outputs must be finite".into()));
        }
        Ok(())
    }
}

/// One additive term `coefficient * shape(x)`, with special values
/// short-circuiting to fixed contributions. All quantities are in logit
/// units.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub feature: String,
    pub coefficient: f64,
    pub shape: ShapeFunction,
    pub specials: SpecialValues,
}

impl Term {
    pub fn new(feature: impl Into<String>, coefficient: f64, shape: ShapeFunction) -> Self {
        Self { feature: feature.into(), coefficient, shape, specials: SpecialValues::default() }
    }

    pub fn identity(feature: impl Into<String>, coefficient: f64) -> Self {
        Self::new(feature, coefficient, ShapeFunction::Identity)
    }

    pub fn with_specials(mut self, specials: SpecialValues) -> Self {
        self.specials = specials;
        self
    }

    pub(crate) fn validate(&self) -> Result<(), ModelError> {
        if !self.coefficient.is_finite() {
            return Err(ModelError::InvalidShape(format!("coefficient of `{}` is not finite", self.feature)));
        }
        self.shape.validate()?;
        self.specials.validate()
    }

    /// Contribution to the logit at feature value `x`.
    pub fn contribution(&self, x: f64) -> Result<f64, ModelError> {
        if !x.is_finite() {
            return Err(ModelError::NonFiniteFeature { feature: self.feature.clone(), value: x });
        }
        if let Some(out) = self.specials.lookup(x) {
            return Ok(out);
        }
        let s = self.shape.eval(x).ok_or_else(|| ModelError::UnknownLevel {
            feature: self.feature.clone(),
            level: x.to_string(),
        })?;
        Ok(self.coefficient * s)
    }
}
