//! Logistic additive models, their linearised counterparts, and two-layer
//! stacks of them.
//!
//! Every model stores its parameters in logit units. A linearised model
//! differs only in its link: the score `z` is mapped through the clipped
//! line `clip(1/2 + z / (2 α*))` instead of the sigmoid. The link-scale
//! parameters `1/2 + β₀/(2α*)` and `βᵢ/(2α*)` are available through
//! [`AdditiveModel::bias`] and [`AdditiveModel::coefficient`].

mod document;
mod shape;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approx::{sigmoid, PiecewiseLinearSigmoid, ALPHA_STAR};
use crate::data::{Dataset, FeatureKind};

pub use document::{from_json, to_json, DOCUMENT_VERSION};
pub use shape::{CategoricalShape, IndicatorSet, Orientation, PiecewiseConstant, ShapeFunction, SpecialValues, Term};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("input is missing feature `{0}`")]
    MissingFeature(String),
    #[error("feature `{0}` appears in more than one term")]
    DuplicateFeature(String),
    #[error("feature `{feature}` has non-finite value {value}")]
    NonFiniteFeature { feature: String, value: f64 },
    #[error("feature `{feature}`: level `{level}` is not known to the model")]
    UnknownLevel { feature: String, level: String },
    #[error("model is already linearised")]
    AlreadyLinearised,
    #[error("unit effects are defined only for linearised models")]
    NotLinearised,
    #[error("feature `{0}` is not an identity term; its unit effect is undefined")]
    NonIdentityShape(String),
    #[error("model has no term for feature `{0}`")]
    UnknownTerm(String),
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid two-layer model: {0}")]
    InvalidStack(String),
    #[error("unsupported model document version {0}")]
    Version(u64),
    #[error("malformed model document: {0}")]
    Malformed(String),
}

/// Output link of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Link {
    /// `σ(z)`.
    Logistic,
    /// `clip(1/2 + z / (2 α*))`.
    Linearised,
}

impl Link {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Self::Logistic => sigmoid(z),
            Self::Linearised => PiecewiseLinearSigmoid::optimal().eval(z),
        }
    }
}

/// Named feature values for single-row prediction.
pub trait FeatureSource {
    fn value(&self, feature: &str) -> Option<f64>;
}

impl FeatureSource for HashMap<String, f64> {
    fn value(&self, feature: &str) -> Option<f64> {
        self.get(feature).copied()
    }
}

impl FeatureSource for HashMap<&str, f64> {
    fn value(&self, feature: &str) -> Option<f64> {
        self.get(feature).copied()
    }
}

impl FeatureSource for BTreeMap<String, f64> {
    fn value(&self, feature: &str) -> Option<f64> {
        self.get(feature).copied()
    }
}

impl FeatureSource for [(&str, f64)] {
    fn value(&self, feature: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == feature).map(|p| p.1)
    }
}

impl<const N: usize> FeatureSource for [(&str, f64); N] {
    fn value(&self, feature: &str) -> Option<f64> {
        self.as_slice().value(feature)
    }
}

/// `β₀ + Σ βᵢ fᵢ(xᵢ)` under a logistic or linearised link.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveModel {
    bias: f64,
    terms: Vec<Term>,
    link: Link,
}

impl AdditiveModel {
    /// A logistic model from logit-scale parameters.
    pub fn logistic(bias: f64, terms: Vec<Term>) -> Result<Self, ModelError> {
        Self::with_link(bias, terms, Link::Logistic)
    }

    /// A model with the given link; `bias` and term coefficients are in
    /// logit units regardless of the link.
    pub fn with_link(bias: f64, terms: Vec<Term>, link: Link) -> Result<Self, ModelError> {
        if !bias.is_finite() {
            return Err(ModelError::InvalidShape("bias is not finite".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if !seen.insert(t.feature.as_str()) {
                return Err(ModelError::DuplicateFeature(t.feature.clone()));
            }
            t.validate()?;
        }
        Ok(Self { bias, terms, link })
    }

    pub fn link(&self) -> Link {
        self.link
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(&self, feature: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.feature == feature)
    }

    pub fn features(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(|t| t.feature.as_str())
    }

    pub fn logit_bias(&self) -> f64 {
        self.bias
    }

    /// Bias on the link scale: `β₀` for logistic models, `1/2 + β₀/(2α*)`
    /// for linearised ones.
    pub fn bias(&self) -> f64 {
        match self.link {
            Link::Logistic => self.bias,
            Link::Linearised => 0.5 + self.bias / (2.0 * ALPHA_STAR),
        }
    }

    /// Coefficient on the link scale: `βᵢ` or `βᵢ/(2α*)`.
    pub fn coefficient(&self, feature: &str) -> Option<f64> {
        self.term(feature).map(|t| match self.link {
            Link::Logistic => t.coefficient,
            Link::Linearised => t.coefficient / (2.0 * ALPHA_STAR),
        })
    }

    /// `β₀ + Σ βᵢ fᵢ(xᵢ)`, independent of the link.
    pub fn logit_score<S: FeatureSource + ?Sized>(&self, x: &S) -> Result<f64, ModelError> {
        let mut z = self.bias;
        for t in &self.terms {
            let v = x.value(&t.feature).ok_or_else(|| ModelError::MissingFeature(t.feature.clone()))?;
            z += t.contribution(v)?;
        }
        Ok(z)
    }

    pub fn predict<S: FeatureSource + ?Sized>(&self, x: &S) -> Result<f64, ModelError> {
        Ok(self.link.apply(self.logit_score(x)?))
    }

    /// Logit scores for every row of `ds`. Categorical level codes are
    /// matched to the model's levels by name.
    pub fn logit_scores(&self, ds: &Dataset) -> Result<Vec<f64>, ModelError> {
        let bound = self.bind(ds)?;
        let mut out = vec![self.bias; ds.n_samples()];
        for (term, (col, remap)) in self.terms.iter().zip(&bound) {
            let column = ds.column(*col);
            for (acc, &raw) in out.iter_mut().zip(column.iter()) {
                let v = match remap {
                    Some(map) => map.get(raw as usize).copied().flatten().ok_or_else(|| ModelError::UnknownLevel {
                        feature: term.feature.clone(),
                        level: ds.features()[*col].levels.get(raw as usize).cloned().unwrap_or_else(|| raw.to_string()),
                    })?,
                    None => raw,
                };
                *acc += term.contribution(v)?;
            }
        }
        Ok(out)
    }

    /// Predictions for every row of `ds`.
    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>, ModelError> {
        Ok(self.logit_scores(ds)?.into_iter().map(|z| self.link.apply(z)).collect())
    }

    /// Column index per term, with a dataset-code to model-code table for
    /// categorical terms.
    #[allow(clippy::type_complexity)]
    fn bind(&self, ds: &Dataset) -> Result<Vec<(usize, Option<Vec<Option<f64>>>)>, ModelError> {
        self.terms
            .iter()
            .map(|t| {
                let col = ds.column_index(&t.feature).ok_or_else(|| ModelError::MissingFeature(t.feature.clone()))?;
                let meta = &ds.features()[col];
                let remap = match (&t.shape, meta.kind) {
                    (ShapeFunction::Categorical(c), FeatureKind::Categorical) => Some(
                        meta.levels
                            .iter()
                            .map(|l| c.levels().iter().position(|m| m == l).map(|i| i as f64))
                            .collect(),
                    ),
                    _ => None,
                };
                Ok((col, remap))
            })
            .collect()
    }

    /// The same model under the linearised link. No data is needed: the
    /// logit-scale parameters carry over unchanged.
    pub fn linearise(&self) -> Result<Self, ModelError> {
        if self.link == Link::Linearised {
            return Err(ModelError::AlreadyLinearised);
        }
        Ok(Self { link: Link::Linearised, ..self.clone() })
    }

    /// Change in predicted probability per unit increase of an identity
    /// feature, absent clipping: `βᵢ / (2α*)`.
    pub fn unit_effect(&self, feature: &str) -> Result<f64, ModelError> {
        if self.link != Link::Linearised {
            return Err(ModelError::NotLinearised);
        }
        let t = self.term(feature).ok_or_else(|| ModelError::UnknownTerm(feature.to_string()))?;
        if !t.shape.is_identity() {
            return Err(ModelError::NonIdentityShape(feature.to_string()));
        }
        Ok(t.coefficient / (2.0 * ALPHA_STAR))
    }
}

/// One named first-layer model of a [`TwoLayerModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Subscale {
    pub name: String,
    pub model: AdditiveModel,
}

/// Per-subscale additive models whose predicted probabilities feed a
/// combiner with nonnegative identity terms.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLayerModel {
    subscales: Vec<Subscale>,
    combiner: AdditiveModel,
}

impl TwoLayerModel {
    /// Checks that subscale names are unique, their feature sets are
    /// disjoint, the combiner has one identity term with coefficient `>= 0`
    /// per subscale, and all links agree.
    pub fn new(subscales: Vec<Subscale>, combiner: AdditiveModel) -> Result<Self, ModelError> {
        let bad = |m: String| Err(ModelError::InvalidStack(m));
        if subscales.is_empty() {
            return bad("no subscales".into());
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for s in &subscales {
            if subscales.iter().filter(|o| o.name == s.name).count() > 1 {
                return bad(format!("duplicate subscale `{}`", s.name));
            }
            if s.model.link != combiner.link {
                return bad(format!("subscale `{}` has a different link from the combiner", s.name));
            }
            for f in s.model.features() {
                if let Some(prev) = owner.insert(f, &s.name) {
                    return bad(format!("feature `{f}` appears in subscales `{prev}` and `{}`", s.name));
                }
            }
        }
        for t in combiner.terms() {
            if !subscales.iter().any(|s| s.name == t.feature) {
                return bad(format!("combiner term `{}` names no subscale", t.feature));
            }
            if !t.shape.is_identity() || !t.specials.is_empty() {
                return bad(format!("combiner term `{}` must be a plain identity term", t.feature));
            }
            if t.coefficient < 0.0 {
                return bad(format!("combiner coefficient for `{}` is negative ({})", t.feature, t.coefficient));
            }
        }
        Ok(Self { subscales, combiner })
    }

    pub fn subscales(&self) -> &[Subscale] {
        &self.subscales
    }

    pub fn combiner(&self) -> &AdditiveModel {
        &self.combiner
    }

    pub fn link(&self) -> Link {
        self.combiner.link
    }

    /// Predicted probability of every subscale, in subscale order.
    pub fn subscale_outputs<S: FeatureSource + ?Sized>(&self, x: &S) -> Result<Vec<(String, f64)>, ModelError> {
        self.subscales.iter().map(|s| Ok((s.name.clone(), s.model.predict(x)?))).collect()
    }

    /// Combiner logit with the subscale outputs as its inputs.
    pub fn logit_score<S: FeatureSource + ?Sized>(&self, x: &S) -> Result<f64, ModelError> {
        let inputs: HashMap<String, f64> = self.subscale_outputs(x)?.into_iter().collect();
        self.combiner.logit_score(&inputs)
    }

    pub fn predict<S: FeatureSource + ?Sized>(&self, x: &S) -> Result<f64, ModelError> {
        Ok(self.link().apply(self.logit_score(x)?))
    }

    pub fn logit_scores(&self, ds: &Dataset) -> Result<Vec<f64>, ModelError> {
        let outputs: Vec<(String, Vec<f64>)> = self
            .subscales
            .iter()
            .map(|s| Ok((s.name.clone(), s.model.predict_dataset(ds)?)))
            .collect::<Result<_, ModelError>>()?;
        let mut z = vec![self.combiner.bias; ds.n_samples()];
        for t in &self.combiner.terms {
            let (_, col) = outputs.iter().find(|(n, _)| *n == t.feature).expect("validated in new");
            for (acc, &v) in z.iter_mut().zip(col) {
                *acc += t.contribution(v)?;
            }
        }
        Ok(z)
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>, ModelError> {
        Ok(self.logit_scores(ds)?.into_iter().map(|z| self.link().apply(z)).collect())
    }

    /// Linearises every subscale model and the combiner. The combiner keeps
    /// the coefficients it was fitted with against logistic subscale
    /// outputs; at prediction time it receives the linearised outputs.
    pub fn linearise(&self) -> Result<Self, ModelError> {
        let subscales = self
            .subscales
            .iter()
            .map(|s| Ok(Subscale { name: s.name.clone(), model: s.model.linearise()? }))
            .collect::<Result<Vec<_>, ModelError>>()?;
        Ok(Self { subscales, combiner: self.combiner.linearise()? })
    }
}

/// Either model shape, for code that handles both.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Additive(AdditiveModel),
    TwoLayer(TwoLayerModel),
}

impl Model {
    pub fn link(&self) -> Link {
        match self {
            Self::Additive(m) => m.link(),
            Self::TwoLayer(m) => m.link(),
        }
    }

    pub fn logit_score<S: FeatureSource + ?Sized>(&self, x: &S) -> Result<f64, ModelError> {
        match self {
            Self::Additive(m) => m.logit_score(x),
            Self::TwoLayer(m) => m.logit_score(x),
        }
    }

    pub fn predict<S: FeatureSource + ?Sized>(&self, x: &S) -> Result<f64, ModelError> {
        match self {
            Self::Additive(m) => m.predict(x),
            Self::TwoLayer(m) => m.predict(x),
        }
    }

    pub fn logit_scores(&self, ds: &Dataset) -> Result<Vec<f64>, ModelError> {
        match self {
            Self::Additive(m) => m.logit_scores(ds),
            Self::TwoLayer(m) => m.logit_scores(ds),
        }
    }

    pub fn predict_dataset(&self, ds: &Dataset) -> Result<Vec<f64>, ModelError> {
        match self {
            Self::Additive(m) => m.predict_dataset(ds),
            Self::TwoLayer(m) => m.predict_dataset(ds),
        }
    }

    pub fn linearise(&self) -> Result<Self, ModelError> {
        Ok(match self {
            Self::Additive(m) => Self::Additive(m.linearise()?),
            Self::TwoLayer(m) => Self::TwoLayer(m.linearise()?),
        })
    }

    /// Input features the model reads, in term order.
    pub fn input_features(&self) -> Vec<String> {
        match self {
            Self::Additive(m) => m.features().map(String::from).collect(),
            Self::TwoLayer(m) => m.subscales.iter().flat_map(|s| s.model.features().map(String::from)).collect(),
        }
    }
}

impl From<AdditiveModel> for Model {
    fn from(m: AdditiveModel) -> Self {
        Self::Additive(m)
    }
}

impl From<TwoLayerModel> for Model {
    fn from(m: TwoLayerModel) -> Self {
        Self::TwoLayer(m)
    }
}

/// Linearised copy of `model`; see [`AdditiveModel::linearise`].
pub fn linearise(model: &AdditiveModel) -> Result<AdditiveModel, ModelError> {
    model.linearise()
}

/// Linearised copy of both layers; see [`TwoLayerModel::linearise`].
pub fn linearise_two_layer(model: &TwoLayerModel) -> Result<TwoLayerModel, ModelError> {
    model.linearise()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{clip_unit, pl_sigmoid};
    use proptest::prelude::*;

    const LOGIT_TENTH: f64 = -2.197_224_577_336_219_6; // ln(0.1 / 0.9)

    fn motivating() -> AdditiveModel {
        AdditiveModel::logistic(LOGIT_TENTH, vec![Term::identity("late_payment", 1.61)]).unwrap()
    }

    #[test]
    fn logit_score_examples() {
        let m = AdditiveModel::logistic(0.0, vec![Term::identity("x", 1.0)]).unwrap();
        assert_eq!(m.logit_score(&[("x", 0.7)]).unwrap(), 0.7);
        let c = AdditiveModel::logistic(-2.19722, vec![]).unwrap();
        assert_eq!(c.logit_score(&[("x", 1.0)]).unwrap(), -2.19722);
        let z = AdditiveModel::logistic(-2.19722, vec![Term::identity("x", 1.61)]).unwrap();
        assert!((z.logit_score(&[("x", 1.0)]).unwrap() - -0.58722).abs() < 1e-12);
        match m.logit_score(&[("y", 1.0)]) {
            Err(ModelError::MissingFeature(f)) => assert_eq!(f, "x"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn predict_examples() {
        let m = motivating();
        let p = m.predict(&[("late_payment", 0.0)]).unwrap();
        assert!((p - 0.1).abs() < 1e-15);
        let lam = m.linearise().unwrap();
        let q = lam.predict(&[("late_payment", 0.0)]).unwrap();
        assert!((q - (0.5 - 2.197_224_577_336_219_6 / (2.0 * ALPHA_STAR))).abs() < 1e-15);
        assert!((q - 0.077_405_05).abs() < 1e-8);
        // a pre-clip score of 1.2 on the probability scale clips to 1
        let z = (1.2 - 0.5) * 2.0 * ALPHA_STAR;
        let hi = AdditiveModel::with_link(z, vec![], Link::Linearised).unwrap();
        assert!((hi.bias() - 1.2).abs() < 1e-15);
        assert_eq!(hi.predict(&[("x", 0.0)]).unwrap(), 1.0);
    }

    #[test]
    fn linearise_rescales_and_rejects_twice() {
        let m = AdditiveModel::logistic(0.0, vec![Term::identity("x", 1.61)]).unwrap();
        let lam = m.linearise().unwrap();
        assert!((lam.coefficient("x").unwrap() - 0.30966).abs() < 1e-5);
        assert!((lam.unit_effect("x").unwrap() - 0.310).abs() < 1e-3);
        assert_eq!(m.link(), Link::Logistic);
        assert_eq!(m.coefficient("x"), Some(1.61));
        assert!(matches!(lam.linearise(), Err(ModelError::AlreadyLinearised)));
        let zero = AdditiveModel::logistic(0.0, vec![]).unwrap().linearise().unwrap();
        assert_eq!(zero.predict(&[("x", 3.0)]).unwrap(), 0.5);
        assert_eq!(zero.bias(), 0.5);
    }

    #[test]
    fn unit_effect_examples() {
        let eff = |b: f64| {
            AdditiveModel::logistic(0.0, vec![Term::identity("x", b)]).unwrap().linearise().unwrap().unit_effect("x").unwrap()
        };
        assert_eq!(eff(0.0), 0.0);
        assert_eq!(eff(-2.0 * ALPHA_STAR), -1.0);
        let pc = PiecewiseConstant::new(vec![0.0], vec![0.0, 1.0], Orientation::LeftClosed).unwrap();
        let m = AdditiveModel::logistic(0.0, vec![Term::new("s", 1.0, ShapeFunction::PiecewiseConstant(pc))]).unwrap();
        let lam = m.linearise().unwrap();
        assert!(matches!(lam.unit_effect("s"), Err(ModelError::NonIdentityShape(_))));
        assert!(matches!(m.unit_effect("s"), Err(ModelError::NotLinearised)));
    }

    #[test]
    fn duplicate_terms_rejected() {
        let r = AdditiveModel::logistic(0.0, vec![Term::identity("x", 1.0), Term::identity("x", 2.0)]);
        assert!(matches!(r, Err(ModelError::DuplicateFeature(_))));
    }

    fn one_feature_stack(bs: f64, beta: f64, b0: f64, combiner_bias: f64) -> TwoLayerModel {
        let sub = AdditiveModel::logistic(b0, vec![Term::identity("x", beta)]).unwrap();
        let comb = AdditiveModel::logistic(combiner_bias, vec![Term::identity("s", bs)]).unwrap();
        TwoLayerModel::new(vec![Subscale { name: "s".into(), model: sub }], comb).unwrap()
    }

    #[test]
    fn cascaded_zero_stack() {
        let sub = AdditiveModel::logistic(0.0, vec![]).unwrap();
        let comb = AdditiveModel::logistic(0.0, vec![Term::identity("s", 0.0)]).unwrap();
        let m = TwoLayerModel::new(vec![Subscale { name: "s".into(), model: sub }], comb).unwrap();
        let lam = linearise_two_layer(&m).unwrap();
        assert_eq!(lam.predict(&[("x", 1.0)]).unwrap(), 0.5);
    }

    #[test]
    fn linearised_stack_composes_clipped_lines() {
        let m = one_feature_stack(1.5, 0.8, -0.2, -0.6);
        let lam = m.linearise().unwrap();
        for x in [-2.0, -0.5, 0.0, 0.4, 1.9] {
            let inner = pl_sigmoid(-0.2 + 0.8 * x, ALPHA_STAR).unwrap();
            let want = pl_sigmoid(-0.6 + 1.5 * inner, ALPHA_STAR).unwrap();
            assert_eq!(lam.predict(&[("x", x)]).unwrap(), want);
            // by hand on the probability scale
            let p1 = clip_unit(0.5 + (-0.2 + 0.8 * x) / (2.0 * ALPHA_STAR));
            let p2 = clip_unit(0.5 + (-0.6 + 1.5 * p1) / (2.0 * ALPHA_STAR));
            assert!((lam.predict(&[("x", x)]).unwrap() - p2).abs() < 1e-15);
        }
        assert!(m.linearise().unwrap().linearise().is_err());
    }

    #[test]
    fn stack_validation() {
        let sub = AdditiveModel::logistic(0.0, vec![Term::identity("x", 1.0)]).unwrap();
        let neg = AdditiveModel::logistic(0.0, vec![Term::identity("s", -1.0)]).unwrap();
        let sub_s = || vec![Subscale { name: "s".into(), model: sub.clone() }];
        assert!(TwoLayerModel::new(sub_s(), neg).is_err());
        let unknown = AdditiveModel::logistic(0.0, vec![Term::identity("t", 1.0)]).unwrap();
        assert!(TwoLayerModel::new(sub_s(), unknown).is_err());
        let lam = AdditiveModel::logistic(0.0, vec![]).unwrap().linearise().unwrap();
        assert!(TwoLayerModel::new(sub_s(), lam).is_err());
        let two = vec![
            Subscale { name: "s".into(), model: sub.clone() },
            Subscale { name: "t".into(), model: sub.clone() },
        ];
        assert!(TwoLayerModel::new(two, AdditiveModel::logistic(0.0, vec![]).unwrap()).is_err());
    }

    fn arb_model() -> impl Strategy<Value = AdditiveModel> {
        (-8.0f64..8.0, proptest::collection::vec(-4.0f64..4.0, 1..5)).prop_map(|(b, cs)| {
            let terms = cs.iter().enumerate().map(|(i, &c)| Term::identity(format!("x{i}"), c)).collect();
            AdditiveModel::logistic(b, terms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn link_equivalence(m in arb_model(), xs in proptest::collection::vec(-5.0f64..5.0, 5)) {
            let input: HashMap<String, f64> = xs.iter().enumerate().map(|(i, &v)| (format!("x{i}"), v)).collect();
            let lam = m.linearise().unwrap();
            let want = pl_sigmoid(m.logit_score(&input).unwrap(), ALPHA_STAR).unwrap();
            prop_assert_eq!(lam.predict(&input).unwrap(), want);
        }

        #[test]
        fn lam_is_weakly_rank_preserving(m in arb_model(),
            a in proptest::collection::vec(-5.0f64..5.0, 5),
            b in proptest::collection::vec(-5.0f64..5.0, 5)) {
            let ia: HashMap<String, f64> = a.iter().enumerate().map(|(i, &v)| (format!("x{i}"), v)).collect();
            let ib: HashMap<String, f64> = b.iter().enumerate().map(|(i, &v)| (format!("x{i}"), v)).collect();
            let lam = m.linearise().unwrap();
            let (za, zb) = (m.logit_score(&ia).unwrap(), m.logit_score(&ib).unwrap());
            let (la, lb) = (lam.predict(&ia).unwrap(), lam.predict(&ib).unwrap());
            if za <= zb {
                prop_assert!(la <= lb);
            }
            if za.abs() <= ALPHA_STAR && zb.abs() <= ALPHA_STAR {
                let (pa, pb) = (m.predict(&ia).unwrap(), m.predict(&ib).unwrap());
                prop_assert_eq!((la - lb).partial_cmp(&0.0), (pa - pb).partial_cmp(&0.0));
            }
        }

        #[test]
        fn certainty_band(z in -20.0f64..20.0) {
            let m = AdditiveModel::logistic(z, vec![]).unwrap();
            let lam = m.linearise().unwrap();
            let p = lam.predict(&[("x", 0.0)]).unwrap();
            let certain = p == 0.0 || p == 1.0;
            prop_assert_eq!(certain, z.abs() >= ALPHA_STAR);
            let q = m.predict(&[("x", 0.0)]).unwrap();
            prop_assert_eq!(certain, !(q > sigmoid(-ALPHA_STAR) && q < sigmoid(ALPHA_STAR)));
        }

        #[test]
        fn stack_output_in_unit_interval(bs in 0.0f64..6.0, beta in -5.0f64..5.0, b0 in -3.0f64..3.0, cb in -6.0f64..6.0, x in -10.0f64..10.0) {
            let m = one_feature_stack(bs, beta, b0, cb);
            for model in [m.clone(), m.linearise().unwrap()] {
                let p = model.predict(&[("x", x)]).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
            }
        }
    }
}
