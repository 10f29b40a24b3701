//! JSON model documents.
//!
//! ```json
//! {
//!   "version": 1,
//!   "link": "logistic",
//!   "bias": -2.1972,
//!   "terms": [
//!     {"feature": "late_payment", "coefficient": 1.61, "shape": {"type": "identity"}}
//!   ]
//! }
//! ```
//!
//! `bias` and `coefficient` are on the link scale. Linearised documents
//! also carry `logit_bias` / `logit_coefficient`, which are authoritative
//! when reading. Two-layer documents describe the combiner at the top level
//! and list first-layer models under `subscales: [{name, model}]`. Shapes
//! are tagged by `type`: `identity`, `piecewise_constant` (`thresholds`,
//! `values`, `orientation`), `indicator_set` (`encoding`, `weights`) or
//! `categorical` (`levels`, `values`). Infinite thresholds are written as
//! the strings `"inf"` and `"-inf"`. An optional `manifest` object is
//! carried through untouched.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use super::{
    AdditiveModel, CategoricalShape, IndicatorSet, Link, Model, ModelError, Orientation, PiecewiseConstant,
    ShapeFunction, SpecialValues, Subscale, Term, TwoLayerModel,
};
use crate::approx::ALPHA_STAR;
use crate::train::{BinEncoding, MonotoneDirection};

pub const DOCUMENT_VERSION: u64 = 1;

/// Relative tolerance between link-scale and logit-scale fields.
const CONSISTENCY_TOL: f64 = 1e-9;

mod ext_float {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<Repr> = v
            .iter()
            .map(|&x| match x {
                f64::INFINITY => Repr::Text("inf".into()),
                f64::NEG_INFINITY => Repr::Text("-inf".into()),
                x => Repr::Num(x),
            })
            .collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                Repr::Num(x) => Ok(x),
                Repr::Text(t) => match t.as_str() {
                    "inf" | "+inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    other => Err(serde::de::Error::custom(format!("expected a number or \"inf\"/\"-inf\", got `{other}`"))),
                },
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocEncoding {
    feature: String,
    direction: MonotoneDirection,
    #[serde(with = "ext_float")]
    thresholds: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum DocShape {
    Identity,
    PiecewiseConstant { thresholds: Vec<f64>, values: Vec<f64>, orientation: Orientation },
    IndicatorSet { encoding: DocEncoding, weights: Vec<f64> },
    Categorical { levels: Vec<String>, values: Vec<f64> },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocTerm {
    feature: String,
    coefficient: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logit_coefficient: Option<f64>,
    shape: DocShape,
    #[serde(default, skip_serializing_if = "SpecialValues::is_empty")]
    specials: SpecialValues,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocModel {
    link: Link,
    bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logit_bias: Option<f64>,
    terms: Vec<DocTerm>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocSubscale {
    name: String,
    model: DocModel,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    version: u64,
    link: Link,
    bias: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    logit_bias: Option<f64>,
    terms: Vec<DocTerm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subscales: Option<Vec<DocSubscale>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    manifest: Option<Value>,
}

fn to_link_scale(link: Link, logit: f64, is_bias: bool) -> f64 {
    match (link, is_bias) {
        (Link::Logistic, _) => logit,
        (Link::Linearised, true) => 0.5 + logit / (2.0 * ALPHA_STAR),
        (Link::Linearised, false) => logit / (2.0 * ALPHA_STAR),
    }
}

fn from_link_scale(link: Link, value: f64, is_bias: bool) -> f64 {
    match (link, is_bias) {
        (Link::Logistic, _) => value,
        (Link::Linearised, true) => (value - 0.5) * (2.0 * ALPHA_STAR),
        (Link::Linearised, false) => value * (2.0 * ALPHA_STAR),
    }
}

fn encode_shape(shape: &ShapeFunction) -> DocShape {
    match shape {
        ShapeFunction::Identity => DocShape::Identity,
        ShapeFunction::PiecewiseConstant(p) => DocShape::PiecewiseConstant {
            thresholds: p.thresholds().to_vec(),
            values: p.values().to_vec(),
            orientation: p.orientation(),
        },
        ShapeFunction::IndicatorSet(s) => DocShape::IndicatorSet {
            encoding: DocEncoding {
                feature: s.encoding.feature.clone(),
                direction: s.encoding.direction,
                thresholds: s.encoding.thresholds().to_vec(),
            },
            weights: s.weights().to_vec(),
        },
        ShapeFunction::Categorical(c) => {
            DocShape::Categorical { levels: c.levels().to_vec(), values: c.values().to_vec() }
        }
    }
}

fn decode_shape(doc: DocShape) -> Result<ShapeFunction, ModelError> {
    Ok(match doc {
        DocShape::Identity => ShapeFunction::Identity,
        DocShape::PiecewiseConstant { thresholds, values, orientation } => {
            ShapeFunction::PiecewiseConstant(PiecewiseConstant::new(thresholds, values, orientation)?)
        }
        DocShape::IndicatorSet { encoding, weights } => {
            let enc = BinEncoding::new(encoding.feature, encoding.direction, encoding.thresholds)
                .map_err(|e| ModelError::Malformed(e.to_string()))?;
            ShapeFunction::IndicatorSet(IndicatorSet::new(enc, weights)?)
        }
        DocShape::Categorical { levels, values } => ShapeFunction::Categorical(CategoricalShape::new(levels, values)?),
    })
}

fn encode_model(m: &AdditiveModel) -> DocModel {
    let lin = m.link() == Link::Linearised;
    DocModel {
        link: m.link(),
        bias: m.bias(),
        logit_bias: lin.then_some(m.logit_bias()),
        terms: m
            .terms()
            .iter()
            .map(|t| DocTerm {
                feature: t.feature.clone(),
                coefficient: to_link_scale(m.link(), t.coefficient, false),
                logit_coefficient: lin.then_some(t.coefficient),
                shape: encode_shape(&t.shape),
                specials: t.specials.clone(),
            })
            .collect(),
    }
}

/// Picks the logit-scale value, checking it against the link-scale one.
fn logit_value(link: Link, shown: f64, logit: Option<f64>, what: &str, is_bias: bool) -> Result<f64, ModelError> {
    match logit {
        None => Ok(from_link_scale(link, shown, is_bias)),
        Some(l) => {
            let implied = to_link_scale(link, l, is_bias);
            if (implied - shown).abs() > CONSISTENCY_TOL * shown.abs().max(1.0) {
                return Err(ModelError::Malformed(format!(
                    "{what}: link-scale value {shown} disagrees with logit value {l}"
                )));
            }
            Ok(l)
        }
    }
}

fn decode_model(doc: DocModel) -> Result<AdditiveModel, ModelError> {
    let link = doc.link;
    if link == Link::Logistic && (doc.logit_bias.is_some() || doc.terms.iter().any(|t| t.logit_coefficient.is_some())) {
        return Err(ModelError::Malformed("logit_* fields are only meaningful for linearised models".into()));
    }
    let bias = logit_value(link, doc.bias, doc.logit_bias, "bias", true)?;
    let terms = doc
        .terms
        .into_iter()
        .map(|t| {
            let coefficient = logit_value(link, t.coefficient, t.logit_coefficient, &t.feature, false)?;
            Ok(Term { feature: t.feature, coefficient, shape: decode_shape(t.shape)?, specials: t.specials })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    AdditiveModel::with_link(bias, terms, link)
}

/// Serialises `model` (and an optional manifest object) as a pretty-printed
/// JSON document.
pub fn to_json(model: &Model, manifest: Option<&Value>) -> String {
    let (top, subscales) = match model {
        Model::Additive(m) => (encode_model(m), None),
        Model::TwoLayer(m) => (
            encode_model(m.combiner()),
            Some(
                m.subscales()
                    .iter()
                    .map(|s| DocSubscale { name: s.name.clone(), model: encode_model(&s.model) })
                    .collect(),
            ),
        ),
    };
    let doc = Document {
        version: DOCUMENT_VERSION,
        link: top.link,
        bias: top.bias,
        logit_bias: top.logit_bias,
        terms: top.terms,
        subscales,
        manifest: manifest.cloned(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("model documents always serialise");
    s.push('\n');
    s
}

/// Parses a model document, returning the model and its manifest if any.
pub fn from_json(text: &str) -> Result<(Model, Option<Value>), ModelError> {
    let raw: Value = serde_json::from_str(text).map_err(|e| ModelError::Malformed(e.to_string()))?;
    let version = raw
        .get("version")
        .ok_or_else(|| ModelError::Malformed("missing `version`".into()))?
        .as_u64()
        .ok_or_else(|| ModelError::Malformed("`version` must be a nonnegative integer".into()))?;
    if version != DOCUMENT_VERSION {
        return Err(ModelError::Version(version));
    }
    let doc: Document = serde_json::from_value(raw).map_err(|e| ModelError::Malformed(e.to_string()))?;
    let top = decode_model(DocModel { link: doc.link, bias: doc.bias, logit_bias: doc.logit_bias, terms: doc.terms })?;
    let model = match doc.subscales {
        None => Model::Additive(top),
        Some(subs) => {
            let subscales = subs
                .into_iter()
                .map(|s| Ok(Subscale { name: s.name, model: decode_model(s.model)? }))
                .collect::<Result<Vec<_>, ModelError>>()?;
            Model::TwoLayer(TwoLayerModel::new(subscales, top)?)
        }
    };
    Ok((model, doc.manifest))
}
