use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bin_feature, solve_nnlr, BinEncoding, MonotoneDirection, NnlrOptions, TrainError};
use crate::data::{preprocess, ColumnOrigin, Dataset, FeatureKind, FeatureMeta, IndicatorOf};
use crate::model::{
    AdditiveModel, CategoricalShape, IndicatorSet, Model, ShapeFunction, SpecialValues, Subscale, Term, TwoLayerModel,
};

/// Which model family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Sign-constrained logistic regression on the raw features.
    Nnlr,
    /// NNLR over monotone bin indicators of each feature.
    Arm1,
    /// Per-subscale ARM1 models under a nonnegative NNLR combiner.
    Arm2,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Nnlr => "NNLR",
            Self::Arm1 => "ARM1",
            Self::Arm2 => "ARM2",
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nnlr" => Ok(Self::Nnlr),
            "arm1" => Ok(Self::Arm1),
            "arm2" => Ok(Self::Arm2),
            other => Err(format!("unknown model kind `{other}` (expected nnlr, arm1 or arm2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrainOptions {
    pub nnlr: NnlrOptions,
    /// Minimum samples per bin; defaults to 1% of the training rows.
    pub min_leaf: Option<usize>,
}

impl TrainOptions {
    fn min_leaf(&self, m: usize) -> usize {
        self.min_leaf.unwrap_or_else(|| m.div_ceil(100)).max(1)
    }
}

/// Fits the chosen family on `ds`.
pub fn fit_model(ds: &Dataset, kind: ModelKind, opts: &TrainOptions) -> Result<Model, TrainError> {
    Ok(match kind {
        ModelKind::Nnlr => fit_nnlr(ds, &opts.nnlr)?.into(),
        ModelKind::Arm1 => fit_arm1(ds, opts)?.into(),
        ModelKind::Arm2 => fit_arm2(ds, opts)?.into(),
    })
}

/// One design-matrix block and how to fold its coefficients back.
enum Block {
    /// Continuous feature used as is (NaN where special, filled with 0).
    Raw { col: usize },
    /// Binned continuous feature; `keep[j]` is the design column of bin
    /// column `j`, `None` where the column was left out.
    Binned { encoding: BinEncoding, keep: Vec<Option<usize>> },
    /// Engineered 0/1 column.
    Indicator { col: usize },
}

struct Design {
    x: Array2<f64>,
    directions: Vec<MonotoneDirection>,
    /// design column of each block, parallel to the engineered features
    blocks: Vec<(FeatureMeta, Block)>,
}

fn build_design(eng: &Dataset, binned: bool, opts: &TrainOptions) -> Result<Design, TrainError> {
    let m = eng.n_samples();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut directions = Vec::new();
    let mut blocks = Vec::new();
    for (j, meta) in eng.features().iter().enumerate() {
        let raw = eng.column(j);
        match meta.kind {
            FeatureKind::Continuous if binned => {
                let labels = eng.labels();
                let splits = bin_feature(&raw.to_vec(), labels, meta.max_leaves, opts.min_leaf(m))?;
                let encoding = BinEncoding::from_splits(&meta.name, meta.monotone, &splits, meta.lower_bound)?;
                let skip = encoding.always_on_column();
                let col_dir = if meta.monotone.is_constrained() {
                    MonotoneDirection::Increasing
                } else {
                    MonotoneDirection::Unconstrained
                };
                let mut keep = Vec::with_capacity(encoding.n_columns());
                for k in 0..encoding.n_columns() {
                    if Some(k) == skip {
                        keep.push(None);
                        continue;
                    }
                    keep.push(Some(columns.len()));
                    columns.push(raw.iter().map(|&v| if encoding.indicator(k, v) { 1.0 } else { 0.0 }).collect());
                    directions.push(col_dir);
                }
                blocks.push((meta.clone(), Block::Binned { encoding, keep }));
            }
            FeatureKind::Continuous => {
                blocks.push((meta.clone(), Block::Raw { col: columns.len() }));
                columns.push(raw.iter().map(|&v| if v.is_nan() { 0.0 } else { v }).collect());
                directions.push(meta.monotone);
            }
            FeatureKind::Indicator | FeatureKind::Categorical => {
                blocks.push((meta.clone(), Block::Indicator { col: columns.len() }));
                columns.push(raw.to_vec());
                directions.push(MonotoneDirection::Unconstrained);
            }
        }
    }
    let mut x = Array2::zeros((m, columns.len()));
    for (j, col) in columns.iter().enumerate() {
        x.column_mut(j).iter_mut().zip(col).for_each(|(d, &s)| *d = s);
    }
    Ok(Design { x, directions, blocks })
}

/// Fitted coefficient of the indicator engineered from `source` marking
/// `marks`, or 0 if there is no such column.
fn indicator_coef(design: &Design, beta: &[f64], source: &str, marks: &IndicatorOf) -> f64 {
    design
        .blocks
        .iter()
        .find_map(|(meta, block)| match (block, &meta.origin) {
            (Block::Indicator { col }, Some(ColumnOrigin { source: s, marks: mk })) if s == source && mk == marks => {
                Some(beta[*col])
            }
            _ => None,
        })
        .unwrap_or(0.0)
}

fn specials_for(design: &Design, beta: &[f64], f: &FeatureMeta) -> SpecialValues {
    SpecialValues {
        cut: f.lower_bound,
        outputs: f
            .special_values
            .iter()
            .map(|&s| (s, indicator_coef(design, beta, &f.name, &IndicatorOf::Special(s))))
            .collect(),
    }
}

/// Folds fitted design coefficients back into one term per original
/// feature of `ds`.
fn fold_terms(ds: &Dataset, design: &Design, beta: &[f64]) -> Result<Vec<Term>, TrainError> {
    let mut terms = Vec::with_capacity(ds.n_features());
    for f in ds.features() {
        let term = match f.kind {
            FeatureKind::Categorical => {
                let values = (0..f.levels.len())
                    .map(|i| indicator_coef(design, beta, &f.name, &IndicatorOf::Level(i)))
                    .collect();
                Term::new(&f.name, 1.0, ShapeFunction::Categorical(CategoricalShape::new(f.levels.clone(), values)?))
            }
            FeatureKind::Indicator => {
                let (_, block) = design.blocks.iter().find(|(m, _)| m.name == f.name).expect("engineered column exists");
                let Block::Indicator { col } = block else { unreachable!("indicators stay indicators") };
                Term::identity(&f.name, beta[*col])
            }
            FeatureKind::Continuous => {
                let (_, block) = design.blocks.iter().find(|(m, _)| m.name == f.name).expect("engineered column exists");
                let specials = specials_for(design, beta, f);
                match block {
                    Block::Raw { col } => Term::identity(&f.name, beta[*col]).with_specials(specials),
                    Block::Binned { encoding, keep } => {
                        let weights = keep.iter().map(|k| k.map_or(0.0, |c| beta[c])).collect();
                        let set = IndicatorSet::new(encoding.clone(), weights)?;
                        Term::new(&f.name, 1.0, ShapeFunction::PiecewiseConstant(set.to_piecewise())).with_specials(specials)
                    }
                    Block::Indicator { .. } => unreachable!("continuous features are never indicator blocks"),
                }
            }
        };
        terms.push(term);
    }
    Ok(terms)
}

fn fit_design(ds: &Dataset, binned: bool, opts: &TrainOptions) -> Result<AdditiveModel, TrainError> {
    let eng = preprocess(ds);
    let design = build_design(&eng, binned, opts)?;
    let fit = solve_nnlr(design.x.view(), ds.labels(), &design.directions, &opts.nnlr)?;
    let terms = fold_terms(ds, &design, &fit.coefficients)?;
    Ok(AdditiveModel::logistic(fit.bias, terms)?)
}

/// Sign-constrained logistic regression on the raw features of `ds`.
///
/// Special values and categorical levels enter as unconstrained 0/1
/// columns. Each continuous feature becomes an identity term whose special
/// values carry their own fitted logit offsets; each categorical feature
/// becomes a per-level lookup.
pub fn fit_nnlr(ds: &Dataset, opts: &NnlrOptions) -> Result<AdditiveModel, TrainError> {
    fit_design(ds, false, &TrainOptions { nnlr: *opts, min_leaf: None })
}

/// Binned additive risk model.
///
/// Each continuous feature is split by [`bin_feature`] (special values
/// excluded) and encoded as half-interval indicators for monotone features
/// or one-hot bins otherwise. Bin coefficients of monotone features are
/// constrained nonnegative, so the folded-back step function moves in the
/// declared direction. The indicator that is constantly one above the
/// lower bound is left out, its role taken by the bias.
pub fn fit_arm1(ds: &Dataset, opts: &TrainOptions) -> Result<AdditiveModel, TrainError> {
    fit_design(ds, true, opts)
}

/// Two-layer model: an ARM1 model per subscale, then a combiner with
/// nonnegative coefficients fitted on the frozen subscale probabilities.
pub fn fit_arm2(ds: &Dataset, opts: &TrainOptions) -> Result<TwoLayerModel, TrainError> {
    let subscales = ds.subscales();
    if subscales.is_empty() {
        return Err(TrainError::NoSubscales);
    }
    let fitted: Vec<Subscale> = subscales
        .par_iter()
        .map(|(name, members)| {
            if members.is_empty() {
                return Err(TrainError::InvalidParameter(format!("subscale `{name}` is empty")));
            }
            let part = ds.select_features(members)?;
            Ok(Subscale { name: name.clone(), model: fit_arm1(&part, opts)? })
        })
        .collect::<Result<_, TrainError>>()?;

    let m = ds.n_samples();
    let mut x = Array2::zeros((m, fitted.len()));
    for (j, s) in fitted.iter().enumerate() {
        let p = s.model.predict_dataset(ds)?;
        x.column_mut(j).iter_mut().zip(&p).for_each(|(d, &v)| *d = v);
    }
    let dirs = vec![MonotoneDirection::Increasing; fitted.len()];
    let fit = solve_nnlr(x.view(), ds.labels(), &dirs, &opts.nnlr)?;
    let terms = fitted.iter().zip(&fit.coefficients).map(|(s, &b)| Term::identity(&s.name, b)).collect();
    let combiner = AdditiveModel::logistic(fit.bias, terms)?;
    Ok(TwoLayerModel::new(fitted, combiner)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_logistic, FeatureDistribution, SynthSpec};
    use crate::metrics::roc_auc;
    use crate::model::Orientation;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn monotone_ds(dir: MonotoneDirection, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = 400;
        let mut x = Array2::zeros((m, 1));
        let mut y = Vec::new();
        for i in 0..m {
            let v: f64 = rng.random::<f64>() * 10.0;
            x[[i, 0]] = v;
            let z = if dir == MonotoneDirection::Decreasing { 2.0 - 0.5 * v } else { -2.0 + 0.5 * v };
            y.push(u8::from(rng.random::<f64>() < crate::approx::sigmoid(z)));
        }
        let f = FeatureMeta::continuous("f", dir);
        Dataset::new("mono", vec![f], x, y).unwrap()
    }

    fn step_values(m: &AdditiveModel) -> (Vec<f64>, Orientation) {
        match &m.terms()[0].shape {
            ShapeFunction::PiecewiseConstant(p) => (p.values().to_vec(), p.orientation()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arm1_decreasing_feature_gives_nonincreasing_steps() {
        let ds = monotone_ds(MonotoneDirection::Decreasing, 2);
        let m = fit_arm1(&ds, &TrainOptions::default()).unwrap();
        let (v, o) = step_values(&m);
        assert_eq!(o, Orientation::RightClosed);
        assert!(v.len() >= 2);
        assert!(v.windows(2).all(|w| w[0] >= w[1]), "{v:?}");
        let p = m.predict_dataset(&ds).unwrap();
        assert!(roc_auc(&p, ds.labels()).unwrap() > 0.75);
    }

    #[test]
    fn arm1_increasing_feature_gives_nondecreasing_steps() {
        let ds = monotone_ds(MonotoneDirection::Increasing, 3);
        let m = fit_arm1(&ds, &TrainOptions::default()).unwrap();
        let (v, o) = step_values(&m);
        assert_eq!(o, Orientation::LeftClosed);
        assert!(v.windows(2).all(|w| w[0] <= w[1]), "{v:?}");
    }

    #[test]
    fn arm1_constraint_binds_against_the_data() {
        // the data says decreasing, the config says increasing
        let mut ds = monotone_ds(MonotoneDirection::Decreasing, 4);
        let mut meta = ds.features()[0].clone();
        meta.monotone = MonotoneDirection::Increasing;
        ds = Dataset::new("m", vec![meta], ds.x().clone(), ds.labels().to_vec()).unwrap();
        let m = fit_arm1(&ds, &TrainOptions::default()).unwrap();
        let (v, _) = step_values(&m);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
        assert!(v.iter().all(|&s| s.abs() < 1e-3), "{v:?}");
    }

    #[test]
    fn categorical_arm1_equals_one_hot_nnlr() {
        let c = FeatureMeta::categorical("c", vec!["a".into(), "b".into(), "c".into()]);
        let codes = [0., 0., 0., 1., 1., 1., 2., 2., 2., 2.];
        let y = vec![0, 0, 1, 1, 1, 0, 1, 1, 1, 0];
        let x = Array2::from_shape_vec((10, 1), codes.to_vec()).unwrap();
        let ds = Dataset::new("cat", vec![c], x, y).unwrap();
        let arm = fit_arm1(&ds, &TrainOptions::default()).unwrap();
        let nn = fit_nnlr(&ds, &NnlrOptions::default()).unwrap();
        assert_eq!(arm, nn);
        // per-level fitted probabilities match the level frequencies
        let p = arm.predict_dataset(&ds).unwrap();
        for (pi, want) in [(p[0], 1.0 / 3.0), (p[3], 2.0 / 3.0), (p[6], 0.75)] {
            assert!((pi - want).abs() < 1e-5, "{pi} vs {want}");
        }
    }

    #[test]
    fn all_special_feature_yields_only_special_outputs() {
        let mut f = FeatureMeta::continuous("s", MonotoneDirection::Decreasing);
        f.special_values = vec![-7.0, -8.0];
        f.lower_bound = Some(-0.5);
        let x = array![[-7.0], [-7.0], [-8.0], [-8.0], [-7.0], [-8.0]];
        let ds = Dataset::new("sp", vec![f], x, vec![1, 0, 0, 0, 1, 1]).unwrap();
        let m = fit_arm1(&ds, &TrainOptions::default()).unwrap();
        let t = &m.terms()[0];
        match &t.shape {
            ShapeFunction::PiecewiseConstant(p) => assert!(p.thresholds().is_empty() && p.values() == [0.0]),
            other => panic!("{other:?}"),
        }
        assert_eq!(t.specials.outputs.len(), 2);
        let p = m.predict_dataset(&ds).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-5 && (p[2] - 1.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn nnlr_special_values_get_their_own_offsets() {
        let mut f = FeatureMeta::continuous("f", MonotoneDirection::Increasing);
        f.special_values = vec![-9.0];
        f.lower_bound = Some(-1.0);
        let x = array![[0.0], [1.0], [2.0], [3.0], [-9.0], [-9.0], [-9.0], [4.0], [0.5], [2.5]];
        let y = vec![0, 0, 1, 1, 1, 1, 0, 1, 0, 0];
        let ds = Dataset::new("d", vec![f], x, y).unwrap();
        let m = fit_nnlr(&ds, &NnlrOptions::default()).unwrap();
        let t = &m.terms()[0];
        assert!(t.shape.is_identity() && t.coefficient >= 0.0);
        assert_eq!(t.specials.cut, Some(-1.0));
        let p = m.predict_dataset(&ds).unwrap();
        assert!((p[4] - 2.0 / 3.0).abs() < 1e-5);
    }

    fn two_subscale_ds(seed: u64) -> Dataset {
        let spec = SynthSpec {
            bias: -0.2,
            coefficients: vec![1.5, -1.0, 1.2, 0.8],
            distribution: FeatureDistribution::Normal,
            samples: 1500,
        };
        synth_logistic(&spec, seed)
            .with_subscales(vec![
                ("first".into(), vec!["x1".into(), "x2".into()]),
                ("second".into(), vec!["x3".into(), "x4".into()]),
            ])
            .unwrap()
    }

    #[test]
    fn arm2_informative_subscales_get_positive_weights() {
        let ds = two_subscale_ds(8);
        let m = fit_arm2(&ds, &TrainOptions::default()).unwrap();
        for t in m.combiner().terms() {
            assert!(t.coefficient > 0.5, "{}: {}", t.feature, t.coefficient);
        }
        let p = m.predict_dataset(&ds).unwrap();
        let one = m.subscales()[0].model.predict_dataset(&ds).unwrap();
        assert!(roc_auc(&p, ds.labels()).unwrap() > roc_auc(&one, ds.labels()).unwrap());
    }

    #[test]
    fn arm2_single_subscale_is_monotone_recalibration() {
        let ds = two_subscale_ds(9);
        let all: Vec<String> = ds.features().iter().map(|f| f.name.clone()).collect();
        let ds = ds.with_subscales(vec![("all".into(), all)]).unwrap();
        let stack = fit_arm2(&ds, &TrainOptions::default()).unwrap();
        let inner = stack.subscales()[0].model.predict_dataset(&ds).unwrap();
        let outer = stack.predict_dataset(&ds).unwrap();
        let mut idx: Vec<usize> = (0..inner.len()).collect();
        idx.sort_by(|&a, &b| inner[a].total_cmp(&inner[b]));
        assert!(idx.windows(2).all(|w| outer[w[0]] <= outer[w[1]]));
    }

    #[test]
    fn arm2_without_subscales_rejected() {
        let ds = synth_logistic(
            &SynthSpec { bias: 0.0, coefficients: vec![1.0], distribution: FeatureDistribution::Normal, samples: 50 },
            1,
        );
        assert!(matches!(fit_arm2(&ds, &TrainOptions::default()), Err(TrainError::NoSubscales)));
    }

    #[test]
    fn fits_are_deterministic() {
        let ds = two_subscale_ds(10);
        for kind in [ModelKind::Nnlr, ModelKind::Arm1, ModelKind::Arm2] {
            let a = fit_model(&ds, kind, &TrainOptions::default()).unwrap();
            let b = fit_model(&ds, kind, &TrainOptions::default()).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn near_separable_data_reaches_auc_near_one() {
        let spec = SynthSpec {
            bias: 0.0,
            coefficients: vec![12.0, -9.0],
            distribution: FeatureDistribution::Normal,
            samples: 1000,
        };
        let ds = synth_logistic(&spec, 21);
        let m = fit_nnlr(&ds, &NnlrOptions::default()).unwrap();
        let auc = roc_auc(&m.predict_dataset(&ds).unwrap(), ds.labels()).unwrap();
        assert!(auc > 0.98, "{auc}");
    }
}
