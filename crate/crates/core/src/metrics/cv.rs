use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{calibration_table, certainty_fraction, ece, mce, roc_auc, MetricsError};
use crate::data::Dataset;
use crate::model::Model;
use crate::train::{fit_model, ModelKind, TrainOptions};

/// Number of equal-width bins used for ECE/MCE in cross-validation.
pub const CALIBRATION_BINS: usize = 15;

/// Fold id (`0..k`) for every sample.
///
/// Each class is shuffled separately with a ChaCha8 stream seeded from
/// `seed` (negatives first, then positives) and dealt round-robin, the
/// dealing position carrying over from one class to the next. Per-class
/// fold counts therefore differ by at most one, as do fold sizes.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<Vec<usize>, MetricsError> {
    if k < 2 {
        return Err(MetricsError::InvalidFolds(k));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(MetricsError::BadLabel);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; labels.len()];
    let mut offset = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return Err(MetricsError::ClassTooSmall { class, count: idx.len(), k });
        }
        idx.shuffle(&mut rng);
        for (i, &sample) in idx.iter().enumerate() {
            folds[sample] = (offset + i) % k;
        }
        offset = (offset + idx.len()) % k;
    }
    Ok(folds)
}

/// Held-out metrics of one classifier on one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub classifier: String,
    pub dataset: String,
    pub fold: usize,
    pub auc: f64,
    pub ece: f64,
    pub mce: f64,
    pub certainty: f64,
}

impl MetricReport {
    pub fn from_scores(
        classifier: &str,
        dataset: &str,
        fold: usize,
        scores: &[f64],
        labels: &[u8],
    ) -> Result<Self, MetricsError> {
        let table = calibration_table(scores, labels, CALIBRATION_BINS)?;
        Ok(Self {
            classifier: classifier.to_string(),
            dataset: dataset.to_string(),
            fold,
            auc: roc_auc(scores, labels)?,
            ece: ece(&table)?,
            mce: mce(&table)?,
            certainty: certainty_fraction(scores),
        })
    }
}

/// Writes reports as CSV with header
/// `classifier,dataset,fold,auc,ece,mce,certainty`.
pub fn write_reports<W: Write>(reports: &[MetricReport], writer: W) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(writer);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_reports<R: Read>(reader: R) -> Result<Vec<MetricReport>, MetricsError> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<Result<Vec<MetricReport>, _>>()?)
}

/// Something that can be trained on one part of a dataset and score
/// another. A single fit may yield several classifiers (for instance a
/// logistic model and its linearisation).
pub trait Trainer: Sync {
    fn classifier_ids(&self) -> Vec<String>;

    /// Scores for `test`, one vector per entry of [`Trainer::classifier_ids`].
    fn fit_predict(&self, train: &Dataset, test: &Dataset) -> crate::Result<Vec<Vec<f64>>>;
}

/// Fits a model family and reports it, optionally alongside its
/// linearisation (`LAM-<name>`), from the same fit.
#[derive(Debug, Clone)]
pub struct ModelTrainer {
    pub kind: ModelKind,
    pub options: TrainOptions,
    pub with_lam: bool,
}

impl ModelTrainer {
    pub fn new(kind: ModelKind) -> Self {
        Self { kind, options: TrainOptions::default(), with_lam: true }
    }
}

impl Trainer for ModelTrainer {
    fn classifier_ids(&self) -> Vec<String> {
        let name = self.kind.name();
        let mut ids = vec![name.to_string()];
        if self.with_lam {
            ids.push(format!("LAM-{name}"));
        }
        ids
    }

    fn fit_predict(&self, train: &Dataset, test: &Dataset) -> crate::Result<Vec<Vec<f64>>> {
        let model = fit_model(train, self.kind, &self.options)?;
        let mut out = vec![model.predict_dataset(test)?];
        if self.with_lam {
            out.push(model.linearise()?.predict_dataset(test)?);
        }
        Ok(out)
    }
}

/// An already-fitted model, evaluated on each held-out fold without
/// retraining.
#[derive(Debug, Clone)]
pub struct FixedModel {
    pub id: String,
    pub model: Model,
}

impl Trainer for FixedModel {
    fn classifier_ids(&self) -> Vec<String> {
        vec![self.id.clone()]
    }

    fn fit_predict(&self, _train: &Dataset, test: &Dataset) -> crate::Result<Vec<Vec<f64>>> {
        Ok(vec![self.model.predict_dataset(test)?])
    }
}

/// `k`-fold stratified cross-validation.
///
/// Folds run in parallel; the result is ordered by classifier (in
/// [`Trainer::classifier_ids`] order) and then by fold, independent of
/// scheduling.
pub fn cross_validate<T: Trainer + ?Sized>(
    trainer: &T,
    ds: &Dataset,
    k: usize,
    seed: u64,
) -> crate::Result<Vec<MetricReport>> {
    let folds = stratified_kfold(ds.labels(), k, seed)?;
    let ids = trainer.classifier_ids();
    let per_fold: Vec<Vec<MetricReport>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let train_idx: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] != fold).collect();
            let test_idx: Vec<usize> = (0..folds.len()).filter(|&i| folds[i] == fold).collect();
            let train = ds.subset_rows(&train_idx);
            let test = ds.subset_rows(&test_idx);
            let scores = trainer.fit_predict(&train, &test)?;
            ids.iter()
                .zip(&scores)
                .map(|(id, s)| Ok(MetricReport::from_scores(id, &ds.id, fold, s, test.labels())?))
                .collect::<crate::Result<Vec<_>>>()
        })
        .collect::<crate::Result<_>>()?;
    let mut out = Vec::with_capacity(k * ids.len());
    for c in 0..ids.len() {
        for fold_reports in &per_fold {
            out.push(fold_reports[c].clone());
        }
    }
    Ok(out)
}
