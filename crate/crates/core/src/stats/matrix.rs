use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{rank_rows, Direction, StatsError};
use crate::metrics::MetricReport;

/// Which per-fold metric a score matrix is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Auc,
    Ece,
    Mce,
    Certainty,
}

impl Metric {
    pub fn of(self, r: &MetricReport) -> f64 {
        match self {
            Self::Auc => r.auc,
            Self::Ece => r.ece,
            Self::Mce => r.mce,
            Self::Certainty => r.certainty,
        }
    }

    /// The natural direction: calibration errors are better when smaller.
    pub fn direction(self) -> Direction {
        match self {
            Self::Auc | Self::Certainty => Direction::HigherBetter,
            Self::Ece | Self::Mce => Direction::LowerBetter,
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "auc" => Ok(Self::Auc),
            "ece" => Ok(Self::Ece),
            "mce" => Ok(Self::Mce),
            "certainty" => Ok(Self::Certainty),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// Scores of `k` classifiers on `N` datasets; `scores[i][j]` is classifier
/// `i` on dataset `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    classifiers: Vec<String>,
    datasets: Vec<String>,
    scores: Vec<Vec<f64>>,
    direction: Direction,
}

fn check_unique(ids: &[String], what: &str) -> Result<(), StatsError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(StatsError::Matrix(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

impl ScoreMatrix {
    pub fn new(
        classifiers: Vec<String>,
        datasets: Vec<String>,
        scores: Vec<Vec<f64>>,
        direction: Direction,
    ) -> Result<Self, StatsError> {
        if classifiers.len() < 2 {
            return Err(StatsError::TooFew { what: "classifiers", need: 2, got: classifiers.len() });
        }
        if datasets.len() < 2 {
            return Err(StatsError::TooFew { what: "datasets", need: 2, got: datasets.len() });
        }
        check_unique(&classifiers, "classifier")?;
        check_unique(&datasets, "dataset")?;
        if scores.len() != classifiers.len() {
            return Err(StatsError::Matrix(format!(
                "{} score rows for {} classifiers",
                scores.len(),
                classifiers.len()
            )));
        }
        for (id, row) in classifiers.iter().zip(&scores) {
            if row.len() != datasets.len() {
                return Err(StatsError::Matrix(format!(
                    "classifier `{id}` has {} scores for {} datasets",
                    row.len(),
                    datasets.len()
                )));
            }
            if let Some(&v) = row.iter().find(|v| !v.is_finite()) {
                return Err(StatsError::NonFinite(v));
            }
        }
        Ok(Self { classifiers, datasets, scores, direction })
    }

    /// Mean of `metric` over folds for every (classifier, dataset) pair.
    /// Classifiers and datasets keep their order of first appearance.
    pub fn from_reports(reports: &[MetricReport], metric: Metric, direction: Direction) -> Result<Self, StatsError> {
        let mut classifiers: Vec<String> = Vec::new();
        let mut datasets: Vec<String> = Vec::new();
        let mut cells: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
        for r in reports {
            let i = match classifiers.iter().position(|c| *c == r.classifier) {
                Some(i) => i,
                None => {
                    classifiers.push(r.classifier.clone());
                    classifiers.len() - 1
                }
            };
            let j = match datasets.iter().position(|d| *d == r.dataset) {
                Some(j) => j,
                None => {
                    datasets.push(r.dataset.clone());
                    datasets.len() - 1
                }
            };
            let cell = cells.entry((i, j)).or_insert((0.0, 0));
            cell.0 += metric.of(r);
            cell.1 += 1;
        }
        let mut scores = vec![vec![0.0; datasets.len()]; classifiers.len()];
        for (i, row) in scores.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let (sum, count) = cells.get(&(i, j)).ok_or_else(|| {
                    StatsError::Matrix(format!("no reports for `{}` on `{}`", classifiers[i], datasets[j]))
                })?;
                *cell = sum / *count as f64;
            }
        }
        Self::new(classifiers, datasets, scores, direction)
    }

    /// Reads `classifier,<dataset ids…>` followed by one row per classifier.
    pub fn from_csv<R: Read>(reader: R, direction: Direction) -> Result<Self, StatsError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = r.headers()?.clone();
        let datasets: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut classifiers = Vec::new();
        let mut scores = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut fields = rec.iter();
            let id = fields.next().unwrap_or_default().to_string();
            let row = fields
                .enumerate()
                .map(|(j, v)| {
                    v.parse::<f64>().map_err(|_| {
                        StatsError::Matrix(format!("line {}, column {}: cannot parse `{v}` as a number", line + 2, j + 2))
                    })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            classifiers.push(id);
            scores.push(row);
        }
        Self::new(classifiers, datasets, scores, direction)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), StatsError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["classifier".to_string()];
        header.extend(self.datasets.iter().cloned());
        w.write_record(&header)?;
        for (id, row) in self.classifiers.iter().zip(&self.scores) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn classifiers(&self) -> &[String] {
        &self.classifiers
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn scores(&self) -> &[Vec<f64>] {
        &self.scores
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.scores[i]
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// `k × N` ranks, rank 1 best on each dataset.
    pub fn ranks(&self) -> Vec<Vec<f64>> {
        let k = self.classifiers.len();
        let mut out = vec![Vec::with_capacity(self.datasets.len()); k];
        for j in 0..self.datasets.len() {
            let column: Vec<f64> = self.scores.iter().map(|row| row[j]).collect();
            for (i, r) in rank_rows(&column, self.direction).into_iter().enumerate() {
                out[i].push(r);
            }
        }
        out
    }

    pub fn mean_ranks(&self) -> Vec<f64> {
        let n = self.datasets.len() as f64;
        self.ranks().iter().map(|row| row.iter().sum::<f64>() / n).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "classifier,d1,d2,d3\nLR,0.8,0.7,0.9\nLAM-LR,0.8,0.69,0.91\n";

    #[test]
    fn csv_round_trip() {
        let m = ScoreMatrix::from_csv(CSV.as_bytes(), Direction::HigherBetter).unwrap();
        assert_eq!(m.classifiers(), ["LR", "LAM-LR"]);
        assert_eq!(m.datasets(), ["d1", "d2", "d3"]);
        assert_eq!(m.ranks(), vec![vec![1.5, 1.0, 2.0], vec![1.5, 2.0, 1.0]]);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(ScoreMatrix::from_csv(buf.as_slice(), Direction::HigherBetter).unwrap(), m);
    }

    #[test]
    fn invalid_matrices() {
        let one = "classifier,d1,d2\nA,1,2\n";
        assert!(matches!(ScoreMatrix::from_csv(one.as_bytes(), Direction::HigherBetter), Err(StatsError::TooFew { .. })));
        let ragged = "classifier,d1,d2\nA,1,2\nB,1\n";
        assert!(ScoreMatrix::from_csv(ragged.as_bytes(), Direction::HigherBetter).is_err());
        let text = "classifier,d1,d2\nA,1,2\nB,1,x\n";
        let err = ScoreMatrix::from_csv(text.as_bytes(), Direction::HigherBetter).unwrap_err();
        assert!(err.to_string().contains("line 3, column 3"), "{err}");
        let dup = "classifier,d1,d2\nA,1,2\nA,1,3\n";
        assert!(ScoreMatrix::from_csv(dup.as_bytes(), Direction::HigherBetter).is_err());
    }

    fn report(c: &str, d: &str, fold: usize, auc: f64) -> MetricReport {
        MetricReport { classifier: c.into(), dataset: d.into(), fold, auc, ece: 0.1, mce: 0.2, certainty: 0.0 }
    }

    #[test]
    fn averages_folds() {
        let reports = vec![
            report("A", "x", 0, 0.75),
            report("A", "x", 1, 0.5),
            report("B", "x", 0, 0.5),
            report("A", "y", 0, 0.9),
            report("B", "y", 0, 0.25),
            report("B", "y", 1, 0.75),
        ];
        let m = ScoreMatrix::from_reports(&reports, Metric::Auc, Direction::HigherBetter).unwrap();
        assert_eq!(m.scores(), &[vec![0.625, 0.9], vec![0.5, 0.5]]);
        assert!(ScoreMatrix::from_reports(&reports[..5], Metric::Auc, Direction::HigherBetter).is_ok());
        assert!(ScoreMatrix::from_reports(&reports[..3], Metric::Auc, Direction::HigherBetter).is_err());
    }
}
