use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::{DataError, Dataset, DatasetConfig, FeatureKind, LabelSpec};

/// Reads a comma-separated file with a header row.
///
/// Only the columns named in `config` are kept. The dataset id is the
/// config `name`, falling back to the file stem.
pub fn load_csv(path: impl AsRef<Path>, config: &DatasetConfig) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let id = config
        .name
        .clone()
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, config, id)
}

pub fn read_csv<R: Read>(reader: R, config: &DatasetConfig, id: impl Into<String>) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let label_col = find(&config.label)?;
    let mut metas = config.feature_metas()?;
    let cols = metas.iter().map(|m| find(&m.name)).collect::<Result<Vec<_>, _>>()?;
    let fixed_levels: Vec<bool> = metas.iter().map(|m| !m.levels.is_empty()).collect();

    let mut negative = config.negative_label.clone();
    let mut values: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = row_idx as u64 + 2;
        let raw_label = record.get(label_col).unwrap_or("");
        let y = if raw_label == config.positive_label {
            1
        } else {
            match &negative {
                Some(neg) if raw_label == neg => 0,
                Some(_) => {
                    return Err(DataError::UnknownLabel {
                        line,
                        column: config.label.clone(),
                        value: raw_label.to_string(),
                    })
                }
                None => {
                    negative = Some(raw_label.to_string());
                    0
                }
            }
        };
        labels.push(y);
        for (j, meta) in metas.iter_mut().enumerate() {
            let cell = record.get(cols[j]).unwrap_or("");
            let v = match meta.kind {
                FeatureKind::Categorical => match meta.levels.iter().position(|l| l == cell) {
                    Some(code) => code as f64,
                    None if fixed_levels[j] => {
                        return Err(DataError::UnknownLevel {
                            line,
                            column: meta.name.clone(),
                            value: cell.to_string(),
                        })
                    }
                    None => {
                        meta.levels.push(cell.to_string());
                        (meta.levels.len() - 1) as f64
                    }
                },
                _ => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(DataError::NonNumeric {
                            line,
                            column: meta.name.clone(),
                            value: cell.to_string(),
                        })
                    }
                },
            };
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    let x = Array2::from_shape_vec((labels.len(), metas.len()), values)
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    let label = LabelSpec {
        column: config.label.clone(),
        positive: config.positive_label.clone(),
        negative,
    };
    let mut ds = Dataset::new(id, metas, x, labels)?.with_label_spec(label);
    if let Some(subs) = config.subscale_list()? {
        ds = ds.with_subscales(subs)?;
    }
    Ok(ds)
}

/// Writes the dataset back out in the layout [`load_csv`] reads: one column
/// per feature followed by the label column.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv_to(ds, file)
}

pub fn write_csv_to<W: Write>(ds: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let label = ds.label_spec();
    let mut header: Vec<&str> = ds.features().iter().map(|f| f.name.as_str()).collect();
    header.push(&label.column);
    w.write_record(&header)?;
    let negative = label.negative.clone().unwrap_or_else(|| "0".into());
    for (row, &y) in ds.x().rows().into_iter().zip(ds.labels()) {
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for (v, meta) in row.iter().zip(ds.features()) {
            match meta.kind {
                FeatureKind::Categorical => rec.push(meta.levels[*v as usize].clone()),
                _ => rec.push(format!("{v}")),
            }
        }
        rec.push(if y == 1 { label.positive.clone() } else { negative.clone() });
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| DataError::Io { path: "<writer>".into(), source })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_logistic, FeatureDistribution, SynthSpec};

    fn toy_config() -> DatasetConfig {
        DatasetConfig::from_json(
            r#"{"label": "default", "positive_label": "yes", "features": [
                {"name": "income", "monotone": "decreasing"},
                {"name": "housing", "kind": "categorical"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn reads_toy_file() {
        let text = "income,housing,default,ignored\n10,own,no,x\n2.5,rent,yes,y\n7,free,no,z\n";
        let ds = read_csv(text.as_bytes(), &toy_config(), "toy").unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.feature("housing").unwrap().levels, vec!["own", "rent", "free"]);
        assert_eq!(ds.x()[[2, 1]], 2.0);
        assert_eq!(ds.x()[[1, 0]], 2.5);
    }

    #[test]
    fn level_order_is_first_appearance() {
        let text = "income,housing,default\n1,rent,no\n2,own,yes\n3,rent,no\n4,free,yes\n";
        let ds = read_csv(text.as_bytes(), &toy_config(), "toy").unwrap();
        assert_eq!(ds.feature("housing").unwrap().levels, vec!["rent", "own", "free"]);
        assert_eq!(ds.column(1).to_vec(), vec![0.0, 1.0, 0.0, 2.0]);
    }

    #[test]
    fn missing_label_column_named() {
        let text = "income,housing\n1,own\n";
        match read_csv(text.as_bytes(), &toy_config(), "toy") {
            Err(DataError::MissingColumn(c)) => assert_eq!(c, "default"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cells_report_line_and_column() {
        let text = "income,housing,default\n1,own,no\nabc,own,yes\n";
        match read_csv(text.as_bytes(), &toy_config(), "toy") {
            Err(DataError::NonNumeric { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, "income");
            }
            other => panic!("{other:?}"),
        }
        let text = "income,housing,default\n1,own,no\n2,own,maybe\n";
        assert!(matches!(
            read_csv(text.as_bytes(), &toy_config(), "toy"),
            Err(DataError::UnknownLabel { line: 3, .. })
        ));
    }

    #[test]
    fn round_trip_through_csv() {
        let spec = SynthSpec {
            bias: -0.3,
            coefficients: vec![1.0, -0.5, 0.0],
            distribution: FeatureDistribution::Normal,
            samples: 200,
        };
        let ds = synth_logistic(&spec, 11);
        let mut buf = Vec::new();
        write_csv_to(&ds, &mut buf).unwrap();
        let cfg = DatasetConfig::from_json(
            r#"{"label": "label", "positive_label": "1", "negative_label": "0", "features": [
                {"name": "x1", "monotone": "increasing"},
                {"name": "x2", "monotone": "decreasing"},
                {"name": "x3"}]}"#,
        )
        .unwrap();
        let back = read_csv(buf.as_slice(), &cfg, ds.id.clone()).unwrap();
        assert_eq!(back.x(), ds.x());
        assert_eq!(back.labels(), ds.labels());
        assert_eq!(back.features(), ds.features());
    }
}
