//! CSV loading and writing for labeled datasets.
//!
//! Files carry a header row, numeric feature columns, and one label column
//! (integers or arbitrary strings). String labels map to class indices in
//! first-seen order unless the schema pins an explicit class list.

use std::path::Path;

use crate::datastream::{Dataset, Instance};
use crate::error::{RadError, Result};
use crate::scalar::Scalar;

/// Describes how to read a labeled CSV file.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CsvSchema {
    /// Name of the label column.
    pub label_column: String,
    /// Feature columns to read, in this order. `None` reads every non-label
    /// column in file order.
    #[serde(default)]
    pub feature_columns: Option<Vec<String>>,
    /// Fixed label vocabulary (index = class id). `None` assigns class ids
    /// in first-seen order; with a list, unknown labels are an error.
    #[serde(default)]
    pub classes: Option<Vec<String>>,
}

impl CsvSchema {
    /// Schema that reads every non-`label_column` column as a feature.
    pub fn with_label(label_column: impl Into<String>) -> Self {
        CsvSchema { label_column: label_column.into(), feature_columns: None, classes: None }
    }
}

/// A dataset plus the label/feature naming recovered from the file.
#[derive(Debug, Clone)]
pub struct LoadedCsv<F: Scalar> {
    pub dataset: Dataset<F>,
    /// Class names by class index.
    pub label_names: Vec<String>,
    /// Feature column names in dataset order.
    pub feature_names: Vec<String>,
}

/// Reads a labeled dataset. Instances keep file order and get sequential ids;
/// `given_label == true_label` for every instance (noise is injected later,
/// never stored in files). Errors name the offending data row (1-based).
pub fn load_csv<F: Scalar>(path: &Path, schema: &CsvSchema) -> Result<LoadedCsv<F>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();

    let label_idx = headers
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| {
            RadError::InvalidData(format!("label column '{}' not found", schema.label_column))
        })?;

    let feature_idxs: Vec<(usize, String)> = match &schema.feature_columns {
        Some(names) => names
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .map(|i| (i, name.clone()))
                    .ok_or_else(|| {
                        RadError::InvalidData(format!("feature column '{name}' not found"))
                    })
            })
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != label_idx)
            .map(|(i, h)| (i, h.to_string()))
            .collect(),
    };
    if feature_idxs.is_empty() {
        return Err(RadError::InvalidData("no feature columns".into()));
    }

    let mut label_names: Vec<String> = schema.classes.clone().unwrap_or_default();
    let fixed_classes = schema.classes.is_some();
    let mut instances = Vec::new();

    for (row, record) in reader.records().enumerate() {
        let record = record?; // ragged rows error here, naming the record
        let row_no = row + 1;
        let mut features = Vec::with_capacity(feature_idxs.len());
        for (idx, name) in &feature_idxs {
            let raw = &record[*idx];
            let value: f64 = raw.trim().parse().map_err(|_| {
                RadError::InvalidData(format!(
                    "data row {row_no}: non-numeric feature '{raw}' in column '{name}'"
                ))
            })?;
            features.push(F::from_f64(value));
        }
        let raw_label = record[label_idx].trim();
        let label = match label_names.iter().position(|l| l == raw_label) {
            Some(i) => i,
            None if fixed_classes => {
                return Err(RadError::InvalidData(format!(
                    "data row {row_no}: unknown label value '{raw_label}'"
                )));
            }
            None => {
                label_names.push(raw_label.to_string());
                label_names.len() - 1
            }
        };
        instances.push(Instance { id: row, features, given_label: label, true_label: label });
    }

    if instances.is_empty() {
        return Err(RadError::InvalidData("file has no data rows".into()));
    }
    let n_features = feature_idxs.len();
    let n_classes = label_names.len();
    let dataset = Dataset::from_instances(instances, n_features, n_classes)?;
    let feature_names = feature_idxs.into_iter().map(|(_, name)| name).collect();
    Ok(LoadedCsv { dataset, label_names, feature_names })
}

/// Writes a dataset in the same schema [`load_csv`] reads: feature columns
/// first, the label column last, given labels only. Feature values use the
/// shortest representation that parses back to the identical float, so a
/// write/load round trip is lossless.
pub fn write_csv<F: Scalar>(
    path: &Path,
    dataset: &Dataset<F>,
    label_column: &str,
    label_names: Option<&[String]>,
) -> Result<()> {
    if let Some(names) = label_names {
        if names.len() < dataset.n_classes {
            return Err(RadError::InvalidData(format!(
                "{} label names for {} classes",
                names.len(),
                dataset.n_classes
            )));
        }
    }
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..dataset.n_features).map(|i| format!("f{i}")).collect();
    header.push(label_column.to_string());
    writer.write_record(&header)?;
    let mut record = Vec::with_capacity(dataset.n_features + 1);
    for inst in &dataset.instances {
        record.clear();
        for &x in &inst.features {
            record.push(x.to_string());
        }
        match label_names {
            Some(names) => record.push(names[inst.given_label].clone()),
            None => record.push(inst.given_label.to_string()),
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datastream::make_synthetic;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_labels_in_first_seen_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "x,y,cls\n1.0,2.0,b\n3.0,4.0,a\n5.0,6.0,b\n7.0,8.0,a\n");
        let loaded = load_csv::<f64>(&path, &CsvSchema::with_label("cls")).unwrap();
        assert_eq!(loaded.dataset.n_features, 2);
        assert_eq!(loaded.dataset.n_classes, 2);
        assert_eq!(loaded.label_names, vec!["b", "a"]);
        assert_eq!(loaded.feature_names, vec!["x", "y"]);
        let labels: Vec<usize> = loaded.dataset.instances.iter().map(|i| i.given_label).collect();
        assert_eq!(labels, vec![0, 1, 0, 1]);
        assert_eq!(loaded.dataset.instances[1].features, vec![3.0, 4.0]);
    }

    #[test]
    fn label_column_may_sit_in_the_middle() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "x,cls,y\n1.0,0,2.0\n3.0,1,4.0\n");
        let loaded = load_csv::<f64>(&path, &CsvSchema::with_label("cls")).unwrap();
        assert_eq!(loaded.feature_names, vec!["x", "y"]);
        assert_eq!(loaded.dataset.instances[0].features, vec![1.0, 2.0]);
    }

    #[test]
    fn explicit_feature_columns_select_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "a,b,c,cls\n1,2,3,x\n4,5,6,x\n");
        let schema = CsvSchema {
            label_column: "cls".into(),
            feature_columns: Some(vec!["c".into(), "a".into()]),
            classes: None,
        };
        let loaded = load_csv::<f64>(&path, &schema).unwrap();
        assert_eq!(loaded.feature_names, vec!["c", "a"]);
        assert_eq!(loaded.dataset.instances[0].features, vec![3.0, 1.0]);
    }

    #[test]
    fn ragged_row_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "x,y,cls\n1.0,2.0,a\n3.0,a\n");
        assert!(load_csv::<f64>(&path, &CsvSchema::with_label("cls")).is_err());
    }

    #[test]
    fn non_numeric_feature_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "x,y,cls\n1.0,2.0,a\n3.0,oops,b\n");
        let err = load_csv::<f64>(&path, &CsvSchema::with_label("cls")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("data row 2") && msg.contains("oops"), "{msg}");
    }

    #[test]
    fn unknown_label_with_fixed_classes_names_the_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "x,cls\n1.0,a\n2.0,c\n");
        let schema = CsvSchema {
            label_column: "cls".into(),
            feature_columns: None,
            classes: Some(vec!["a".into(), "b".into()]),
        };
        let err = load_csv::<f64>(&path, &schema).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("data row 2") && msg.contains("'c'"), "{msg}");
    }

    #[test]
    fn fixed_classes_pin_the_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "x,cls\n1.0,b\n2.0,a\n");
        let schema = CsvSchema {
            label_column: "cls".into(),
            feature_columns: None,
            classes: Some(vec!["a".into(), "b".into(), "c".into()]),
        };
        let loaded = load_csv::<f64>(&path, &schema).unwrap();
        assert_eq!(loaded.dataset.n_classes, 3);
        let labels: Vec<usize> = loaded.dataset.instances.iter().map(|i| i.given_label).collect();
        assert_eq!(labels, vec![1, 0]);
    }

    #[test]
    fn missing_file_and_missing_columns_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("absent.csv");
        assert!(load_csv::<f64>(&missing, &CsvSchema::with_label("cls")).is_err());

        let path = write_file(&dir, "t.csv", "x,y\n1.0,2.0\n");
        assert!(load_csv::<f64>(&path, &CsvSchema::with_label("cls")).is_err());
        let schema = CsvSchema {
            label_column: "y".into(),
            feature_columns: Some(vec!["z".into()]),
            classes: None,
        };
        assert!(load_csv::<f64>(&path, &schema).is_err());
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.csv", "x,cls\n");
        assert!(load_csv::<f64>(&path, &CsvSchema::with_label("cls")).is_err());
    }

    #[test]
    fn write_then_load_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        for seed in 0..3u64 {
            let ds = make_synthetic::<f32>(3, 5, 200, 0.7, seed).unwrap();
            let path = dir.path().join(format!("rt{seed}.csv"));
            write_csv(&path, &ds, "label", None).unwrap();
            let loaded = load_csv::<f32>(&path, &CsvSchema::with_label("label")).unwrap();
            assert_eq!(loaded.dataset.n_features, ds.n_features);
            assert_eq!(loaded.dataset.len(), ds.len());
            for (a, b) in ds.instances.iter().zip(&loaded.dataset.instances) {
                assert_eq!(a.features, b.features, "seed {seed}");
            }
            // Labels 0,1,2 appear in round-robin order, so first-seen matches.
            for (a, b) in ds.instances.iter().zip(&loaded.dataset.instances) {
                assert_eq!(a.given_label, b.given_label);
            }
        }
    }

    #[test]
    fn write_with_label_names_round_trips_classes() {
        let dir = tempfile::tempdir().unwrap();
        let ds = make_synthetic::<f64>(2, 2, 20, 0.5, 1).unwrap();
        let names = vec!["cat".to_string(), "dog".to_string()];
        let path = dir.path().join("named.csv");
        write_csv(&path, &ds, "animal", Some(&names)).unwrap();
        let schema = CsvSchema {
            label_column: "animal".into(),
            feature_columns: None,
            classes: Some(names.clone()),
        };
        let loaded = load_csv::<f64>(&path, &schema).unwrap();
        assert_eq!(loaded.label_names, names);
        for (a, b) in ds.instances.iter().zip(&loaded.dataset.instances) {
            assert_eq!(a.given_label, b.given_label);
        }
    }
}
