//! Labeled feature matrix with category metadata and CSV interchange.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{category_of, feature_index, Category, FEATURE_NAMES};
use crate::labeling::Label;

/// Which columns the E1 baseline uses; two common readings are supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum E1Definition {
    /// NumOfAdopters + TimeTakenToPredThr.
    AdoptersTime,
    /// NumOfAdopters + NumOfRT (default; matches the reported baselines).
    AdoptersRetweets,
}

impl Default for E1Definition {
    fn default() -> Self {
        E1Definition::AdoptersRetweets
    }
}

impl E1Definition {
    pub fn columns(&self) -> [&'static str; 2] {
        match self {
            E1Definition::AdoptersTime => ["NumOfAdopters", "TimeTakenToPredThr"],
            E1Definition::AdoptersRetweets => ["NumOfAdopters", "NumOfRT"],
        }
    }
}

/// A feature-category combination such as `E1`, `E` or `E+N+G+C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureCombo {
    E1,
    Categories(BTreeSet<char>),
}

impl FeatureCombo {
    pub fn parse(s: &str) -> Result<FeatureCombo> {
        if s.eq_ignore_ascii_case("E1") {
            return Ok(FeatureCombo::E1);
        }
        let mut set = BTreeSet::new();
        for part in s.split('+') {
            let part = part.trim();
            if Category::from_code(part).is_none() {
                return Err(Error::validation(format!(
                    "unknown feature category `{part}` in combo `{s}`"
                )));
            }
            set.insert(part.chars().next().unwrap());
        }
        Ok(FeatureCombo::Categories(set))
    }

    pub fn name(&self) -> String {
        match self {
            FeatureCombo::E1 => "E1".to_string(),
            FeatureCombo::Categories(set) => "ENGC"
                .chars()
                .filter(|c| set.contains(c))
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("+"),
        }
    }
}

/// Rows of feature values with binary labels (viral = positive).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub keys: Vec<String>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
        keys: Vec<String>,
    ) -> Result<Dataset> {
        if rows.len() != labels.len() || rows.len() != keys.len() {
            return Err(Error::validation("rows/labels/keys length mismatch"));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::validation(format!(
                    "row {i} has {} values, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::validation(format!("row {i} contains NaN/inf")));
            }
        }
        Ok(Dataset {
            feature_names,
            rows,
            labels,
            keys,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn prevalence(&self) -> f64 {
        if self.labels.is_empty() {
            0.0
        } else {
            self.positives() as f64 / self.labels.len() as f64
        }
    }

    pub fn column(&self, idx: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[idx]).collect()
    }

    /// Category of a column, resolved through the canonical feature list.
    pub fn column_category(&self, idx: usize) -> Option<Category> {
        feature_index(&self.feature_names[idx]).map(category_of)
    }

    /// Column indices selected by a combo.
    pub fn combo_columns(&self, combo: &FeatureCombo, e1: E1Definition) -> Result<Vec<usize>> {
        match combo {
            FeatureCombo::E1 => e1
                .columns()
                .iter()
                .map(|name| {
                    self.feature_names
                        .iter()
                        .position(|n| n == name)
                        .ok_or_else(|| Error::validation(format!("dataset lacks column {name}")))
                })
                .collect(),
            FeatureCombo::Categories(set) => {
                let cols: Vec<usize> = (0..self.n_features())
                    .filter(|&i| {
                        self.column_category(i)
                            .map(|c| set.contains(&c.code().chars().next().unwrap()))
                            .unwrap_or(false)
                    })
                    .collect();
                if cols.is_empty() {
                    return Err(Error::validation(format!(
                        "combo `{}` selects no columns",
                        combo.name()
                    )));
                }
                Ok(cols)
            }
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            feature_names: cols.iter().map(|&i| self.feature_names[i].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| cols.iter().map(|&i| r[i]).collect())
                .collect(),
            labels: self.labels.clone(),
            keys: self.keys.clone(),
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            keys: idx.iter().map(|&i| self.keys[i].clone()).collect(),
        }
    }

    /// Read a feature CSV written by `write_feature_csv`. Only viral and
    /// nonviral rows enter the dataset.
    pub fn from_feature_csv(path: &Path) -> Result<Dataset> {
        let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
        let headers = reader.headers().map_err(csv_err)?.clone();
        if headers.len() < 4 {
            return Err(Error::data("feature CSV must have hashtag,n,label + features"));
        }
        let feature_names: Vec<String> = headers.iter().skip(3).map(|s| s.to_string()).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut keys = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let tag = record.get(0).unwrap_or("").to_string();
            let label = match record.get(2) {
                Some("viral") => true,
                Some("nonviral") => false,
                Some("ineligible") => continue,
                other => {
                    return Err(Error::parse(
                        i + 2,
                        format!("bad label `{}`", other.unwrap_or("")),
                    ))
                }
            };
            let mut row = Vec::with_capacity(feature_names.len());
            for f in record.iter().skip(3) {
                let v: f64 = f
                    .parse()
                    .map_err(|_| Error::parse(i + 2, format!("bad feature value `{f}`")))?;
                row.push(v);
            }
            rows.push(row);
            labels.push(label);
            keys.push(tag);
        }
        Dataset::new(feature_names, rows, labels, keys)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

/// One exported feature row: hashtag key, threshold, label and the feature
/// values in canonical order.
pub struct FeatureRow<'a> {
    pub hashtag: &'a str,
    pub n: usize,
    pub label: Label,
    pub values: &'a [f64],
}

/// Write the feature CSV with the fixed documented column order. `names`
/// defaults to the canonical 29; geography-restricted runs pass a subset.
pub fn write_feature_csv<W: std::io::Write>(
    w: W,
    names: &[&str],
    rows: &[FeatureRow<'_>],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["hashtag", "n", "label"];
    header.extend_from_slice(names);
    out.write_record(&header).map_err(csv_err)?;
    for row in rows {
        let mut record = vec![
            row.hashtag.to_string(),
            row.n.to_string(),
            row.label.as_str().to_string(),
        ];
        record.extend(row.values.iter().map(|v| format_value(*v)));
        out.write_record(&record).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Shortest round-trippable float formatting keeps reruns byte-identical.
pub fn format_value(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Canonical full-column name list.
pub fn canonical_names() -> Vec<&'static str> {
    FEATURE_NAMES.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::new(
            vec![
                "NumOfAdopters".into(),
                "NumOfRT".into(),
                "TimeTakenToPredThr".into(),
                "CummConductance".into(),
            ],
            vec![vec![1.0, 2.0, 3.0, 0.5], vec![4.0, 5.0, 6.0, 0.25]],
            vec![true, false],
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn combo_e1_definitions() {
        let ds = toy();
        let rt = ds
            .combo_columns(&FeatureCombo::E1, E1Definition::AdoptersRetweets)
            .unwrap();
        assert_eq!(rt, vec![0, 1]);
        let time = ds
            .combo_columns(&FeatureCombo::E1, E1Definition::AdoptersTime)
            .unwrap();
        assert_eq!(time, vec![0, 2]);
    }

    #[test]
    fn combo_categories() {
        let ds = toy();
        let ec = FeatureCombo::parse("E+C").unwrap();
        let cols = ds.combo_columns(&ec, E1Definition::default()).unwrap();
        assert_eq!(cols, vec![0, 1, 2, 3]);
        let c = FeatureCombo::parse("C").unwrap();
        assert_eq!(ds.combo_columns(&c, E1Definition::default()).unwrap(), vec![3]);
        assert!(FeatureCombo::parse("E+X").is_err());
    }

    #[test]
    fn nan_rejected() {
        let err = Dataset::new(
            vec!["a".into()],
            vec![vec![f64::NAN]],
            vec![true],
            vec!["x".into()],
        );
        assert!(err.is_err());
    }

    #[test]
    fn csv_round_trip() {
        let names = vec!["NumOfAdopters", "CummConductance"];
        let rows = vec![
            FeatureRow {
                hashtag: "tag1",
                n: 100,
                label: Label::Viral,
                values: &[10.0, 0.125],
            },
            FeatureRow {
                hashtag: "tag2",
                n: 100,
                label: Label::NonViral,
                values: &[3.0, 1.0],
            },
        ];
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &names, &rows).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.csv");
        std::fs::write(&path, &buf).unwrap();
        let ds = Dataset::from_feature_csv(&path).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.labels, vec![true, false]);
        assert_eq!(ds.rows[0], vec![10.0, 0.125]);
    }
}
