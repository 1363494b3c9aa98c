//! CSV ingestion, z-score standardization and the balanced-test split.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, LabeledDataset};
use crate::error::{domain, Error, Result};
use crate::rng::{Purpose, TrialRng};

/// A dataset read from CSV together with the names needed to write results
/// back out.
#[derive(Debug, Clone)]
pub struct CsvDataset {
    pub data: LabeledDataset,
    pub feature_names: Vec<String>,
    /// `class_names[c.index()]` is the original label of class `c`.
    pub class_names: Vec<String>,
}

impl CsvDataset {
    pub fn class_name(&self, class: ClassId) -> &str {
        &self.class_names[class.index()]
    }
}

struct RawTable {
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Data(format!("{}: empty file (no header row)", path.display())));
    }
    let rows = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(RawTable { headers, rows })
}

fn parse_cell(path: &Path, row: usize, column: &str, cell: &str) -> Result<f64> {
    let value: f64 = cell.trim().parse().map_err(|_| {
        Error::Data(format!(
            "{}: row {row}, column '{column}': '{cell}' is not a number",
            path.display()
        ))
    })?;
    if !value.is_finite() {
        return Err(Error::Data(format!(
            "{}: row {row}, column '{column}': non-finite value '{cell}'",
            path.display()
        )));
    }
    Ok(value)
}

/// Reads a labeled CSV. Classes are numbered `1..=J` by descending count,
/// ties by first appearance. Rows are numbered from 1 after the header.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<CsvDataset> {
    let path = path.as_ref();
    let table = read_table(path)?;
    let label_pos = table.headers.iter().position(|h| h == label_column).ok_or_else(|| {
        Error::Data(format!(
            "{}: label column '{label_column}' not found; available columns: {}",
            path.display(),
            table.headers.join(", ")
        ))
    })?;
    let feature_names: Vec<String> = table
        .headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_pos)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::Data(format!("{}: no feature columns", path.display())));
    }

    let mut points = Vec::with_capacity(table.rows.len() * feature_names.len());
    let mut raw_labels = Vec::with_capacity(table.rows.len());
    for (r, record) in table.rows.iter().enumerate() {
        let row = r + 1;
        if record.len() != table.headers.len() {
            return Err(Error::Data(format!(
                "{}: row {row} has {} fields, header has {}",
                path.display(),
                record.len(),
                table.headers.len()
            )));
        }
        for (i, cell) in record.iter().enumerate() {
            if i == label_pos {
                raw_labels.push(cell.trim().to_string());
            } else {
                points.push(parse_cell(path, row, &table.headers[i], cell)?);
            }
        }
    }

    let mut first_seen: Vec<String> = Vec::new();
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in &raw_labels {
        let c = counts.entry(l.as_str()).or_insert(0);
        if *c == 0 {
            first_seen.push(l.clone());
        }
        *c += 1;
    }
    let mut class_names = first_seen;
    // Stable sort keeps first-appearance order among equal counts.
    class_names.sort_by(|a, b| counts[b.as_str()].cmp(&counts[a.as_str()]));
    let ids: HashMap<&str, ClassId> = class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), ClassId::from_index(i)))
        .collect();
    let labels = raw_labels.iter().map(|l| ids[l.as_str()]).collect();
    let data = LabeledDataset::new(feature_names.len(), points, labels, class_names.len())?;
    Ok(CsvDataset {
        data,
        feature_names,
        class_names,
    })
}

/// Reads an unlabeled feature table whose columns must equal
/// `expected_features` (same names, same order). A column named
/// `ignore_column`, if present, is skipped.
pub fn load_features_csv(
    path: impl AsRef<Path>,
    expected_features: &[String],
    ignore_column: Option<&str>,
) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let table = read_table(path)?;
    let used: Vec<usize> = (0..table.headers.len())
        .filter(|&i| Some(table.headers[i].as_str()) != ignore_column)
        .collect();
    let headers: Vec<&String> = used.iter().map(|&i| &table.headers[i]).collect();
    if headers.len() != expected_features.len() || headers.iter().zip(expected_features).any(|(a, b)| *a != b) {
        let missing: Vec<&str> = expected_features
            .iter()
            .filter(|f| !headers.contains(f))
            .map(String::as_str)
            .collect();
        let extra: Vec<&str> = headers
            .iter()
            .filter(|h| !expected_features.contains(h))
            .map(|h| h.as_str())
            .collect();
        return Err(Error::Data(format!(
            "{}: feature columns differ from training data (missing: [{}], extra: [{}]{})",
            path.display(),
            missing.join(", "),
            extra.join(", "),
            if missing.is_empty() && extra.is_empty() { ", order differs" } else { "" }
        )));
    }
    table
        .rows
        .iter()
        .enumerate()
        .map(|(r, record)| {
            if record.len() != table.headers.len() {
                return Err(Error::Data(format!(
                    "{}: row {} has {} fields, header has {}",
                    path.display(),
                    r + 1,
                    record.len(),
                    table.headers.len()
                )));
            }
            used.iter()
                .map(|&i| parse_cell(path, r + 1, &table.headers[i], &record[i]))
                .collect()
        })
        .collect()
}

/// Training-set means and standard deviations (denominator `n - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    /// Original column indices kept, in order.
    pub kept: Vec<usize>,
    /// Constant columns that were removed.
    pub dropped: Vec<usize>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl StandardizationParams {
    pub fn fit(train: &LabeledDataset) -> Result<Self> {
        if train.is_empty() {
            return domain("cannot standardize from an empty training set");
        }
        let n = train.len() as f64;
        let mut params = Self {
            kept: Vec::new(),
            dropped: Vec::new(),
            means: Vec::new(),
            sds: Vec::new(),
        };
        for j in 0..train.dim() {
            let mean = train.rows().map(|r| r[j]).sum::<f64>() / n;
            let ss: f64 = train.rows().map(|r| (r[j] - mean) * (r[j] - mean)).sum();
            let sd = if train.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
            if sd > 0.0 && sd.is_finite() {
                params.kept.push(j);
                params.means.push(mean);
                params.sds.push(sd);
            } else {
                params.dropped.push(j);
            }
        }
        if params.kept.is_empty() {
            return domain("every feature is constant on the training set");
        }
        Ok(params)
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        self.kept
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&j, (m, s))| (row[j] - m) / s)
            .collect()
    }

    pub fn transform(&self, data: &LabeledDataset) -> LabeledDataset {
        let points = data.rows().flat_map(|r| self.transform_row(r)).collect();
        data.with_points(self.kept.len(), points)
    }
}

/// Z-scores `train` and every dataset in `others` with the training
/// parameters.
pub fn standardize(
    train: &LabeledDataset,
    others: &[&LabeledDataset],
) -> Result<(LabeledDataset, Vec<LabeledDataset>, StandardizationParams)> {
    let params = StandardizationParams::fit(train)?;
    for o in others {
        if o.dim() != train.dim() {
            return Err(Error::DimensionMismatch {
                expected: train.dim(),
                actual: o.dim(),
            });
        }
    }
    let others = others.iter().map(|o| params.transform(o)).collect();
    Ok((params.transform(train), others, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub minority_test_fraction: f64,
    pub seed: u64,
    pub trials: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            minority_test_fraction: 0.25,
            seed: 0,
            trials: 1,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.minority_test_fraction > 0.0 && self.minority_test_fraction < 1.0) {
            return domain(format!(
                "test fraction must lie in (0, 1), got {}",
                self.minority_test_fraction
            ));
        }
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        Ok(())
    }

    /// Test points per class: `fraction x smallest class`, rounded half to even.
    pub fn test_per_class(&self, class_counts: &[usize]) -> Result<usize> {
        self.validate()?;
        let smallest = class_counts.iter().copied().min().unwrap_or(0);
        if smallest < 4 {
            return domain(format!("smallest class has {smallest} members, need at least 4"));
        }
        let m = (self.minority_test_fraction * smallest as f64).round_ties_even() as usize;
        if m == 0 || m >= smallest {
            return domain(format!(
                "fraction {} of {smallest} leaves no usable test or training part",
                self.minority_test_fraction
            ));
        }
        Ok(m)
    }
}

/// Row indices of one train/test partition, each ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub trial: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Draws `m` test points from every class, where `m` comes from the smallest
/// class; everything else is training data. The draw is a fixed function of
/// `(seed, trial)`.
pub fn split_indices(data: &LabeledDataset, spec: &SplitSpec, trial: usize) -> Result<SplitIndices> {
    let m = spec.test_per_class(data.class_counts())?;
    let mut rng = TrialRng::new(spec.seed, trial as u64, Purpose::Split);
    let mut is_test = vec![false; data.len()];
    for class in data.class_ids() {
        let mut members: Vec<usize> = (0..data.len()).filter(|&i| data.label(i) == class).collect();
        rng.shuffle(&mut members);
        for &i in &members[..m] {
            is_test[i] = true;
        }
    }
    let (test, train) = (0..data.len()).partition(|&i| is_test[i]);
    Ok(SplitIndices { trial, train, test })
}

pub fn balanced_split(data: &LabeledDataset, spec: &SplitSpec, trial: usize) -> Result<(LabeledDataset, LabeledDataset)> {
    let idx = split_indices(data, spec, trial)?;
    Ok((data.subset(&idx.train), data.subset(&idx.test)))
}

/// All partitions of a run, for external audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub schema: u32,
    pub seed: u64,
    pub minority_test_fraction: f64,
    pub test_per_class: usize,
    pub splits: Vec<SplitIndices>,
}

pub fn split_manifest(data: &LabeledDataset, spec: &SplitSpec) -> Result<SplitManifest> {
    let test_per_class = spec.test_per_class(data.class_counts())?;
    let splits = (0..spec.trials)
        .map(|t| split_indices(data, spec, t))
        .collect::<Result<_>>()?;
    Ok(SplitManifest {
        schema: 1,
        seed: spec.seed,
        minority_test_fraction: spec.minority_test_fraction,
        test_per_class,
        splits,
    })
}
