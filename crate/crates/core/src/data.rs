//! Datasets, CSV ingestion, and train/test splitting.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default fraction of rows held out by [`split`].
pub const DEFAULT_TEST_FRACTION: f64 = 0.3;

/// Dense row-major matrix of covariates. `NaN` marks a missing entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n_rows: usize, n_cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch {
                expected: n_rows * n_cols,
                got: data.len(),
            });
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
        })
    }

    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for r in rows {
            if r.len() != n_cols {
                return Err(Error::DimensionMismatch {
                    expected: n_cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), n_cols, data)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            data,
        }
    }

    /// Appends one extra column (used to stack the horizon onto covariates).
    pub fn with_column(&self, column: &[f64]) -> Result<Self> {
        if column.len() != self.n_rows {
            return Err(Error::DimensionMismatch {
                expected: self.n_rows,
                got: column.len(),
            });
        }
        let n_cols = self.n_cols + 1;
        let mut data = Vec::with_capacity(self.n_rows * n_cols);
        for (row, &c) in self.rows().zip(column) {
            data.extend_from_slice(row);
            data.push(c);
        }
        Self::new(self.n_rows, n_cols, data)
    }
}

/// How a raw CSV column maps onto a numeric feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureEncoding {
    Numeric,
    /// Ordinal codes in first-appearance order: `categories[code]`.
    Categorical { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureInfo {
    pub name: String,
    pub encoding: FeatureEncoding,
}

impl FeatureInfo {
    pub fn numeric(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            encoding: FeatureEncoding::Numeric,
        }
    }
}

/// Column mapping for CSV ingestion. `feature_cols = None` means every
/// column other than the duration and event columns, in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub duration_col: String,
    pub event_col: String,
    pub feature_cols: Option<Vec<String>>,
}

impl Schema {
    pub fn new(duration_col: impl Into<String>, event_col: impl Into<String>) -> Self {
        Self {
            duration_col: duration_col.into(),
            event_col: event_col.into(),
            feature_cols: None,
        }
    }

    pub fn with_features(mut self, cols: Vec<String>) -> Self {
        self.feature_cols = Some(cols);
        self
    }
}

impl Default for Schema {
    fn default() -> Self {
        Self::new("duration", "event")
    }
}

/// Covariates plus right-censored competing-risks outcomes.
///
/// `events[i] == 0` means row `i` was censored at `durations[i]`; a label
/// `k >= 1` means event `k` was observed first at that time.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: FeatureMatrix,
    pub durations: Vec<f64>,
    pub events: Vec<u32>,
    pub k_events: u32,
    pub t_max: f64,
    pub feature_info: Vec<FeatureInfo>,
}

impl Dataset {
    /// Builds a dataset with numeric features named `x0, x1, ..`. The event
    /// count is inferred as the largest label.
    pub fn new(features: FeatureMatrix, durations: Vec<f64>, events: Vec<u32>) -> Result<Self> {
        let info = (0..features.n_cols())
            .map(|j| FeatureInfo {
                name: format!("x{j}"),
                encoding: FeatureEncoding::Numeric,
            })
            .collect();
        Self::with_info(features, durations, events, info)
    }

    pub fn with_info(
        features: FeatureMatrix,
        durations: Vec<f64>,
        events: Vec<u32>,
        feature_info: Vec<FeatureInfo>,
    ) -> Result<Self> {
        let n = durations.len();
        if n == 0 {
            return Err(Error::Validation("dataset has no rows".into()));
        }
        if events.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: events.len(),
            });
        }
        if features.n_rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: features.n_rows(),
            });
        }
        if feature_info.len() != features.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: features.n_cols(),
                got: feature_info.len(),
            });
        }
        for (i, &t) in durations.iter().enumerate() {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Validation(format!(
                    "row {i}: duration must be finite and nonnegative, got {t}"
                )));
            }
        }
        if let Some(i) = features.as_slice().iter().position(|v| v.is_infinite()) {
            return Err(Error::Validation(format!(
                "row {}: feature values must be finite or missing",
                i / features.n_cols().max(1)
            )));
        }
        let k_events = events.iter().copied().max().unwrap_or(0);
        let t_max = durations.iter().copied().fold(0.0, f64::max);
        Ok(Self {
            features,
            durations,
            events,
            k_events,
            t_max,
            feature_info,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.durations.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.n_cols()
    }

    /// Declares more competing events than observed (e.g. a test split that
    /// lacks a rare event). Lowering below an observed label is an error.
    pub fn with_k_events(mut self, k: u32) -> Result<Self> {
        let observed = self.events.iter().copied().max().unwrap_or(0);
        if k < observed {
            return Err(Error::Validation(format!(
                "declared {k} events but label {observed} is present"
            )));
        }
        self.k_events = k;
        Ok(self)
    }

    pub fn n_censored(&self) -> usize {
        self.events.iter().filter(|&&e| e == 0).count()
    }

    pub fn censoring_rate(&self) -> f64 {
        self.n_censored() as f64 / self.n_rows() as f64
    }

    /// Ensures the dataset can be used for fitting.
    pub fn check_fittable(&self) -> Result<()> {
        if self.events.iter().all(|&e| e == 0) {
            return Err(Error::Validation(
                "at least one uncensored row is required for fitting".into(),
            ));
        }
        Ok(())
    }

    /// Rows at `indices`, in that order, with `t_max` recomputed.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let durations: Vec<f64> = indices.iter().map(|&i| self.durations[i]).collect();
        let t_max = durations.iter().copied().fold(0.0, f64::max);
        Self {
            features: self.features.select_rows(indices),
            events: indices.iter().map(|&i| self.events[i]).collect(),
            durations,
            k_events: self.k_events,
            t_max,
            feature_info: self.feature_info.clone(),
        }
    }

    /// Writes features (categorical columns decoded), `duration`, and `event`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.feature_info.iter().map(|f| f.name.as_str()).collect();
        header.push("duration");
        header.push("event");
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = self
                .features
                .row(i)
                .iter()
                .zip(&self.feature_info)
                .map(|(&v, info)| encode_cell(v, &info.encoding))
                .collect();
            rec.push(self.durations[i].to_string());
            rec.push(self.events[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

fn encode_cell(v: f64, enc: &FeatureEncoding) -> String {
    if v.is_nan() {
        return String::new();
    }
    match enc {
        FeatureEncoding::Numeric => v.to_string(),
        FeatureEncoding::Categorical { categories } => categories
            .get(v as usize)
            .cloned()
            .unwrap_or_default(),
    }
}

/// Strictly increasing, nonnegative horizons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizons: Vec<f64>,
}

impl TimeGrid {
    pub fn new(horizons: Vec<f64>) -> Result<Self> {
        if horizons.is_empty() {
            return Err(Error::InvalidArgument("time grid is empty".into()));
        }
        if horizons.iter().any(|h| !h.is_finite() || *h < 0.0) {
            return Err(Error::InvalidArgument(
                "time grid values must be finite and nonnegative".into(),
            ));
        }
        if horizons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "time grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { horizons })
    }

    /// `n` evenly spaced points `end/n, 2 end/n, .., end`.
    pub fn evenly_spaced(end: f64, n: usize) -> Result<Self> {
        if n == 0 || !(end > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "cannot build {n}-point grid ending at {end}"
            )));
        }
        Self::new((1..=n).map(|j| end * j as f64 / n as f64).collect())
    }

    pub fn single(h: f64) -> Result<Self> {
        Self::new(vec![h])
    }

    pub fn horizons(&self) -> &[f64] {
        &self.horizons
    }

    pub fn len(&self) -> usize {
        self.horizons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.horizons.is_empty()
    }
}

/// Reads a dataset, inferring numeric vs categorical features.
pub fn load_dataset(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    load_impl(path.as_ref(), schema, None)
}

/// Reads a dataset using known feature encodings, typically those persisted
/// in a model file. Unseen categories become missing values.
pub fn load_dataset_with(
    path: impl AsRef<Path>,
    schema: &Schema,
    features: &[FeatureInfo],
) -> Result<Dataset> {
    load_impl(path.as_ref(), schema, Some(features))
}

fn load_impl(path: &Path, schema: &Schema, known: Option<&[FeatureInfo]>) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let dur_idx = find(&schema.duration_col)?;
    let ev_idx = find(&schema.event_col)?;
    let feat_names: Vec<String> = match (&schema.feature_cols, known) {
        (Some(cols), _) => cols.clone(),
        (None, Some(k)) => k.iter().map(|f| f.name.clone()).collect(),
        (None, None) => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != dur_idx && *i != ev_idx)
            .map(|(_, h)| h.clone())
            .collect(),
    };
    let feat_idx = feat_names
        .iter()
        .map(|n| find(n))
        .collect::<Result<Vec<_>>>()?;
    if let Some(k) = known {
        if k.len() != feat_names.len() {
            return Err(Error::Schema(format!(
                "expected {} feature columns, schema selects {}",
                k.len(),
                feat_names.len()
            )));
        }
    }

    let mut raw: Vec<Vec<String>> = Vec::new();
    let mut durations = Vec::new();
    let mut events = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = |j: usize| rec.get(j).unwrap_or("").trim();
        let d = cell(dur_idx);
        let t: f64 = d.parse().map_err(|_| Error::Parse {
            row,
            column: schema.duration_col.clone(),
            value: d.to_string(),
        })?;
        if t.is_nan() {
            return Err(Error::Validation(format!("row {row}: duration is missing")));
        }
        if t < 0.0 {
            return Err(Error::Validation(format!(
                "row {row}: negative duration {t}"
            )));
        }
        let e = cell(ev_idx);
        let label: i64 = parse_label(e).ok_or_else(|| Error::Parse {
            row,
            column: schema.event_col.clone(),
            value: e.to_string(),
        })?;
        if label < 0 {
            return Err(Error::Validation(format!(
                "row {row}: negative event label {label}"
            )));
        }
        durations.push(t);
        events.push(label as u32);
        raw.push(feat_idx.iter().map(|&j| cell(j).to_string()).collect());
    }
    if durations.is_empty() {
        return Err(Error::Validation("dataset has no rows".into()));
    }

    let (features, info) = encode_features(&raw, &feat_names, known)?;
    Dataset::with_info(features, durations, events, info)
}

/// Reads only the feature columns named in `features` (duration and event
/// columns may be absent), encoding them as at training time.
pub fn load_features(path: impl AsRef<Path>, features: &[FeatureInfo]) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let names: Vec<String> = features.iter().map(|f| f.name.clone()).collect();
    let idx = names
        .iter()
        .map(|n| {
            headers
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::Schema(format!("missing column '{n}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut raw = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        raw.push(
            idx.iter()
                .map(|&j| rec.get(j).unwrap_or("").trim().to_string())
                .collect::<Vec<_>>(),
        );
    }
    if raw.is_empty() {
        return Err(Error::Validation("dataset has no rows".into()));
    }
    Ok(encode_features(&raw, &names, Some(features))?.0)
}

fn encode_features(
    raw: &[Vec<String>],
    feat_names: &[String],
    known: Option<&[FeatureInfo]>,
) -> Result<(FeatureMatrix, Vec<FeatureInfo>)> {
    let n = raw.len();
    let d = feat_names.len();
    let mut data = vec![f64::NAN; n * d];
    let mut info = Vec::with_capacity(d);
    for j in 0..d {
        let encoding = match known {
            Some(k) => k[j].encoding.clone(),
            None => infer_encoding(raw.iter().map(|r| r[j].as_str())),
        };
        match &encoding {
            FeatureEncoding::Numeric => {
                for (i, r) in raw.iter().enumerate() {
                    let s = r[j].as_str();
                    if !s.is_empty() {
                        data[i * d + j] = s.parse().map_err(|_| Error::Parse {
                            row: i,
                            column: feat_names[j].clone(),
                            value: s.to_string(),
                        })?;
                    }
                }
            }
            FeatureEncoding::Categorical { categories } => {
                let codes: HashMap<&str, usize> = categories
                    .iter()
                    .enumerate()
                    .map(|(c, s)| (s.as_str(), c))
                    .collect();
                for (i, r) in raw.iter().enumerate() {
                    if let Some(&c) = codes.get(r[j].as_str()) {
                        data[i * d + j] = c as f64;
                    }
                }
            }
        }
        info.push(FeatureInfo {
            name: feat_names[j].clone(),
            encoding,
        });
    }
    Ok((FeatureMatrix::new(n, d, data)?, info))
}

fn parse_label(s: &str) -> Option<i64> {
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    // accept "2.0" style labels written by float-typed exporters
    let f: f64 = s.parse().ok()?;
    (f.fract() == 0.0 && f.is_finite()).then_some(f as i64)
}

fn infer_encoding<'a>(cells: impl Iterator<Item = &'a str> + Clone) -> FeatureEncoding {
    let numeric = cells
        .clone()
        .filter(|s| !s.is_empty())
        .all(|s| s.parse::<f64>().is_ok());
    if numeric {
        return FeatureEncoding::Numeric;
    }
    let mut categories: Vec<String> = Vec::new();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for s in cells.filter(|s| !s.is_empty()) {
        if seen.insert(s, ()).is_none() {
            categories.push(s.to_string());
        }
    }
    FeatureEncoding::Categorical { categories }
}

/// Splits rows into (train, test). The test split gets `max(1, floor(n f))`
/// rows; both splits keep file order.
pub fn split(data: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.n_rows();
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let nf = n as f64 * test_fraction;
    if nf < 1.0 || n as f64 - nf < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} rows with test fraction {test_fraction}"
        )));
    }
    let n_test = (nf.floor() as usize).max(1);
    let (train_idx, test_idx) = split_indices(n, n_test, seed);
    Ok((data.subset(&train_idx), data.subset(&test_idx)))
}

pub(crate) fn split_indices(n: usize, n_test: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    idx.shuffle(&mut rng);
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}
