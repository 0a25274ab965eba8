//! Dataset construction, CSV ingestion, normalization, and splitting.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::num::{real, to_f64, Real};
use crate::rng;

/// Errors from dataset construction and loading.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("need at least as many samples as classes (n={n}, k={k})")]
    TooFewSamples { n: usize, k: usize },
    #[error("need at least one feature dimension")]
    NoFeatures,
    #[error("separation must be finite and non-negative, got {0}")]
    BadSeparation(f64),
    #[error("label {label} at row {row} outside [0, {k})")]
    LabelOutOfRange { row: usize, label: usize, k: usize },
    #[error("class {0} has no samples")]
    EmptyClass(usize),
    #[error("non-finite feature at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: String },
    #[error("grid shape {h}x{w} does not match feature count {d}")]
    GridMismatch { h: usize, w: usize, d: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv parse failure in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("file {0} has no data rows")]
    EmptyFile(String),
    #[error("target column '{0}' not found in header")]
    MissingTarget(String),
    #[error("cannot parse '{value}' as a number at row {row}, column '{column}'")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("target column has {0} distinct values; at most 64 classes supported")]
    TooManyClasses(usize),
    #[error("train fraction {0} must lie in (0, 1]")]
    BadFraction(f64),
    #[error("split produced an empty train partition")]
    EmptyTrain,
}

/// A classification dataset: an n-by-d feature matrix with integer class labels.
///
/// Feature values live in one real-valued domain regardless of origin; a
/// dataset whose rows are rasters carries `grid_shape = (h, w)` with
/// `h * w = d`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub features: Array2<T>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub grid_shape: Option<(usize, usize)>,
    pub feature_names: Option<Vec<String>>,
}

impl<T: Real> Dataset<T> {
    /// Construct and validate: labels in range, every class inhabited,
    /// finite features, consistent grid shape.
    pub fn new(
        features: Array2<T>,
        labels: Vec<usize>,
        class_count: usize,
    ) -> Result<Self, DataError> {
        let ds = Self {
            features,
            labels,
            class_count,
            grid_shape: None,
            feature_names: None,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Attach a raster shape; fails unless `h * w` equals the feature count.
    pub fn with_grid(mut self, h: usize, w: usize) -> Result<Self, DataError> {
        if h * w != self.dims() {
            return Err(DataError::GridMismatch {
                h,
                w,
                d: self.dims(),
            });
        }
        self.grid_shape = Some((h, w));
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> usize {
        self.features.ncols()
    }

    /// Full invariant check; called by constructors, available to callers
    /// that assemble datasets field by field.
    pub fn validate(&self) -> Result<(), DataError> {
        let n = self.len();
        let k = self.class_count;
        if self.labels.len() != n {
            return Err(DataError::TooFewSamples { n, k });
        }
        let mut seen = vec![false; k];
        for (row, &label) in self.labels.iter().enumerate() {
            if label >= k {
                return Err(DataError::LabelOutOfRange { row, label, k });
            }
            seen[label] = true;
        }
        if let Some(class) = seen.iter().position(|s| !s) {
            return Err(DataError::EmptyClass(class));
        }
        for ((row, col), value) in self.features.indexed_iter() {
            if !value.is_finite() {
                return Err(DataError::NonFiniteFeature {
                    row,
                    column: self.column_name(col),
                });
            }
        }
        if let Some((h, w)) = self.grid_shape {
            if h * w != self.dims() {
                return Err(DataError::GridMismatch {
                    h,
                    w,
                    d: self.dims(),
                });
            }
        }
        Ok(())
    }

    fn column_name(&self, col: usize) -> String {
        match &self.feature_names {
            Some(names) => names[col].clone(),
            None => format!("f{col}"),
        }
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Select rows by index, preserving order. Does not re-validate class
    /// coverage; partitions may legitimately miss classes.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let d = self.dims();
        let mut features = Array2::<T>::zeros((indices.len(), d));
        let mut labels = Vec::with_capacity(indices.len());
        for (out_row, &idx) in indices.iter().enumerate() {
            for col in 0..d {
                features[[out_row, col]] = self.features[[idx, col]];
            }
            labels.push(self.labels[idx]);
        }
        Self {
            features,
            labels,
            class_count: self.class_count,
            grid_shape: self.grid_shape,
            feature_names: self.feature_names.clone(),
        }
    }

    /// Write the dataset as CSV: a header row with feature names followed by
    /// a target column, values printed in full round-trip precision.
    pub fn write_csv(&self, path: &Path, target_column: &str) -> Result<(), DataError> {
        let mut out = String::new();
        let d = self.dims();
        for col in 0..d {
            let _ = write!(out, "{},", self.column_name(col));
        }
        let _ = writeln!(out, "{target_column}");
        for row in 0..self.len() {
            for col in 0..d {
                let _ = write!(out, "{},", to_f64(self.features[[row, col]]));
            }
            let _ = writeln!(out, "{}", self.labels[row]);
        }
        std::fs::write(path, out).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// How a train/test split is drawn.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

/// Generate `k` isotropic unit-variance Gaussian clusters with balanced
/// class counts and centers at least `separation` apart.
///
/// Centers are placed on an integer lattice scaled by `separation`
/// (enumerated by ascending norm, ties broken lexicographically), which
/// guarantees the pairwise-distance bound deterministically. Labels are
/// assigned round-robin so class sizes differ by at most one.
pub fn generate_blobs<T: Real>(
    n: usize,
    d: usize,
    k: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset<T>, DataError> {
    if d == 0 {
        return Err(DataError::NoFeatures);
    }
    if k < 2 || n < k {
        return Err(DataError::TooFewSamples { n, k });
    }
    if !separation.is_finite() || separation < 0.0 {
        return Err(DataError::BadSeparation(separation));
    }

    let centers = lattice_centers(k, d);
    let mut rng = rng::stream(seed);
    let mut features = Array2::<T>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for row in 0..n {
        let class = row % k;
        labels.push(class);
        for col in 0..d {
            let noise: f64 = rng.sample(StandardNormal);
            let center = centers[class][col] as f64 * separation;
            features[[row, col]] = real(center + noise);
        }
    }
    Dataset::new(features, labels, k)
}

/// First `k` points of the integer lattice in `Z^d`, ordered by
/// (squared norm, lexicographic). Distinct points are at distance >= 1.
fn lattice_centers(k: usize, d: usize) -> Vec<Vec<i64>> {
    let mut points: Vec<Vec<i64>> = Vec::new();
    let mut radius: i64 = 0;
    while points.len() < k {
        radius += 1;
        points = enumerate_box(radius, d);
        points.sort_by_key(|p| {
            let norm: i64 = p.iter().map(|&c| c * c).sum();
            (norm, p.clone())
        });
    }
    points.truncate(k);
    points
}

fn enumerate_box(radius: i64, d: usize) -> Vec<Vec<i64>> {
    let mut points = vec![vec![]];
    for _ in 0..d {
        let mut next = Vec::new();
        for p in &points {
            for c in 0..=radius {
                let mut q = p.clone();
                q.push(c);
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Load a CSV classification dataset. Non-target numeric columns become
/// features; target values are relabeled to dense indices in
/// first-appearance order; row order is preserved.
pub fn load_csv<T: Real>(path: &Path, target_column: &str) -> Result<Dataset<T>, DataError> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: display.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, e.to_string()),
            },
            _ => DataError::Csv {
                path: display.clone(),
                source: e,
            },
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| DataError::Csv {
            path: display.clone(),
            source: e,
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let target_idx = headers
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| DataError::MissingTarget(target_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != target_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut labels = Vec::new();
    let mut class_ids: HashMap<String, usize> = HashMap::new();
    let mut class_order = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv {
            path: display.clone(),
            source: e,
        })?;
        let mut row: Vec<T> = Vec::with_capacity(headers.len().saturating_sub(1));
        for (col_idx, cell) in record.iter().enumerate() {
            if col_idx == target_idx {
                continue;
            }
            let column = headers[col_idx].clone();
            let value: f64 = cell.trim().parse().map_err(|_| DataError::BadCell {
                row: row_idx + 1,
                column: column.clone(),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::NonFiniteFeature {
                    row: row_idx + 1,
                    column,
                });
            }
            row.push(real(value));
        }
        let target = record
            .get(target_idx)
            .unwrap_or("")
            .trim()
            .to_string();
        let next_id = class_ids.len();
        let id = *class_ids.entry(target.clone()).or_insert_with(|| {
            class_order.push(target);
            next_id
        });
        labels.push(id);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DataError::EmptyFile(display));
    }
    if class_ids.len() > 64 {
        return Err(DataError::TooManyClasses(class_ids.len()));
    }

    let d = rows[0].len();
    let mut features = Array2::<T>::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            features[[i, j]] = v;
        }
    }
    let mut ds = Dataset::new(features, labels, class_ids.len())?;
    ds.feature_names = Some(feature_names);
    Ok(ds)
}

/// Standardize each feature column to mean 0 and population standard
/// deviation 1; zero-variance columns become all-zero.
pub fn standardize<T: Real>(ds: &Dataset<T>) -> Dataset<T> {
    let n = ds.len();
    let mut out = ds.clone();
    if n == 0 {
        return out;
    }
    let n_t: T = real(n as f64);
    for col in 0..ds.dims() {
        let column = ds.features.index_axis(Axis(1), col);
        let mean = column.iter().fold(T::zero(), |acc, &v| acc + v) / n_t;
        let var = column
            .iter()
            .fold(T::zero(), |acc, &v| acc + (v - mean) * (v - mean))
            / n_t;
        let std = var.sqrt();
        for row in 0..n {
            out.features[[row, col]] = if std > T::zero() {
                (ds.features[[row, col]] - mean) / std
            } else {
                T::zero()
            };
        }
    }
    out
}

/// Stratified train/test split: per class, a seeded shuffle decides which
/// rows go to train; original row order is preserved within each partition.
pub fn split<T: Real>(
    ds: &Dataset<T>,
    spec: &SplitSpec,
) -> Result<(Dataset<T>, Dataset<T>), DataError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0) {
        return Err(DataError::BadFraction(spec.train_fraction));
    }
    if spec.train_fraction == 1.0 {
        let empty = ds.subset(&[]);
        return Ok((ds.clone(), empty));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.class_count];
    for (idx, &y) in ds.labels.iter().enumerate() {
        by_class[y].push(idx);
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for (class, members) in by_class.iter().enumerate() {
        let mut order = members.clone();
        let mut rng = rng::derived_stream(spec.seed, &["split", &class.to_string()]);
        fisher_yates(&mut order, &mut rng);
        let want = (spec.train_fraction * members.len() as f64 + 0.5).floor() as usize;
        let take = want.clamp(1.min(members.len()), members.len());
        train_idx.extend_from_slice(&order[..take]);
        test_idx.extend_from_slice(&order[take..]);
    }
    if train_idx.is_empty() {
        return Err(DataError::EmptyTrain);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.subset(&train_idx), ds.subset(&test_idx)))
}

/// In-place Fisher-Yates shuffle driven by an explicit stream.
pub(crate) fn fisher_yates<R: Rng>(values: &mut [usize], rng: &mut R) {
    for i in (1..values.len()).rev() {
        let j = rng.gen_range(0..=i);
        values.swap(i, j);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blobs_balanced_and_separated() {
        let ds: Dataset<f64> = generate_blobs(4, 2, 2, 10.0, 0).unwrap();
        assert_eq!(ds.class_counts(), vec![2, 2]);
        // class centroids should sit near lattice points 10 apart
        let centers = lattice_centers(2, 2);
        let dist: f64 = (0..2)
            .map(|c| {
                let diff = (centers[0][c] - centers[1][c]) as f64 * 10.0;
                diff * diff
            })
            .sum::<f64>()
            .sqrt();
        assert!(dist >= 10.0);
    }

    #[test]
    fn blobs_deterministic() {
        let a: Dataset<f64> = generate_blobs(50, 3, 4, 5.0, 7).unwrap();
        let b: Dataset<f64> = generate_blobs(50, 3, 4, 5.0, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn blobs_rejects_bad_inputs() {
        assert!(generate_blobs::<f64>(1, 2, 2, 1.0, 0).is_err());
        assert!(generate_blobs::<f64>(10, 0, 2, 1.0, 0).is_err());
        assert!(generate_blobs::<f64>(10, 2, 2, f64::NAN, 0).is_err());
    }

    #[test]
    fn lattice_centers_pairwise_distance() {
        for (k, d) in [(2, 1), (5, 2), (10, 3), (4, 2)] {
            let centers = lattice_centers(k, d);
            assert_eq!(centers.len(), k);
            for i in 0..k {
                for j in (i + 1)..k {
                    let dist2: i64 = (0..d)
                        .map(|c| (centers[i][c] - centers[j][c]).pow(2))
                        .sum();
                    assert!(dist2 >= 1, "centers {i} and {j} coincide");
                }
            }
        }
    }

    #[test]
    fn standardize_hand_example() {
        // column [1,2,3]: population std = sqrt(2/3)
        let features: Array2<f64> = ndarray::array![[1.0], [2.0], [3.0]];
        let ds = Dataset::new(features, vec![0, 1, 0], 2).unwrap();
        let out = standardize(&ds);
        let expected = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((out.features[[0, 0]] + expected).abs() < 1e-9);
        assert!((out.features[[0, 0]] + 1.2247).abs() < 1e-4);
        assert!(out.features[[1, 0]].abs() < 1e-12);
        assert!((out.features[[2, 0]] - expected).abs() < 1e-9);
    }

    #[test]
    fn standardize_constant_column_and_idempotence() {
        let features: Array2<f64> = ndarray::array![[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]];
        let ds = Dataset::new(features, vec![0, 1, 1], 2).unwrap();
        let once = standardize(&ds);
        for row in 0..3 {
            assert_eq!(once.features[[row, 0]], 0.0);
        }
        let twice = standardize(&once);
        for ((i, j), v) in twice.features.indexed_iter() {
            assert!((v - once.features[[i, j]]).abs() < 1e-9);
        }
    }

    #[test]
    fn split_full_fraction_returns_everything() {
        let ds: Dataset<f64> = generate_blobs(10, 2, 2, 3.0, 1).unwrap();
        let (train, test) = split(&ds, &SplitSpec { train_fraction: 1.0, seed: 0 }).unwrap();
        assert_eq!(train, ds);
        assert!(test.is_empty());
    }

    #[test]
    fn split_stratified_counts() {
        let ds: Dataset<f64> = generate_blobs(100, 2, 2, 3.0, 2).unwrap();
        let (train, test) = split(&ds, &SplitSpec { train_fraction: 0.8, seed: 5 }).unwrap();
        let counts = train.class_counts();
        assert_eq!(counts, vec![40, 40]);
        assert_eq!(train.len() + test.len(), 100);
    }

    #[test]
    fn split_deterministic() {
        let ds: Dataset<f64> = generate_blobs(60, 2, 3, 3.0, 3).unwrap();
        let spec = SplitSpec { train_fraction: 0.7, seed: 11 };
        let (a_train, a_test) = split(&ds, &spec).unwrap();
        let (b_train, b_test) = split(&ds, &spec).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("blobs.csv");
        let ds: Dataset<f64> = generate_blobs(30, 3, 3, 4.0, 9).unwrap();
        ds.write_csv(&path, "label").unwrap();
        let loaded: Dataset<f64> = load_csv(&path, "label").unwrap();
        assert_eq!(loaded.features, ds.features);
        assert_eq!(loaded.labels, ds.labels);
        assert_eq!(loaded.class_count, ds.class_count);
    }

    #[test]
    fn csv_first_appearance_relabeling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tiny.csv");
        std::fs::write(&path, "x1,x2,y\n1.0,2.0,b\n3.0,4.0,a\n5.0,6.0,b\n").unwrap();
        let ds: Dataset<f64> = load_csv(&path, "y").unwrap();
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.class_count, 2);
        assert_eq!(ds.feature_names.as_deref(), Some(&["x1".to_string(), "x2".to_string()][..]));
    }

    #[test]
    fn csv_nan_cell_is_reported_with_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b,y\n1.0,NaN,0\n2.0,3.0,1\n").unwrap();
        let err = load_csv::<f64>(&path, "y").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains('b'), "{msg}");
    }

    #[test]
    fn csv_error_cases() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_csv::<f64>(&dir.path().join("missing.csv"), "y").is_err());

        let path = dir.path().join("no_target.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(
            load_csv::<f64>(&path, "y").unwrap_err(),
            DataError::MissingTarget(_)
        ));

        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "a,y\n").unwrap();
        assert!(matches!(
            load_csv::<f64>(&empty, "y").unwrap_err(),
            DataError::EmptyFile(_)
        ));

        let text = dir.path().join("text.csv");
        std::fs::write(&text, "a,y\nhello,0\n").unwrap();
        assert!(matches!(
            load_csv::<f64>(&text, "y").unwrap_err(),
            DataError::BadCell { .. }
        ));
    }

    #[test]
    fn grid_shape_checked() {
        let ds: Dataset<f64> = generate_blobs(8, 6, 2, 3.0, 0).unwrap();
        assert!(ds.clone().with_grid(2, 3).is_ok());
        assert!(ds.with_grid(2, 2).is_err());
    }
}
