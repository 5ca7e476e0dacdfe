//! Dataset representation, CSV/JSON ingestion, standardization, stratified
//! splitting and synthetic data with known informative dimensions.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A contiguous block of the feature vector produced by one descriptor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGroupSpec {
    pub name: String,
    pub offset: usize,
    pub length: usize,
    /// Each bin of this group can be addressed from individual cloud points.
    pub point_mapped: bool,
}

impl FeatureGroupSpec {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.length
    }
}

/// Checks that `groups` are disjoint, ordered, non-empty and cover `[0, dims)`.
pub fn validate_groups(groups: &[FeatureGroupSpec], dims: usize) -> Result<()> {
    if groups.is_empty() {
        return Err(Error::GroupLayout("no feature groups".into()));
    }
    let mut names = HashSet::new();
    let mut cursor = 0usize;
    for g in groups {
        if g.length == 0 {
            return Err(Error::GroupLayout(format!("group `{}` has zero length", g.name)));
        }
        if !names.insert(g.name.as_str()) {
            return Err(Error::GroupLayout(format!("duplicate group name `{}`", g.name)));
        }
        if g.offset < cursor {
            return Err(Error::GroupLayout(format!(
                "group `{}` at offset {} overlaps the previous group ending at {}",
                g.name, g.offset, cursor
            )));
        }
        if g.offset > cursor {
            return Err(Error::GroupLayout(format!(
                "gap: dimensions [{}, {}) are not covered by any group",
                cursor, g.offset
            )));
        }
        cursor = g.offset + g.length;
    }
    if cursor != dims {
        return Err(Error::GroupLayout(format!(
            "groups cover [0, {cursor}) but the feature matrix has {dims} dimensions"
        )));
    }
    Ok(())
}

/// Per-dimension mean and population standard deviation of the raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Always `"population"` (divide by N).
    pub convention: String,
}

impl StandardizationParams {
    /// Fits on the rows of `features`. Zero-variance columns record std 1.
    pub fn fit(features: &Array2<f64>) -> Result<Self> {
        let n = features.nrows();
        if n == 0 {
            return Err(Error::InvalidArgument("cannot standardize an empty matrix".into()));
        }
        let mean = features.mean_axis(Axis(0)).expect("non-empty");
        let mut std = Vec::with_capacity(features.ncols());
        for (j, col) in features.axis_iter(Axis(1)).enumerate() {
            let m = mean[j];
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            let s = var.sqrt();
            std.push(if s > 0.0 && s.is_finite() { s } else { 1.0 });
        }
        Ok(Self {
            mean: mean.to_vec(),
            std,
            convention: "population".into(),
        })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.dims() {
            return Err(Error::DimensionMismatch {
                context: "standardization".into(),
                expected: self.dims(),
                found: features.ncols(),
            });
        }
        let mut out = features.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std[j]);
            col.mapv_inplace(|v| (v - m) / s);
        }
        Ok(out)
    }

    pub fn apply_row(&self, row: &[f64]) -> Result<Array1<f64>> {
        if row.len() != self.dims() {
            return Err(Error::DimensionMismatch {
                context: "standardization".into(),
                expected: self.dims(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }
}

/// N instances × D features with N × A binary affordance labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Array2<f64>,
    pub labels: Array2<u8>,
    pub affordance_names: Vec<String>,
    pub feature_names: Vec<String>,
    pub groups: Vec<FeatureGroupSpec>,
    pub instance_ids: Vec<String>,
    /// Parameters used to standardize `features`; `None` for raw data.
    pub standardization: Option<StandardizationParams>,
}

impl Dataset {
    /// Builds a dataset, enumerating every load-time invariant violation.
    pub fn new(
        features: Array2<f64>,
        labels: Array2<u8>,
        affordance_names: Vec<String>,
        feature_names: Vec<String>,
        groups: Vec<FeatureGroupSpec>,
        instance_ids: Vec<String>,
    ) -> Result<Self> {
        let mut problems = Vec::new();
        let (n, d) = features.dim();
        if labels.nrows() != n {
            problems.push(Error::DimensionMismatch {
                context: format!("label rows ({}) vs feature rows ({n})", labels.nrows()),
                expected: n,
                found: labels.nrows(),
            });
        }
        if labels.ncols() != affordance_names.len() {
            problems.push(Error::DimensionMismatch {
                context: "affordance names vs label columns".into(),
                expected: labels.ncols(),
                found: affordance_names.len(),
            });
        }
        if feature_names.len() != d {
            problems.push(Error::DimensionMismatch {
                context: "feature names vs feature columns".into(),
                expected: d,
                found: feature_names.len(),
            });
        }
        if instance_ids.len() != n {
            problems.push(Error::DimensionMismatch {
                context: "instance ids vs feature rows".into(),
                expected: n,
                found: instance_ids.len(),
            });
        }
        for ((i, j), v) in features.indexed_iter() {
            if !v.is_finite() {
                problems.push(Error::NonFinite {
                    location: format!("feature row {i}, column {j}"),
                });
            }
        }
        if let Some((&bad, (i, j))) = labels
            .indexed_iter()
            .find(|(_, &v)| v > 1)
            .map(|(ij, v)| (v, ij))
        {
            problems.push(Error::InvalidArgument(format!(
                "label at row {i}, column {j} is {bad}; expected 0 or 1"
            )));
        }
        if labels.ncols() == affordance_names.len() {
            for (a, col) in labels.axis_iter(Axis(1)).enumerate() {
                let positives = col.iter().filter(|&&v| v == 1).count();
                let negatives = col.len() - positives;
                if positives == 0 || negatives == 0 {
                    problems.push(Error::DegenerateAffordance {
                        name: affordance_names[a].clone(),
                        positives,
                        negatives,
                    });
                }
            }
        }
        if let Err(e) = validate_groups(&groups, d) {
            problems.push(e);
        }
        match problems.len() {
            0 => Ok(Self {
                features,
                labels,
                affordance_names,
                feature_names,
                groups,
                instance_ids,
                standardization: None,
            }),
            1 => Err(problems.pop().unwrap()),
            _ => Err(Error::Multiple(problems)),
        }
    }

    pub fn n_instances(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_affordances(&self) -> usize {
        self.labels.ncols()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardization.is_some()
    }

    pub fn affordance_index(&self, name: &str) -> Option<usize> {
        self.affordance_names.iter().position(|n| n == name)
    }

    fn check_affordance(&self, affordance: usize) -> Result<()> {
        if affordance >= self.n_affordances() {
            return Err(Error::InvalidArgument(format!(
                "affordance index {affordance} out of range (A = {})",
                self.n_affordances()
            )));
        }
        Ok(())
    }

    /// Binary labels of one affordance column.
    pub fn binary_labels(&self, affordance: usize) -> Vec<bool> {
        self.labels.column(affordance).iter().map(|&v| v == 1).collect()
    }

    /// Rows `indices` in the given order. Load-time degeneracy checks are not
    /// re-run: a subset may lack positives for affordances it was not
    /// stratified on.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: self.labels.select(Axis(0), indices),
            affordance_names: self.affordance_names.clone(),
            feature_names: self.feature_names.clone(),
            groups: self.groups.clone(),
            instance_ids: indices.iter().map(|&i| self.instance_ids[i].clone()).collect(),
            standardization: self.standardization.clone(),
        }
    }

    /// Applies previously fitted parameters (e.g. a training fold's) to this
    /// raw dataset.
    pub fn standardized_with(&self, params: &StandardizationParams) -> Result<Self> {
        if self.is_standardized() {
            return Err(Error::AlreadyStandardized);
        }
        let mut out = self.clone();
        out.features = params.apply(&self.features)?;
        out.standardization = Some(params.clone());
        Ok(out)
    }
}

/// Fits population mean/std on `dataset` and returns the standardized copy.
pub fn standardize(dataset: &Dataset) -> Result<(Dataset, StandardizationParams)> {
    if dataset.is_standardized() {
        return Err(Error::AlreadyStandardized);
    }
    let params = StandardizationParams::fit(&dataset.features)?;
    let out = dataset.standardized_with(&params)?;
    Ok((out, params))
}

/// Train/test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Number of instances of one class that go to the training side.
///
/// `round(ratio * n)`, clamped so both sides keep at least one instance.
pub fn stratum_train_count(n: usize, ratio: f64) -> usize {
    let raw = (ratio * n as f64).round() as usize;
    raw.clamp(1, n.saturating_sub(1).max(1))
}

fn class_indices(labels: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    (pos, neg)
}

/// Stratified train/test partition of the rows of one affordance column.
pub fn split_indices(labels: &[bool], ratio: f64, seed: u64) -> Result<SplitIndices> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("split ratio {ratio} not in (0, 1)")));
    }
    let (mut pos, mut neg) = class_indices(labels);
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::InsufficientClass(format!(
            "split needs at least 2 positives and 2 negatives, found {} and {}",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let np = stratum_train_count(pos.len(), ratio);
    let nn = stratum_train_count(neg.len(), ratio);
    let mut train: Vec<usize> = pos[..np].iter().chain(&neg[..nn]).copied().collect();
    let mut test: Vec<usize> = pos[np..].iter().chain(&neg[nn..]).copied().collect();
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Stratified split of `dataset` on one affordance column.
pub fn split(dataset: &Dataset, affordance: usize, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    dataset.check_affordance(affordance)?;
    let idx = split_indices(&dataset.binary_labels(affordance), ratio, seed)?;
    Ok((dataset.subset(&idx.train), dataset.subset(&idx.test)))
}

/// Stratified k-fold partition. Returns `(train, validation)` index pairs.
///
/// Positives are dealt round-robin over the folds after shuffling, and the
/// negatives continue the deal where the positives stopped, so fold sizes
/// differ by at most one.
pub fn kfold_indices(labels: &[bool], k: usize, seed: u64) -> Result<Vec<SplitIndices>> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k-fold needs k >= 2, got {k}")));
    }
    let (mut pos, mut neg) = class_indices(labels);
    if pos.len() < k || neg.len() < k {
        return Err(Error::InsufficientClass(format!(
            "{k}-fold split needs at least {k} positives and {k} negatives, found {} and {}",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut fold_of = vec![0usize; labels.len()];
    for (r, &i) in pos.iter().chain(&neg).enumerate() {
        fold_of[i] = r % k;
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
            SplitIndices { train, test }
        })
        .collect())
}

pub fn kfold(dataset: &Dataset, affordance: usize, k: usize, seed: u64) -> Result<Vec<(Dataset, Dataset)>> {
    dataset.check_affordance(affordance)?;
    Ok(kfold_indices(&dataset.binary_labels(affordance), k, seed)?
        .into_iter()
        .map(|s| (dataset.subset(&s.train), dataset.subset(&s.test)))
        .collect())
}

/// Two-class synthetic problem whose classes differ only along
/// `informative_dims`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    /// Instances in the negative and positive class.
    pub n_per_class: [usize; 2],
    #[serde(rename = "D")]
    pub dims: usize,
    pub informative_dims: Vec<usize>,
    pub class_separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims == 0 {
            return Err(Error::InvalidArgument("synthetic D must be positive".into()));
        }
        if self.informative_dims.is_empty() {
            return Err(Error::InvalidArgument(
                "informative_dims is empty; class separation must act on some dimension".into(),
            ));
        }
        validate_dim_list(&self.informative_dims, self.dims)?;
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return Err(Error::InvalidArgument("class_separation must be positive".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::InvalidArgument("noise_std must be non-negative".into()));
        }
        if self.n_per_class.contains(&0) {
            return Err(Error::InvalidArgument("both classes need at least one instance".into()));
        }
        Ok(())
    }
}

fn validate_dim_list(dims: &[usize], total: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for &d in dims {
        if d >= total {
            return Err(Error::InvalidArgument(format!("informative dim {d} outside [0, {total})")));
        }
        if !seen.insert(d) {
            return Err(Error::InvalidArgument(format!("informative dim {d} listed twice")));
        }
    }
    Ok(())
}

fn synthetic_names(dims: usize, n: usize) -> (Vec<String>, Vec<String>, Vec<FeatureGroupSpec>) {
    let feature_names = (0..dims).map(|j| format!("f{j}")).collect();
    let ids = (0..n).map(|i| format!("s{i:05}")).collect();
    let groups = vec![FeatureGroupSpec {
        name: "features".into(),
        offset: 0,
        length: dims,
        point_mapped: true,
    }];
    (feature_names, ids, groups)
}

/// Generates the dataset and returns it with the informative dimensions.
///
/// Negatives are centred at the origin, positives at `class_separation` along
/// each informative dimension. Rows are ordered negatives first.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<(Dataset, Vec<usize>)> {
    spec.validate()?;
    let [n0, n1] = spec.n_per_class;
    let n = n0 + n1;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut features = Array2::<f64>::zeros((n, spec.dims));
    for v in features.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = spec.noise_std * z;
    }
    for i in n0..n {
        for &j in &spec.informative_dims {
            features[[i, j]] += spec.class_separation;
        }
    }
    let labels = Array2::from_shape_fn((n, 1), |(i, _)| u8::from(i >= n0));
    let (feature_names, ids, groups) = synthetic_names(spec.dims, n);
    let ds = Dataset::new(features, labels, vec!["synthetic".into()], feature_names, groups, ids)?;
    Ok((ds, spec.informative_dims.clone()))
}

/// One affordance of a [`SyntheticSuiteSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticAffordance {
    pub name: String,
    pub informative_dims: Vec<usize>,
}

/// Several affordances over one shared feature matrix. Every affordance is
/// balanced; its positives are shifted by `class_separation` along its own
/// informative dims, and shifts of affordances sharing a dim add up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSuiteSpec {
    pub n: usize,
    #[serde(rename = "D")]
    pub dims: usize,
    pub affordances: Vec<SyntheticAffordance>,
    pub class_separation: f64,
    pub noise_std: f64,
    pub seed: u64,
}

pub fn make_synthetic_suite(spec: &SyntheticSuiteSpec) -> Result<Dataset> {
    if spec.affordances.is_empty() || spec.n < 4 {
        return Err(Error::InvalidArgument("suite needs affordances and n >= 4".into()));
    }
    if !(spec.class_separation > 0.0) || !(spec.noise_std >= 0.0) {
        return Err(Error::InvalidArgument("invalid separation or noise".into()));
    }
    for a in &spec.affordances {
        if a.informative_dims.is_empty() {
            return Err(Error::InvalidArgument(format!("affordance `{}` has no informative dims", a.name)));
        }
        validate_dim_list(&a.informative_dims, spec.dims)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let a_count = spec.affordances.len();
    let mut labels = Array2::<u8>::zeros((spec.n, a_count));
    for a in 0..a_count {
        let mut col: Vec<u8> = (0..spec.n).map(|i| u8::from(i < spec.n / 2)).collect();
        col.shuffle(&mut rng);
        labels.column_mut(a).assign(&Array1::from(col));
    }
    let mut features = Array2::<f64>::zeros((spec.n, spec.dims));
    for v in features.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = spec.noise_std * z;
    }
    for (a, aff) in spec.affordances.iter().enumerate() {
        for i in 0..spec.n {
            if labels[[i, a]] == 1 {
                for &j in &aff.informative_dims {
                    features[[i, j]] += spec.class_separation;
                }
            }
        }
    }
    let (feature_names, ids, groups) = synthetic_names(spec.dims, spec.n);
    let names = spec.affordances.iter().map(|a| a.name.clone()).collect();
    Dataset::new(features, labels, names, feature_names, groups, ids)
}

// ---------------------------------------------------------------------------
// File I/O

fn read_csv_matrix(path: &Path) -> Result<(Vec<String>, Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.len() < 2 {
        return Err(Error::parse(path, 1, "header needs an id column and at least one value column"));
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::parse(
                path,
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        ids.push(rec[0].to_owned());
        rows.push(rec.iter().skip(1).map(str::to_owned).collect());
    }
    Ok((names, ids, rows))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

/// Reads a feature CSV: header `id,<dim names...>`, one instance per row.
pub fn read_features(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<f64>)> {
    let (names, ids, rows) = read_csv_matrix(path)?;
    let d = names.len();
    let mut m = Array2::<f64>::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::parse(path, i + 2, format!("column `{}`: `{cell}` is not a number", names[j]))
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    location: format!("{}:{} column `{}`", path.display(), i + 2, names[j]),
                });
            }
            m[[i, j]] = v;
        }
    }
    Ok((names, ids, m))
}

/// Reads a label CSV: header `id,<affordance names...>`, entries 0 or 1.
pub fn read_labels(path: &Path) -> Result<(Vec<String>, Vec<String>, Array2<u8>)> {
    let (names, ids, rows) = read_csv_matrix(path)?;
    let mut m = Array2::<u8>::zeros((rows.len(), names.len()));
    for (i, row) in rows.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            m[[i, j]] = match cell.trim() {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::parse(
                        path,
                        i + 2,
                        format!("affordance `{}`: label `{other}` is not 0 or 1", names[j]),
                    ))
                }
            };
        }
    }
    Ok((names, ids, m))
}

pub fn read_groups(path: &Path) -> Result<Vec<FeatureGroupSpec>> {
    read_json(path)
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads and validates a dataset; the result is unstandardized.
pub fn load_dataset(features_path: &Path, labels_path: &Path, groups_path: &Path) -> Result<Dataset> {
    let (feature_names, ids, features) = read_features(features_path)?;
    let (affordance_names, label_ids, labels) = read_labels(labels_path)?;
    let groups = read_groups(groups_path)?;
    if ids.len() == label_ids.len() {
        if let Some(i) = ids.iter().zip(&label_ids).position(|(a, b)| a != b) {
            return Err(Error::parse(
                labels_path,
                i + 2,
                format!("instance id `{}` does not match feature row id `{}`", label_ids[i], ids[i]),
            ));
        }
    }
    Dataset::new(features, labels, affordance_names, feature_names, groups, ids)
}

/// Writes the three dataset files. Floats use the shortest representation
/// that parses back to the same bits.
pub fn save_dataset(dataset: &Dataset, features_path: &Path, labels_path: &Path, groups_path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str("id");
    for n in &dataset.feature_names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (i, row) in dataset.features.outer_iter().enumerate() {
        out.push_str(&dataset.instance_ids[i]);
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(features_path, out).map_err(|e| Error::io(features_path, e))?;

    let mut out = String::new();
    out.push_str("id");
    for n in &dataset.affordance_names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (i, row) in dataset.labels.outer_iter().enumerate() {
        out.push_str(&dataset.instance_ids[i]);
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(labels_path, out).map_err(|e| Error::io(labels_path, e))?;
    write_json(groups_path, &dataset.groups)
}

/// Per-instance point cloud with precomputed bin assignments for each
/// point-mapped feature group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloudFeatureMap {
    pub instance_id: String,
    pub points: Vec<[f64; 3]>,
    pub assignments: std::collections::BTreeMap<String, Vec<usize>>,
}

impl PointCloudFeatureMap {
    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}
