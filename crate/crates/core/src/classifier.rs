//! kNN in a learned (or PCA) latent space, scoring, and grid search by
//! stratified cross-validation.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{kept_fraction, magnitude_profile, DEFAULT_KEPT_THRESHOLD};
use crate::data::{kfold_indices, Dataset, StandardizationParams};
use crate::error::{Error, Result};
use crate::optimizer::{train_on, TrainConfig, TrainedModel};

/// Confusion counts and derived scores for one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1: f64,
    pub accuracy: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub kept_fraction: f64,
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize, kept_fraction: f64) -> Self {
        let denom = 2 * tp + fp + fn_;
        let f1 = if denom == 0 { 0.0 } else { 2.0 * tp as f64 / denom as f64 };
        let total = tp + fp + tn + fn_;
        let accuracy = if total == 0 { 0.0 } else { (tp + tn) as f64 / total as f64 };
        Self {
            f1,
            accuracy,
            tp,
            fp,
            tn,
            fn_,
            kept_fraction,
        }
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Training points embedded once by a linear map, queried by majority vote.
#[derive(Debug, Clone)]
pub struct KnnClassifier {
    transform: Array2<f64>,
    embedded: Array2<f64>,
    labels: Vec<bool>,
    k: usize,
}

impl KnnClassifier {
    pub fn new(transform: Array2<f64>, train_features: ArrayView2<f64>, labels: &[bool], k: usize) -> Result<Self> {
        if transform.ncols() != train_features.ncols() {
            return Err(Error::DimensionMismatch {
                context: "kNN transform vs training features".into(),
                expected: train_features.ncols(),
                found: transform.ncols(),
            });
        }
        if labels.len() != train_features.nrows() || labels.is_empty() {
            return Err(Error::DimensionMismatch {
                context: "kNN labels vs training rows".into(),
                expected: train_features.nrows(),
                found: labels.len(),
            });
        }
        if k == 0 {
            return Err(Error::InvalidArgument("kNN needs k >= 1".into()));
        }
        Ok(Self {
            embedded: train_features.dot(&transform.t()),
            transform,
            labels: labels.to_vec(),
            k,
        })
    }

    pub fn from_model(model: &TrainedModel) -> Result<Self> {
        Self::new(
            model.transform.matrix().clone(),
            model.train_features.view(),
            &model.train_labels,
            model.config.k,
        )
    }

    pub fn input_dims(&self) -> usize {
        self.transform.ncols()
    }

    /// Majority label of the `k` nearest training points. Distance ties go
    /// to the lower training index; an even split goes to the single
    /// nearest neighbour.
    pub fn predict(&self, query: ArrayView1<f64>) -> Result<bool> {
        if query.len() != self.input_dims() {
            return Err(Error::DimensionMismatch {
                context: "kNN query".into(),
                expected: self.input_dims(),
                found: query.len(),
            });
        }
        let q = self.transform.dot(&query);
        let mut dist: Vec<(f64, usize)> = self
            .embedded
            .outer_iter()
            .enumerate()
            .map(|(i, row)| (row.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.k.min(dist.len());
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, by_dist);
            dist.truncate(k);
        }
        dist.sort_by(by_dist);
        let pos = dist.iter().filter(|(_, i)| self.labels[*i]).count();
        Ok(match (2 * pos).cmp(&k) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => self.labels[dist[0].1],
        })
    }

    pub fn predict_all(&self, queries: ArrayView2<f64>) -> Result<Vec<bool>> {
        queries.outer_iter().map(|q| self.predict(q)).collect()
    }

    pub fn evaluate(&self, test_features: ArrayView2<f64>, test_labels: &[bool], kept_fraction: f64) -> Result<EvalReport> {
        if test_features.nrows() == 0 {
            return Err(Error::InvalidArgument("empty test set".into()));
        }
        if test_labels.len() != test_features.nrows() {
            return Err(Error::DimensionMismatch {
                context: "test labels vs test rows".into(),
                expected: test_features.nrows(),
                found: test_labels.len(),
            });
        }
        let pred = self.predict_all(test_features)?;
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &t) in pred.iter().zip(test_labels) {
            match (p, t) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Ok(EvalReport::from_counts(tp, fp, tn, fn_, kept_fraction))
    }
}

/// Predicts one standardized query with a trained model.
pub fn knn_predict(model: &TrainedModel, query: ArrayView1<f64>) -> Result<bool> {
    KnnClassifier::from_model(model)?.predict(query)
}

/// Scores a trained model on a standardized test set. `kept_fraction` uses
/// [`DEFAULT_KEPT_THRESHOLD`].
pub fn evaluate(model: &TrainedModel, test_features: ArrayView2<f64>, test_labels: &[bool]) -> Result<EvalReport> {
    let kept = match magnitude_profile(model.transform.matrix()) {
        Ok(p) => kept_fraction(&p, DEFAULT_KEPT_THRESHOLD),
        Err(_) => 0.0,
    };
    KnnClassifier::from_model(model)?.evaluate(test_features, test_labels, kept)
}

/// Top principal directions of a feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// d × D, rows are unit principal axes in decreasing variance order.
    /// With `d = 0` this is the D × D identity.
    pub components: Array2<f64>,
    pub mean: Array1<f64>,
    /// Variance along each retained axis; empty for the identity sentinel.
    pub variances: Vec<f64>,
}

impl PcaBasis {
    pub fn is_identity(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn project(&self, features: ArrayView2<f64>) -> Array2<f64> {
        (&features - &self.mean).dot(&self.components.t())
    }

    pub fn reconstruct(&self, projected: ArrayView2<f64>) -> Array2<f64> {
        projected.dot(&self.components) + &self.mean
    }
}

/// Top-`d` principal axes (population covariance). `d = 0` returns the
/// identity. Each axis is signed so its first nonzero coordinate is positive.
pub fn pca_project(features: ArrayView2<f64>, d: usize) -> Result<PcaBasis> {
    let (n, dims) = features.dim();
    if d > dims {
        return Err(Error::InvalidArgument(format!("PCA dimension {d} exceeds D = {dims}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("PCA on an empty matrix".into()));
    }
    let mean = features.mean_axis(Axis(0)).expect("non-empty");
    if d == 0 {
        return Ok(PcaBasis {
            components: Array2::eye(dims),
            mean,
            variances: Vec::new(),
        });
    }
    let centered = &features - &mean;
    let cov = centered.t().dot(&centered) / n as f64;
    let eig = SymmetricEigen::new(DMatrix::from_fn(dims, dims, |i, j| 0.5 * (cov[[i, j]] + cov[[j, i]])));
    let mut order: Vec<usize> = (0..dims).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Array2::<f64>::zeros((d, dims));
    let mut variances = Vec::with_capacity(d);
    for (r, &idx) in order.iter().take(d).enumerate() {
        let v = eig.eigenvectors.column(idx);
        let sign = v
            .iter()
            .find(|x| x.abs() > 1e-12)
            .map_or(1.0, |&x| x.signum());
        for c in 0..dims {
            components[[r, c]] = sign * v[c];
        }
        variances.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaBasis {
        components,
        mean,
        variances,
    })
}

/// Outcome of a grid search: the chosen point and every point's mean
/// validation F1, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome<T> {
    pub best: T,
    pub best_index: usize,
    pub mean_f1: Vec<f64>,
}

struct Fold {
    train: Array2<f64>,
    train_labels: Vec<bool>,
    valid: Array2<f64>,
    valid_labels: Vec<bool>,
    params: StandardizationParams,
}

/// Stratified folds. Raw data is standardized per fold with the fold's
/// training part; an already standardized set keeps its parameters.
fn prepare_folds(train_set: &Dataset, affordance: usize, folds: usize, seed: u64) -> Result<Vec<Fold>> {
    if affordance >= train_set.n_affordances() {
        return Err(Error::InvalidArgument(format!("affordance index {affordance} out of range")));
    }
    let labels = train_set.binary_labels(affordance);
    kfold_indices(&labels, folds, seed)?
        .into_iter()
        .map(|s| {
            let raw_train = train_set.features.select(Axis(0), &s.train);
            let params = match &train_set.standardization {
                Some(p) => StandardizationParams {
                    mean: vec![0.0; p.dims()],
                    std: vec![1.0; p.dims()],
                    convention: p.convention.clone(),
                },
                None => StandardizationParams::fit(&raw_train)?,
            };
            let pick = |idx: &[usize]| idx.iter().map(|&i| labels[i]).collect::<Vec<_>>();
            let valid_labels = pick(&s.test);
            if !valid_labels.iter().any(|&l| l) {
                return Err(Error::InsufficientClass("validation fold without positives".into()));
            }
            Ok(Fold {
                train: params.apply(&raw_train)?,
                train_labels: pick(&s.train),
                valid: params.apply(&train_set.features.select(Axis(0), &s.test))?,
                valid_labels,
                params,
            })
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Index of the best score; `prefer(a, b)` is true when candidate `a` should
/// win an exact tie against the incumbent `b`.
fn argmax_with(scores: &[f64], prefer: impl Fn(usize, usize) -> bool) -> usize {
    let mut best = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && prefer(i, best)) {
            best = i;
        }
    }
    best
}

/// Grid search over training configurations. Best mean validation F1 wins; ties go to larger λ, then
/// larger c, then the earlier grid point.
pub fn cross_validate(
    train_set: &Dataset,
    affordance: usize,
    grid: &[TrainConfig],
    folds: usize,
    seed: u64,
) -> Result<CvOutcome<TrainConfig>> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty cross-validation grid".into()));
    }
    let prepared = prepare_folds(train_set, affordance, folds, seed)?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..prepared.len()).map(move |f| (g, f)))
        .collect();
    let f1s: Vec<f64> = jobs
        .par_iter()
        .map(|&(g, f)| {
            let fold = &prepared[f];
            let model = train_on(fold.train.view(), &fold.train_labels, fold.params.clone(), &grid[g])?;
            Ok(KnnClassifier::from_model(&model)?
                .evaluate(fold.valid.view(), &fold.valid_labels, 1.0)?
                .f1)
        })
        .collect::<Result<_>>()?;
    let mean_f1: Vec<f64> = f1s.chunks(prepared.len()).map(mean).collect();
    let best_index = argmax_with(&mean_f1, |a, b| {
        let (ca, cb) = (&grid[a], &grid[b]);
        ca.lambda > cb.lambda || (ca.lambda == cb.lambda && ca.c > cb.c)
    });
    Ok(CvOutcome {
        best: grid[best_index].clone(),
        best_index,
        mean_f1,
    })
}

/// Grid search over PCA output dimensions (0 = no projection) for the
/// plain kNN baseline. Ties go to the earlier grid point.
pub fn cross_validate_baseline(
    train_set: &Dataset,
    affordance: usize,
    dims_grid: &[usize],
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<CvOutcome<usize>> {
    if dims_grid.is_empty() {
        return Err(Error::InvalidArgument("empty baseline grid".into()));
    }
    let prepared = prepare_folds(train_set, affordance, folds, seed)?;
    let mut f1s = Vec::with_capacity(dims_grid.len() * prepared.len());
    for &d in dims_grid {
        for fold in &prepared {
            let basis = pca_project(fold.train.view(), d)?;
            let clf = KnnClassifier::new(basis.components, fold.train.view(), &fold.train_labels, k)?;
            f1s.push(clf.evaluate(fold.valid.view(), &fold.valid_labels, 1.0)?.f1);
        }
    }
    let mean_f1: Vec<f64> = f1s.chunks(prepared.len()).map(mean).collect();
    let best_index = argmax_with(&mean_f1, |_, _| false);
    Ok(CvOutcome {
        best: dims_grid[best_index],
        best_index,
        mean_f1,
    })
}
