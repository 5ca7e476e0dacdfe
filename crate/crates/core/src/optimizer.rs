//! Group-sparse large-margin metric learning.
//!
//! The objective over a linear map `L` (d × D) is
//!
//! ```text
//! Σ_{i⇝j} w_i ‖L(x_i − x_j)‖²
//!   + c Σ_{i⇝j, l} w_i y_il h(‖L(x_i − x_j)‖² − ‖L(x_i − x_l)‖² + 1)
//!   + λ Σ_cols √(‖L_col‖² + ε)
//! ```
//!
//! where `i⇝j` ranges over the fixed target neighbours, `y_il` is 1 when
//! `i` and `l` carry different labels, `w_i = N / N_class(i)` and `h` is the
//! quadratically smoothed hinge.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::classifier::pca_project;
use crate::data::{Dataset, StandardizationParams};
use crate::error::{Error, Result};
use crate::hexfloat;

/// Fixed margin of the push term.
pub const MARGIN: f64 = 1.0;
/// Maximum number of step halvings before an iteration is abandoned.
pub const MAX_HALVINGS: usize = 30;
/// Step growth factor applied after every accepted step.
pub const STEP_GROWTH: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Target neighbours per instance, also the kNN vote size.
    pub k: usize,
    /// Weight of the push (impostor) term.
    pub c: f64,
    /// Weight of the column-norm penalty.
    pub lambda: f64,
    /// Output dimensionality.
    pub d: usize,
    pub max_epochs: usize,
    pub init_step: f64,
    /// Relative loss-change stopping threshold.
    pub tol: f64,
    /// Smoothing inside the column norm.
    pub norm_eps: f64,
    /// Carried for provenance; training itself uses no randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 3,
            c: 1.0,
            lambda: 0.1,
            d: 3,
            max_epochs: 1000,
            init_step: 1e-3,
            tol: 1e-7,
            norm_eps: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, dims: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.k < 1 {
            return bad("k must be at least 1".into());
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return bad(format!("c = {} must be finite and non-negative", self.c));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda = {} must be finite and non-negative", self.lambda));
        }
        if self.d < 1 || self.d > dims {
            return bad(format!("d = {} must lie in [1, {dims}]", self.d));
        }
        if !(self.init_step > 0.0) {
            return bad("init_step must be positive".into());
        }
        if !(self.norm_eps > 0.0) {
            return bad("norm_eps must be positive".into());
        }
        if !(self.tol >= 0.0) {
            return bad("tol must be non-negative".into());
        }
        Ok(())
    }
}

/// The learned d × D map acting on standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinearTransform(#[serde(with = "hexfloat::matrix")] pub Array2<f64>);

impl LinearTransform {
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        if matrix.nrows() > matrix.ncols() {
            return Err(Error::InvalidArgument(format!(
                "transform has d = {} > D = {}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("transform has non-finite entries".into()));
        }
        Ok(Self(matrix))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn output_dims(&self) -> usize {
        self.0.nrows()
    }

    pub fn input_dims(&self) -> usize {
        self.0.ncols()
    }

    /// Rows of `features` mapped into the latent space (N × d).
    pub fn embed(&self, features: ArrayView2<f64>) -> Array2<f64> {
        features.dot(&self.0.t())
    }
}

/// Target-neighbour pairs `(i, j)`, grouped by `i` in ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleSet {
    pub target_pairs: Vec<(usize, usize)>,
}

/// For each instance, its `k` nearest same-class instances under Euclidean
/// distance on the given (untransformed) features. Ties go to the lower index.
pub fn target_neighbors(features: ArrayView2<f64>, labels: &[bool], k: usize) -> Result<TripleSet> {
    let n = features.nrows();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            context: "target neighbours: labels vs rows".into(),
            expected: n,
            found: labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    if pos == 1 || n - pos == 1 {
        return Err(Error::InsufficientClass(
            "a class with a single member has no target neighbours".into(),
        ));
    }
    let mut target_pairs = Vec::new();
    for i in 0..n {
        let xi = features.row(i);
        let mut cands: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i && labels[j] == labels[i])
            .map(|j| {
                let d2 = xi
                    .iter()
                    .zip(features.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>();
                (d2, j)
            })
            .collect();
        cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        target_pairs.extend(cands.into_iter().take(k).map(|(_, j)| (i, j)));
    }
    Ok(TripleSet { target_pairs })
}

/// `w_i = N / N_class(i)`.
pub fn class_weights(labels: &[bool]) -> Result<Vec<f64>> {
    let n = labels.len();
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = n - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InsufficientClass(format!(
            "class weights need both classes ({pos} positives, {neg} negatives)"
        )));
    }
    let (wp, wn) = (n as f64 / pos as f64, n as f64 / neg as f64);
    Ok(labels.iter().map(|&l| if l { wp } else { wn }).collect())
}

/// Quadratically smoothed hinge: 0 below 0, z²/2 on (0, 1), z − ½ above.
pub fn smooth_hinge(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z < 1.0 {
        0.5 * z * z
    } else {
        z - 0.5
    }
}

pub fn smooth_hinge_grad(z: f64) -> f64 {
    z.clamp(0.0, 1.0)
}

/// Everything the objective needs besides `L`.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    features: ArrayView2<'a, f64>,
    labels: &'a [bool],
    weights: &'a [f64],
    /// Target neighbours of each instance.
    targets: Vec<Vec<usize>>,
    /// Members of the negative and positive class.
    classes: [Vec<usize>; 2],
    c: f64,
    lambda: f64,
    norm_eps: f64,
}

/// Loss split into its three terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub pull: f64,
    pub push: f64,
    pub regularizer: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.pull + self.push + self.regularizer
    }
}

#[inline]
fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

impl<'a> Objective<'a> {
    pub fn new(
        features: ArrayView2<'a, f64>,
        labels: &'a [bool],
        triples: &TripleSet,
        weights: &'a [f64],
        config: &TrainConfig,
    ) -> Result<Self> {
        let n = features.nrows();
        for (what, len) in [("labels", labels.len()), ("weights", weights.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    context: format!("objective: {what} vs feature rows"),
                    expected: n,
                    found: len,
                });
            }
        }
        let mut targets = vec![Vec::new(); n];
        for &(i, j) in &triples.target_pairs {
            if i >= n || j >= n {
                return Err(Error::InvalidArgument(format!("target pair ({i}, {j}) out of range")));
            }
            targets[i].push(j);
        }
        let classes = [
            (0..n).filter(|&i| !labels[i]).collect(),
            (0..n).filter(|&i| labels[i]).collect(),
        ];
        Ok(Self {
            features,
            labels,
            weights,
            targets,
            classes,
            c: config.c,
            lambda: config.lambda,
            norm_eps: config.norm_eps,
        })
    }

    fn check_shape(&self, l: &Array2<f64>) -> Result<()> {
        if l.ncols() != self.features.ncols() {
            return Err(Error::DimensionMismatch {
                context: "transform columns vs feature dimensions".into(),
                expected: self.features.ncols(),
                found: l.ncols(),
            });
        }
        Ok(())
    }

    /// Latent coordinates, row-major N × d.
    fn embed(&self, l: &Array2<f64>) -> Vec<f64> {
        let z = self.features.dot(&l.t());
        match z.as_slice() {
            Some(s) => s.to_vec(),
            None => z.iter().copied().collect(),
        }
    }

    fn impostors(&self, i: usize) -> &[usize] {
        &self.classes[usize::from(!self.labels[i])]
    }

    /// Impostors of `i` with their latent squared distance, keeping only
    /// those that can reach the hinge for at least one target of `i`.
    fn active_impostors(&self, i: usize, targets: &[usize], z: &[f64], d: usize, out: &mut Vec<(usize, f64)>) {
        let zi = &z[i * d..(i + 1) * d];
        let reach = targets
            .iter()
            .map(|&j| sq_dist(zi, &z[j * d..(j + 1) * d]))
            .fold(f64::NEG_INFINITY, f64::max)
            + MARGIN;
        out.clear();
        for &m in self.impostors(i) {
            let dim = sq_dist(zi, &z[m * d..(m + 1) * d]);
            // Kept when not provably inactive, so NaN distances survive to
            // the finiteness check.
            if !(dim >= reach) {
                out.push((m, dim));
            }
        }
    }

    fn column_norms_smoothed(&self, l: &Array2<f64>) -> Array1<f64> {
        l.axis_iter(Axis(1))
            .map(|col| (col.dot(&col) + self.norm_eps).sqrt())
            .collect()
    }

    pub fn loss_terms(&self, l: &Array2<f64>) -> Result<LossTerms> {
        self.check_shape(l)?;
        let d = l.nrows();
        let z = self.embed(l);
        let row = |a: usize| &z[a * d..(a + 1) * d];
        let mut pull = 0.0;
        let mut push = 0.0;
        let mut imp_dist = Vec::new();
        for (i, targets) in self.targets.iter().enumerate() {
            if targets.is_empty() {
                continue;
            }
            let w = self.weights[i];
            let zi = row(i);
            if self.c > 0.0 {
                self.active_impostors(i, targets, &z, d, &mut imp_dist);
            }
            for &j in targets {
                let dij = sq_dist(zi, row(j));
                pull += w * dij;
                if self.c > 0.0 {
                    let acc: f64 = imp_dist.iter().map(|&(_, dim)| smooth_hinge(dij - dim + MARGIN)).sum();
                    push += w * acc;
                }
            }
        }
        push *= self.c;
        let regularizer = if self.lambda > 0.0 {
            self.lambda * self.column_norms_smoothed(l).sum()
        } else {
            0.0
        };
        for (name, v) in [("pull", pull), ("push", push), ("regularizer", regularizer)] {
            if !v.is_finite() {
                return Err(Error::Numerical(format!("{name} term is not finite ({v})")));
            }
        }
        Ok(LossTerms { pull, push, regularizer })
    }

    pub fn loss(&self, l: &Array2<f64>) -> Result<f64> {
        Ok(self.loss_terms(l)?.total())
    }

    /// Analytic gradient with respect to `L`.
    ///
    /// Every data term is a weighted `‖L(x_a − x_b)‖²`, whose gradient is
    /// `2 (z_a − z_b)(x_a − x_b)ᵀ` with `z = Lx`. Collecting
    /// `q_a = Σ_b C_ab (z_a − z_b) − Σ_b C_ba (z_b − z_a)` over all weighted
    /// pairs gives the data gradient `2 Qᵀ X` without any N × N or D × D
    /// intermediate.
    pub fn gradient(&self, l: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_shape(l)?;
        let d = l.nrows();
        let n = self.labels.len();
        let z = self.embed(l);
        let mut q = vec![0.0; n * d];
        let mut imp_dist = Vec::new();
        let mut diff = vec![0.0; d];
        for (i, targets) in self.targets.iter().enumerate() {
            if targets.is_empty() {
                continue;
            }
            let w = self.weights[i];
            if self.c > 0.0 {
                self.active_impostors(i, targets, &z, d, &mut imp_dist);
            }
            for &j in targets {
                let dij = sq_dist(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]);
                // Coefficient on the (i, j) pair: pull weight plus every
                // active push term; each active impostor gets the negative.
                let mut pair = w;
                if self.c > 0.0 {
                    for &(m, dim) in &imp_dist {
                        let g = smooth_hinge_grad(dij - dim + MARGIN);
                        if g > 0.0 {
                            let s = self.c * w * g;
                            pair += s;
                            for r in 0..d {
                                diff[r] = z[i * d + r] - z[m * d + r];
                            }
                            for r in 0..d {
                                q[i * d + r] -= s * diff[r];
                                q[m * d + r] += s * diff[r];
                            }
                        }
                    }
                }
                for r in 0..d {
                    let v = pair * (z[i * d + r] - z[j * d + r]);
                    q[i * d + r] += v;
                    q[j * d + r] -= v;
                }
            }
        }
        let q = Array2::from_shape_vec((n, d), q).expect("n × d buffer");
        let mut grad = q.t().dot(&self.features) * 2.0;
        if self.lambda > 0.0 {
            let norms = self.column_norms_smoothed(l);
            for (j, mut col) in grad.axis_iter_mut(Axis(1)).enumerate() {
                col.scaled_add(self.lambda / norms[j], &l.column(j));
            }
        }
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("gradient has non-finite entries".into()));
        }
        Ok(grad)
    }
}

/// Loss of `l` on one binary problem.
pub fn loss(
    l: &Array2<f64>,
    features: ArrayView2<f64>,
    labels: &[bool],
    triples: &TripleSet,
    weights: &[f64],
    config: &TrainConfig,
) -> Result<f64> {
    Objective::new(features.view(), labels, triples, weights, config)?.loss(l)
}

pub fn gradient(
    l: &Array2<f64>,
    features: ArrayView2<f64>,
    labels: &[bool],
    triples: &TripleSet,
    weights: &[f64],
    config: &TrainConfig,
) -> Result<Array2<f64>> {
    Objective::new(features.view(), labels, triples, weights, config)?.gradient(l)
}

/// A fitted per-affordance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub transform: LinearTransform,
    /// Standardized training features, kept for kNN.
    #[serde(with = "hexfloat::matrix")]
    pub train_features: Array2<f64>,
    pub train_labels: Vec<bool>,
    pub config: TrainConfig,
    /// Loss at the initial transform followed by every accepted step.
    #[serde(with = "hexfloat::vec")]
    pub loss_trace: Vec<f64>,
    pub standardization: StandardizationParams,
    pub epochs: usize,
    /// Set when an iteration exhausted its step halvings before `tol` or
    /// `max_epochs` was reached; the transform is the last accepted iterate.
    pub step_underflow: bool,
}

impl TrainedModel {
    pub fn initial_loss(&self) -> f64 {
        self.loss_trace[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.loss_trace.last().expect("trace holds at least the initial loss")
    }
}

/// Principal axes of `features` as the rows of a d × D matrix.
pub fn initial_transform(features: ArrayView2<f64>, d: usize) -> Result<Array2<f64>> {
    Ok(pca_project(features, d)?.components)
}

/// Learns `L` for one affordance column of a standardized dataset.
pub fn train(dataset: &Dataset, affordance: usize, config: &TrainConfig) -> Result<TrainedModel> {
    let standardization = dataset.standardization.clone().ok_or_else(|| {
        Error::InvalidArgument("training requires a standardized dataset".into())
    })?;
    if affordance >= dataset.n_affordances() {
        return Err(Error::InvalidArgument(format!("affordance index {affordance} out of range")));
    }
    let labels = dataset.binary_labels(affordance);
    train_on(dataset.features.view(), &labels, standardization, config)
}

/// Full-batch gradient descent with backtracking from the PCA initialization.
pub fn train_on(
    features: ArrayView2<f64>,
    labels: &[bool],
    standardization: StandardizationParams,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    config.validate(features.ncols())?;
    let weights = class_weights(labels)?;
    let triples = target_neighbors(features, labels, config.k)?;
    let objective = Objective::new(features.view(), labels, &triples, &weights, config)?;

    let mut l = initial_transform(features, config.d)?;
    let mut current = objective.loss(&l)?;
    let mut trace = vec![current];
    let mut step = config.init_step;
    let mut step_underflow = false;
    let mut epochs = 0;

    while epochs < config.max_epochs {
        epochs += 1;
        let grad = objective.gradient(&l)?;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let candidate = &l - &(&grad * step);
            // A non-finite trial just means the step is too long.
            match objective.loss(&candidate) {
                Ok(v) if v <= current => {
                    accepted = Some((candidate, v));
                    break;
                }
                Ok(_) | Err(Error::Numerical(_)) => step *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some((next, value)) = accepted else {
            step_underflow = true;
            break;
        };
        let rel_change = (current - value) / current.abs().max(f64::MIN_POSITIVE);
        l = next;
        current = value;
        trace.push(value);
        step *= STEP_GROWTH;
        if rel_change < config.tol {
            break;
        }
    }

    Ok(TrainedModel {
        transform: LinearTransform::new(l)?,
        train_features: features.to_owned(),
        train_labels: labels.to_vec(),
        config: config.clone(),
        loss_trace: trace,
        standardization,
        epochs,
        step_underflow,
    })
}
