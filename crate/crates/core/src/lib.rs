//! Group-sparse large-margin metric learning for per-affordance feature
//! selection.
//!
//! For every binary affordance a linear map `L` is learned that pulls each
//! instance's same-class target neighbours close and pushes differently
//! labelled instances past a unit margin, while a column-wise l2,1 penalty
//! drives irrelevant input features to zero. The map is then used directly:
//! kNN in its latent space classifies, its column norms rank features, those
//! norms projected onto point clouds locate important parts, and Gaussian
//! models of the norms across runs relate affordances to each other.

pub mod analysis;
pub mod classifier;
pub mod data;
pub mod error;
pub mod harness;
pub mod hexfloat;
pub mod optimizer;
pub mod projection;

pub use analysis::{
    associate, fit_gaussian, group_summary, kept_fraction, kl_gaussian, magnitude_profile, AssociationTable,
    GaussianMagnitudeModel, GroupSummary, MagnitudeProfile,
};
pub use classifier::{cross_validate, evaluate, knn_predict, pca_project, EvalReport, KnnClassifier, PcaBasis};
pub use data::{
    kfold, load_dataset, make_synthetic, split, standardize, Dataset, FeatureGroupSpec, PointCloudFeatureMap,
    StandardizationParams, SyntheticSpec,
};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ModelRecord};
pub use optimizer::{train, LinearTransform, TrainConfig, TrainedModel, TripleSet};
pub use projection::{colorize, export_cloud, point_importance, PointImportance};
