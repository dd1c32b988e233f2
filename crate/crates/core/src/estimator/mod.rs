//! Sparsity-level estimation: features, labels and a small regressor.
//!
//! A signal `y` is projected onto a transform (the unitary DFT or a learned
//! dictionary), the magnitudes of the projection form the feature vector, and
//! a two-layer network (tanh hidden layer, linear output) regresses the
//! number of dictionary atoms OMP needs to represent `y` within a tolerance.

mod dataset;
mod features;
pub mod io;
mod labeling;
mod mlp;
mod train;

pub use dataset::{stratified_split, LabeledDataset, Split};
pub use features::{extract_features, feature_dim, FeatureEncoding, FeatureVector, MagnitudeOrder, RawPart, Transform, TransformKind};
pub use labeling::{calibrate_epsilon, label_sparsity, Calibration};
pub use mlp::{gradient, predict_sparsity, round_and_clamp, Activation, Batch, Mlp, SparsityRegressor};
pub use train::{train, EpochLoss, ModelMeta, Optimizer, StopReason, TrainReport, TrainingHyperparams};
