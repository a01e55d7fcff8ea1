//! Built-in baseline classifier and prediction handling.
//!
//! Code is lexed into C-like tokens, hashed into a fixed-width bag of
//! unigrams and bigrams, and scored by a linear model (logistic for binary,
//! softmax for multiclass) trained with seeded SGD. Predictions from any
//! other model can be loaded from JSONL and evaluated the same way.

mod features;
mod model;
mod predictions;
mod tokenize;

pub use features::{featurize, FeatureVector, DEFAULT_DIM};
pub use model::{
    predict, train, train_on_features, Hyperparameters, Model, ModelKind, TrainingMetadata,
};
pub use predictions::{
    collapse_multiclass, load_external_predictions, Prediction, PredictionKind, PredictionSet,
};
pub use tokenize::{tokenize, TokenSequence};
