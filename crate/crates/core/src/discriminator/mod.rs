//! Real-vs-generated sentence discrimination with a TF-IDF logistic model.

mod dataset;
mod logistic;
mod tfidf;

use std::path::Path;

pub use dataset::{build_dataset, build_dataset_with, label_counts, DiscriminationDataset, Example, Label, Split};
pub use logistic::{
    evaluate, objective, read_model, sigmoid, train, train_with_trace, wilson_interval, write_model,
    DiscriminationReport, Hyperparams, LinearDiscriminator,
};
pub use tfidf::{SparseVector, TfIdfVectorizer, DEFAULT_MIN_DF};

use crate::error::{Error, Result};

pub fn save_model(path: &Path, vectorizer: &TfIdfVectorizer, model: &LinearDiscriminator) -> Result<()> {
    std::fs::write(path, write_model(vectorizer, model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<(TfIdfVectorizer, LinearDiscriminator)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_model(&text)
}
