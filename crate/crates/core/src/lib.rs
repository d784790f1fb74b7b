//! Corpus-to-embeddings toolkit: text cleaning, vocabulary statistics,
//! co-occurrence counting, GloVe and word2vec training with subwords,
//! evaluation and embedding file formats.

pub mod config;
pub mod cooccur;
pub mod embedding;
pub mod embio;
pub mod error;
pub mod eval;
pub mod glove;
mod hogwild;
pub mod huffman;
pub mod pipeline;
pub mod subword;
pub mod vocab;
pub mod w2v;

pub use embedding::{Algorithm, EmbeddingSet, Matrix};
pub use error::{Error, Result};

/// Trained embeddings plus the mean loss of every epoch.
#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub embeddings: EmbeddingSet,
    pub epoch_loss: Vec<f64>,
}
