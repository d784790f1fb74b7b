//! Dense embedding matrices plus the metadata needed to compose vectors.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::subword::SubwordConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Cbow,
    SkipGram,
    Glove,
    /// Vectors loaded from a third-party text file.
    External,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Cbow => "cbow",
            Algorithm::SkipGram => "sg",
            Algorithm::Glove => "glove",
            Algorithm::External => "external",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cbow" => Ok(Algorithm::Cbow),
            "sg" => Ok(Algorithm::SkipGram),
            "glove" => Ok(Algorithm::Glove),
            "external" => Ok(Algorithm::External),
            _ => Err(Error::Input(format!("unknown algorithm '{s}'"))),
        }
    }
}

/// Row-major `rows x dim` matrix of `f32`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    data: Vec<f32>,
    rows: usize,
    dim: usize,
}

impl Matrix {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Matrix {
            data: vec![0.0; rows * dim],
            rows,
            dim,
        }
    }

    pub fn from_vec(data: Vec<f32>, rows: usize, dim: usize) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::Input(format!(
                "matrix of {rows}x{dim} needs {} values, got {}",
                rows * dim,
                data.len()
            )));
        }
        Ok(Matrix { data, rows, dim })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, r: usize) -> &[f32] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f32] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMeta {
    pub algorithm: Algorithm,
    pub vocab_hash: u64,
    /// Hyper-parameters as reported by the trainer, for provenance.
    pub params: BTreeMap<String, String>,
}

/// Word vectors, optionally enriched with subword bucket rows.
///
/// The input matrix holds one row per word followed by `n_buckets` rows
/// when subwords are enabled. A word's vector is the mean of its own row
/// and its n-gram rows.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    words: Vec<String>,
    index: HashMap<String, u32>,
    input: Matrix,
    output: Option<Matrix>,
    subword: Option<SubwordConfig>,
    meta: EmbeddingMeta,
}

impl EmbeddingSet {
    pub fn new(
        words: Vec<String>,
        input: Matrix,
        output: Option<Matrix>,
        subword: Option<SubwordConfig>,
        meta: EmbeddingMeta,
    ) -> Result<Self> {
        let expected_rows = words.len() + subword.as_ref().map_or(0, |s| s.n_buckets as usize);
        if input.rows() != expected_rows {
            return Err(Error::Input(format!(
                "input matrix has {} rows, expected {expected_rows}",
                input.rows()
            )));
        }
        if let Some(cfg) = &subword {
            cfg.validate()?;
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::Input(format!("empty word at row {i}")));
            }
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(Error::Input(format!("duplicate word '{w}'")));
            }
        }
        Ok(EmbeddingSet {
            words,
            index,
            input,
            output,
            subword,
            meta,
        })
    }

    /// Plain word vectors without subword information.
    pub fn words_only(words: Vec<String>, vectors: Matrix, meta: EmbeddingMeta) -> Result<Self> {
        EmbeddingSet::new(words, vectors, None, None, meta)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.input.dim()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn input(&self) -> &Matrix {
        &self.input
    }

    pub fn output(&self) -> Option<&Matrix> {
        self.output.as_ref()
    }

    pub fn subword(&self) -> Option<&SubwordConfig> {
        self.subword.as_ref()
    }

    pub fn meta(&self) -> &EmbeddingMeta {
        &self.meta
    }

    pub fn is_words_only(&self) -> bool {
        self.subword.is_none()
    }

    /// Input-matrix rows that make up `word`: its own row when known, then
    /// one row per n-gram bucket when subwords are enabled.
    pub fn constituent_rows(&self, word: &str) -> Result<Vec<usize>> {
        let mut rows = Vec::new();
        if let Some(id) = self.id(word) {
            rows.push(id as usize);
        }
        if let Some(cfg) = &self.subword {
            match cfg.buckets(word) {
                Ok(buckets) => rows.extend(buckets.into_iter().map(|b| self.words.len() + b as usize)),
                Err(e) if rows.is_empty() => return Err(Error::NotFound(format!("'{word}': {e}"))),
                Err(_) => {}
            }
        }
        if rows.is_empty() {
            return Err(Error::NotFound(format!("'{word}' is out of vocabulary")));
        }
        Ok(rows)
    }

    /// Mean of the given input rows.
    pub fn mean_of_rows(&self, rows: &[usize]) -> Vec<f32> {
        let mut acc = vec![0f32; self.dim()];
        for &r in rows {
            for (a, v) in acc.iter_mut().zip(self.input.row(r)) {
                *a += v;
            }
        }
        let scale = 1.0 / rows.len().max(1) as f32;
        acc.iter_mut().for_each(|a| *a *= scale);
        acc
    }

    /// Composed vector of an in-vocabulary word by id.
    pub fn vector_by_id(&self, id: u32) -> Vec<f32> {
        match self.constituent_rows(&self.words[id as usize]) {
            Ok(rows) => self.mean_of_rows(&rows),
            Err(_) => self.input.row(id as usize).to_vec(),
        }
    }

    /// Composed vectors for every vocabulary word, row-major.
    pub fn word_matrix(&self) -> Matrix {
        if self.subword.is_none() {
            let data = self.input.as_slice()[..self.len() * self.dim()].to_vec();
            return Matrix::from_vec(data, self.len(), self.dim()).expect("shape checked");
        }
        let mut m = Matrix::zeros(self.len(), self.dim());
        for id in 0..self.len() {
            let v = self.vector_by_id(id as u32);
            m.row_mut(id).copy_from_slice(&v);
        }
        m
    }

    pub fn into_parts(self) -> (Vec<String>, Matrix, Option<Matrix>, Option<SubwordConfig>, EmbeddingMeta) {
        (self.words, self.input, self.output, self.subword, self.meta)
    }
}
