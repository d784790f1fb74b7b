//! GloVe: weighted least squares on log co-occurrence counts, trained with
//! AdaGrad over a shuffled record stream.

use std::collections::BTreeMap;

use log::info;
use num_traits::Float;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cooccur::{CoocRecord, CooccurrenceStore};
use crate::embedding::{Algorithm, EmbeddingMeta, EmbeddingSet, Matrix};
use crate::error::{Error, Result};
use crate::hogwild::HogwildBuffer;
use crate::vocab::Vocabulary;
use crate::TrainOutput;

#[derive(Clone, Debug, PartialEq)]
pub struct GloveConfig {
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for GloveConfig {
    fn default() -> Self {
        GloveConfig {
            dim: 300,
            lr: 0.25,
            epochs: 100,
            x_max: 100.0,
            alpha: 0.75,
            seed: 1,
            threads: 1,
        }
    }
}

impl GloveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if self.x_max.is_nan() || self.x_max <= 0.0 || self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::Config("x_max must be positive and alpha non-negative".into()));
        }
        Ok(())
    }

    fn params(&self) -> BTreeMap<String, String> {
        [
            ("dim", self.dim.to_string()),
            ("lr", self.lr.to_string()),
            ("epochs", self.epochs.to_string()),
            ("x_max", self.x_max.to_string()),
            ("alpha", self.alpha.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect()
    }
}

/// Weighting `(x / x_max)^alpha`, capped at 1.
pub fn glove_weight<F: Float>(x: F, x_max: F, alpha: F) -> F {
    if x < x_max {
        (x / x_max).powf(alpha)
    } else {
        F::one()
    }
}

/// Loss of one record and the common gradient factor `2 f(x) diff`.
///
/// With `diff = w_i . c_j + b_i + d_j - ln x`, the gradients are
/// `factor * c_j` for `w_i`, `factor * w_i` for `c_j`, and `factor` for both
/// biases.
pub fn glove_record_grad<F: Float>(wi: &[F], cj: &[F], bi: F, dj: F, x: F, x_max: F, alpha: F) -> (F, F) {
    let dot = wi.iter().zip(cj).fold(F::zero(), |acc, (a, b)| acc + *a * *b);
    let diff = dot + bi + dj - x.ln();
    let fx = glove_weight(x, x_max, alpha);
    (fx * diff * diff, (fx + fx) * diff)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GloveModel {
    pub main: Matrix,
    pub context: Matrix,
    pub main_bias: Vec<f32>,
    pub context_bias: Vec<f32>,
    pub main_sq: Matrix,
    pub context_sq: Matrix,
    pub main_bias_sq: Vec<f32>,
    pub context_bias_sq: Vec<f32>,
}

impl GloveModel {
    /// Parameters drawn uniformly from `[-0.5/dim, 0.5/dim]`, AdaGrad
    /// accumulators set to 1.
    pub fn init(vocab_len: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 0.5 / dim as f32;
        let dist = Uniform::new_inclusive(-bound, bound);
        let mut draw = |n: usize| -> Vec<f32> { (0..n).map(|_| dist.sample(&mut rng)).collect() };
        let main = Matrix::from_vec(draw(vocab_len * dim), vocab_len, dim).unwrap();
        let context = Matrix::from_vec(draw(vocab_len * dim), vocab_len, dim).unwrap();
        let main_bias = draw(vocab_len);
        let context_bias = draw(vocab_len);
        let ones = |n: usize| vec![1.0f32; n];
        GloveModel {
            main,
            context,
            main_bias,
            context_bias,
            main_sq: Matrix::from_vec(ones(vocab_len * dim), vocab_len, dim).unwrap(),
            context_sq: Matrix::from_vec(ones(vocab_len * dim), vocab_len, dim).unwrap(),
            main_bias_sq: ones(vocab_len),
            context_bias_sq: ones(vocab_len),
        }
    }

    pub fn dim(&self) -> usize {
        self.main.dim()
    }

    /// Sum of main and context vectors per word.
    pub fn combined(&self) -> Matrix {
        let data = self
            .main
            .as_slice()
            .iter()
            .zip(self.context.as_slice())
            .map(|(a, b)| a + b)
            .collect();
        Matrix::from_vec(data, self.main.rows(), self.dim()).unwrap()
    }

    pub fn is_finite(&self) -> bool {
        self.main.is_finite()
            && self.context.is_finite()
            && self.main_bias.iter().all(|v| v.is_finite())
            && self.context_bias.iter().all(|v| v.is_finite())
    }
}

/// Loss term of a single record under `model`.
pub fn glove_loss(model: &GloveModel, record: &CoocRecord, x_max: f64, alpha: f64) -> Result<f64> {
    if record.x.is_nan() || record.x <= 0.0 {
        return Err(Error::Input(format!(
            "co-occurrence weight must be positive for the log, got {}",
            record.x
        )));
    }
    let wi: Vec<f64> = model.main.row(record.i as usize).iter().map(|&v| f64::from(v)).collect();
    let cj: Vec<f64> = model.context.row(record.j as usize).iter().map(|&v| f64::from(v)).collect();
    let (loss, _) = glove_record_grad(
        &wi,
        &cj,
        f64::from(model.main_bias[record.i as usize]),
        f64::from(model.context_bias[record.j as usize]),
        record.x,
        x_max,
        alpha,
    );
    Ok(loss)
}

struct SharedGlove {
    main: HogwildBuffer,
    context: HogwildBuffer,
    main_bias: HogwildBuffer,
    context_bias: HogwildBuffer,
    main_sq: HogwildBuffer,
    context_sq: HogwildBuffer,
    main_bias_sq: HogwildBuffer,
    context_bias_sq: HogwildBuffer,
}

impl SharedGlove {
    fn new(m: GloveModel) -> Self {
        let dim = m.dim();
        SharedGlove {
            main: HogwildBuffer::new(m.main.into_vec(), dim),
            context: HogwildBuffer::new(m.context.into_vec(), dim),
            main_bias: HogwildBuffer::new(m.main_bias, 1),
            context_bias: HogwildBuffer::new(m.context_bias, 1),
            main_sq: HogwildBuffer::new(m.main_sq.into_vec(), dim),
            context_sq: HogwildBuffer::new(m.context_sq.into_vec(), dim),
            main_bias_sq: HogwildBuffer::new(m.main_bias_sq, 1),
            context_bias_sq: HogwildBuffer::new(m.context_bias_sq, 1),
        }
    }

    fn into_model(self, rows: usize, dim: usize) -> GloveModel {
        GloveModel {
            main: Matrix::from_vec(self.main.into_inner(), rows, dim).unwrap(),
            context: Matrix::from_vec(self.context.into_inner(), rows, dim).unwrap(),
            main_bias: self.main_bias.into_inner(),
            context_bias: self.context_bias.into_inner(),
            main_sq: Matrix::from_vec(self.main_sq.into_inner(), rows, dim).unwrap(),
            context_sq: Matrix::from_vec(self.context_sq.into_inner(), rows, dim).unwrap(),
            main_bias_sq: self.main_bias_sq.into_inner(),
            context_bias_sq: self.context_bias_sq.into_inner(),
        }
    }

    /// One AdaGrad step on a record; returns its loss before the step.
    fn step(&self, r: &CoocRecord, lr: f32, x_max: f32, alpha: f32) -> f64 {
        let (i, j) = (r.i as usize, r.j as usize);
        let x = r.x as f32;
        let (loss, factor) = glove_record_grad(
            self.main.row(i),
            self.context.row(j),
            self.main_bias.row(i)[0],
            self.context_bias.row(j)[0],
            x,
            x_max,
            alpha,
        );
        let wi = self.main.row_mut(i);
        let wi_sq = self.main_sq.row_mut(i);
        let cj = self.context.row_mut(j);
        let cj_sq = self.context_sq.row_mut(j);
        for k in 0..wi.len() {
            let g_main = factor * cj[k];
            let g_ctx = factor * wi[k];
            wi_sq[k] += g_main * g_main;
            cj_sq[k] += g_ctx * g_ctx;
            wi[k] -= lr * g_main / wi_sq[k].sqrt();
            cj[k] -= lr * g_ctx / cj_sq[k].sqrt();
        }
        let bias_sq = &mut self.main_bias_sq.row_mut(i)[0];
        *bias_sq += factor * factor;
        self.main_bias.row_mut(i)[0] -= lr * factor / bias_sq.sqrt();
        let bias_sq = &mut self.context_bias_sq.row_mut(j)[0];
        *bias_sq += factor * factor;
        self.context_bias.row_mut(j)[0] -= lr * factor / bias_sq.sqrt();
        f64::from(loss)
    }
}

/// Trains GloVe parameters and returns them with the mean loss per epoch.
pub fn train_glove_model(
    store: &CooccurrenceStore,
    vocab: &Vocabulary,
    config: &GloveConfig,
) -> Result<(GloveModel, Vec<f64>)> {
    config.validate()?;
    store.check_vocab(vocab)?;
    if store.is_empty() {
        return Err(Error::Training("co-occurrence store is empty".into()));
    }
    let (rows, dim) = (vocab.len(), config.dim);
    let shared = SharedGlove::new(GloveModel::init(rows, dim, config.seed));
    let (lr, x_max, alpha) = (config.lr as f32, config.x_max as f32, config.alpha as f32);
    let threads = config.threads.max(1);
    let mut losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let order: Vec<CoocRecord> = store
            .iter_shuffled(config.seed.wrapping_add(epoch as u64))
            .collect();
        let total: f64 = if threads == 1 {
            order.iter().map(|r| shared.step(r, lr, x_max, alpha)).sum()
        } else {
            let part = order.len().div_ceil(threads);
            std::thread::scope(|scope| {
                let handles: Vec<_> = order
                    .chunks(part)
                    .map(|chunk| {
                        let shared = &shared;
                        scope.spawn(move || chunk.iter().map(|r| shared.step(r, lr, x_max, alpha)).sum::<f64>())
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
            })
        };
        let mean = total / order.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                what: "loss",
            });
        }
        info!("glove epoch {}: mean loss {mean:.6}", epoch + 1);
        losses.push(mean);
    }
    let model = shared.into_model(rows, dim);
    if !model.is_finite() {
        return Err(Error::Divergence {
            epoch: config.epochs,
            what: "parameters",
        });
    }
    Ok((model, losses))
}

/// Trains GloVe and returns `main + context` vectors per word.
pub fn train_glove(store: &CooccurrenceStore, vocab: &Vocabulary, config: &GloveConfig) -> Result<TrainOutput> {
    let (model, epoch_loss) = train_glove_model(store, vocab, config)?;
    let embeddings = glove_embeddings(&model, vocab, config)?;
    Ok(TrainOutput {
        embeddings,
        epoch_loss,
    })
}

pub fn glove_embeddings(model: &GloveModel, vocab: &Vocabulary, config: &GloveConfig) -> Result<EmbeddingSet> {
    EmbeddingSet::words_only(
        vocab.words().map(str::to_owned).collect(),
        model.combined(),
        EmbeddingMeta {
            algorithm: Algorithm::Glove,
            vocab_hash: vocab.hash(),
            params: config.params(),
        },
    )
}
