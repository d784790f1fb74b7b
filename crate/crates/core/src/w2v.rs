//! Continuous bag-of-words with hierarchical softmax and skip-gram with
//! negative sampling, both over subword-enriched input vectors.
//!
//! A token's input vector is the mean of its word row and its n-gram bucket
//! rows. Gradients are the exact derivatives of that mean, so each
//! constituent row receives `1/rows` of the hidden-layer gradient.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use log::info;
use num_traits::Float;
use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::{Algorithm, EmbeddingMeta, EmbeddingSet, Matrix};
use crate::error::{Error, Result};
use crate::hogwild::HogwildBuffer;
use crate::huffman::{build_huffman, HuffmanTree};
use crate::pipeline::CleanCorpus;
use crate::subword::SubwordConfig;
use crate::vocab::{subsample_keep_prob, Vocabulary};
use crate::TrainOutput;

/// Exponent applied to counts in the negative-sampling distribution.
pub const UNIGRAM_POWER: f64 = 0.75;
/// Final learning rate as a fraction of the initial one.
pub const MIN_LR_FRACTION: f64 = 1e-4;
/// Draws allowed per negative before giving up on a collision.
pub const NEGATIVE_ATTEMPTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Cbow,
    SkipGram,
}

#[derive(Clone, Debug, PartialEq)]
pub struct W2vConfig {
    pub mode: Mode,
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub ws: usize,
    pub negatives: usize,
    /// `None` trains plain word vectors.
    pub subword: Option<SubwordConfig>,
    pub subsample_t: f64,
    pub dynamic_window: bool,
    pub table_size: usize,
    pub seed: u64,
    pub threads: usize,
}

impl W2vConfig {
    pub fn new(mode: Mode) -> Self {
        W2vConfig {
            mode,
            dim: 300,
            lr: 0.25,
            epochs: 100,
            ws: 7,
            negatives: 20,
            subword: Some(SubwordConfig::default()),
            subsample_t: 1e-4,
            dynamic_window: true,
            table_size: 10_000_000,
            seed: 1,
            threads: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::Config("dim must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("lr must be positive".into()));
        }
        if self.ws < 1 {
            return Err(Error::Config("window size must be at least 1".into()));
        }
        if self.subsample_t.is_nan() || self.subsample_t <= 0.0 {
            return Err(Error::Config("sampling threshold must be positive".into()));
        }
        if self.mode == Mode::SkipGram && self.table_size < 1 {
            return Err(Error::Config("unigram table size must be positive".into()));
        }
        if let Some(s) = &self.subword {
            s.validate()?;
        }
        Ok(())
    }

    fn params(&self) -> BTreeMap<String, String> {
        let mut p: BTreeMap<String, String> = [
            ("dim", self.dim.to_string()),
            ("lr", self.lr.to_string()),
            ("epochs", self.epochs.to_string()),
            ("ws", self.ws.to_string()),
            ("sample", self.subsample_t.to_string()),
            ("dynamic_window", self.dynamic_window.to_string()),
            ("seed", self.seed.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v))
        .collect();
        if self.mode == Mode::SkipGram {
            p.insert("neg".into(), self.negatives.to_string());
        }
        if let Some(s) = &self.subword {
            p.insert("minn".into(), s.minn.to_string());
            p.insert("maxn".into(), s.maxn.to_string());
            p.insert("buckets".into(), s.n_buckets.to_string());
        }
        p
    }
}

/// Negative-sampling table: word ids in proportion to `count^0.75`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnigramTable {
    table: Vec<u32>,
}

impl UnigramTable {
    /// Allocates `size` slots by largest remainder; remainder ties go to the
    /// lower id.
    pub fn from_counts(counts: &[u64], size: usize) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::Input("unigram table needs at least one word".into()));
        }
        if size < counts.len() {
            return Err(Error::Input(format!(
                "table size {size} is smaller than the vocabulary ({})",
                counts.len()
            )));
        }
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(UNIGRAM_POWER)).collect();
        let total: f64 = weights.iter().sum();
        let quotas: Vec<f64> = weights.iter().map(|w| w / total * size as f64).collect();
        let mut slots: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let assigned: usize = slots.iter().sum();
        let mut by_remainder: Vec<usize> = (0..counts.len()).collect();
        by_remainder.sort_by(|&a, &b| {
            let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &id in by_remainder.iter().take(size.saturating_sub(assigned)) {
            slots[id] += 1;
        }
        let mut table = Vec::with_capacity(size);
        for (id, &n) in slots.iter().enumerate() {
            table.extend(std::iter::repeat_n(id as u32, n));
        }
        Ok(UnigramTable { table })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.table
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        self.table[rng.gen_range(0..self.table.len())]
    }
}

pub fn build_unigram_table(vocab: &Vocabulary, size: usize) -> Result<UnigramTable> {
    let counts: Vec<u64> = vocab.entries().iter().map(|e| e.count).collect();
    UnigramTable::from_counts(&counts, size)
}

/// Target distribution `count^0.75 / sum` behind [`UnigramTable`].
pub fn unigram_distribution(counts: &[u64]) -> Vec<f64> {
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(UNIGRAM_POWER)).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Per-word keep probabilities for frequency subsampling.
#[derive(Clone, Debug)]
pub struct Subsampler {
    keep: Vec<f64>,
}

impl Subsampler {
    pub fn new(vocab: &Vocabulary, t: f64) -> Self {
        let total = vocab.total_tokens().max(vocab.retained_tokens());
        Subsampler {
            keep: vocab
                .entries()
                .iter()
                .map(|e| subsample_keep_prob(e.count, total, t))
                .collect(),
        }
    }

    pub fn keep_prob(&self, id: u32) -> f64 {
        self.keep[id as usize]
    }

    pub fn keep<R: Rng>(&self, id: u32, rng: &mut R) -> bool {
        let p = self.keep[id as usize];
        p >= 1.0 || rng.gen::<f64>() < p
    }
}

/// Effective window: uniform in `1..=ws` when dynamic, else `ws`.
pub fn sample_window<R: Rng>(rng: &mut R, ws: usize, dynamic: bool) -> usize {
    if dynamic {
        rng.gen_range(1..=ws)
    } else {
        ws
    }
}

pub fn sigmoid<F: Float>(x: F) -> F {
    F::one() / (F::one() + (-x).exp())
}

/// `ln(1 + e^x)` without overflow.
fn softplus<F: Float>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary logistic term for score `x = row . hidden`.
///
/// Returns `-ln sigmoid(x)` for a positive target and `-ln sigmoid(-x)` for
/// a negative one, together with the derivative `sigmoid(x) - target` of
/// that loss with respect to `x`.
pub fn logistic_term<F: Float>(x: F, positive: bool) -> (F, F) {
    let s = sigmoid(x);
    if positive {
        (softplus(-x), s - F::one())
    } else {
        (softplus(x), s)
    }
}

/// Code bit `0` is the positive branch.
pub fn hs_branch_is_positive(bit: u8) -> bool {
    bit == 0
}

/// Mean of the group means: each group is one token's constituent rows.
pub fn compose_hidden<'a, F: Float + 'a>(groups: &[&[u32]], row: impl Fn(usize) -> &'a [F], out: &mut [F]) {
    out.iter_mut().for_each(|v| *v = F::zero());
    let outer = F::one() / F::from(groups.len().max(1)).unwrap();
    for group in groups {
        let scale = outer / F::from(group.len().max(1)).unwrap();
        for &r in group.iter() {
            for (o, v) in out.iter_mut().zip(row(r as usize)) {
                *o = *o + scale * *v;
            }
        }
    }
}

/// Probability of `word` under hierarchical softmax given `hidden`.
pub fn hs_probability(inner: &Matrix, tree: &HuffmanTree, hidden: &[f32], word: u32) -> f64 {
    let mut p = 1.0f64;
    for (&node, &bit) in tree.path(word).iter().zip(tree.code(word)) {
        let x: f64 = inner
            .row(node as usize)
            .iter()
            .zip(hidden)
            .map(|(a, b)| f64::from(*a) * f64::from(*b))
            .sum();
        p *= if hs_branch_is_positive(bit) {
            sigmoid(x)
        } else {
            sigmoid(-x)
        };
    }
    p
}

pub fn hs_word_probability(model: &EmbeddingSet, tree: &HuffmanTree, hidden: &[f32], word: u32) -> Result<f64> {
    let inner = model
        .output()
        .filter(|m| model.meta().algorithm == Algorithm::Cbow && m.rows() == tree.inner_nodes())
        .ok_or_else(|| Error::Input("embedding set has no hierarchical-softmax parameters".into()))?;
    if hidden.len() != inner.dim() {
        return Err(Error::Input(format!(
            "hidden vector has {} values, expected {}",
            hidden.len(),
            inner.dim()
        )));
    }
    Ok(hs_probability(inner, tree, hidden, word))
}

/// Hidden vector CBoW forms from `context` word ids.
pub fn cbow_hidden(emb: &EmbeddingSet, context: &[u32]) -> Result<Vec<f32>> {
    let groups = context
        .iter()
        .map(|&id| emb.constituent_rows(emb.word(id)))
        .collect::<Result<Vec<_>>>()?;
    let groups: Vec<Vec<u32>> = groups
        .into_iter()
        .map(|g| g.into_iter().map(|r| r as u32).collect())
        .collect();
    let refs: Vec<&[u32]> = groups.iter().map(Vec::as_slice).collect();
    let mut out = vec![0f32; emb.dim()];
    compose_hidden(&refs, |r| emb.input().row(r), &mut out);
    Ok(out)
}

/// Row storage read and written by the update kernels.
pub trait ParamRows<F> {
    fn row(&self, r: usize) -> &[F];
    fn row_mut(&mut self, r: usize) -> &mut [F];
}

/// Row-major parameters in a plain slice.
pub struct DenseRows<'a, F> {
    data: &'a mut [F],
    dim: usize,
}

impl<'a, F> DenseRows<'a, F> {
    pub fn new(data: &'a mut [F], dim: usize) -> Self {
        assert!(dim > 0 && data.len().is_multiple_of(dim), "slice is not a whole number of rows");
        DenseRows { data, dim }
    }
}

impl<F> ParamRows<F> for DenseRows<'_, F> {
    fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }
}

impl ParamRows<f32> for &HogwildBuffer {
    fn row(&self, r: usize) -> &[f32] {
        HogwildBuffer::row(self, r)
    }

    fn row_mut(&mut self, r: usize) -> &mut [f32] {
        HogwildBuffer::row_mut(self, r)
    }
}

/// Loss of one update: the logistic terms of `targets` (output row, is
/// positive) scored against the hidden vector composed from `groups`.
pub fn w2v_loss<F: Float>(
    input: &impl ParamRows<F>,
    output: &impl ParamRows<F>,
    groups: &[&[u32]],
    targets: &[(u32, bool)],
    dim: usize,
) -> F {
    let mut hidden = vec![F::zero(); dim];
    compose_hidden(groups, |r| input.row(r), &mut hidden);
    targets.iter().fold(F::zero(), |acc, &(t, positive)| {
        let x = output
            .row(t as usize)
            .iter()
            .zip(&hidden)
            .fold(F::zero(), |s, (a, b)| s + *a * *b);
        acc + logistic_term(x, positive).0
    })
}

/// One stochastic gradient step on [`w2v_loss`]; returns the loss before
/// the step. Output rows are updated target by target; the input rows
/// receive the accumulated hidden gradient at the end. `hidden` and `grad`
/// are scratch buffers of length `dim`.
pub fn w2v_step<F: Float>(
    input: &mut impl ParamRows<F>,
    output: &mut impl ParamRows<F>,
    groups: &[&[u32]],
    targets: &[(u32, bool)],
    lr: F,
    hidden: &mut [F],
    grad: &mut [F],
) -> F {
    compose_hidden(groups, |r| input.row(r), hidden);
    grad.iter_mut().for_each(|g| *g = F::zero());
    let mut loss = F::zero();
    for &(t, positive) in targets {
        let row = output.row_mut(t as usize);
        let x = row.iter().zip(hidden.iter()).fold(F::zero(), |s, (a, b)| s + *a * *b);
        let (term, factor) = logistic_term(x, positive);
        loss = loss + term;
        for ((g, w), h) in grad.iter_mut().zip(row.iter_mut()).zip(hidden.iter()) {
            *g = *g + factor * *w;
            *w = *w - lr * factor * *h;
        }
    }
    let outer = F::one() / F::from(groups.len().max(1)).unwrap();
    for group in groups {
        let scale = lr * outer / F::from(group.len().max(1)).unwrap();
        for &r in group.iter() {
            for (v, g) in input.row_mut(r as usize).iter_mut().zip(grad.iter()) {
                *v = *v - scale * *g;
            }
        }
    }
    loss
}

struct Shared<'a> {
    input: HogwildBuffer,
    output: HogwildBuffer,
    rows: &'a [Vec<u32>],
}

struct Worker<'a> {
    shared: &'a Shared<'a>,
    hidden: Vec<f32>,
    grad: Vec<f32>,
    targets: Vec<(u32, bool)>,
    rng: ChaCha8Rng,
}

impl Worker<'_> {
    fn step(&mut self, groups: &[&[u32]], lr: f32) -> f32 {
        let (mut input, mut output) = (&self.shared.input, &self.shared.output);
        w2v_step(&mut input, &mut output, groups, &self.targets, lr, &mut self.hidden, &mut self.grad)
    }

    fn sg_pair(&mut self, center: u32, context: u32, table: &UnigramTable, negatives: usize, lr: f32) -> f32 {
        self.targets.clear();
        self.targets.push((context, true));
        for _ in 0..negatives {
            let neg = (0..NEGATIVE_ATTEMPTS)
                .map(|_| table.sample(&mut self.rng))
                .find(|&w| w != context);
            if let Some(neg) = neg {
                self.targets.push((neg, false));
            }
        }
        let groups = [self.shared.rows[center as usize].as_slice()];
        self.step(&groups, lr)
    }

    fn cbow_center(&mut self, center: u32, context: &[u32], tree: &HuffmanTree, lr: f32) -> f32 {
        self.targets.clear();
        self.targets.extend(
            tree.path(center)
                .iter()
                .zip(tree.code(center))
                .map(|(&node, &bit)| (node, hs_branch_is_positive(bit))),
        );
        let all_rows = self.shared.rows;
        let groups: Vec<&[u32]> = context.iter().map(|&c| all_rows[c as usize].as_slice()).collect();
        self.step(&groups, lr)
    }
}

struct Schedule {
    start_lr: f64,
    planned: f64,
    processed: AtomicU64,
}

impl Schedule {
    fn lr(&self) -> f32 {
        let done = self.processed.load(Ordering::Relaxed) as f64;
        let progress = (done / self.planned).min(1.0);
        (self.start_lr * (1.0 - (1.0 - MIN_LR_FRACTION) * progress)) as f32
    }
}

enum Objective<'a> {
    Negative(&'a UnigramTable),
    Hierarchical(&'a HuffmanTree),
}

#[allow(clippy::too_many_arguments)]
fn run_worker(
    shared: &Shared<'_>,
    sentences: &[Vec<u32>],
    config: &W2vConfig,
    objective: &Objective<'_>,
    sampler: &Subsampler,
    schedule: &Schedule,
    seed: u64,
) -> (f64, u64) {
    let mut worker = Worker {
        shared,
        hidden: vec![0.0; config.dim],
        grad: vec![0.0; config.dim],
        targets: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let mut loss_sum = 0.0f64;
    let mut updates = 0u64;
    let mut kept = Vec::new();
    let mut context = Vec::new();
    for sentence in sentences {
        kept.clear();
        for &id in sentence {
            if sampler.keep(id, &mut worker.rng) {
                kept.push(id);
            }
        }
        let lr = schedule.lr();
        if kept.len() >= 2 {
            for pos in 0..kept.len() {
                let b = sample_window(&mut worker.rng, config.ws, config.dynamic_window);
                let lo = pos.saturating_sub(b);
                let hi = (pos + b).min(kept.len() - 1);
                match objective {
                    Objective::Negative(table) => {
                        for o in lo..=hi {
                            if o != pos {
                                loss_sum += f64::from(worker.sg_pair(kept[pos], kept[o], table, config.negatives, lr));
                                updates += 1;
                            }
                        }
                    }
                    Objective::Hierarchical(tree) => {
                        context.clear();
                        context.extend((lo..=hi).filter(|&o| o != pos).map(|o| kept[o]));
                        loss_sum += f64::from(worker.cbow_center(kept[pos], &context, tree, lr));
                        updates += 1;
                    }
                }
            }
        }
        schedule
            .processed
            .fetch_add(sentence.len() as u64, Ordering::Relaxed);
    }
    (loss_sum, updates)
}

fn constituent_rows(vocab: &Vocabulary, subword: Option<&SubwordConfig>) -> Result<Vec<Vec<u32>>> {
    let n = vocab.len() as u32;
    vocab
        .words()
        .enumerate()
        .map(|(id, word)| {
            let mut rows = vec![id as u32];
            if let Some(cfg) = subword {
                // Words containing marker characters simply get no n-grams.
                if let Ok(buckets) = cfg.buckets(word) {
                    rows.extend(buckets.into_iter().map(|b| n + b));
                }
            }
            Ok(rows)
        })
        .collect()
}

fn train(corpus: &CleanCorpus, vocab: &Vocabulary, config: &W2vConfig) -> Result<TrainOutput> {
    config.validate()?;
    if vocab.is_empty() || corpus.token_count == 0 {
        return Err(Error::Training("vocabulary or corpus is empty".into()));
    }
    let sentences: Vec<Vec<u32>> = corpus
        .sentences
        .iter()
        .map(|s| vocab.encode(s).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    let train_tokens: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    if train_tokens == 0 {
        return Err(Error::Training("no corpus token is in the vocabulary".into()));
    }

    let (tree, table) = match config.mode {
        Mode::Cbow => (Some(build_huffman(vocab)?), None),
        Mode::SkipGram => (None, Some(build_unigram_table(vocab, config.table_size.max(vocab.len()))?)),
    };
    let objective = match (&tree, &table) {
        (Some(t), _) => Objective::Hierarchical(t),
        (_, Some(t)) => Objective::Negative(t),
        _ => unreachable!(),
    };

    let dim = config.dim;
    let buckets = config.subword.as_ref().map_or(0, |s| s.n_buckets as usize);
    let input_rows = vocab.len() + buckets;
    let output_rows = match config.mode {
        Mode::Cbow => vocab.len() - 1,
        Mode::SkipGram => vocab.len(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 1.0 / dim as f32;
    let dist = Uniform::new_inclusive(-bound, bound);
    let input: Vec<f32> = (0..input_rows * dim).map(|_| dist.sample(&mut rng)).collect();
    let rows = constituent_rows(vocab, config.subword.as_ref())?;
    let shared = Shared {
        input: HogwildBuffer::new(input, dim),
        output: HogwildBuffer::new(vec![0.0; output_rows * dim], dim),
        rows: &rows,
    };
    let sampler = Subsampler::new(vocab, config.subsample_t);
    let schedule = Schedule {
        start_lr: config.lr,
        planned: (train_tokens * config.epochs.max(1) as u64) as f64,
        processed: AtomicU64::new(0),
    };
    let threads = config.threads.max(1).min(sentences.len());
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let epoch_seed = config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(epoch as u64);
        let (loss, updates) = if threads == 1 {
            run_worker(&shared, &sentences, config, &objective, &sampler, &schedule, epoch_seed)
        } else {
            let part = sentences.len().div_ceil(threads);
            std::thread::scope(|scope| {
                let handles: Vec<_> = sentences
                    .chunks(part)
                    .enumerate()
                    .map(|(t, chunk)| {
                        let (shared, objective, sampler, schedule) = (&shared, &objective, &sampler, &schedule);
                        let seed = epoch_seed ^ ((t as u64 + 1) << 48);
                        scope.spawn(move || run_worker(shared, chunk, config, objective, sampler, schedule, seed))
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .fold((0.0, 0), |(l, u), (l2, u2)| (l + l2, u + u2))
            })
        };
        let mean = if updates > 0 { loss / updates as f64 } else { 0.0 };
        if !mean.is_finite() {
            return Err(Error::Divergence {
                epoch: epoch + 1,
                what: "loss",
            });
        }
        info!(
            "{} epoch {}: mean loss {mean:.6} over {updates} updates",
            match config.mode {
                Mode::Cbow => "cbow",
                Mode::SkipGram => "sg",
            },
            epoch + 1
        );
        epoch_loss.push(mean);
    }

    let input = Matrix::from_vec(shared.input.into_inner(), input_rows, dim)?;
    let output = Matrix::from_vec(shared.output.into_inner(), output_rows, dim)?;
    if !input.is_finite() || !output.is_finite() {
        return Err(Error::Divergence {
            epoch: config.epochs,
            what: "parameters",
        });
    }
    let algorithm = match config.mode {
        Mode::Cbow => Algorithm::Cbow,
        Mode::SkipGram => Algorithm::SkipGram,
    };
    let embeddings = EmbeddingSet::new(
        vocab.words().map(str::to_owned).collect(),
        input,
        Some(output),
        config.subword.clone(),
        EmbeddingMeta {
            algorithm,
            vocab_hash: vocab.hash(),
            params: config.params(),
        },
    )?;
    Ok(TrainOutput {
        embeddings,
        epoch_loss,
    })
}

pub fn train_sg(corpus: &CleanCorpus, vocab: &Vocabulary, config: &W2vConfig) -> Result<TrainOutput> {
    if config.mode != Mode::SkipGram {
        return Err(Error::Config("train_sg requires skip-gram mode".into()));
    }
    train(corpus, vocab, config)
}

pub fn train_cbow(corpus: &CleanCorpus, vocab: &Vocabulary, config: &W2vConfig) -> Result<TrainOutput> {
    if config.mode != Mode::Cbow {
        return Err(Error::Config("train_cbow requires cbow mode".into()));
    }
    train(corpus, vocab, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::build_vocab;

    #[test]
    fn unigram_two_words() {
        let t = UnigramTable::from_counts(&[16, 1], 9).unwrap();
        let a = t.entries().iter().filter(|&&w| w == 0).count();
        assert_eq!(a, 8);
        let p = unigram_distribution(&[16, 1]);
        assert!((p[0] - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn unigram_single_word_and_bad_size() {
        let t = UnigramTable::from_counts(&[5], 10).unwrap();
        assert!(t.entries().iter().all(|&w| w == 0));
        assert_eq!(t.len(), 10);
        assert!(UnigramTable::from_counts(&[1, 2, 3], 2).is_err());
    }

    #[test]
    fn unigram_table_has_requested_size() {
        let counts: Vec<u64> = (1..=37).map(|k| 1000 / k).collect();
        let t = UnigramTable::from_counts(&counts, 1001).unwrap();
        assert_eq!(t.len(), 1001);
    }

    #[test]
    fn logistic_terms() {
        let (l, g) = logistic_term(0.0f64, true);
        assert!((l - 2f64.ln()).abs() < 1e-15);
        assert!((g + 0.5).abs() < 1e-15);
        let (l, _) = logistic_term(-800.0f64, true);
        assert!((l - 800.0).abs() < 1e-9, "no overflow");
        let (l, g) = logistic_term(3.0f64, false);
        assert!((l - (1.0 + 3f64.exp()).ln()).abs() < 1e-12);
        assert!((g - sigmoid(3.0)).abs() < 1e-15);
    }

    #[test]
    fn compose_two_level_mean() {
        let rows = [[1.0f64, 0.0], [3.0, 2.0], [10.0, 10.0]];
        let mut out = [0.0; 2];
        compose_hidden(&[&[0, 1], &[2]], |r| &rows[r][..], &mut out);
        assert_eq!(out, [(2.0 + 10.0) / 2.0, (1.0 + 10.0) / 2.0]);
    }

    #[test]
    fn window_sampling_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..1000 {
            let b = sample_window(&mut rng, 7, true);
            assert!((1..=7).contains(&b));
        }
        assert_eq!(sample_window(&mut rng, 7, false), 7);
    }

    #[test]
    fn mode_mismatch_rejected() {
        let c = CleanCorpus::from_sentences(vec![vec!["a".into(), "b".into()]]);
        let v = build_vocab(&c, 1).unwrap();
        assert!(train_sg(&c, &v, &W2vConfig::new(Mode::Cbow)).is_err());
        assert!(train_cbow(&c, &v, &W2vConfig::new(Mode::SkipGram)).is_err());
    }

    #[test]
    fn empty_inputs_rejected() {
        let c = CleanCorpus::default();
        let v = build_vocab(&c, 1).unwrap();
        let err = train_sg(&c, &v, &W2vConfig::new(Mode::SkipGram)).unwrap_err();
        assert!(matches!(err, Error::Training(_)));
    }

    #[test]
    fn cbow_needs_two_words() {
        let c = CleanCorpus::from_sentences(vec![vec!["a".into(), "a".into()]]);
        let v = build_vocab(&c, 1).unwrap();
        let mut cfg = W2vConfig::new(Mode::Cbow);
        cfg.subword = None;
        assert!(matches!(train_cbow(&c, &v, &cfg), Err(Error::Structure(_))));
    }
}
