//! Frequency vocabulary, word-length histogram and stop-word candidates.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline::CleanCorpus;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VocabEntry {
    pub word: String,
    pub count: u64,
}

/// Words sorted by descending count, ties broken by code point order. A
/// word's id is its position in that order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, u32>,
    total_tokens: u64,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from raw counts, keeping words with
    /// `count >= min_count`.
    pub fn from_counts(counts: HashMap<String, u64>, total_tokens: u64, min_count: u64) -> Self {
        let mut entries: Vec<VocabEntry> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count && *c > 0)
            .map(|(word, count)| VocabEntry { word, count })
            .collect();
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i as u32))
            .collect();
        Vocabulary {
            entries,
            index,
            total_tokens,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.entries[id as usize].word
    }

    pub fn count(&self, id: u32) -> u64 {
        self.entries[id as usize].count
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    /// Token count of the corpus before min-count filtering.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Sum of the retained words' counts.
    pub fn retained_tokens(&self) -> u64 {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// FNV-1a 64 over the ordered `(word, count)` list. Binds derived
    /// artifacts such as co-occurrence shards to this exact vocabulary.
    pub fn hash(&self) -> u64 {
        let mut h = Fnv64::new();
        for e in &self.entries {
            h.write(e.word.as_bytes());
            h.write(&[0]);
            h.write(&e.count.to_le_bytes());
        }
        h.finish()
    }

    /// Maps a sentence to ids, skipping out-of-vocabulary tokens.
    pub fn encode<'a>(&'a self, sentence: &'a [String]) -> impl Iterator<Item = u32> + 'a {
        sentence.iter().filter_map(move |t| self.id(t))
    }

    /// `word<TAB>count` lines in id order.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for e in &self.entries {
            writeln!(out, "{}\t{}", e.word, e.count).map_err(|e| Error::io(path, e))?;
        }
        out.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a `word<TAB>count` file. The file does not record the
    /// unfiltered token count, so `total_tokens` becomes the sum of counts.
    pub fn read_tsv(path: impl AsRef<Path>, min_count: u64) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let context = path.display().to_string();
        let mut counts = HashMap::new();
        let mut total = 0u64;
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&context, n + 1, "expected word<TAB>count"))?;
            let count: u64 = count
                .parse()
                .map_err(|_| Error::parse(&context, n + 1, format!("bad count '{count}'")))?;
            if counts.insert(word.to_owned(), count).is_some() {
                return Err(Error::parse(&context, n + 1, format!("duplicate word '{word}'")));
            }
            total += count;
        }
        Ok(Vocabulary::from_counts(counts, total, min_count))
    }
}

pub(crate) struct Fnv64(u64);

impl Fnv64 {
    pub(crate) fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

fn count_tokens<'a>(tokens: impl Iterator<Item = &'a str>) -> HashMap<String, u64> {
    let mut counts: HashMap<String, u64> = HashMap::new();
    for t in tokens {
        if let Some(c) = counts.get_mut(t) {
            *c += 1;
        } else {
            counts.insert(t.to_owned(), 1);
        }
    }
    counts
}

pub fn build_vocab(corpus: &CleanCorpus, min_count: u64) -> Result<Vocabulary> {
    build_vocab_with_threads(corpus, min_count, 1)
}

/// Counts in `threads` shards of sentences and merges. Counts are integers,
/// so the result does not depend on the shard count.
pub fn build_vocab_with_threads(corpus: &CleanCorpus, min_count: u64, threads: usize) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::Input("min_count must be at least 1".into()));
    }
    let counts = if threads > 1 && corpus.sentences.len() > 1 {
        let chunk = corpus.sentences.len().div_ceil(threads);
        corpus
            .sentences
            .par_chunks(chunk)
            .map(|part| count_tokens(part.iter().flatten().map(String::as_str)))
            .reduce(HashMap::new, |mut a, b| {
                for (w, c) in b {
                    *a.entry(w).or_insert(0) += c;
                }
                a
            })
    } else {
        count_tokens(corpus.tokens())
    };
    let total = counts.values().sum();
    Ok(Vocabulary::from_counts(counts, total, min_count))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LengthRow {
    pub length: usize,
    pub frequency: u64,
    pub percent: f64,
}

/// Histogram of token lengths in letters (Unicode scalar values).
#[derive(Clone, Debug, PartialEq)]
pub struct LetterNgramStats {
    pub rows: Vec<LengthRow>,
    pub total: u64,
}

pub fn percent(frequency: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        frequency as f64 / total as f64 * 100.0
    }
}

impl LetterNgramStats {
    pub fn from_frequencies(frequencies: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut rows: Vec<(usize, u64)> = frequencies.into_iter().filter(|(_, f)| *f > 0).collect();
        rows.sort_unstable();
        let total = rows.iter().map(|(_, f)| f).sum();
        LetterNgramStats {
            rows: rows
                .into_iter()
                .map(|(length, frequency)| LengthRow {
                    length,
                    frequency,
                    percent: percent(frequency, total),
                })
                .collect(),
            total,
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("length\tfrequency\tpercent\n");
        for r in &self.rows {
            out.push_str(&format!("{}\t{}\t{:.4}\n", r.length, r.frequency, r.percent));
        }
        out
    }
}

pub fn word_length_stats(corpus: &CleanCorpus) -> LetterNgramStats {
    let mut freq: Vec<u64> = Vec::new();
    for token in corpus.tokens() {
        let len = token.chars().count();
        if freq.len() <= len {
            freq.resize(len + 1, 0);
        }
        freq[len] += 1;
    }
    LetterNgramStats::from_frequencies(freq.into_iter().enumerate())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StopWordCandidate {
    pub word: String,
    pub count: u64,
    pub relative_frequency: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StopWordCandidates {
    pub ranked: Vec<StopWordCandidate>,
    pub cut_n: usize,
}

impl StopWordCandidates {
    pub fn to_tsv(&self) -> String {
        self.ranked
            .iter()
            .map(|c| format!("{}\t{}\t{}\n", c.word, c.count, c.relative_frequency))
            .collect()
    }
}

/// The `top_n` most frequent words, for manual curation. Relative
/// frequencies are taken against the unfiltered corpus token count.
pub fn stopword_candidates(vocab: &Vocabulary, top_n: usize) -> StopWordCandidates {
    let total = vocab.total_tokens().max(1) as f64;
    let ranked: Vec<StopWordCandidate> = vocab
        .entries()
        .iter()
        .take(top_n)
        .map(|e| StopWordCandidate {
            word: e.word.clone(),
            count: e.count,
            relative_frequency: e.count as f64 / total,
        })
        .collect();
    StopWordCandidates {
        cut_n: ranked.len(),
        ranked,
    }
}

/// Probability of keeping one occurrence of a word under frequency
/// subsampling: `min(1, sqrt(t / f))` with `f = word_count / total_tokens`.
pub fn subsample_keep_prob(word_count: u64, total_tokens: u64, t: f64) -> f64 {
    if word_count == 0 || total_tokens == 0 {
        return 1.0;
    }
    let f = word_count as f64 / total_tokens as f64;
    (t / f).sqrt().min(1.0)
}
