//! Character n-grams of marked words and their hash buckets.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubwordConfig {
    pub minn: usize,
    pub maxn: usize,
    pub n_buckets: u32,
    pub bow_marker: char,
    pub eow_marker: char,
}

impl Default for SubwordConfig {
    fn default() -> Self {
        SubwordConfig {
            minn: 2,
            maxn: 7,
            n_buckets: 2_000_000,
            bow_marker: '<',
            eow_marker: '>',
        }
    }
}

impl SubwordConfig {
    pub fn validate(&self) -> Result<()> {
        if self.minn < 1 || self.maxn < self.minn {
            return Err(Error::Config(format!(
                "n-gram range must satisfy 1 <= minn <= maxn, got {}..={}",
                self.minn, self.maxn
            )));
        }
        if self.n_buckets < 1 {
            return Err(Error::Config("n_buckets must be at least 1".into()));
        }
        if self.bow_marker == self.eow_marker {
            return Err(Error::Config("word markers must differ".into()));
        }
        Ok(())
    }

    /// All n-grams of `word`, in position-major order: for each start
    /// position of `<word>`, lengths `minn..=maxn` that fit. The complete
    /// marked word is left out since the word has its own vector.
    pub fn char_ngrams(&self, word: &str) -> Result<Vec<String>> {
        if word.is_empty() {
            return Err(Error::Input("cannot take n-grams of an empty word".into()));
        }
        if word.contains(self.bow_marker) || word.contains(self.eow_marker) {
            return Err(Error::Input(format!("word '{word}' contains a marker character")));
        }
        let mut marked = Vec::with_capacity(word.len() + 2);
        marked.push(self.bow_marker);
        marked.extend(word.chars());
        marked.push(self.eow_marker);
        let total = marked.len();
        let mut out = Vec::new();
        for start in 0..total {
            for n in self.minn..=self.maxn {
                let end = start + n;
                if end > total {
                    break;
                }
                if start == 0 && end == total {
                    continue;
                }
                out.push(marked[start..end].iter().collect());
            }
        }
        Ok(out)
    }

    /// Bucket indices of every n-gram of `word`.
    pub fn buckets(&self, word: &str) -> Result<Vec<u32>> {
        Ok(self
            .char_ngrams(word)?
            .iter()
            .map(|g| ngram_bucket(g, self.n_buckets))
            .collect())
    }
}

pub fn fnv1a32(bytes: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for &b in bytes {
        h ^= u32::from(b);
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// FNV-1a 32-bit over the UTF-8 bytes, reduced modulo `n_buckets`.
pub fn ngram_bucket(ngram: &str, n_buckets: u32) -> u32 {
    fnv1a32(ngram.as_bytes()) % n_buckets.max(1)
}
