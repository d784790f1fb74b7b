//! Harmonically weighted word-word co-occurrence counts.
//!
//! A pair of in-vocabulary tokens at distance `d <= ws` inside one sentence
//! adds `1/d` to both `X(i, j)` and `X(j, i)`. Both directions are stored so
//! that readers never have to symmetrize.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pipeline::CleanCorpus;
use crate::vocab::Vocabulary;

pub const SHARD_MAGIC: &[u8; 5] = b"COOC1";
const HEADER_LEN: usize = 5 + 8 + 4 + 8;
const RECORD_LEN: usize = 4 + 4 + 8;
/// 64 MiB of records per shard file.
pub const DEFAULT_SHARD_RECORDS: usize = (64 << 20) / RECORD_LEN;
/// Sentences per accumulation chunk. Chunks are merged in corpus order, so
/// the floating-point sums do not depend on the thread count.
const CHUNK_SENTENCES: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoocRecord {
    pub i: u32,
    pub j: u32,
    pub x: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CooccurrenceStore {
    records: Vec<CoocRecord>,
    ws: u32,
    vocab_hash: u64,
    vocab_len: u32,
}

fn key(i: u32, j: u32) -> u64 {
    (u64::from(i) << 32) | u64::from(j)
}

fn accumulate_chunk(sentences: &[Vec<String>], vocab: &Vocabulary, ws: usize) -> HashMap<u64, f64> {
    let mut map: HashMap<u64, f64> = HashMap::new();
    let mut ids = Vec::new();
    for sentence in sentences {
        ids.clear();
        ids.extend(vocab.encode(sentence));
        for (pos, &left) in ids.iter().enumerate() {
            for d in 1..=ws {
                let Some(&right) = ids.get(pos + d) else {
                    break;
                };
                let w = 1.0 / d as f64;
                *map.entry(key(left, right)).or_insert(0.0) += w;
                *map.entry(key(right, left)).or_insert(0.0) += w;
            }
        }
    }
    map
}

pub fn accumulate_cooccurrence(corpus: &CleanCorpus, vocab: &Vocabulary, ws: usize) -> Result<CooccurrenceStore> {
    accumulate_cooccurrence_with_threads(corpus, vocab, ws, 1)
}

pub fn accumulate_cooccurrence_with_threads(
    corpus: &CleanCorpus,
    vocab: &Vocabulary,
    ws: usize,
    threads: usize,
) -> Result<CooccurrenceStore> {
    if ws < 1 {
        return Err(Error::Input("window size must be at least 1".into()));
    }
    let ws_u32 = u32::try_from(ws).map_err(|_| Error::Input("window size too large".into()))?;
    let chunks: Vec<&[Vec<String>]> = corpus.sentences.chunks(CHUNK_SENTENCES).collect();
    let mut total: HashMap<u64, f64> = HashMap::new();
    let merge = |part: HashMap<u64, f64>, total: &mut HashMap<u64, f64>| {
        let mut part: Vec<(u64, f64)> = part.into_iter().collect();
        part.sort_unstable_by_key(|(k, _)| *k);
        for (k, x) in part {
            *total.entry(k).or_insert(0.0) += x;
        }
    };
    if threads > 1 && chunks.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        for wave in chunks.chunks(threads) {
            let parts: Vec<HashMap<u64, f64>> =
                pool.install(|| wave.par_iter().map(|c| accumulate_chunk(c, vocab, ws)).collect());
            for part in parts {
                merge(part, &mut total);
            }
        }
    } else {
        for chunk in chunks {
            merge(accumulate_chunk(chunk, vocab, ws), &mut total);
        }
    }
    let mut records: Vec<CoocRecord> = total
        .into_iter()
        .map(|(k, x)| CoocRecord {
            i: (k >> 32) as u32,
            j: k as u32,
            x,
        })
        .collect();
    records.sort_unstable_by_key(|r| key(r.i, r.j));
    Ok(CooccurrenceStore {
        records,
        ws: ws_u32,
        vocab_hash: vocab.hash(),
        vocab_len: vocab.len() as u32,
    })
}

impl CooccurrenceStore {
    pub fn from_records(mut records: Vec<CoocRecord>, ws: u32, vocab: &Vocabulary) -> Result<Self> {
        let n = vocab.len() as u32;
        if let Some(r) = records.iter().find(|r| r.i >= n || r.j >= n) {
            return Err(Error::Integrity(format!(
                "record ({}, {}) outside vocabulary of {n} words",
                r.i, r.j
            )));
        }
        if let Some(r) = records.iter().find(|r| !(r.x > 0.0 && r.x.is_finite())) {
            return Err(Error::Integrity(format!("record ({}, {}) has weight {}", r.i, r.j, r.x)));
        }
        records.sort_unstable_by_key(|r| key(r.i, r.j));
        Ok(CooccurrenceStore {
            records,
            ws,
            vocab_hash: vocab.hash(),
            vocab_len: n,
        })
    }

    pub fn records(&self) -> &[CoocRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ws(&self) -> u32 {
        self.ws
    }

    pub fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    /// Weight of `(i, j)`, zero when the pair never co-occurred.
    pub fn get(&self, i: u32, j: u32) -> f64 {
        let k = key(i, j);
        self.records
            .binary_search_by_key(&k, |r| key(r.i, r.j))
            .map(|idx| self.records[idx].x)
            .unwrap_or(0.0)
    }

    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        if self.vocab_hash != vocab.hash() || self.vocab_len as usize != vocab.len() {
            return Err(Error::Integrity(format!(
                "co-occurrence store was built for vocabulary {:016x}, got {:016x}",
                self.vocab_hash,
                vocab.hash()
            )));
        }
        Ok(())
    }

    /// Every record once, in an order fixed by `seed`.
    pub fn iter_shuffled(&self, seed: u64) -> impl Iterator<Item = CoocRecord> + '_ {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        order.into_iter().map(move |idx| self.records[idx])
    }

    /// Writes shard files `cooc-NNNNN.bin` into `dir`, at most
    /// `records_per_shard` records each. Existing shards are replaced.
    pub fn save(&self, dir: impl AsRef<Path>, records_per_shard: usize) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for old in shard_paths(dir)? {
            fs::remove_file(&old).map_err(|e| Error::io(&old, e))?;
        }
        let per = records_per_shard.max(1);
        let mut written = Vec::new();
        let parts: Vec<&[CoocRecord]> = if self.records.is_empty() {
            vec![&[]]
        } else {
            self.records.chunks(per).collect()
        };
        for (n, part) in parts.into_iter().enumerate() {
            let path = dir.join(format!("cooc-{n:05}.bin"));
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut out = BufWriter::new(file);
            write_shard(&mut out, self.vocab_hash, self.ws, part).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }

    /// Loads every shard in `dir` and checks it against `vocab`.
    pub fn load(dir: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        let dir = dir.as_ref();
        let paths = shard_paths(dir)?;
        if paths.is_empty() {
            return Err(Error::NotFound(format!("no co-occurrence shards in {}", dir.display())));
        }
        let mut records = Vec::new();
        let mut header: Option<(u64, u32)> = None;
        for path in &paths {
            let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
            let (hash, ws, part) = read_shard(&mut BufReader::new(file), path)?;
            match header {
                None => header = Some((hash, ws)),
                Some(h) if h != (hash, ws) => {
                    return Err(Error::Integrity(format!(
                        "{} disagrees with earlier shards",
                        path.display()
                    )))
                }
                Some(_) => {}
            }
            records.extend(part);
        }
        let (hash, ws) = header.expect("at least one shard");
        let store = CooccurrenceStore::from_records(records, ws, vocab)?;
        if hash != store.vocab_hash {
            return Err(Error::Integrity(format!(
                "shards were built for vocabulary {hash:016x}, got {:016x}",
                store.vocab_hash
            )));
        }
        Ok(store)
    }
}

fn shard_paths(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("cooc-") && n.ends_with(".bin"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn write_shard<W: Write>(out: &mut W, vocab_hash: u64, ws: u32, records: &[CoocRecord]) -> std::io::Result<()> {
    out.write_all(SHARD_MAGIC)?;
    out.write_all(&vocab_hash.to_le_bytes())?;
    out.write_all(&ws.to_le_bytes())?;
    out.write_all(&(records.len() as u64).to_le_bytes())?;
    for r in records {
        out.write_all(&r.i.to_le_bytes())?;
        out.write_all(&r.j.to_le_bytes())?;
        out.write_all(&r.x.to_le_bytes())?;
    }
    out.flush()
}

pub fn read_shard<R: Read>(input: &mut R, path: &Path) -> Result<(u64, u32, Vec<CoocRecord>)> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Integrity(format!("{}: truncated shard header", path.display())))?;
    if &header[..5] != SHARD_MAGIC {
        return Err(Error::Integrity(format!("{}: bad magic", path.display())));
    }
    let hash = u64::from_le_bytes(header[5..13].try_into().unwrap());
    let ws = u32::from_le_bytes(header[13..17].try_into().unwrap());
    let count = u64::from_le_bytes(header[17..25].try_into().unwrap());
    let mut records = Vec::with_capacity(count.min(1 << 24) as usize);
    let mut buf = [0u8; RECORD_LEN];
    for n in 0..count {
        input.read_exact(&mut buf).map_err(|_| {
            Error::Integrity(format!(
                "{}: truncated after {n} of {count} records",
                path.display()
            ))
        })?;
        records.push(CoocRecord {
            i: u32::from_le_bytes(buf[0..4].try_into().unwrap()),
            j: u32::from_le_bytes(buf[4..8].try_into().unwrap()),
            x: f64::from_le_bytes(buf[8..16].try_into().unwrap()),
        });
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Integrity(format!("{}: trailing bytes after records", path.display())));
    }
    Ok((hash, ws, records))
}
