//! Intrinsic evaluation: cosine similarity, nearest neighbours, word-pair
//! reports and Spearman correlation against human similarity judgements.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};

pub fn cosine_similarity(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Input(format!(
            "vectors differ in dimension: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (mut dot, mut nu, mut nv) = (0.0f64, 0.0f64, 0.0f64);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (f64::from(*a), f64::from(*b));
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Undefined("cosine similarity of a zero vector".into()));
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Vector for `word`: the training-time composition for known words, the
/// mean of its n-gram rows for unknown words when subwords are available.
pub fn word_vector(emb: &EmbeddingSet, word: &str) -> Result<Vec<f32>> {
    if word.is_empty() {
        return Err(Error::Input("empty query word".into()));
    }
    let rows = emb.constituent_rows(word)?;
    Ok(emb.mean_of_rows(&rows))
}

/// Top `k` vocabulary words by cosine to `query`, query excluded.
pub fn nearest_neighbors(emb: &EmbeddingSet, query: &str, k: usize) -> Result<Vec<(String, f64)>> {
    if k < 1 {
        return Err(Error::Input("k must be at least 1".into()));
    }
    let q = word_vector(emb, query)?;
    let matrix = emb.word_matrix();
    nearest_in_matrix(emb, &matrix, &q, emb.id(query), k)
}

fn nearest_in_matrix(
    emb: &EmbeddingSet,
    matrix: &crate::embedding::Matrix,
    q: &[f32],
    exclude: Option<u32>,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    let mut scored: Vec<(u32, f64)> = Vec::with_capacity(emb.len());
    for id in 0..emb.len() as u32 {
        if Some(id) == exclude {
            continue;
        }
        match cosine_similarity(q, matrix.row(id as usize)) {
            Ok(c) => scored.push((id, c)),
            Err(Error::Undefined(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(id, c)| (emb.word(id).to_owned(), c))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairRow {
    pub a: String,
    pub b: String,
    pub cosine: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairReport {
    pub rows: Vec<PairRow>,
    pub average: f64,
    /// Pairs skipped because a member has no vector.
    pub oov_pairs: Vec<(String, String)>,
}

pub fn pair_similarity_report(emb: &EmbeddingSet, pairs: &[(String, String)]) -> Result<PairReport> {
    if pairs.is_empty() {
        return Err(Error::Input("no word pairs given".into()));
    }
    let mut rows = Vec::new();
    let mut oov_pairs = Vec::new();
    for (a, b) in pairs {
        match (word_vector(emb, a), word_vector(emb, b)) {
            (Ok(va), Ok(vb)) => rows.push(PairRow {
                a: a.clone(),
                b: b.clone(),
                cosine: cosine_similarity(&va, &vb)?,
            }),
            (Err(Error::NotFound(_)), _) | (_, Err(Error::NotFound(_))) => oov_pairs.push((a.clone(), b.clone())),
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    if rows.is_empty() {
        return Err(Error::NotFound("every pair has an out-of-vocabulary word".into()));
    }
    let average = rows.iter().map(|r| r.cosine).sum::<f64>() / rows.len() as f64;
    Ok(PairReport {
        rows,
        average,
        oov_pairs,
    })
}

/// Ranks starting at 1; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of average ranks.
pub fn spearman_rho(gold: &[f64], predicted: &[f64]) -> Result<f64> {
    if gold.len() != predicted.len() {
        return Err(Error::Input(format!(
            "series differ in length: {} vs {}",
            gold.len(),
            predicted.len()
        )));
    }
    if gold.len() < 2 {
        return Err(Error::Input("need at least two observations".into()));
    }
    if gold.iter().chain(predicted).any(|v| !v.is_finite()) {
        return Err(Error::Input("non-finite score".into()));
    }
    pearson(&average_ranks(gold), &average_ranks(predicted))
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordSimDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl WordSimDataset {
    /// Parses `word_a<TAB>word_b<TAB>score` lines. Blank lines and `#`
    /// comments are skipped; a first line whose score is not numeric is
    /// treated as a header.
    pub fn parse(text: &str, name: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = HashSet::new();
        let mut first = true;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let header_allowed = std::mem::replace(&mut first, false);
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(name, n + 1, "expected word_a<TAB>word_b<TAB>score"));
            }
            let score: f64 = match fields[2].trim().parse() {
                Ok(s) => s,
                Err(_) if header_allowed => continue,
                Err(_) => return Err(Error::parse(name, n + 1, format!("bad score '{}'", fields[2]))),
            };
            if !score.is_finite() {
                return Err(Error::parse(name, n + 1, "score is not finite"));
            }
            let (a, b) = (fields[0].trim().to_owned(), fields[1].trim().to_owned());
            if a.is_empty() || b.is_empty() {
                return Err(Error::parse(name, n + 1, "empty word"));
            }
            let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            if !seen.insert(key) {
                return Err(Error::parse(name, n + 1, format!("duplicate pair {a} / {b}")));
            }
            pairs.push((a, b, score));
        }
        Ok(WordSimDataset {
            name: name.to_owned(),
            pairs,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordSimResult {
    pub rho: f64,
    pub rows: Vec<(String, String, f64, f64)>,
    pub oov_pairs: Vec<(String, String)>,
}

/// Spearman correlation between gold scores and model cosines over the
/// pairs whose words both have vectors.
pub fn evaluate_wordsim(emb: &EmbeddingSet, data: &WordSimDataset) -> Result<WordSimResult> {
    let pairs: Vec<(String, String)> = data.pairs.iter().map(|(a, b, _)| (a.clone(), b.clone())).collect();
    let report = pair_similarity_report(emb, &pairs)?;
    let gold: BTreeMap<(&str, &str), f64> = data
        .pairs
        .iter()
        .map(|(a, b, s)| ((a.as_str(), b.as_str()), *s))
        .collect();
    let rows: Vec<(String, String, f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.a.clone(), r.b.clone(), gold[&(r.a.as_str(), r.b.as_str())], r.cosine))
        .collect();
    let g: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let p: Vec<f64> = rows.iter().map(|r| r.3).collect();
    Ok(WordSimResult {
        rho: spearman_rho(&g, &p)?,
        rows,
        oov_pairs: report.oov_pairs,
    })
}

/// Reads `word_a<TAB>word_b` pairs; extra columns are ignored.
pub fn parse_pairs(text: &str, name: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next()) {
            (Some(a), Some(b)) if !a.trim().is_empty() && !b.trim().is_empty() => {
                pairs.push((a.trim().to_owned(), b.trim().to_owned()))
            }
            _ => return Err(Error::parse(name, n + 1, "expected word_a<TAB>word_b")),
        }
    }
    Ok(pairs)
}

/// Full report over one embedding set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EvalReport {
    pub neighbors: BTreeMap<String, Vec<(String, f64)>>,
    pub pair_rows: Vec<PairRow>,
    pub pair_average: Option<f64>,
    pub spearman_rho: Option<f64>,
    pub oov_words: Vec<String>,
}

impl EvalReport {
    pub fn add_neighbors(&mut self, emb: &EmbeddingSet, queries: &[String], k: usize) -> Result<()> {
        for q in queries {
            match nearest_neighbors(emb, q, k) {
                Ok(list) => {
                    self.neighbors.insert(q.clone(), list);
                }
                Err(Error::NotFound(_)) => self.note_oov(q),
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    pub fn add_pairs(&mut self, emb: &EmbeddingSet, pairs: &[(String, String)]) -> Result<()> {
        let report = pair_similarity_report(emb, pairs)?;
        for (a, b) in &report.oov_pairs {
            for w in [a, b] {
                if word_vector(emb, w).is_err() {
                    self.note_oov(w);
                }
            }
        }
        self.pair_rows = report.rows;
        self.pair_average = Some(report.average);
        Ok(())
    }

    pub fn add_wordsim(&mut self, emb: &EmbeddingSet, data: &WordSimDataset) -> Result<()> {
        let result = evaluate_wordsim(emb, data)?;
        for (a, b) in &result.oov_pairs {
            for w in [a, b] {
                if word_vector(emb, w).is_err() {
                    self.note_oov(w);
                }
            }
        }
        self.spearman_rho = Some(result.rho);
        Ok(())
    }

    fn note_oov(&mut self, word: &str) {
        if !self.oov_words.iter().any(|w| w == word) {
            self.oov_words.push(word.to_owned());
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (q, list) in &self.neighbors {
            for (rank, (w, c)) in list.iter().enumerate() {
                out.push_str(&format!("neighbor\t{q}\t{}\t{w}\t{c:.6}\n", rank + 1));
            }
        }
        for r in &self.pair_rows {
            out.push_str(&format!("pair\t{}\t{}\t{:.6}\n", r.a, r.b, r.cosine));
        }
        if let Some(avg) = self.pair_average {
            out.push_str(&format!("pair_average\t{avg:.6}\n"));
        }
        if let Some(rho) = self.spearman_rho {
            out.push_str(&format!("spearman\t{rho:.6}\n"));
        }
        for w in &self.oov_words {
            out.push_str(&format!("oov\t{w}\n"));
        }
        out
    }
}
