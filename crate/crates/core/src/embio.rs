//! Embedding persistence.
//!
//! * Text vectors: a `<words> <dim>` header, then one `word v1 .. vd` line
//!   per word with six significant digits. Readable by most tooling.
//! * `EMB1` binary sidecar (`<path>.emb1`): full-precision input and output
//!   matrices, subword rows and metadata. Little-endian throughout.
//! * TSV export of selected word vectors for external projection tools.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::embedding::{Algorithm, EmbeddingMeta, EmbeddingSet, Matrix};
use crate::error::{Error, Result};
use crate::eval::word_vector;
use crate::subword::SubwordConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"EMB1";

/// `%g`-style rendering with six significant digits.
pub fn format_sig6(v: f32) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = f64::from(v).abs().log10().floor() as i32;
    // Rounding may carry into the next decade (9.999995 -> 10.0000).
    let sci = format!("{:.5e}", v);
    let (_, e) = sci.split_once('e').expect("exponent present");
    let exp = e.parse::<i32>().unwrap_or(exp);
    let text = if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{:.*}", decimals, v)
    } else {
        sci
    };
    trim_zeros(&text)
}

fn trim_zeros(s: &str) -> String {
    match s.split_once('e') {
        Some((mantissa, exp)) => format!("{}e{}", trim_zeros(mantissa), exp),
        None if s.contains('.') => s.trim_end_matches('0').trim_end_matches('.').to_owned(),
        None => s.to_owned(),
    }
}

fn check_word(word: &str) -> Result<()> {
    if word.is_empty() || word.chars().any(char::is_whitespace) {
        return Err(Error::Serialization(format!(
            "word {word:?} cannot be written to the text format"
        )));
    }
    Ok(())
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".emb1");
    PathBuf::from(name)
}

/// Writes composed word vectors as text to `path`.
pub fn write_text<W: Write>(emb: &EmbeddingSet, mut out: W) -> Result<()> {
    for w in emb.words() {
        check_word(w)?;
    }
    let matrix = emb.word_matrix();
    let io = |e| Error::Serialization(format!("write failed: {e}"));
    writeln!(out, "{} {}", emb.len(), emb.dim()).map_err(io)?;
    let mut line = String::new();
    for (id, w) in emb.words().iter().enumerate() {
        line.clear();
        line.push_str(w);
        for v in matrix.row(id) {
            line.push(' ');
            line.push_str(&format_sig6(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Saves text vectors to `path` and the full model to `<path>.emb1`.
pub fn save_text(emb: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    for w in emb.words() {
        check_word(w)?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_text(emb, BufWriter::new(file)).map_err(|e| match e {
        Error::Serialization(msg) => Error::io(path, std::io::Error::other(msg)),
        other => other,
    })?;
    save_checkpoint(emb, sidecar_path(path))
}

/// Parses text vectors into a words-only embedding set.
pub fn read_text<R: BufRead>(input: R, context: &str) -> Result<EmbeddingSet> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::parse(context, 1, e.to_string()))?,
        None => return Err(Error::parse(context, 1, "empty file")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n_words, dim) = match fields.as_slice() {
        [n, d] => (
            n.parse::<usize>()
                .map_err(|_| Error::parse(context, 1, format!("bad word count '{n}'")))?,
            d.parse::<usize>()
                .map_err(|_| Error::parse(context, 1, format!("bad dimension '{d}'")))?,
        ),
        _ => return Err(Error::parse(context, 1, "expected '<words> <dim>' header")),
    };
    if dim == 0 {
        return Err(Error::parse(context, 1, "dimension must be positive"));
    }
    let mut words = Vec::with_capacity(n_words);
    let mut seen = HashSet::with_capacity(n_words);
    let mut data = Vec::with_capacity(n_words * dim);
    let mut line_no = 1;
    for line in lines {
        line_no += 1;
        let line = line.map_err(|e| Error::parse(context, line_no, e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if words.len() == n_words {
            return Err(Error::parse(
                context,
                line_no,
                format!("more rows than the {n_words} declared"),
            ));
        }
        let mut fields = line.split(' ').filter(|f| !f.is_empty());
        let word = fields.next().expect("non-empty line has a field");
        let before = data.len();
        for f in fields {
            let v: f32 = f
                .parse()
                .map_err(|_| Error::parse(context, line_no, format!("non-numeric value '{f}'")))?;
            data.push(v);
        }
        let got = data.len() - before;
        if got != dim {
            return Err(Error::parse(
                context,
                line_no,
                format!("expected {dim} values for '{word}', found {got}"),
            ));
        }
        if !seen.insert(word.to_owned()) {
            return Err(Error::parse(context, line_no, format!("duplicate word '{word}'")));
        }
        words.push(word.to_owned());
    }
    if words.len() != n_words {
        return Err(Error::parse(
            context,
            line_no + 1,
            format!("unexpected end of file: {} of {n_words} rows", words.len()),
        ));
    }
    let matrix = Matrix::from_vec(data, n_words, dim)?;
    EmbeddingSet::words_only(
        words,
        matrix,
        EmbeddingMeta {
            algorithm: Algorithm::External,
            vocab_hash: 0,
            params: BTreeMap::new(),
        },
    )
}

pub fn load_text(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_text(BufReader::new(file), &path.display().to_string())
}

/// Loads `<path>.emb1` when present (keeps subwords and metadata), the
/// text vectors otherwise.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let sidecar = sidecar_path(path);
    if sidecar.is_file() {
        load_checkpoint(&sidecar)
    } else {
        load_text(path)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

/// Layout: magic, algorithm, vocab hash, dim, word count, input rows,
/// output rows, subword flag and settings, parameter map, words, input
/// matrix, output matrix.
pub fn write_checkpoint<W: Write>(emb: &EmbeddingSet, out: &mut W) -> std::io::Result<()> {
    let mut head = Vec::new();
    head.extend_from_slice(CHECKPOINT_MAGIC);
    let meta = emb.meta();
    put_str(&mut head, meta.algorithm.name());
    put_u64(&mut head, meta.vocab_hash);
    put_u32(&mut head, emb.dim() as u32);
    put_u64(&mut head, emb.len() as u64);
    put_u64(&mut head, emb.input().rows() as u64);
    put_u64(&mut head, emb.output().map_or(0, |m| m.rows() as u64));
    match emb.subword() {
        Some(s) => {
            head.push(1);
            put_u32(&mut head, s.minn as u32);
            put_u32(&mut head, s.maxn as u32);
            put_u32(&mut head, s.n_buckets);
            put_u32(&mut head, s.bow_marker as u32);
            put_u32(&mut head, s.eow_marker as u32);
        }
        None => head.push(0),
    }
    put_u32(&mut head, meta.params.len() as u32);
    for (k, v) in &meta.params {
        put_str(&mut head, k);
        put_str(&mut head, v);
    }
    for w in emb.words() {
        put_str(&mut head, w);
    }
    out.write_all(&head)?;
    let mut buf = Vec::with_capacity(1 << 16);
    let matrices = std::iter::once(emb.input()).chain(emb.output());
    for m in matrices {
        for chunk in m.as_slice().chunks(1 << 14) {
            buf.clear();
            for v in chunk {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
    }
    out.flush()
}

pub fn save_checkpoint(emb: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(emb, &mut BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

struct Reader<'a, R> {
    inner: &'a mut R,
    context: &'a str,
}

impl<R: Read> Reader<'_, R> {
    fn bytes(&mut self, n: usize) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; n];
        self.inner
            .read_exact(&mut buf)
            .map_err(|_| Error::Integrity(format!("{}: truncated checkpoint", self.context)))?;
        Ok(buf)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.bytes(n)?)
            .map_err(|_| Error::Integrity(format!("{}: invalid UTF-8 in checkpoint", self.context)))
    }

    fn char(&mut self) -> Result<char> {
        char::from_u32(self.u32()?)
            .ok_or_else(|| Error::Integrity(format!("{}: invalid marker", self.context)))
    }

    fn matrix(&mut self, rows: usize, dim: usize) -> Result<Matrix> {
        let raw = self.bytes(rows * dim * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Matrix::from_vec(data, rows, dim)
    }
}

pub fn read_checkpoint<R: Read>(input: &mut R, context: &str) -> Result<EmbeddingSet> {
    let mut r = Reader { inner: input, context };
    if r.bytes(4)? != CHECKPOINT_MAGIC {
        return Err(Error::Integrity(format!("{context}: not an EMB1 checkpoint")));
    }
    let algorithm: Algorithm = r.string()?.parse()?;
    let vocab_hash = r.u64()?;
    let dim = r.u32()? as usize;
    let n_words = r.u64()? as usize;
    let input_rows = r.u64()? as usize;
    let output_rows = r.u64()? as usize;
    let subword = match r.u8()? {
        0 => None,
        1 => Some(SubwordConfig {
            minn: r.u32()? as usize,
            maxn: r.u32()? as usize,
            n_buckets: r.u32()?,
            bow_marker: r.char()?,
            eow_marker: r.char()?,
        }),
        other => return Err(Error::Integrity(format!("{context}: bad subword flag {other}"))),
    };
    let n_params = r.u32()?;
    let mut params = BTreeMap::new();
    for _ in 0..n_params {
        let k = r.string()?;
        let v = r.string()?;
        params.insert(k, v);
    }
    let words = (0..n_words).map(|_| r.string()).collect::<Result<Vec<_>>>()?;
    let input = r.matrix(input_rows, dim)?;
    let output = if output_rows > 0 {
        Some(r.matrix(output_rows, dim)?)
    } else {
        None
    };
    let mut rest = [0u8; 1];
    if r.inner.read(&mut rest).map_err(|e| Error::Integrity(e.to_string()))? != 0 {
        return Err(Error::Integrity(format!("{context}: trailing bytes")));
    }
    EmbeddingSet::new(
        words,
        input,
        output,
        subword,
        EmbeddingMeta {
            algorithm,
            vocab_hash,
            params,
        },
    )
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut BufReader::new(file), &path.display().to_string())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExportReport {
    pub written: Vec<String>,
    pub skipped: Vec<String>,
    pub duplicates: Vec<String>,
}

/// Writes `word<TAB>v1<TAB>..` rows for `words` after a header line.
/// Values use the shortest representation that reads back exactly.
pub fn write_tsv<W: Write>(emb: &EmbeddingSet, words: &[String], mut out: W) -> Result<ExportReport> {
    let io = |e: std::io::Error| Error::Serialization(format!("write failed: {e}"));
    let mut header = String::from("word");
    for k in 0..emb.dim() {
        header.push_str(&format!("\td{k}"));
    }
    writeln!(out, "{header}").map_err(io)?;
    let mut report = ExportReport::default();
    let mut seen = HashSet::new();
    for w in words {
        if !seen.insert(w.as_str()) {
            report.duplicates.push(w.clone());
            continue;
        }
        if w.contains('\t') || w.contains('\n') {
            report.skipped.push(w.clone());
            continue;
        }
        match word_vector(emb, w) {
            Ok(v) => {
                let mut line = w.clone();
                for x in v {
                    line.push('\t');
                    line.push_str(&x.to_string());
                }
                writeln!(out, "{line}").map_err(io)?;
                report.written.push(w.clone());
            }
            Err(Error::NotFound(_)) | Err(Error::Input(_)) => report.skipped.push(w.clone()),
            Err(e) => return Err(e),
        }
    }
    out.flush().map_err(io)?;
    Ok(report)
}

pub fn export_tsv(emb: &EmbeddingSet, words: &[String], path: impl AsRef<Path>) -> Result<ExportReport> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_tsv(emb, words, BufWriter::new(file))
}

/// Reads a file written by [`export_tsv`] back into words and a matrix.
pub fn read_tsv_matrix(path: impl AsRef<Path>) -> Result<(Vec<String>, Matrix)> {
    let path = path.as_ref();
    let context = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(&context, 1, "missing header"))?;
    let dim = header.split('\t').count().saturating_sub(1);
    let mut words = Vec::new();
    let mut data = Vec::new();
    for (n, line) in lines.enumerate() {
        let mut fields = line.split('\t');
        let word = fields.next().unwrap_or_default();
        let values = fields
            .map(|f| {
                f.parse::<f32>()
                    .map_err(|_| Error::parse(&context, n + 2, format!("non-numeric value '{f}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != dim {
            return Err(Error::parse(&context, n + 2, format!("expected {dim} values")));
        }
        words.push(word.to_owned());
        data.extend(values);
    }
    let rows = words.len();
    Ok((words, Matrix::from_vec(data, rows, dim)?))
}
