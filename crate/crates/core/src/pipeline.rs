//! Raw text to clean, sentence-split token streams.
//!
//! Stages run in a fixed order: noise stripping, symbol replacement,
//! tokenization at whitespace and sentence boundaries, then normalization.
//! Every stage replaces what it removes with a space so that removal never
//! glues two neighbouring words together.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::OnceLock;

use rayon::prelude::*;
use regex::Regex;

use crate::config::{format_char_list, parse_char_list, Settings};
use crate::error::{Error, Result};

/// Sentence terminators: ASCII full stop and question mark plus their
/// Arabic-script forms.
pub const DEFAULT_BOUNDARY_CHARS: [char; 4] = ['.', '?', '\u{06D4}', '\u{061F}'];

pub const DEFAULT_REPLACEMENT_CHARS: [char; 34] = [
    ',', '"', '\'', '!', ':', ';', '\u{060C}', '\u{061B}', '\u{201C}', '\u{201D}', '\u{2018}',
    '\u{2019}', '\u{00AB}', '\u{00BB}', '(', ')', '[', ']', '{', '}', '-', '\u{2013}', '\u{2014}',
    '_', '/', '\\', '*', '#', '@', '&', '$', '\u{2026}', '`', '\u{00B7}',
];

/// Characters removed by the `math_symbol` noise class.
pub const MATH_SYMBOLS: [char; 38] = [
    '+', '=', '<', '>', '^', '~', '|', '%', '\u{00D7}', '\u{00F7}', '\u{00B1}', '\u{2213}',
    '\u{2212}', '\u{221A}', '\u{221E}', '\u{2211}', '\u{220F}', '\u{222B}', '\u{2248}', '\u{2260}',
    '\u{2261}', '\u{2264}', '\u{2265}', '\u{2030}', '\u{00B0}', '\u{2202}', '\u{2206}', '\u{2207}',
    '\u{2208}', '\u{2209}', '\u{2229}', '\u{222A}', '\u{2282}', '\u{2283}', '\u{2227}', '\u{2228}',
    '\u{00AC}', '\u{066A}',
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoisePattern {
    HtmlTag,
    Url,
    Email,
    Numeric,
    MathSymbol,
}

impl NoisePattern {
    pub const ALL: [NoisePattern; 5] = [
        NoisePattern::HtmlTag,
        NoisePattern::Url,
        NoisePattern::Email,
        NoisePattern::Numeric,
        NoisePattern::MathSymbol,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NoisePattern::HtmlTag => "html_tag",
            NoisePattern::Url => "url",
            NoisePattern::Email => "email",
            NoisePattern::Numeric => "numeric",
            NoisePattern::MathSymbol => "math_symbol",
        }
    }
}

impl fmt::Display for NoisePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoisePattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoisePattern::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown noise pattern '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PipelineConfig {
    pub replacement_chars: BTreeSet<char>,
    pub boundary_chars: BTreeSet<char>,
    pub noise_patterns: Vec<NoisePattern>,
    pub lowercase: bool,
    pub drop_latin_tokens: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            replacement_chars: DEFAULT_REPLACEMENT_CHARS.into_iter().collect(),
            boundary_chars: DEFAULT_BOUNDARY_CHARS.into_iter().collect(),
            noise_patterns: NoisePattern::ALL.to_vec(),
            lowercase: true,
            drop_latin_tokens: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.replacement_chars.intersection(&self.boundary_chars).next() {
            return Err(Error::Config(format!(
                "U+{:04X} is both a replacement and a boundary character",
                *c as u32
            )));
        }
        if let Some(c) = self.boundary_chars.iter().find(|c| c.is_whitespace()) {
            return Err(Error::Config(format!(
                "boundary character U+{:04X} is whitespace",
                *c as u32
            )));
        }
        Ok(())
    }

    /// Overrides defaults with the pipeline keys present in `settings`:
    /// `replacement-chars`, `boundary-chars`, `noise-patterns`, `lowercase`,
    /// `drop-latin-tokens`. Other keys are ignored.
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        let mut config = PipelineConfig::default();
        if let Some(v) = settings.get("replacement-chars") {
            config.replacement_chars = parse_char_list(v)?.into_iter().collect();
        }
        if let Some(v) = settings.get("boundary-chars") {
            config.boundary_chars = parse_char_list(v)?.into_iter().collect();
        }
        if let Some(v) = settings.get("noise-patterns") {
            config.noise_patterns = v
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_>>()?;
        }
        if let Some(v) = settings.get_bool("lowercase")? {
            config.lowercase = v;
        }
        if let Some(v) = settings.get_bool("drop-latin-tokens")? {
            config.drop_latin_tokens = v;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_settings_text(&self) -> String {
        format!(
            "replacement_chars = {}\nboundary_chars = {}\nnoise_patterns = {}\nlowercase = {}\ndrop_latin_tokens = {}\n",
            format_char_list(&self.replacement_chars),
            format_char_list(&self.boundary_chars),
            self.noise_patterns
                .iter()
                .map(|p| p.name())
                .collect::<Vec<_>>()
                .join(","),
            self.lowercase,
            self.drop_latin_tokens
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceEntry {
    pub path: PathBuf,
    pub bytes: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CleanCorpus {
    pub sentences: Vec<Vec<String>>,
    pub token_count: usize,
    pub source_manifest: Vec<SourceEntry>,
}

impl CleanCorpus {
    pub fn from_sentences(sentences: Vec<Vec<String>>) -> Self {
        let sentences: Vec<Vec<String>> = sentences.into_iter().filter(|s| !s.is_empty()).collect();
        let token_count = sentences.iter().map(Vec::len).sum();
        CleanCorpus {
            sentences,
            token_count,
            source_manifest: Vec::new(),
        }
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    /// One sentence per line, tokens separated by a single space, LF endings.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for sentence in &self.sentences {
            let mut first = true;
            for token in sentence {
                if !first {
                    out.write_all(b" ")?;
                }
                out.write_all(token.as_bytes())?;
                first = false;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("tokens are valid UTF-8")
    }

    /// Writes the corpus to `path` and its manifest to `<path>.manifest`.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))?;
        let manifest_path = manifest_path(path);
        let mut manifest = String::new();
        for entry in &self.source_manifest {
            manifest.push_str(&format!("{}\t{}\n", entry.path.display(), entry.bytes));
        }
        fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))
    }

    /// Reads a corpus written by [`CleanCorpus::save`]. Lines are split on
    /// single spaces; blank lines are skipped.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let bytes = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut sentences = Vec::new();
        let mut offset = 0usize;
        let mut reader = BufReader::new(file);
        let mut line = Vec::new();
        loop {
            line.clear();
            let n = reader
                .read_until(b'\n', &mut line)
                .map_err(|e| Error::io(path, e))?;
            if n == 0 {
                break;
            }
            let text = std::str::from_utf8(&line).map_err(|e| Error::Decode {
                path: path.to_owned(),
                offset: offset + e.valid_up_to(),
            })?;
            offset += n;
            let sentence: Vec<String> = text
                .split([' ', '\n', '\r'])
                .filter(|t| !t.is_empty())
                .map(str::to_owned)
                .collect();
            if !sentence.is_empty() {
                sentences.push(sentence);
            }
        }
        let mut corpus = CleanCorpus::from_sentences(sentences);
        corpus.source_manifest.push(SourceEntry {
            path: path.to_owned(),
            bytes,
        });
        Ok(corpus)
    }
}

pub fn manifest_path(corpus_path: &Path) -> PathBuf {
    let mut name = corpus_path.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

fn html_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"</?[A-Za-z!][^<>]*>|&(?:[A-Za-z]+|#[0-9]+|#[xX][0-9A-Fa-f]+);").unwrap()
    })
}

fn url_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:[A-Za-z][A-Za-z0-9+.\-]*://|www\.)\S+").unwrap())
}

fn email_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+\.[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*").unwrap()
    })
}

fn numeric_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[0-9\x{0660}-\x{0669}\x{06F0}-\x{06F9}]+(?:[.,:/\x{066B}\x{066C}][0-9\x{0660}-\x{0669}\x{06F0}-\x{06F9}]+)*")
            .unwrap()
    })
}

/// ASCII, Arabic-Indic and extended Arabic-Indic digits.
pub fn is_numeric_digit(c: char) -> bool {
    c.is_ascii_digit() || ('\u{0660}'..='\u{0669}').contains(&c) || ('\u{06F0}'..='\u{06F9}').contains(&c)
}

pub fn is_math_symbol(c: char) -> bool {
    MATH_SYMBOLS.contains(&c)
}

fn replace_matches(text: &str, re: &Regex) -> String {
    re.replace_all(text, " ").into_owned()
}

/// Removes digit groups that stand alone. A group touching a letter or
/// another alphanumeric character is part of a mixed token and stays.
fn strip_numeric(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for m in numeric_regex().find_iter(text) {
        let before = text[..m.start()].chars().next_back();
        let after = text[m.end()..].chars().next();
        let attached = before.is_some_and(char::is_alphanumeric) || after.is_some_and(char::is_alphanumeric);
        if !attached {
            out.push_str(&text[last..m.start()]);
            out.push(' ');
            last = m.end();
        }
    }
    out.push_str(&text[last..]);
    out
}

pub fn strip_noise(raw: &str, config: &PipelineConfig) -> String {
    let mut text = raw.to_owned();
    for pattern in &config.noise_patterns {
        text = match pattern {
            NoisePattern::HtmlTag => replace_matches(&text, html_regex()),
            NoisePattern::Url => replace_matches(&text, url_regex()),
            NoisePattern::Email => replace_matches(&text, email_regex()),
            NoisePattern::Numeric => strip_numeric(&text),
            NoisePattern::MathSymbol => text
                .chars()
                .map(|c| if is_math_symbol(c) { ' ' } else { c })
                .collect(),
        };
    }
    text
}

/// Decodes raw bytes, reporting the offset of the first invalid byte.
pub fn decode_utf8(raw: &[u8]) -> std::result::Result<&str, usize> {
    std::str::from_utf8(raw).map_err(|e| e.valid_up_to())
}

pub fn replace_symbols(text: &str, config: &PipelineConfig) -> String {
    text.chars()
        .map(|c| {
            if config.replacement_chars.contains(&c) {
                ' '
            } else {
                c
            }
        })
        .collect()
}

pub fn tokenize(text: &str, config: &PipelineConfig) -> Vec<Vec<String>> {
    let mut sentences = Vec::new();
    let mut sentence = Vec::new();
    let mut token = String::new();
    for c in text.chars() {
        let boundary = config.boundary_chars.contains(&c);
        if boundary || c.is_whitespace() {
            if !token.is_empty() {
                sentence.push(std::mem::take(&mut token));
            }
            if boundary && !sentence.is_empty() {
                sentences.push(std::mem::take(&mut sentence));
            }
        } else {
            token.push(c);
        }
    }
    if !token.is_empty() {
        sentence.push(token);
    }
    if !sentence.is_empty() {
        sentences.push(sentence);
    }
    sentences
}

/// Latin script letters: Basic Latin, Latin-1, Extended-A/B and Extended
/// Additional.
pub fn is_latin_letter(c: char) -> bool {
    c.is_alphabetic()
        && (c.is_ascii_alphabetic()
            || ('\u{00C0}'..='\u{024F}').contains(&c)
            || ('\u{1E00}'..='\u{1EFF}').contains(&c))
}

fn normalize_token(token: String, config: &PipelineConfig) -> Option<String> {
    let token = if config.lowercase && token.chars().any(is_latin_letter) {
        let mut lowered = String::with_capacity(token.len());
        for c in token.chars() {
            if is_latin_letter(c) {
                lowered.extend(c.to_lowercase());
            } else {
                lowered.push(c);
            }
        }
        lowered
    } else {
        token
    };
    if config.drop_latin_tokens && token.chars().all(is_latin_letter) {
        None
    } else {
        Some(token)
    }
}

/// Runs every stage over one in-memory text.
pub fn process_text(raw: &str, config: &PipelineConfig) -> Vec<Vec<String>> {
    let text = strip_noise(raw, config);
    let text = replace_symbols(&text, config);
    tokenize(&text, config)
        .into_iter()
        .map(|sentence| {
            sentence
                .into_iter()
                .filter_map(|t| normalize_token(t, config))
                .collect::<Vec<_>>()
        })
        .filter(|s| !s.is_empty())
        .collect()
}

fn process_file(path: &Path, config: &PipelineConfig) -> Result<(Vec<Vec<String>>, SourceEntry)> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = decode_utf8(&raw).map_err(|offset| Error::Decode {
        path: path.to_owned(),
        offset,
    })?;
    let sentences = process_text(text, config);
    Ok((
        sentences,
        SourceEntry {
            path: path.to_owned(),
            bytes: raw.len() as u64,
        },
    ))
}

/// Processes `paths` in order. With `threads > 1` files are processed in
/// parallel; output order always follows `paths`.
pub fn run_pipeline(paths: &[PathBuf], config: &PipelineConfig, threads: usize) -> Result<CleanCorpus> {
    config.validate()?;
    let results: Vec<Result<_>> = if threads > 1 && paths.len() > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| paths.par_iter().map(|p| process_file(p, config)).collect())
    } else {
        paths.iter().map(|p| process_file(p, config)).collect()
    };
    let mut corpus = CleanCorpus::default();
    for result in results {
        let (sentences, entry) = result?;
        corpus.token_count += sentences.iter().map(Vec::len).sum::<usize>();
        corpus.sentences.extend(sentences);
        corpus.source_manifest.push(entry);
    }
    Ok(corpus)
}

/// Expands inputs into a file list: files are kept as given, directories
/// contribute their regular files recursively in sorted path order.
pub fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
        let mut entries = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(dir, e))?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(&path, out)?;
            } else if path.is_file() {
                out.push(path);
            }
        }
        Ok(())
    }

    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            walk(input, &mut files)?;
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}
