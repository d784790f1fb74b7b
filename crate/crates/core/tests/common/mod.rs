//! Reference implementations and fixtures shared by the integration tests.
//! Oracles here are written independently of the library code they check.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use embedkit::pipeline::{CleanCorpus, NoisePattern, PipelineConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Pipeline oracle: every stage as an explicit character scan.

fn is_alpha_ascii(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_digit_any(c: char) -> bool {
    matches!(c, '0'..='9' | '\u{0660}'..='\u{0669}' | '\u{06F0}'..='\u{06F9}')
}

/// Length in chars of an HTML tag or entity starting at `i`, if any.
fn html_at(s: &[char], i: usize) -> Option<usize> {
    match s[i] {
        '<' => {
            let mut k = i + 1;
            if s.get(k) == Some(&'/') {
                k += 1;
            }
            let first = *s.get(k)?;
            if !(is_alpha_ascii(first) || first == '!') {
                return None;
            }
            k += 1;
            while k < s.len() && s[k] != '<' && s[k] != '>' {
                k += 1;
            }
            (s.get(k) == Some(&'>')).then_some(k + 1 - i)
        }
        '&' => {
            let mut k = i + 1;
            let run = |k: &mut usize, pred: &dyn Fn(char) -> bool| {
                let start = *k;
                while *k < s.len() && pred(s[*k]) {
                    *k += 1;
                }
                *k > start
            };
            if run(&mut k, &is_alpha_ascii) {
                return (s.get(k) == Some(&';')).then_some(k + 1 - i);
            }
            if s.get(k) != Some(&'#') {
                return None;
            }
            k += 1;
            let save = k;
            if run(&mut k, &|c| c.is_ascii_digit()) && s.get(k) == Some(&';') {
                return Some(k + 1 - i);
            }
            k = save;
            if matches!(s.get(k), Some('x') | Some('X')) {
                k += 1;
                if run(&mut k, &|c| c.is_ascii_hexdigit()) && s.get(k) == Some(&';') {
                    return Some(k + 1 - i);
                }
            }
            None
        }
        _ => None,
    }
}

fn url_at(s: &[char], i: usize) -> Option<usize> {
    let rest_nonspace = |k: usize| {
        let mut e = k;
        while e < s.len() && !s[e].is_whitespace() {
            e += 1;
        }
        (e > k).then_some(e - i)
    };
    if is_alpha_ascii(s[i]) {
        let mut k = i + 1;
        while k < s.len() && (s[k].is_ascii_alphanumeric() || matches!(s[k], '+' | '.' | '-')) {
            k += 1;
        }
        if s[k..].starts_with(&[':', '/', '/']) {
            if let Some(n) = rest_nonspace(k + 3) {
                return Some(n);
            }
        }
    }
    if s[i..].starts_with(&['w', 'w', 'w', '.']) {
        return rest_nonspace(i + 4);
    }
    None
}

fn email_at(s: &[char], i: usize) -> Option<usize> {
    let local = |c: char| c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '%' | '+' | '-');
    let label = |c: char| c.is_ascii_alphanumeric() || c == '-';
    let mut k = i;
    while k < s.len() && local(s[k]) {
        k += 1;
    }
    if k == i || s.get(k) != Some(&'@') {
        return None;
    }
    k += 1;
    let label_end = |from: usize| {
        let mut e = from;
        while e < s.len() && label(s[e]) {
            e += 1;
        }
        e
    };
    let e = label_end(k);
    if e == k || s.get(e) != Some(&'.') {
        return None;
    }
    let mut end = label_end(e + 1);
    if end == e + 1 {
        return None;
    }
    while s.get(end) == Some(&'.') {
        let next = label_end(end + 1);
        if next == end + 1 {
            break;
        }
        end = next;
    }
    Some(end - i)
}

fn numeric_at(s: &[char], i: usize) -> Option<usize> {
    if !is_digit_any(s[i]) {
        return None;
    }
    let mut k = i;
    while k < s.len() && is_digit_any(s[k]) {
        k += 1;
    }
    while k + 1 < s.len() && matches!(s[k], '.' | ',' | ':' | '/' | '\u{066B}' | '\u{066C}') && is_digit_any(s[k + 1]) {
        k += 1;
        while k < s.len() && is_digit_any(s[k]) {
            k += 1;
        }
    }
    Some(k - i)
}

/// Leftmost non-overlapping scan; `keep` may veto a match, in which case the
/// scan resumes after it.
fn scan_replace(text: &str, at: fn(&[char], usize) -> Option<usize>, keep: fn(&[char], usize, usize) -> bool) -> String {
    let s: Vec<char> = text.chars().collect();
    let mut out = String::new();
    let mut i = 0;
    while i < s.len() {
        match at(&s, i) {
            Some(n) if keep(&s, i, i + n) => {
                out.extend(&s[i..i + n]);
                i += n;
            }
            Some(n) => {
                out.push(' ');
                i += n;
            }
            None => {
                out.push(s[i]);
                i += 1;
            }
        }
    }
    out
}

fn never_keep(_: &[char], _: usize, _: usize) -> bool {
    false
}

fn numeric_is_attached(s: &[char], start: usize, end: usize) -> bool {
    (start > 0 && s[start - 1].is_alphanumeric()) || s.get(end).is_some_and(|c| c.is_alphanumeric())
}

fn naive_is_latin(c: char) -> bool {
    c.is_alphabetic()
        && matches!(c, 'A'..='Z' | 'a'..='z' | '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}')
}

const MATH: &str = "+=<>^~|%\u{00D7}\u{00F7}\u{00B1}\u{2213}\u{2212}\u{221A}\u{221E}\u{2211}\u{220F}\u{222B}\u{2248}\u{2260}\u{2261}\u{2264}\u{2265}\u{2030}\u{00B0}\u{2202}\u{2206}\u{2207}\u{2208}\u{2209}\u{2229}\u{222A}\u{2282}\u{2283}\u{2227}\u{2228}\u{00AC}\u{066A}";

/// Reference for the whole cleaning pipeline, returning the corpus text.
pub fn naive_pipeline(raw: &str, config: &PipelineConfig) -> String {
    let mut text = raw.to_string();
    for p in &config.noise_patterns {
        text = match p {
            NoisePattern::HtmlTag => scan_replace(&text, html_at, never_keep),
            NoisePattern::Url => scan_replace(&text, url_at, never_keep),
            NoisePattern::Email => scan_replace(&text, email_at, never_keep),
            NoisePattern::Numeric => scan_replace(&text, numeric_at, numeric_is_attached),
            NoisePattern::MathSymbol => text.chars().map(|c| if MATH.contains(c) { ' ' } else { c }).collect(),
        };
    }
    let text: String = text
        .chars()
        .map(|c| if config.replacement_chars.contains(&c) { ' ' } else { c })
        .collect();
    let mut out = String::new();
    for segment in text.split(|c: char| config.boundary_chars.contains(&c)) {
        let mut line = Vec::new();
        for token in segment.split_whitespace() {
            let token: String = if config.lowercase {
                token
                    .chars()
                    .flat_map(|c| {
                        if naive_is_latin(c) {
                            c.to_lowercase().collect::<Vec<_>>()
                        } else {
                            vec![c]
                        }
                    })
                    .collect()
            } else {
                token.to_string()
            };
            if config.drop_latin_tokens && token.chars().all(naive_is_latin) {
                continue;
            }
            line.push(token);
        }
        if !line.is_empty() {
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out
}

/// Twenty small raw-text fixtures exercising markup, links, addresses,
/// numbers, mixed scripts and sentence punctuation.
pub fn pipeline_fixtures() -> Vec<String> {
    [
        "سنڌي ٻولي<br/>تمام پراڻي آهي. ڪراچي وڏو شهر آهي؟",
        "<p class=\"x\">هي&nbsp;متن</p> &#1587;&#x633; &amp; &bogus <3 دل",
        "ڏسو https://sindhi.example.org/path?q=1&r=2 ۽ www.awamiawaz.pk/news هتي",
        "رابطو: info.desk@sindh-univ.edu.pk يا a@b ۽ x@y.z.",
        "سال 2019 ۾ ١٢٣ ۽ ۱۲۳ ماڻهو، قيمت 3.50 ۽ 12:30 وڳي 1/2/2020",
        "ماڊل B2B ۽ سنڌ1 ۽ 4x4 ۽ abc123 رهندا",
        "Hello World سنڌي English ٻولي MixedLatinسنڌي Ünïcödé ẞtraße",
        "سوال؟ جواب۔ ٻيو سوال? ٽيون. . . آخري",
        "x = y + z × 2 ÷ 4 ≠ ∞ ٪ سيڪڙو 50% ± ∑",
        "\"اقتباس\" «ٻيو» ‘ٽيون’ (قوس) [چورس] {وڪر} ڊيش—لفظ – ٻيو",
        "ٽيب\tوارو\r\nلڪير\u{00A0}غير ٽٽڻ واري\u{2003}جاءِ\n\nخالي",
        "لفظ\u{200C}گڏيل ۽ ڪشيده\u{0640}ـ ۽ شد\u{0651} ۽ ايموجي 😀 سان",
        "<script>var a = 1;</script>جاوا<!-- تبصرو -->اسڪرپٽ",
        "mailto:someone@example.com ftp://files.example.net/x.zip ssh+git://h/r",
        "@نالو #هيش_ٽيگ &يا /سليش\\ *ستارو* $ڊالر …ختم",
        "۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽ ۽",
        "123 456. 789؟ ٩٨٧۔ 1,000,000 ٫٥ 3٫14",
        "ڪتاب، قلم؛ ڪاپي: استاد! شاگرد",
        "",
        ". ? ۔ ؟ <a href='http://x.y'>لنڪ</a> <//> <> a<b>c www. www.x",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

pub fn random_raw_text(rng: &mut ChaCha8Rng, len: usize) -> String {
    const PIECES: &[&str] = &[
        "سنڌ", "ٻولي", "ڪ", "ا", "ب", "abc", "Xy", "1", "٢", "۳", ".", "?", "۔", "؟", " ", " ", " ", "\n", "\t",
        "<b>", "</i>", "&amp;", "&#12;", "<", ">", "&", ";", "#", "@", "http://", "www.", "a@b.c", "/", ":",
        "-", "+", "%", "=", "،", "\"", "'", "(", ")", "\u{00A0}", "É", "ß", "😀", "_", "x", ",", "3.5", "x2",
    ];
    (0..len).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

// ---------------------------------------------------------------------------
// Co-occurrence oracle.

/// Every ordered pair of distinct in-vocabulary positions at distance
/// `d <= ws` contributes `1/d`.
pub fn naive_cooccurrence(sentences: &[Vec<String>], ids: &HashMap<String, u32>, ws: usize) -> BTreeMap<(u32, u32), f64> {
    let mut x = BTreeMap::new();
    for sentence in sentences {
        let kept: Vec<u32> = sentence.iter().filter_map(|w| ids.get(w).copied()).collect();
        for p in 0..kept.len() {
            for q in 0..kept.len() {
                let d = p.abs_diff(q);
                if d == 0 || d > ws {
                    continue;
                }
                *x.entry((kept[p], kept[q])).or_insert(0.0) += 1.0 / d as f64;
            }
        }
    }
    x
}

pub fn random_corpus(rng: &mut ChaCha8Rng, max_tokens: usize, vocab: usize) -> CleanCorpus {
    let words: Vec<String> = (0..vocab).map(|k| format!("w{k}")).collect();
    let total = rng.gen_range(1..=max_tokens);
    let mut sentences = Vec::new();
    let mut left = total;
    while left > 0 {
        let n = rng.gen_range(1..=left.min(25));
        // Skewed draws so that some words fall below small count cut-offs.
        let s: Vec<String> = (0..n)
            .map(|_| {
                let r: f64 = rng.gen();
                words[((r * r) * vocab as f64) as usize].clone()
            })
            .collect();
        sentences.push(s);
        left -= n;
    }
    CleanCorpus::from_sentences(sentences)
}

// ---------------------------------------------------------------------------
// Subword oracle.

pub fn brute_force_ngrams(word: &str, minn: usize, maxn: usize, bow: char, eow: char) -> Vec<String> {
    let marked: Vec<char> = std::iter::once(bow).chain(word.chars()).chain(std::iter::once(eow)).collect();
    let whole: String = marked.iter().collect();
    let mut out = Vec::new();
    for start in 0..marked.len() {
        for end in start + 1..=marked.len() {
            let n = end - start;
            if n < minn || n > maxn {
                continue;
            }
            let g: String = marked[start..end].iter().collect();
            if g != whole {
                out.push(g);
            }
        }
    }
    out
}

/// Closed-form n-gram count for a word of `len` characters.
pub fn ngram_count(len: usize, minn: usize, maxn: usize) -> usize {
    let marked = len + 2;
    let all: usize = (minn..=maxn).map(|n| (marked + 1).saturating_sub(n)).sum();
    all - usize::from((minn..=maxn).contains(&marked))
}

pub fn random_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    const ALPHABET: &[char] = &['ا', 'ب', 'ٻ', 'ڀ', 'ت', 'ٿ', 'ٽ', 'ڪ', 'گ', 'ڳ', 'ن', 'ڻ', 'a', 'z', 'é', '😀', '\u{200C}', '1'];
    (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect()
}

// ---------------------------------------------------------------------------
// Two-topic training corpus.

pub const TOPIC_ALPHABETS: [&[char]; 2] = [
    &['ا', 'ب', 'ت', 'ث', 'ج', 'ح', 'خ', 'د', 'ذ', 'ر'],
    &['س', 'ش', 'ص', 'ض', 'ط', 'ظ', 'ع', 'غ', 'ف', 'ق'],
];

pub struct TwoTopics {
    pub topics: [Vec<String>; 2],
    pub corpus: CleanCorpus,
}

/// Two disjoint 50-word vocabularies over disjoint alphabets. Sentences
/// alternate topics; each token comes from the sentence's topic, or with
/// probability `noise` from the other one.
pub fn two_topic_corpus(seed: u64, sentences: usize, sentence_len: usize, noise: f64) -> TwoTopics {
    let mut rng = rng(seed);
    let topics: [Vec<String>; 2] = std::array::from_fn(|t| {
        let mut words = std::collections::BTreeSet::new();
        while words.len() < 50 {
            let len = rng.gen_range(3..=6);
            words.insert((0..len).map(|_| *TOPIC_ALPHABETS[t].choose(&mut rng).unwrap()).collect::<String>());
        }
        let mut words: Vec<String> = words.into_iter().collect();
        words.shuffle(&mut rng);
        words
    });
    let sentences: Vec<Vec<String>> = (0..sentences)
        .map(|k| {
            (0..sentence_len)
                .map(|_| {
                    let t = if rng.gen_bool(noise) { 1 - k % 2 } else { k % 2 };
                    topics[t].choose(&mut rng).unwrap().clone()
                })
                .collect()
        })
        .collect();
    TwoTopics {
        topics,
        corpus: CleanCorpus::from_sentences(sentences),
    }
}

// ---------------------------------------------------------------------------
// Numerics.

pub fn central_difference(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative error with a floor on the magnitude so near-zero gradients are
/// compared absolutely.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Zipf counts `scale / rank`, at least 1.
pub fn zipf_counts(n: usize, scale: f64) -> Vec<u64> {
    (1..=n).map(|r| ((scale / r as f64).round() as u64).max(1)).collect()
}

// ---------------------------------------------------------------------------
// Published word-length table: (length, frequency, percent as printed).

pub const PUBLISHED_TOTAL: u64 = 61_240_454;
pub const PUBLISHED_LENGTHS: [(usize, u64, &str); 14] = [
    (1, 936_301, "1.52889"),
    (2, 19_187_314, "31.3311"),
    (3, 11_924_760, "19.472"),
    (4, 14_334_444, "23.4068"),
    (5, 9_459_657, "15.4467"),
    (6, 3_347_907, "5.4668"),
    (7, 1_481_810, "2.4196"),
    (8, 373_417, "0.6097"),
    (9, 163_301, "0.2666"),
    (10, 21_287, "0.0347"),
    (11, 5_892, "0.0096"),
    (12, 3_033, "0.0049"),
    (13, 1_036, "0.0016"),
    (14, 295, "0.0004"),
];
