mod common;

use std::collections::{BTreeMap, HashMap};

use common::{brute_force_ngrams, naive_cooccurrence, ngram_count, random_corpus, random_word, rng, PUBLISHED_LENGTHS, PUBLISHED_TOTAL};
use embedkit::cooccur::{accumulate_cooccurrence, accumulate_cooccurrence_with_threads, CooccurrenceStore};
use embedkit::embedding::EmbeddingMeta;
use embedkit::embio::{format_sig6, load_embeddings, load_text, read_tsv_matrix, save_checkpoint, save_text, export_tsv, load_checkpoint};
use embedkit::eval::spearman_rho;
use embedkit::huffman::HuffmanTree;
use embedkit::subword::SubwordConfig;
use embedkit::vocab::{build_vocab, percent, LetterNgramStats, Vocabulary};
use embedkit::{Algorithm, EmbeddingSet, Matrix};
use proptest::prelude::*;
use rand::Rng;

fn vocab_of(corpus: &embedkit::pipeline::CleanCorpus, min_count: u64) -> Vocabulary {
    build_vocab(corpus, min_count).unwrap()
}

fn meta() -> EmbeddingMeta {
    EmbeddingMeta {
        algorithm: Algorithm::External,
        vocab_hash: 0,
        params: BTreeMap::new(),
    }
}

/// Optimal prefix-code cost by repeated merging of a sorted list.
fn optimal_code_cost(counts: &[u64]) -> u64 {
    let mut w: Vec<u64> = counts.to_vec();
    let mut cost = 0;
    while w.len() > 1 {
        w.sort_unstable_by(|a, b| b.cmp(a));
        let a = w.pop().unwrap();
        let b = w.pop().unwrap();
        cost += a + b;
        w.push(a + b);
    }
    cost
}

#[test]
fn word_length_percentages_truncate_to_published_digits() {
    let stats = LetterNgramStats::from_frequencies(PUBLISHED_LENGTHS.iter().map(|&(l, f, _)| (l, f)));
    assert_eq!(stats.total, PUBLISHED_TOTAL);
    for (row, &(length, frequency, printed)) in stats.rows.iter().zip(PUBLISHED_LENGTHS.iter()) {
        assert_eq!((row.length, row.frequency), (length, frequency));
        let decimals = printed.split_once('.').map_or(0, |(_, d)| d.len()) as i32;
        let scale = 10f64.powi(decimals);
        let truncated = (row.percent * scale).floor() / scale;
        let printed: f64 = printed.parse().unwrap();
        assert!((truncated - printed).abs() < 0.5 / scale, "len {length}: {} vs {printed}", row.percent);
    }
    let sum: f64 = stats.rows.iter().map(|r| r.percent).sum();
    assert!((sum - 100.0).abs() < 1e-9);
}

#[test]
fn huffman_codes_are_optimal_and_prefix_free() {
    let mut rng = rng(41);
    for _ in 0..200 {
        let n = rng.gen_range(2..60);
        let counts: Vec<u64> = (0..n).map(|_| rng.gen_range(1..1000)).collect();
        let tree = HuffmanTree::from_counts(&counts).unwrap();
        assert_eq!(tree.inner_nodes(), n - 1);
        let cost: u64 = (0..n).map(|w| counts[w] * tree.code(w as u32).len() as u64).sum();
        assert_eq!(cost, optimal_code_cost(&counts));
        let kraft: f64 = (0..n).map(|w| 0.5f64.powi(tree.code(w as u32).len() as i32)).sum();
        assert!((kraft - 1.0).abs() < 1e-12);
        let codes: Vec<&[u8]> = (0..n).map(|w| tree.code(w as u32)).collect();
        for (a, ca) in codes.iter().enumerate() {
            assert_eq!(ca.len(), tree.path(a as u32).len());
            assert!(tree.path(a as u32).iter().all(|&p| (p as usize) < n - 1));
            for (b, cb) in codes.iter().enumerate() {
                assert!(a == b || !cb.starts_with(ca), "code of {a} prefixes code of {b}");
            }
        }
    }
}

#[test]
fn cooccurrence_threads_agree_and_shards_roundtrip() {
    let mut rng = rng(42);
    for k in 0..10 {
        let corpus = random_corpus(&mut rng, 400, 30);
        let vocab = vocab_of(&corpus, 2);
        if vocab.is_empty() {
            continue;
        }
        let one = accumulate_cooccurrence(&corpus, &vocab, 5).unwrap();
        let many = accumulate_cooccurrence_with_threads(&corpus, &vocab, 5, 4).unwrap();
        for (a, b) in one.records().iter().zip(many.records()) {
            assert_eq!((a.i, a.j), (b.i, b.j));
            assert!((a.x - b.x).abs() < 1e-9);
        }
        let dir = tempfile::tempdir().unwrap();
        one.save(dir.path(), 7 + k).unwrap();
        let back = CooccurrenceStore::load(dir.path(), &vocab).unwrap();
        assert_eq!(back.records(), one.records());
        assert_eq!(back.ws(), 5);
    }
}

#[test]
fn cooccurrence_rejects_other_vocabulary() {
    let mut rng = rng(43);
    let corpus = random_corpus(&mut rng, 300, 20);
    let vocab = vocab_of(&corpus, 1);
    let store = accumulate_cooccurrence(&corpus, &vocab, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    store.save(dir.path(), 100).unwrap();
    let other = vocab_of(&corpus, 3);
    assert!(CooccurrenceStore::load(dir.path(), &other).is_err());
}

#[test]
fn checkpoint_and_text_roundtrip_with_subwords() {
    let sub = SubwordConfig {
        n_buckets: 16,
        ..SubwordConfig::default()
    };
    let words: Vec<String> = ["سنڌ", "ٻولي", "ڪتاب"].iter().map(|s| s.to_string()).collect();
    let mut rng = rng(44);
    let input: Vec<f32> = (0..(3 + 16) * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let output: Vec<f32> = (0..3 * 4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let emb = EmbeddingSet::new(
        words,
        Matrix::from_vec(input, 19, 4).unwrap(),
        Some(Matrix::from_vec(output, 3, 4).unwrap()),
        Some(sub),
        meta(),
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("m.emb1");
    save_checkpoint(&emb, &ckpt).unwrap();
    assert_eq!(load_checkpoint(&ckpt).unwrap(), emb);

    let text = dir.path().join("m.vec");
    save_text(&emb, &text).unwrap();
    assert_eq!(load_embeddings(&text).unwrap(), emb);
    let plain = load_text(&text).unwrap();
    assert_eq!(plain.words(), emb.words());
    for id in 0..3u32 {
        let want = emb.vector_by_id(id);
        let got = plain.vector_by_id(id);
        for (a, b) in want.iter().zip(&got) {
            assert!((a - b).abs() <= 1e-5 * a.abs().max(1e-3));
        }
    }
}

#[test]
fn tsv_export_roundtrips_exactly() {
    let mut rng = rng(45);
    let words: Vec<String> = (0..20).map(|k| format!("w{k}")).collect();
    let data: Vec<f32> = (0..20 * 3).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let emb = EmbeddingSet::words_only(words.clone(), Matrix::from_vec(data, 20, 3).unwrap(), meta()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("v.tsv");
    let mut request = vec!["w3".to_string(), "missing".to_string(), "w3".to_string(), "w0".to_string()];
    request.extend(words.iter().skip(10).cloned());
    let report = export_tsv(&emb, &request, &path).unwrap();
    assert_eq!(report.skipped, ["missing"]);
    assert_eq!(report.duplicates, ["w3"]);
    let (read_words, matrix) = read_tsv_matrix(&path).unwrap();
    assert_eq!(read_words, report.written);
    for (r, w) in read_words.iter().enumerate() {
        assert_eq!(matrix.row(r), emb.vector_by_id(emb.id(w).unwrap()).as_slice());
    }
}

proptest! {
    #[test]
    fn vocabulary_is_sorted_and_monotone_in_min_count(seed in any::<u64>(), lo in 1u64..4, extra in 0u64..4) {
        let corpus = random_corpus(&mut rng(seed), 300, 25);
        let small = vocab_of(&corpus, lo);
        let large = vocab_of(&corpus, lo + extra);
        prop_assert!(large.len() <= small.len());
        for w in large.words() {
            prop_assert!(small.id(w).is_some());
        }
        let entries = small.entries();
        for pair in entries.windows(2) {
            prop_assert!(pair[0].count > pair[1].count || (pair[0].count == pair[1].count && pair[0].word < pair[1].word));
        }
        let mut naive: HashMap<&str, u64> = HashMap::new();
        for t in corpus.tokens() {
            *naive.entry(t).or_default() += 1;
        }
        prop_assert_eq!(small.total_tokens(), naive.values().sum::<u64>());
        for e in entries {
            prop_assert_eq!(naive[e.word.as_str()], e.count);
            prop_assert!(e.count >= lo);
        }
        prop_assert_eq!(small.len(), naive.values().filter(|&&c| c >= lo).count());
    }

    #[test]
    fn cooccurrence_is_symmetric_and_matches_oracle(seed in any::<u64>(), ws in 1usize..9) {
        let corpus = random_corpus(&mut rng(seed), 200, 15);
        let vocab = vocab_of(&corpus, 2);
        prop_assume!(!vocab.is_empty());
        let store = accumulate_cooccurrence(&corpus, &vocab, ws).unwrap();
        let ids: HashMap<String, u32> = vocab.words().enumerate().map(|(i, w)| (w.to_string(), i as u32)).collect();
        let sentences: Vec<Vec<String>> = corpus.to_text().lines().map(|l| l.split(' ').map(str::to_string).collect()).collect();
        let oracle = naive_cooccurrence(&sentences, &ids, ws);
        prop_assert_eq!(store.len(), oracle.len());
        for r in store.records() {
            prop_assert!((store.get(r.j, r.i) - r.x).abs() < 1e-9);
            prop_assert!((oracle[&(r.i, r.j)] - r.x).abs() < 1e-9);
        }
    }

    #[test]
    fn subword_ngrams_match_enumeration(seed in any::<u64>(), len in 1usize..15, minn in 1usize..5, span in 0usize..5) {
        let word = random_word(&mut rng(seed), len);
        let maxn = minn + span;
        let config = SubwordConfig { minn, maxn, n_buckets: 1000, ..SubwordConfig::default() };
        let mut got = config.char_ngrams(&word).unwrap();
        let mut want = brute_force_ngrams(&word, minn, maxn, '<', '>');
        prop_assert_eq!(got.len(), ngram_count(len, minn, maxn));
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
        prop_assert!(config.buckets(&word).unwrap().iter().all(|&b| b < 1000));
    }

    #[test]
    fn spearman_is_bounded_symmetric_and_rank_invariant(xs in prop::collection::vec(-100.0f64..100.0, 2..40), seed in any::<u64>()) {
        let mut r = rng(seed);
        let ys: Vec<f64> = xs.iter().map(|_| r.gen_range(-10.0..10.0)).collect();
        if let Ok(rho) = spearman_rho(&xs, &ys) {
            prop_assert!((-1.0..=1.0).contains(&rho));
            prop_assert!((spearman_rho(&ys, &xs).unwrap() - rho).abs() < 1e-12);
            let cubed: Vec<f64> = xs.iter().map(|x| x * x * x + 3.0).collect();
            prop_assert!((spearman_rho(&cubed, &ys).unwrap() - rho).abs() < 1e-12);
            let negated: Vec<f64> = ys.iter().map(|y| -y).collect();
            prop_assert!((spearman_rho(&xs, &negated).unwrap() + rho).abs() < 1e-12);
        }
        if xs.iter().any(|x| *x != xs[0]) {
            prop_assert!((spearman_rho(&xs, &xs).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sig6_text_reads_back_within_precision(v in prop::num::f32::NORMAL) {
        let text = format_sig6(v);
        let back: f32 = text.parse().unwrap();
        prop_assert!(((back - v) / v).abs() <= 5e-6, "{} -> {} -> {}", v, text, back);
        let digits = text.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect::<String>();
        prop_assert!(digits.trim_start_matches('0').len() <= 6, "{}", text);
    }

    #[test]
    fn percentages_sum_to_hundred(freqs in prop::collection::vec(0u64..1_000_000, 1..20)) {
        let stats = LetterNgramStats::from_frequencies(freqs.iter().enumerate().map(|(l, &f)| (l + 1, f)));
        let total: u64 = freqs.iter().sum();
        prop_assert_eq!(stats.total, total);
        if total > 0 {
            let sum: f64 = stats.rows.iter().map(|r| r.percent).sum();
            prop_assert!((sum - 100.0).abs() < 1e-9);
            for r in &stats.rows {
                prop_assert_eq!(r.percent, percent(r.frequency, total));
            }
        }
    }
}
