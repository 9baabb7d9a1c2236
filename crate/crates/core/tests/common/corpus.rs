//! Deterministic synthetic inputs: repetitive words, duplicated documents
//! and English-like prose.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Prefix of length `n` of the Fibonacci word over {a, b}.
pub fn fibonacci(n: usize) -> Vec<u8> {
    let (mut prev, mut cur) = (b"a".to_vec(), b"ab".to_vec());
    while cur.len() < n {
        let next = [cur.as_slice(), prev.as_slice()].concat();
        prev = cur;
        cur = next;
    }
    cur.truncate(n);
    cur
}

/// Prefix of length `n` of the Thue–Morse word over {a, b}.
pub fn thue_morse(n: usize) -> Vec<u8> {
    (0..n).map(|i| if (i as u64).count_ones().is_multiple_of(2) { b'a' } else { b'b' }).collect()
}

/// Words with Zipf-like frequencies, sentences and line breaks.
pub fn english_like(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    let letters = b"etaoinshrdlcumwfgypbvkjxqz";
    let vocab: Vec<Vec<u8>> = (0..8000)
        .map(|_| {
            let len = 1 + rng.gen_range(0..4) + rng.gen_range(0..5);
            (0..len)
                .map(|_| {
                    // skew towards frequent letters
                    let r: f64 = rng.gen();
                    letters[((r * r) * letters.len() as f64) as usize]
                })
                .collect()
        })
        .collect();
    // cumulative Zipf weights
    let weights: Vec<f64> = (1..=vocab.len()).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w / total;
        cdf.push(acc);
    }
    let mut out = Vec::with_capacity(n + 16);
    let mut start = true;
    while out.len() < n {
        let r: f64 = rng.gen();
        let i = cdf.partition_point(|&c| c < r).min(vocab.len() - 1);
        let w = &vocab[i];
        if start {
            out.push(w[0].to_ascii_uppercase());
            out.extend_from_slice(&w[1..]);
            start = false;
        } else {
            out.extend_from_slice(w);
        }
        match rng.gen_range(0..100) {
            0..=6 => {
                out.extend_from_slice(b". ");
                start = true;
            }
            7..=10 => out.extend_from_slice(b", "),
            11 => {
                out.extend_from_slice(b".\n");
                start = true;
            }
            _ => out.push(b' '),
        }
    }
    out.truncate(n);
    out
}

/// A base document followed by lightly edited copies of itself, like
/// successive versions of a file.
pub fn duplicated_docs(n: usize, doc_len: usize, seed: u64) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let mut doc = english_like(doc_len, seed);
    let mut out = Vec::with_capacity(n + doc_len);
    while out.len() < n {
        out.extend_from_slice(&doc);
        // a few point edits per version
        for _ in 0..(doc_len / 2000).max(1) {
            let i = rng.gen_range(0..doc.len());
            doc[i] = b"abcdefghijklmnopqrstuvwxyz "[rng.gen_range(0..27)];
        }
    }
    out.truncate(n);
    out
}

/// Uniform random bytes.
pub fn random_bytes(n: usize, seed: u64) -> Vec<u8> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen()).collect()
}
