//! Straightforward quadratic Re-Pair used as ground truth in tests.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grammar::{extraction_cmp, Grammar, Pair, Symbol};

/// Largest input accepted by [`naive_compress`].
pub const ORACLE_MAX_LEN: usize = 100_000;

/// Non-overlapping frequency of every adjacent pair, counted greedily from
/// the left.
pub fn pair_counts(s: &[Symbol]) -> HashMap<Pair, u32> {
    let mut counts: HashMap<Pair, (u32, usize)> = HashMap::new();
    for i in 0..s.len().saturating_sub(1) {
        let p = Pair::new(s[i], s[i + 1]);
        let e = counts.entry(p).or_insert((0, usize::MAX));
        if i == 0 || e.1 != i - 1 {
            e.0 += 1;
            e.1 = i;
        }
    }
    counts.into_iter().map(|(p, (c, _))| (p, c)).collect()
}

/// Most frequent pair under the extraction order, if any occurs twice.
pub fn best_pair(counts: &HashMap<Pair, u32>) -> Option<(Pair, u32)> {
    counts
        .iter()
        .filter(|(_, &f)| f >= 2)
        .min_by(|a, b| extraction_cmp(*a.1, *a.0, *b.1, *b.0))
        .map(|(&p, &f)| (p, f))
}

/// Replaces the occurrences of `pair` left to right; returns how many.
pub fn replace(s: &mut Vec<Symbol>, pair: Pair, x: Symbol) -> u32 {
    let mut out = 0;
    let mut count = 0;
    let mut i = 0;
    while i < s.len() {
        if i + 1 < s.len() && s[i] == pair.left && s[i + 1] == pair.right {
            s[out] = x;
            i += 2;
            count += 1;
        } else {
            s[out] = s[i];
            i += 1;
        }
        out += 1;
    }
    s.truncate(out);
    count
}

/// Re-Pair by full recount after every replacement.
pub fn naive_compress(input: &[u8], sigma: u32) -> Result<(Grammar, Vec<Symbol>)> {
    if input.is_empty() {
        return Err(Error::EmptyInput);
    }
    if input.len() > ORACLE_MAX_LEN {
        return Err(Error::Capacity {
            len: input.len(),
            max: ORACLE_MAX_LEN,
        });
    }
    if let Some((i, &b)) = input.iter().enumerate().find(|(_, &b)| u32::from(b) >= sigma) {
        return Err(Error::Alphabet {
            symbol: u32::from(b),
            position: i,
            sigma,
        });
    }
    let mut s: Vec<Symbol> = input.iter().map(|&b| Symbol::from(b)).collect();
    let mut g = Grammar::new(sigma);
    while let Some((pair, f)) = best_pair(&pair_counts(&s)) {
        let x = g.push(pair, f);
        let replaced = replace(&mut s, pair, x);
        debug_assert_eq!(replaced, f);
    }
    Ok((g, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abab() {
        let (g, t) = naive_compress(b"abab", 256).unwrap();
        assert_eq!(g.rules(), &[Pair::new(97, 98)]);
        assert_eq!(t, vec![256, 256]);
    }

    #[test]
    fn abracadabra() {
        let (g, t) = naive_compress(b"abracadabra", 256).unwrap();
        assert_eq!(
            g.rules(),
            &[Pair::new(97, 98), Pair::new(114, 97), Pair::new(256, 257)]
        );
        assert_eq!(t, vec![258, 99, 97, 100, 258]);
        assert_eq!(g.distinct_freqs(), Some(1));
    }

    #[test]
    fn distinct_pairs_give_no_rules() {
        let (g, t) = naive_compress(b"abcdef", 256).unwrap();
        assert!(g.is_empty());
        assert_eq!(t, b"abcdef".iter().map(|&b| b as u32).collect::<Vec<_>>());
    }

    #[test]
    fn runs_count_without_overlap() {
        let counts = pair_counts(&[1, 1, 1]);
        assert_eq!(counts[&Pair::new(1, 1)], 1);
        let counts = pair_counts(&[1, 1, 1, 1, 1]);
        assert_eq!(counts[&Pair::new(1, 1)], 2);
        let (g, t) = naive_compress(b"aaaa", 256).unwrap();
        assert_eq!(g.rules(), &[Pair::new(97, 97)]);
        assert_eq!(t, vec![256, 256]);
    }

    #[test]
    fn size_cap() {
        let big = vec![b'a'; ORACLE_MAX_LEN + 1];
        assert!(matches!(naive_compress(&big, 256), Err(Error::Capacity { .. })));
    }
}
