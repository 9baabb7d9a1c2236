//! Grammar serialization and size accounting.
//!
//! Rules extracted at equal frequency come out with non-decreasing larger
//! symbol, so the sequence of `max(a_i, b_i)` splits into few monotone
//! runs. Layout, all numbers Elias delta coded:
//!
//! ```text
//! R | per run: length, head + 1, (gap + 1)* | (|a_i - b_i| + 1)* | d orientation bits
//! ```
//!
//! An orientation bit is 1 iff `a_i > b_i`. An empty grammar has no bits.

use crate::bits::{delta_len, BitReader, BitWriter};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Pair, Symbol};

/// Lengths of the maximal non-decreasing runs of `values`.
pub fn monotone_runs(values: &[u32]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut len = 0;
    for (i, &v) in values.iter().enumerate() {
        if i > 0 && v < values[i - 1] {
            runs.push(len);
            len = 0;
        }
        len += 1;
    }
    if len > 0 {
        runs.push(len);
    }
    runs
}

fn maxes(g: &Grammar) -> Vec<u32> {
    g.rules().iter().map(|&r| r.max()).collect()
}

/// Number of monotone runs (R) of the grammar's larger-symbol sequence.
pub fn run_count(g: &Grammar) -> usize {
    monotone_runs(&maxes(g)).len()
}

/// Exact number of bits [`encode_grammar`] emits for `g`.
pub fn encoded_bits(g: &Grammar) -> u64 {
    if g.is_empty() {
        return 0;
    }
    let m = maxes(g);
    let runs = monotone_runs(&m);
    let mut bits = delta_len(runs.len() as u64);
    let mut i = 0;
    for &len in &runs {
        bits += delta_len(len as u64) + delta_len(u64::from(m[i]) + 1);
        for j in i + 1..i + len {
            bits += delta_len(u64::from(m[j] - m[j - 1]) + 1);
        }
        i += len;
    }
    for &r in g.rules() {
        bits += delta_len(u64::from(r.max() - r.min()) + 1);
    }
    bits + g.len() as u64
}

/// Appends the encoding of `g` to `w`; returns the number of bits written.
pub fn encode_grammar_into(g: &Grammar, w: &mut BitWriter) -> Result<u64> {
    g.validate()?;
    let start = w.len();
    if g.is_empty() {
        return Ok(0);
    }
    let m = maxes(g);
    let runs = monotone_runs(&m);
    w.write_delta(runs.len() as u64)?;
    let mut i = 0;
    for &len in &runs {
        w.write_delta(len as u64)?;
        w.write_delta(u64::from(m[i]) + 1)?;
        for j in i + 1..i + len {
            w.write_delta(u64::from(m[j] - m[j - 1]) + 1)?;
        }
        i += len;
    }
    for &r in g.rules() {
        w.write_delta(u64::from(r.max() - r.min()) + 1)?;
    }
    for r in g.rules() {
        w.write_bit(r.left > r.right);
    }
    Ok(w.len() - start)
}

/// The encoding of `g`, zero-padded to whole bytes, and its exact bit length.
pub fn encode_grammar(g: &Grammar) -> Result<(Vec<u8>, u64)> {
    let mut w = BitWriter::new();
    let bits = encode_grammar_into(g, &mut w)?;
    Ok((w.into_bytes(), bits))
}

fn read_symbol(r: &mut BitReader<'_>, what: &str) -> Result<u32> {
    let v = r.read_delta()? - 1;
    u32::try_from(v).map_err(|_| Error::corrupt(format!("{what} {v} exceeds 32 bits")))
}

/// Reads a grammar of `d` rules over `sigma` terminals.
pub fn decode_grammar_from(r: &mut BitReader<'_>, d: usize, sigma: u32) -> Result<Grammar> {
    if d == 0 {
        return Ok(Grammar::new(sigma));
    }
    let limit = sigma as u64 + d as u64;
    let runs = r.read_delta()?;
    if runs > d as u64 {
        return Err(Error::corrupt(format!("{runs} runs for {d} rules")));
    }
    let mut m: Vec<u32> = Vec::with_capacity(d);
    for _ in 0..runs {
        let len = r.read_delta()?;
        if len > (d - m.len()) as u64 {
            return Err(Error::corrupt("run lengths exceed the rule count"));
        }
        let mut v = u64::from(read_symbol(r, "run head")?);
        m.push(v as u32);
        for _ in 1..len {
            v += u64::from(read_symbol(r, "gap")?);
            if v >= limit {
                return Err(Error::corrupt(format!("symbol {v} outside the grammar")));
            }
            m.push(v as u32);
        }
    }
    if m.len() != d {
        return Err(Error::corrupt(format!("runs cover {} of {d} rules", m.len())));
    }
    let mut diffs = Vec::with_capacity(d);
    for &hi in &m {
        let diff = read_symbol(r, "difference")?;
        if diff > hi {
            return Err(Error::corrupt(format!("difference {diff} exceeds symbol {hi}")));
        }
        diffs.push(diff);
    }
    let mut rules = Vec::with_capacity(d);
    for (&hi, &diff) in m.iter().zip(&diffs) {
        let lo: Symbol = hi - diff;
        let swapped = r.read_bit()?;
        if swapped && diff == 0 {
            return Err(Error::corrupt("orientation bit set on a run pair"));
        }
        rules.push(if swapped { Pair::new(hi, lo) } else { Pair::new(lo, hi) });
    }
    Grammar::from_rules(sigma, rules)
}

/// Decodes `d` rules from `bytes`.
pub fn decode_grammar(bytes: &[u8], d: usize, sigma: u32) -> Result<Grammar> {
    decode_grammar_from(&mut BitReader::new(bytes), d, sigma)
}

/// `log2(d!)`, summed exactly up to 10^6 and by Stirling's series beyond.
pub fn log2_factorial(d: u64) -> f64 {
    if d <= 1_000_000 {
        return (2..=d).map(|i| (i as f64).log2()).sum();
    }
    let x = d as f64;
    let ln = x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x);
    ln / std::f64::consts::LN_2
}

/// Information-theoretic minimum, in bits, for a grammar of `d` rules and
/// a final text of `t` symbols over `sigma` terminals.
pub fn lower_bound(d: u64, t: u64, sigma: u32) -> f64 {
    log2_factorial(d) + 2.0 * d as f64 + t as f64 * (f64::from(sigma) + d as f64).log2()
}

/// Explicit-constant upper bound on the grammar encoding for `d` rules,
/// `m` distinct substitution frequencies and `r` monotone runs:
/// `d (log d + log M + 1) + M log(d / M) + 64 (R + 3) + 2d`.
pub fn grammar_size_bound(d: u64, m: u64, r: u64) -> f64 {
    if d == 0 {
        return 0.0;
    }
    let (d, m) = (d as f64, m.max(1) as f64);
    d * (d.log2() + m.log2() + 1.0) + m * (d / m).log2() + 64.0 * (r as f64 + 3.0) + 2.0 * d
}

/// Bits per final-text symbol: `ceil(log2(sigma + d))`.
pub fn text_symbol_width(sigma: u32, d: u64) -> u32 {
    let u = u64::from(sigma) + d;
    if u <= 1 {
        0
    } else {
        64 - (u - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abracadabra() -> Grammar {
        Grammar::from_rules(256, vec![Pair::new(97, 98), Pair::new(114, 97), Pair::new(256, 257)]).unwrap()
    }

    #[test]
    fn abracadabra_layout() {
        let g = abracadabra();
        let (bytes, bits) = encode_grammar(&g).unwrap();
        let mut expect = BitWriter::new();
        for k in [1, 3, 99, 17, 144, 2, 18, 2] {
            expect.write_delta(k).unwrap();
        }
        for b in [false, true, false] {
            expect.write_bit(b);
        }
        assert_eq!(bits, expect.len());
        assert_eq!(bytes, expect.into_bytes());
        assert_eq!(bits, encoded_bits(&g));
        assert_eq!(run_count(&g), 1);
        assert_eq!(decode_grammar(&bytes, 3, 256).unwrap().rules(), g.rules());
    }

    #[test]
    fn empty_grammar_has_no_bits() {
        let g = Grammar::new(256);
        let (bytes, bits) = encode_grammar(&g).unwrap();
        assert!(bytes.is_empty() && bits == 0);
        assert!(decode_grammar(&[], 0, 256).unwrap().is_empty());
    }

    #[test]
    fn runs_split_on_descent_only() {
        assert_eq!(monotone_runs(&[]), Vec::<usize>::new());
        assert_eq!(monotone_runs(&[5, 5, 7, 3, 3, 9, 1]), vec![3, 3, 1]);
        assert_eq!(monotone_runs(&[1, 2, 3]), vec![3]);
    }

    #[test]
    fn lower_bound_values() {
        assert!((lower_bound(0, 100, 256) - 800.0).abs() < 1e-9);
        let lb = lower_bound(3, 5, 256);
        assert!((lb - 48.67).abs() < 0.01, "{lb}");
    }

    #[test]
    fn stirling_meets_exact_sum() {
        let exact: f64 = (2..=1_000_001u64).map(|i| (i as f64).log2()).sum();
        let approx = log2_factorial(1_000_001);
        assert!((exact - approx).abs() / exact < 1e-12);
    }

    #[test]
    fn text_width() {
        assert_eq!(text_symbol_width(256, 0), 8);
        assert_eq!(text_symbol_width(256, 3), 9);
        assert_eq!(text_symbol_width(2, 0), 1);
        assert_eq!(text_symbol_width(1, 0), 0);
    }

    #[test]
    fn corrupt_streams_are_rejected() {
        let g = abracadabra();
        let (bytes, _) = encode_grammar(&g).unwrap();
        assert!(decode_grammar(&bytes[..2], 3, 256).is_err());
        // more rules than encoded
        assert!(decode_grammar(&bytes, 4, 256).is_err());
        // forward reference: a grammar whose first rule uses symbol 256
        let mut w = BitWriter::new();
        for k in [1, 1, 257, 1] {
            w.write_delta(k).unwrap();
        }
        w.write_bit(false);
        assert!(matches!(decode_grammar(&w.into_bytes(), 1, 256), Err(Error::Grammar(_))));
    }

    fn grammar_strategy() -> impl Strategy<Value = Grammar> {
        (1u32..300, proptest::collection::vec((any::<u32>(), any::<u32>()), 0..400)).prop_map(|(sigma, raw)| {
            let rules = raw
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| {
                    let limit = sigma + i as u32;
                    Pair::new(a % limit, b % limit)
                })
                .collect();
            Grammar::from_rules(sigma, rules).unwrap()
        })
    }

    proptest! {
        #[test]
        fn roundtrip_and_size(g in grammar_strategy()) {
            let (bytes, bits) = encode_grammar(&g).unwrap();
            prop_assert_eq!(bits, encoded_bits(&g));
            prop_assert_eq!(bytes.len() as u64, bits.div_ceil(8));
            let back = decode_grammar(&bytes, g.len(), g.sigma()).unwrap();
            prop_assert_eq!(back.rules(), g.rules());
        }

        #[test]
        fn runs_match_brute_force(values in proptest::collection::vec(0u32..20, 0..60)) {
            let runs = monotone_runs(&values);
            prop_assert_eq!(runs.iter().sum::<usize>(), values.len());
            let mut i = 0;
            for &len in &runs {
                prop_assert!(len > 0);
                prop_assert!(values[i..i + len].windows(2).all(|w| w[0] <= w[1]));
                if i + len < values.len() {
                    prop_assert!(values[i + len] < values[i + len - 1]);
                }
                i += len;
            }
        }
    }
}
