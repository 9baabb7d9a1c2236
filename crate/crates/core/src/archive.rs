//! Archive container and decompressor.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "RPSE"
//!      4     1  version (1)
//!      5     1  flags (bit 0: trailing frequency block present)
//!      6     4  sigma            u32 LE
//!     10     8  d (rules)        u64 LE
//!     18     8  t (final text)   u64 LE
//!     26     8  n (input length) u64 LE
//!     34     8  R (runs)         u64 LE
//!     42     4  CRC-32 of the payload
//! ```
//!
//! The payload is the grammar encoding, then the final text at
//! `ceil(log2(sigma + d))` bits per symbol, each zero-padded to a byte.
//! The optional trailing block holds M (u64 LE), the number K of frequency
//! runs (u64 LE) and K pairs (frequency, rule count) as u32 LE.

use std::io::Write;

use serde::Serialize;

use crate::bits::{BitReader, BitWriter};
use crate::codec;
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Symbol, MAX_INPUT_LEN};

pub const MAGIC: [u8; 4] = *b"RPSE";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 46;
pub const FLAG_FREQUENCIES: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Header {
    pub flags: u8,
    pub sigma: u32,
    pub d: u64,
    pub t: u64,
    pub n: u64,
    pub runs: u64,
    pub crc: u32,
}

impl Header {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut b = [0u8; HEADER_LEN];
        b[0..4].copy_from_slice(&MAGIC);
        b[4] = VERSION;
        b[5] = self.flags;
        b[6..10].copy_from_slice(&self.sigma.to_le_bytes());
        b[10..18].copy_from_slice(&self.d.to_le_bytes());
        b[18..26].copy_from_slice(&self.t.to_le_bytes());
        b[26..34].copy_from_slice(&self.n.to_le_bytes());
        b[34..42].copy_from_slice(&self.runs.to_le_bytes());
        b[42..46].copy_from_slice(&self.crc.to_le_bytes());
        b
    }

    pub fn parse(bytes: &[u8]) -> Result<Header> {
        if bytes.len() < 4 || bytes[0..4] != MAGIC {
            return Err(Error::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated);
        }
        if bytes[4] != VERSION {
            return Err(Error::BadVersion(bytes[4]));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
        let h = Header {
            flags: bytes[5],
            sigma: u32_at(6),
            d: u64_at(10),
            t: u64_at(18),
            n: u64_at(26),
            runs: u64_at(34),
            crc: u32_at(42),
        };
        if h.flags & !FLAG_FREQUENCIES != 0 {
            return Err(Error::corrupt(format!("unknown flags {:#04x}", h.flags)));
        }
        if h.sigma == 0 || h.sigma > 256 {
            return Err(Error::corrupt(format!("alphabet size {} outside [1, 256]", h.sigma)));
        }
        if u64::from(h.sigma) + h.d > MAX_INPUT_LEN as u64 {
            return Err(Error::corrupt(format!("{} rules exceed the symbol space", h.d)));
        }
        if h.t > h.n || (h.n > 0 && h.t == 0) || h.n >= MAX_INPUT_LEN as u64 {
            return Err(Error::corrupt(format!("inconsistent lengths t={} n={}", h.t, h.n)));
        }
        if h.runs > h.d || (h.d > 0 && h.runs == 0) {
            return Err(Error::corrupt(format!("{} runs for {} rules", h.runs, h.d)));
        }
        Ok(h)
    }
}

/// A parsed archive.
#[derive(Clone, Debug)]
pub struct Archive {
    pub header: Header,
    pub grammar: Grammar,
    pub final_text: Vec<Symbol>,
    pub grammar_bits: u64,
    pub text_bits: u64,
    /// Distinct substitution frequencies, when the archive records them.
    pub distinct_freqs: Option<u64>,
}

/// Serializes a compressed text. Substitution frequencies recorded in the
/// grammar go to the trailing block.
pub fn to_bytes(grammar: &Grammar, final_text: &[Symbol], n: u64) -> Result<Vec<u8>> {
    let sigma = grammar.sigma();
    let d = grammar.len() as u64;
    let width = codec::text_symbol_width(sigma, d);
    let limit = u64::from(sigma) + d;
    if let Some(&s) = final_text.iter().find(|&&s| u64::from(s) >= limit) {
        return Err(Error::Grammar(format!("final text symbol {s} has no rule")));
    }

    let mut w = BitWriter::new();
    codec::encode_grammar_into(grammar, &mut w)?;
    let mut payload = w.into_bytes();
    let mut w = BitWriter::new();
    for &s in final_text {
        w.write_bits(u64::from(s), width);
    }
    payload.extend_from_slice(w.as_bytes());

    let mut flags = 0;
    if let Some(m) = grammar.distinct_freqs() {
        flags |= FLAG_FREQUENCIES;
        let runs = grammar.freq_runs();
        payload.extend_from_slice(&(m as u64).to_le_bytes());
        payload.extend_from_slice(&(runs.len() as u64).to_le_bytes());
        for &(f, c) in runs {
            payload.extend_from_slice(&f.to_le_bytes());
            payload.extend_from_slice(&c.to_le_bytes());
        }
    }

    let header = Header {
        flags,
        sigma,
        d,
        t: final_text.len() as u64,
        n,
        runs: codec::run_count(grammar) as u64,
        crc: crc32fast::hash(&payload),
    };
    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Writes the archive to `sink` and returns its size in bytes.
pub fn write_archive(grammar: &Grammar, final_text: &[Symbol], n: u64, sink: &mut impl Write) -> Result<u64> {
    let bytes = to_bytes(grammar, final_text, n)?;
    sink.write_all(&bytes)?;
    Ok(bytes.len() as u64)
}

// Consumes the zero padding up to the next byte boundary.
fn align(r: &mut BitReader<'_>) -> Result<()> {
    let pad = (8 - r.position() % 8) % 8;
    if r.read_bits(pad as u32)? != 0 {
        return Err(Error::corrupt("non-zero padding bits"));
    }
    Ok(())
}

fn take<'a>(bytes: &mut &'a [u8], len: usize) -> Result<&'a [u8]> {
    if bytes.len() < len {
        return Err(Error::Truncated);
    }
    let (head, rest) = bytes.split_at(len);
    *bytes = rest;
    Ok(head)
}

fn take_u64(bytes: &mut &[u8]) -> Result<u64> {
    Ok(u64::from_le_bytes(take(bytes, 8)?.try_into().expect("8 bytes")))
}

fn take_u32(bytes: &mut &[u8]) -> Result<u32> {
    Ok(u32::from_le_bytes(take(bytes, 4)?.try_into().expect("4 bytes")))
}

/// Parses and validates an archive without expanding it.
pub fn read_archive(bytes: &[u8]) -> Result<Archive> {
    let header = Header::parse(bytes)?;
    let payload = &bytes[HEADER_LEN..];
    let actual = crc32fast::hash(payload);
    if actual != header.crc {
        return Err(Error::Checksum {
            expected: header.crc,
            actual,
        });
    }

    let d = usize::try_from(header.d).map_err(|_| Error::corrupt("rule count overflows"))?;
    let mut r = BitReader::new(payload);
    let grammar = codec::decode_grammar_from(&mut r, d, header.sigma)?;
    let grammar_bits = r.position();
    align(&mut r)?;
    if codec::run_count(&grammar) as u64 != header.runs {
        return Err(Error::corrupt("run count disagrees with the grammar"));
    }

    let width = codec::text_symbol_width(header.sigma, header.d);
    let text_bits = header
        .t
        .checked_mul(u64::from(width))
        .ok_or_else(|| Error::corrupt("final text size overflows"))?;
    if r.remaining() < text_bits {
        return Err(Error::Truncated);
    }
    let limit = u64::from(header.sigma) + header.d;
    let mut final_text = Vec::with_capacity(header.t as usize);
    for _ in 0..header.t {
        let s = r.read_bits(width)?;
        if s >= limit {
            return Err(Error::corrupt(format!("final text symbol {s} has no rule")));
        }
        final_text.push(s as Symbol);
    }
    align(&mut r)?;

    let mut rest = &payload[(r.position() / 8) as usize..];
    let mut grammar = grammar;
    let mut distinct_freqs = None;
    if header.flags & FLAG_FREQUENCIES != 0 {
        let m = take_u64(&mut rest)?;
        let k = take_u64(&mut rest)?;
        if k > header.d || k.checked_mul(8).is_none_or(|b| b > rest.len() as u64) {
            return Err(Error::corrupt(format!("{k} frequency runs for {} rules", header.d)));
        }
        let mut runs = Vec::with_capacity(k as usize);
        for _ in 0..k {
            runs.push((take_u32(&mut rest)?, take_u32(&mut rest)?));
        }
        if runs.iter().any(|&(_, c)| c == 0) || runs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::corrupt("frequency runs are not canonical"));
        }
        grammar.set_freq_runs(runs);
        if grammar.distinct_freqs().map(|x| x as u64) != Some(m) {
            return Err(Error::corrupt("frequency block is inconsistent"));
        }
        distinct_freqs = Some(m);
    }
    if !rest.is_empty() {
        return Err(Error::corrupt(format!("{} trailing bytes", rest.len())));
    }

    Ok(Archive {
        header,
        grammar,
        final_text,
        grammar_bits,
        text_bits,
        distinct_freqs,
    })
}

/// Restores the original bytes.
pub fn decompress(bytes: &[u8]) -> Result<Vec<u8>> {
    let a = read_archive(bytes)?;
    let lens = a.grammar.expansion_lengths();
    let mut total: u64 = 0;
    for &s in &a.final_text {
        total = total.saturating_add(a.grammar.symbol_len(s, &lens)?);
    }
    if total != a.header.n {
        return Err(Error::corrupt(format!(
            "text expands to {total} bytes, header says {}",
            a.header.n
        )));
    }
    drop(lens);
    let mut out = Vec::with_capacity(total as usize);
    a.grammar.expand_into(&a.final_text, &mut out)?;
    Ok(out)
}

/// Size accounting of one archive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompressionStats {
    pub n: u64,
    pub sigma: u32,
    pub d: u64,
    pub t: u64,
    #[serde(rename = "M")]
    pub m: Option<u64>,
    #[serde(rename = "R")]
    pub runs: u64,
    pub grammar_bits: u64,
    pub text_bits: u64,
    /// Grammar plus final text, without header and padding.
    pub encoded_bits: u64,
    pub lower_bound_bits: f64,
    /// `encoded_bits / lower_bound_bits` in percent.
    pub rate: f64,
    pub archive_bytes: u64,
}

impl CompressionStats {
    pub fn of(a: &Archive, archive_bytes: u64) -> Self {
        let h = &a.header;
        let encoded_bits = a.grammar_bits + a.text_bits;
        let lower = codec::lower_bound(h.d, h.t, h.sigma);
        CompressionStats {
            n: h.n,
            sigma: h.sigma,
            d: h.d,
            t: h.t,
            m: a.distinct_freqs,
            runs: h.runs,
            grammar_bits: a.grammar_bits,
            text_bits: a.text_bits,
            encoded_bits,
            lower_bound_bits: lower,
            rate: if lower > 0.0 { 100.0 * encoded_bits as f64 / lower } else { 0.0 },
            archive_bytes,
        }
    }

    pub const TABLE_HEADER: &'static str = "d\tM\tplain\tlower bound\trp\trate (%)";

    /// One row under [`Self::TABLE_HEADER`]; sizes in bytes.
    pub fn table_row(&self) -> String {
        let m = self.m.map_or_else(|| "-".to_string(), |m| m.to_string());
        format!(
            "{}\t{}\t{}\t{:.0}\t{}\t{:.2}",
            self.d,
            m,
            self.n,
            self.lower_bound_bits / 8.0,
            self.encoded_bits.div_ceil(8),
            self.rate
        )
    }
}

/// Reads an archive and reports its size accounting.
pub fn stats(bytes: &[u8]) -> Result<CompressionStats> {
    let a = read_archive(bytes)?;
    Ok(CompressionStats::of(&a, bytes.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::Pair;

    fn abracadabra() -> (Grammar, Vec<Symbol>) {
        let mut g = Grammar::new(256);
        g.push(Pair::new(97, 98), 2);
        g.push(Pair::new(114, 97), 2);
        g.push(Pair::new(256, 257), 2);
        (g, vec![258, 99, 97, 100, 258])
    }

    #[test]
    fn plain_text_archive() {
        let g = Grammar::new(256);
        let text: Vec<Symbol> = b"abc".iter().map(|&b| b.into()).collect();
        let bytes = to_bytes(&g, &text, 3).unwrap();
        // three 8-bit symbols, then M = 0 and K = 0
        assert_eq!(bytes.len(), HEADER_LEN + 3 + 16);
        assert_eq!(&bytes[HEADER_LEN..HEADER_LEN + 3], b"abc");
        assert_eq!(decompress(&bytes).unwrap(), b"abc");
        let s = stats(&bytes).unwrap();
        assert_eq!(s.encoded_bits, 24);
        assert!((s.rate - 100.0).abs() < 1e-9);
    }

    #[test]
    fn abracadabra_archive() {
        let (g, text) = abracadabra();
        let bytes = to_bytes(&g, &text, 11).unwrap();
        let grammar_bits = codec::encoded_bits(&g);
        let grammar_bytes = grammar_bits.div_ceil(8) as usize;
        // 5 symbols at 9 bits, then the frequency block: M, K, one run
        assert_eq!(bytes.len(), HEADER_LEN + grammar_bytes + 6 + 8 + 8 + 8);
        assert_eq!(decompress(&bytes).unwrap(), b"abracadabra");
        let a = read_archive(&bytes).unwrap();
        assert_eq!(a.grammar, g);
        assert_eq!(a.final_text, text);
        assert_eq!(a.text_bits, 45);
        assert_eq!(a.distinct_freqs, Some(1));
        assert_eq!(a.header.runs, 1);
        let s = stats(&bytes).unwrap();
        let lb = codec::lower_bound(3, 5, 256);
        assert!((s.rate - 100.0 * (grammar_bits + 45) as f64 / lb).abs() < 1e-9);
        // canonical: re-serializing the parsed archive gives the same bytes
        assert_eq!(to_bytes(&a.grammar, &a.final_text, a.header.n).unwrap(), bytes);
    }

    #[test]
    fn header_errors() {
        let (g, text) = abracadabra();
        let bytes = to_bytes(&g, &text, 11).unwrap();
        assert!(matches!(read_archive(b"nope"), Err(Error::BadMagic)));
        assert!(matches!(read_archive(&bytes[..20]), Err(Error::Truncated)));
        let mut v = bytes.clone();
        v[4] = 2;
        assert!(matches!(read_archive(&v), Err(Error::BadVersion(2))));
        let mut v = bytes.clone();
        v[HEADER_LEN + 1] ^= 0x10;
        assert!(matches!(read_archive(&v), Err(Error::Checksum { .. })));
        let mut v = bytes.clone();
        v[26] = 12;
        assert!(decompress(&v).is_err());
    }

    #[test]
    fn every_payload_bit_flip_is_caught() {
        let (g, text) = abracadabra();
        let bytes = to_bytes(&g, &text, 11).unwrap();
        for i in HEADER_LEN * 8..bytes.len() * 8 {
            let mut v = bytes.clone();
            v[i / 8] ^= 0x80 >> (i % 8);
            assert!(decompress(&v).is_err(), "bit {i}");
        }
    }

    #[test]
    fn forward_reference_in_text() {
        let g = Grammar::new(256);
        assert!(to_bytes(&g, &[256], 1).is_err());
    }
}
