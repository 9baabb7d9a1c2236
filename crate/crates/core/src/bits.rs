//! MSB-first bit streams and Elias delta codes.

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of bits written so far.
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn write_bit(&mut self, bit: bool) {
        let off = (self.len % 8) as u32;
        if off == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("a byte was pushed") |= 0x80 >> off;
        }
        self.len += 1;
    }

    /// Writes the low `width` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value >> width == 0, "{value} does not fit in {width} bits");
        for i in (0..width).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    /// Appends the Elias delta codeword of `k`.
    pub fn write_delta(&mut self, k: u64) -> Result<()> {
        if k == 0 {
            return Err(Error::contract("Elias delta codes start at 1"));
        }
        let n = 64 - k.leading_zeros();
        let l = 32 - n.leading_zeros();
        self.write_bits(0, l - 1);
        self.write_bits(u64::from(n), l);
        self.write_bits(k & !(1u64 << (n - 1)), n - 1);
        Ok(())
    }

    /// The written bits, last byte zero-padded.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Length in bits of the Elias delta codeword of `k >= 1`.
pub fn delta_len(k: u64) -> u64 {
    assert!(k >= 1);
    let n = 64 - k.leading_zeros();
    let l = 32 - n.leading_zeros();
    u64::from(2 * (l - 1) + n)
}

#[derive(Clone, Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    pos: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    /// Bits consumed so far.
    pub fn position(&self) -> u64 {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.bytes.len() as u64 * 8 - self.pos
    }

    #[inline]
    pub fn read_bit(&mut self) -> Result<bool> {
        let byte = *self.bytes.get((self.pos / 8) as usize).ok_or(Error::Truncated)?;
        let bit = byte & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64> {
        debug_assert!(width <= 64);
        if self.remaining() < u64::from(width) {
            return Err(Error::Truncated);
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | u64::from(self.read_bit()?);
        }
        Ok(v)
    }

    pub fn read_delta(&mut self) -> Result<u64> {
        let mut zeros = 0u32;
        while !self.read_bit()? {
            zeros += 1;
            if zeros > 6 {
                return Err(Error::corrupt("Elias delta prefix longer than 64-bit values allow"));
            }
        }
        let n = (1u64 << zeros) | self.read_bits(zeros)?;
        if n > 64 {
            return Err(Error::corrupt("Elias delta length field exceeds 64"));
        }
        let n = n as u32;
        let rest = self.read_bits(n - 1)?;
        Ok((1u64 << (n - 1)) | rest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bits_of(k: u64) -> String {
        let mut w = BitWriter::new();
        w.write_delta(k).unwrap();
        let mut r = BitReader::new(w.as_bytes());
        (0..w.len()).map(|_| if r.read_bit().unwrap() { '1' } else { '0' }).collect()
    }

    #[test]
    fn known_codewords() {
        assert_eq!(bits_of(1), "1");
        assert_eq!(bits_of(2), "0100");
        assert_eq!(bits_of(3), "0101");
        assert_eq!(bits_of(17), "001010001");
    }

    #[test]
    fn zero_is_rejected() {
        assert!(matches!(BitWriter::new().write_delta(0), Err(Error::Contract(_))));
    }

    #[test]
    fn msb_first_padding() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        assert_eq!(w.len(), 3);
        assert_eq!(w.into_bytes(), vec![0b1010_0000]);
    }

    #[test]
    fn every_small_value_roundtrips() {
        let mut w = BitWriter::new();
        let mut total = 0;
        for k in 1..=1_000_000u64 {
            w.write_delta(k).unwrap();
            total += delta_len(k);
        }
        assert_eq!(w.len(), total);
        let bytes = w.into_bytes();
        let mut r = BitReader::new(&bytes);
        for k in 1..=1_000_000u64 {
            assert_eq!(r.read_delta().unwrap(), k);
        }
        assert!(r.remaining() < 8);
    }

    #[test]
    fn extremes() {
        for k in [u64::MAX, 1 << 63, (1 << 32) + 1] {
            let mut w = BitWriter::new();
            w.write_delta(k).unwrap();
            assert_eq!(w.len(), delta_len(k));
            assert_eq!(BitReader::new(w.as_bytes()).read_delta().unwrap(), k);
        }
    }

    #[test]
    fn truncation_is_reported() {
        let mut w = BitWriter::new();
        w.write_delta(1 << 40).unwrap();
        let bytes = w.into_bytes();
        let short = &bytes[..bytes.len() - 2];
        assert!(matches!(BitReader::new(short).read_delta(), Err(Error::Truncated)));
        assert!(BitReader::new(&[]).read_bit().is_err());
        assert!(BitReader::new(&[0, 0]).read_delta().is_err());
    }

    proptest! {
        #[test]
        fn mixed_stream_roundtrips(items in proptest::collection::vec((any::<u64>(), 0u32..=64), 0..200)) {
            let mut w = BitWriter::new();
            for &(v, width) in &items {
                let v = if width == 64 { v } else { v & ((1u64 << width) - 1) };
                w.write_bits(v, width);
                w.write_delta(v.max(1)).unwrap();
            }
            let bytes = w.into_bytes();
            let mut r = BitReader::new(&bytes);
            for &(v, width) in &items {
                let v = if width == 64 { v } else { v & ((1u64 << width) - 1) };
                prop_assert_eq!(r.read_bits(width).unwrap(), v);
                prop_assert_eq!(r.read_delta().unwrap(), v.max(1));
            }
        }
    }
}
