//! Rewritable text stored in 16-bit half cells.
//!
//! Position `i` holds a symbol iff bit `i` of the occupancy vector is set.
//! A symbol followed by a blank owns the following cell as well, which is
//! how grammar symbols wider than 16 bits are stored: a replacement always
//! blanks the position right after the new symbol (or a later one, when
//! that position was already blank).
//!
//! Blank runs of at most [`WORD_BITS`] positions are skipped by scanning
//! occupancy words. Longer runs record their length at the block of their
//! first position and at the block of their last position, so both forward
//! and backward skips take constant time.

use crate::error::{Error, Result};
use crate::grammar::{Pair, Symbol, MAX_INPUT_LEN};

/// Bits per occupancy word; also the long-run threshold.
pub const WORD_BITS: usize = 32;

#[derive(Clone, Debug)]
pub struct SkippableText {
    cells: Vec<u16>,
    occupancy: Vec<u32>,
    run_start_len: Vec<u32>,
    run_end_len: Vec<u32>,
    sigma: u32,
    live: usize,
}

impl SkippableText {
    pub fn from_bytes(input: &[u8], sigma: u32) -> Result<Self> {
        let n = input.len();
        if n == 0 {
            return Err(Error::EmptyInput);
        }
        if n >= MAX_INPUT_LEN {
            return Err(Error::Capacity {
                len: n,
                max: MAX_INPUT_LEN - 1,
            });
        }
        if let Some(position) = input.iter().position(|&b| u32::from(b) >= sigma) {
            return Err(Error::Alphabet {
                symbol: u32::from(input[position]),
                position,
                sigma,
            });
        }
        let words = n.div_ceil(WORD_BITS);
        let mut occupancy = vec![u32::MAX; words];
        let tail = n % WORD_BITS;
        if tail != 0 {
            occupancy[words - 1] = (1u32 << tail) - 1;
        }
        Ok(SkippableText {
            cells: input.iter().map(|&b| u16::from(b)).collect(),
            occupancy,
            run_start_len: vec![0; words],
            run_end_len: vec![0; words],
            sigma,
            live: n,
        })
    }

    /// Original length `n`.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    /// Number of non-blank positions.
    pub fn live(&self) -> usize {
        self.live
    }

    /// Bytes held by the structure's buffers.
    pub fn heap_bytes(&self) -> usize {
        self.cells.capacity() * 2
            + (self.occupancy.capacity() + self.run_start_len.capacity() + self.run_end_len.capacity()) * 4
    }

    #[inline]
    pub fn is_blank(&self, i: usize) -> bool {
        self.occupancy[i / WORD_BITS] & (1 << (i % WORD_BITS)) == 0
    }

    /// Symbol starting at the non-blank position `i`.
    #[inline]
    pub fn symbol_at(&self, i: usize) -> Symbol {
        debug_assert!(!self.is_blank(i));
        let low = u32::from(self.cells[i]);
        if i + 1 < self.cells.len() && self.is_blank(i + 1) {
            low | (u32::from(self.cells[i + 1]) << 16)
        } else {
            low
        }
    }

    /// Checked symbol read.
    pub fn symbol(&self, i: usize) -> Result<Symbol> {
        if i >= self.len() || self.is_blank(i) {
            return Err(Error::Position(i));
        }
        Ok(self.symbol_at(i))
    }

    /// First set occupancy bit in `from..=to`.
    #[inline]
    fn first_set(&self, from: usize, to: usize) -> Option<usize> {
        let mut w = from / WORD_BITS;
        let last = to / WORD_BITS;
        let mut word = self.occupancy[w] & (u32::MAX << (from % WORD_BITS));
        loop {
            if word != 0 {
                let p = w * WORD_BITS + word.trailing_zeros() as usize;
                return (p <= to).then_some(p);
            }
            if w == last {
                return None;
            }
            w += 1;
            word = self.occupancy[w];
        }
    }

    /// Last set occupancy bit in `from..=to`.
    #[inline]
    fn last_set(&self, from: usize, to: usize) -> Option<usize> {
        let mut w = to / WORD_BITS;
        let first = from / WORD_BITS;
        let mut word = self.occupancy[w] & (u32::MAX >> (WORD_BITS - 1 - to % WORD_BITS));
        loop {
            if word != 0 {
                let p = w * WORD_BITS + (WORD_BITS - 1 - word.leading_zeros() as usize);
                return (p >= from).then_some(p);
            }
            if w == first {
                return None;
            }
            w -= 1;
            word = self.occupancy[w];
        }
    }

    /// Nearest non-blank position strictly after `i`.
    #[inline]
    pub fn next_nonblank(&self, i: usize) -> Option<usize> {
        let n = self.len();
        let s = i + 1;
        if s >= n {
            return None;
        }
        if self.is_blank(i) {
            // run lengths are only anchored at run boundaries
            return self.first_set(s, n - 1);
        }
        let end = (s + WORD_BITS).min(n - 1);
        if let Some(p) = self.first_set(s, end) {
            return Some(p);
        }
        if end == n - 1 {
            return None;
        }
        let run = self.run_start_len[s / WORD_BITS] as usize;
        debug_assert!(run > WORD_BITS, "unrecorded long run at {s}");
        let q = s + run;
        (q < n).then_some(q)
    }

    /// Nearest non-blank position strictly before `i`.
    #[inline]
    pub fn prev_nonblank(&self, i: usize) -> Option<usize> {
        if i == 0 {
            return None;
        }
        let e = i - 1;
        if i < self.len() && self.is_blank(i) {
            return self.last_set(0, e);
        }
        let start = e.saturating_sub(WORD_BITS);
        if let Some(p) = self.last_set(start, e) {
            return Some(p);
        }
        if start == 0 {
            return None;
        }
        let run = self.run_end_len[e / WORD_BITS] as usize;
        debug_assert!(run > WORD_BITS, "unrecorded long run ending at {e}");
        e.checked_sub(run)
    }

    /// Pair starting at `i`, or `None` when `i` is blank, out of range, or
    /// holds the last symbol.
    #[inline]
    pub fn current_pair(&self, i: usize) -> Option<Pair> {
        if i >= self.len() || self.is_blank(i) {
            return None;
        }
        let j = self.next_nonblank(i)?;
        Some(Pair::new(self.symbol_at(i), self.symbol_at(j)))
    }

    /// Pair starting at the non-blank position `i`; `Ok(None)` when `i`
    /// holds the last symbol.
    pub fn pair_starting_at(&self, i: usize) -> Result<Option<Pair>> {
        if i >= self.len() || self.is_blank(i) {
            return Err(Error::Position(i));
        }
        Ok(self
            .next_nonblank(i)
            .map(|j| Pair::new(self.symbol_at(i), self.symbol_at(j))))
    }

    /// Writes `x` over the pair starting at `i` and blanks the position of
    /// the pair's second symbol.
    pub fn replace_pair_at(&mut self, i: usize, x: Symbol) -> Result<()> {
        if i >= self.len() || self.is_blank(i) {
            return Err(Error::Position(i));
        }
        let j = self.next_nonblank(i).ok_or(Error::Position(i))?;
        let n = self.len();
        let q = self.next_nonblank(j).unwrap_or(n);

        // Runs [i+1, j-1] and [j+1, q-1] merge with j into [i+1, q-1].
        let left = j - 1 - i;
        if left > WORD_BITS {
            self.run_start_len[(i + 1) / WORD_BITS] = 0;
            self.run_end_len[(j - 1) / WORD_BITS] = 0;
        }
        let right = q - 1 - j;
        if right > WORD_BITS {
            self.run_start_len[(j + 1) / WORD_BITS] = 0;
            self.run_end_len[(q - 1) / WORD_BITS] = 0;
        }
        self.occupancy[j / WORD_BITS] &= !(1 << (j % WORD_BITS));
        self.live -= 1;
        let merged = q - 1 - i;
        if merged > WORD_BITS {
            self.run_start_len[(i + 1) / WORD_BITS] = merged as u32;
            self.run_end_len[(q - 1) / WORD_BITS] = merged as u32;
        }

        self.cells[i] = x as u16;
        self.cells[i + 1] = (x >> 16) as u16;
        Ok(())
    }

    /// Non-blank positions in increasing order.
    pub fn positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupancy.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(w * WORD_BITS + b)
            })
        })
    }

    /// The non-blank symbols in text order.
    pub fn extract_final_text(&self) -> Vec<Symbol> {
        let mut out = Vec::with_capacity(self.live);
        out.extend(self.positions().map(|i| self.symbol_at(i)));
        out
    }

    /// Recorded long-run length at the block of `i`, as (start table, end table).
    pub fn recorded_runs(&self, i: usize) -> (u32, u32) {
        (self.run_start_len[i / WORD_BITS], self.run_end_len[i / WORD_BITS])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn text(s: &[u8]) -> SkippableText {
        SkippableText::from_bytes(s, 256).unwrap()
    }

    #[test]
    fn load_abc() {
        let t = text(b"abc");
        assert_eq!(t.extract_final_text(), vec![97, 98, 99]);
        assert_eq!(t.live(), 3);
        assert!((0..3).all(|i| !t.is_blank(i)));
    }

    #[test]
    fn empty_and_alphabet_errors() {
        assert!(matches!(SkippableText::from_bytes(b"", 256), Err(Error::EmptyInput)));
        let err = SkippableText::from_bytes(b"abz", 100).unwrap_err();
        assert!(matches!(err, Error::Alphabet { symbol: 122, position: 2, sigma: 100 }));
    }

    #[test]
    fn memory_footprint_is_half_words_plus_bits() {
        let n = 1 << 20;
        let t = SkippableText::from_bytes(&vec![7u8; n], 256).unwrap();
        // n/2 words of cells, n bits of occupancy, 2 * n/32 run counters
        let bound = n * 2 + n / 8 + 2 * (n / 32) * 4;
        assert!(t.heap_bytes() <= bound, "{} > {bound}", t.heap_bytes());
    }

    #[test]
    fn pair_reads() {
        let t = text(b"abab");
        assert_eq!(t.pair_starting_at(1).unwrap(), Some(Pair::new(98, 97)));
        let t = text(b"ab");
        assert_eq!(t.pair_starting_at(1).unwrap(), None);
        assert!(matches!(t.pair_starting_at(2), Err(Error::Position(2))));
    }

    #[test]
    fn wide_symbol_spans_blank() {
        // a X _ c with X spanning the blank
        let mut t = text(b"abbc");
        t.replace_pair_at(1, 70_000).unwrap();
        assert!(t.is_blank(2));
        assert_eq!(t.pair_starting_at(1).unwrap(), Some(Pair::new(70_000, 99)));
        assert_eq!(t.extract_final_text(), vec![97, 70_000, 99]);
    }

    #[test]
    fn replace_abab() {
        let mut t = text(b"abab");
        t.replace_pair_at(0, 256).unwrap();
        assert_eq!(t.pair_starting_at(0).unwrap(), Some(Pair::new(256, 97)));
        assert_eq!(t.extract_final_text(), vec![256, 97, 98]);
        assert!(matches!(t.replace_pair_at(1, 300), Err(Error::Position(1))));
    }

    #[test]
    fn chain_replace_aaaa() {
        let mut t = text(b"aaaa");
        t.replace_pair_at(0, 256).unwrap();
        t.replace_pair_at(2, 256).unwrap();
        assert_eq!(t.next_nonblank(1), Some(2));
        assert_eq!(t.next_nonblank(0), Some(2));
        assert_eq!(t.extract_final_text(), vec![256, 256]);
        assert_eq!(t.live(), 2);
    }

    #[test]
    fn last_replacement_leaves_one_symbol() {
        let mut t = text(b"ab");
        t.replace_pair_at(0, 256).unwrap();
        assert_eq!(t.extract_final_text(), vec![256]);
    }

    /// Blanks `from..=to` by repeatedly merging into the symbol at `from - 1`.
    fn blank_range(t: &mut SkippableText, from: usize, to: usize) {
        for _ in from..=to {
            t.replace_pair_at(from - 1, 1000).unwrap();
        }
    }

    #[test]
    fn long_run_recorded_at_both_ends() {
        let mut t = text(&[b'x'; 200]);
        blank_range(&mut t, 10, 49); // run of 40 blanks
        assert_eq!(t.recorded_runs(10).0, 40);
        assert_eq!(t.recorded_runs(49).1, 40);
        assert_eq!(t.next_nonblank(9), Some(50));
        assert_eq!(t.prev_nonblank(50), Some(9));
    }

    #[test]
    fn skip_over_run_1_to_100() {
        let mut t = text(&[b'x'; 120]);
        blank_range(&mut t, 1, 100);
        assert_eq!(t.next_nonblank(0), Some(101));
        assert_eq!(t.prev_nonblank(101), Some(0));
        assert_eq!(t.next_nonblank(119), None);
        assert_eq!(t.prev_nonblank(0), None);
    }

    #[test]
    fn trailing_long_run() {
        let mut t = text(&[b'x'; 100]);
        blank_range(&mut t, 50, 99);
        assert_eq!(t.next_nonblank(49), None);
        assert_eq!(t.live(), 50);
    }

    #[test]
    fn coalescing_runs_updates_records() {
        let mut t = text(&[b'x'; 300]);
        blank_range(&mut t, 11, 60); // [11, 60]
        blank_range(&mut t, 62, 140); // [62, 140]
        // blank 61: merge into [11, 140]
        t.replace_pair_at(10, 5).unwrap();
        assert_eq!(t.next_nonblank(10), Some(141));
        assert_eq!(t.prev_nonblank(141), Some(10));
        assert_eq!(t.recorded_runs(11).0, 130);
        assert_eq!(t.recorded_runs(140).1, 130);
        // stale records of the inner runs are gone
        assert_eq!(t.recorded_runs(62).0, 0);
        assert_eq!(t.recorded_runs(60).1, 0);
    }

    fn linear_next(t: &SkippableText, i: usize) -> Option<usize> {
        (i + 1..t.len()).find(|&p| !t.is_blank(p))
    }

    fn linear_prev(t: &SkippableText, i: usize) -> Option<usize> {
        (0..i).rev().find(|&p| !t.is_blank(p))
    }

    proptest! {
        #[test]
        fn roundtrip_without_replacements(s in proptest::collection::vec(any::<u8>(), 1..300)) {
            let t = SkippableText::from_bytes(&s, 256).unwrap();
            let back: Vec<u8> = t.extract_final_text().into_iter().map(|x| x as u8).collect();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn skips_agree_with_linear_scan(
            n in 2usize..600,
            picks in proptest::collection::vec(any::<u32>(), 0..600),
        ) {
            let mut t = SkippableText::from_bytes(&vec![1u8; n], 256).unwrap();
            for (next_sym, r) in (256..).zip(picks) {
                let live: Vec<usize> = t.positions().collect();
                if live.len() < 2 { break; }
                let i = live[r as usize % (live.len() - 1)];
                let before = t.live();
                t.replace_pair_at(i, next_sym).unwrap();
                prop_assert_eq!(t.live(), before - 1);
            }
            for i in 0..n {
                prop_assert_eq!(t.next_nonblank(i), linear_next(&t, i));
                prop_assert_eq!(t.prev_nonblank(i), linear_prev(&t, i));
                if !t.is_blank(i) {
                    if let Some(j) = t.next_nonblank(i) {
                        prop_assert_eq!(t.prev_nonblank(j), Some(i));
                    }
                }
            }
        }
    }
}
