//! Direct-access queue for high-frequency pairs.
//!
//! Pairs over the high-frequency universe (terminals plus the first
//! `extra` grammar symbols) index a dense table; the table stores a slot
//! number into a compact record array. `max()` scans the records.

use crate::error::{Error, Result};
use crate::grammar::{extraction_cmp, Pair, Symbol};
use crate::queue::{Decrease, PairQueue, PairRecord};

const NONE: u32 = u32::MAX;

/// Maps the symbols of a bounded universe onto `0..side`.
///
/// Terminals that do not occur in the input get no id, which keeps the
/// tables small for inputs over a sparse byte alphabet.
#[derive(Clone, Debug)]
pub struct DenseIndex {
    ids: Vec<u32>,
    sigma: u32,
    terminals: u32,
    side: u32,
}

impl DenseIndex {
    /// Universe of the terminals flagged in `present` plus `extra`
    /// grammar symbols `sigma .. sigma + extra`.
    pub fn new(sigma: u32, present: &[bool], extra: u32) -> Self {
        let mut ids = vec![NONE; sigma as usize];
        let mut next = 0;
        for (s, &p) in present.iter().enumerate().take(sigma as usize) {
            if p {
                ids[s] = next;
                next += 1;
            }
        }
        DenseIndex {
            ids,
            sigma,
            terminals: next,
            side: next + extra,
        }
    }

    /// Every terminal below `sigma` plus `extra` grammar symbols.
    pub fn full(sigma: u32, extra: u32) -> Self {
        DenseIndex::new(sigma, &vec![true; sigma as usize], extra)
    }

    #[inline]
    pub fn id(&self, s: Symbol) -> Option<u32> {
        if s < self.sigma {
            let v = self.ids[s as usize];
            (v != NONE).then_some(v)
        } else {
            let v = u64::from(self.terminals) + u64::from(s - self.sigma);
            (v < u64::from(self.side)).then_some(v as u32)
        }
    }

    #[inline]
    pub fn index(&self, pair: Pair) -> Option<usize> {
        let a = self.id(pair.left)? as usize;
        let b = self.id(pair.right)? as usize;
        Some(a * self.side as usize + b)
    }

    /// Number of addressable symbols.
    pub fn side(&self) -> u32 {
        self.side
    }

    /// Number of table cells (`side²`).
    pub fn cells(&self) -> usize {
        self.side as usize * self.side as usize
    }

    /// First grammar symbol outside the universe.
    pub fn symbol_limit(&self) -> Symbol {
        self.sigma + (self.side - self.terminals)
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    pair: Pair,
    rec: PairRecord,
}

#[derive(Debug)]
pub struct HfQueue {
    index: DenseIndex,
    table: Vec<u32>,
    entries: Vec<Option<Entry>>,
    free: Vec<u32>,
    live: usize,
    max_calls: usize,
}

impl HfQueue {
    pub fn new(index: DenseIndex) -> Self {
        let cells = index.cells();
        HfQueue {
            index,
            table: vec![NONE; cells],
            entries: Vec::new(),
            free: Vec::new(),
            live: 0,
            max_calls: 0,
        }
    }

    pub fn index(&self) -> &DenseIndex {
        &self.index
    }

    /// Number of `max()` calls so far.
    pub fn max_calls(&self) -> usize {
        self.max_calls
    }

    pub fn heap_bytes(&self) -> usize {
        self.table.capacity() * 4
            + self.entries.capacity() * std::mem::size_of::<Option<Entry>>()
            + self.free.capacity() * 4
            + self.index.ids.capacity() * 4
    }

    fn slot(&self, pair: Pair) -> Option<usize> {
        let i = self.index.index(pair)?;
        let s = self.table[i];
        (s != NONE).then_some(s as usize)
    }

    fn entry_mut(&mut self, pair: Pair) -> Result<&mut Entry> {
        let s = self
            .slot(pair)
            .ok_or_else(|| Error::contract(format!("pair {pair:?} is not in the high-frequency queue")))?;
        Ok(self.entries[s].as_mut().expect("table points at a live entry"))
    }
}

impl PairQueue for HfQueue {
    fn get(&self, pair: Pair) -> Option<PairRecord> {
        self.slot(pair).map(|s| self.entries[s].expect("live entry").rec)
    }

    fn insert(&mut self, pair: Pair, rec: PairRecord) -> Result<()> {
        let i = self.index.index(pair).ok_or_else(|| {
            Error::contract(format!("pair {pair:?} is outside the high-frequency universe"))
        })?;
        if self.table[i] != NONE {
            return Err(Error::contract(format!("pair {pair:?} inserted twice")));
        }
        let entry = Some(Entry { pair, rec });
        let s = match self.free.pop() {
            Some(s) => {
                self.entries[s as usize] = entry;
                s
            }
            None => {
                self.entries.push(entry);
                (self.entries.len() - 1) as u32
            }
        };
        self.table[i] = s;
        self.live += 1;
        Ok(())
    }

    fn decrease(&mut self, pair: Pair) -> Result<Decrease> {
        let e = self.entry_mut(pair)?;
        if e.rec.freq == 0 {
            return Err(Error::contract(format!("pair {pair:?} already has frequency 0")));
        }
        e.rec.freq -= 1;
        Ok(Decrease::Kept(e.rec))
    }

    fn remove(&mut self, pair: Pair) -> Result<PairRecord> {
        let i = self
            .index
            .index(pair)
            .filter(|&i| self.table[i] != NONE)
            .ok_or_else(|| Error::contract(format!("pair {pair:?} is not in the high-frequency queue")))?;
        let s = self.table[i];
        self.table[i] = NONE;
        let e = self.entries[s as usize].take().expect("live entry");
        self.free.push(s);
        self.live -= 1;
        Ok(e.rec)
    }

    fn set_interval(&mut self, pair: Pair, pos: u32, len: u32) -> Result<()> {
        let e = self.entry_mut(pair)?;
        e.rec.pos = pos;
        e.rec.len = len;
        Ok(())
    }

    fn max(&mut self) -> Option<Pair> {
        self.max_calls += 1;
        self.entries
            .iter()
            .flatten()
            .min_by(|a, b| extraction_cmp(a.rec.freq, a.pair, b.rec.freq, b.pair))
            .map(|e| e.pair)
    }

    fn len(&self) -> usize {
        self.live
    }

    fn records(&self) -> Vec<(Pair, PairRecord)> {
        self.entries.iter().flatten().map(|e| (e.pair, e.rec)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn queue() -> HfQueue {
        HfQueue::new(DenseIndex::full(256, 16))
    }

    #[test]
    fn store_and_load() {
        let mut q = queue();
        let ab = Pair::new(97, 98);
        q.insert(ab, PairRecord::new(0, 10, 8)).unwrap();
        assert_eq!(q.get(ab), Some(PairRecord::new(0, 10, 8)));
        q.decrease(ab).unwrap();
        q.decrease(ab).unwrap();
        assert_eq!(q.get(ab).unwrap().freq, 6);
        q.remove(ab).unwrap();
        assert!(!q.contains(ab));
        assert!(q.is_empty());
    }

    #[test]
    fn contract_violations() {
        let mut q = queue();
        let ab = Pair::new(97, 98);
        assert!(matches!(q.decrease(ab), Err(Error::Contract(_))));
        assert!(matches!(q.remove(ab), Err(Error::Contract(_))));
        q.insert(ab, PairRecord::new(0, 1, 1)).unwrap();
        assert!(matches!(q.insert(ab, PairRecord::new(0, 1, 1)), Err(Error::Contract(_))));
        // 256 + 16 is the first symbol outside the universe
        assert!(matches!(
            q.insert(Pair::new(97, 272), PairRecord::new(0, 1, 1)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn max_unique_and_ties() {
        let (a, b, c) = (97, 98, 99);
        let mut q = queue();
        assert_eq!(q.max(), None);
        q.insert(Pair::new(a, b), PairRecord::new(0, 5, 5)).unwrap();
        q.insert(Pair::new(b, c), PairRecord::new(5, 7, 7)).unwrap();
        assert_eq!(q.max(), Some(Pair::new(b, c)));

        let mut q = queue();
        q.insert(Pair::new(a, c), PairRecord::new(0, 5, 5)).unwrap();
        q.insert(Pair::new(a, b), PairRecord::new(5, 5, 5)).unwrap();
        assert_eq!(q.max(), Some(Pair::new(a, b)));
        assert_eq!(q.max_calls(), 1);
    }

    #[test]
    fn sparse_alphabet_index() {
        let mut present = vec![false; 256];
        present[b'x' as usize] = true;
        present[b'y' as usize] = true;
        let idx = DenseIndex::new(256, &present, 3);
        assert_eq!(idx.side(), 5);
        assert_eq!(idx.id(b'x' as u32), Some(0));
        assert_eq!(idx.id(b'a' as u32), None);
        assert_eq!(idx.id(258), Some(4));
        assert_eq!(idx.id(259), None);
        assert_eq!(idx.symbol_limit(), 259);
    }

    proptest! {
        #[test]
        fn max_matches_brute_force(
            items in proptest::collection::btree_map((0u32..20, 0u32..20), 1u32..6, 1..40)
        ) {
            let mut q = HfQueue::new(DenseIndex::full(16, 4));
            for (&(l, r), &f) in &items {
                q.insert(Pair::new(l, r), PairRecord::new(0, f, f)).unwrap();
            }
            let best = items
                .iter()
                .map(|(&(l, r), &f)| (f, Pair::new(l, r)))
                .min_by(|x, y| extraction_cmp(x.0, x.1, y.0, y.1))
                .map(|(_, p)| p);
            prop_assert_eq!(q.max(), best);
        }
    }
}
