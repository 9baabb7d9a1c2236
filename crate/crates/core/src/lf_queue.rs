//! Capacity-bounded queue for the low-frequency phase.
//!
//! Records live in a linear-probing map with twice as many slots as the
//! capacity (allocated on first need beyond a small initial table), so its
//! load never exceeds one half. Every live pair of frequency `f` is also listed in bucket
//! `F[f]`; buckets are maintained lazily, so they may hold stale entries
//! (pairs that were removed or whose frequency dropped). A bucket is
//! rebuilt once more than half of it is stale. `max()` walks the bucket of
//! the highest frequency from the cursor `ext`, and each bucket is sorted by
//! [`Pair::order_key`] when it becomes the current maximum.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::grammar::{Pair, Symbol};
use crate::queue::{Decrease, PairQueue, PairRecord};

const EMPTY: Symbol = Symbol::MAX;
const INITIAL_SLOTS: usize = 64;

#[derive(Clone, Copy, Debug)]
struct Slot {
    left: Symbol,
    right: Symbol,
    rec: PairRecord,
}

const EMPTY_SLOT: Slot = Slot {
    left: EMPTY,
    right: 0,
    rec: PairRecord {
        pos: 0,
        len: 0,
        freq: 0,
    },
};

#[derive(Debug, Default)]
struct Bucket {
    keys: Vec<u64>,
    deleted: u32,
}

/// Work counters, cumulative over the queue's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LfStats {
    pub inserts: usize,
    pub decreases: usize,
    pub appends: usize,
    pub rebuilds: usize,
    /// Entries examined by rebuilds.
    pub rebuild_work: usize,
    pub sorts: usize,
    pub evictions: usize,
    pub evicted_pairs: usize,
    /// Inserts that raised `max_f` after extraction had started.
    pub max_f_raises: usize,
}

#[derive(Debug)]
pub struct LfQueue {
    slots: Vec<Slot>,
    buckets: Vec<Option<Box<Bucket>>>,
    max_f: u32,
    ext: usize,
    // F[max_f][ext..sorted_end] is in key order, the tail may not be
    sorted_end: usize,
    size: usize,
    capacity: usize,
    max_freq: u32,
    extracting: bool,
    // count bucket-trigger violations seen after operations
    checked: bool,
    violations: usize,
    stats: LfStats,
}

#[inline]
fn hash(key: u64) -> u64 {
    let mut h = key ^ (key >> 31);
    h = h.wrapping_mul(0x7fb5_d329_728e_a185);
    h ^= h >> 27;
    h = h.wrapping_mul(0x81da_def4_bc2d_d44d);
    h ^ (h >> 33)
}

impl LfQueue {
    /// Queue holding at most `capacity` pairs of frequency at most
    /// `max_freq`. The capacity is at least 2 so that eviction always
    /// keeps the best pair.
    pub fn new(capacity: usize, max_freq: u32) -> Self {
        let capacity = capacity.max(2);
        LfQueue {
            slots: vec![EMPTY_SLOT; INITIAL_SLOTS.min(2 * capacity)],
            buckets: Vec::new(),
            max_f: 0,
            ext: 0,
            sorted_end: 0,
            size: 0,
            capacity,
            max_freq,
            extracting: false,
            checked: false,
            violations: 0,
            stats: LfStats::default(),
        }
    }

    /// Makes every bucket update verify the rebuild trigger; see
    /// [`PairQueue::check_structure`].
    pub fn set_checked(&mut self, checked: bool) {
        self.checked = checked;
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn max_freq(&self) -> u32 {
        self.max_freq
    }

    pub fn max_f(&self) -> u32 {
        self.max_f
    }

    pub fn ext(&self) -> usize {
        self.ext
    }

    pub fn stats(&self) -> LfStats {
        self.stats
    }

    pub fn heap_bytes(&self) -> usize {
        let buckets: usize = self
            .buckets
            .iter()
            .flatten()
            .map(|b| std::mem::size_of::<Bucket>() + b.keys.capacity() * 8)
            .sum();
        self.slots.capacity() * std::mem::size_of::<Slot>()
            + self.buckets.capacity() * std::mem::size_of::<Option<Box<Bucket>>>()
            + buckets
    }

    /// Empties the queue for the next refill round.
    pub fn clear(&mut self) {
        self.slots = vec![EMPTY_SLOT; INITIAL_SLOTS.min(2 * self.capacity)];
        self.buckets = Vec::new();
        self.max_f = 0;
        self.ext = 0;
        self.sorted_end = 0;
        self.size = 0;
        self.extracting = false;
    }

    /// Length and stale count of bucket `f`.
    pub fn bucket_state(&self, f: u32) -> (usize, usize) {
        match self.buckets.get(f as usize) {
            Some(Some(b)) => (b.keys.len(), b.deleted as usize),
            _ => (0, 0),
        }
    }

    /// True when no bucket holds more stale entries than half its length.
    pub fn buckets_within_trigger(&self) -> bool {
        self.buckets
            .iter()
            .flatten()
            .all(|b| 2 * b.deleted as usize <= b.keys.len())
    }

    /// Pairs listed in bucket `f` that are live at frequency `f`.
    pub fn live_in_bucket(&self, f: u32) -> Vec<Pair> {
        match self.buckets.get(f as usize) {
            Some(Some(b)) => b
                .keys
                .iter()
                .map(|&k| Pair::unpack(k))
                .filter(|&p| self.find(p).map(|i| self.slots[i].rec.freq) == Some(f))
                .collect(),
            _ => Vec::new(),
        }
    }

    #[inline]
    fn home(&self, pair: Pair) -> usize {
        ((u128::from(hash(pair.pack())) * self.slots.len() as u128) >> 64) as usize
    }

    #[inline]
    fn find(&self, pair: Pair) -> Option<usize> {
        let n = self.slots.len();
        let mut i = self.home(pair);
        loop {
            let s = &self.slots[i];
            if s.left == EMPTY {
                return None;
            }
            if s.left == pair.left && s.right == pair.right {
                return Some(i);
            }
            i += 1;
            if i == n {
                i = 0;
            }
        }
    }

    fn is_live(&self, key: u64, f: u32) -> bool {
        self.find(Pair::unpack(key))
            .is_some_and(|i| self.slots[i].rec.freq == f)
    }

    fn bucket_mut(&mut self, f: u32) -> &mut Bucket {
        let f = f as usize;
        if self.buckets.len() <= f {
            self.buckets.resize_with(f + 1, || None);
        }
        self.buckets[f].get_or_insert_with(Box::default)
    }

    fn append(&mut self, f: u32, pair: Pair) {
        self.stats.appends += 1;
        let key = pair.pack();
        let active = f == self.max_f;
        let sorted_end = self.sorted_end;
        let b = self.bucket_mut(f);
        let extends_sorted = active
            && sorted_end == b.keys.len()
            && b.keys.last().is_none_or(|&k| Pair::unpack(k).order_key() <= pair.order_key());
        b.keys.push(key);
        if extends_sorted {
            self.sorted_end += 1;
        }
    }

    fn mark_deleted(&mut self, f: u32) {
        let b = self.bucket_mut(f);
        b.deleted += 1;
        if 2 * b.deleted as usize > b.keys.len() {
            self.rebuild(f);
        }
        if self.checked && !self.buckets.get(f as usize).is_none_or(|b| b.as_ref().is_none_or(|b| 2 * b.deleted as usize <= b.keys.len())) {
            self.violations += 1;
        }
    }

    /// Purges stale entries (and duplicates) from bucket `f`.
    fn rebuild(&mut self, f: u32) {
        let mut b = self.buckets[f as usize].take().expect("bucket exists");
        self.stats.rebuilds += 1;
        self.stats.rebuild_work += b.keys.len();
        let expected = b.keys.len() - b.deleted as usize;
        b.keys.retain(|&k| self.is_live(k, f));
        if b.keys.len() > expected {
            // a pair removed and re-inserted at the same frequency leaves an
            // old entry that looks live again
            b.keys.sort_unstable_by_key(|&k| Pair::unpack(k).order_key());
            b.keys.dedup();
        }
        debug_assert_eq!(b.keys.len(), expected);
        b.deleted = 0;
        if f == self.max_f {
            self.ext = 0;
            self.sorted_end = 0;
        }
        if b.keys.is_empty() && f != self.max_f {
            return;
        }
        b.keys.shrink_to(2 * b.keys.len());
        self.buckets[f as usize] = Some(b);
    }

    fn active_is_sorted(&self) -> bool {
        match self.buckets.get(self.max_f as usize) {
            Some(Some(b)) => self.sorted_end >= b.keys.len(),
            _ => true,
        }
    }

    // Sorts the unsorted tail of F[max_f] and merges it into the sorted
    // part by re-sorting the suffix of the sorted part that it overlaps.
    fn sort_active(&mut self) {
        self.stats.sorts += 1;
        let ext = self.ext;
        let start = self.sorted_end.max(ext);
        let key = |k: &u64| Pair::unpack(*k).order_key();
        if let Some(Some(b)) = self.buckets.get_mut(self.max_f as usize) {
            let keys = &mut b.keys;
            if start < keys.len() {
                keys[start..].sort_unstable_by_key(key);
                if start > ext {
                    let first = key(&keys[start]);
                    let s = ext + keys[ext..start].partition_point(|k| key(k) <= first);
                    if s < start {
                        keys[s..].sort_unstable_by_key(key);
                    }
                }
            }
            self.sorted_end = keys.len();
        }
    }

    // Small queues stay small; past the initial size the map goes straight
    // to its final size, so no intermediate table is ever allocated.
    fn grow(&mut self) {
        let len = 2 * self.capacity;
        let old = std::mem::replace(&mut self.slots, vec![EMPTY_SLOT; len]);
        for s in old.into_iter().filter(|s| s.left != EMPTY) {
            let mut i = self.home(Pair::new(s.left, s.right));
            while self.slots[i].left != EMPTY {
                i += 1;
                if i == len {
                    i = 0;
                }
            }
            self.slots[i] = s;
        }
    }

    fn delete_slot(&mut self, mut i: usize) {
        // backward-shift deletion
        let n = self.slots.len();
        let mut j = i;
        loop {
            j += 1;
            if j == n {
                j = 0;
            }
            if self.slots[j].left == EMPTY {
                break;
            }
            let h = self.home(Pair::new(self.slots[j].left, self.slots[j].right));
            // move j back to i unless its home lies cyclically in (i, j]
            let stays = if i <= j { i < h && h <= j } else { i < h || h <= j };
            if !stays {
                self.slots[i] = self.slots[j];
                i = j;
            }
        }
        self.slots[i] = EMPTY_SLOT;
        self.size -= 1;
    }

    // Removes the `⌈size/2⌉` pairs of lowest frequency (equal frequencies:
    // larger order key first) and returns the best evicted pair.
    fn evict(&mut self, unsynced: &mut Vec<(u32, u32)>) -> Option<(u32, Pair)> {
        if self.size == 0 {
            return None;
        }
        self.stats.evictions += 1;
        let need = self.size.div_ceil(2);
        let mut hist = vec![0usize; self.max_f as usize + 1];
        for s in self.slots.iter().filter(|s| s.left != EMPTY) {
            hist[s.rec.freq as usize] += 1;
        }
        let mut below = 0;
        let mut threshold = 0;
        for (f, &c) in hist.iter().enumerate() {
            if below + c >= need {
                threshold = f as u32;
                break;
            }
            below += c;
        }
        drop(hist);
        let mut victims: Vec<u64> = Vec::with_capacity(need);
        let mut at_threshold: Vec<u64> = Vec::new();
        for s in self.slots.iter().filter(|s| s.left != EMPTY) {
            let p = Pair::new(s.left, s.right);
            if s.rec.freq < threshold {
                victims.push(p.pack());
            } else if s.rec.freq == threshold {
                at_threshold.push(p.order_key());
            }
        }
        let take = need - below;
        // keep the (len - take) smallest order keys, evict the rest
        let keep = at_threshold.len() - take;
        if keep > 0 {
            at_threshold.select_nth_unstable(keep - 1);
        }
        let evicted_at = &at_threshold[keep..];
        let best_key = *evicted_at.iter().min().expect("at least one pair at the threshold");
        let best = pair_of_key(best_key);
        victims.extend(evicted_at.iter().map(|&k| pair_of_key(k).pack()));
        drop(at_threshold);
        for k in victims {
            let rec = self.remove(Pair::unpack(k)).expect("victim is present");
            if rec.needs_sync() {
                unsynced.push((rec.pos, rec.len));
            }
        }
        self.stats.evicted_pairs += need;
        Some((threshold, best))
    }
}

/// Inverse of [`Pair::order_key`].
fn pair_of_key(key: u64) -> Pair {
    let max = (key >> 32) as u32;
    let min = ((key & 0xffff_ffff) >> 1) as u32;
    if key & 1 == 1 {
        Pair::new(max, min)
    } else {
        Pair::new(min, max)
    }
}

impl PairQueue for LfQueue {
    fn get(&self, pair: Pair) -> Option<PairRecord> {
        self.find(pair).map(|i| self.slots[i].rec)
    }

    fn insert(&mut self, pair: Pair, rec: PairRecord) -> Result<()> {
        if rec.freq < 2 || rec.freq > self.max_freq {
            return Err(Error::contract(format!(
                "frequency {} of {pair:?} outside [2, {}]",
                rec.freq, self.max_freq
            )));
        }
        if pair.left == EMPTY {
            return Err(Error::contract("reserved symbol in pair"));
        }
        if self.find(pair).is_some() {
            return Err(Error::contract(format!("pair {pair:?} inserted twice")));
        }
        if self.size == self.capacity {
            self.evict(&mut Vec::new());
        }
        if 2 * (self.size + 1) > self.slots.len() {
            self.grow();
        }
        let n = self.slots.len();
        let mut i = self.home(pair);
        while self.slots[i].left != EMPTY {
            i += 1;
            if i == n {
                i = 0;
            }
        }
        self.slots[i] = Slot {
            left: pair.left,
            right: pair.right,
            rec,
        };
        self.size += 1;
        self.stats.inserts += 1;
        if rec.freq > self.max_f {
            if self.extracting {
                self.stats.max_f_raises += 1;
            }
            self.max_f = rec.freq;
            self.ext = 0;
            self.sorted_end = 0;
        }
        self.append(rec.freq, pair);
        Ok(())
    }

    fn decrease(&mut self, pair: Pair) -> Result<Decrease> {
        let i = self
            .find(pair)
            .ok_or_else(|| Error::contract(format!("pair {pair:?} is not in the low-frequency queue")))?;
        self.stats.decreases += 1;
        let f = self.slots[i].rec.freq;
        if f <= 2 {
            let rec = self.remove(pair)?;
            return Ok(Decrease::Removed(PairRecord { freq: f - 1, ..rec }));
        }
        self.slots[i].rec.freq = f - 1;
        let rec = self.slots[i].rec;
        self.append(f - 1, pair);
        self.mark_deleted(f);
        Ok(Decrease::Kept(rec))
    }

    fn remove(&mut self, pair: Pair) -> Result<PairRecord> {
        let i = self
            .find(pair)
            .ok_or_else(|| Error::contract(format!("pair {pair:?} is not in the low-frequency queue")))?;
        let rec = self.slots[i].rec;
        self.delete_slot(i);
        self.mark_deleted(rec.freq);
        Ok(rec)
    }

    fn set_interval(&mut self, pair: Pair, pos: u32, len: u32) -> Result<()> {
        let i = self
            .find(pair)
            .ok_or_else(|| Error::contract(format!("pair {pair:?} is not in the low-frequency queue")))?;
        self.slots[i].rec.pos = pos;
        self.slots[i].rec.len = len;
        Ok(())
    }

    fn max(&mut self) -> Option<Pair> {
        self.extracting = true;
        loop {
            if self.size == 0 {
                return None;
            }
            if !self.active_is_sorted() {
                self.sort_active();
            }
            let f = self.max_f;
            if let Some(Some(b)) = self.buckets.get(f as usize) {
                while self.ext < b.keys.len() {
                    let key = b.keys[self.ext];
                    if self.is_live(key, f) {
                        return Some(Pair::unpack(key));
                    }
                    self.ext += 1;
                }
            }
            // every entry of F[max_f] is stale
            if let Some(slot) = self.buckets.get_mut(f as usize) {
                *slot = None;
            }
            debug_assert!(f > 2, "live pairs remain below frequency 2");
            self.max_f = f - 1;
            self.ext = 0;
            self.sorted_end = 0;
        }
    }

    fn len(&self) -> usize {
        self.size
    }

    fn is_full(&self) -> bool {
        self.size == self.capacity
    }

    fn evict_low_half(&mut self, unsynced: &mut Vec<(u32, u32)>) -> Option<(u32, Pair)> {
        self.evict(unsynced)
    }

    fn records(&self) -> Vec<(Pair, PairRecord)> {
        self.slots
            .iter()
            .filter(|s| s.left != EMPTY)
            .map(|s| (Pair::new(s.left, s.right), s.rec))
            .collect()
    }

    fn check_structure(&self) -> Result<()> {
        if self.size > self.capacity {
            return Err(Error::contract(format!("{} pairs exceed capacity {}", self.size, self.capacity)));
        }
        if 2 * self.size > self.slots.len() {
            return Err(Error::contract("map load above one half"));
        }
        if self.violations > 0 || !self.buckets_within_trigger() {
            return Err(Error::contract("a bucket holds more stale entries than its rebuild trigger allows"));
        }
        let listed: HashSet<(u64, usize)> = self
            .buckets
            .iter()
            .enumerate()
            .filter_map(|(f, b)| b.as_ref().map(|b| (f, b)))
            .flat_map(|(f, b)| b.keys.iter().map(move |&k| (k, f)))
            .collect();
        for (p, r) in self.records() {
            if !listed.contains(&(p.pack(), r.freq as usize)) {
                return Err(Error::contract(format!("{p:?} is missing from bucket {}", r.freq)));
            }
            if r.freq > self.max_f {
                return Err(Error::contract(format!("{p:?} has frequency above max_f {}", self.max_f)));
            }
        }
        Ok(())
    }
}
