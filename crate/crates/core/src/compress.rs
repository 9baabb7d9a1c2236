//! The Re-Pair driver: initial counting, the high-frequency phase, refill
//! rounds of the low-frequency phase, replacement and synchronization.
//!
//! Pairs are extracted in one total order (frequency, then
//! [`Pair::order_key`]). Each phase or round keeps a *cut*: a pair may sit in
//! the queue only if it ranks strictly above the cut. The high-frequency
//! phase cuts at the frequency threshold; a refill round starts cutting at
//! frequency 1 and raises the cut to the best pair it ever evicts. Pairs
//! that fall to or below the cut are dropped and found again by the next
//! refill, which keeps the extraction sequence identical to the one of a
//! full recount after every step.

use std::collections::BinaryHeap;

use crate::cluster::{cluster_slice, ClusterStats, ClusterTables, Segment};
use crate::error::{Error, Result};
use crate::grammar::{Grammar, Pair, Symbol};
use crate::hf_queue::{DenseIndex, HfQueue};
use crate::lf_queue::LfQueue;
use crate::queue::{Decrease, PairQueue, PairRecord};
use crate::text::SkippableText;

/// Words of LF-queue memory charged per tracked pair (map slots plus
/// bucket entries).
const LF_WORDS_PER_PAIR: usize = 16;
const LF_MIN_CAPACITY: usize = 4096;
// Refill counting tables may take up to n/16 words.
const COUNTING_SORT_DIVISOR: usize = 16;
// Clustering keeps a scratch word per entry for intervals up to n/32.
const CLUSTER_CACHE_DIVISOR: usize = 32;

#[derive(Clone, Debug)]
pub struct CompressConfig {
    /// Fraction of `n` (in words) given to the low-frequency queue.
    pub epsilon: f64,
    pub sigma: u32,
    /// Overrides the low-frequency queue capacity derived from `epsilon`.
    pub lf_capacity: Option<usize>,
    /// Check `F <= L <= 2F` for every record at every step.
    pub check_invariants: bool,
    /// Record every extraction.
    pub trace: bool,
}

impl Default for CompressConfig {
    fn default() -> Self {
        CompressConfig {
            epsilon: 0.25,
            sigma: 256,
            lf_capacity: None,
            check_invariants: false,
            trace: false,
        }
    }
}

impl CompressConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon {} is outside (0, 1]", self.epsilon)));
        }
        if self.sigma == 0 || self.sigma > 256 {
            return Err(Error::Config(format!("alphabet size {} is outside [1, 256]", self.sigma)));
        }
        if self.lf_capacity == Some(0) {
            return Err(Error::Config("low-frequency capacity must be positive".into()));
        }
        Ok(())
    }

    /// Capacity of the low-frequency queue for an input of length `n`.
    pub fn lf_capacity_for(&self, n: usize) -> usize {
        self.lf_capacity.unwrap_or_else(|| {
            let budget = (self.epsilon * n as f64 / LF_WORDS_PER_PAIR as f64) as usize;
            budget.max(LF_MIN_CAPACITY)
        })
    }
}

/// One replacement step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub freq: u32,
    pub pair: Pair,
    pub symbol: Symbol,
    /// 0 for the high-frequency phase, `k` for the `k`-th refill round.
    pub fill: u32,
}

/// Counters describing one compression run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub n: usize,
    pub cutoff: u32,
    pub hf_rules: usize,
    pub hf_max_calls: usize,
    /// Refill rounds that found at least one repeated pair.
    pub fills: u32,
    pub lf_capacity: usize,
    pub evictions: usize,
    pub evicted_pairs: usize,
    pub max_f_raises: usize,
    pub bucket_rebuilds: usize,
    pub syncs: usize,
    pub cluster_steps: usize,
    pub cluster_entries: usize,
    /// Discovered pairs that were already tracked. Always zero unless the
    /// interval bookkeeping is broken.
    pub already_tracked: usize,
    /// Largest TP array, in entries.
    pub tp_peak: usize,
}

#[derive(Clone, Debug)]
pub struct Compression {
    pub grammar: Grammar,
    pub final_text: Vec<Symbol>,
    pub run: RunStats,
    pub trace: Vec<Extraction>,
}

/// `⌈n^{2/3}⌉`.
pub fn hf_cutoff(n: usize) -> u32 {
    let c = (n as f64).powf(2.0 / 3.0).ceil() as u64;
    // guard against rounding just above an exact cube
    let c = if c > 1 && (c - 1).pow(3) >= (n as u64).pow(2) { c - 1 } else { c };
    c.max(1) as u32
}

/// `⌈n^{1/3}⌉`.
fn cube_root_ceil(n: usize) -> u32 {
    let mut r = (n as f64).cbrt().ceil() as u64;
    while r > 0 && (r - 1).pow(3) >= n as u64 {
        r -= 1;
    }
    while r.pow(3) < n as u64 {
        r += 1;
    }
    r as u32
}

/// Compresses `input` with the default configuration.
pub fn compress(input: &[u8]) -> Result<Compression> {
    compress_with(input, &CompressConfig::default())
}

pub fn compress_with(input: &[u8], config: &CompressConfig) -> Result<Compression> {
    config.validate()?;
    let text = SkippableText::from_bytes(input, config.sigma)?;
    let n = input.len();
    let mut d = Driver {
        text,
        tp: Vec::new(),
        grammar: Grammar::new(config.sigma),
        tables: ClusterTables::hashed(),
        cut: (0, 0),
        orphans: Vec::new(),
        touched: Vec::new(),
        touched_compact: 0,
        segments: Vec::new(),
        run: RunStats {
            n,
            cutoff: hf_cutoff(n),
            lf_capacity: config.lf_capacity_for(n),
            ..RunStats::default()
        },
        trace: Vec::new(),
        fill: 0,
        config: config.clone(),
    };

    d.hf_phase(input)?;

    let mut lf: Option<LfQueue> = None;
    loop {
        d.fill += 1;
        if !d.refill(&mut lf)? {
            break;
        }
        d.run.fills = d.fill;
        let q = lf.as_mut().expect("refill created the queue");
        d.extract_all(q)?;
    }
    if let Some(q) = lf.take() {
        d.absorb(q);
    }

    let Driver {
        text,
        grammar,
        run,
        trace,
        ..
    } = d;
    let final_text = text.extract_final_text();
    Ok(Compression {
        grammar,
        final_text,
        run,
        trace,
    })
}

struct Driver {
    text: SkippableText,
    tp: Vec<u32>,
    grammar: Grammar,
    tables: ClusterTables,
    // (freq, order key): admissible pairs rank strictly above this
    cut: (u32, u64),
    orphans: Vec<(u32, u32)>,
    touched: Vec<u64>,
    // length of `touched` after its last deduplication
    touched_compact: usize,
    segments: Vec<Segment>,
    run: RunStats,
    trace: Vec<Extraction>,
    fill: u32,
    config: CompressConfig,
}

/// One bit per TP entry, set where a new pair group starts.
struct GroupStarts {
    bits: Vec<u64>,
    len: usize,
}

impl GroupStarts {
    fn new(len: usize) -> Self {
        GroupStarts {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    fn set(&mut self, i: usize) {
        self.bits[i / 64] |= 1 << (i % 64);
    }

    /// First group start after `i`, or `len`.
    fn next_after(&self, i: usize) -> usize {
        let j = i + 1;
        if j >= self.len {
            return self.len;
        }
        let mut w = j / 64;
        let mut word = self.bits[w] & (!0u64 << (j % 64));
        loop {
            if word != 0 {
                return (w * 64 + word.trailing_zeros() as usize).min(self.len);
            }
            w += 1;
            if w == self.bits.len() {
                return self.len;
            }
            word = self.bits[w];
        }
    }
}

/// Positions of every pair start, grouped by pair in ascending pair order
/// with positions ascending inside each group, and the group starts.
///
/// With few distinct symbols a pair-count matrix lets two sequential
/// passes over the text place every position directly. Otherwise one
/// sequential pass distributes by left symbol and each left group is then
/// split in place by right symbol; a comparison sort covers universes too
/// large for either table.
fn sorted_positions(text: &SkippableText, universe: u32) -> (Vec<u32>, GroupStarts) {
    sorted_positions_within(text, universe, text.len() / COUNTING_SORT_DIVISOR)
}

/// [`sorted_positions`] with tables limited to about `budget` words.
fn sorted_positions_within(text: &SkippableText, universe: u32, budget: usize) -> (Vec<u32>, GroupStarts) {
    let len = text.live() - 1;
    let pair_at = |p: u32| text.current_pair(p as usize).expect("not the last symbol");
    let mut starts = GroupStarts::new(len);
    let u = universe as usize;
    if 3 * u > budget.max(1 << 16) {
        let mut tp: Vec<u32> = Vec::with_capacity(len);
        tp.extend(text.positions().take(len).map(|p| p as u32));
        tp.sort_unstable_by_key(|&p| (pair_at(p).pack(), p));
        let mut prev = None;
        for (i, &p) in tp.iter().enumerate() {
            let pair = Some(pair_at(p));
            if pair != prev {
                starts.set(i);
                prev = pair;
            }
        }
        return (tp, starts);
    }

    // dense ids of the symbols present, in symbol order
    let mut ids = vec![u32::MAX; u];
    for p in text.positions() {
        ids[text.symbol_at(p) as usize] = 0;
    }
    let mut k = 0;
    for v in ids.iter_mut().filter(|v| **v == 0) {
        *v = k;
        k += 1;
    }
    let k = k as usize;
    let id = |p: usize| ids[text.symbol_at(p) as usize] as usize;
    // consecutive live positions, as (position, left id, right id)
    let pairs = || {
        let mut it = text.positions();
        let mut prev = it.next().map(|p| (p, id(p)));
        std::iter::from_fn(move || {
            let (p, a) = prev?;
            let q = it.next()?;
            let b = id(q);
            prev = Some((q, b));
            Some((p as u32, a, b))
        })
    };
    let mut tp = vec![0u32; len];

    if k * k <= budget {
        let mut cell = vec![0u32; k * k];
        for (_, a, b) in pairs() {
            cell[a * k + b] += 1;
        }
        let mut pos = 0;
        for c in cell.iter_mut().filter(|c| **c > 0) {
            starts.set(pos as usize);
            let n = *c;
            *c = pos;
            pos += n;
        }
        for (p, a, b) in pairs() {
            let c = &mut cell[a * k + b];
            tp[*c as usize] = p;
            *c += 1;
        }
        return (tp, starts);
    }

    let mut next = vec![0u32; k];
    for (_, a, _) in pairs() {
        next[a] += 1;
    }
    let mut lefts = Vec::new();
    let mut pos = 0;
    for (a, c) in next.iter_mut().enumerate() {
        if *c > 0 {
            lefts.push((pos, a as u32));
            let n = *c;
            *c = pos;
            pos += n;
        }
    }
    for (p, a, _) in pairs() {
        tp[next[a] as usize] = p;
        next[a] += 1;
    }
    next.fill(0);
    let mut end = vec![0u32; k];
    let mut order = Vec::new();
    let mut rights = Vec::new();
    let mut small: Vec<(u32, u32)> = Vec::with_capacity(32);
    let right = |p: u32| ids[pair_at(p).right as usize];
    for (g, &(r, left)) in lefts.iter().enumerate() {
        let r = r as usize;
        let e = lefts.get(g + 1).map_or(len, |b| b.0 as usize);
        let group = &mut tp[r..e];
        if group.len() <= 32 {
            small.clear();
            small.extend(group.iter().map(|&p| (right(p), p)));
            small.sort_unstable();
            for (j, &(b, p)) in small.iter().enumerate() {
                group[j] = p;
                if j == 0 || small[j - 1].0 != b {
                    starts.set(r + j);
                }
            }
        } else {
            group_by_symbol(group, right, &mut end, &mut next, &mut order, &mut rights);
            for (h, &(s, b)) in rights.iter().enumerate() {
                starts.set(r + s as usize);
                if b == left {
                    let t = rights.get(h + 1).map_or(group.len(), |x| x.0 as usize);
                    group[s as usize..t].sort_unstable();
                }
            }
        }
    }
    (tp, starts)
}

/// In-place counting sort of `a` by `key`, which must be below the length
/// of `end` and `next`. Both tables are zero on entry and on return.
/// `bounds` receives `(start, key)` for every key present, ascending.
fn group_by_symbol(
    a: &mut [u32],
    key: impl Fn(u32) -> u32,
    end: &mut [u32],
    next: &mut [u32],
    order: &mut Vec<u32>,
    bounds: &mut Vec<(u32, u32)>,
) {
    for &v in a.iter() {
        let k = key(v) as usize;
        if end[k] == 0 {
            order.push(k as u32);
        }
        end[k] += 1;
    }
    order.sort_unstable();
    bounds.clear();
    let mut pos = 0;
    for &k in order.iter() {
        bounds.push((pos, k));
        let k = k as usize;
        next[k] = pos;
        pos += end[k];
        end[k] = pos;
    }
    for &k in order.iter() {
        let k = k as usize;
        while next[k] < end[k] {
            let i = next[k] as usize;
            let kk = key(a[i]) as usize;
            if kk == k {
                next[k] += 1;
            } else {
                let j = next[kk] as usize;
                a.swap(i, j);
                next[kk] += 1;
            }
        }
    }
    for &k in order.iter() {
        end[k as usize] = 0;
        next[k as usize] = 0;
    }
    order.clear();
}

/// Greedy non-overlapping count of a cluster of positions of `pair`;
/// positions must be ascending when `pair` is a run.
fn cluster_freq(text: &SkippableText, pair: Pair, positions: &[u32]) -> u32 {
    if !pair.is_run() {
        return positions.len() as u32;
    }
    let mut f = 0;
    let mut last: Option<usize> = None;
    for &p in positions {
        let p = p as usize;
        if last.is_some_and(|l| text.next_nonblank(l) == Some(p)) {
            continue;
        }
        last = Some(p);
        f += 1;
    }
    f
}

impl Driver {
    fn admissible(&self, freq: u32, pair: Pair) -> bool {
        freq > self.cut.0 || (freq == self.cut.0 && pair.order_key() < self.cut.1)
    }

    fn check_records<Q: PairQueue>(&self, q: &Q) -> Result<()> {
        q.check_structure()?;
        for (p, r) in q.records() {
            if !r.is_balanced() {
                return Err(Error::contract(format!(
                    "record of {p:?} breaks F <= L <= 2F: F={} L={}",
                    r.freq, r.len
                )));
            }
            if !self.admissible(r.freq, p) {
                return Err(Error::contract(format!("tracked pair {p:?} ranks below the cut")));
            }
        }
        Ok(())
    }

    /// Counts byte pairs directly and runs the high-frequency phase.
    fn hf_phase(&mut self, input: &[u8]) -> Result<()> {
        let n = input.len();
        let cutoff = self.run.cutoff.max(2);
        let sigma = self.config.sigma;
        let mut present = vec![false; sigma as usize];
        for &b in input {
            present[b as usize] = true;
        }
        let index = DenseIndex::new(sigma, &present, cube_root_ceil(n) + 2);

        // dense counts over present byte pairs
        let side = index.side() as usize;
        let cell = |a: u8, b: u8| {
            index.id(u32::from(a)).unwrap() as usize * side + index.id(u32::from(b)).unwrap() as usize
        };
        let mut freq = vec![0u32; side * side];
        let mut occ = vec![0u32; side * side];
        let mut last = vec![u32::MAX; side * side];
        for i in 0..n.saturating_sub(1) {
            let c = cell(input[i], input[i + 1]);
            occ[c] += 1;
            if i == 0 || last[c] != (i - 1) as u32 {
                freq[c] += 1;
                last[c] = i as u32;
            }
        }
        drop(last);

        // lay out TP for the selected pairs, ascending positions
        let mut start = vec![u32::MAX; side * side];
        let mut total = 0u32;
        for c in 0..side * side {
            if freq[c] >= cutoff {
                start[c] = total;
                total += occ[c];
            }
        }
        if total == 0 {
            return Ok(());
        }
        let mut q = HfQueue::new(index.clone());
        let mut fill = vec![0u32; side * side];
        self.tp = vec![0; total as usize];
        self.run.tp_peak = self.run.tp_peak.max(total as usize);
        for i in 0..n - 1 {
            let c = cell(input[i], input[i + 1]);
            if start[c] != u32::MAX {
                self.tp[(start[c] + fill[c]) as usize] = i as u32;
                fill[c] += 1;
            }
        }
        drop(fill);
        // dense id -> byte
        let byte_of: Vec<u32> = (0..sigma).filter(|&s| present[s as usize]).collect();
        for c in 0..side * side {
            if start[c] != u32::MAX {
                let pair = Pair::new(byte_of[c / side], byte_of[c % side]);
                q.insert(pair, PairRecord::new(start[c], occ[c], freq[c]))?;
            }
        }
        drop((freq, occ, start, byte_of));

        self.cut = (cutoff - 1, 0);
        self.tables = ClusterTables::dense(index).with_handle_cache(n / CLUSTER_CACHE_DIVISOR);
        self.extract_all(&mut q)?;
        self.run.hf_rules = self.grammar.len();
        self.run.hf_max_calls = q.max_calls();
        self.tables = ClusterTables::hashed().with_handle_cache(n / CLUSTER_CACHE_DIVISOR);
        self.tp = Vec::new();
        Ok(())
    }

    fn absorb(&mut self, q: LfQueue) {
        let s = q.stats();
        self.run.evictions += s.evictions;
        self.run.evicted_pairs += s.evicted_pairs;
        self.run.max_f_raises += s.max_f_raises;
        self.run.bucket_rebuilds += s.rebuilds;
    }

    /// Starts a refill round: recounts every pair of the current text and
    /// tracks the `capacity` best ones in a fresh queue. The cut becomes the
    /// best pair left out. Returns false when no pair repeats.
    fn refill(&mut self, lf: &mut Option<LfQueue>) -> Result<bool> {
        self.tp = Vec::new();
        if let Some(q) = lf.take() {
            self.absorb(q);
        }
        let live = self.text.live();
        if live < 2 {
            return Ok(false);
        }
        let text = &self.text;
        let (mut tp, starts) = sorted_positions(text, self.grammar.next_symbol());
        self.run.tp_peak = self.run.tp_peak.max(tp.len());

        // frequency histogram of the repeated pairs
        let mut hist: Vec<u32> = Vec::new();
        for (pair, r, e) in groups(text, &tp, &starts) {
            let f = cluster_freq(text, pair, &tp[r..e]) as usize;
            if f >= 2 {
                if hist.len() <= f {
                    hist.resize(f + 1, 0);
                }
                hist[f] += 1;
            }
        }
        if hist.is_empty() {
            return Ok(false);
        }

        // the cut admits exactly the `cap` best pairs (or all of them)
        let cap = self.run.lf_capacity.max(2);
        let mut above = 0usize;
        let mut cut = (1, 0);
        for f in (2..hist.len()).rev() {
            let c = hist[f] as usize;
            if above + c > cap {
                cut = (f as u32, 0);
                let room = cap - above;
                if room > 0 {
                    // keep the `room` smallest order keys among pairs of frequency f
                    let mut heap: BinaryHeap<u64> = BinaryHeap::with_capacity(room);
                    let mut best_out = u64::MAX;
                    for (pair, r, e) in groups(text, &tp, &starts) {
                        if cluster_freq(text, pair, &tp[r..e]) as usize != f {
                            continue;
                        }
                        let k = pair.order_key();
                        if heap.len() < room {
                            heap.push(k);
                        } else if k < *heap.peek().expect("room > 0") {
                            best_out = best_out.min(heap.pop().expect("room > 0"));
                            heap.push(k);
                        } else {
                            best_out = best_out.min(k);
                        }
                    }
                    cut.1 = best_out;
                }
                break;
            }
            above += c;
        }
        drop(hist);
        self.cut = cut;
        let admissible = |f: u32, pair: Pair| f > cut.0 || (f == cut.0 && pair.order_key() < cut.1);

        // keep only the admitted groups
        let mut kept = GroupStarts::new(tp.len());
        let mut w = 0;
        let mut r = 0;
        while r < tp.len() {
            let e = starts.next_after(r);
            let pair = text.current_pair(tp[r] as usize).expect("not the last symbol");
            if admissible(cluster_freq(text, pair, &tp[r..e]), pair) {
                kept.set(w);
                tp.copy_within(r..e, w);
                w += e - r;
            }
            r = e;
        }
        drop(starts);
        tp.truncate(w);
        tp.shrink_to_fit();
        kept.len = w;

        let max_freq = self.run.cutoff.saturating_sub(1).max(2);
        let q = lf.insert(LfQueue::new(cap, max_freq));
        q.set_checked(self.config.check_invariants);
        for (pair, r, e) in groups(text, &tp, &kept) {
            let f = cluster_freq(text, pair, &tp[r..e]);
            let rec = PairRecord::new(r as u32, (e - r) as u32, f);
            insert_tracked(q, &mut self.cut, &mut self.orphans, pair, rec)?;
        }
        self.tp = tp;
        Ok(true)
    }

    /// Extracts pairs until the queue runs dry.
    fn extract_all<Q: PairQueue>(&mut self, q: &mut Q) -> Result<()> {
        loop {
            if self.config.check_invariants {
                self.check_records(q)?;
            }
            if q.is_empty() {
                return Ok(());
            }
            let ab = q.max().expect("queue is not empty");
            let rec = q.get(ab).expect("max returns a tracked pair");
            if !self.admissible(rec.freq, ab) {
                return Err(Error::contract(format!("extracted {ab:?} ranks below the cut")));
            }
            self.replace_all(q, ab, rec)?;
        }
    }

    fn dec<Q: PairQueue>(&mut self, q: &mut Q, pair: Pair, ab: Pair) -> Result<()> {
        if pair == ab || !q.contains(pair) {
            return Ok(());
        }
        match q.decrease(pair)? {
            Decrease::Kept(_) => {
                self.touched.push(pair.pack());
                // keep the list proportional to the distinct pairs in it
                if self.touched.len() >= 2 * self.touched_compact + 64 {
                    self.touched.sort_unstable();
                    self.touched.dedup();
                    self.touched_compact = self.touched.len();
                }
            }
            Decrease::Removed(r) => self.orphans.push((r.pos, r.len)),
        }
        Ok(())
    }

    /// Length of the run of `a` ending at `i` (inclusive).
    fn run_left(&self, i: usize, a: Symbol) -> usize {
        let mut k = 1;
        let mut p = self.text.prev_nonblank(i);
        while let Some(x) = p {
            if self.text.symbol_at(x) != a {
                break;
            }
            k += 1;
            p = self.text.prev_nonblank(x);
        }
        k
    }

    /// Length of the run of `b` starting at `j` (inclusive).
    fn run_right(&self, j: usize, b: Symbol) -> usize {
        let mut k = 1;
        let mut p = self.text.next_nonblank(j);
        while let Some(y) = p {
            if self.text.symbol_at(y) != b {
                break;
            }
            k += 1;
            p = self.text.next_nonblank(y);
        }
        k
    }

    fn replace_all<Q: PairQueue>(&mut self, q: &mut Q, ab: Pair, rec: PairRecord) -> Result<()> {
        let (a, b) = (ab.left, ab.right);
        let x = self.grammar.push(ab, rec.freq);
        if self.config.trace {
            self.trace.push(Extraction {
                freq: rec.freq,
                pair: ab,
                symbol: x,
                fill: self.fill,
            });
        }
        let (pos, len) = (rec.pos as usize, rec.len as usize);
        if ab.is_run() {
            self.tp[pos..pos + len].sort_unstable();
        }
        let mut count = 0u32;
        for k in pos..pos + len {
            let i = self.tp[k] as usize;
            if self.text.current_pair(i) != Some(ab) {
                continue;
            }
            let j = self.text.next_nonblank(i).expect("a pair has a right symbol");
            if let Some(p) = self.text.prev_nonblank(i) {
                let xs = self.text.symbol_at(p);
                if xs != a {
                    self.dec(q, Pair::new(xs, a), ab)?;
                } else if a != b && self.run_left(i, a).is_multiple_of(2) {
                    self.dec(q, Pair::new(a, a), ab)?;
                }
            }
            if let Some(r) = self.text.next_nonblank(j) {
                let ys = self.text.symbol_at(r);
                if ys != b {
                    self.dec(q, Pair::new(b, ys), ab)?;
                } else if a != b && self.run_right(j, b).is_multiple_of(2) {
                    self.dec(q, Pair::new(b, b), ab)?;
                }
            }
            self.text.replace_pair_at(i, x)?;
            count += 1;
        }
        if count != rec.freq {
            return Err(Error::contract(format!(
                "pair {ab:?} replaced {count} times but was tracked at frequency {}",
                rec.freq
            )));
        }

        let gone = q.remove(ab)?;
        self.sync(q, None, gone.pos, gone.len)?;
        while let Some((p, l)) = self.orphans.pop() {
            self.sync(q, None, p, l)?;
        }
        let mut touched = std::mem::take(&mut self.touched);
        self.touched_compact = 0;
        touched.sort_unstable();
        touched.dedup();
        for &t in &touched {
            let pair = Pair::unpack(t);
            let Some(r) = q.get(pair) else { continue };
            if !self.admissible(r.freq, pair) {
                let r = q.remove(pair)?;
                self.sync(q, None, r.pos, r.len)?;
            } else if r.needs_sync() {
                self.sync(q, Some(pair), r.pos, r.len)?;
            }
            while let Some((p, l)) = self.orphans.pop() {
                self.sync(q, None, p, l)?;
            }
        }
        touched.clear();
        self.touched = touched;
        Ok(())
    }

    /// Re-clusters `TP[pos .. pos + len]`. The segment of `owner` becomes
    /// its new interval; every other admissible pair found is inserted.
    fn sync<Q: PairQueue>(&mut self, q: &mut Q, owner: Option<Pair>, pos: u32, len: u32) -> Result<()> {
        if len == 0 {
            if owner.is_some() {
                return Err(Error::contract("synchronizing an empty interval of a tracked pair"));
            }
            return Ok(());
        }
        self.run.syncs += 1;
        self.run.cluster_entries += len as usize;
        let (p0, p1) = (pos as usize, pos as usize + len as usize);
        let mut segments = std::mem::take(&mut self.segments);
        let mut cstats = ClusterStats::default();
        cluster_slice(&mut self.tp[p0..p1], &self.text, &mut self.tables, &mut segments, &mut cstats);
        self.run.cluster_steps += cstats.steps();

        // settle the owner first: inserting other pairs may evict it
        let mut owner_seen = false;
        for s in &segments {
            let (s0, s1) = (p0 + s.start as usize, p0 + (s.start + s.len) as usize);
            if s.pair.is_run() {
                self.tp[s0..s1].sort_unstable();
            }
            if Some(s.pair) == owner {
                owner_seen = true;
                let f = cluster_freq(&self.text, s.pair, &self.tp[s0..s1]);
                let cur = q.get(s.pair).expect("owner is tracked");
                if cur.freq != f {
                    return Err(Error::contract(format!(
                        "pair {:?} tracked at frequency {} but occurs {f} times",
                        s.pair, cur.freq
                    )));
                }
                q.set_interval(s.pair, s0 as u32, s.len)?;
            }
        }
        for s in &segments {
            if Some(s.pair) == owner {
                continue;
            }
            let (s0, s1) = (p0 + s.start as usize, p0 + (s.start + s.len) as usize);
            let f = cluster_freq(&self.text, s.pair, &self.tp[s0..s1]);
            if f < 2 || !self.admissible(f, s.pair) {
                continue;
            }
            if q.contains(s.pair) {
                self.run.already_tracked += 1;
                debug_assert!(false, "discovered pair {:?} is already tracked", s.pair);
                continue;
            }
            insert_tracked(q, &mut self.cut, &mut self.orphans, s.pair, PairRecord::new(s0 as u32, s.len, f))?;
        }
        self.segments = segments;
        if owner.is_some() && !owner_seen {
            return Err(Error::contract(format!("pair {owner:?} vanished from its interval")));
        }
        Ok(())
    }
}

/// Inserts an admissible pair, evicting first when the queue is full.
/// Evicted pairs whose intervals hold undiscovered pairs go to `orphans`.
/// Runs of equal pairs in a sorted position array, as (pair, start, end).
fn groups<'a>(
    text: &'a SkippableText,
    tp: &'a [u32],
    starts: &'a GroupStarts,
) -> impl Iterator<Item = (Pair, usize, usize)> + 'a {
    let mut r = 0;
    std::iter::from_fn(move || {
        if r >= tp.len() {
            return None;
        }
        let pair = text.current_pair(tp[r] as usize).expect("not the last symbol");
        let e = starts.next_after(r);
        let g = (pair, r, e);
        r = e;
        Some(g)
    })
}

fn insert_tracked<Q: PairQueue>(
    q: &mut Q,
    cut: &mut (u32, u64),
    orphans: &mut Vec<(u32, u32)>,
    pair: Pair,
    rec: PairRecord,
) -> Result<()> {
    let admissible = |cut: (u32, u64)| rec.freq > cut.0 || (rec.freq == cut.0 && pair.order_key() < cut.1);
    if !admissible(*cut) {
        return Ok(());
    }
    if q.is_full() {
        if let Some((f, p)) = q.evict_low_half(orphans) {
            let c = (f, p.order_key());
            if c.0 > cut.0 || (c.0 == cut.0 && c.1 < cut.1) {
                *cut = c;
            }
        }
        if !admissible(*cut) {
            return Ok(());
        }
    }
    q.insert(pair, rec)
}
