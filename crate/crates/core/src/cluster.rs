//! In-place clustering of a position array by the pair starting at each
//! position, in time linear in the array length.
//!
//! Two tables keyed by pair hold, per pair, an occurrence counter (`c1`)
//! and the start of its cluster (`c2`). During the high-frequency phase the
//! tables are dense matrices over the small symbol universe; later they are
//! backed by an open-addressing map whose touched slots are logged so the
//! reset costs no more than the clustering itself.

use crate::grammar::Pair;
use crate::hf_queue::DenseIndex;
use crate::text::SkippableText;

const NULL: u32 = u32::MAX;
const EMPTY_KEY: u64 = u64::MAX;

/// One cluster: `A[start .. start + len]` all start `pair`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub pair: Pair,
    pub start: u32,
    pub len: u32,
}

/// Elementary step counters of one `cluster()` call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClusterStats {
    /// Entries visited by the counting and layout loops plus advances of
    /// the placement cursor.
    pub scans: usize,
    pub swaps: usize,
    /// Entries dropped because they no longer start a pair.
    pub dropped: usize,
}

impl ClusterStats {
    pub fn steps(&self) -> usize {
        self.scans + self.swaps
    }
}

#[derive(Clone, Copy, Debug)]
struct Slot {
    key: u64,
    c1: u32,
    c2: u32,
    // position in `touched`, which survives a resize
    handle: u32,
}

const EMPTY_SLOT: Slot = Slot {
    key: EMPTY_KEY,
    c1: 0,
    c2: NULL,
    handle: 0,
};

#[derive(Debug)]
enum Backing {
    Dense {
        index: DenseIndex,
        c1: Vec<u32>,
        c2: Vec<u32>,
    },
    Hashed {
        slots: Vec<Slot>,
        touched: Vec<u32>,
    },
}

/// The `c1`/`c2` tables, reused across calls.
#[derive(Debug)]
pub struct ClusterTables {
    backing: Backing,
    // per-entry handles, so later passes need not re-read the text
    handles: Vec<u32>,
    handle_limit: usize,
}

#[inline]
fn hash(key: u64) -> u64 {
    let h = key.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h ^ (h >> 29)
}

impl ClusterTables {
    /// Dense tables over the pairs addressable by `index`.
    pub fn dense(index: DenseIndex) -> Self {
        let cells = index.cells();
        Self::with_backing(Backing::Dense {
            index,
            c1: vec![0; cells],
            c2: vec![NULL; cells],
        })
    }

    /// Hash-backed tables for an unbounded universe.
    pub fn hashed() -> Self {
        Self::with_backing(Backing::Hashed {
            slots: Vec::new(),
            touched: Vec::new(),
        })
    }

    fn with_backing(backing: Backing) -> Self {
        ClusterTables {
            backing,
            handles: Vec::new(),
            handle_limit: 0,
        }
    }

    /// Arrays of at most `limit` entries are clustered with one text read
    /// per entry, using a scratch word per entry.
    pub fn with_handle_cache(mut self, limit: usize) -> Self {
        self.handle_limit = limit;
        self
    }

    pub fn heap_bytes(&self) -> usize {
        let scratch = self.handles.capacity() * 4;
        scratch
            + match &self.backing {
                Backing::Dense { c1, c2, .. } => (c1.capacity() + c2.capacity()) * 4,
                Backing::Hashed { slots, touched } => {
                    slots.capacity() * std::mem::size_of::<Slot>() + touched.capacity() * 4
                }
            }
    }

    /// True when every entry is back to 0/NULL.
    pub fn is_clean(&self) -> bool {
        match &self.backing {
            Backing::Dense { c1, c2, .. } => {
                c1.iter().all(|&v| v == 0) && c2.iter().all(|&v| v == NULL)
            }
            Backing::Hashed { slots, touched } => {
                touched.is_empty()
                    && slots
                        .iter()
                        .all(|s| s.key == EMPTY_KEY && s.c1 == 0 && s.c2 == NULL)
            }
        }
    }

    fn prepare(&mut self) {
        if let Backing::Hashed { slots, .. } = &mut self.backing {
            if slots.is_empty() {
                *slots = vec![EMPTY_SLOT; 64];
            }
        }
    }

    // Doubles the map, keeping the load factor at most one half.
    fn grow(slots: &mut Vec<Slot>, touched: &mut [u32]) {
        let mut bigger = vec![EMPTY_SLOT; slots.len() * 2];
        let mask = bigger.len() - 1;
        for t in touched.iter_mut() {
            let s = slots[*t as usize];
            let mut i = (hash(s.key) as usize) & mask;
            while bigger[i].key != EMPTY_KEY {
                i = (i + 1) & mask;
            }
            bigger[i] = s;
            *t = i as u32;
        }
        *slots = bigger;
    }

    /// Stable handle of `pair`'s entry, created when absent.
    #[inline]
    fn handle(&mut self, pair: Pair) -> u32 {
        match &mut self.backing {
            Backing::Dense { index, .. } => index
                .index(pair)
                .unwrap_or_else(|| panic!("pair {pair:?} is outside the dense cluster universe"))
                as u32,
            Backing::Hashed { slots, touched } => {
                if 2 * (touched.len() + 1) > slots.len() {
                    Self::grow(slots, touched);
                }
                let key = pair.pack();
                let mask = slots.len() - 1;
                let mut i = (hash(key) as usize) & mask;
                loop {
                    if slots[i].key == key {
                        return slots[i].handle;
                    }
                    if slots[i].key == EMPTY_KEY {
                        let h = touched.len() as u32;
                        slots[i].key = key;
                        slots[i].handle = h;
                        touched.push(i as u32);
                        return h;
                    }
                    i = (i + 1) & mask;
                }
            }
        }
    }

    /// (c1, c2) behind a handle.
    #[inline]
    fn at(&mut self, h: u32) -> (&mut u32, &mut u32) {
        match &mut self.backing {
            Backing::Dense { c1, c2, .. } => (&mut c1[h as usize], &mut c2[h as usize]),
            Backing::Hashed { slots, touched } => {
                let s = &mut slots[touched[h as usize] as usize];
                (&mut s.c1, &mut s.c2)
            }
        }
    }

    fn reset(&mut self, segments: &[Segment]) {
        match &mut self.backing {
            Backing::Dense { index, c1, c2 } => {
                for s in segments {
                    let i = index.index(s.pair).expect("segment pair was addressable");
                    c1[i] = 0;
                    c2[i] = NULL;
                }
            }
            Backing::Hashed { slots, touched } => {
                for &i in touched.iter() {
                    slots[i as usize] = EMPTY_SLOT;
                }
                touched.clear();
            }
        }
    }
}

/// Clusters `a` by current pair. Entries that no longer start a pair are
/// dropped first and `a` is truncated to the valid entries. Clusters are
/// laid out in order of first appearance in the (compacted) input.
pub fn cluster(
    a: &mut Vec<u32>,
    text: &SkippableText,
    tables: &mut ClusterTables,
) -> (Vec<Segment>, ClusterStats) {
    let mut stats = ClusterStats::default();
    let mut segments = Vec::new();
    let m = cluster_slice(a, text, tables, &mut segments, &mut stats);
    a.truncate(m);
    (segments, stats)
}

/// Slice form of [`cluster`]: returns the number of valid entries, which
/// now occupy `a[..m]`; `a[m..]` holds garbage.
pub fn cluster_slice(
    a: &mut [u32],
    text: &SkippableText,
    tables: &mut ClusterTables,
    segments: &mut Vec<Segment>,
    stats: &mut ClusterStats,
) -> usize {
    segments.clear();

    let mut m = 0;
    for k in 0..a.len() {
        let p = a[k];
        if text.current_pair(p as usize).is_some() {
            a[m] = p;
            m += 1;
        }
    }
    stats.dropped += a.len() - m;
    let a = &mut a[..m];
    if m == 0 {
        return 0;
    }
    tables.prepare();
    let mut handles = std::mem::take(&mut tables.handles);
    handles.clear();
    let cached = m <= tables.handle_limit;
    let handle_of = |tables: &mut ClusterTables, handles: &[u32], a: &[u32], k: usize| {
        if cached {
            handles[k]
        } else {
            tables.handle(pair_at(text, a[k]))
        }
    };

    // count
    for &p in a.iter() {
        stats.scans += 1;
        let h = tables.handle(pair_at(text, p));
        *tables.at(h).0 += 1;
        if cached {
            handles.push(h);
        }
    }

    // lay out clusters in first-appearance order; c1 becomes "placed"
    let mut next = 0u32;
    for k in 0..m {
        stats.scans += 1;
        let h = handle_of(tables, &handles, a, k);
        let (c1, c2) = tables.at(h);
        if *c2 == NULL {
            *c2 = next;
            let len = *c1;
            *c1 = 0;
            segments.push(Segment {
                pair: pair_at(text, a[k]),
                start: next,
                len,
            });
            next += len;
        }
    }

    // place; everything left of j is final
    let mut j = 0usize;
    while j < m {
        let h = handle_of(tables, &handles, a, j);
        let (c1, c2) = tables.at(h);
        let start = *c2 as usize;
        let dest = start + *c1 as usize;
        if start <= j && j < dest {
            j += 1;
            stats.scans += 1;
        } else if dest == j {
            *c1 += 1;
            j += 1;
            stats.scans += 1;
        } else {
            *c1 += 1;
            a.swap(j, dest);
            if cached {
                handles.swap(j, dest);
            }
            stats.swaps += 1;
        }
    }

    tables.reset(segments);
    tables.handles = handles;
    m
}

#[inline]
fn pair_at(text: &SkippableText, p: u32) -> Pair {
    text.current_pair(p as usize).expect("compacted entries start a pair")
}
