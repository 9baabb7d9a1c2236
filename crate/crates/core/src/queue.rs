//! Types shared by the high- and low-frequency pair queues.

use crate::error::Result;
use crate::grammar::Pair;

/// Location and frequency of a tracked pair: its positions live in
/// `TP[pos .. pos + len]` and it occurs `freq` times without overlaps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct PairRecord {
    pub pos: u32,
    pub len: u32,
    pub freq: u32,
}

impl PairRecord {
    pub fn new(pos: u32, len: u32, freq: u32) -> Self {
        PairRecord { pos, len, freq }
    }

    /// `F <= L <= 2F`.
    pub fn is_balanced(&self) -> bool {
        self.freq <= self.len && u64::from(self.len) <= 2 * u64::from(self.freq)
    }

    /// Interval too loose: more than half of it is no longer the pair.
    pub fn needs_sync(&self) -> bool {
        2 * u64::from(self.freq) < u64::from(self.len)
    }
}

/// Outcome of decrementing a pair's frequency.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decrease {
    Kept(PairRecord),
    /// The pair dropped out of the queue; the record is its last state.
    Removed(PairRecord),
}

/// Operations the compression driver needs from either queue.
pub trait PairQueue {
    fn get(&self, pair: Pair) -> Option<PairRecord>;

    fn contains(&self, pair: Pair) -> bool {
        self.get(pair).is_some()
    }

    fn insert(&mut self, pair: Pair, rec: PairRecord) -> Result<()>;

    fn decrease(&mut self, pair: Pair) -> Result<Decrease>;

    fn remove(&mut self, pair: Pair) -> Result<PairRecord>;

    /// Replaces the TP interval of a present pair.
    fn set_interval(&mut self, pair: Pair, pos: u32, len: u32) -> Result<()>;

    /// Most frequent pair, ties broken by [`Pair::order_key`].
    fn max(&mut self) -> Option<Pair>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// True when the next insertion would exceed the capacity.
    fn is_full(&self) -> bool {
        false
    }

    /// Frees room by dropping the weaker half of the queue; returns the
    /// best dropped pair with its frequency. Intervals of dropped records
    /// that were due for synchronization are appended to `unsynced`.
    /// Unbounded queues drop nothing.
    fn evict_low_half(&mut self, unsynced: &mut Vec<(u32, u32)>) -> Option<(u32, Pair)> {
        let _ = unsynced;
        None
    }

    /// Live records, in unspecified order.
    fn records(&self) -> Vec<(Pair, PairRecord)>;

    /// Verifies internal invariants; meant for instrumented runs.
    fn check_structure(&self) -> Result<()> {
        Ok(())
    }
}
