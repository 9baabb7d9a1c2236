//! Grammar symbols, character pairs and the straight-line program produced
//! by the compressor.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// A text or grammar symbol. Values below `sigma` are terminals, values
/// `sigma + i` name the `i`-th rule.
pub type Symbol = u32;

/// Largest supported input length (exclusive). Positions and symbols fit in
/// 31 bits.
pub const MAX_INPUT_LEN: usize = 1 << 31;

/// An ordered pair of adjacent symbols.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub left: Symbol,
    pub right: Symbol,
}

impl Pair {
    #[inline]
    pub const fn new(left: Symbol, right: Symbol) -> Self {
        Pair { left, right }
    }

    #[inline]
    pub fn pack(self) -> u64 {
        (u64::from(self.left) << 32) | u64::from(self.right)
    }

    #[inline]
    pub fn unpack(packed: u64) -> Self {
        Pair {
            left: (packed >> 32) as u32,
            right: packed as u32,
        }
    }

    #[inline]
    pub fn max(self) -> Symbol {
        self.left.max(self.right)
    }

    #[inline]
    pub fn min(self) -> Symbol {
        self.left.min(self.right)
    }

    #[inline]
    pub fn is_run(self) -> bool {
        self.left == self.right
    }

    /// Extraction key among pairs of equal frequency: larger symbol first,
    /// then smaller symbol, then left symbol. Smaller keys are extracted
    /// first.
    #[inline]
    pub fn order_key(self) -> u64 {
        (u64::from(self.max()) << 32) | (u64::from(self.min()) << 1) | u64::from(self.left > self.right)
    }
}

impl fmt::Debug for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.left, self.right)
    }
}

/// Total extraction order: higher frequency first, ties by [`Pair::order_key`].
#[inline]
pub fn extraction_cmp(freq_a: u32, a: Pair, freq_b: u32, b: Pair) -> Ordering {
    freq_b
        .cmp(&freq_a)
        .then_with(|| a.order_key().cmp(&b.order_key()))
}

/// Re-Pair grammar: rule `i` rewrites symbol `sigma + i` into its pair.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Grammar {
    sigma: u32,
    rules: Vec<Pair>,
    // (frequency, number of consecutive rules extracted at that frequency)
    freq_runs: Vec<(u32, u32)>,
}

impl Grammar {
    pub fn new(sigma: u32) -> Self {
        Grammar {
            sigma,
            rules: Vec::new(),
            freq_runs: Vec::new(),
        }
    }

    /// Builds a grammar from explicit rules, validating that no rule refers
    /// to itself or to a later rule. Substitution frequencies are unknown.
    pub fn from_rules(sigma: u32, rules: Vec<Pair>) -> Result<Self> {
        let g = Grammar {
            sigma,
            rules,
            freq_runs: Vec::new(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn sigma(&self) -> u32 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[Pair] {
        &self.rules
    }

    /// Symbol defined by rule `i`.
    pub fn symbol_of(&self, i: usize) -> Symbol {
        self.sigma + i as u32
    }

    /// The symbol the next pushed rule will define.
    pub fn next_symbol(&self) -> Symbol {
        self.sigma + self.rules.len() as u32
    }

    /// Appends a rule extracted at frequency `freq` and returns its symbol.
    pub fn push(&mut self, pair: Pair, freq: u32) -> Symbol {
        let x = self.next_symbol();
        self.rules.push(pair);
        match self.freq_runs.last_mut() {
            Some((f, count)) if *f == freq => *count += 1,
            _ => self.freq_runs.push((freq, 1)),
        }
        x
    }

    pub(crate) fn set_freq_runs(&mut self, runs: Vec<(u32, u32)>) {
        self.freq_runs = runs;
    }

    /// Run-length form of the per-rule substitution frequencies.
    pub fn freq_runs(&self) -> &[(u32, u32)] {
        &self.freq_runs
    }

    /// Frequency of every rule at substitution time, when recorded.
    pub fn substitution_freqs(&self) -> Option<Vec<u32>> {
        let total: u64 = self.freq_runs.iter().map(|&(_, c)| u64::from(c)).sum();
        if total != self.rules.len() as u64 {
            return None;
        }
        let mut out = Vec::with_capacity(self.rules.len());
        for &(f, c) in &self.freq_runs {
            out.extend(std::iter::repeat_n(f, c as usize));
        }
        Some(out)
    }

    /// Number of distinct substitution-time frequencies (M), when recorded.
    pub fn distinct_freqs(&self) -> Option<usize> {
        self.substitution_freqs()?;
        let set: BTreeSet<u32> = self.freq_runs.iter().map(|&(f, _)| f).collect();
        Some(set.len())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.rules.iter().enumerate() {
            let x = self.symbol_of(i);
            if r.left >= x || r.right >= x {
                return Err(Error::Grammar(format!(
                    "rule {i} ({x} -> {} {}) refers to itself or a later rule",
                    r.left, r.right
                )));
            }
        }
        Ok(())
    }

    /// Length of the expansion of every rule.
    pub fn expansion_lengths(&self) -> Vec<u64> {
        let mut lens: Vec<u64> = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            let len = |s: Symbol, lens: &[u64]| {
                if s < self.sigma {
                    1
                } else {
                    lens[(s - self.sigma) as usize]
                }
            };
            let l = len(r.left, &lens).saturating_add(len(r.right, &lens));
            lens.push(l);
        }
        lens
    }

    /// Expands `text` through the grammar. Symbols must be valid for this
    /// grammar; terminals must fit in a byte.
    pub fn expand(&self, text: &[Symbol]) -> Result<Vec<u8>> {
        let lens = self.expansion_lengths();
        let mut total: u64 = 0;
        for &s in text {
            total = total.saturating_add(self.symbol_len(s, &lens)?);
        }
        let mut out = Vec::with_capacity(total as usize);
        self.expand_into(text, &mut out)?;
        Ok(out)
    }

    pub(crate) fn symbol_len(&self, s: Symbol, lens: &[u64]) -> Result<u64> {
        if s < self.sigma {
            Ok(1)
        } else {
            lens.get((s - self.sigma) as usize)
                .copied()
                .ok_or_else(|| Error::corrupt(format!("symbol {s} has no rule")))
        }
    }

    pub(crate) fn expand_into(&self, text: &[Symbol], out: &mut Vec<u8>) -> Result<()> {
        let mut stack: Vec<Symbol> = Vec::new();
        for &s in text {
            stack.push(s);
            while let Some(top) = stack.pop() {
                if top < self.sigma {
                    let byte = u8::try_from(top)
                        .map_err(|_| Error::corrupt(format!("terminal {top} does not fit a byte")))?;
                    out.push(byte);
                } else {
                    let r = self
                        .rules
                        .get((top - self.sigma) as usize)
                        .ok_or_else(|| Error::corrupt(format!("symbol {top} has no rule")))?;
                    stack.push(r.right);
                    stack.push(r.left);
                }
            }
        }
        Ok(())
    }
}
