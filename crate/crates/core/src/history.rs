//! Bit-packed binary detection histories for one detector and one row.
//!
//! A history is a `K x J` binary array stored trap-major: each trap owns
//! `ceil(J / 64)` words, so per-trap counts and overlap tests are popcounts.

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct History {
    traps: usize,
    occasions: usize,
    words_per_trap: usize,
    bits: Vec<u64>,
}

impl History {
    pub fn new(traps: usize, occasions: usize) -> Self {
        let words_per_trap = occasions.div_ceil(64).max(1);
        Self {
            traps,
            occasions,
            words_per_trap,
            bits: vec![0; traps * words_per_trap],
        }
    }

    pub fn traps(&self) -> usize {
        self.traps
    }

    pub fn occasions(&self) -> usize {
        self.occasions
    }

    #[inline]
    fn slot(&self, k: usize, t: usize) -> (usize, u64) {
        debug_assert!(k < self.traps && t < self.occasions);
        (k * self.words_per_trap + t / 64, 1u64 << (t % 64))
    }

    #[inline]
    pub fn get(&self, k: usize, t: usize) -> bool {
        let (w, mask) = self.slot(k, t);
        self.bits[w] & mask != 0
    }

    pub fn set(&mut self, k: usize, t: usize, value: bool) {
        let (w, mask) = self.slot(k, t);
        if value {
            self.bits[w] |= mask;
        } else {
            self.bits[w] &= !mask;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// Total number of ones.
    pub fn count(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    #[inline]
    fn trap_words(&self, k: usize) -> &[u64] {
        let start = k * self.words_per_trap;
        &self.bits[start..start + self.words_per_trap]
    }

    /// Number of occasions with a detection at trap `k`.
    pub fn trap_count(&self, k: usize) -> u32 {
        self.trap_words(k).iter().map(|w| w.count_ones()).sum()
    }

    /// Number of occasions at trap `k` where either history has a detection.
    pub fn union_trap_count(&self, other: &History, k: usize) -> u32 {
        self.trap_words(k)
            .iter()
            .zip(other.trap_words(k))
            .map(|(a, b)| (a | b).count_ones())
            .sum()
    }

    /// True if some `(k, t)` cell is set in both histories.
    pub fn overlaps(&self, other: &History) -> bool {
        debug_assert_eq!(self.bits.len(), other.bits.len());
        self.bits.iter().zip(&other.bits).any(|(a, b)| a & b != 0)
    }

    /// Cell-wise OR, in place.
    pub fn union_with(&mut self, other: &History) {
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    /// All `(k, t)` cells that are set, in trap-major order.
    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.traps).flat_map(move |k| {
            (0..self.occasions).filter_map(move |t| self.get(k, t).then_some((k, t)))
        })
    }
}
