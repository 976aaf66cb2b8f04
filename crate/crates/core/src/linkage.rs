//! Zero-augmented detector arrays and the latent linkage between the two lists.
//!
//! Rows of the detector-1 (left) array define the true individual indices.
//! The left array holds the `n_full` fully identified rows, then the
//! left-only rows, then all-zero padding. The detector-2 (right) array holds
//! the same fully identified rows, then the right-only rows, then padding.
//! A [`Linkage`] maps every right row to the true index it belongs to; the
//! fully identified block is always mapped to itself.

use crate::error::{Error, Result};
use crate::history::History;
use crate::model::{CaptureData, RowKind, Sex, SufficientStats};

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedData {
    m: usize,
    traps: usize,
    occasions: usize,
    n_full: usize,
    n_left: usize,
    n_right: usize,
    pub left: Vec<History>,
    pub right: Vec<History>,
    pub left_kind: Vec<RowKind>,
    pub right_kind: Vec<RowKind>,
    pub left_sex: Vec<Sex>,
    pub right_sex: Vec<Sex>,
    /// Source ids, `None` for padding rows.
    pub left_id: Vec<Option<String>>,
    pub right_id: Vec<Option<String>>,
}

impl AugmentedData {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn traps(&self) -> usize {
        self.traps
    }

    pub fn occasions(&self) -> usize {
        self.occasions
    }

    pub fn n_full(&self) -> usize {
        self.n_full
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    /// Right rows holding a single-flank record.
    pub fn right_only_rows(&self) -> std::ops::Range<usize> {
        self.n_full..self.n_full + self.n_right
    }

    /// Rows of the left array holding a single-flank record.
    pub fn left_only_rows(&self) -> std::ops::Range<usize> {
        self.n_full..self.n_full + self.n_left
    }

    /// Sufficient statistics of true index `i` when right row `r` is linked to it.
    pub fn stats_for(&self, i: usize, r: usize) -> SufficientStats {
        SufficientStats::from_histories(&self.left[i], &self.right[r])
    }

    pub fn all_stats(&self, link: &Linkage) -> Vec<SufficientStats> {
        (0..self.m)
            .map(|i| self.stats_for(i, link.right_row(i)))
            .collect()
    }

    pub fn is_detected(&self, i: usize, r: usize) -> bool {
        self.left_kind[i] != RowKind::AllZero || self.right_kind[r] != RowKind::AllZero
    }

    /// Observed sex of true index `i` when linked to right row `r`.
    pub fn observed_sex(&self, i: usize, r: usize) -> Option<Sex> {
        self.left_sex[i].combine(self.right_sex[r])
    }

    /// Whether left row `i` and right row `r` may belong to the same animal.
    pub fn pair_feasible(&self, i: usize, r: usize) -> bool {
        match (i < self.n_full, r < self.n_full) {
            (true, true) => i == r,
            (false, false) => merge_feasible(
                &self.left[i],
                &self.right[r],
                self.left_sex[i],
                self.right_sex[r],
            ),
            _ => false,
        }
    }

    /// Checks the structural constraints a linkage must satisfy.
    pub fn check_linkage(&self, link: &Linkage) -> Result<()> {
        if link.len() != self.m {
            return Err(Error::Permutation(format!(
                "linkage has length {}, expected M = {}",
                link.len(),
                self.m
            )));
        }
        for i in 0..self.m {
            let r = link.right_row(i);
            if !self.pair_feasible(i, r) {
                return Err(Error::Permutation(format!(
                    "right row {r} cannot be linked to true index {i}"
                )));
            }
        }
        Ok(())
    }
}

/// Bijection between right-array rows and true individual indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Linkage {
    to_true: Vec<usize>,
    to_right: Vec<usize>,
}

impl Linkage {
    pub fn identity(m: usize) -> Self {
        Self {
            to_true: (0..m).collect(),
            to_right: (0..m).collect(),
        }
    }

    /// `to_true[r]` is the true index of right row `r`.
    pub fn from_vec(to_true: Vec<usize>) -> Result<Self> {
        let m = to_true.len();
        let mut to_right = vec![usize::MAX; m];
        for (r, &i) in to_true.iter().enumerate() {
            if i >= m {
                return Err(Error::Permutation(format!("index {i} out of range for M = {m}")));
            }
            if to_right[i] != usize::MAX {
                return Err(Error::Permutation(format!("index {i} appears twice")));
            }
            to_right[i] = r;
        }
        Ok(Self { to_true, to_right })
    }

    pub fn len(&self) -> usize {
        self.to_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_true.is_empty()
    }

    #[inline]
    pub fn true_index(&self, r: usize) -> usize {
        self.to_true[r]
    }

    #[inline]
    pub fn right_row(&self, i: usize) -> usize {
        self.to_right[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.to_true
    }

    pub fn inverse(&self) -> Linkage {
        Linkage {
            to_true: self.to_right.clone(),
            to_right: self.to_true.clone(),
        }
    }

    /// Exchanges the right rows linked to true indices `a` and `b`.
    pub fn swap_true(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.to_right[a], self.to_right[b]);
        self.to_right.swap(a, b);
        self.to_true[ra] = b;
        self.to_true[rb] = a;
    }

    pub fn is_bijection(&self) -> bool {
        self.to_true
            .iter()
            .enumerate()
            .all(|(r, &i)| i < self.to_right.len() && self.to_right[i] == r)
    }
}

/// Swap of the right-row assignments of true indices `a` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkageProposal {
    pub a: usize,
    pub b: usize,
}

/// Pads the observed rows to `m` and returns an initial linkage.
///
/// When `m` can host every record as a distinct animal the linkage places the
/// right-only rows on the first all-zero left indices. Otherwise just enough
/// compatible left-only/right-only pairs are merged; the error reports the
/// smallest feasible `m` when even a maximum matching is not enough.
pub fn augment(data: &CaptureData, m: usize) -> Result<(AugmentedData, Linkage)> {
    let traps = data.traps();
    let occasions = data.occasions();
    let by_kind = |kind| data.rows().iter().filter(move |r| r.kind == kind);
    let n_full = data.count(RowKind::Full);
    let n_left = data.count(RowKind::LeftOnly);
    let n_right = data.count(RowKind::RightOnly);
    let distinct = n_full + n_left + n_right;
    let mut merged = vec![None; n_right];
    if m < distinct {
        let lefts: Vec<_> = by_kind(RowKind::LeftOnly).collect();
        let rights: Vec<_> = by_kind(RowKind::RightOnly).collect();
        let compatible = |l: usize, r: usize| {
            merge_feasible(&lefts[l].left, &rights[r].right, lefts[l].sex, rights[r].sex)
        };
        let pairs = max_matching(n_right, n_left, distinct - m, compatible, &mut merged);
        if distinct - pairs > m {
            return Err(Error::Infeasible {
                m,
                needed: distinct - pairs,
            });
        }
    }

    let zero = History::new(traps, occasions);
    let mut left = Vec::with_capacity(m);
    let mut right = Vec::with_capacity(m);
    let mut left_kind = Vec::with_capacity(m);
    let mut right_kind = Vec::with_capacity(m);
    let mut left_sex = Vec::with_capacity(m);
    let mut right_sex = Vec::with_capacity(m);
    let mut left_id = Vec::with_capacity(m);
    let mut right_id = Vec::with_capacity(m);

    for row in by_kind(RowKind::Full) {
        left.push(row.left.clone());
        right.push(row.right.clone());
        left_kind.push(RowKind::Full);
        right_kind.push(RowKind::Full);
        left_sex.push(row.sex);
        right_sex.push(row.sex);
        left_id.push(Some(row.id.clone()));
        right_id.push(Some(row.id.clone()));
    }
    for row in by_kind(RowKind::LeftOnly) {
        left.push(row.left.clone());
        left_kind.push(RowKind::LeftOnly);
        left_sex.push(row.sex);
        left_id.push(Some(row.id.clone()));
    }
    for row in by_kind(RowKind::RightOnly) {
        right.push(row.right.clone());
        right_kind.push(RowKind::RightOnly);
        right_sex.push(row.sex);
        right_id.push(Some(row.id.clone()));
    }
    while left.len() < m {
        left.push(zero.clone());
        left_kind.push(RowKind::AllZero);
        left_sex.push(Sex::Unknown);
        left_id.push(None);
    }
    while right.len() < m {
        right.push(zero.clone());
        right_kind.push(RowKind::AllZero);
        right_sex.push(Sex::Unknown);
        right_id.push(None);
    }

    // Unmerged right-only rows go to the first all-zero left indices, every
    // remaining padding row fills the leftover indices in order.
    let mut to_true = Vec::with_capacity(m);
    let mut taken = vec![false; m];
    to_true.extend(0..n_full);
    let mut next_free = n_full + n_left;
    for partner in &merged {
        let i = match partner {
            Some(l) => n_full + l,
            None => {
                next_free += 1;
                next_free - 1
            }
        };
        to_true.push(i);
        taken[i] = true;
    }
    to_true.extend((n_full..m).filter(|&i| !taken[i]));
    let link = Linkage::from_vec(to_true)?;

    let aug = AugmentedData {
        m,
        traps,
        occasions,
        n_full,
        n_left,
        n_right,
        left,
        right,
        left_kind,
        right_kind,
        left_sex,
        right_sex,
        left_id,
        right_id,
    };
    debug_assert!(aug.check_linkage(&link).is_ok());
    Ok((aug, link))
}

/// Augmenting-path bipartite matching of right rows to left rows, stopping once
/// `wanted` pairs are found. Returns the number of pairs.
fn max_matching(
    n_right: usize,
    n_left: usize,
    wanted: usize,
    compatible: impl Fn(usize, usize) -> bool,
    right_to_left: &mut [Option<usize>],
) -> usize {
    fn extend(
        r: usize,
        n_left: usize,
        compatible: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        left_to_right: &mut [Option<usize>],
        right_to_left: &mut [Option<usize>],
    ) -> bool {
        for l in 0..n_left {
            if seen[l] || !compatible(l, r) {
                continue;
            }
            seen[l] = true;
            let free = match left_to_right[l] {
                None => true,
                Some(other) => extend(other, n_left, compatible, seen, left_to_right, right_to_left),
            };
            if free {
                left_to_right[l] = Some(r);
                right_to_left[r] = Some(l);
                return true;
            }
        }
        false
    }
    let mut left_to_right = vec![None; n_left];
    let mut pairs = 0;
    for r in 0..n_right {
        if pairs == wanted {
            break;
        }
        let mut seen = vec![false; n_left];
        if extend(r, n_left, &compatible, &mut seen, &mut left_to_right, right_to_left) {
            pairs += 1;
        }
    }
    pairs
}

/// Reorders detector-2 rows so that row `i` of the output belongs to true index `i`.
pub fn apply_permutation(right: &[History], link: &Linkage) -> Result<Vec<History>> {
    if right.len() != link.len() || !link.is_bijection() {
        return Err(Error::Permutation(format!(
            "expected a bijection on {} rows",
            right.len()
        )));
    }
    Ok((0..right.len())
        .map(|i| right[link.right_row(i)].clone())
        .collect())
}

/// Whether a left record and a right record can be the same animal: sexes must
/// agree and no trap-occasion may be set in both (that would have been a
/// simultaneous capture and hence a fully identified row).
pub fn merge_feasible(left_row: &History, right_row: &History, sex_left: Sex, sex_right: Sex) -> bool {
    sex_left.compatible(sex_right) && !left_row.overlaps(right_row)
}

/// Sufficient statistics of rows `a` and `b` after applying `proposal`.
pub fn stats_after_swap(
    data: &AugmentedData,
    link: &Linkage,
    proposal: LinkageProposal,
) -> Result<(SufficientStats, SufficientStats)> {
    let LinkageProposal { a, b } = proposal;
    let m = data.m();
    if a >= m || b >= m || a == b {
        return Err(Error::InfeasibleProposal(format!("bad indices ({a}, {b})")));
    }
    if a < data.n_full() || b < data.n_full() {
        return Err(Error::InfeasibleProposal(
            "fully identified rows are not relinked".into(),
        ));
    }
    let (ra, rb) = (link.right_row(a), link.right_row(b));
    if !data.pair_feasible(a, rb) || !data.pair_feasible(b, ra) {
        return Err(Error::InfeasibleProposal(format!(
            "swapping right rows of {a} and {b} merges incompatible records"
        )));
    }
    Ok((data.stats_for(a, rb), data.stats_for(b, ra)))
}
