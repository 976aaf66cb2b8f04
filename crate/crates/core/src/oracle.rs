//! Brute-force evaluators for tiny instances and identifiability diagnostics.
//!
//! Nothing here calls the collapsed likelihood: cell probabilities come from
//! summing over the latent trap-entry event, and individual likelihoods are
//! products over every trap-occasion of the raw detection arrays.

use crate::error::{Error, Result};
use crate::model::{CaptureData, ModelParams, Point, RowKind, Sex, TrapArray};
use crate::sampler::{pearson, PosteriorSamples};

/// `P(left = l, right = r)` on one occasion, summing over trap entry.
pub fn latent_cell_prob(pi: f64, phi: f64, left: bool, right: bool) -> f64 {
    let flank = |hit: bool| if hit { phi } else { 1.0 - phi };
    let missed = if !left && !right { 1.0 } else { 0.0 };
    (1.0 - pi) * missed + pi * flank(left) * flank(right)
}

/// Exact distribution of (occasions with a detection, left total, right total)
/// over `J` independent occasions.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDistribution {
    occasions: usize,
    probs: Vec<f64>,
}

impl CellDistribution {
    fn index(&self, n: usize, y1: usize, y2: usize) -> usize {
        let d = self.occasions + 1;
        (n * d + y1) * d + y2
    }

    pub fn occasions(&self) -> usize {
        self.occasions
    }

    pub fn prob(&self, n: usize, y1: usize, y2: usize) -> f64 {
        if n.max(y1).max(y2) > self.occasions {
            return 0.0;
        }
        self.probs[self.index(n, y1, y2)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal distribution of the number of occasions with a detection.
    pub fn detections(&self) -> Vec<f64> {
        let j = self.occasions;
        (0..=j)
            .map(|n| {
                (0..=j)
                    .flat_map(|a| (0..=j).map(move |b| (a, b)))
                    .map(|(a, b)| self.prob(n, a, b))
                    .sum()
            })
            .collect()
    }
}

pub const MAX_CELL_OCCASIONS: usize = 10;

/// Sums over all `4^J` occasion outcome sequences.
pub fn enumerate_cell_distribution(pi: f64, phi: f64, occasions: usize) -> Result<CellDistribution> {
    if occasions > MAX_CELL_OCCASIONS {
        return Err(Error::OracleBounds(format!(
            "J = {occasions} exceeds {MAX_CELL_OCCASIONS}"
        )));
    }
    if !(0.0..=1.0).contains(&pi) || !(0.0..=1.0).contains(&phi) {
        return Err(Error::Domain(format!("need pi, phi in [0, 1], got {pi}, {phi}")));
    }
    let d = occasions + 1;
    let mut dist = CellDistribution {
        occasions,
        probs: vec![0.0; d * d * d],
    };
    for seq in 0..(1usize << (2 * occasions)) {
        let (mut p, mut n, mut y1, mut y2) = (1.0, 0, 0, 0);
        for t in 0..occasions {
            let cell = (seq >> (2 * t)) & 3;
            let (l, r) = (cell & 1 == 1, cell & 2 == 2);
            p *= latent_cell_prob(pi, phi, l, r);
            n += (l || r) as usize;
            y1 += l as usize;
            y2 += r as usize;
        }
        let idx = dist.index(n, y1, y2);
        dist.probs[idx] += p;
    }
    Ok(dist)
}

/// Likelihood of one animal's raw left and right arrays (`[k][t]`) by direct
/// product over every trap and occasion.
pub fn occasion_product_lik(
    left: &[Vec<bool>],
    right: &[Vec<bool>],
    s: &Point,
    traps: &TrapArray,
    phi: f64,
    p0: f64,
    sigma: f64,
) -> f64 {
    let mut lik = 1.0;
    for (k, u) in traps.stations().iter().enumerate() {
        let d2 = (s.x - u.x).powi(2) + (s.y - u.y).powi(2);
        let pi = p0 * (-d2 / (2.0 * sigma * sigma)).exp();
        for (&l, &r) in left[k].iter().zip(&right[k]) {
            lik *= latent_cell_prob(pi, phi, l, r);
        }
    }
    lik
}

pub const MAX_JOINT_M: usize = 4;
pub const MAX_JOINT_K: usize = 2;
pub const MAX_JOINT_J: usize = 3;
pub const MAX_JOINT_GRID: usize = 16;

/// Exact posterior marginals of a tiny augmented model with fixed parameters
/// and activity centres restricted to a grid.
///
/// True indices follow the augmented layout: fully identified rows, then
/// left-only rows, then padding. Right-only records are linked injectively to
/// non-identified indices with a uniform prior over feasible linkages.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPosterior {
    /// `P(z_i = 1)` per true index.
    pub p_included: Vec<f64>,
    /// `P(x_i = 1, z_i = 1)` per true index.
    pub p_male_included: Vec<f64>,
    /// `p_link[r][i]`: probability that the `r`-th right-only record belongs to true index `i`.
    pub p_link: Vec<Vec<f64>>,
    /// Feasible linkages enumerated.
    pub linkages: usize,
}

type Raw = Vec<Vec<bool>>;

fn raw(h: &crate::history::History) -> Raw {
    (0..h.traps())
        .map(|k| (0..h.occasions()).map(|t| h.get(k, t)).collect())
        .collect()
}

struct Slot {
    left: Raw,
    sex: Sex,
    full: bool,
}

pub fn enumerate_joint(
    data: &CaptureData,
    traps: &TrapArray,
    params: &ModelParams,
    grid: &[Point],
    m: usize,
) -> Result<JointPosterior> {
    let k = data.traps();
    let j = data.occasions();
    if m > MAX_JOINT_M || k > MAX_JOINT_K || j > MAX_JOINT_J || grid.len() > MAX_JOINT_GRID || grid.is_empty() {
        return Err(Error::OracleBounds(format!(
            "need M <= {MAX_JOINT_M}, K <= {MAX_JOINT_K}, J <= {MAX_JOINT_J}, 1..={MAX_JOINT_GRID} grid points; got {m}, {k}, {j}, {}",
            grid.len()
        )));
    }
    if traps.len() != k {
        return Err(Error::Config("trap array does not match the data".into()));
    }
    let empty: Raw = vec![vec![false; j]; k];
    let mut slots: Vec<Slot> = Vec::new();
    let mut full_right: Vec<Raw> = Vec::new();
    for kind in [RowKind::Full, RowKind::LeftOnly] {
        for row in data.rows().iter().filter(|r| r.kind == kind) {
            slots.push(Slot {
                left: raw(&row.left),
                sex: row.sex,
                full: kind == RowKind::Full,
            });
            if kind == RowKind::Full {
                full_right.push(raw(&row.right));
            }
        }
    }
    let n_full = full_right.len();
    let right_only: Vec<(Raw, Sex)> = data
        .rows()
        .iter()
        .filter(|r| r.kind == RowKind::RightOnly)
        .map(|r| (raw(&r.right), r.sex))
        .collect();
    if slots.len() + right_only.len() > m {
        return Err(Error::Infeasible {
            m,
            needed: slots.len() + right_only.len(),
        });
    }
    while slots.len() < m {
        slots.push(Slot {
            left: empty.clone(),
            sex: Sex::Unknown,
            full: false,
        });
    }

    let (psi, theta) = (params.psi, params.theta);
    let g = grid.len() as f64;
    // Per-index weights given the right record it holds.
    let weigh = |slot: &Slot, right: &Raw, right_sex: Sex| -> Option<(f64, f64, f64)> {
        let sex = match (slot.sex, right_sex) {
            (a, Sex::Unknown) => a,
            (Sex::Unknown, b) => b,
            (a, b) if a == b => a,
            _ => return None,
        };
        let mut detected = false;
        for kk in 0..k {
            for t in 0..j {
                let (l, r) = (slot.left[kk][t], right[kk][t]);
                if l && r && !slot.full {
                    return None;
                }
                detected |= l || r;
            }
        }
        let mut alive = [0.0; 2];
        for male in [false, true] {
            if sex == Sex::Male && !male || sex == Sex::Female && male {
                continue;
            }
            let sigma = if male { params.sigma_m } else { params.sigma_f };
            let prior = if male { theta } else { 1.0 - theta };
            let lik: f64 = grid
                .iter()
                .map(|s| occasion_product_lik(&slot.left, right, s, traps, params.phi, params.p0, sigma))
                .sum::<f64>()
                / g;
            alive[male as usize] = psi * prior * lik;
        }
        let dead = if detected { 0.0 } else { 1.0 - psi };
        Some((dead, alive[0], alive[1]))
    };

    let nr = right_only.len();
    let mut p_included = vec![0.0; m];
    let mut p_male = vec![0.0; m];
    let mut p_link = vec![vec![0.0; m]; nr];
    let mut total = 0.0;
    let mut linkages = 0;
    let mut assign = vec![usize::MAX; nr];
    let mut used = vec![false; m];

    fn visit(
        depth: usize,
        assign: &mut Vec<usize>,
        used: &mut Vec<bool>,
        n_full: usize,
        m: usize,
        leaf: &mut dyn FnMut(&[usize]),
    ) {
        if depth == assign.len() {
            leaf(assign);
            return;
        }
        for i in n_full..m {
            if used[i] {
                continue;
            }
            used[i] = true;
            assign[depth] = i;
            visit(depth + 1, assign, used, n_full, m, leaf);
            used[i] = false;
        }
    }

    let mut leaf = |assign: &[usize]| {
        let mut weights = Vec::with_capacity(m);
        for (i, slot) in slots.iter().enumerate() {
            let held = assign.iter().position(|&a| a == i);
            let (right, sex) = match held {
                Some(r) => (&right_only[r].0, right_only[r].1),
                None if i < n_full => (&full_right[i], slot.sex),
                None => (&empty, Sex::Unknown),
            };
            match weigh(slot, right, sex) {
                Some(w) => weights.push(w),
                None => return,
            }
        }
        let mass: f64 = weights.iter().map(|(d, f, ml)| d + f + ml).product();
        if mass <= 0.0 {
            return;
        }
        linkages += 1;
        total += mass;
        for (i, &(d, f, ml)) in weights.iter().enumerate() {
            let row = d + f + ml;
            p_included[i] += mass * (f + ml) / row;
            p_male[i] += mass * ml / row;
        }
        for (r, &i) in assign.iter().enumerate() {
            p_link[r][i] += mass;
        }
    };
    visit(0, &mut assign, &mut used, n_full, m, &mut leaf);

    if !(total > 0.0) {
        return Err(Error::InvalidData("every configuration has zero posterior mass".into()));
    }
    for v in p_included.iter_mut().chain(p_male.iter_mut()) {
        *v /= total;
    }
    for row in p_link.iter_mut() {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    Ok(JointPosterior {
        p_included,
        p_male_included: p_male,
        p_link,
        linkages,
    })
}

/// Flags for the two known identifiability failure modes of the model, and
/// posterior correlations between the detection parameters when samples exist.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityReport {
    /// Every detection is a simultaneous two-detector capture, so `phi` and
    /// trap entry cannot be separated.
    pub only_simultaneous: bool,
    /// Distinct individual-to-trap distances among detections.
    pub distinct_distances: usize,
    /// Coefficient of variation of those distances.
    pub distance_cv: f64,
    /// Too little spread in distances to separate `p0` from the sigmas.
    pub degenerate_distances: bool,
    /// Posterior correlations `(a, b, corr)`.
    pub correlations: Vec<(String, String, f64)>,
}

const DISTANCE_TOL: f64 = 1e-9;
const MIN_DISTANCE_CV: f64 = 1e-3;

/// Distances are measured from the centroid of each record's detection traps.
pub fn identifiability_probe(
    data: &CaptureData,
    traps: &TrapArray,
    samples: Option<&PosteriorSamples>,
) -> IdentifiabilityReport {
    let mut only_simultaneous = true;
    let mut distances = Vec::new();
    for row in data.rows() {
        if row.kind == RowKind::AllZero {
            continue;
        }
        let mut hit = vec![false; traps.len()];
        for (kk, t) in row.left.ones().chain(row.right.ones()) {
            hit[kk] = true;
            if row.left.get(kk, t) != row.right.get(kk, t) {
                only_simultaneous = false;
            }
        }
        let pts: Vec<&Point> = traps
            .stations()
            .iter()
            .zip(&hit)
            .filter_map(|(p, &h)| h.then_some(p))
            .collect();
        let n = pts.len() as f64;
        let c = Point::new(
            pts.iter().map(|p| p.x).sum::<f64>() / n,
            pts.iter().map(|p| p.y).sum::<f64>() / n,
        );
        distances.extend(pts.iter().map(|p| p.dist2(&c).sqrt()));
    }
    distances.sort_by(f64::total_cmp);
    let mut distinct = 0;
    let mut last = f64::NEG_INFINITY;
    for &d in &distances {
        if d - last > DISTANCE_TOL {
            distinct += 1;
            last = d;
        }
    }
    let cv = if distances.len() > 1 {
        let n = distances.len() as f64;
        let mean = distances.iter().sum::<f64>() / n;
        let var = distances.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
        if mean > 0.0 { var.sqrt() / mean } else { 0.0 }
    } else {
        0.0
    };

    let mut correlations = Vec::new();
    if let Some(s) = samples {
        for (a, b) in [("phi", "p0"), ("p0", "sigma_m"), ("p0", "sigma_f")] {
            if let (Some(x), Some(y)) = (s.column(a), s.column(b)) {
                if let Some(r) = pearson(x, y) {
                    correlations.push((a.to_string(), b.to_string(), r));
                }
            }
        }
    }
    IdentifiabilityReport {
        only_simultaneous: only_simultaneous && !data.rows().is_empty(),
        distinct_distances: distinct,
        distance_cv: cv,
        degenerate_distances: distinct < 2 || cv < MIN_DISTANCE_CV,
        correlations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latent_cells_sum_to_one() {
        for &(pi, phi) in &[(0.0, 0.3), (0.2, 0.5), (1.0, 1.0), (0.7, 0.0)] {
            let total: f64 = [(false, false), (true, false), (false, true), (true, true)]
                .iter()
                .map(|&(l, r)| latent_cell_prob(pi, phi, l, r))
                .sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cell_distribution_bounds() {
        assert!(enumerate_cell_distribution(0.1, 0.5, 11).is_err());
        assert!(enumerate_cell_distribution(1.1, 0.5, 2).is_err());
    }
}
