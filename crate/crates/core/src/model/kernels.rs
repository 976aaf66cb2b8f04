use super::params::{DetectionModel, ModelParams, ReducedParams};
use super::{Point, TrapArray};
use crate::error::{Error, Result};
use crate::history::History;

pub fn distance(s: &Point, u: &Point) -> f64 {
    (s.x - u.x).hypot(s.y - u.y)
}

/// Gaussian trap entry probability `p0 * exp(-d^2 / (2 sigma^2))`.
pub fn trap_entry_prob(p0: f64, sigma: f64, d: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if !(0.0..=1.0).contains(&p0) {
        return Err(Error::Domain(format!("p0 must lie in [0, 1], got {p0}")));
    }
    if !(d >= 0.0) {
        return Err(Error::Domain(format!("distance must be non-negative, got {d}")));
    }
    Ok(p0 * (-(d * d) / (2.0 * sigma * sigma)).exp())
}

/// Probabilities of the four joint outcomes of the two detectors at one
/// (individual, trap, occasion). `p10` is detector 1 only, `p01` detector 2 only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProbs {
    pub p00: f64,
    pub p10: f64,
    pub p01: f64,
    pub p11: f64,
}

impl CellProbs {
    pub fn get(&self, left: bool, right: bool) -> f64 {
        match (left, right) {
            (false, false) => self.p00,
            (true, false) => self.p10,
            (false, true) => self.p01,
            (true, true) => self.p11,
        }
    }

    pub fn sum(&self) -> f64 {
        self.p00 + self.p10 + self.p01 + self.p11
    }
}

/// Cell probabilities for independent detectors of equal quality `phi`,
/// marginalised over whether the animal entered the trap.
pub fn cell_probs(pi: f64, phi: f64) -> CellProbs {
    let p11 = pi * phi * phi;
    let single = pi * phi * (1.0 - phi);
    CellProbs {
        p00: 1.0 - phi * (2.0 - phi) * pi,
        p10: single,
        p01: single,
        p11,
    }
}

/// Per-individual summaries the likelihood depends on.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SufficientStats {
    /// Occasions with at least one detection at trap `k`.
    pub n: Vec<u32>,
    /// Total detections (both detectors) at trap `k`.
    pub c: Vec<u32>,
    pub n_dot: u32,
    /// Detector 1 total.
    pub y1: u32,
    /// Detector 2 total, after linkage.
    pub y2: u32,
}

impl SufficientStats {
    pub fn zeros(traps: usize) -> Self {
        Self {
            n: vec![0; traps],
            c: vec![0; traps],
            ..Self::default()
        }
    }

    pub fn from_histories(left: &History, right: &History) -> Self {
        let traps = left.traps();
        let mut stats = Self::zeros(traps);
        for k in 0..traps {
            let l = left.trap_count(k);
            let r = right.trap_count(k);
            stats.n[k] = left.union_trap_count(right, k);
            stats.c[k] = l + r;
            stats.y1 += l;
            stats.y2 += r;
        }
        stats.n_dot = stats.n.iter().sum();
        stats
    }

    pub fn is_zero(&self) -> bool {
        self.n_dot == 0
    }
}

#[inline]
pub(crate) fn xlogy(n: f64, p: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * p.ln()
    }
}

/// `ln(1 - p)`, accurate for small `p`.
#[inline]
pub(crate) fn ln_1m(p: f64) -> f64 {
    (-p).ln_1p()
}

fn dist2_row(s: &Point, traps: &TrapArray) -> Vec<f64> {
    let mut d2 = vec![0.0; traps.len()];
    traps.dist2_into(s, &mut d2);
    d2
}

/// Collapsed log-likelihood of one individual under the identified model, with
/// trap entry marginalised out.
pub fn individual_log_lik(
    stats: &SufficientStats,
    s: &Point,
    male: bool,
    params: &ModelParams,
    traps: &TrapArray,
    occasions: usize,
) -> f64 {
    params.row_log_lik(stats, &dist2_row(s, traps), male, occasions)
}

/// Per-detector Bernoulli log-likelihood of one individual under the reduced model.
pub fn reduced_individual_log_lik(
    stats: &SufficientStats,
    s: &Point,
    male: bool,
    params: &ReducedParams,
    traps: &TrapArray,
    occasions: usize,
) -> f64 {
    params.row_log_lik(stats, &dist2_row(s, traps), male, occasions)
}
