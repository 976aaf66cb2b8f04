#![allow(dead_code)]

use bisecr_core::history::History;
use bisecr_core::linkage::augment;
use bisecr_core::rng::ChainRng;
use bisecr_core::simulate::simulate_histories;
use bisecr_core::{
    AugmentedData, AugmentedState, CaptureData, CaptureRow, Linkage, ModelParams, Point, RowKind,
    Sex, StateSpace, TrapArray,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn hist(k: usize, j: usize, cells: &[(usize, usize)]) -> History {
    let mut h = History::new(k, j);
    for &(a, b) in cells {
        h.set(a, b, true);
    }
    h
}

/// Two traps, three occasions: one fully identified animal, one left-only and
/// one right-only record of unknown sex that may or may not be the same animal.
pub fn tiny_instance() -> (CaptureData, TrapArray, StateSpace, Vec<Point>) {
    let (k, j) = (2, 3);
    let z = History::new(k, j);
    let rows = vec![
        CaptureRow::classify("a", Sex::Female, hist(k, j, &[(0, 0), (0, 2)]), hist(k, j, &[(0, 0), (1, 1)])).unwrap(),
        CaptureRow::classify("l", Sex::Unknown, hist(k, j, &[(1, 0)]), z.clone()).unwrap(),
        CaptureRow::classify("r", Sex::Unknown, z, hist(k, j, &[(1, 2)])).unwrap(),
    ];
    let data = CaptureData::new(k, j, rows).unwrap();
    let traps = TrapArray::new(vec![Point::new(1.0, 1.0), Point::new(2.0, 1.0)]).unwrap();
    let space = StateSpace::new(0.0, 3.0, 0.0, 2.0).unwrap();
    let grid = [0.5, 1.5, 2.5]
        .iter()
        .flat_map(|&x| [0.5, 1.0, 1.5].map(|y| Point::new(x, y)))
        .collect();
    (data, traps, space, grid)
}

pub fn tiny_params() -> ModelParams {
    ModelParams {
        psi: 0.6,
        theta: 0.4,
        phi: 0.5,
        p0: 0.35,
        sigma_m: 0.9,
        sigma_f: 0.5,
        r: 2.0,
    }
}

/// Simulates fresh detections for the included animals of `state` and
/// re-expresses everything in the augmented layout: animals are relabelled at
/// random, then ordered fully identified, left-detected, rest; right-only
/// records are shuffled and the linkage points each one at its owner.
pub fn regenerate(
    params: &ModelParams,
    state: &AugmentedState,
    traps: &TrapArray,
    occasions: usize,
    rng: &mut ChainRng,
) -> (AugmentedData, AugmentedState) {
    let m = state.m();
    let k = traps.len();
    let mut d2 = vec![0.0; k];
    let mut pi = vec![0.0; k];
    let mut hists = Vec::with_capacity(m);
    for i in 0..m {
        if state.z[i] {
            let sigma = if state.male[i] { params.sigma_m } else { params.sigma_f };
            traps.dist2_into(&state.s[i], &mut d2);
            for (p, &dk) in pi.iter_mut().zip(&d2) {
                *p = params.p0 * (-dk / (2.0 * sigma * sigma)).exp();
            }
            hists.push(simulate_histories(rng, &pi, params.phi, occasions));
        } else {
            hists.push((History::new(k, occasions), History::new(k, occasions)));
        }
    }
    let class = |i: usize| {
        let (l, r) = &hists[i];
        if l.overlaps(r) {
            0
        } else if !l.is_empty() {
            1
        } else {
            2
        }
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(rng);
    order.sort_by_key(|&i| class(i));

    let sex = |i: usize| if state.male[i] { Sex::Male } else { Sex::Female };
    let empty = History::new(k, occasions);
    let mut rows = Vec::new();
    let mut right_only = Vec::new();
    for (new, &old) in order.iter().enumerate() {
        let (l, r) = &hists[old];
        match class(old) {
            0 => rows.push(CaptureRow::classify(format!("f{new}"), sex(old), l.clone(), r.clone()).unwrap()),
            1 => rows.push(CaptureRow::classify(format!("l{new}"), sex(old), l.clone(), empty.clone()).unwrap()),
            _ => {}
        }
        if class(old) != 0 && !r.is_empty() {
            right_only.push((new, CaptureRow::classify(format!("r{new}"), sex(old), empty.clone(), r.clone()).unwrap()));
        }
    }
    right_only.shuffle(rng);
    let owners: Vec<usize> = right_only.iter().map(|(o, _)| *o).collect();
    rows.extend(right_only.into_iter().map(|(_, row)| row));
    let data = CaptureData::new(k, occasions, rows).unwrap();
    let (aug, _) = augment(&data, m).unwrap();

    let n_full = aug.n_full();
    let mut to_true = vec![usize::MAX; m];
    let mut taken = vec![false; m];
    for r in 0..n_full {
        to_true[r] = r;
        taken[r] = true;
    }
    for (j, &owner) in owners.iter().enumerate() {
        to_true[n_full + j] = owner;
        taken[owner] = true;
    }
    let mut free = (0..m).filter(|&i| !taken[i]);
    for slot in to_true.iter_mut().filter(|t| **t == usize::MAX) {
        *slot = free.next().unwrap();
    }
    let link = Linkage::from_vec(to_true).unwrap();
    debug_assert!(aug.check_linkage(&link).is_ok());
    debug_assert!(order
        .iter()
        .enumerate()
        .all(|(new, &old)| aug.left_kind[new] != RowKind::AllZero || hists[old].0.is_empty()));
    let new_state = AugmentedState {
        z: order.iter().map(|&i| state.z[i]).collect(),
        male: order.iter().map(|&i| state.male[i]).collect(),
        s: order.iter().map(|&i| state.s[i]).collect(),
        link,
    };
    (aug, new_state)
}

/// Draws parameters and latent state from the prior.
pub fn prior_draw(m: usize, r: f64, space: &StateSpace, rng: &mut ChainRng) -> (ModelParams, AugmentedState) {
    let u = |rng: &mut ChainRng| loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    };
    let params = ModelParams {
        psi: u(rng),
        theta: u(rng),
        phi: u(rng),
        p0: u(rng),
        sigma_m: r * u(rng),
        sigma_f: r * u(rng),
        r,
    };
    let state = AugmentedState {
        z: (0..m).map(|_| rng.random_bool(params.psi)).collect(),
        male: (0..m).map(|_| rng.random_bool(params.theta)).collect(),
        s: (0..m).map(|_| space.sample_uniform(rng)).collect(),
        link: Linkage::identity(m),
    };
    (params, state)
}

/// Mean and batch-means standard error.
pub fn batch_mean_se(x: &[f64], batches: usize) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let size = x.len() / batches;
    let means: Vec<f64> = x
        .chunks(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let b = means.len() as f64;
    let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1.0);
    (mean, (var / b).sqrt())
}
