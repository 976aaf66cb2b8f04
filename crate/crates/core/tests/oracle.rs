mod common;

use bisecr_core::model::cell_probs;
use bisecr_core::oracle::{enumerate_cell_distribution, enumerate_joint, identifiability_probe};
use bisecr_core::sampler::PosteriorSamples;
use bisecr_core::{CaptureData, CaptureRow, Error, ModelKind, Point, Sex, TrapArray};

use common::{hist, tiny_instance, tiny_params};

#[test]
fn one_occasion_distribution_is_the_cell_table() {
    let (pi, phi) = (0.4, 0.3);
    let d = enumerate_cell_distribution(pi, phi, 1).unwrap();
    let c = cell_probs(pi, phi);
    assert!((d.prob(0, 0, 0) - c.get(false, false)).abs() < 1e-15);
    assert!((d.prob(1, 1, 0) - c.get(true, false)).abs() < 1e-15);
    assert!((d.prob(1, 0, 1) - c.get(false, true)).abs() < 1e-15);
    assert!((d.prob(1, 1, 1) - c.get(true, true)).abs() < 1e-15);
}

#[test]
fn detection_counts_are_binomial() {
    let (pi, phi, j) = (0.35, 0.7, 6);
    let d = enumerate_cell_distribution(pi, phi, j).unwrap();
    assert!((d.total() - 1.0).abs() < 1e-12);
    let q = pi * phi * (2.0 - phi);
    let mut binom = 1.0;
    for (n, p) in d.detections().iter().enumerate() {
        if n > 0 {
            binom *= (j - n + 1) as f64 / n as f64;
        }
        let want = binom * q.powi(n as i32) * (1.0 - q).powi((j - n) as i32);
        assert!((p - want).abs() < 1e-12, "n = {n}");
    }
    assert!(enumerate_cell_distribution(pi, phi, 11).is_err());
}

#[test]
fn joint_posterior_basic_structure() {
    let (data, traps, _, grid) = tiny_instance();
    let post = enumerate_joint(&data, &traps, &tiny_params(), &grid, 4).unwrap();
    assert_eq!(post.p_included[0], 1.0);
    assert_eq!(post.p_included[1], 1.0);
    // The fully identified female contributes nothing to the male mass.
    assert_eq!(post.p_male_included[0], 0.0);
    let row: f64 = post.p_link[0].iter().sum();
    assert!((row - 1.0).abs() < 1e-12);
    assert_eq!(post.p_link[0][0], 0.0);
    // Padding indices are exchangeable.
    assert!((post.p_included[2] - post.p_included[3]).abs() < 1e-12);
    assert!(post.linkages >= 2);
}

#[test]
fn joint_posterior_refuses_large_instances() {
    let (data, traps, _, grid) = tiny_instance();
    let e = enumerate_joint(&data, &traps, &tiny_params(), &grid, 5).unwrap_err();
    assert!(matches!(e, Error::OracleBounds(_)));
}

#[test]
fn incompatible_sexes_never_merge() {
    let (k, j) = (2, 3);
    let z = hist(k, j, &[]);
    let rows = vec![
        CaptureRow::classify("l", Sex::Male, hist(k, j, &[(0, 0)]), z.clone()).unwrap(),
        CaptureRow::classify("r", Sex::Female, z, hist(k, j, &[(1, 1)])).unwrap(),
    ];
    let data = CaptureData::new(k, j, rows).unwrap();
    let (_, traps, _, grid) = tiny_instance();
    let post = enumerate_joint(&data, &traps, &tiny_params(), &grid, 3).unwrap();
    assert_eq!(post.p_link[0][0], 0.0);
}

fn probe_data(rows: Vec<CaptureRow>) -> (CaptureData, TrapArray) {
    let traps = TrapArray::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 3.0)]).unwrap();
    (CaptureData::new(3, 3, rows).unwrap(), traps)
}

#[test]
fn probe_flags_simultaneous_only_data() {
    let (data, traps) = probe_data(vec![
        CaptureRow::classify("a", Sex::Male, hist(3, 3, &[(0, 0), (2, 1)]), hist(3, 3, &[(0, 0), (2, 1)])).unwrap(),
    ]);
    let r = identifiability_probe(&data, &traps, None);
    assert!(r.only_simultaneous);
    assert!(r.correlations.is_empty());
}

#[test]
fn probe_passes_data_with_single_flank_cells() {
    let (data, traps) = probe_data(vec![
        CaptureRow::classify("a", Sex::Male, hist(3, 3, &[(0, 0), (1, 2)]), hist(3, 3, &[(0, 0), (2, 1)])).unwrap(),
    ]);
    let r = identifiability_probe(&data, &traps, None);
    assert!(!r.only_simultaneous);
    assert!(!r.degenerate_distances);
}

#[test]
fn probe_flags_degenerate_distances() {
    let (data, traps) = probe_data(vec![
        CaptureRow::classify("a", Sex::Male, hist(3, 3, &[(0, 0)]), hist(3, 3, &[(0, 0), (0, 1)])).unwrap(),
    ]);
    let r = identifiability_probe(&data, &traps, None);
    assert!(r.degenerate_distances);
}

#[test]
fn probe_reports_posterior_correlations() {
    let (data, traps) = probe_data(vec![
        CaptureRow::classify("a", Sex::Male, hist(3, 3, &[(0, 0)]), hist(3, 3, &[(0, 0), (1, 1)])).unwrap(),
    ]);
    let mut samples = PosteriorSamples::new(ModelKind::Identified, &["phi", "p0", "sigma_m", "sigma_f"]);
    for i in 0..50 {
        let t = i as f64;
        let vals = [0.2 + 0.01 * t, 0.5 - 0.005 * t, 1.0 + (t * 0.7).sin(), 0.5 + 0.001 * t];
        for (trace, v) in samples.traces.iter_mut().zip(vals) {
            trace.values.push(v);
        }
    }
    let r = identifiability_probe(&data, &traps, Some(&samples));
    assert_eq!(r.correlations.len(), 3);
    let (a, b, c) = &r.correlations[0];
    assert_eq!((a.as_str(), b.as_str()), ("phi", "p0"));
    assert!((c + 1.0).abs() < 1e-12);
}

#[test]
fn distribution_equals_convolution_of_cells() {
    let (pi, phi, j) = (0.45, 0.35, 5);
    let c = cell_probs(pi, phi);
    let d = j + 1;
    // dist[n][y1][y2] after each occasion.
    let mut dist = vec![0.0; d * d * d];
    dist[0] = 1.0;
    for _ in 0..j {
        let mut next = vec![0.0; d * d * d];
        for n in 0..d {
            for a in 0..d {
                for b in 0..d {
                    let p = dist[(n * d + a) * d + b];
                    if p == 0.0 {
                        continue;
                    }
                    next[(n * d + a) * d + b] += p * c.p00;
                    next[((n + 1) * d + a + 1) * d + b] += p * c.p10;
                    next[((n + 1) * d + a) * d + b + 1] += p * c.p01;
                    next[((n + 1) * d + a + 1) * d + b + 1] += p * c.p11;
                }
            }
        }
        dist = next;
    }
    let exact = enumerate_cell_distribution(pi, phi, j).unwrap();
    for n in 0..d {
        for a in 0..d {
            for b in 0..d {
                assert!((exact.prob(n, a, b) - dist[(n * d + a) * d + b]).abs() < 1e-14);
            }
        }
    }
}
