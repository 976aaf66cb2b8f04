//! Synthetic paired-detector capture data, the scenario grid, and
//! back-simulation coverage studies.

mod backsim;

pub use backsim::{back_simulate, scenario_truth, CoverageReport, ReplicateOutcome};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::history::History;
use crate::model::{CaptureData, CaptureRow, Point, RowKind, Sex, StateSpace, TrapArray};
use crate::rng::{self, ChainRng, SIMULATION_STREAM};
use crate::sampler::Summary;

/// The 10 x 16 trap grid (spacing 0.3 by 0.3125) centred in a 5 x 7 state space.
pub fn standard_grid() -> (TrapArray, StateSpace) {
    let (nx, ny) = (10, 16);
    let (dx, dy) = (0.3, 0.3125);
    let (w, h) = (5.0, 7.0);
    let x0 = (w - (nx - 1) as f64 * dx) / 2.0;
    let y0 = (h - (ny - 1) as f64 * dy) / 2.0;
    let mut stations = Vec::with_capacity(nx * ny);
    for a in 0..nx {
        for b in 0..ny {
            stations.push(Point::new(x0 + a as f64 * dx, y0 + b as f64 * dy));
        }
    }
    let traps = TrapArray::new(stations).expect("grid stations are distinct");
    let space = StateSpace::new(0.0, w, 0.0, h).expect("valid rectangle");
    (traps, space)
}

/// A square `n x n` grid with the given spacing and a buffer on every side.
pub fn square_grid(n: usize, spacing: f64, buffer: f64) -> Result<(TrapArray, StateSpace)> {
    if n == 0 || !(spacing > 0.0) || !(buffer >= 0.0) {
        return Err(Error::InvalidTraps(format!(
            "need n >= 1, spacing > 0, buffer >= 0; got {n}, {spacing}, {buffer}"
        )));
    }
    let stations = (0..n)
        .flat_map(|a| (0..n).map(move |b| Point::new(buffer + a as f64 * spacing, buffer + b as f64 * spacing)))
        .collect();
    let traps = TrapArray::new(stations)?;
    let side = 2.0 * buffer + (n - 1) as f64 * spacing;
    let space = StateSpace::new(0.0, side, 0.0, side)?;
    Ok((traps, space))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub n_true: usize,
    pub n_male_true: usize,
    pub p0: f64,
    pub phi: f64,
    pub sigma_m: f64,
    pub sigma_f: f64,
    pub space: StateSpace,
    pub traps: TrapArray,
    pub occasions: usize,
    pub seed: u64,
    /// Probability that an animal's sex is recorded as unknown.
    pub unknown_sex_fraction: f64,
}

impl ScenarioSpec {
    /// A scenario on [`standard_grid`] with 100 animals, 40 of them male, and 50 occasions.
    pub fn standard(phi: f64, p0: f64, sigma_m: f64, sigma_f: f64, seed: u64) -> Self {
        let (traps, space) = standard_grid();
        Self {
            n_true: 100,
            n_male_true: 40,
            p0,
            phi,
            sigma_m,
            sigma_f,
            space,
            traps,
            occasions: 50,
            seed,
            unknown_sex_fraction: 0.0,
        }
    }

    /// Scenario at the point estimates of a fit: rounded posterior means of
    /// `N` and `N_male`, posterior means of the detection parameters.
    pub fn from_summary(
        summary: &Summary,
        traps: TrapArray,
        space: StateSpace,
        occasions: usize,
        seed: u64,
    ) -> Result<Self> {
        let get = |name: &str| {
            summary
                .get(name)
                .map(|r| r.reported_mean())
                .ok_or_else(|| Error::InvalidData(format!("summary has no `{name}` row")))
        };
        Ok(Self {
            n_true: get("N")? as usize,
            n_male_true: get("N_male")? as usize,
            p0: get("p0")?,
            phi: get("phi")?,
            sigma_m: get("sigma_m")?,
            sigma_f: get("sigma_f")?,
            space,
            traps,
            occasions,
            seed,
            unknown_sex_fraction: 0.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.n_male_true > self.n_true {
            return fail(format!(
                "N_male ({}) exceeds N ({})",
                self.n_male_true, self.n_true
            ));
        }
        for (name, v) in [("p0", self.p0), ("phi", self.phi), ("unknown_sex_fraction", self.unknown_sex_fraction)] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        for (name, v) in [("sigma_m", self.sigma_m), ("sigma_f", self.sigma_f)] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if self.occasions == 0 {
            return fail("need at least one occasion".into());
        }
        self.traps.check_inside(&self.space)
    }
}

/// One simulated animal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimIndividual {
    pub centre: Point,
    pub male: bool,
    /// Row of the capture data holding its left-flank record, if any.
    pub left_row: Option<usize>,
    /// Row holding its right-flank record; equals `left_row` for fully identified animals.
    pub right_row: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub individuals: Vec<SimIndividual>,
    /// Animal behind each capture-data row.
    pub row_owner: Vec<usize>,
}

impl Truth {
    pub fn n(&self) -> usize {
        self.individuals.len()
    }

    pub fn n_male(&self) -> usize {
        self.individuals.iter().filter(|i| i.male).count()
    }

    pub fn n_detected(&self) -> usize {
        self.individuals
            .iter()
            .filter(|i| i.left_row.is_some() || i.right_row.is_some())
            .count()
    }

    /// (left-only row, right-only row) pairs that belong to the same animal.
    pub fn partial_pairs(&self) -> Vec<(usize, usize)> {
        self.individuals
            .iter()
            .filter_map(|i| match (i.left_row, i.right_row) {
                (Some(l), Some(r)) if l != r => Some((l, r)),
                _ => None,
            })
            .collect()
    }
}

/// Draws one animal's left and right histories given its trap entry probabilities.
pub fn simulate_histories<R: Rng + ?Sized>(
    rng: &mut R,
    pi: &[f64],
    phi: f64,
    occasions: usize,
) -> (History, History) {
    let k = pi.len();
    let mut left = History::new(k, occasions);
    let mut right = History::new(k, occasions);
    for (trap, &p) in pi.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        for t in 0..occasions {
            if rng.random::<f64>() < p {
                if rng.random::<f64>() < phi {
                    left.set(trap, t, true);
                }
                if rng.random::<f64>() < phi {
                    right.set(trap, t, true);
                }
            }
        }
    }
    (left, right)
}

/// Simulates a dataset from the scenario's own seed.
pub fn simulate_dataset(spec: &ScenarioSpec) -> Result<(CaptureData, Truth)> {
    let mut rng = rng::stream(spec.seed, SIMULATION_STREAM);
    simulate_with_rng(spec, &mut rng)
}

pub fn simulate_with_rng(spec: &ScenarioSpec, rng: &mut ChainRng) -> Result<(CaptureData, Truth)> {
    spec.validate()?;
    let k = spec.traps.len();
    let j = spec.occasions;
    let mut d2 = vec![0.0; k];
    let mut pi = vec![0.0; k];

    struct Detected {
        owner: usize,
        sex: Sex,
        left: History,
        right: History,
    }
    let mut individuals = Vec::with_capacity(spec.n_true);
    let mut full = Vec::new();
    let mut left_only = Vec::new();
    let mut right_only = Vec::new();
    for i in 0..spec.n_true {
        let centre = spec.space.sample_uniform(rng);
        let male = i < spec.n_male_true;
        let sigma = if male { spec.sigma_m } else { spec.sigma_f };
        spec.traps.dist2_into(&centre, &mut d2);
        for (p, &dk) in pi.iter_mut().zip(&d2) {
            *p = spec.p0 * (-dk / (2.0 * sigma * sigma)).exp();
        }
        let (left, right) = simulate_histories(rng, &pi, spec.phi, j);
        let sex = if rng.random::<f64>() < spec.unknown_sex_fraction {
            Sex::Unknown
        } else if male {
            Sex::Male
        } else {
            Sex::Female
        };
        individuals.push(SimIndividual {
            centre,
            male,
            left_row: None,
            right_row: None,
        });
        let record = |left, right| Detected {
            owner: i,
            sex,
            left,
            right,
        };
        let empty = History::new(k, j);
        match (left.is_empty(), right.is_empty()) {
            (true, true) => {}
            (false, true) => left_only.push(record(left, empty)),
            (true, false) => right_only.push(record(empty, right)),
            (false, false) if left.overlaps(&right) => full.push(record(left, right)),
            (false, false) => {
                left_only.push(record(left, empty.clone()));
                right_only.push(record(empty, right));
            }
        }
    }
    right_only.shuffle(rng);

    let mut rows = Vec::new();
    let mut row_owner = Vec::new();
    let groups = [("A", full), ("L", left_only), ("R", right_only)];
    for (prefix, group) in groups {
        for (n, d) in group.into_iter().enumerate() {
            let row = rows.len();
            let ind = &mut individuals[d.owner];
            let kind = CaptureRow::classify(format!("{prefix}{}", n + 1), d.sex, d.left, d.right)?;
            match kind.kind {
                RowKind::Full => {
                    ind.left_row = Some(row);
                    ind.right_row = Some(row);
                }
                RowKind::LeftOnly => ind.left_row = Some(row),
                RowKind::RightOnly => ind.right_row = Some(row),
                RowKind::AllZero => unreachable!("only detected animals are recorded"),
            }
            rows.push(kind);
            row_owner.push(d.owner);
        }
    }
    let data = CaptureData::new(k, j, rows)?;
    Ok((data, Truth { individuals, row_owner }))
}

/// The 70 simulation scenarios: 5 values of `p0` by 7 of `phi`, for each of the
/// two (sigma_m, sigma_f) settings. Seeds are the scenario positions.
pub fn scenario_matrix() -> Vec<ScenarioSpec> {
    let p0s = [0.005, 0.01, 0.03, 0.05, 0.07];
    let phis = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
    let sigmas = [(0.3, 0.15), (0.4, 0.2)];
    let mut out = Vec::with_capacity(70);
    for &(sm, sf) in &sigmas {
        for &p0 in &p0s {
            for &phi in &phis {
                let seed = out.len() as u64;
                out.push(ScenarioSpec::standard(phi, p0, sm, sf, seed));
            }
        }
    }
    out
}
