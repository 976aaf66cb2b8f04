//! Domain types and probability kernels of the bilateral SECR model.

mod kernels;
mod params;
mod posterior;

pub use kernels::{
    cell_probs, distance, individual_log_lik, reduced_individual_log_lik, trap_entry_prob,
    CellProbs, SufficientStats,
};
pub use params::{DetectionModel, ModelKind, ModelParams, ParamKey, ReducedParams};
pub use posterior::{log_posterior, reduced_log_posterior, AugmentedState};
pub(crate) use posterior::generic_log_posterior;

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::history::History;

/// Log of zero probability.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Rectangular region holding every activity centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSpace {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl StateSpace {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let finite = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite());
        if !finite || xmax <= xmin || ymax <= ymin {
            return Err(Error::InvalidSpace(format!(
                "need finite xmin < xmax and ymin < ymax, got x [{xmin}, {xmax}], y [{ymin}, {ymax}]"
            )));
        }
        Ok(Self {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    /// Bounding box of the trap array widened by `buffer` on every side.
    pub fn around(traps: &TrapArray, buffer: f64) -> Result<Self> {
        if !(buffer >= 0.0) || !buffer.is_finite() {
            return Err(Error::InvalidSpace(format!("buffer must be >= 0, got {buffer}")));
        }
        let (lo, hi) = traps.bounding_box();
        let space = Self::new(lo.x - buffer, hi.x + buffer, lo.y - buffer, hi.y + buffer)?;
        Ok(space)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::new(
            self.xmin + self.width() * rng.random::<f64>(),
            self.ymin + self.height() * rng.random::<f64>(),
        )
    }
}

/// Ordered trap stations. Index `k` in `0..K` is the station id used everywhere
/// else; `labels` keep the identifiers from input files.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapArray {
    stations: Vec<Point>,
    labels: Vec<String>,
}

impl TrapArray {
    pub fn new(stations: Vec<Point>) -> Result<Self> {
        let labels = (0..stations.len()).map(|k| k.to_string()).collect();
        Self::with_labels(stations, labels)
    }

    pub fn with_labels(stations: Vec<Point>, labels: Vec<String>) -> Result<Self> {
        if stations.is_empty() {
            return Err(Error::InvalidTraps("at least one station is required".into()));
        }
        if stations.len() != labels.len() {
            return Err(Error::InvalidTraps("one label per station is required".into()));
        }
        if let Some(k) = stations
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(Error::InvalidTraps(format!("station {} has a non-finite coordinate", labels[k])));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidTraps(format!("duplicate trap id {l}")));
            }
        }
        Ok(Self { stations, labels })
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn stations(&self) -> &[Point] {
        &self.stations
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.stations {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    pub fn check_inside(&self, space: &StateSpace) -> Result<()> {
        match self.stations.iter().position(|p| !space.contains(p)) {
            Some(k) => Err(Error::InvalidTraps(format!(
                "station {} lies outside the state space",
                self.labels[k]
            ))),
            None => Ok(()),
        }
    }

    /// Smallest positive distance between two stations, if any.
    pub fn min_spacing(&self) -> Option<f64> {
        let mut best = f64::INFINITY;
        for (a, p) in self.stations.iter().enumerate() {
            for q in &self.stations[a + 1..] {
                let d = p.dist2(q).sqrt();
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best.is_finite().then_some(best)
    }

    /// Squared distance from `s` to every station.
    pub fn dist2_into(&self, s: &Point, out: &mut [f64]) {
        for (o, u) in out.iter_mut().zip(&self.stations) {
            *o = s.dist2(u);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sex {
    Male,
    Female,
    Unknown,
}

impl Sex {
    /// Unknown matches anything; Male and Female conflict.
    pub fn compatible(self, other: Sex) -> bool {
        !matches!(
            (self, other),
            (Sex::Male, Sex::Female) | (Sex::Female, Sex::Male)
        )
    }

    /// Sex of one animal seen through two records, `None` on conflict.
    pub fn combine(self, other: Sex) -> Option<Sex> {
        match (self, other) {
            (a, b) if !a.compatible(b) => None,
            (Sex::Unknown, b) => Some(b),
            (a, _) => Some(a),
        }
    }

    pub fn is_male(self) -> Option<bool> {
        match self {
            Sex::Male => Some(true),
            Sex::Female => Some(false),
            Sex::Unknown => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Sex::Male => "M",
            Sex::Female => "F",
            Sex::Unknown => "U",
        }
    }

    pub fn from_code(code: &str) -> Option<Sex> {
        match code.trim() {
            "M" | "m" => Some(Sex::Male),
            "F" | "f" => Some(Sex::Female),
            "U" | "u" | "" => Some(Sex::Unknown),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKind {
    /// Seen by both detectors at the same trap and occasion at least once.
    Full,
    LeftOnly,
    RightOnly,
    AllZero,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RowKind::Full => "full",
            RowKind::LeftOnly => "left_only",
            RowKind::RightOnly => "right_only",
            RowKind::AllZero => "all_zero",
        };
        f.write_str(s)
    }
}

/// One observed capture history: a fully identified animal or a single-flank record.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureRow {
    pub id: String,
    pub kind: RowKind,
    pub sex: Sex,
    pub left: History,
    pub right: History,
}

impl CaptureRow {
    /// Builds a row and derives its kind from the histories.
    pub fn classify(id: impl Into<String>, sex: Sex, left: History, right: History) -> Result<Self> {
        let id = id.into();
        let kind = match (left.is_empty(), right.is_empty()) {
            (true, true) => {
                return Err(Error::InvalidData(format!("row {id} has no detections")));
            }
            (false, true) => RowKind::LeftOnly,
            (true, false) => RowKind::RightOnly,
            (false, false) if left.overlaps(&right) => RowKind::Full,
            (false, false) => {
                return Err(Error::InvalidData(format!(
                    "row {id} has both flanks but no simultaneous capture; \
                     it must be supplied as two single-flank records"
                )));
            }
        };
        Ok(Self {
            id,
            kind,
            sex,
            left,
            right,
        })
    }
}

/// Observed flank-specific histories with partially observed sexes.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureData {
    traps: usize,
    occasions: usize,
    rows: Vec<CaptureRow>,
}

impl CaptureData {
    pub fn new(traps: usize, occasions: usize, rows: Vec<CaptureRow>) -> Result<Self> {
        if traps == 0 || occasions == 0 {
            return Err(Error::InvalidData("K and J must be positive".into()));
        }
        for row in &rows {
            if row.left.traps() != traps
                || row.right.traps() != traps
                || row.left.occasions() != occasions
                || row.right.occasions() != occasions
            {
                return Err(Error::InvalidData(format!(
                    "row {} does not have shape {traps} x {occasions}",
                    row.id
                )));
            }
            let ok = match row.kind {
                RowKind::Full => row.left.overlaps(&row.right),
                RowKind::LeftOnly => row.right.is_empty() && !row.left.is_empty(),
                RowKind::RightOnly => row.left.is_empty() && !row.right.is_empty(),
                RowKind::AllZero => false,
            };
            if !ok {
                return Err(Error::InvalidData(format!(
                    "row {} is not a valid {} row",
                    row.id, row.kind
                )));
            }
        }
        Ok(Self {
            traps,
            occasions,
            rows,
        })
    }

    pub fn traps(&self) -> usize {
        self.traps
    }

    pub fn occasions(&self) -> usize {
        self.occasions
    }

    pub fn rows(&self) -> &[CaptureRow] {
        &self.rows
    }

    pub fn count(&self, kind: RowKind) -> usize {
        self.rows.iter().filter(|r| r.kind == kind).count()
    }

    pub fn n_full(&self) -> usize {
        self.count(RowKind::Full)
    }
}
