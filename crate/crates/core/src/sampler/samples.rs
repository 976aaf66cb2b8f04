use crate::model::{ModelKind, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub name: String,
    pub values: Vec<f64>,
}

/// Draws kept after burn-in and thinning.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub model: ModelKind,
    pub traces: Vec<Trace>,
    /// Activity centres of included individuals, one entry per kept draw.
    pub snapshots: Vec<Vec<Point>>,
    /// Post burn-in acceptance rate per Metropolis kernel.
    pub acceptance: Vec<(String, f64)>,
}

impl PosteriorSamples {
    pub fn new(model: ModelKind, names: &[&str]) -> Self {
        Self {
            model,
            traces: names
                .iter()
                .map(|n| Trace {
                    name: n.to_string(),
                    values: Vec::new(),
                })
                .collect(),
            snapshots: Vec::new(),
            acceptance: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.traces
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.values.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.traces.iter().map(|t| t.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.traces.first().map_or(0, |t| t.values.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn mean(&self, name: &str) -> Option<f64> {
        let v = self.column(name)?;
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Pearson correlation of two traces.
    pub fn correlation(&self, a: &str, b: &str) -> Option<f64> {
        let (x, y) = (self.column(a)?, self.column(b)?);
        pearson(x, y)
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}
