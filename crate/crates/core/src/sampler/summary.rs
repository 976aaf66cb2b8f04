use super::PosteriorSamples;
use crate::error::{Error, Result};

/// Posterior summary of one parameter in the layout of a results table.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q50: f64,
    pub q975: f64,
    pub ci_width: f64,
    /// Count-valued parameter (N, N_male): mean is reported rounded.
    pub integer: bool,
    /// Back-simulation coverage of the 95% interval, when known.
    pub coverage: Option<f64>,
}

impl ParamSummary {
    pub fn reported_mean(&self) -> f64 {
        if self.integer {
            self.mean.round()
        } else {
            self.mean
        }
    }

    pub fn covers(&self, truth: f64) -> bool {
        self.q025 <= truth && truth <= self.q975
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub rows: Vec<ParamSummary>,
}

impl Summary {
    pub fn get(&self, name: &str) -> Option<&ParamSummary> {
        self.rows.iter().find(|r| r.name == name)
    }
}

/// Quantile of sorted data by linear interpolation between order statistics
/// at position `(n - 1) p`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn is_count_param(name: &str) -> bool {
    matches!(name, "N" | "N_male")
}

pub fn summarize_trace(name: &str, values: &[f64]) -> Result<ParamSummary> {
    if values.is_empty() {
        return Err(Error::Empty("no samples to summarise"));
    }
    let n = values.len() as f64;
    let rough = values.iter().sum::<f64>() / n;
    let mean = rough + values.iter().map(|v| v - rough).sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q025, q50, q975) = (
        quantile(&sorted, 0.025),
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.975),
    );
    Ok(ParamSummary {
        name: name.to_string(),
        mean,
        sd,
        q025,
        q50,
        q975,
        ci_width: q975 - q025,
        integer: is_count_param(name),
        coverage: None,
    })
}

pub fn summarize(samples: &PosteriorSamples) -> Result<Summary> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples to summarise"));
    }
    let rows = samples
        .traces
        .iter()
        .map(|t| summarize_trace(&t.name, &t.values))
        .collect::<Result<_>>()?;
    Ok(Summary { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_chain() {
        let s = summarize_trace("phi", &[0.4; 50]).unwrap();
        assert_eq!(s.mean, 0.4);
        assert_eq!(s.sd, 0.0);
        assert_eq!((s.q025, s.q50, s.q975), (0.4, 0.4, 0.4));
        assert_eq!(s.ci_width, 0.0);
    }

    #[test]
    fn uniform_ranks() {
        let v: Vec<f64> = (1..=10_000).map(f64::from).collect();
        let s = summarize_trace("N", &v).unwrap();
        assert_eq!(s.q50, 5000.5);
        // (n - 1) * 0.025 = 249.975 -> 250 + 0.975
        assert!((s.q025 - 250.975).abs() < 1e-9);
        assert!((s.q975 - 9750.025).abs() < 1e-9);
        assert_eq!(s.reported_mean(), 5001.0);
        assert!(s.integer);
    }

    #[test]
    fn empty_rejected() {
        assert!(summarize_trace("psi", &[]).is_err());
    }
}
