use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{ParamKey, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Random-walk standard deviations; missing keys use 5% of the support width.
    pub proposal_scales: BTreeMap<ParamKey, f64>,
    /// Random-walk standard deviation for activity centres; defaults to sigma_f / 2.
    pub s_scale: Option<f64>,
    /// Robbins-Monro tuning of proposal scales, burn-in only.
    pub adapt: bool,
    pub adapt_window: usize,
    pub target_acceptance: f64,
    /// Upper bound of the uniform sigma priors.
    pub r: f64,
    /// Augmentation bound.
    pub m: usize,
    /// Parameters held at their initial values.
    pub fixed: BTreeSet<ParamKey>,
    /// Restricts activity centres to these points (uniform prior over them).
    pub s_grid: Option<Vec<Point>>,
    /// Keep the activity centres of included individuals at every kept iteration.
    pub keep_snapshots: bool,
    /// Linkage swap attempts per sweep; defaults to the number of single-flank rows.
    pub linkage_attempts: Option<usize>,
    /// Emit a progress record every this many sweeps.
    pub progress_every: Option<usize>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        Self {
            iterations: 30_000,
            burn_in: 10_000,
            thin: 1,
            seed: 1,
            proposal_scales: BTreeMap::new(),
            s_scale: None,
            adapt: true,
            adapt_window: 100,
            target_acceptance: 0.3,
            r: 1.0,
            m: 400,
            fixed: BTreeSet::new(),
            s_grid: None,
            keep_snapshots: false,
            linkage_attempts: None,
            progress_every: None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.iterations == 0 {
            return fail("iterations must be positive".into());
        }
        if self.burn_in >= self.iterations {
            return fail(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            ));
        }
        if self.thin == 0 {
            return fail("thin must be at least 1".into());
        }
        if self.m == 0 {
            return fail("M must be positive".into());
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return fail(format!("R must be positive, got {}", self.r));
        }
        if let Some((k, v)) = self
            .proposal_scales
            .iter()
            .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
        {
            return fail(format!("proposal scale for {k} must be positive, got {v}"));
        }
        if let Some(v) = self.s_scale {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("activity centre proposal scale must be positive, got {v}"));
            }
        }
        if self.adapt && self.adapt_window == 0 {
            return fail("adapt_window must be positive".into());
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return fail(format!(
                "target_acceptance must lie in (0, 1), got {}",
                self.target_acceptance
            ));
        }
        if let Some(grid) = &self.s_grid {
            if grid.is_empty() {
                return fail("activity centre grid is empty".into());
            }
        }
        if self.progress_every == Some(0) {
            return fail("progress_every must be positive".into());
        }
        Ok(())
    }

    /// Number of draws a run keeps.
    pub fn kept(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(McmcConfig::default().validate().is_ok());
        let bad = McmcConfig {
            burn_in: 10,
            iterations: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = McmcConfig {
            thin: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let mut bad = McmcConfig::default();
        bad.proposal_scales.insert(ParamKey::Phi, 0.0);
        assert!(bad.validate().is_err());
        assert_eq!(McmcConfig::default().kept(), 20_000);
        let c = McmcConfig {
            iterations: 105,
            burn_in: 5,
            thin: 3,
            ..Default::default()
        };
        assert_eq!(c.kept(), 33);
    }
}
