use std::fmt;
use std::str::FromStr;

use super::kernels::{ln_1m, xlogy, SufficientStats};
use super::LOG_ZERO;
use crate::error::{Error, Result};

/// Past this value of `d^2 / 2 sigma^2` a trap without detections is skipped;
/// its log-likelihood term is below `2 J e^{-36}` in magnitude.
pub(crate) const FAR_EXPONENT: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    Psi,
    Theta,
    Phi,
    P0,
    Lambda0,
    SigmaM,
    SigmaF,
}

impl ParamKey {
    pub const ALL: [ParamKey; 7] = [
        ParamKey::Psi,
        ParamKey::Theta,
        ParamKey::Phi,
        ParamKey::P0,
        ParamKey::Lambda0,
        ParamKey::SigmaM,
        ParamKey::SigmaF,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamKey::Psi => "psi",
            ParamKey::Theta => "theta",
            ParamKey::Phi => "phi",
            ParamKey::P0 => "p0",
            ParamKey::Lambda0 => "lambda0",
            ParamKey::SigmaM => "sigma_m",
            ParamKey::SigmaF => "sigma_f",
        }
    }

    pub fn is_scale(self) -> bool {
        matches!(self, ParamKey::SigmaM | ParamKey::SigmaF)
    }
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamKey::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown parameter `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Trap entry and detector detection are separate layers.
    Identified,
    /// Single-layer model: each detector fires with `lambda0 * exp(-d^2 / 2 sigma^2)`.
    Reduced,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Identified => "identified",
            ModelKind::Reduced => "reduced",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identified" => Ok(ModelKind::Identified),
            "reduced" => Ok(ModelKind::Reduced),
            other => Err(Error::Config(format!(
                "unknown model `{other}` (expected identified or reduced)"
            ))),
        }
    }
}

/// Parameter vector shared by the sampler and the posterior evaluators.
pub trait DetectionModel: Clone + fmt::Debug + Send + Sync {
    fn kind(&self) -> ModelKind;

    /// Parameters updated by random-walk Metropolis, in update order.
    fn scalar_keys(&self) -> &'static [ParamKey];

    fn get(&self, key: ParamKey) -> f64;

    fn set(&mut self, key: ParamKey, value: f64);

    /// Upper bound of the sigma priors.
    fn sigma_bound(&self) -> f64;

    fn psi(&self) -> f64 {
        self.get(ParamKey::Psi)
    }

    fn theta(&self) -> f64 {
        self.get(ParamKey::Theta)
    }

    fn sigma(&self, male: bool) -> f64 {
        if male {
            self.get(ParamKey::SigmaM)
        } else {
            self.get(ParamKey::SigmaF)
        }
    }

    /// Upper end of the open support of `key`.
    fn upper(&self, key: ParamKey) -> f64 {
        if key.is_scale() {
            self.sigma_bound()
        } else {
            1.0
        }
    }

    fn in_support(&self) -> bool {
        [ParamKey::Psi, ParamKey::Theta]
            .iter()
            .chain(self.scalar_keys())
            .all(|&k| {
                let v = self.get(k);
                v > 0.0 && v < self.upper(k)
            })
    }

    /// Log-likelihood of one individual's detection data, given the squared
    /// distances from its activity centre to every trap.
    fn row_log_lik(&self, stats: &SufficientStats, d2: &[f64], male: bool, occasions: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub psi: f64,
    pub theta: f64,
    /// Per-detector detection probability given trap entry.
    pub phi: f64,
    /// Baseline trap entry probability.
    pub p0: f64,
    pub sigma_m: f64,
    pub sigma_f: f64,
    pub r: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::Domain(format!("R must be positive, got {}", self.r)));
        }
        if !self.in_support() {
            return Err(Error::Domain(format!(
                "parameters outside their open support: {self:?}"
            )));
        }
        Ok(())
    }
}

impl DetectionModel for ModelParams {
    fn kind(&self) -> ModelKind {
        ModelKind::Identified
    }

    fn scalar_keys(&self) -> &'static [ParamKey] {
        &[ParamKey::Phi, ParamKey::P0, ParamKey::SigmaM, ParamKey::SigmaF]
    }

    fn get(&self, key: ParamKey) -> f64 {
        match key {
            ParamKey::Psi => self.psi,
            ParamKey::Theta => self.theta,
            ParamKey::Phi => self.phi,
            ParamKey::P0 => self.p0,
            ParamKey::SigmaM => self.sigma_m,
            ParamKey::SigmaF => self.sigma_f,
            ParamKey::Lambda0 => panic!("lambda0 is not a parameter of the identified model"),
        }
    }

    fn set(&mut self, key: ParamKey, value: f64) {
        match key {
            ParamKey::Psi => self.psi = value,
            ParamKey::Theta => self.theta = value,
            ParamKey::Phi => self.phi = value,
            ParamKey::P0 => self.p0 = value,
            ParamKey::SigmaM => self.sigma_m = value,
            ParamKey::SigmaF => self.sigma_f = value,
            ParamKey::Lambda0 => panic!("lambda0 is not a parameter of the identified model"),
        }
    }

    fn sigma_bound(&self) -> f64 {
        self.r
    }

    fn row_log_lik(&self, stats: &SufficientStats, d2: &[f64], male: bool, occasions: usize) -> f64 {
        let sigma = self.sigma(male);
        let inv = 1.0 / (2.0 * sigma * sigma);
        let phi = self.phi;
        // P(at least one detector fires | entry); the all-miss cell is 1 - pi * fire.
        let fire = phi * (2.0 - phi);
        let y = (stats.y1 + stats.y2) as f64;
        let n_dot = stats.n_dot as f64;
        let mut ll = xlogy(y, phi) + xlogy(2.0 * n_dot - y, 1.0 - phi);
        let j = occasions as u32;
        for (&dk2, &nk) in d2.iter().zip(&stats.n) {
            let e = dk2 * inv;
            if nk == 0 && e > FAR_EXPONENT {
                continue;
            }
            let pi = self.p0 * (-e).exp();
            if nk > 0 {
                if pi <= 0.0 {
                    return LOG_ZERO;
                }
                ll += nk as f64 * pi.ln();
            }
            let misses = j - nk;
            if misses > 0 {
                ll += misses as f64 * ln_1m(pi * fire);
            }
        }
        ll
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub psi: f64,
    pub theta: f64,
    /// Baseline per-detector detection probability, no entry layer.
    pub lambda0: f64,
    pub sigma_m: f64,
    pub sigma_f: f64,
    pub r: f64,
}

impl ReducedParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::Domain(format!("R must be positive, got {}", self.r)));
        }
        if !self.in_support() {
            return Err(Error::Domain(format!(
                "parameters outside their open support: {self:?}"
            )));
        }
        Ok(())
    }
}

impl DetectionModel for ReducedParams {
    fn kind(&self) -> ModelKind {
        ModelKind::Reduced
    }

    fn scalar_keys(&self) -> &'static [ParamKey] {
        &[ParamKey::Lambda0, ParamKey::SigmaM, ParamKey::SigmaF]
    }

    fn get(&self, key: ParamKey) -> f64 {
        match key {
            ParamKey::Psi => self.psi,
            ParamKey::Theta => self.theta,
            ParamKey::Lambda0 => self.lambda0,
            ParamKey::SigmaM => self.sigma_m,
            ParamKey::SigmaF => self.sigma_f,
            ParamKey::Phi | ParamKey::P0 => {
                panic!("{key} is not a parameter of the reduced model")
            }
        }
    }

    fn set(&mut self, key: ParamKey, value: f64) {
        match key {
            ParamKey::Psi => self.psi = value,
            ParamKey::Theta => self.theta = value,
            ParamKey::Lambda0 => self.lambda0 = value,
            ParamKey::SigmaM => self.sigma_m = value,
            ParamKey::SigmaF => self.sigma_f = value,
            ParamKey::Phi | ParamKey::P0 => {
                panic!("{key} is not a parameter of the reduced model")
            }
        }
    }

    fn sigma_bound(&self) -> f64 {
        self.r
    }

    fn row_log_lik(&self, stats: &SufficientStats, d2: &[f64], male: bool, occasions: usize) -> f64 {
        let sigma = self.sigma(male);
        let inv = 1.0 / (2.0 * sigma * sigma);
        let trials = 2 * occasions as u32;
        let mut ll = 0.0;
        for (&dk2, &ck) in d2.iter().zip(&stats.c) {
            let e = dk2 * inv;
            if ck == 0 && e > FAR_EXPONENT {
                continue;
            }
            let p = self.lambda0 * (-e).exp();
            if ck > 0 {
                if p <= 0.0 {
                    return LOG_ZERO;
                }
                ll += ck as f64 * p.ln();
            }
            let misses = trials - ck;
            if misses > 0 {
                ll += misses as f64 * ln_1m(p);
            }
        }
        ll
    }
}
