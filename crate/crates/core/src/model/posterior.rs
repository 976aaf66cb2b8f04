use super::params::{DetectionModel, ModelParams, ReducedParams};
use super::{Point, StateSpace, TrapArray, LOG_ZERO};
use crate::error::{Error, Result};
use crate::linkage::{AugmentedData, Linkage};

/// Latent state of the data-augmented model: inclusion, sex, activity centre per
/// true index, and the linkage of detector-2 rows.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedState {
    pub z: Vec<bool>,
    pub male: Vec<bool>,
    pub s: Vec<Point>,
    pub link: Linkage,
}

impl AugmentedState {
    pub fn m(&self) -> usize {
        self.z.len()
    }

    pub fn n_alive(&self) -> usize {
        self.z.iter().filter(|&&z| z).count()
    }

    pub fn n_male(&self) -> usize {
        self.z.iter().zip(&self.male).filter(|(&z, &x)| z && x).count()
    }

    pub fn check_shape(&self, m: usize) -> Result<()> {
        if self.z.len() != m || self.male.len() != m || self.s.len() != m || self.link.len() != m {
            return Err(Error::Config(format!("state vectors must all have length M = {m}")));
        }
        Ok(())
    }
}

/// Sums terms in an order that depends only on their values, so relabelling
/// rows leaves the result bit-identical.
fn canonical_sum(mut terms: Vec<f64>) -> f64 {
    if terms.contains(&LOG_ZERO) {
        return LOG_ZERO;
    }
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

pub(crate) fn generic_log_posterior<P: DetectionModel>(
    state: &AugmentedState,
    data: &AugmentedData,
    params: &P,
    space: &StateSpace,
    traps: &TrapArray,
) -> Result<f64> {
    let m = data.m();
    state.check_shape(m)?;
    data.check_linkage(&state.link)?;
    if traps.len() != data.traps() {
        return Err(Error::Config("trap array does not match the data".into()));
    }
    let r = params.sigma_bound();
    if !params.in_support() || !(r > 0.0) {
        return Ok(LOG_ZERO);
    }
    if state.s.iter().any(|p| !space.contains(p)) {
        return Ok(LOG_ZERO);
    }

    let (psi, theta) = (params.psi(), params.theta());
    let mut d2 = vec![0.0; traps.len()];
    let mut terms = Vec::with_capacity(m + 1);
    for i in 0..m {
        let row = state.link.right_row(i);
        if !state.z[i] {
            if data.is_detected(i, row) {
                return Ok(LOG_ZERO);
            }
            terms.push((1.0 - psi).ln());
            continue;
        }
        let sex = data
            .observed_sex(i, row)
            .expect("linkage was checked for sex conflicts");
        if sex.is_male().is_some_and(|obs| obs != state.male[i]) {
            return Ok(LOG_ZERO);
        }
        traps.dist2_into(&state.s[i], &mut d2);
        let stats = data.stats_for(i, row);
        let ll = params.row_log_lik(&stats, &d2, state.male[i], data.occasions());
        let sex_term = if state.male[i] { theta.ln() } else { (1.0 - theta).ln() };
        terms.push(ll + sex_term + psi.ln());
    }
    // Uniform priors: sigma_m, sigma_f on (0, R), activity centres on the state space.
    terms.push(-2.0 * r.ln() - m as f64 * space.area().ln());
    Ok(canonical_sum(terms))
}

/// Log of the joint posterior kernel of the identified model, up to the
/// normalising constant. Returns [`LOG_ZERO`] outside the prior support and
/// an error if the linkage breaks its structural constraints.
pub fn log_posterior(
    state: &AugmentedState,
    data: &AugmentedData,
    params: &ModelParams,
    space: &StateSpace,
    traps: &TrapArray,
) -> Result<f64> {
    generic_log_posterior(state, data, params, space, traps)
}

/// As [`log_posterior`] for the single-layer reduced model.
pub fn reduced_log_posterior(
    state: &AugmentedState,
    data: &AugmentedData,
    params: &ReducedParams,
    space: &StateSpace,
    traps: &TrapArray,
) -> Result<f64> {
    generic_log_posterior(state, data, params, space, traps)
}
