use rayon::prelude::*;

use super::{simulate_with_rng, ScenarioSpec};
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::rng::{self, replicate_chain_stream, replicate_data_stream};
use crate::sampler::{run_chain_from, summarize, McmcConfig, Summary};

/// Result of one back-simulation replicate.
#[derive(Debug, Clone)]
pub struct ReplicateOutcome {
    pub rep: usize,
    /// Posterior summary and per-parameter interval coverage, or the fit error.
    pub result: std::result::Result<(Summary, Vec<(String, bool)>), String>,
}

#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub truth: Vec<(String, f64)>,
    /// Share of successful replicates whose 95% interval covers the truth.
    pub coverage: Vec<(String, f64)>,
    pub replicates: Vec<ReplicateOutcome>,
}

impl CoverageReport {
    pub fn coverage(&self, name: &str) -> Option<f64> {
        self.coverage.iter().find(|(n, _)| n == name).map(|(_, c)| *c)
    }

    pub fn succeeded(&self) -> usize {
        self.replicates.iter().filter(|r| r.result.is_ok()).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &str)> {
        self.replicates
            .iter()
            .filter_map(|r| r.result.as_ref().err().map(|e| (r.rep, e.as_str())))
    }
}

/// True parameter values of a scenario fitted with augmentation bound `m`.
pub fn scenario_truth(spec: &ScenarioSpec, m: usize) -> Vec<(String, f64)> {
    let n = spec.n_true as f64;
    let theta = if spec.n_true > 0 {
        spec.n_male_true as f64 / n
    } else {
        0.0
    };
    [
        ("N", n),
        ("N_male", spec.n_male_true as f64),
        ("psi", n / m as f64),
        ("theta", theta),
        ("phi", spec.phi),
        ("p0", spec.p0),
        ("sigma_m", spec.sigma_m),
        ("sigma_f", spec.sigma_f),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Simulates `reps` datasets at the scenario values, fits each with the
/// identified model, and reports how often the 95% central intervals cover the
/// truth. Replicates run in parallel; replicate `rep` draws its data and chain
/// from streams `2 rep + 2` and `2 rep + 3` of `mcmc.seed`.
pub fn back_simulate(spec: &ScenarioSpec, reps: usize, mcmc: &McmcConfig) -> Result<CoverageReport> {
    if reps == 0 {
        return Err(Error::Config("back simulation needs at least one replicate".into()));
    }
    spec.validate()?;
    mcmc.validate()?;
    if spec.n_true > mcmc.m {
        return Err(Error::Config(format!(
            "true N ({}) exceeds the augmentation bound M ({})",
            spec.n_true, mcmc.m
        )));
    }
    let truth = scenario_truth(spec, mcmc.m);
    let replicates: Vec<ReplicateOutcome> = (0..reps)
        .into_par_iter()
        .map(|rep| ReplicateOutcome {
            rep,
            result: run_replicate(spec, mcmc, rep, &truth).map_err(|e| e.to_string()),
        })
        .collect();

    let ok: Vec<&Vec<(String, bool)>> = replicates
        .iter()
        .filter_map(|r| r.result.as_ref().ok().map(|(_, c)| c))
        .collect();
    let coverage = truth
        .iter()
        .map(|(name, _)| {
            let hits = ok
                .iter()
                .filter(|c| c.iter().any(|(n, hit)| n == name && *hit))
                .count();
            let share = if ok.is_empty() {
                f64::NAN
            } else {
                hits as f64 / ok.len() as f64
            };
            (name.clone(), share)
        })
        .collect();
    Ok(CoverageReport {
        truth,
        coverage,
        replicates,
    })
}

fn run_replicate(
    spec: &ScenarioSpec,
    mcmc: &McmcConfig,
    rep: usize,
    truth: &[(String, f64)],
) -> Result<(Summary, Vec<(String, bool)>)> {
    let mut data_rng = rng::stream(mcmc.seed, replicate_data_stream(rep));
    let (data, _) = simulate_with_rng(spec, &mut data_rng)?;
    let chain_rng = rng::stream(mcmc.seed, replicate_chain_stream(rep));
    let samples = run_chain_from(
        &data,
        &spec.traps,
        &spec.space,
        mcmc,
        ModelKind::Identified,
        chain_rng,
        &mut |_| {},
    )?;
    let summary = summarize(&samples)?;
    let covered = truth
        .iter()
        .map(|(name, value)| {
            let hit = summary.get(name).is_some_and(|row| row.covers(*value));
            (name.clone(), hit)
        })
        .collect();
    Ok((summary, covered))
}
