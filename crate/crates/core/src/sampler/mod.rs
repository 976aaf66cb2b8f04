//! Metropolis-within-Gibbs sampler and posterior summaries.

mod chain;
mod config;
mod samples;
mod summary;

pub use chain::{x_conditional, z_conditional, Chain, ProgressRecord};
pub use config::McmcConfig;
pub use samples::{pearson, PosteriorSamples, Trace};
pub use summary::{is_count_param, quantile, summarize, summarize_trace, ParamSummary, Summary};

use rand::Rng;

use crate::error::Result;
use crate::history::History;
use crate::linkage::{augment, AugmentedData, Linkage};
use crate::model::{
    AugmentedState, CaptureData, DetectionModel, ModelKind, ModelParams, Point, ReducedParams,
    StateSpace, TrapArray,
};
use crate::rng::{self, CHAIN_STREAM};

/// Fits `model` to `data` with the chain seeded from `config.seed`.
pub fn run_chain(
    data: &CaptureData,
    traps: &TrapArray,
    space: &StateSpace,
    config: &McmcConfig,
    model: ModelKind,
) -> Result<PosteriorSamples> {
    run_chain_with_progress(data, traps, space, config, model, &mut |_| {})
}

pub fn run_chain_with_progress(
    data: &CaptureData,
    traps: &TrapArray,
    space: &StateSpace,
    config: &McmcConfig,
    model: ModelKind,
    on_progress: &mut dyn FnMut(&ProgressRecord),
) -> Result<PosteriorSamples> {
    let rng = rng::stream(config.seed, CHAIN_STREAM);
    run_chain_from(data, traps, space, config, model, rng, on_progress)
}

/// As [`run_chain`] with an explicit random stream.
pub fn run_chain_from(
    data: &CaptureData,
    traps: &TrapArray,
    space: &StateSpace,
    config: &McmcConfig,
    model: ModelKind,
    mut rng: rng::ChainRng,
    on_progress: &mut dyn FnMut(&ProgressRecord),
) -> Result<PosteriorSamples> {
    config.validate()?;
    traps.check_inside(space)?;
    let (aug, link) = augment(data, config.m)?;
    match model {
        ModelKind::Identified => {
            let params = initial_params(&aug, traps, config);
            params.validate()?;
            let state = initial_state(&aug, link, traps, space, config, &params, &mut rng);
            let mut chain = Chain::new(aug, traps.clone(), *space, params, state, config.clone(), rng)?;
            Ok(chain.run_with_progress(on_progress))
        }
        ModelKind::Reduced => {
            let full = initial_params(&aug, traps, config);
            let params = ReducedParams {
                psi: full.psi,
                theta: full.theta,
                lambda0: full.phi * full.p0,
                sigma_m: full.sigma_m,
                sigma_f: full.sigma_f,
                r: full.r,
            };
            params.validate()?;
            let state = initial_state(&aug, link, traps, space, config, &params, &mut rng);
            let mut chain = Chain::new(aug, traps.clone(), *space, params, state, config.clone(), rng)?;
            Ok(chain.run_with_progress(on_progress))
        }
    }
}

fn detection_points(histories: &[&History], traps: &TrapArray) -> Vec<Point> {
    let mut traps_hit: Vec<usize> = histories
        .iter()
        .flat_map(|h| h.ones().map(|(k, _)| k))
        .collect();
    traps_hit.sort_unstable();
    traps_hit.dedup();
    traps_hit.into_iter().map(|k| traps.stations()[k]).collect()
}

fn centroid(pts: &[Point]) -> Point {
    let n = pts.len() as f64;
    Point::new(
        pts.iter().map(|p| p.x).sum::<f64>() / n,
        pts.iter().map(|p| p.y).sum::<f64>() / n,
    )
}

/// Rough starting values: `psi` from the number of detected records, `sigma`
/// from the spread of detections around each animal's centroid.
pub fn initial_params(data: &AugmentedData, traps: &TrapArray, config: &McmcConfig) -> ModelParams {
    let records = (0..data.n_full())
        .map(|i| vec![&data.left[i], &data.right[i]])
        .chain(data.left_only_rows().map(|i| vec![&data.left[i]]))
        .chain(data.right_only_rows().map(|r| vec![&data.right[r]]));
    let mut spread = Vec::new();
    for hs in records {
        let pts = detection_points(&hs, traps);
        if pts.len() < 2 {
            continue;
        }
        let c = centroid(&pts);
        let msd = pts.iter().map(|p| p.dist2(&c)).sum::<f64>() / pts.len() as f64;
        spread.push(msd.sqrt());
    }
    let r = config.r;
    let sigma = if spread.is_empty() {
        traps.min_spacing().unwrap_or(0.25 * r)
    } else {
        spread.iter().sum::<f64>() / spread.len() as f64
    }
    .clamp(0.05 * r, 0.5 * r);
    let detected = (data.n_full() + data.n_left() + data.n_right()) as f64;
    let psi = (1.5 * detected / data.m() as f64).clamp(0.05, 0.95);
    ModelParams {
        psi,
        theta: 0.5,
        phi: 0.5,
        p0: 0.05,
        sigma_m: sigma,
        sigma_f: sigma,
        r,
    }
}

fn nearest(grid: &[Point], p: &Point) -> Point {
    *grid
        .iter()
        .min_by(|a, b| a.dist2(p).total_cmp(&b.dist2(p)))
        .expect("grid is non-empty")
}

/// Starting latent state: detected rows included with centres at their
/// detection centroid, padding rows drawn from the priors.
pub fn initial_state<P: DetectionModel, R: Rng + ?Sized>(
    data: &AugmentedData,
    link: Linkage,
    traps: &TrapArray,
    space: &StateSpace,
    config: &McmcConfig,
    params: &P,
    rng: &mut R,
) -> AugmentedState {
    let m = data.m();
    let grid = config.s_grid.as_deref();
    let mut z = vec![false; m];
    let mut male = vec![false; m];
    let mut s = Vec::with_capacity(m);
    for i in 0..m {
        let r = link.right_row(i);
        let detected = data.is_detected(i, r);
        z[i] = detected || rng.random_bool(params.psi());
        male[i] = match data.observed_sex(i, r).and_then(|x| x.is_male()) {
            Some(obs) => obs,
            None => rng.random_bool(params.theta()),
        };
        let centre = if detected {
            let c = centroid(&detection_points(&[&data.left[i], &data.right[r]], traps));
            let c = Point::new(
                c.x.clamp(space.xmin, space.xmax),
                c.y.clamp(space.ymin, space.ymax),
            );
            grid.map_or(c, |g| nearest(g, &c))
        } else {
            match grid {
                Some(g) => g[rng.random_range(0..g.len())],
                None => space.sample_uniform(rng),
            }
        };
        s.push(centre);
    }
    AugmentedState { z, male, s, link }
}
