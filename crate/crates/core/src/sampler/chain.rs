use std::fmt;

use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::{McmcConfig, PosteriorSamples};
use crate::error::{Error, Result};
use crate::linkage::AugmentedData;
use crate::model::{
    generic_log_posterior, AugmentedState, DetectionModel, ParamKey, Point, StateSpace,
    SufficientStats, TrapArray, LOG_ZERO,
};
use crate::rng::ChainRng;

const S_KERNEL: usize = ParamKey::ALL.len();
const LINK_KERNEL: usize = S_KERNEL + 1;
const KERNELS: usize = LINK_KERNEL + 1;

fn kernel_name(k: usize) -> &'static str {
    match k {
        S_KERNEL => "s",
        LINK_KERNEL => "linkage",
        _ => ParamKey::ALL[k].name(),
    }
}

/// Posterior probability that a row is included, given its log-likelihood
/// under the current sex and activity centre.
pub fn z_conditional(psi: f64, ll: f64) -> f64 {
    if ll == LOG_ZERO {
        return 0.0;
    }
    let logit = psi.ln() + ll - (-psi).ln_1p();
    1.0 / (1.0 + (-logit).exp())
}

/// Posterior probability that an included row of unobserved sex is male.
pub fn x_conditional(theta: f64, ll_male: f64, ll_female: f64) -> f64 {
    match (ll_male == LOG_ZERO, ll_female == LOG_ZERO) {
        (true, true) => theta,
        (true, false) => 0.0,
        (false, true) => 1.0,
        (false, false) => {
            let logit = theta.ln() - (-theta).ln_1p() + ll_male - ll_female;
            1.0 / (1.0 + (-logit).exp())
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    accepted: u64,
    attempted: u64,
}

impl Tally {
    fn record(&mut self, accepted: bool) {
        self.attempted += 1;
        self.accepted += accepted as u64;
    }

    fn rate(&self) -> Option<f64> {
        (self.attempted > 0).then(|| self.accepted as f64 / self.attempted as f64)
    }
}

/// Snapshot of chain health emitted every `progress_every` sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgressRecord {
    pub iteration: usize,
    pub log_posterior: f64,
    pub n_alive: usize,
    pub acceptance: Vec<(String, f64)>,
}

impl fmt::Display for ProgressRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "iter {} log_post {:.3} N {}",
            self.iteration, self.log_posterior, self.n_alive
        )?;
        for (name, rate) in &self.acceptance {
            write!(f, " acc_{name} {rate:.3}")?;
        }
        Ok(())
    }
}

/// Metropolis-within-Gibbs chain over the augmented state and parameters.
///
/// Each sweep updates inclusion, sex, activity centres, `psi`, `theta`, the
/// scalar detection parameters and finally the linkage. The per-row squared
/// trap distances and the log-likelihood of every included row are cached and
/// kept in step with the state.
pub struct Chain<P: DetectionModel> {
    data: AugmentedData,
    traps: TrapArray,
    space: StateSpace,
    config: McmcConfig,
    params: P,
    state: AugmentedState,
    stats: Vec<SufficientStats>,
    d2: Vec<f64>,
    ll: Vec<f64>,
    scales: [f64; 7],
    s_scale: f64,
    window: [Tally; KERNELS],
    total: [Tally; KERNELS],
    adapt_round: usize,
    linkage_attempts: usize,
    rng: ChainRng,
    iteration: usize,
    buf_d2: Vec<f64>,
    buf_ll: Vec<f64>,
}

impl<P: DetectionModel> Chain<P> {
    /// Builds a chain from an explicit starting point, which must have positive
    /// posterior density.
    pub fn new(
        data: AugmentedData,
        traps: TrapArray,
        space: StateSpace,
        params: P,
        state: AugmentedState,
        config: McmcConfig,
        rng: ChainRng,
    ) -> Result<Self> {
        config.validate()?;
        let m = data.m();
        let k = traps.len();
        if config.m != m {
            return Err(Error::Config(format!(
                "config has M = {} but the data are augmented to {m}",
                config.m
            )));
        }
        if let Some(grid) = &config.s_grid {
            if let Some(p) = grid.iter().find(|p| !space.contains(p)) {
                return Err(Error::Config(format!(
                    "grid point ({}, {}) lies outside the state space",
                    p.x, p.y
                )));
            }
            if let Some(i) = (0..m).find(|&i| !grid.contains(&state.s[i])) {
                return Err(Error::Config(format!(
                    "activity centre of row {i} is not a grid point"
                )));
            }
        }
        let lp = generic_log_posterior(&state, &data, &params, &space, &traps)?;
        if lp == LOG_ZERO {
            return Err(Error::Config(
                "initial state has zero posterior density".into(),
            ));
        }

        let mut d2 = vec![0.0; m * k];
        for (i, s) in state.s.iter().enumerate() {
            traps.dist2_into(s, &mut d2[i * k..(i + 1) * k]);
        }
        let stats = data.all_stats(&state.link);
        let mut scales = [0.0; 7];
        for &key in params.scalar_keys() {
            let default = (0.05 * params.upper(key)).min(0.25 * params.get(key));
            scales[key as usize] = config.proposal_scales.get(&key).copied().unwrap_or(default);
        }
        let s_scale = config
            .s_scale
            .unwrap_or(0.5 * params.get(ParamKey::SigmaF));
        let linkage_attempts = config.linkage_attempts.unwrap_or(if data.n_right() > 0 {
            data.n_left() + data.n_right()
        } else {
            0
        });

        let mut chain = Self {
            ll: vec![0.0; m],
            buf_d2: vec![0.0; k],
            buf_ll: vec![0.0; m],
            data,
            traps,
            space,
            config,
            params,
            state,
            stats,
            d2,
            scales,
            s_scale,
            window: [Tally::default(); KERNELS],
            total: [Tally::default(); KERNELS],
            adapt_round: 0,
            linkage_attempts,
            rng,
            iteration: 0,
        };
        for i in 0..m {
            if chain.state.z[i] {
                chain.ll[i] = chain.row_ll(i, chain.state.male[i]);
            }
        }
        Ok(chain)
    }

    pub fn params(&self) -> &P {
        &self.params
    }

    pub fn state(&self) -> &AugmentedState {
        &self.state
    }

    pub fn data(&self) -> &AugmentedData {
        &self.data
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn proposal_scale(&self, key: ParamKey) -> f64 {
        self.scales[key as usize]
    }

    pub fn into_parts(self) -> (P, AugmentedState, ChainRng) {
        (self.params, self.state, self.rng)
    }

    fn k(&self) -> usize {
        self.traps.len()
    }

    fn row_ll(&self, i: usize, male: bool) -> f64 {
        let k = self.k();
        self.params.row_log_lik(
            &self.stats[i],
            &self.d2[i * k..(i + 1) * k],
            male,
            self.data.occasions(),
        )
    }

    fn is_fixed(&self, key: ParamKey) -> bool {
        self.config.fixed.contains(&key)
    }

    /// Log posterior kernel assembled from the caches.
    pub fn cached_log_posterior(&self) -> f64 {
        let (psi, theta) = (self.params.psi(), self.params.theta());
        let r = self.params.sigma_bound();
        let mut lp = -2.0 * r.ln() - self.data.m() as f64 * self.space.area().ln();
        for i in 0..self.data.m() {
            lp += if self.state.z[i] {
                let sex = if self.state.male[i] { theta.ln() } else { (-theta).ln_1p() };
                self.ll[i] + sex + psi.ln()
            } else {
                (-psi).ln_1p()
            };
        }
        lp
    }

    /// Log posterior kernel recomputed from scratch.
    pub fn log_posterior(&self) -> Result<f64> {
        generic_log_posterior(&self.state, &self.data, &self.params, &self.space, &self.traps)
    }

    /// Compares the cached statistics and likelihoods against a full recompute.
    pub fn check_consistency(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !self.state.link.is_bijection() {
            return fail("linkage is not a bijection".into());
        }
        self.data.check_linkage(&self.state.link)?;
        if self.stats != self.data.all_stats(&self.state.link) {
            return fail("cached sufficient statistics are stale".into());
        }
        let k = self.k();
        let mut d2 = vec![0.0; k];
        for i in 0..self.data.m() {
            self.traps.dist2_into(&self.state.s[i], &mut d2);
            if d2 != self.d2[i * k..(i + 1) * k] {
                return fail(format!("cached distances of row {i} are stale"));
            }
            if self.state.z[i] {
                let fresh = self.row_ll(i, self.state.male[i]);
                if (fresh - self.ll[i]).abs() > 1e-9 * fresh.abs().max(1.0) {
                    return fail(format!(
                        "cached log-likelihood of row {i} is stale ({} vs {fresh})",
                        self.ll[i]
                    ));
                }
            }
        }
        Ok(())
    }

    /// One full sweep of every update.
    pub fn sweep(&mut self) {
        self.update_z();
        self.update_x();
        self.update_s();
        if !self.is_fixed(ParamKey::Psi) {
            self.update_psi();
        }
        if !self.is_fixed(ParamKey::Theta) {
            self.update_theta();
        }
        for &key in self.params.scalar_keys() {
            if !self.is_fixed(key) {
                self.update_scalar(key);
            }
        }
        for _ in 0..self.linkage_attempts {
            self.update_linkage();
        }
        debug_assert!(self.state.link.is_bijection());
        self.iteration += 1;
        if self.config.adapt
            && self.iteration <= self.config.burn_in
            && self.iteration % self.config.adapt_window == 0
        {
            self.adapt();
        }
    }

    /// Inclusion of undetected rows. Rows currently excluded first get a fresh
    /// sex from its prior, which is then kept if the row enters.
    pub fn update_z(&mut self) {
        let psi = self.params.psi();
        let theta = self.params.theta();
        for i in 0..self.data.m() {
            let r = self.state.link.right_row(i);
            if self.data.is_detected(i, r) {
                continue;
            }
            let ll = if self.state.z[i] {
                self.ll[i]
            } else {
                self.state.male[i] = self.rng.random_bool(theta);
                self.row_ll(i, self.state.male[i])
            };
            let z = self.rng.random::<f64>() < z_conditional(psi, ll);
            self.state.z[i] = z;
            if z {
                self.ll[i] = ll;
            }
        }
    }

    /// Sex of rows without an observed sex.
    pub fn update_x(&mut self) {
        let theta = self.params.theta();
        for i in 0..self.data.m() {
            let r = self.state.link.right_row(i);
            let observed = self
                .data
                .observed_sex(i, r)
                .and_then(|s| s.is_male());
            if observed.is_some() {
                continue;
            }
            if !self.state.z[i] {
                self.state.male[i] = self.rng.random_bool(theta);
                continue;
            }
            let current = self.state.male[i];
            let other = self.row_ll(i, !current);
            let (ll_m, ll_f) = if current {
                (self.ll[i], other)
            } else {
                (other, self.ll[i])
            };
            let male = self.rng.random::<f64>() < x_conditional(theta, ll_m, ll_f);
            self.state.male[i] = male;
            self.ll[i] = if male { ll_m } else { ll_f };
        }
    }

    fn propose_centre(&mut self, current: Point) -> Point {
        match &self.config.s_grid {
            Some(grid) => grid[self.rng.random_range(0..grid.len())],
            None => {
                let dx: f64 = self.rng.sample(StandardNormal);
                let dy: f64 = self.rng.sample(StandardNormal);
                Point::new(current.x + self.s_scale * dx, current.y + self.s_scale * dy)
            }
        }
    }

    /// Activity centres: random walk for included rows, prior draw otherwise.
    pub fn update_s(&mut self) {
        let k = self.k();
        let j = self.data.occasions();
        for i in 0..self.data.m() {
            if !self.state.z[i] {
                let s = match &self.config.s_grid {
                    Some(grid) => grid[self.rng.random_range(0..grid.len())],
                    None => self.space.sample_uniform(&mut self.rng),
                };
                self.state.s[i] = s;
                self.traps.dist2_into(&s, &mut self.d2[i * k..(i + 1) * k]);
                continue;
            }
            let proposal = self.propose_centre(self.state.s[i]);
            if !self.space.contains(&proposal) {
                self.window[S_KERNEL].record(false);
                continue;
            }
            self.traps.dist2_into(&proposal, &mut self.buf_d2);
            let ll = self
                .params
                .row_log_lik(&self.stats[i], &self.buf_d2, self.state.male[i], j);
            let accept = ll != LOG_ZERO && self.rng.random::<f64>().ln() < ll - self.ll[i];
            self.window[S_KERNEL].record(accept);
            if accept {
                self.state.s[i] = proposal;
                self.d2[i * k..(i + 1) * k].copy_from_slice(&self.buf_d2);
                self.ll[i] = ll;
            }
        }
    }

    pub fn update_psi(&mut self) {
        let n = self.state.n_alive() as f64;
        let m = self.data.m() as f64;
        self.params.set(ParamKey::Psi, beta_draw(&mut self.rng, 1.0 + n, 1.0 + m - n));
    }

    pub fn update_theta(&mut self) {
        let n = self.state.n_alive() as f64;
        let males = self.state.n_male() as f64;
        self.params
            .set(ParamKey::Theta, beta_draw(&mut self.rng, 1.0 + males, 1.0 + n - males));
    }

    /// Random-walk Metropolis on one detection parameter.
    pub fn update_scalar(&mut self, key: ParamKey) {
        let current = self.params.get(key);
        let step: f64 = self.rng.sample(StandardNormal);
        let proposal = current + self.scales[key as usize] * step;
        if !(proposal > 0.0 && proposal < self.params.upper(key)) {
            self.window[key as usize].record(false);
            return;
        }
        let mut candidate = self.params.clone();
        candidate.set(key, proposal);
        let only = match key {
            ParamKey::SigmaM => Some(true),
            ParamKey::SigmaF => Some(false),
            _ => None,
        };
        let k = self.k();
        let j = self.data.occasions();
        let mut delta = 0.0;
        for i in 0..self.data.m() {
            if !self.state.z[i] || only.is_some_and(|male| male != self.state.male[i]) {
                continue;
            }
            let ll = candidate.row_log_lik(
                &self.stats[i],
                &self.d2[i * k..(i + 1) * k],
                self.state.male[i],
                j,
            );
            self.buf_ll[i] = ll;
            delta += ll - self.ll[i];
        }
        let accept = !delta.is_nan() && self.rng.random::<f64>().ln() < delta;
        self.window[key as usize].record(accept);
        if accept {
            self.params = candidate;
            for i in 0..self.data.m() {
                if self.state.z[i] && only.is_none_or(|male| male == self.state.male[i]) {
                    self.ll[i] = self.buf_ll[i];
                }
            }
        }
    }

    /// Swap proposal for the linkage: a random single-flank right row moves to
    /// another non-identified true index, whose right row moves back. Half of
    /// the proposals target the true index of a left-only record.
    pub fn update_linkage(&mut self) {
        let n_full = self.data.n_full();
        let free = self.data.m() - n_full;
        if self.data.n_right() == 0 || free < 2 {
            return;
        }
        let r = n_full + self.rng.random_range(0..self.data.n_right());
        let a = self.state.link.true_index(r);
        let left = self.data.left_only_rows();
        let targets = left.len() - left.contains(&a) as usize;
        let b = if targets > 0 && self.rng.random::<bool>() {
            let mut b = left.start + self.rng.random_range(0..targets);
            if left.contains(&a) && b >= a {
                b += 1;
            }
            b
        } else {
            let mut b = n_full + self.rng.random_range(0..free - 1);
            if b >= a {
                b += 1;
            }
            b
        };
        // The reverse move is proposed from whichever index then holds a
        // single-flank right row.
        let log_q = if self.data.right_only_rows().contains(&self.state.link.right_row(b)) {
            0.0
        } else {
            self.link_proposal(b, a).ln() - self.link_proposal(a, b).ln()
        };
        let accept = self.try_swap(a, b, log_q);
        self.window[LINK_KERNEL].record(accept);
    }

    /// Probability of choosing `b` once a single-flank right row at `a` is picked.
    fn link_proposal(&self, a: usize, b: usize) -> f64 {
        let free = self.data.m() - self.data.n_full();
        let left = self.data.left_only_rows();
        let targets = left.len() - left.contains(&a) as usize;
        let uniform = 1.0 / (free - 1) as f64;
        if targets == 0 {
            uniform
        } else {
            0.5 * uniform + if left.contains(&b) { 0.5 / targets as f64 } else { 0.0 }
        }
    }

    fn try_swap(&mut self, a: usize, b: usize, log_q: f64) -> bool {
        let ra = self.state.link.right_row(a);
        let rb = self.state.link.right_row(b);
        let data = &self.data;
        if !data.pair_feasible(a, rb) || !data.pair_feasible(b, ra) {
            return false;
        }
        for (i, row) in [(a, rb), (b, ra)] {
            if !self.state.z[i] {
                if data.is_detected(i, row) {
                    return false;
                }
                continue;
            }
            let sex = data.observed_sex(i, row).and_then(|s| s.is_male());
            if sex.is_some_and(|male| male != self.state.male[i]) {
                return false;
            }
        }
        let k = self.k();
        let j = data.occasions();
        let sa = data.stats_for(a, rb);
        let sb = data.stats_for(b, ra);
        let new_ll = |i: usize, stats: &SufficientStats| {
            if self.state.z[i] {
                self.params
                    .row_log_lik(stats, &self.d2[i * k..(i + 1) * k], self.state.male[i], j)
            } else {
                0.0
            }
        };
        let (lla, llb) = (new_ll(a, &sa), new_ll(b, &sb));
        let old = |i: usize| if self.state.z[i] { self.ll[i] } else { 0.0 };
        let delta = lla + llb - old(a) - old(b) + log_q;
        if delta.is_nan() || self.rng.random::<f64>().ln() >= delta {
            return false;
        }
        self.state.link.swap_true(a, b);
        self.stats[a] = sa;
        self.stats[b] = sb;
        if self.state.z[a] {
            self.ll[a] = lla;
        }
        if self.state.z[b] {
            self.ll[b] = llb;
        }
        true
    }

    fn adapt(&mut self) {
        self.adapt_round += 1;
        let gain = 1.0 / (self.adapt_round as f64).sqrt();
        let target = self.config.target_acceptance;
        for &key in self.params.scalar_keys() {
            let idx = key as usize;
            if let Some(rate) = self.window[idx].rate() {
                let upper = self.params.upper(key);
                self.scales[idx] = (self.scales[idx] * (gain * (rate - target)).exp())
                    .clamp(1e-6 * upper, upper);
            }
        }
        if self.config.s_grid.is_none() {
            if let Some(rate) = self.window[S_KERNEL].rate() {
                let extent = self.space.width().max(self.space.height());
                self.s_scale =
                    (self.s_scale * (gain * (rate - target)).exp()).clamp(1e-6 * extent, extent);
            }
        }
        self.fold_window();
    }

    fn fold_window(&mut self) {
        for (total, window) in self.total.iter_mut().zip(self.window.iter_mut()) {
            if self.iteration > self.config.burn_in {
                total.accepted += window.accepted;
                total.attempted += window.attempted;
            }
            *window = Tally::default();
        }
    }

    fn acceptance_rates(&self, tallies: &[Tally; KERNELS]) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (k, t) in tallies.iter().enumerate() {
            if let Some(rate) = t.rate() {
                out.push((kernel_name(k).to_string(), rate));
            }
        }
        out
    }

    fn trace_names(&self) -> Vec<&'static str> {
        let mut names = vec!["psi", "theta"];
        names.extend(self.params.scalar_keys().iter().map(|k| k.name()));
        names.extend(["N", "N_male"]);
        names
    }

    fn record(&self, samples: &mut PosteriorSamples) {
        let mut values = vec![self.params.psi(), self.params.theta()];
        values.extend(self.params.scalar_keys().iter().map(|&k| self.params.get(k)));
        values.push(self.state.n_alive() as f64);
        values.push(self.state.n_male() as f64);
        for (trace, v) in samples.traces.iter_mut().zip(values) {
            trace.values.push(v);
        }
        if self.config.keep_snapshots {
            samples.snapshots.push(
                (0..self.data.m())
                    .filter(|&i| self.state.z[i])
                    .map(|i| self.state.s[i])
                    .collect(),
            );
        }
    }

    /// Runs the configured number of sweeps and returns the kept draws.
    pub fn run(&mut self) -> PosteriorSamples {
        self.run_with_progress(&mut |_| {})
    }

    pub fn run_with_progress(
        &mut self,
        on_progress: &mut dyn FnMut(&ProgressRecord),
    ) -> PosteriorSamples {
        let mut samples = PosteriorSamples::new(self.params.kind(), &self.trace_names());
        let (burn_in, thin) = (self.config.burn_in, self.config.thin);
        while self.iteration < self.config.iterations {
            self.sweep();
            let iter = self.iteration;
            if iter == burn_in {
                self.fold_window();
            }
            if iter > burn_in && (iter - burn_in) % thin == 0 {
                self.record(&mut samples);
            }
            if let Some(every) = self.config.progress_every {
                if iter % every == 0 {
                    let mut rates = self.total;
                    for (t, w) in rates.iter_mut().zip(&self.window) {
                        t.accepted += w.accepted;
                        t.attempted += w.attempted;
                    }
                    on_progress(&ProgressRecord {
                        iteration: iter,
                        log_posterior: self.cached_log_posterior(),
                        n_alive: self.state.n_alive(),
                        acceptance: self.acceptance_rates(&rates),
                    });
                }
            }
        }
        self.fold_window();
        samples.acceptance = self.acceptance_rates(&self.total);
        samples
    }
}

/// Beta draw kept strictly inside (0, 1).
fn beta_draw<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let v = Beta::new(a, b)
        .expect("beta shape parameters are at least 1")
        .sample(rng);
    v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON)
}
