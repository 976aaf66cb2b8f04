use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bisecr_core::io::{
    density_raster, read_captures, read_samples, read_sexes, read_snapshots, read_summary,
    read_traps, write_captures, write_coverage, write_raster, write_samples, write_sexes,
    write_snapshots, write_summary, write_traps, write_truth,
};
use bisecr_core::oracle::identifiability_probe;
use bisecr_core::sampler::{run_chain_with_progress, summarize};
use bisecr_core::simulate::{back_simulate, simulate_dataset, standard_grid, ScenarioSpec};
use bisecr_core::{CaptureData, McmcConfig, StateSpace, Summary, TrapArray};

use crate::settings::{Model, Settings};

const DEFAULT_BUFFER: f64 = 1.0;
/// Correlations beyond this magnitude are reported as weak identification.
const STRONG_CORRELATION: f64 = 0.7;

fn echo(command: &str, s: &Settings) {
    println!("# bisecr {command}, resolved configuration");
    print!("{}", s.to_toml());
    println!();
}

fn out_dir(s: &mut Settings) -> Result<PathBuf> {
    let dir = s.out.get_or_insert_with(|| PathBuf::from(".")).clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn traps_and_space(s: &mut Settings) -> Result<(TrapArray, StateSpace)> {
    let path = Settings::require(&s.traps, "traps")?;
    let traps = read_traps(path)?;
    let buffer = *s.buffer.get_or_insert(DEFAULT_BUFFER);
    Ok((traps.clone(), StateSpace::around(&traps, buffer)?))
}

fn load_captures(s: &Settings, traps: &TrapArray) -> Result<CaptureData> {
    let occasions = *Settings::require(&s.occasions, "occasions")?;
    let sexes = s.sexes.as_deref().map(read_sexes).transpose()?;
    let path = Settings::require(&s.captures, "captures")?;
    Ok(read_captures(path, traps, occasions, sexes.as_ref())?)
}

/// Sigma prior bound: half the shorter side of the state space unless given.
fn resolve_r(s: &mut Settings, space: &StateSpace) -> f64 {
    *s.r.get_or_insert(0.5 * space.width().min(space.height()))
}

fn mcmc_config(s: &mut Settings, space: &StateSpace) -> McmcConfig {
    let d = McmcConfig::default();
    McmcConfig {
        iterations: *s.iterations.get_or_insert(d.iterations),
        burn_in: *s.burn_in.get_or_insert(d.burn_in),
        thin: *s.thin.get_or_insert(d.thin),
        seed: *s.seed.get_or_insert(d.seed),
        m: *s.m.get_or_insert(d.m),
        r: resolve_r(s, space),
        adapt: *s.adapt.get_or_insert(d.adapt),
        keep_snapshots: *s.keep_snapshots.get_or_insert(true),
        progress_every: s.progress_every,
        ..d
    }
}

fn scenario(s: &mut Settings, traps: TrapArray, space: StateSpace) -> ScenarioSpec {
    let d = ScenarioSpec::standard(0.4, 0.05, 0.3, 0.15, 1);
    ScenarioSpec {
        n_true: *s.n.get_or_insert(d.n_true),
        n_male_true: *s.n_male.get_or_insert(d.n_male_true),
        p0: *s.p0.get_or_insert(d.p0),
        phi: *s.phi.get_or_insert(d.phi),
        sigma_m: *s.sigma_m.get_or_insert(d.sigma_m),
        sigma_f: *s.sigma_f.get_or_insert(d.sigma_f),
        occasions: *s.occasions.get_or_insert(d.occasions),
        seed: *s.seed.get_or_insert(d.seed),
        unknown_sex_fraction: *s.unknown_sex_fraction.get_or_insert(d.unknown_sex_fraction),
        traps,
        space,
    }
}

fn print_summary(summary: &Summary) {
    println!("{:<10} {:>10} {:>10} {:>10} {:>10} {:>10}", "parameter", "mean", "sd", "2.5%", "50%", "97.5%");
    for r in &summary.rows {
        println!(
            "{:<10} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            r.name,
            r.reported_mean(),
            r.sd,
            r.q025,
            r.q50,
            r.q975
        );
    }
}

fn wrote(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn simulate(mut s: Settings) -> Result<()> {
    let traps = match &s.traps {
        Some(path) => read_traps(path)?,
        None => standard_grid().0,
    };
    let space = StateSpace::around(&traps, *s.buffer.get_or_insert(DEFAULT_BUFFER))?;
    let spec = scenario(&mut s, traps, space);
    let dir = out_dir(&mut s)?;
    echo("simulate", &s);

    let (data, truth) = simulate_dataset(&spec)?;
    let paths = ["traps.csv", "captures.csv", "sexes.csv", "truth.csv"].map(|f| dir.join(f));
    write_traps(&spec.traps, &paths[0])?;
    write_captures(&data, &spec.traps, &paths[1])?;
    write_sexes(&data, &paths[2])?;
    write_truth(&truth, &data, &paths[3])?;
    println!(
        "N = {}, detected = {}, fully identified = {}, left only = {}, right only = {}",
        truth.n(),
        truth.n_detected(),
        data.n_full(),
        data.count(bisecr_core::RowKind::LeftOnly),
        data.count(bisecr_core::RowKind::RightOnly)
    );
    paths.iter().for_each(|p| wrote(p));
    Ok(())
}

pub fn fit(mut s: Settings) -> Result<()> {
    let (traps, space) = traps_and_space(&mut s)?;
    let data = load_captures(&s, &traps)?;
    let model = *s.model.get_or_insert(Model::Identified);
    let config = mcmc_config(&mut s, &space);
    let dir = out_dir(&mut s)?;
    echo("fit", &s);

    let samples = run_chain_with_progress(&data, &traps, &space, &config, model.into(), &mut |p| eprintln!("{p}"))?;
    let summary = summarize(&samples)?;
    print_summary(&summary);
    let rates: Vec<String> = samples.acceptance.iter().map(|(n, r)| format!("{n} {r:.3}")).collect();
    println!("acceptance: {}", rates.join(", "));

    let samples_path = dir.join("samples.csv");
    let summary_path = dir.join("summary.csv");
    write_samples(&samples, &samples_path)?;
    write_summary(&summary, &summary_path)?;
    wrote(&samples_path);
    wrote(&summary_path);
    if config.keep_snapshots {
        let path = dir.join("snapshots.csv");
        write_snapshots(&samples.snapshots, &path)?;
        wrote(&path);
    }
    Ok(())
}

pub fn backsim(mut s: Settings) -> Result<()> {
    let (traps, space) = traps_and_space(&mut s)?;
    let spec = match s.summary.clone() {
        Some(path) => {
            let occasions = *Settings::require(&s.occasions, "occasions")?;
            let seed = *s.seed.get_or_insert(1);
            ScenarioSpec::from_summary(&read_summary(&path)?, traps, space, occasions, seed)?
        }
        None => scenario(&mut s, traps, space),
    };
    if *s.model.get_or_insert(Model::Identified) != Model::Identified {
        bail!("back-simulation refits the identified model only; drop `--model reduced`");
    }
    let mut config = mcmc_config(&mut s, &space);
    config.keep_snapshots = false;
    s.keep_snapshots = Some(false);
    let reps = *s.replicates.get_or_insert(50);
    let dir = out_dir(&mut s)?;
    echo("backsim", &s);

    let report = back_simulate(&spec, reps, &config)?;
    println!("{:<10} {:>10} {:>10}", "parameter", "truth", "coverage");
    for ((name, truth), (_, cov)) in report.truth.iter().zip(&report.coverage) {
        println!("{name:<10} {truth:>10.4} {cov:>10.3}");
    }
    for (rep, msg) in report.failures() {
        eprintln!("replicate {} failed: {msg}", rep + 1);
    }
    let coverage_path = dir.join("coverage.csv");
    let replicates_path = dir.join("replicates.csv");
    write_coverage(&report, &coverage_path, &replicates_path)?;
    wrote(&coverage_path);
    wrote(&replicates_path);
    if report.succeeded() == 0 {
        bail!("every replicate failed");
    }
    Ok(())
}

pub fn density(mut s: Settings) -> Result<()> {
    let (_, space) = traps_and_space(&mut s)?;
    let samples = read_samples(Settings::require(&s.samples, "samples")?)?;
    let snapshots = read_snapshots(Settings::require(&s.snapshots, "snapshots")?, samples.len())?;
    let cell = match s.cell {
        Some(c) => c,
        None => {
            let sigma_f = samples
                .mean("sigma_f")
                .context("samples have no sigma_f column; pass --cell")?;
            sigma_f / 4.0
        }
    };
    s.cell = Some(cell);
    let per_area = *s.per_area.get_or_insert(false);
    let dir = out_dir(&mut s)?;
    echo("density", &s);

    let mut raster = density_raster(&snapshots, &space, cell)?;
    println!(
        "{} x {} pixels of side {cell}, expected total {:.2}",
        raster.nx,
        raster.ny,
        raster.total()
    );
    if per_area {
        raster = raster.per_area();
    }
    let path = dir.join("raster.csv");
    write_raster(&raster, &path)?;
    wrote(&path);
    Ok(())
}

pub fn probe(mut s: Settings) -> Result<()> {
    let (traps, _) = traps_and_space(&mut s)?;
    let data = load_captures(&s, &traps)?;
    let samples = s.samples.as_deref().map(read_samples).transpose()?;
    let dir = out_dir(&mut s)?;
    echo("probe", &s);

    let report = identifiability_probe(&data, &traps, samples.as_ref());
    let mut lines = vec![
        "diagnostic,value".to_string(),
        format!("only_simultaneous,{}", report.only_simultaneous),
        format!("distinct_distances,{}", report.distinct_distances),
        format!("distance_cv,{}", report.distance_cv),
        format!("degenerate_distances,{}", report.degenerate_distances),
    ];
    lines.extend(
        report
            .correlations
            .iter()
            .map(|(a, b, r)| format!("corr_{a}_{b},{r}")),
    );
    for line in &lines[1..] {
        println!("{}", line.replace(',', " = "));
    }
    if report.only_simultaneous {
        println!("warning: every detection is a simultaneous capture, so phi and trap entry are not separately identified");
    }
    if report.degenerate_distances {
        println!("warning: detection distances barely vary, so p0 and the sigmas are weakly identified");
    }
    for (a, b, r) in &report.correlations {
        if r.abs() > STRONG_CORRELATION {
            println!("warning: posterior corr({a}, {b}) = {r:.3}");
        }
    }
    let path = dir.join("probe.csv");
    fs::write(&path, lines.join("\n") + "\n").with_context(|| format!("writing {}", path.display()))?;
    wrote(&path);
    Ok(())
}
