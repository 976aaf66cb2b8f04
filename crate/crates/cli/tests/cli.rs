use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bisecr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bisecr"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to launch bisecr")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn simulate(dir: &Path, out: &str, extra: &[&str]) {
    let mut args = vec!["simulate", "--out", out, "--occasions", "20", "--seed", "5"];
    args.extend(extra);
    let o = bisecr(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
}

fn summary_mean(path: &Path, name: &str) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
    line.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "a", &[]);
    simulate(dir.path(), "b", &[]);
    for f in ["traps.csv", "captures.csv", "sexes.csv", "truth.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between identical runs");
    }
    let traps = fs::read_to_string(dir.path().join("a/traps.csv")).unwrap();
    assert_eq!(traps.lines().count(), 161);
}

#[test]
fn missing_traps_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let o = bisecr(
        dir.path(),
        &["fit", "--traps", "nowhere.csv", "--captures", "c.csv", "--occasions", "3"],
    );
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nowhere.csv"), "{}", stderr(&o));
}

#[test]
fn missing_setting_is_named() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), "sim", &[]);
    let o = bisecr(dir.path(), &["fit", "--traps", "sim/traps.csv", "--occasions", "20"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--captures"), "{}", stderr(&o));
}

#[test]
fn usage_error_names_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let o = bisecr(dir.path(), &["fit", "--iterationz", "5"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--iterationz"), "{}", stderr(&o));

    let o = bisecr(dir.path(), &["fit", "--model", "other"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--model"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "seed = 2\nburnin = 10\n").unwrap();
    let o = bisecr(dir.path(), &["simulate", "--config", "run.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("burnin"), "{}", stderr(&o));
}

#[test]
fn flags_override_config_and_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "seed = 2\noccasions = 10\nn = 30\nn_male = 10\n").unwrap();
    let o = bisecr(dir.path(), &["simulate", "--config", "run.toml", "--seed", "7", "--out", "sim"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("seed = 7"), "{out}");
    assert!(out.contains("occasions = 10"), "{out}");
    assert!(out.contains("N = 30"), "{out}");
}

#[test]
fn fit_density_probe_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "sim", &[]);
    let common = ["--traps", "sim/traps.csv", "--occasions", "20", "--out", "fit"];
    let mut args = vec![
        "fit", "--captures", "sim/captures.csv", "--sexes", "sim/sexes.csv",
        "--iterations", "400", "--burn-in", "100", "--m", "250", "--r", "2",
    ];
    args.extend(common);
    let o = bisecr(d, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["samples.csv", "summary.csv", "snapshots.csv"] {
        assert!(d.join("fit").join(f).exists(), "{f} missing");
    }
    let samples = fs::read_to_string(d.join("fit/samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 301);

    let o = bisecr(
        d,
        &["density", "--samples", "fit/samples.csv", "--snapshots", "fit/snapshots.csv", "--cell", "0.25"]
            .into_iter()
            .chain(common)
            .collect::<Vec<_>>(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let raster = bisecr_core::io::read_raster(&d.join("fit/raster.csv")).unwrap();
    let n = summary_mean(&d.join("fit/summary.csv"), "N");
    assert!((raster.total() - n).abs() <= 0.01 * n + 0.5, "raster {} vs N {n}", raster.total());

    let o = bisecr(
        d,
        &["probe", "--captures", "sim/captures.csv", "--samples", "fit/samples.csv"]
            .into_iter()
            .chain(common)
            .collect::<Vec<_>>(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let probe = fs::read_to_string(d.join("fit/probe.csv")).unwrap();
    assert!(probe.contains("only_simultaneous,false"));
    assert!(probe.contains("corr_phi_p0,"));
}

#[test]
fn probe_flags_simultaneous_only_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("traps.csv"), "trap_id,x,y\n1,0,0\n2,1,0\n3,0,2\n").unwrap();
    fs::write(
        d.join("captures.csv"),
        "animal_id,flank,trap_id,occasion\na,L,1,1\na,R,1,1\nb,L,2,2\nb,R,2,2\nb,L,3,3\nb,R,3,3\n",
    )
    .unwrap();
    let o = bisecr(d, &["probe", "--traps", "traps.csv", "--captures", "captures.csv", "--occasions", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("phi and trap entry are not separately identified"));
}

#[test]
fn backsim_writes_coverage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    simulate(d, "sim", &["--n", "30", "--n-male", "10"]);
    let o = bisecr(
        d,
        &[
            "backsim", "--traps", "sim/traps.csv", "--occasions", "20", "--n", "30", "--n-male", "10",
            "--iterations", "200", "--burn-in", "50", "--m", "120", "--r", "2", "--replicates", "2", "--out", "bs",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let cov = fs::read_to_string(d.join("bs/coverage.csv")).unwrap();
    assert!(cov.starts_with("parameter,truth,coverage\n"));
    let reps = fs::read_to_string(d.join("bs/replicates.csv")).unwrap();
    assert_eq!(reps.lines().count(), 3);
}

#[test]
fn reduced_fit_recovers_lambda0() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = bisecr(d, &["simulate", "--out", "sim", "--seed", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bisecr(
        d,
        &[
            "fit", "--model", "reduced", "--traps", "sim/traps.csv", "--captures", "sim/captures.csv",
            "--sexes", "sim/sexes.csv", "--occasions", "50", "--iterations", "6000", "--burn-in", "2000",
            "--m", "400", "--r", "2", "--keep-snapshots", "false", "--out", "fit",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let lambda0 = summary_mean(&d.join("fit/summary.csv"), "lambda0");
    assert!((lambda0 - 0.023).abs() <= 0.01, "lambda0 = {lambda0}");
    assert!(!d.join("fit/snapshots.csv").exists());
}
