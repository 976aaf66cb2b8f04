//! CSV formats for traps, captures, sexes, posterior draws, summaries and
//! simulation truth, plus posterior density rasters.
//!
//! Readers reject malformed input with a `path:line` diagnostic. Writers are
//! deterministic: floats use Rust's shortest round-trip formatting.

mod raster;

pub use raster::{density_raster, read_raster, write_raster, DensityRaster};

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};
use crate::history::History;
use crate::model::{CaptureData, CaptureRow, ModelKind, Point, Sex, TrapArray};
use crate::sampler::{PosteriorSamples, Summary};
use crate::simulate::{CoverageReport, Truth};

pub const TRAPS_HEADER: [&str; 3] = ["trap_id", "x", "y"];
pub const CAPTURES_HEADER: [&str; 4] = ["animal_id", "flank", "trap_id", "occasion"];
pub const SEXES_HEADER: [&str; 2] = ["animal_id", "sex"];
pub const SUMMARY_HEADER: [&str; 8] = [
    "parameter", "mean", "sd", "q025", "q50", "q975", "ci_width", "coverage",
];
pub const SNAPSHOTS_HEADER: [&str; 3] = ["iter", "x", "y"];
pub const TRUTH_HEADER: [&str; 6] = ["individual", "x", "y", "sex", "left_id", "right_id"];

struct CsvIn {
    path: std::path::PathBuf,
    reader: csv::Reader<File>,
}

impl CsvIn {
    fn open(path: &Path, header: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let found = reader
            .headers()
            .map_err(|e| Error::parse(path, 1, e.to_string()))?
            .clone();
        if !header.is_empty() && found.iter().ne(header.iter().copied()) {
            return Err(Error::parse(
                path,
                1,
                format!("expected header `{}`, found `{}`", header.join(","), join(&found)),
            ));
        }
        Ok(Self {
            path: path.to_path_buf(),
            reader,
        })
    }

    fn headers(&mut self) -> Result<StringRecord> {
        self.reader
            .headers()
            .cloned()
            .map_err(|e| Error::parse(&self.path, 1, e.to_string()))
    }

    /// Data records with their 1-based line numbers.
    fn records(&mut self) -> Result<Vec<(u64, StringRecord)>> {
        let mut out = Vec::new();
        for rec in self.reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::parse(&self.path, line, e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            out.push((line, rec));
        }
        Ok(out)
    }

    fn err(&self, line: u64, msg: impl Into<String>) -> Error {
        Error::parse(&self.path, line, msg)
    }

    fn float(&self, line: u64, field: &str, what: &str) -> Result<f64> {
        let v: f64 = field
            .parse()
            .map_err(|_| self.err(line, format!("{what} `{field}` is not a number")))?;
        Ok(v)
    }
}

fn join(rec: &StringRecord) -> String {
    rec.iter().collect::<Vec<_>>().join(",")
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(WriterBuilder::new().from_writer(file))
}

fn write_row<I, S>(w: &mut csv::Writer<File>, path: &Path, row: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    w.write_record(row)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `trap_id,x,y`. Stations are ordered by id, numerically when every id
/// is an integer and lexicographically otherwise.
pub fn read_traps(path: &Path) -> Result<TrapArray> {
    let mut input = CsvIn::open(path, &TRAPS_HEADER)?;
    let mut rows = Vec::new();
    let mut seen = HashMap::new();
    for (line, rec) in input.records()? {
        if rec.len() != 3 {
            return Err(input.err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let id = rec[0].to_string();
        if id.is_empty() {
            return Err(input.err(line, "empty trap_id"));
        }
        let x = input.float(line, &rec[1], "x")?;
        let y = input.float(line, &rec[2], "y")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(input.err(line, format!("trap {id} has a non-finite coordinate")));
        }
        if let Some(first) = seen.insert(id.clone(), line) {
            return Err(input.err(line, format!("duplicate trap_id {id} (first on line {first})")));
        }
        rows.push((id, Point::new(x, y)));
    }
    if rows.is_empty() {
        return Err(input.err(1, "no trap rows"));
    }
    let numeric: Option<Vec<i64>> = rows.iter().map(|(id, _)| id.parse().ok()).collect();
    match numeric {
        Some(keys) => {
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            idx.sort_by_key(|&i| keys[i]);
            rows = idx.into_iter().map(|i| rows[i].clone()).collect();
        }
        None => rows.sort_by(|a, b| a.0.cmp(&b.0)),
    }
    let (labels, stations) = rows.into_iter().unzip();
    TrapArray::with_labels(stations, labels)
}

pub fn write_traps(traps: &TrapArray, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, TRAPS_HEADER)?;
    for (label, p) in traps.labels().iter().zip(traps.stations()) {
        write_row(&mut w, path, [label.clone(), p.x.to_string(), p.y.to_string()])?;
    }
    finish(w, path)
}

/// Reads `animal_id,sex` with sex coded `M`, `F` or `U`.
pub fn read_sexes(path: &Path) -> Result<BTreeMap<String, Sex>> {
    let mut input = CsvIn::open(path, &SEXES_HEADER)?;
    let mut out = BTreeMap::new();
    for (line, rec) in input.records()? {
        if rec.len() != 2 {
            return Err(input.err(line, format!("expected 2 fields, found {}", rec.len())));
        }
        let sex = Sex::from_code(&rec[1])
            .ok_or_else(|| input.err(line, format!("sex `{}` is not one of M, F, U", &rec[1])))?;
        if out.insert(rec[0].to_string(), sex).is_some() {
            return Err(input.err(line, format!("duplicate animal_id {}", &rec[0])));
        }
    }
    Ok(out)
}

/// Reads long-format detections `animal_id,flank,trap_id,occasion` with
/// occasions numbered from 1. Animals keep their order of first appearance;
/// repeated detections are merged.
pub fn read_captures(
    path: &Path,
    traps: &TrapArray,
    occasions: usize,
    sexes: Option<&BTreeMap<String, Sex>>,
) -> Result<CaptureData> {
    if occasions == 0 {
        return Err(Error::Config("need at least one occasion".into()));
    }
    let mut input = CsvIn::open(path, &CAPTURES_HEADER)?;
    let trap_index: HashMap<&str, usize> = traps
        .labels()
        .iter()
        .enumerate()
        .map(|(k, l)| (l.as_str(), k))
        .collect();
    let k = traps.len();
    let mut order: Vec<String> = Vec::new();
    let mut hist: HashMap<String, (History, History, u64)> = HashMap::new();
    for (line, rec) in input.records()? {
        if rec.len() != 4 {
            return Err(input.err(line, format!("expected 4 fields, found {}", rec.len())));
        }
        let id = &rec[0];
        if id.is_empty() {
            return Err(input.err(line, "empty animal_id"));
        }
        let left = match &rec[1] {
            "L" => true,
            "R" => false,
            other => return Err(input.err(line, format!("flank `{other}` is not L or R"))),
        };
        let trap = *trap_index
            .get(&rec[2])
            .ok_or_else(|| input.err(line, format!("unknown trap_id {}", &rec[2])))?;
        let t: usize = rec[3]
            .parse()
            .map_err(|_| input.err(line, format!("occasion `{}` is not a positive integer", &rec[3])))?;
        if t == 0 || t > occasions {
            return Err(input.err(line, format!("occasion {t} outside 1..={occasions}")));
        }
        let entry = hist.entry(id.to_string()).or_insert_with(|| {
            order.push(id.to_string());
            (History::new(k, occasions), History::new(k, occasions), line)
        });
        let h = if left { &mut entry.0 } else { &mut entry.1 };
        h.set(trap, t - 1, true);
    }
    if let Some(sexes) = sexes {
        if let Some(id) = sexes.keys().find(|id| !hist.contains_key(*id)) {
            return Err(Error::InvalidData(format!(
                "sex given for animal {id} that has no detections"
            )));
        }
    }
    let mut rows = Vec::with_capacity(order.len());
    for id in order {
        let (left, right, line) = hist.remove(&id).expect("every id was recorded");
        let sex = sexes.and_then(|s| s.get(&id).copied()).unwrap_or(Sex::Unknown);
        let row = CaptureRow::classify(id, sex, left, right).map_err(|e| input.err(line, e.to_string()))?;
        rows.push(row);
    }
    CaptureData::new(k, occasions, rows)
}

/// Writes detections in the long format read by [`read_captures`].
pub fn write_captures(data: &CaptureData, traps: &TrapArray, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, CAPTURES_HEADER)?;
    for row in data.rows() {
        for (flank, h) in [("L", &row.left), ("R", &row.right)] {
            for (k, t) in h.ones() {
                write_row(
                    &mut w,
                    path,
                    [row.id.as_str(), flank, traps.labels()[k].as_str(), &(t + 1).to_string()],
                )?;
            }
        }
    }
    finish(w, path)
}

pub fn write_sexes(data: &CaptureData, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, SEXES_HEADER)?;
    for row in data.rows() {
        write_row(&mut w, path, [row.id.as_str(), row.sex.code()])?;
    }
    finish(w, path)
}

/// One column per parameter after a leading 1-based `iter` column.
pub fn write_samples(samples: &PosteriorSamples, path: &Path) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Empty("no samples to write"));
    }
    let mut w = writer(path)?;
    let mut header = vec!["iter".to_string()];
    header.extend(samples.names().map(str::to_string));
    write_row(&mut w, path, &header)?;
    for it in 0..samples.len() {
        let mut row = vec![(it + 1).to_string()];
        row.extend(samples.traces.iter().map(|t| t.values[it].to_string()));
        write_row(&mut w, path, &row)?;
    }
    finish(w, path)
}

pub fn read_samples(path: &Path) -> Result<PosteriorSamples> {
    let mut input = CsvIn::open(path, &[])?;
    let header = input.headers()?;
    if header.get(0) != Some("iter") || header.len() < 2 {
        return Err(input.err(1, format!("expected `iter` followed by parameter columns, found `{}`", join(&header))));
    }
    let names: Vec<&str> = header.iter().skip(1).collect();
    let model = if names.contains(&"lambda0") {
        ModelKind::Reduced
    } else {
        ModelKind::Identified
    };
    let mut samples = PosteriorSamples::new(model, &names);
    for (line, rec) in input.records()? {
        if rec.len() != header.len() {
            return Err(input.err(line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        for (trace, field) in samples.traces.iter_mut().zip(rec.iter().skip(1)) {
            let v = input.float(line, field, &trace.name)?;
            trace.values.push(v);
        }
    }
    Ok(samples)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per parameter: mean (rounded for counts), sd, quantiles, interval
/// width and back-simulation coverage when available.
pub fn write_summary(summary: &Summary, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, SUMMARY_HEADER)?;
    for r in &summary.rows {
        write_row(
            &mut w,
            path,
            [
                r.name.clone(),
                r.reported_mean().to_string(),
                r.sd.to_string(),
                r.q025.to_string(),
                r.q50.to_string(),
                r.q975.to_string(),
                r.ci_width.to_string(),
                fmt_opt(r.coverage),
            ],
        )?;
    }
    finish(w, path)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let mut input = CsvIn::open(path, &SUMMARY_HEADER)?;
    let mut rows = Vec::new();
    for (line, rec) in input.records()? {
        if rec.len() != SUMMARY_HEADER.len() {
            return Err(input.err(line, format!("expected {} fields, found {}", SUMMARY_HEADER.len(), rec.len())));
        }
        let mut nums = [0.0; 6];
        for (slot, (field, name)) in nums.iter_mut().zip(rec.iter().skip(1).zip(&SUMMARY_HEADER[1..])) {
            *slot = input.float(line, field, name)?;
        }
        let coverage = match &rec[7] {
            "" => None,
            s => Some(input.float(line, s, "coverage")?),
        };
        rows.push(crate::sampler::ParamSummary {
            name: rec[0].to_string(),
            mean: nums[0],
            sd: nums[1],
            q025: nums[2],
            q50: nums[3],
            q975: nums[4],
            ci_width: nums[5],
            integer: crate::sampler::is_count_param(&rec[0]),
            coverage,
        });
    }
    if rows.is_empty() {
        return Err(input.err(1, "no summary rows"));
    }
    Ok(Summary { rows })
}

/// Activity centres of included animals per kept draw, `iter` counted from 1.
pub fn write_snapshots(snapshots: &[Vec<Point>], path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, SNAPSHOTS_HEADER)?;
    for (it, snap) in snapshots.iter().enumerate() {
        for p in snap {
            write_row(&mut w, path, [(it + 1).to_string(), p.x.to_string(), p.y.to_string()])?;
        }
    }
    finish(w, path)
}

/// Reads snapshots; `draws` is the number of kept iterations, since draws with
/// no included animals leave no rows.
pub fn read_snapshots(path: &Path, draws: usize) -> Result<Vec<Vec<Point>>> {
    let mut input = CsvIn::open(path, &SNAPSHOTS_HEADER)?;
    let mut out = vec![Vec::new(); draws];
    for (line, rec) in input.records()? {
        if rec.len() != 3 {
            return Err(input.err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let it: usize = rec[0]
            .parse()
            .map_err(|_| input.err(line, format!("iter `{}` is not a positive integer", &rec[0])))?;
        if it == 0 || it > draws {
            return Err(input.err(line, format!("iter {it} outside 1..={draws}")));
        }
        let x = input.float(line, &rec[1], "x")?;
        let y = input.float(line, &rec[2], "y")?;
        out[it - 1].push(Point::new(x, y));
    }
    Ok(out)
}

/// Every simulated animal with the capture-data ids holding its records.
pub fn write_truth(truth: &Truth, data: &CaptureData, path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, TRUTH_HEADER)?;
    let id = |row: Option<usize>| row.map(|r| data.rows()[r].id.clone()).unwrap_or_default();
    for (i, ind) in truth.individuals.iter().enumerate() {
        write_row(
            &mut w,
            path,
            [
                (i + 1).to_string(),
                ind.centre.x.to_string(),
                ind.centre.y.to_string(),
                if ind.male { "M" } else { "F" }.to_string(),
                id(ind.left_row),
                id(ind.right_row),
            ],
        )?;
    }
    finish(w, path)
}

/// Coverage per parameter, then one status line per replicate in a second file.
pub fn write_coverage(report: &CoverageReport, path: &Path, replicates_path: &Path) -> Result<()> {
    let mut w = writer(path)?;
    write_row(&mut w, path, ["parameter", "truth", "coverage"])?;
    for ((name, truth), (_, cov)) in report.truth.iter().zip(&report.coverage) {
        write_row(&mut w, path, [name.clone(), truth.to_string(), cov.to_string()])?;
    }
    finish(w, path)?;

    let mut w = writer(replicates_path)?;
    let names: Vec<&str> = report.truth.iter().map(|(n, _)| n.as_str()).collect();
    let mut header = vec!["replicate", "status"];
    header.extend(names.iter().copied());
    write_row(&mut w, replicates_path, &header)?;
    for rep in &report.replicates {
        let mut row = vec![(rep.rep + 1).to_string()];
        match &rep.result {
            Ok((_, covered)) => {
                row.push("ok".into());
                row.extend(covered.iter().map(|(_, hit)| (*hit as u8).to_string()));
            }
            Err(msg) => {
                row.push(format!("error: {msg}"));
                row.extend(names.iter().map(|_| String::new()));
            }
        }
        write_row(&mut w, replicates_path, &row)?;
    }
    finish(w, replicates_path)
}
