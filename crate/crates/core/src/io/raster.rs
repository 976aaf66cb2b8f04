use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Point, StateSpace};

/// Posterior expected number of activity centres per pixel.
///
/// Pixels are square, anchored at the lower-left corner of the state space;
/// `values` is row-major with row 0 at the lowest `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRaster {
    pub x0: f64,
    pub y0: f64,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DensityRaster {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Divides every pixel by its area, giving density per unit area.
    pub fn per_area(mut self) -> Self {
        let area = self.cell * self.cell;
        for v in &mut self.values {
            *v /= area;
        }
        self
    }
}

/// Averages the binned activity centres of every snapshot. Points on the upper
/// edges of the state space fall in the last pixel.
pub fn density_raster(snapshots: &[Vec<Point>], space: &StateSpace, cell: f64) -> Result<DensityRaster> {
    if snapshots.is_empty() {
        return Err(Error::Empty("no activity-centre snapshots"));
    }
    if !(cell > 0.0) || !cell.is_finite() {
        return Err(Error::Config(format!("cell size must be positive, got {cell}")));
    }
    let nx = ((space.width() / cell).ceil() as usize).max(1);
    let ny = ((space.height() / cell).ceil() as usize).max(1);
    let mut values = vec![0.0; nx * ny];
    let weight = 1.0 / snapshots.len() as f64;
    for p in snapshots.iter().flatten() {
        if !space.contains(p) {
            return Err(Error::InvalidData(format!(
                "activity centre ({}, {}) lies outside the state space",
                p.x, p.y
            )));
        }
        let ix = (((p.x - space.xmin) / cell) as usize).min(nx - 1);
        let iy = (((p.y - space.ymin) / cell) as usize).min(ny - 1);
        values[iy * nx + ix] += weight;
    }
    Ok(DensityRaster {
        x0: space.xmin,
        y0: space.ymin,
        cell,
        nx,
        ny,
        values,
    })
}

/// Header `nx,ny,x0,y0,cell`, its values, then `ny` rows of `nx` pixel values.
pub fn write_raster(raster: &DensityRaster, path: &Path) -> Result<()> {
    let mut out = String::from("nx,ny,x0,y0,cell\n");
    out.push_str(&format!(
        "{},{},{},{},{}\n",
        raster.nx, raster.ny, raster.x0, raster.y0, raster.cell
    ));
    for row in raster.values.chunks(raster.nx) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_raster(path: &Path) -> Result<DensityRaster> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let err = |line: u64, msg: String| Error::parse(path, line, msg);
    match lines.next() {
        Some((_, "nx,ny,x0,y0,cell")) => {}
        _ => return Err(err(1, "expected header `nx,ny,x0,y0,cell`".into())),
    }
    let (line, meta) = lines.next().ok_or_else(|| err(2, "missing raster geometry".into()))?;
    let f: Vec<&str> = meta.split(',').collect();
    if f.len() != 5 {
        return Err(err(line, format!("expected 5 fields, found {}", f.len())));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|_| err(line, format!("`{s}` is not a count")));
    let num = |s: &str| s.parse::<f64>().map_err(|_| err(line, format!("`{s}` is not a number")));
    let (nx, ny) = (int(f[0])?, int(f[1])?);
    let (x0, y0, cell) = (num(f[2])?, num(f[3])?, num(f[4])?);
    let mut values = Vec::with_capacity(nx * ny);
    for (line, row) in lines.by_ref().take(ny) {
        let vals: Vec<&str> = row.split(',').collect();
        if vals.len() != nx {
            return Err(err(line, format!("expected {nx} values, found {}", vals.len())));
        }
        for v in vals {
            values.push(v.parse::<f64>().map_err(|_| err(line, format!("`{v}` is not a number")))?);
        }
    }
    if values.len() != nx * ny {
        return Err(err(line, format!("expected {ny} rows of values")));
    }
    Ok(DensityRaster {
        x0,
        y0,
        cell,
        nx,
        ny,
        values,
    })
}
