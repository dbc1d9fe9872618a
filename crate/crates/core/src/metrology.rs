//! Clocking alignment, sampled error map and error-surface export.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::cutting::{deviation_at, sig12, simulate_flank, DeviationField, RaySearch};
use crate::error::{Error, Result};
use crate::gear::{subsample_indices, FlankGrid};
use crate::kinematics::CutterSchedule;

/// Centre deviation accepted as zero after alignment, mm.
pub const ALIGN_TOL: f64 = 1e-10;
/// Ray tolerance used while aligning and measuring, mm.
pub const METROLOGY_RAY_TOL: f64 = 1e-12;

const MAX_ITER: usize = 200;

fn centre(grid: &FlankGrid) -> (usize, usize) {
    (grid.rows / 2, grid.cols / 2)
}

/// Deviation at the centre sample of `grid` rotated by `gamma`; points the
/// schedule never reaches saturate at the search half-width.
fn centre_deviation(
    grid: &FlankGrid,
    schedule: &CutterSchedule,
    search: &RaySearch,
    gamma: f64,
) -> Result<f64> {
    let (r, c) = centre(grid);
    let (s, co) = gamma.sin_cos();
    let p = grid.point(r, c);
    let n = grid.normal(r, c);
    let p = nalgebra::Point3::new(co * p.x - s * p.y, s * p.x + co * p.y, p.z);
    let n = Vector3::new(co * n.x - s * n.y, s * n.x + co * n.y, n.z);
    match deviation_at(&p, &n, schedule, search) {
        Ok((d, _)) => Ok(d),
        Err(Error::UncutPoint { .. }) => Ok(search.halfwidth),
        Err(e) => Err(e),
    }
}

/// Rotation of the theoretical grid about the gear axis that puts the centre
/// sample exactly on the as-cut surface.
pub fn align_clocking(
    grid: &FlankGrid,
    schedule: &CutterSchedule,
    search: &RaySearch,
) -> Result<f64> {
    align_clocking_from(grid, schedule, search, 0.0)
}

pub fn align_clocking_from(
    grid: &FlankGrid,
    schedule: &CutterSchedule,
    search: &RaySearch,
    start: f64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid("empty grid".into()));
    }
    let search = search.with_tol(METROLOGY_RAY_TOL);
    let f = |g: f64| centre_deviation(grid, schedule, &search, g);
    let limit = schedule.kinematics.gear.angular_pitch();

    let (r, c) = centre(grid);
    let p = grid.point(r, c);
    let n = grid.normal(r, c);
    // the flank moves along its normal by `speed` per radian, so the
    // deviation changes by `-speed`
    let slope = -Vector3::new(-p.y, p.x, 0.0).dot(&n);
    if slope.abs() < 1e-9 {
        return Err(Error::AlignmentFailed(
            "flank does not move under rotation".into(),
        ));
    }

    let mut a = start;
    let mut fa = f(a)?;
    if fa.abs() < ALIGN_TOL {
        return Ok(a);
    }
    let mut step = -fa / slope;
    let mut b = a + step;
    let mut fb = f(b)?;
    let mut expansions = 0;
    while fa.signum() == fb.signum() {
        if fb.abs() < ALIGN_TOL {
            return Ok(b);
        }
        step *= 2.0;
        a = b;
        fa = fb;
        b = a + step;
        expansions += 1;
        if (b - start).abs() > limit || expansions > 60 {
            return Err(Error::AlignmentFailed(
                "no root within one angular pitch".into(),
            ));
        }
        fb = f(b)?;
    }
    // Illinois iteration on the bracket [a, b]
    for _ in 0..MAX_ITER {
        if fb.abs() < ALIGN_TOL {
            return Ok(b);
        }
        let c = b - fb * (b - a) / (fb - fa);
        let fc = f(c)?;
        if fc.signum() != fb.signum() {
            a = b;
            fa = fb;
        } else {
            fa *= 0.5;
        }
        b = c;
        fb = fc;
        if (b - a).abs() < 1e-16 {
            break;
        }
    }
    if fb.abs() < ALIGN_TOL {
        Ok(b)
    } else {
        Err(Error::AlignmentFailed(format!(
            "residual {fb:e} mm after {MAX_ITER} iterations"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corner {
    pub label: char,
    pub row: usize,
    pub col: usize,
}

/// Corner labels on the sample lattice: A at the first sample, then around
/// the window.
pub fn corner_labels(rows: usize, cols: usize) -> [Corner; 4] {
    [
        Corner {
            label: 'A',
            row: 0,
            col: 0,
        },
        Corner {
            label: 'B',
            row: 0,
            col: cols - 1,
        },
        Corner {
            label: 'C',
            row: rows - 1,
            col: cols - 1,
        },
        Corner {
            label: 'D',
            row: rows - 1,
            col: 0,
        },
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub sample_rows: usize,
    pub sample_cols: usize,
    /// Grid indices of the samples.
    pub row_indices: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub sampled_u: Vec<f64>,
    pub sampled_z: Vec<f64>,
    /// Row-major, μm.
    pub errors: Vec<f64>,
    pub clocking_offset: f64,
    /// Over the samples, μm.
    pub max_abs_error: f64,
    /// Over the whole aligned field, μm.
    pub field_max_abs_error: f64,
    pub corners: [Corner; 4],
}

impl ErrorMap {
    /// Samples an aligned deviation field on an equidistant
    /// `sample_rows x sample_cols` lattice.
    pub fn from_field(
        field: &DeviationField,
        clocking_offset: f64,
        sample_rows: usize,
        sample_cols: usize,
    ) -> Result<Self> {
        let g = &field.grid;
        if sample_rows < 2
            || sample_cols < 2
            || g.rows < sample_rows
            || g.cols < sample_cols
            || !(g.rows - 1).is_multiple_of(sample_rows - 1)
            || !(g.cols - 1).is_multiple_of(sample_cols - 1)
        {
            return Err(Error::InvalidGrid(format!(
                "{sample_rows}x{sample_cols} samples do not divide a {}x{} grid",
                g.rows, g.cols
            )));
        }
        let row_indices = subsample_indices(g.rows, sample_rows);
        let col_indices = subsample_indices(g.cols, sample_cols);
        let mut errors = Vec::with_capacity(sample_rows * sample_cols);
        for &r in &row_indices {
            for &c in &col_indices {
                errors.push(field.deviation(r, c) * 1e3);
            }
        }
        let max_abs_error = errors.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
        Ok(Self {
            sample_rows,
            sample_cols,
            sampled_u: col_indices.iter().map(|&c| g.profile_params[c]).collect(),
            sampled_z: row_indices.iter().map(|&r| g.axial_params[r]).collect(),
            row_indices,
            col_indices,
            errors,
            clocking_offset,
            max_abs_error,
            field_max_abs_error: field.max_abs() * 1e3,
            corners: corner_labels(sample_rows, sample_cols),
        })
    }

    pub fn error(&self, row: usize, col: usize) -> f64 {
        self.errors[row * self.sample_cols + col]
    }

    pub fn write_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        if let Some(p) = provenance {
            writeln!(out, "# {p}")?;
        }
        writeln!(out, "row,col,u,z_mm,err_um")?;
        for r in 0..self.sample_rows {
            for c in 0..self.sample_cols {
                writeln!(
                    out,
                    "{r},{c},{},{},{}",
                    sig12(self.sampled_u[c]),
                    sig12(self.sampled_z[r]),
                    sig12(self.error(r, c))
                )?;
            }
        }
        Ok(())
    }

    pub fn sidecar(&self, provenance: Option<&str>) -> ErrorSidecar {
        ErrorSidecar {
            clocking_offset_rad: self.clocking_offset,
            max_abs_error_um: self.max_abs_error,
            field_max_abs_error_um: self.field_max_abs_error,
            sample_rows: self.sample_rows,
            sample_cols: self.sample_cols,
            corners: self.corners.to_vec(),
            provenance: provenance.map(str::to_owned),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSidecar {
    pub clocking_offset_rad: f64,
    pub max_abs_error_um: f64,
    pub field_max_abs_error_um: f64,
    pub sample_rows: usize,
    pub sample_cols: usize,
    pub corners: Vec<Corner>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

/// Deviation field of `grid` rotated by `clocking_offset`, sampled 5x5 by
/// default via [`ErrorMap::from_field`].
pub fn aligned_field(
    grid: &FlankGrid,
    schedule: &CutterSchedule,
    search: &RaySearch,
    clocking_offset: f64,
) -> Result<DeviationField> {
    let mut field = simulate_flank(
        &grid.rotated(clocking_offset),
        schedule,
        &search.with_tol(METROLOGY_RAY_TOL),
    )?;
    // keep the unrotated parametrization for reporting
    field.grid = grid.clone();
    Ok(field)
}

pub fn error_map(
    grid: &FlankGrid,
    schedule: &CutterSchedule,
    search: &RaySearch,
    clocking_offset: f64,
) -> Result<ErrorMap> {
    let field = aligned_field(grid, schedule, search, clocking_offset)?;
    ErrorMap::from_field(&field, clocking_offset, 5, 5)
}

/// Writes `<path>` (CSV) and `<path>.json` next to it. Returns the sidecar
/// path.
pub fn export_error_surface(
    map: &ErrorMap,
    path: &Path,
    provenance: Option<&str>,
) -> Result<PathBuf> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    map.write_csv(&mut w, provenance)?;
    w.flush()?;
    let sidecar = path.with_extension("json");
    let json = serde_json::to_string_pretty(&map.sidecar(provenance))
        .map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&sidecar, json + "\n")?;
    Ok(sidecar)
}

/// One data line of an error-surface CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub row: usize,
    pub col: usize,
    pub u: f64,
    pub z: f64,
    pub err_um: f64,
}

pub fn read_error_csv<R: BufRead>(input: R) -> Result<Vec<ErrorRecord>> {
    let bad = |line: &str| Error::Parse(format!("bad error-surface line: {line}"));
    let mut out = Vec::new();
    let mut header_seen = false;
    for line in input.lines() {
        let line = line?;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if line != "row,col,u,z_mm,err_um" {
                return Err(Error::Parse(format!("unexpected header: {line}")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad(&line));
        }
        out.push(ErrorRecord {
            row: f[0].parse().map_err(|_| bad(&line))?,
            col: f[1].parse().map_err(|_| bad(&line))?,
            u: f[2].parse().map_err(|_| bad(&line))?,
            z: f[3].parse().map_err(|_| bad(&line))?,
            err_um: f[4].parse().map_err(|_| bad(&line))?,
        });
    }
    Ok(out)
}
