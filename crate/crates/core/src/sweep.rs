//! Feed x interval accuracy sweep and trend checks.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use crate::config::{Config, Statistic};
use crate::cutting::{sig12, RaySearch};
use crate::error::{Error, Result};
use crate::kinematics::build_schedule;
use crate::metrology::{align_clocking, aligned_field, ErrorMap};

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub max_abs_error_um: f64,
    pub clocking_offset: f64,
    pub poses: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub feed: f64,
    pub interval: f64,
    pub outcome: std::result::Result<CellResult, Error>,
    /// Wall clock, excluded from equality checks by callers.
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub feeds: Vec<f64>,
    pub intervals: Vec<f64>,
    /// Row-major: one row per feed.
    pub cells: Vec<SweepCell>,
    pub provenance: String,
}

impl SweepTable {
    pub fn cell(&self, feed_idx: usize, interval_idx: usize) -> &SweepCell {
        &self.cells[feed_idx * self.intervals.len() + interval_idx]
    }

    /// Max-error matrix in μm; fails if any cell failed.
    pub fn matrix(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.feeds.len())
            .map(|i| {
                (0..self.intervals.len())
                    .map(|j| match &self.cell(i, j).outcome {
                        Ok(c) => Ok(c.max_abs_error_um),
                        Err(e) => Err(e.clone()),
                    })
                    .collect()
            })
            .collect()
    }

    /// CSV `feed_mm_per_rev,interval_deg,max_abs_error_um,clocking_offset_rad,poses,runtime_s,status`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# {}", self.provenance)?;
        writeln!(out, "feed_mm_per_rev,interval_deg,max_abs_error_um,clocking_offset_rad,poses,runtime_s,status")?;
        for c in &self.cells {
            match &c.outcome {
                Ok(r) => writeln!(
                    out,
                    "{},{},{},{},{},{:.3},ok",
                    c.feed,
                    c.interval,
                    sig12(r.max_abs_error_um),
                    sig12(r.clocking_offset),
                    r.poses,
                    c.runtime_s
                )?,
                Err(e) => writeln!(
                    out,
                    "{},{},,,,{:.3},\"{e}\"",
                    c.feed, c.interval, c.runtime_s
                )?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for SweepTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>10}", "feed\\deg")?;
        for i in &self.intervals {
            write!(f, "{i:>12}")?;
        }
        writeln!(f)?;
        for (fi, feed) in self.feeds.iter().enumerate() {
            write!(f, "{feed:>10}")?;
            for ii in 0..self.intervals.len() {
                match &self.cell(fi, ii).outcome {
                    Ok(c) => write!(f, "{:>12.5}", c.max_abs_error_um)?,
                    Err(_) => write!(f, "{:>12}", "failed")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// One cell: schedule, simulate, align, max error.
pub fn run_cell(cfg: &Config, feed: f64, interval: f64) -> Result<CellResult> {
    let mut setup = cfg.setup();
    setup.feed_per_rev = feed;
    setup.interval_angle = interval;
    let schedule = build_schedule(&setup)?;
    let grid = cfg.grid.build(&cfg.gear)?;
    let search = RaySearch::for_module(cfg.gear.normal_module);
    let gamma = align_clocking(&grid, &schedule, &search)?;
    let field = aligned_field(&grid, &schedule, &search, gamma)?;
    let map = ErrorMap::from_field(&field, gamma, cfg.grid.sample_rows, cfg.grid.sample_cols)?;
    let max = match cfg.grid.statistic {
        Statistic::Samples => map.max_abs_error,
        Statistic::Field => map.field_max_abs_error,
    };
    Ok(CellResult {
        max_abs_error_um: max,
        clocking_offset: gamma,
        poses: schedule.len(),
    })
}

pub fn run_sweep(cfg: &Config) -> Result<SweepTable> {
    let s = &cfg.sweep;
    if s.feeds.is_empty() || s.intervals.is_empty() {
        return Err(Error::InvalidSetup(
            "sweep needs at least one feed and one interval".into(),
        ));
    }
    if s.feeds.iter().chain(&s.intervals).any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidSetup("sweep values must be positive".into()));
    }
    let mut cells = Vec::with_capacity(s.feeds.len() * s.intervals.len());
    for &feed in &s.feeds {
        for &interval in &s.intervals {
            let t = Instant::now();
            let outcome = run_cell(cfg, feed, interval);
            cells.push(SweepCell {
                feed,
                interval,
                outcome,
                runtime_s: t.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(SweepTable {
        feeds: s.feeds.clone(),
        intervals: s.intervals.clone(),
        cells,
        provenance: cfg.provenance(),
    })
}

/// Adjacent pair within a row where the finer interval has the larger error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowException {
    pub row: usize,
    pub col: usize,
    pub coarse: f64,
    pub fine: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub columns_monotone: Vec<bool>,
    pub rows_monotone: Vec<bool>,
    pub row_exceptions: Vec<RowException>,
    pub max_row_exceptions: usize,
}

impl TrendReport {
    pub fn pass(&self) -> bool {
        self.columns_monotone.iter().all(|&m| m)
            && self.row_exceptions.len() <= self.max_row_exceptions
    }
}

impl fmt::Display for TrendReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cols = self.columns_monotone.iter().filter(|&&m| m).count();
        let rows = self.rows_monotone.iter().filter(|&&m| m).count();
        writeln!(
            f,
            "columns monotone in feed: {cols}/{}",
            self.columns_monotone.len()
        )?;
        writeln!(
            f,
            "rows monotone in interval: {rows}/{}",
            self.rows_monotone.len()
        )?;
        for e in &self.row_exceptions {
            writeln!(
                f,
                "  row {} col {}->{}: {} -> {}",
                e.row,
                e.col,
                e.col + 1,
                e.coarse,
                e.fine
            )?;
        }
        write!(
            f,
            "row exceptions: {} (allowed {}) => {}",
            self.row_exceptions.len(),
            self.max_row_exceptions,
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

/// Rows are feeds from coarse to fine, columns intervals from coarse to
/// fine. Columns must be non-increasing downwards; rows non-increasing to
/// the right with at most one exception across the table.
pub fn check_trends(matrix: &[Vec<f64>]) -> TrendReport {
    let rows = matrix.len();
    let cols = matrix.first().map_or(0, Vec::len);
    let columns_monotone = (0..cols)
        .map(|j| (1..rows).all(|i| matrix[i][j] <= matrix[i - 1][j]))
        .collect();
    let mut row_exceptions = Vec::new();
    let mut rows_monotone = Vec::with_capacity(rows);
    for (i, row) in matrix.iter().enumerate() {
        let before = row_exceptions.len();
        for j in 1..row.len() {
            if row[j] > row[j - 1] {
                row_exceptions.push(RowException {
                    row: i,
                    col: j - 1,
                    coarse: row[j - 1],
                    fine: row[j],
                });
            }
        }
        rows_monotone.push(row_exceptions.len() == before);
    }
    TrendReport {
        columns_monotone,
        rows_monotone,
        row_exceptions,
        max_row_exceptions: 1,
    }
}
