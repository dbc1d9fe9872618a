use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use hobsim::config::Config;
use hobsim::cutting::{simulate_flank, transverse_slice, RaySearch};
use hobsim::hob::derive_hob;
use hobsim::kinematics::{build_schedule, CutterSchedule};
use hobsim::metrology::{align_clocking, aligned_field, export_error_surface, ErrorMap};
use hobsim::stl::export_stl;
use hobsim::sweep::{check_trends, run_sweep};

#[derive(Parser)]
#[command(name = "hobsim", version, about = "Virtual gear hobbing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration; missing sections take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Axial feed per workpiece revolution, mm (overrides the config).
    #[arg(long)]
    feed: Option<f64>,
    /// Workpiece rotation per step, degrees (overrides the config).
    #[arg(long = "interval-deg")]
    interval_deg: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => {
                Config::load(p).with_context(|| format!("reading config {}", p.display()))?
            }
            None => Config::default(),
        };
        if let Some(f) = self.feed {
            cfg.machine.feed_per_rev = f;
        }
        if let Some(i) = self.interval_deg {
            cfg.machine.interval_angle = i;
        }
        Ok(cfg)
    }

    fn out_dir(&self) -> Result<&Path> {
        fs::create_dir_all(&self.out)
            .with_context(|| format!("creating {}", self.out.display()))?;
        Ok(&self.out)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one setup: deviation CSV plus aligned 5x5 error map.
    Simulate(Common),
    /// Max-error table over the configured feeds and intervals.
    Sweep(Common),
    /// Transverse profile of the cut blank as CSV and SVG.
    Slice {
        #[command(flatten)]
        common: Common,
        /// Transverse plane, mm from the lower face.
        #[arg(long)]
        z: Option<f64>,
        /// Samples per tooth pitch.
        #[arg(long, default_value_t = 720)]
        resolution: usize,
    },
    /// Binary STL of the simulated flank patch.
    ExportStl(Common),
    /// Declared vs derived hob geometry.
    CheckHob(Common),
}

fn schedule(cfg: &Config) -> Result<CutterSchedule> {
    let setup = cfg.setup();
    let s = build_schedule(&setup)?;
    eprintln!(
        "{} poses (feed {} mm/r, interval {}°)",
        s.len(),
        setup.feed_per_rev,
        setup.interval_angle
    );
    Ok(s)
}

fn simulate(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let out = c.out_dir()?;
    let s = schedule(&cfg)?;
    let grid = cfg.grid.build(&cfg.gear)?;
    let search = RaySearch::for_module(cfg.gear.normal_module);
    let raw = simulate_flank(&grid, &s, &search)?;
    let prov = cfg.provenance();
    raw.export_csv(&out.join("deviation.csv"), Some(&prov))?;

    let gamma = align_clocking(&grid, &s, &search)?;
    let field = aligned_field(&grid, &s, &search, gamma)?;
    let map = ErrorMap::from_field(&field, gamma, cfg.grid.sample_rows, cfg.grid.sample_cols)?;
    export_error_surface(&map, &out.join("error_map.csv"), Some(&prov))?;
    println!("clocking offset  {gamma:.6e} rad");
    println!(
        "max |error|      {:.5} um ({} samples)",
        map.max_abs_error,
        map.errors.len()
    );
    println!("field max |error| {:.5} um", map.field_max_abs_error);
    println!("wrote {}", out.display());
    Ok(())
}

fn sweep(c: &Common) -> Result<()> {
    if c.feed.is_some() || c.interval_deg.is_some() {
        bail!("sweep takes its feeds and intervals from the config's sweep section");
    }
    let cfg = c.load()?;
    let out = c.out_dir()?;
    let table = run_sweep(&cfg)?;
    let f = fs::File::create(out.join("sweep.csv"))?;
    table.write_csv(std::io::BufWriter::new(f))?;
    print!("{table}");
    for cell in &table.cells {
        if let Err(e) = &cell.outcome {
            println!("feed {} interval {}: {e}", cell.feed, cell.interval);
        }
    }
    if let Ok(m) = table.matrix() {
        println!("{}", check_trends(&m));
    }
    Ok(())
}

fn slice(c: &Common, z: Option<f64>, resolution: usize) -> Result<()> {
    let cfg = c.load()?;
    let out = c.out_dir()?;
    let s = schedule(&cfg)?;
    let z = z.unwrap_or(cfg.gear.face_width / 2.0);
    let prof = transverse_slice(&s, z, resolution)?;
    let prov = cfg.provenance();
    prof.write_csv(
        std::io::BufWriter::new(fs::File::create(out.join("slice.csv"))?),
        Some(&prov),
    )?;
    prof.write_svg(std::io::BufWriter::new(fs::File::create(
        out.join("slice.svg"),
    )?))?;
    println!(
        "{} samples at z = {z} mm, wrote {}",
        prof.radii.len(),
        out.display()
    );
    Ok(())
}

fn stl(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let out = c.out_dir()?;
    let s = schedule(&cfg)?;
    let grid = cfg.grid.build(&cfg.gear)?;
    let field = simulate_flank(&grid, &s, &RaySearch::for_module(cfg.gear.normal_module))?;
    let path = out.join("flank.stl");
    export_stl(&field, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn check_hob(c: &Common) -> Result<()> {
    let cfg = c.load()?;
    let h = derive_hob(&cfg.hob)?;
    println!(
        "{:<26}{:>14}{:>14}{:>14}",
        "item", "declared", "derived", "difference"
    );
    for i in &h.consistency {
        println!(
            "{:<26}{:>14.5}{:>14.5}{:>14.5}",
            i.item, i.declared, i.derived, i.difference
        );
    }
    println!(
        "cutting tip radius {:.4} mm, root radius {:.4} mm",
        h.cutting_tip_radius, h.root_radius
    );
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(c) => simulate(&c),
        Command::Sweep(c) => sweep(&c),
        Command::Slice {
            common,
            z,
            resolution,
        } => slice(&common, z, resolution),
        Command::ExportStl(c) => stl(&c),
        Command::CheckHob(c) => check_hob(&c),
    }
}
