//! As-cut flank as the discrete envelope of all cutter poses.
//!
//! Material removal is evaluated per point: along the theoretical flank
//! normal, the as-cut surface sits where the ray first enters any pose's
//! thread solid. The result is a signed normal deviation (positive means
//! material left above the theoretical flank).

use std::io::Write;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gear::FlankGrid;
use crate::hob::DerivedHob;
use crate::kinematics::{CutterSchedule, PoseFrame};

/// Uniform samples across the full `[-halfwidth, halfwidth]` window.
pub const RAY_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySearch {
    pub halfwidth: f64,
    pub tol: f64,
    /// Skip poses whose hob cannot reach the searched segment.
    pub cull: bool,
}

impl RaySearch {
    pub fn for_module(normal_module: f64) -> Self {
        Self {
            halfwidth: 2.0 * normal_module,
            tol: 1e-7,
            cull: true,
        }
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Self { tol, ..self }
    }

    fn step(&self) -> f64 {
        2.0 * self.halfwidth / RAY_SAMPLES as f64
    }
}

#[inline]
fn membership(hob: &DerivedHob, q: &Point3<f64>) -> f64 {
    hob.signed_membership(q.x, q.y, q.z)
}

fn bisect(
    hob: &DerivedHob,
    q0: &Point3<f64>,
    d: &Vector3<f64>,
    mut outside: f64,
    mut inside: f64,
    tol: f64,
) -> f64 {
    while (inside - outside).abs() > tol {
        let mid = 0.5 * (inside + outside);
        if membership(hob, &(q0 + d * mid)) < 0.0 {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    0.5 * (inside + outside)
}

/// Lowest ray parameter in `[-back, fwd]` where material ends, taken over
/// all poses. Returns `(t, pose)`; `t` is infinite when nothing is hit.
pub(crate) fn ray_envelope(
    p: &Point3<f64>,
    n: &Vector3<f64>,
    frames: &[PoseFrame],
    hob: &DerivedHob,
    back: f64,
    fwd: f64,
    search: &RaySearch,
) -> (f64, Option<usize>) {
    let step = search.step();
    let tip = hob.cutting_tip_radius;
    let half_len = hob.half_length;
    let mut best = f64::INFINITY;
    let mut best_idx = None;
    for (k, f) in frames.iter().enumerate() {
        let q0 = f.apply(p);
        let hi = fwd.min(best);
        let reach = back.max(hi);
        if search.cull && reach >= 0.0 {
            let rho = (q0.x * q0.x + q0.y * q0.y).sqrt();
            if rho - reach > tip || q0.z.abs() - reach > half_len {
                continue;
            }
        }
        let d = f.apply_vector(n);
        let g0 = membership(hob, &q0);
        let t_k = if g0 < 0.0 {
            // point already removed by this pose: walk back to its boundary
            let segs = ((back / step).ceil() as usize).max(1);
            let mut prev = 0.0;
            let mut found = -back;
            for i in 1..=segs {
                let t = -back * i as f64 / segs as f64;
                if membership(hob, &(q0 + d * t)) >= 0.0 {
                    found = bisect(hob, &q0, &d, t, prev, search.tol);
                    break;
                }
                prev = t;
            }
            found
        } else {
            if hi <= 0.0 {
                continue;
            }
            let segs = ((hi / step).ceil() as usize).max(1);
            let mut prev = 0.0;
            let mut found = f64::INFINITY;
            for i in 1..=segs {
                let t = hi * i as f64 / segs as f64;
                if membership(hob, &(q0 + d * t)) < 0.0 {
                    found = bisect(hob, &q0, &d, prev, t, search.tol);
                    break;
                }
                prev = t;
            }
            found
        };
        if t_k < best {
            best = t_k;
            best_idx = Some(k);
        }
    }
    (best, best_idx)
}

/// Signed normal deviation of the as-cut surface at a theoretical flank
/// point, and the index of the pose that left it.
pub fn deviation_at(
    point: &Point3<f64>,
    normal: &Vector3<f64>,
    schedule: &CutterSchedule,
    search: &RaySearch,
) -> Result<(f64, usize)> {
    let hob = &schedule.kinematics.hob;
    let (t, idx) = ray_envelope(
        point,
        normal,
        &schedule.frames,
        hob,
        search.halfwidth,
        search.halfwidth,
        search,
    );
    match idx {
        Some(k) if t.is_finite() => Ok((t, k)),
        _ => Err(Error::UncutPoint { at: None }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationField {
    pub grid: FlankGrid,
    /// Row-major, mm.
    pub deviations: Vec<f64>,
    pub limiting_pose_index: Vec<usize>,
}

impl DeviationField {
    pub fn deviation(&self, row: usize, col: usize) -> f64 {
        self.deviations[self.grid.index(row, col)]
    }

    pub fn max_abs(&self) -> f64 {
        self.deviations.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// CSV `row,col,u,z_mm,dev_mm,pose_index`, optionally preceded by a
    /// `#` provenance line.
    pub fn write_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        if let Some(p) = provenance {
            writeln!(out, "# {p}")?;
        }
        writeln!(out, "row,col,u,z_mm,dev_mm,pose_index")?;
        for r in 0..self.grid.rows {
            for c in 0..self.grid.cols {
                let i = self.grid.index(r, c);
                writeln!(
                    out,
                    "{r},{c},{},{},{},{}",
                    sig12(self.grid.profile_params[c]),
                    sig12(self.grid.axial_params[r]),
                    sig12(self.deviations[i]),
                    self.limiting_pose_index[i]
                )?;
            }
        }
        Ok(())
    }

    pub fn export_csv(&self, path: &Path, provenance: Option<&str>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f), provenance)
    }
}

/// Twelve significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn simulate_flank(
    grid: &FlankGrid,
    schedule: &CutterSchedule,
    search: &RaySearch,
) -> Result<DeviationField> {
    let results: Vec<Result<(f64, usize)>> = grid
        .points
        .par_iter()
        .zip(grid.normals.par_iter())
        .map(|(p, n)| deviation_at(p, n, schedule, search))
        .collect();
    let mut deviations = Vec::with_capacity(grid.len());
    let mut poses = Vec::with_capacity(grid.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok((d, k)) => {
                deviations.push(d);
                poses.push(k);
            }
            Err(Error::UncutPoint { .. }) => {
                return Err(Error::UncutPoint {
                    at: Some((i / grid.cols, i % grid.cols)),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(DeviationField {
        grid: grid.clone(),
        deviations,
        limiting_pose_index: poses,
    })
}

/// Cut blank profile over one tooth pitch in a transverse plane.
#[derive(Debug, Clone, PartialEq)]
pub struct TransverseProfile {
    pub z: f64,
    /// Polar angles, radians, ascending over one pitch.
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
}

impl TransverseProfile {
    pub fn points(&self) -> Vec<[f64; 2]> {
        self.angles
            .iter()
            .zip(&self.radii)
            .map(|(a, r)| [r * a.cos(), r * a.sin()])
            .collect()
    }

    /// Number of facet corners: samples where the limiting surface turns
    /// by more than `angle_tol` radians.
    pub fn vertex_count(&self, angle_tol: f64) -> usize {
        let pts = self.points();
        pts.windows(3)
            .filter(|w| {
                let a = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
                let b = [w[2][0] - w[1][0], w[2][1] - w[1][1]];
                let cross = a[0] * b[1] - a[1] * b[0];
                let dot = a[0] * b[0] + a[1] * b[1];
                cross.atan2(dot).abs() > angle_tol
            })
            .count()
    }

    pub fn write_csv<W: Write>(&self, mut out: W, provenance: Option<&str>) -> Result<()> {
        if let Some(p) = provenance {
            writeln!(out, "# {p}")?;
        }
        writeln!(out, "angle_rad,radius_mm,x_mm,y_mm")?;
        for (a, r) in self.angles.iter().zip(&self.radii) {
            writeln!(
                out,
                "{},{},{},{}",
                sig12(*a),
                sig12(*r),
                sig12(r * a.cos()),
                sig12(r * a.sin())
            )?;
        }
        Ok(())
    }

    /// Closed wedge path (axis, profile, axis); 1 user unit = 1 mm.
    pub fn write_svg<W: Write>(&self, mut out: W) -> Result<()> {
        let pts = self.points();
        let r = self.radii.iter().cloned().fold(0.0, f64::max) * 1.05;
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}mm" height="{w}mm" viewBox="{x0} {x0} {w} {w}">"#,
            w = 2.0 * r,
            x0 = -r
        )?;
        let mut d = String::from("M 0 0");
        for p in &pts {
            d.push_str(&format!(" L {:.6} {:.6}", p[0], -p[1]));
        }
        d.push_str(" Z");
        writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="black" stroke-width="0.02"/>"#
        )?;
        writeln!(out, "</svg>")?;
        Ok(())
    }
}

pub const MIN_SLICE_RESOLUTION: usize = 720;

/// Profile of the cut blank in the plane `z_plane`, sampled at
/// `angular_resolution` directions per tooth pitch. The sector runs from the
/// centre of tooth -1 to the centre of tooth 0, so it contains the measured
/// flank and its opposite across the tooth space.
pub fn transverse_slice(
    schedule: &CutterSchedule,
    z_plane: f64,
    angular_resolution: usize,
) -> Result<TransverseProfile> {
    let tp = &schedule.kinematics.gear;
    if angular_resolution < MIN_SLICE_RESOLUTION {
        return Err(Error::InvalidGrid(format!(
            "angular_resolution must be >= {MIN_SLICE_RESOLUTION} per pitch"
        )));
    }
    if !(0.0..=tp.face_width).contains(&z_plane) {
        return Err(Error::InvalidGrid(format!(
            "z_plane {z_plane} outside the blank"
        )));
    }
    let hob = &schedule.kinematics.hob;
    let reach = schedule.kinematics.center_distance - hob.cutting_tip_radius;
    let start = tp.root_radius.min(reach) - 0.25;
    let length = tp.tip_radius - start;
    let search = RaySearch {
        halfwidth: length,
        tol: 1e-9,
        cull: true,
    };
    let centre = z_plane * tp.twist_rate();
    let pitch = tp.angular_pitch();
    let angles: Vec<f64> = (0..=angular_resolution)
        .map(|i| centre - pitch + pitch * i as f64 / angular_resolution as f64)
        .collect();
    let radii = angles
        .par_iter()
        .map(|a| {
            let dir = Vector3::new(a.cos(), a.sin(), 0.0);
            let p = Point3::new(start * dir.x, start * dir.y, z_plane);
            let (t, _) = ray_envelope(&p, &dir, &schedule.frames, hob, 0.0, length, &search);
            if t.is_finite() {
                start + t.max(0.0)
            } else {
                tp.tip_radius
            }
        })
        .collect();
    Ok(TransverseProfile {
        z: z_plane,
        angles,
        radii,
    })
}

/// Normal deviation of a slice from the analytic transverse involutes,
/// restricted to the roll window `[u_lo, u_hi]`. Returns per-sample
/// `(u, deviation_mm)`; positive means material left.
pub fn slice_involute_deviation(
    schedule: &CutterSchedule,
    profile: &TransverseProfile,
    u_lo: f64,
    u_hi: f64,
) -> Vec<(f64, f64)> {
    let tp = &schedule.kinematics.gear;
    let mid = profile.z * tp.twist_rate() - tp.angular_pitch() / 2.0;
    profile
        .angles
        .iter()
        .zip(&profile.radii)
        .filter_map(|(&a, &r)| {
            let u = tp.roll_at_radius(r);
            if !(u_lo..=u_hi).contains(&u) {
                return None;
            }
            let cos_alpha = tp.base_radius / r;
            let dev = if a > mid {
                -r * (a - tp.flank_polar_angle(r, profile.z)) * cos_alpha
            } else {
                r * (a - tp.mirror_flank_polar_angle(r, profile.z)) * cos_alpha
            };
            Some((u, dev))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gear::{build_grid, GearSpec};
    use crate::hob::HobSpec;
    use crate::kinematics::{build_schedule, MachineSetup};

    fn setup(feed: f64, interval: f64) -> MachineSetup {
        MachineSetup::new(GearSpec::default(), HobSpec::default(), feed, interval)
    }

    #[test]
    fn empty_schedule_is_uncut() {
        let s = CutterSchedule::empty(&setup(1.0, 2.0)).unwrap();
        let g = build_grid(&s.setup.gear, 3, 3, 0.05, 0.05).unwrap();
        let r = deviation_at(&g.points[4], &g.normals[4], &s, &RaySearch::for_module(2.0));
        assert_eq!(r, Err(Error::UncutPoint { at: None }));
        let f = simulate_flank(&g, &s, &RaySearch::for_module(2.0));
        assert_eq!(f, Err(Error::UncutPoint { at: Some((0, 0)) }));
    }

    #[test]
    fn empty_schedule_slice_is_tip_circle() {
        let s = CutterSchedule::empty(&setup(1.0, 2.0)).unwrap();
        let prof = transverse_slice(&s, 15.0, 720).unwrap();
        assert_eq!(prof.radii.len(), 721);
        assert!(prof
            .radii
            .iter()
            .all(|&r| r == s.kinematics.gear.tip_radius));
        assert!(transverse_slice(&s, 15.0, 100).is_err());
        assert!(transverse_slice(&s, 31.0, 720).is_err());
    }

    #[test]
    fn coarse_schedule_leaves_material() {
        let s = build_schedule(&setup(5.0, 8.0)).unwrap();
        let g = build_grid(&s.setup.gear, 5, 5, 0.05, 0.05).unwrap();
        let f = simulate_flank(&g, &s, &RaySearch::for_module(2.0)).unwrap();
        let worst = f.deviations.iter().cloned().fold(f64::MIN, f64::max);
        assert!(worst > 1e-3 && worst < 1e-1, "worst {worst}");
    }

    #[test]
    fn field_matches_pointwise_and_culling() {
        let s = build_schedule(&setup(4.0, 4.0)).unwrap();
        let g = build_grid(&s.setup.gear, 4, 4, 0.05, 0.05).unwrap();
        let search = RaySearch::for_module(2.0);
        let f = simulate_flank(&g, &s, &search).unwrap();
        assert_eq!(f.deviations.len(), 16);
        for i in [0, 5, 15] {
            let (d, k) = deviation_at(&g.points[i], &g.normals[i], &s, &search).unwrap();
            assert_eq!(d, f.deviations[i]);
            assert_eq!(k, f.limiting_pose_index[i]);
        }
        let nocull = simulate_flank(
            &g,
            &s,
            &RaySearch {
                cull: false,
                ..search
            },
        )
        .unwrap();
        for (a, b) in f.deviations.iter().zip(&nocull.deviations) {
            assert!((a - b).abs() <= search.tol, "{a} {b}");
        }
    }

    #[test]
    fn csv_layout() {
        let s = build_schedule(&setup(5.0, 8.0)).unwrap();
        let g = build_grid(&s.setup.gear, 2, 3, 0.05, 0.05).unwrap();
        let f = simulate_flank(&g, &s, &RaySearch::for_module(2.0)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf, Some("config-hash=abc, version=0"))
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# config-hash=abc, version=0");
        assert_eq!(lines[1], "row,col,u,z_mm,dev_mm,pose_index");
        assert_eq!(lines.len(), 2 + 6);
        let dev: f64 = lines[2].split(',').nth(4).unwrap().parse().unwrap();
        assert!((dev - f.deviations[0]).abs() <= 1e-11 * f.deviations[0].abs().max(1e-3));
    }
}
