//! Discretized generating motion: coupled hob/blank rotation, installation
//! angle, axial feed and the helical differential.
//!
//! Machine frame: gear axis along +z, hob centre at `(a, 0, z_a)` with the
//! common perpendicular along +x. The hob axis is the machine +y axis tilted
//! about +x by minus the installation angle.

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gear::{derive_transverse, GearSpec, TransverseParams};
use crate::hob::{derive_hob, DerivedHob, HobSpec};

pub const DEFAULT_POSE_CAP: u64 = 10_000_000;

fn default_cap() -> u64 {
    DEFAULT_POSE_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSetup {
    #[serde(default)]
    pub gear: GearSpec,
    #[serde(default)]
    pub hob: HobSpec,
    /// Defaults to gear pitch radius + hob pitch radius.
    #[serde(default)]
    pub center_distance: Option<f64>,
    /// Degrees; defaults to `installation_angle(gear, hob)`.
    #[serde(default)]
    pub installation_angle: Option<f64>,
    /// Axial hob feed per workpiece revolution, mm.
    pub feed_per_rev: f64,
    /// Workpiece rotation per simulation step, degrees.
    pub interval_angle: f64,
    /// Defaults to 3 m_n.
    #[serde(default)]
    pub approach: Option<f64>,
    /// Defaults to 3 m_n.
    #[serde(default)]
    pub overrun: Option<f64>,
    #[serde(default = "default_cap")]
    pub pose_cap: u64,
    /// Extra workpiece rotation applied to every pose, radians.
    #[serde(default)]
    pub gear_angle_offset: f64,
}

impl MachineSetup {
    pub fn new(gear: GearSpec, hob: HobSpec, feed_per_rev: f64, interval_angle: f64) -> Self {
        Self {
            gear,
            hob,
            center_distance: None,
            installation_angle: None,
            feed_per_rev,
            interval_angle,
            approach: None,
            overrun: None,
            pose_cap: DEFAULT_POSE_CAP,
            gear_angle_offset: 0.0,
        }
    }

    pub fn approach(&self) -> f64 {
        self.approach.unwrap_or(3.0 * self.gear.normal_module)
    }

    pub fn overrun(&self) -> f64 {
        self.overrun.unwrap_or(3.0 * self.gear.normal_module)
    }

    pub fn steps_per_rev(&self) -> Result<u64> {
        if !(self.interval_angle > 0.0) {
            return Err(Error::InvalidSetup("interval_angle must be > 0".into()));
        }
        let n = 360.0 / self.interval_angle;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidSetup(format!(
                "interval_angle {} does not divide 360",
                self.interval_angle
            )));
        }
        Ok(n.round() as u64)
    }

    pub fn revolutions(&self) -> Result<u64> {
        if !(self.feed_per_rev > 0.0) {
            return Err(Error::InvalidSetup("feed_per_rev must be > 0".into()));
        }
        let travel = self.approach() + self.gear.face_width + self.overrun();
        Ok(((travel / self.feed_per_rev) - 1e-9).ceil().max(1.0) as u64)
    }

    pub fn pose_count(&self) -> Result<u64> {
        Ok(self.revolutions()? * self.steps_per_rev()?)
    }
}

/// Tilt of the hob axis from the gear's transverse plane, degrees.
pub fn installation_angle(gear: &GearSpec, hob: &HobSpec) -> Result<f64> {
    let derived = derive_hob(hob)?;
    Ok(installation_angle_for(gear.helix_angle, &derived))
}

fn installation_angle_for(helix_deg: f64, hob: &DerivedHob) -> f64 {
    helix_deg - hob.hand.sign() * hob.derived_lead_angle
}

/// Setup with all derived quantities resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub gear: TransverseParams,
    pub hob: DerivedHob,
    pub center_distance: f64,
    /// Radians.
    pub installation_angle: f64,
    /// Rows are the hob-frame axes expressed in machine coordinates.
    basis: Matrix3<f64>,
    hob_ratio_sign: f64,
}

impl Kinematics {
    pub fn new(setup: &MachineSetup) -> Result<Self> {
        let gear = derive_transverse(&setup.gear)?;
        let hob = derive_hob(&setup.hob)?;
        let a = setup
            .center_distance
            .unwrap_or(gear.pitch_radius + hob.pitch_radius);
        if !(a > 0.0) {
            return Err(Error::InvalidSetup("center_distance must be > 0".into()));
        }
        let sigma = setup
            .installation_angle
            .unwrap_or_else(|| installation_angle_for(setup.gear.helix_angle, &hob))
            .to_radians();
        let (s, c) = sigma.sin_cos();
        let basis = Matrix3::new(
            1.0, 0.0, 0.0, //
            0.0, -s, -c, //
            0.0, c, -s,
        );
        let hob_ratio_sign = -hob.hand.sign();
        Ok(Self {
            gear,
            hob,
            center_distance: a,
            installation_angle: sigma,
            basis,
            hob_ratio_sign,
        })
    }

    /// Hob-axis direction in machine coordinates.
    pub fn hob_axis(&self) -> Vector3<f64> {
        self.basis.row(2).transpose()
    }

    /// Rigid map workpiece -> hob for one pose.
    pub fn frame(&self, pose: &CutterPose) -> PoseFrame {
        let gear_rot = rot_z(pose.gear_angle);
        let hob_rot = rot_z(-pose.hob_angle);
        let centre = Vector3::new(self.center_distance, 0.0, pose.hob_axial_position);
        let m = hob_rot * self.basis;
        PoseFrame {
            linear: m * gear_rot,
            offset: -(m * centre),
        }
    }
}

fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = a.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseFrame {
    pub linear: Matrix3<f64>,
    pub offset: Vector3<f64>,
}

impl PoseFrame {
    #[inline]
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.linear * p.coords + self.offset)
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.linear * v
    }

    pub fn inverse_apply(&self, q: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.linear.transpose() * (q.coords - self.offset))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutterPose {
    pub index: u64,
    /// Indexing rotation of the workpiece, radians (multiple of the interval).
    pub base_angle: f64,
    /// Total workpiece rotation including the helical differential, radians.
    pub gear_angle: f64,
    /// Hob rotation, radians, reduced into [0, 2pi).
    pub hob_angle: f64,
    /// Hob centre position along the workpiece axis, mm.
    pub hob_axial_position: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutterSchedule {
    pub setup: MachineSetup,
    pub kinematics: Kinematics,
    pub poses: Vec<CutterPose>,
    pub frames: Vec<PoseFrame>,
}

impl CutterSchedule {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Same setup with no poses.
    pub fn empty(setup: &MachineSetup) -> Result<Self> {
        let kinematics = Kinematics::new(setup)?;
        Ok(Self {
            setup: setup.clone(),
            kinematics,
            poses: Vec::new(),
            frames: Vec::new(),
        })
    }

    /// Keeps only poses accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(&CutterPose) -> bool) -> Self {
        let (poses, frames) = self
            .poses
            .iter()
            .zip(&self.frames)
            .filter(|(p, _)| keep(p))
            .map(|(p, f)| (*p, *f))
            .unzip();
        Self {
            setup: self.setup.clone(),
            kinematics: self.kinematics.clone(),
            poses,
            frames,
        }
    }
}

pub fn build_schedule(setup: &MachineSetup) -> Result<CutterSchedule> {
    let kinematics = Kinematics::new(setup)?;
    let steps = setup.steps_per_rev()?;
    let count = setup.pose_count()?;
    if count > setup.pose_cap {
        return Err(Error::TooManyPoses {
            count,
            cap: setup.pose_cap,
        });
    }
    let z = setup.gear.tooth_count as f64;
    let starts = setup.hob.starts as f64;
    let twist = kinematics.gear.twist_rate();
    let approach = setup.approach();
    let mut poses = Vec::with_capacity(count as usize);
    for j in 0..count {
        // exact in degrees for dyadic intervals, so refined schedules
        // reproduce the coarse poses bit for bit
        let base_deg = j as f64 * setup.interval_angle;
        let z_a = -approach + base_deg * setup.feed_per_rev / 360.0;
        let hob_deg = (kinematics.hob_ratio_sign * z * base_deg / starts).rem_euclid(360.0);
        let base_rad = (base_deg % 360.0).to_radians();
        poses.push(CutterPose {
            index: j,
            base_angle: base_rad,
            gear_angle: base_rad - z_a * twist + setup.gear_angle_offset,
            hob_angle: hob_deg.to_radians(),
            hob_axial_position: z_a,
        });
    }
    debug_assert_eq!(poses.len() as u64, steps * setup.revolutions()?);
    let frames = poses.iter().map(|p| kinematics.frame(p)).collect();
    Ok(CutterSchedule {
        setup: setup.clone(),
        kinematics,
        poses,
        frames,
    })
}

/// Workpiece point expressed in the (rotating) hob frame.
pub fn workpiece_to_hob(
    pose: &CutterPose,
    setup: &MachineSetup,
    p: &Point3<f64>,
) -> Result<Point3<f64>> {
    Ok(Kinematics::new(setup)?.frame(pose).apply(p))
}

pub fn hob_to_workpiece(
    pose: &CutterPose,
    setup: &MachineSetup,
    q: &Point3<f64>,
) -> Result<Point3<f64>> {
    Ok(Kinematics::new(setup)?.frame(pose).inverse_apply(q))
}
